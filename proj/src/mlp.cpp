#include "mfbnn/mlp.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mfbnn/blob.hpp"
#include "mfbnn/errors.hpp"

namespace mfbnn {

void MlpSpec::validate() const {
  if (widths.size() < 2) throw ConfigError("MlpSpec: need at least an input and an output width");
  for (int w : widths)
    if (w < 1) throw ConfigError("MlpSpec: widths must be >= 1, got " + to_string());
  if (widths.back() != 1) throw ConfigError("MlpSpec: output width must be 1, got " + to_string());
}

std::string MlpSpec::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < widths.size(); ++i) os << (i ? "," : "") << widths[i];
  return os.str();
}

MlpSpec MlpSpec::parse(const std::string& text) {
  MlpSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int w = std::stoi(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      spec.widths.push_back(w);
    } catch (const std::exception&) {
      throw ConfigError("MlpSpec: cannot parse layer widths '" + text + "'");
    }
  }
  spec.validate();
  return spec;
}

std::vector<LayerSlot> layer_layout(const MlpSpec& spec) {
  spec.validate();
  std::vector<LayerSlot> out;
  Index off = 0;
  for (int l = 0; l < spec.layers(); ++l) {
    LayerSlot s{};
    s.in = spec.widths[l];
    s.out = spec.widths[l + 1];
    s.weight_offset = off;
    off += s.in * s.out;
    s.bias_offset = off;
    off += s.out;
    out.push_back(s);
  }
  return out;
}

Index param_count(const MlpSpec& spec) {
  const auto layout = layer_layout(spec);
  return layout.back().bias_offset + layout.back().out;
}

MlpParams::MlpParams(MlpSpec spec, Vector flat) : spec_(std::move(spec)), flat_(std::move(flat)) {
  layout_ = layer_layout(spec_);
  if (flat_.size() != param_count(spec_)) {
    std::ostringstream os;
    os << "MlpParams: spec [" << spec_.to_string() << "] needs " << param_count(spec_) << " parameters, got "
       << flat_.size();
    throw ConfigError(os.str());
  }
}

Eigen::Map<const RowMatrix> MlpParams::weight(int layer) const {
  const LayerSlot& s = layout_.at(layer);
  return {flat_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<const Vector> MlpParams::bias(int layer) const {
  const LayerSlot& s = layout_.at(layer);
  return {flat_.data() + s.bias_offset, s.out};
}

double MlpParams::weight_norm_squared() const {
  double acc = 0.0;
  for (const LayerSlot& s : layout_) acc += flat_.segment(s.weight_offset, s.in * s.out).squaredNorm();
  return acc;
}

double xavier_limit(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  const auto layout = layer_layout(spec);
  Vector flat = Vector::Zero(param_count(spec));
  std::mt19937_64 rng(seed);
  for (const LayerSlot& s : layout) {
    std::uniform_real_distribution<double> dist(-xavier_limit(s.in, s.out), xavier_limit(s.in, s.out));
    for (Index i = 0; i < s.in * s.out; ++i) flat[s.weight_offset + i] = dist(rng);
  }
  return {spec, std::move(flat)};
}

Vector flatten(const MlpParams& params) { return params.flat(); }

MlpParams unflatten(const MlpSpec& spec, const Vector& flat) { return {spec, flat}; }

double mlp_forward(const MlpParams& params, const Vector& x) {
  if (x.size() != params.spec().input_dim())
    throw ConfigError("mlp_forward: input has " + std::to_string(x.size()) + " entries, network expects " +
                      std::to_string(params.spec().input_dim()));
  return mlp_forward_batch(params, x.transpose())[0];
}

Vector mlp_forward_batch(const MlpParams& params, const Matrix& inputs) {
  if (inputs.cols() != params.spec().input_dim()) throw ConfigError("mlp_forward_batch: input width mismatch");
  Matrix z = inputs;
  const int n_layers = params.spec().layers();
  for (int l = 0; l + 1 < n_layers; ++l) {
    Matrix a = z * params.weight(l).transpose();
    a.rowwise() += params.bias(l).transpose();
    z = ad::tanh_values(a);
  }
  Vector out = z * params.weight(n_layers - 1).transpose();
  out.array() += params.bias(n_layers - 1)(0);
  return out;
}

InputSeed coordinate_seed(Index n_points, Index dim, Index coordinate) {
  InputSeed s;
  s.first = Matrix::Zero(n_points, dim);
  s.first.col(coordinate).setOnes();
  return s;
}

namespace {

void check_jet_request(Index input_dim, const Matrix& inputs, std::span<const InputSeed> seeds, int order) {
  if (order < 0 || order > 2) throw ConfigError("input derivatives: order " + std::to_string(order) + " unsupported");
  if (inputs.cols() != input_dim) throw ConfigError("input derivatives: input width mismatch");
  for (const InputSeed& s : seeds) {
    if (order >= 1 && (s.first.rows() != inputs.rows() || s.first.cols() != input_dim))
      throw ConfigError("input derivatives: seed shape mismatch");
    if (s.second.size() != 0 && (s.second.rows() != inputs.rows() || s.second.cols() != input_dim))
      throw ConfigError("input derivatives: second-order seed shape mismatch");
  }
}

}  // namespace

Jets mlp_jets(const MlpParams& params, const Matrix& inputs, std::span<const InputSeed> seeds, int order) {
  check_jet_request(params.spec().input_dim(), inputs, seeds, order);
  const std::size_t k = order >= 1 ? seeds.size() : 0;
  Matrix z = inputs;
  std::vector<Matrix> t(k), s(k);
  std::vector<bool> has_s(k, false);
  for (std::size_t j = 0; j < k; ++j) {
    t[j] = seeds[j].first;
    if (order == 2 && seeds[j].second.size() != 0) {
      s[j] = seeds[j].second;
      has_s[j] = true;
    }
  }

  const int n_layers = params.spec().layers();
  for (int l = 0; l + 1 < n_layers; ++l) {
    const auto w = params.weight(l);
    Matrix a = z * w.transpose();
    a.rowwise() += params.bias(l).transpose();
    z = ad::tanh_values(a);
    if (k == 0) continue;
    const Matrix g1 = 1.0 - z.array().square();
    Matrix g2;
    if (order == 2) g2 = -2.0 * z.array() * g1.array();
    for (std::size_t j = 0; j < k; ++j) {
      const Matrix ta = t[j] * w.transpose();
      t[j] = g1.cwiseProduct(ta);
      if (order == 2) {
        Matrix next = g2.array() * ta.array().square();
        if (has_s[j]) next.array() += g1.array() * (s[j] * w.transpose()).array();
        s[j] = std::move(next);
        has_s[j] = true;
      }
    }
  }

  const auto w_out = params.weight(n_layers - 1);
  Jets out;
  out.value = z * w_out.transpose();
  out.value.array() += params.bias(n_layers - 1)(0);
  for (std::size_t j = 0; j < k; ++j) {
    out.d1.emplace_back(t[j] * w_out.transpose());
    if (order == 2) {
      if (has_s[j]) out.d2.emplace_back(s[j] * w_out.transpose());
      else out.d2.emplace_back(Vector::Zero(inputs.rows()));
    }
  }
  return out;
}

NetVars bind_params(ad::Var flat, const MlpSpec& spec, Index offset) {
  NetVars net;
  for (const LayerSlot& s : layer_layout(spec)) {
    net.weights.push_back(ad::slice(flat, offset + s.weight_offset, s.out, s.in));
    net.biases.push_back(ad::slice(flat, offset + s.bias_offset, s.out, 1));
  }
  return net;
}

TapeJets mlp_jets(const NetVars& net, const Matrix& inputs, std::span<const InputSeed> seeds, int order) {
  const Index input_dim = net.weights.front().cols();
  check_jet_request(input_dim, inputs, seeds, order);
  ad::Tape& tape = net.weights.front().tape();
  const std::size_t k = order >= 1 ? seeds.size() : 0;

  ad::Var z = tape.constant(inputs);
  std::vector<ad::Var> t(k), s(k);
  for (std::size_t j = 0; j < k; ++j) {
    t[j] = tape.constant(seeds[j].first);
    if (order == 2 && seeds[j].second.size() != 0) s[j] = tape.constant(seeds[j].second);
  }

  const std::size_t n_layers = net.weights.size();
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    z = ad::tanh(ad::affine(z, net.weights[l], net.biases[l]));
    if (k == 0) continue;
    // tanh' = 1 - z^2, tanh'' = -2 z (1 - z^2)
    const ad::Var g1 = ad::add_scalar(-ad::square(z), 1.0);
    ad::Var g2;
    if (order == 2) g2 = ad::scale(ad::mul(z, g1), -2.0);
    for (std::size_t j = 0; j < k; ++j) {
      const ad::Var ta = ad::linear(t[j], net.weights[l]);
      t[j] = ad::mul(g1, ta);
      if (order == 2) {
        ad::Var next = ad::mul(g2, ad::square(ta));
        if (s[j].valid()) next = next + ad::mul(g1, ad::linear(s[j], net.weights[l]));
        s[j] = next;
      }
    }
  }

  TapeJets out;
  out.value = ad::affine(z, net.weights.back(), net.biases.back());
  for (std::size_t j = 0; j < k; ++j) {
    out.d1.push_back(ad::linear(t[j], net.weights.back()));
    if (order == 2) {
      if (s[j].valid()) out.d2.push_back(ad::linear(s[j], net.weights.back()));
      else out.d2.push_back(tape.constant(Matrix::Zero(inputs.rows(), 1)));
    }
  }
  return out;
}

DiffResult input_derivatives(const MlpParams& params, const Vector& x, int order) {
  const Index d = params.spec().input_dim();
  if (x.size() != d) throw ConfigError("input_derivatives: input dimension mismatch");
  std::vector<InputSeed> seeds;
  for (Index i = 0; i < d; ++i) seeds.push_back(coordinate_seed(1, d, i));

  ad::Tape tape;
  const ad::Var flat = tape.leaf(params.flat());
  const NetVars net = bind_params(flat, params.spec());
  const TapeJets jets = mlp_jets(net, x.transpose(), seeds, order);
  tape.backward(jets.value);

  DiffResult r;
  r.value = jets.value.scalar();
  r.grad_params = tape.grad(flat);
  if (order >= 1) {
    r.du_dx.resize(d);
    for (Index i = 0; i < d; ++i) r.du_dx[i] = jets.d1[i].scalar();
  }
  if (order == 2) {
    r.d2u_dx2.resize(d);
    for (Index i = 0; i < d; ++i) r.d2u_dx2[i] = jets.d2[i].scalar();
  }
  if (!std::isfinite(r.value) || !r.grad_params.allFinite() || !r.du_dx.allFinite() || !r.d2u_dx2.allFinite())
    throw NumericalError("input_derivatives: non-finite result");
  return r;
}

void save_snapshot(const std::filesystem::path& path, const MlpParams& params, const std::string& extra_json) {
  nlohmann::json header;
  header["kind"] = "mlp-params";
  header["layer_widths"] = params.spec().widths;
  header["activation"] = "tanh";
  header["param_count"] = params.size();
  header["extra"] = nlohmann::json::parse(extra_json);
  write_blob(path, {header.dump(), params.flat()});
}

MlpParams load_snapshot(const std::filesystem::path& path) {
  Blob blob = read_blob(path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.header);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("snapshot header is not valid JSON: " + path.string());
  }
  if (header.value("kind", "") != "mlp-params") throw ConfigError("not a parameter snapshot: " + path.string());
  MlpSpec spec{header.at("layer_widths").get<std::vector<int>>()};
  return {spec, std::move(blob.values)};
}

}  // namespace mfbnn
