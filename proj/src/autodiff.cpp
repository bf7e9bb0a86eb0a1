#include "mfbnn/autodiff.hpp"

#include <cmath>
#include <sstream>

#include "mfbnn/errors.hpp"

namespace mfbnn::ad {

Matrix tanh_values(const Matrix& x) {
  const auto a = x.array().abs();
  const Eigen::ArrayXXd t = (-2.0 * a).exp();
  const auto a2 = a.square();
  const auto small = a * (1.0 + a2 * (-1.0 / 3.0 + a2 * (2.0 / 15.0 + a2 * (-17.0 / 315.0))));
  const auto mag = (a < 0.02).select(small, (1.0 - t) / (1.0 + t));
  return (x.array() < 0.0).select(-mag, mag).matrix();
}

const Matrix& Var::value() const { return tape_->nodes_[id_].value; }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ConfigError("scalar() on a non-scalar node");
  return v(0, 0);
}

Var push(Tape& t, Op op, Matrix value, std::initializer_list<Var> inputs, double c, Index off, Index r,
         Index cols) {
  Tape::Node n{};
  n.op = op;
  n.value = std::move(value);
  n.n_in = 0;
  n.needs_grad = false;
  for (const Var& v : inputs) {
    if (&v.tape() != &t) throw ConfigError("autodiff: mixing nodes from different tapes");
    n.in[n.n_in++] = v.id();
    n.needs_grad = n.needs_grad || t.nodes_[v.id()].needs_grad;
  }
  n.c = c;
  n.off = off;
  n.r = r;
  n.cols = cols;
  t.nodes_.push_back(std::move(n));
  return Var(&t, t.nodes_.size() - 1);
}

namespace {

Var node(Tape& t, Op op, Matrix value, std::initializer_list<Var> inputs, double c = 0.0, Index off = 0,
         Index r = 0, Index cols = 0) {
  return push(t, op, std::move(value), inputs, c, off, r, cols);
}

}  // namespace

Var Tape::leaf(Matrix value) {
  Var v = node(*this, Op::Leaf, std::move(value), {});
  nodes_.back().needs_grad = true;
  return v;
}

Var Tape::constant(Matrix value) { return node(*this, Op::Constant, std::move(value), {}); }

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

namespace {

void check_same_shape(const Var& a, const Var& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "autodiff " << what << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows()
       << "x" << b.cols();
    throw ConfigError(os.str());
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

void Tape::backward(Var root) {
  if (root.tape_ != this) throw ConfigError("backward: root belongs to another tape");
  const Matrix& rv = nodes_[root.id_].value;
  if (rv.size() != 1) throw ConfigError("backward: root must be 1x1");
  if (!std::isfinite(rv(0, 0))) throw NumericalError("backward: objective is not finite");

  for (Node& n : nodes_) {
    if (n.needs_grad) n.grad.setZero(n.value.rows(), n.value.cols());
    else n.grad.resize(0, 0);
  }
  has_grads_ = true;
  if (!nodes_[root.id_].needs_grad) return;
  nodes_[root.id_].grad(0, 0) = 1.0;

  for (std::size_t k = root.id_ + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.needs_grad || n.op == Op::Leaf || n.op == Op::Constant) continue;
    const Matrix& g = n.grad;
    auto in = [&](int i) -> Node& { return nodes_[n.in[i]]; };
    auto wants = [&](int i) { return nodes_[n.in[i]].needs_grad; };

    switch (n.op) {
      case Op::Affine:
      case Op::Linear: {
        Node& z = in(0);
        Node& w = in(1);
        if (z.needs_grad) z.grad.noalias() += g * w.value;
        if (w.needs_grad) w.grad.noalias() += g.transpose() * z.value;
        if (n.op == Op::Affine && wants(2)) in(2).grad += g.colwise().sum().transpose();
        break;
      }
      case Op::Add:
        if (wants(0)) in(0).grad += g;
        if (wants(1)) in(1).grad += g;
        break;
      case Op::Sub:
        if (wants(0)) in(0).grad += g;
        if (wants(1)) in(1).grad -= g;
        break;
      case Op::Mul:
        if (wants(0)) in(0).grad.array() += g.array() * in(1).value.array();
        if (wants(1)) in(1).grad.array() += g.array() * in(0).value.array();
        break;
      case Op::Scale:
        in(0).grad += n.c * g;
        break;
      case Op::AddScalar:
        in(0).grad += g;
        break;
      case Op::ScalarMul: {
        const double s = in(0).value(0, 0);
        if (wants(0)) in(0).grad(0, 0) += (g.array() * in(1).value.array()).sum();
        if (wants(1)) in(1).grad += s * g;
        break;
      }
      case Op::Tanh:
        in(0).grad.array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::Square:
        in(0).grad.array() += 2.0 * g.array() * in(0).value.array();
        break;
      case Op::Exp:
        in(0).grad.array() += g.array() * n.value.array();
        break;
      case Op::Log:
        in(0).grad.array() += g.array() / in(0).value.array();
        break;
      case Op::Softplus:
        in(0).grad.array() += g.array() * in(0).value.array().unaryExpr(&sigmoid);
        break;
      case Op::Sum:
        in(0).grad.array() += g(0, 0);
        break;
      case Op::Slice: {
        Matrix& vg = in(0).grad;
        for (Index i = 0; i < n.r; ++i)
          for (Index j = 0; j < n.cols; ++j) vg(n.off + i * n.cols + j, 0) += g(i, j);
        break;
      }
      case Op::Leaf:
      case Op::Constant:
        break;
    }
  }
}

Matrix Tape::grad(Var v) const {
  if (v.tape_ != this) throw ConfigError("grad: node belongs to another tape");
  if (!has_grads_) throw ConfigError("grad: backward() has not been called");
  const Node& n = nodes_[v.id_];
  if (!n.needs_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var affine(Var z, Var w, Var b) {
  if (z.cols() != w.cols() || b.rows() != w.rows() || b.cols() != 1)
    throw ConfigError("affine: shape mismatch");
  Matrix v = z.value() * w.value().transpose();
  v.rowwise() += b.value().col(0).transpose();
  return node(z.tape(), Op::Affine, std::move(v), {z, w, b});
}

Var linear(Var z, Var w) {
  if (z.cols() != w.cols()) throw ConfigError("linear: shape mismatch");
  Matrix v = z.value() * w.value().transpose();
  return node(z.tape(), Op::Linear, std::move(v), {z, w});
}

Var operator+(Var a, Var b) {
  check_same_shape(a, b, "add");
  Matrix v = a.value() + b.value();
  return node(a.tape(), Op::Add, std::move(v), {a, b});
}

Var operator-(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Matrix v = a.value() - b.value();
  return node(a.tape(), Op::Sub, std::move(v), {a, b});
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Matrix v = a.value().cwiseProduct(b.value());
  return node(a.tape(), Op::Mul, std::move(v), {a, b});
}

Var scale(Var a, double c) {
  Matrix v = c * a.value();
  return node(a.tape(), Op::Scale, std::move(v), {a}, c);
}

Var add_scalar(Var a, double c) {
  Matrix v = a.value().array() + c;
  return node(a.tape(), Op::AddScalar, std::move(v), {a}, c);
}

Var scalar_mul(Var s, Var a) {
  if (s.rows() != 1 || s.cols() != 1) throw ConfigError("scalar_mul: scale must be 1x1");
  Matrix v = s.value()(0, 0) * a.value();
  return node(a.tape(), Op::ScalarMul, std::move(v), {s, a});
}

Var tanh(Var a) {
  Matrix v = tanh_values(a.value());
  return node(a.tape(), Op::Tanh, std::move(v), {a});
}

Var square(Var a) {
  Matrix v = a.value().array().square();
  return node(a.tape(), Op::Square, std::move(v), {a});
}

Var exp(Var a) {
  Matrix v = a.value().array().exp();
  return node(a.tape(), Op::Exp, std::move(v), {a});
}

Var log(Var a) {
  Matrix v = a.value().array().log();
  return node(a.tape(), Op::Log, std::move(v), {a});
}

Var softplus(Var a) {
  Matrix v = a.value().unaryExpr(&softplus_value);
  return node(a.tape(), Op::Softplus, std::move(v), {a});
}

Var sum(Var a) {
  Matrix v = Matrix::Constant(1, 1, a.value().sum());
  return node(a.tape(), Op::Sum, std::move(v), {a});
}

Var slice(Var v, Index offset, Index rows, Index cols) {
  if (v.cols() != 1) throw ConfigError("slice: source must be a column vector");
  if (offset < 0 || rows < 0 || cols < 0 || offset + rows * cols > v.rows())
    throw ConfigError("slice: out of range");
  Matrix out(rows, cols);
  const Matrix& src = v.value();
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = src(offset + i * cols + j, 0);
  return node(v.tape(), Op::Slice, std::move(out), {v}, 0.0, offset, rows, cols);
}

}  // namespace mfbnn::ad
