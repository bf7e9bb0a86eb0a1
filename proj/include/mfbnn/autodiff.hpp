#pragma once

// Reverse-mode differentiation over matrix-valued nodes.
//
// A Tape records a straight-line program built from a closed set of
// primitives (affine maps, elementwise tanh/square/exp/log/softplus,
// products, sums and slices of a flat parameter vector). Calling
// backward() on a 1x1 node accumulates exact gradients into every node that
// depends on a leaf. Input derivatives of tanh networks are written in the
// same primitives (see mlp.hpp), so their parameter gradients come from the
// same reverse pass.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "mfbnn/types.hpp"

namespace mfbnn::ad {

/// Elementwise tanh through one exp per entry; agrees with std::tanh to about 2e-15 relative.
Matrix tanh_values(const Matrix& x);

class Tape;

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  Affine,     // z * w^T + 1 b^T
  Linear,     // z * w^T
  Add,
  Sub,
  Mul,        // elementwise
  Scale,      // c * a
  AddScalar,  // a + c
  ScalarMul,  // s * a with s 1x1
  Tanh,
  Square,
  Exp,
  Log,
  Softplus,
  Sum,
  Slice,      // row-major block read from a column vector
};

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  /// The reference is invalidated by the next node pushed onto the tape.
  const Matrix& value() const;
  double scalar() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  friend Var push(Tape&, Op, Matrix, std::initializer_list<Var>, double, Index, Index, Index);
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Matrix value);
  /// Input that never receives a gradient.
  Var constant(Matrix value);
  Var constant(double value);

  /// Reverse sweep from a 1x1 root. Throws NumericalError if the root is non-finite.
  void backward(Var root);
  /// Gradient of the last backward() root with respect to `v` (zeros if v is not upstream).
  Matrix grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  friend Var push(Tape&, Op, Matrix, std::initializer_list<Var>, double, Index, Index, Index);

  struct Node {
    Op op;
    Matrix value;
    Matrix grad;
    std::size_t in[3];
    int n_in;
    bool needs_grad;
    double c;
    Index off, r, cols;
  };

  std::vector<Node> nodes_;
  bool has_grads_ = false;
};

Var affine(Var z, Var w, Var b);
Var linear(Var z, Var w);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
/// `s` must be 1x1; multiplies every entry of `a`.
Var scalar_mul(Var s, Var a);
Var tanh(Var a);
Var square(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);
Var sum(Var a);
/// Reads a rows x cols block in row-major order starting at `offset` of column vector `v`.
Var slice(Var v, Index offset, Index rows, Index cols);

inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator-(Var a) { return scale(a, -1.0); }

}  // namespace mfbnn::ad
