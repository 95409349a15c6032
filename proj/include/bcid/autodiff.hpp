#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcid/types.hpp"

namespace bcid {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

enum class OpKind {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  AddBias,  ///< a (m x n) + b (m x 1) broadcast over columns
  Scale,
  Activation,
  ActivationSlope,
  Square,
  Sum,
  Mean,
  ColSum,  ///< sums rows, giving 1 x n
};

/// Reverse-mode tape over dense matrices. Columns usually index a batch of
/// points, so one tape evaluates a whole residual vector.
///
/// Nodes are appended in evaluation order, which is therefore a topological
/// order; backward() walks it once in reverse.
class Tape {
 public:
  Var leaf(Matrix value, bool requires_grad = true, std::string name = {});
  Var constant(Matrix value, std::string name = {}) { return leaf(std::move(value), false, std::move(name)); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_bias(Var a, Var bias);
  Var scale(Var a, double s);
  Var activation(Var a);
  Var activation_slope(Var a);
  Var square(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var col_sum(Var a);

  const Matrix& value(Var v) const;
  double scalar(Var v) const;
  /// Gradient of the last backward() output with respect to v.
  const Matrix& grad(Var v) const;

  /// Back-propagates from a 1 x 1 node. Throws NumericError naming the first
  /// node whose value or adjoint is not finite.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op;
    int a = -1;
    int b = -1;
    double s = 0.0;
    bool requires_grad = false;
    Matrix value;
    Matrix grad;
    std::string name;
  };

  Var push(OpKind op, int a, int b, Matrix value, double s = 0.0);
  const Node& at(Var v) const;
  std::string describe(int id) const;

  std::vector<Node> nodes_;
};

/// sigma(x) = max(x^3, 0) and its first two derivatives.
double activation(double x);
double activation_slope(double x);
double activation_curvature(double x);

using TapeLoss = std::function<Var(Tape&, std::span<const Var>)>;

/// Evaluates loss(params) on a fresh tape and returns its value together with
/// the gradient with respect to every parameter matrix.
std::pair<double, std::vector<Matrix>> value_and_grad(const TapeLoss& loss, std::span<const Matrix> params);

}  // namespace bcid
