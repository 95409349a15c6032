#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bcid/autodiff.hpp"
#include "bcid/types.hpp"

namespace bcid {

inline constexpr int kDefaultWidth = 10;
inline constexpr int kDefaultBlocks = 2;

struct ResidualBlock {
  Matrix w1, b1, w2, b2;  // biases are width x 1
};

/// Residual-block perceptron
///   h_0 = sigma(W_in x + b_in),
///   h_i = sigma(W2 sigma(W1 h_{i-1} + b1) + b2) + h_{i-1},
///   y   = W_out h_n + b_out.
struct NetworkParams {
  int input_dim = 2;
  int width = kDefaultWidth;
  Matrix w_in, b_in;
  std::vector<ResidualBlock> blocks;
  Matrix w_out, b_out;

  std::vector<const Matrix*> tensors() const;
  std::vector<Matrix*> tensors();
  std::vector<std::string> tensor_names() const;
  std::size_t parameter_count() const;
  Vector flatten() const;  ///< row-major per tensor, in tensors() order
  void assign(const Vector& flat);
  bool all_finite() const;
};

/// All-zero network of the given shape.
NetworkParams zero_network(int input_dim, int width = kDefaultWidth, int blocks = kDefaultBlocks);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; deterministic per seed.
NetworkParams init_network(std::uint64_t seed, int width = kDefaultWidth, int input_dim = 2,
                           int blocks = kDefaultBlocks);

/// Outputs at the columns of x (d x n).
Vector forward(const NetworkParams& net, const Matrix& x);
double forward(const NetworkParams& net, const Point& x);

struct ValueAndGradient {
  Vector values;     ///< n
  Matrix gradients;  ///< d x n, spatial gradient per column
};

/// Output and exact spatial gradient at the columns of x.
ValueAndGradient forward_with_gradient(const NetworkParams& net, const Matrix& x);
Vector spatial_gradient(const NetworkParams& net, const Point& x);

/// Parameter tensors of a network registered on a tape.
struct NetworkVars {
  Var w_in, b_in;
  struct Block {
    Var w1, b1, w2, b2;
  };
  std::vector<Block> blocks;
  Var w_out, b_out;
};

/// Binds `vars` (in tensors() order) to the layer structure of `shape`.
NetworkVars bind_vars(const NetworkParams& shape, std::span<const Var> vars);
/// Registers the network's tensors as constants (no gradient).
NetworkVars constant_vars(Tape& tape, const NetworkParams& net);

/// Tape version of forward; returns a 1 x n node.
Var forward(Tape& tape, const NetworkVars& net, Var x);

struct TapeForward {
  Var values;                  ///< 1 x n
  std::vector<Var> gradients;  ///< d nodes, each 1 x n
};

/// Tape forward plus spatial gradients by tangent propagation, so that
/// parameter gradients of losses involving the spatial gradient are exact.
TapeForward forward_with_gradient(Tape& tape, const NetworkVars& net, const Matrix& x);

/// Single affine layer over a feature vector: D(e) = w . e + b.
struct DiscriminatorParams {
  Matrix weight;  ///< 1 x k
  Matrix bias;    ///< 1 x 1

  std::vector<const Matrix*> tensors() const { return {&weight, &bias}; }
  std::vector<Matrix*> tensors() { return {&weight, &bias}; }
  int features() const { return static_cast<int>(weight.cols()); }
};

DiscriminatorParams init_discriminator(std::uint64_t seed, int features);
double forward(const DiscriminatorParams& d, const Vector& features);

/// Flat key-value text snapshot: one line `name rows cols v...` per tensor,
/// values in shortest round-trip form.
void write_tensors(std::ostream& os, const std::string& prefix, const std::vector<const Matrix*>& tensors,
                   const std::vector<std::string>& names);
using TensorMap = std::map<std::string, Matrix>;
TensorMap read_tensors(std::istream& is);

std::string serialize(const NetworkParams& net);
NetworkParams deserialize(const std::string& text);

std::string format_double(double v);

}  // namespace bcid
