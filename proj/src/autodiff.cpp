#include "bcid/autodiff.hpp"

#include <sstream>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::AddBias: return "add_bias";
    case OpKind::Scale: return "scale";
    case OpKind::Activation: return "activation";
    case OpKind::ActivationSlope: return "activation_slope";
    case OpKind::Square: return "square";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::ColSum: return "col_sum";
  }
  return "?";
}

template <class Derived>
auto apply_activation(const Eigen::MatrixBase<Derived>& z) {
  return z.unaryExpr([](double x) { return activation(x); });
}

void require_same(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
    throw ContractViolation(os.str());
  }
}

}  // namespace

double activation(double x) { return x > 0.0 ? x * x * x : 0.0; }
double activation_slope(double x) { return x > 0.0 ? 3.0 * x * x : 0.0; }
double activation_curvature(double x) { return x > 0.0 ? 6.0 * x : 0.0; }

Var Tape::push(OpKind op, int a, int b, Matrix value, double s) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.s = s;
  n.requires_grad = (a >= 0 && nodes_[static_cast<std::size_t>(a)].requires_grad) ||
                    (b >= 0 && nodes_[static_cast<std::size_t>(b)].requires_grad);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  if (!nodes_.back().value.allFinite()) throw NumericError("non-finite value at " + describe(id));
  return {id};
}

const Tape::Node& Tape::at(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ContractViolation("invalid tape variable " + std::to_string(v.id));
  return nodes_[static_cast<std::size_t>(v.id)];
}

std::string Tape::describe(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  std::string s = "node " + std::to_string(id) + " (" + op_name(n.op);
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + ")";
}

Var Tape::leaf(Matrix value, bool requires_grad, std::string name) {
  Node n;
  n.op = OpKind::Leaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  if (!nodes_.back().value.allFinite()) throw NumericError("non-finite value at " + describe(id));
  return {id};
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  if (A.cols() != B.rows()) {
    std::ostringstream os;
    os << "matmul: inner dimensions " << A.cols() << " and " << B.rows();
    throw ContractViolation(os.str());
  }
  return push(OpKind::MatMul, a.id, b.id, A * B);
}

Var Tape::add(Var a, Var b) {
  require_same(at(a).value, at(b).value, "add");
  return push(OpKind::Add, a.id, b.id, at(a).value + at(b).value);
}

Var Tape::sub(Var a, Var b) {
  require_same(at(a).value, at(b).value, "sub");
  return push(OpKind::Sub, a.id, b.id, at(a).value - at(b).value);
}

Var Tape::mul(Var a, Var b) {
  require_same(at(a).value, at(b).value, "mul");
  return push(OpKind::Mul, a.id, b.id, at(a).value.cwiseProduct(at(b).value));
}

Var Tape::add_bias(Var a, Var bias) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(bias).value;
  if (B.cols() != 1 || B.rows() != A.rows()) throw ContractViolation("add_bias: bias must be rows(a) x 1");
  return push(OpKind::AddBias, a.id, bias.id, A.colwise() + B.col(0));
}

Var Tape::scale(Var a, double s) { return push(OpKind::Scale, a.id, -1, s * at(a).value, s); }

Var Tape::activation(Var a) { return push(OpKind::Activation, a.id, -1, apply_activation(at(a).value)); }

Var Tape::activation_slope(Var a) {
  return push(OpKind::ActivationSlope, a.id, -1,
              at(a).value.unaryExpr([](double x) { return bcid::activation_slope(x); }));
}

Var Tape::square(Var a) { return push(OpKind::Square, a.id, -1, at(a).value.array().square().matrix()); }

Var Tape::sum(Var a) { return push(OpKind::Sum, a.id, -1, Matrix::Constant(1, 1, at(a).value.sum())); }

Var Tape::mean(Var a) {
  const Matrix& A = at(a).value;
  if (A.size() == 0) throw ContractViolation("mean of an empty matrix");
  return push(OpKind::Mean, a.id, -1, Matrix::Constant(1, 1, A.mean()));
}

Var Tape::col_sum(Var a) { return push(OpKind::ColSum, a.id, -1, at(a).value.colwise().sum()); }

const Matrix& Tape::value(Var v) const { return at(v).value; }

double Tape::scalar(Var v) const {
  const Matrix& m = at(v).value;
  if (m.size() != 1) throw ContractViolation("scalar() on a non-scalar node");
  return m(0, 0);
}

const Matrix& Tape::grad(Var v) const { return at(v).grad; }

void Tape::backward(Var output) {
  const Node& out = at(output);
  if (out.value.size() != 1) throw ContractViolation("backward() needs a 1 x 1 output");
  for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[static_cast<std::size_t>(output.id)].grad(0, 0) = 1.0;

  for (int id = output.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.op == OpKind::Leaf) continue;
    if (!n.grad.allFinite()) throw NumericError("non-finite adjoint at " + describe(id));
    const Matrix& G = n.grad;
    Node* A = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)] : nullptr;
    Node* B = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
    auto wants = [](Node* p) { return p != nullptr && p->requires_grad; };
    switch (n.op) {
      case OpKind::Leaf: break;
      case OpKind::MatMul:
        if (wants(A)) A->grad.noalias() += G * B->value.transpose();
        if (wants(B)) B->grad.noalias() += A->value.transpose() * G;
        break;
      case OpKind::Add:
        if (wants(A)) A->grad += G;
        if (wants(B)) B->grad += G;
        break;
      case OpKind::Sub:
        if (wants(A)) A->grad += G;
        if (wants(B)) B->grad -= G;
        break;
      case OpKind::Mul:
        if (wants(A)) A->grad += G.cwiseProduct(B->value);
        if (wants(B)) B->grad += G.cwiseProduct(A->value);
        break;
      case OpKind::AddBias:
        if (wants(A)) A->grad += G;
        if (wants(B)) B->grad += G.rowwise().sum();
        break;
      case OpKind::Scale:
        if (wants(A)) A->grad += n.s * G;
        break;
      case OpKind::Activation:
        if (wants(A)) A->grad += G.cwiseProduct(A->value.unaryExpr([](double x) { return bcid::activation_slope(x); }));
        break;
      case OpKind::ActivationSlope:
        if (wants(A)) A->grad += G.cwiseProduct(A->value.unaryExpr([](double x) { return activation_curvature(x); }));
        break;
      case OpKind::Square:
        if (wants(A)) A->grad += 2.0 * G.cwiseProduct(A->value);
        break;
      case OpKind::Sum:
        if (wants(A)) A->grad.array() += G(0, 0);
        break;
      case OpKind::Mean:
        if (wants(A)) A->grad.array() += G(0, 0) / static_cast<double>(A->value.size());
        break;
      case OpKind::ColSum:
        if (wants(A)) A->grad.rowwise() += G.row(0);
        break;
    }
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.op == OpKind::Leaf && n.requires_grad && !n.grad.allFinite())
      throw NumericError("non-finite gradient at " + describe(static_cast<int>(id)));
  }
}

std::pair<double, std::vector<Matrix>> value_and_grad(const TapeLoss& loss, std::span<const Matrix> params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) leaves.push_back(tape.leaf(params[k], true, "param" + std::to_string(k)));
  const Var out = loss(tape, leaves);
  tape.backward(out);
  std::vector<Matrix> grads;
  grads.reserve(leaves.size());
  for (Var v : leaves) grads.push_back(tape.grad(v));
  return {tape.scalar(out), std::move(grads)};
}

}  // namespace bcid
