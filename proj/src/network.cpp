#include "bcid/network.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

double unit_real(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void fill_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = bound * (2.0 * unit_real(rng) - 1.0);
}

Matrix act(const Matrix& z) { return z.unaryExpr([](double x) { return activation(x); }); }
Matrix slope(const Matrix& z) { return z.unaryExpr([](double x) { return activation_slope(x); }); }

void check_input(const NetworkParams& net, const Matrix& x) {
  if (x.rows() != net.input_dim) {
    std::ostringstream os;
    os << "network expects " << net.input_dim << "-dimensional input, got " << x.rows();
    throw ContractViolation(os.str());
  }
}

}  // namespace

std::vector<const Matrix*> NetworkParams::tensors() const {
  std::vector<const Matrix*> t{&w_in, &b_in};
  for (const auto& b : blocks) t.insert(t.end(), {&b.w1, &b.b1, &b.w2, &b.b2});
  t.insert(t.end(), {&w_out, &b_out});
  return t;
}

std::vector<Matrix*> NetworkParams::tensors() {
  std::vector<Matrix*> t{&w_in, &b_in};
  for (auto& b : blocks) t.insert(t.end(), {&b.w1, &b.b1, &b.w2, &b.b2});
  t.insert(t.end(), {&w_out, &b_out});
  return t;
}

std::vector<std::string> NetworkParams::tensor_names() const {
  std::vector<std::string> n{"input.weight", "input.bias"};
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const std::string p = "block" + std::to_string(k) + ".";
    n.insert(n.end(), {p + "w1", p + "b1", p + "w2", p + "b2"});
  }
  n.insert(n.end(), {"output.weight", "output.bias"});
  return n;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

Vector NetworkParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const Matrix* t : tensors())
    for (Eigen::Index i = 0; i < t->rows(); ++i)
      for (Eigen::Index j = 0; j < t->cols(); ++j) flat(k++) = (*t)(i, j);
  return flat;
}

void NetworkParams::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count())
    throw ContractViolation("assign: expected " + std::to_string(parameter_count()) + " values, got " +
                            std::to_string(flat.size()));
  Eigen::Index k = 0;
  for (Matrix* t : tensors())
    for (Eigen::Index i = 0; i < t->rows(); ++i)
      for (Eigen::Index j = 0; j < t->cols(); ++j) (*t)(i, j) = flat(k++);
}

bool NetworkParams::all_finite() const {
  for (const Matrix* t : tensors())
    if (!t->allFinite()) return false;
  return true;
}

NetworkParams zero_network(int input_dim, int width, int blocks) {
  if (input_dim < 1 || width < 1 || blocks < 0) throw ConfigurationError("network: invalid shape");
  NetworkParams n;
  n.input_dim = input_dim;
  n.width = width;
  n.w_in = Matrix::Zero(width, input_dim);
  n.b_in = Matrix::Zero(width, 1);
  n.blocks.assign(static_cast<std::size_t>(blocks),
                  {Matrix::Zero(width, width), Matrix::Zero(width, 1), Matrix::Zero(width, width), Matrix::Zero(width, 1)});
  n.w_out = Matrix::Zero(1, width);
  n.b_out = Matrix::Zero(1, 1);
  return n;
}

NetworkParams init_network(std::uint64_t seed, int width, int input_dim, int blocks) {
  NetworkParams n = zero_network(input_dim, width, blocks);
  std::mt19937_64 rng(seed);
  const double b_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double b_w = 1.0 / std::sqrt(static_cast<double>(width));
  fill_uniform(n.w_in, b_in, rng);
  fill_uniform(n.b_in, b_in, rng);
  for (auto& b : n.blocks) {
    fill_uniform(b.w1, b_w, rng);
    fill_uniform(b.b1, b_w, rng);
    fill_uniform(b.w2, b_w, rng);
    fill_uniform(b.b2, b_w, rng);
  }
  fill_uniform(n.w_out, b_w, rng);
  fill_uniform(n.b_out, b_w, rng);
  return n;
}

Vector forward(const NetworkParams& net, const Matrix& x) {
  check_input(net, x);
  Matrix h = act((net.w_in * x).colwise() + net.b_in.col(0));
  for (const auto& b : net.blocks) {
    const Matrix a = act((b.w1 * h).colwise() + b.b1.col(0));
    h += act((b.w2 * a).colwise() + b.b2.col(0));
  }
  return ((net.w_out * h).array() + net.b_out(0, 0)).transpose();
}

double forward(const NetworkParams& net, const Point& x) { return forward(net, Matrix(x))(0); }

ValueAndGradient forward_with_gradient(const NetworkParams& net, const Matrix& x) {
  check_input(net, x);
  const int d = net.input_dim;
  const Matrix z0 = (net.w_in * x).colwise() + net.b_in.col(0);
  Matrix h = act(z0);
  const Matrix s0 = slope(z0);
  std::vector<Matrix> t(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) t[static_cast<std::size_t>(k)] = s0.array().colwise() * net.w_in.col(k).array();
  for (const auto& b : net.blocks) {
    const Matrix z1 = (b.w1 * h).colwise() + b.b1.col(0);
    const Matrix a = act(z1);
    const Matrix s1 = slope(z1);
    const Matrix z2 = (b.w2 * a).colwise() + b.b2.col(0);
    const Matrix s2 = slope(z2);
    for (auto& tk : t) {
      const Matrix ta = s1.cwiseProduct(b.w1 * tk);
      tk += s2.cwiseProduct(b.w2 * ta);
    }
    h += act(z2);
  }
  ValueAndGradient out;
  out.values = ((net.w_out * h).array() + net.b_out(0, 0)).transpose();
  out.gradients.resize(d, x.cols());
  for (int k = 0; k < d; ++k) out.gradients.row(k) = net.w_out * t[static_cast<std::size_t>(k)];
  return out;
}

Vector spatial_gradient(const NetworkParams& net, const Point& x) {
  return forward_with_gradient(net, Matrix(x)).gradients.col(0);
}

NetworkVars bind_vars(const NetworkParams& shape, std::span<const Var> vars) {
  const std::size_t expected = 4 + 4 * shape.blocks.size();
  if (vars.size() != expected)
    throw ContractViolation("bind_vars: expected " + std::to_string(expected) + " tensors");
  NetworkVars v;
  std::size_t k = 0;
  v.w_in = vars[k++];
  v.b_in = vars[k++];
  for (std::size_t b = 0; b < shape.blocks.size(); ++b) {
    NetworkVars::Block blk;
    blk.w1 = vars[k++];
    blk.b1 = vars[k++];
    blk.w2 = vars[k++];
    blk.b2 = vars[k++];
    v.blocks.push_back(blk);
  }
  v.w_out = vars[k++];
  v.b_out = vars[k++];
  return v;
}

NetworkVars constant_vars(Tape& tape, const NetworkParams& net) {
  std::vector<Var> vars;
  for (const Matrix* t : net.tensors()) vars.push_back(tape.constant(*t));
  return bind_vars(net, vars);
}

Var forward(Tape& tape, const NetworkVars& net, Var x) {
  Var h = tape.activation(tape.add_bias(tape.matmul(net.w_in, x), net.b_in));
  for (const auto& b : net.blocks) {
    const Var a = tape.activation(tape.add_bias(tape.matmul(b.w1, h), b.b1));
    h = tape.add(tape.activation(tape.add_bias(tape.matmul(b.w2, a), b.b2)), h);
  }
  const Var y = tape.matmul(net.w_out, h);
  const Var ones = tape.constant(Matrix::Ones(1, tape.value(y).cols()));
  return tape.add(y, tape.matmul(net.b_out, ones));
}

TapeForward forward_with_gradient(Tape& tape, const NetworkVars& net, const Matrix& x) {
  const auto d = x.rows();
  const auto n = x.cols();
  const Var xv = tape.constant(x, "x");
  const Var z0 = tape.add_bias(tape.matmul(net.w_in, xv), net.b_in);
  Var h = tape.activation(z0);
  const Var s0 = tape.activation_slope(z0);
  std::vector<Var> t;
  for (Eigen::Index k = 0; k < d; ++k) {
    Matrix e = Matrix::Zero(d, n);
    e.row(k).setOnes();
    t.push_back(tape.mul(s0, tape.matmul(net.w_in, tape.constant(std::move(e)))));
  }
  for (const auto& b : net.blocks) {
    const Var z1 = tape.add_bias(tape.matmul(b.w1, h), b.b1);
    const Var a = tape.activation(z1);
    const Var s1 = tape.activation_slope(z1);
    const Var z2 = tape.add_bias(tape.matmul(b.w2, a), b.b2);
    const Var s2 = tape.activation_slope(z2);
    for (auto& tk : t) {
      const Var ta = tape.mul(s1, tape.matmul(b.w1, tk));
      tk = tape.add(tape.mul(s2, tape.matmul(b.w2, ta)), tk);
    }
    h = tape.add(tape.activation(z2), h);
  }
  TapeForward out;
  const Var y = tape.matmul(net.w_out, h);
  const Var ones = tape.constant(Matrix::Ones(1, n));
  out.values = tape.add(y, tape.matmul(net.b_out, ones));
  for (auto& tk : t) out.gradients.push_back(tape.matmul(net.w_out, tk));
  return out;
}

DiscriminatorParams init_discriminator(std::uint64_t seed, int features) {
  if (features < 1) throw ConfigurationError("discriminator needs at least one feature");
  DiscriminatorParams d;
  d.weight = Matrix::Zero(1, features);
  d.bias = Matrix::Zero(1, 1);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(features));
  fill_uniform(d.weight, bound, rng);
  fill_uniform(d.bias, bound, rng);
  return d;
}

double forward(const DiscriminatorParams& d, const Vector& features) {
  if (features.size() != d.weight.cols()) throw ContractViolation("discriminator feature count mismatch");
  return (d.weight * features)(0, 0) + d.bias(0, 0);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_tensors(std::ostream& os, const std::string& prefix, const std::vector<const Matrix*>& tensors,
                   const std::vector<std::string>& names) {
  if (tensors.size() != names.size()) throw ContractViolation("write_tensors: name count mismatch");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const Matrix& m = *tensors[k];
    os << prefix << names[k] << ' ' << m.rows() << ' ' << m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) os << ' ' << format_double(m(i, j));
    os << '\n';
  }
}

TensorMap read_tensors(std::istream& is) {
  TensorMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    long rows = -1, cols = -1;
    if (!(ls >> name >> rows >> cols) || rows < 0 || cols < 0)
      throw DataError("snapshot line " + std::to_string(lineno) + ": malformed header");
    Matrix m(rows, cols);
    for (long i = 0; i < rows; ++i) {
      for (long j = 0; j < cols; ++j) {
        std::string tok;
        if (!(ls >> tok)) throw DataError("snapshot line " + std::to_string(lineno) + ": too few values");
        double v = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
          throw DataError("snapshot line " + std::to_string(lineno) + ": bad value '" + tok + "'");
        m(i, j) = v;
      }
    }
    out[name] = std::move(m);
  }
  return out;
}

std::string serialize(const NetworkParams& net) {
  std::ostringstream os;
  os << "# residual network\n";
  Matrix shape(1, 3);
  shape << net.input_dim, net.width, static_cast<double>(net.blocks.size());
  write_tensors(os, "", {&shape}, {"shape"});
  write_tensors(os, "", net.tensors(), net.tensor_names());
  return os.str();
}

NetworkParams deserialize(const std::string& text) {
  std::istringstream is(text);
  TensorMap map = read_tensors(is);
  auto it = map.find("shape");
  if (it == map.end() || it->second.size() != 3) throw DataError("network snapshot has no shape line");
  const Matrix& s = it->second;
  NetworkParams net = zero_network(static_cast<int>(s(0, 0)), static_cast<int>(s(0, 1)), static_cast<int>(s(0, 2)));
  const auto names = net.tensor_names();
  auto tensors = net.tensors();
  for (std::size_t k = 0; k < names.size(); ++k) {
    auto t = map.find(names[k]);
    if (t == map.end()) throw DataError("network snapshot is missing '" + names[k] + "'");
    if (t->second.rows() != tensors[k]->rows() || t->second.cols() != tensors[k]->cols())
      throw DataError("network snapshot tensor '" + names[k] + "' has the wrong shape");
    *tensors[k] = t->second;
  }
  return net;
}

}  // namespace bcid
