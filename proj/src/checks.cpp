#include <cmath>
#include <sstream>

#include "bcid/assembly.hpp"
#include "bcid/experiment.hpp"
#include "bcid/forward_fdm.hpp"

namespace bcid {

namespace {

CheckResult make(std::string name, bool ok, const std::string& detail) { return {std::move(name), ok, detail}; }

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CheckResult green_identity() {
  double worst = 0;
  for (const char* name : {"harmonic_constant", "harmonic_x", "harmonic_saddle"}) {
    const auto p = make_problem(name);
    const auto data = prepare_data(p);
    const auto colloc = build_collocation(p.shape, {}, data.values);
    const auto kernels = precompute(colloc, 2);
    const auto terms = boundary_terms(colloc, kernels);
    worst = std::max(worst, terms.values.cwiseAbs().maxCoeff());
  }
  return make("boundary identity for harmonic fields", worst <= 1e-3, "max |R1| = " + sci(worst));
}

CheckResult fdm_linear() {
  auto u = [](const Point& x) { return x(0) + x(1); };
  const Grid g = solve_forward(DomainShape::UnitSquare, [](const Point&) { return 1.0; }, [](const Point&) { return 0.0; }, u,
                               1.0 / 16);
  double worst = 0;
  for (int j = 0; j <= g.cells; ++j)
    for (int i = 0; i <= g.cells; ++i) worst = std::max(worst, std::abs(g.at(i, j) - u(g.position(i, j))));
  return make("forward solver exact on linear data", worst <= 1e-8, "max error = " + sci(worst));
}

CheckResult flux() {
  auto one = [](const Point&) { return 1.0; };
  const Grid g = solve_forward(DomainShape::UnitSquare, one, one, [](const Point&) { return 0.0; }, 1.0 / 32);
  const auto fb = flux_balance(g, one, one);
  return make("discrete flux balance", fb.imbalance <= 1e-6, "imbalance = " + sci(fb.imbalance));
}

CheckResult gradients() {
  const NetworkParams net = init_network(3, 6, 2, 1);
  Matrix x(2, 3);
  x << 0.1, 0.5, 0.9, 0.3, 0.7, 0.2;
  const auto vg = forward_with_gradient(net, x);
  double worst = 0;
  const double h = 1e-5;
  for (int a = 0; a < 2; ++a) {
    Matrix xp = x, xm = x;
    xp.row(a).array() += h;
    xm.row(a).array() -= h;
    const Vector fd = (forward(net, xp) - forward(net, xm)) / (2 * h);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      worst = std::max(worst, std::abs(fd(j) - vg.gradients(a, j)) / std::max(1e-4, std::abs(fd(j))));
  }
  return make("spatial gradients match finite differences", worst < 1e-5, "max relative error = " + sci(worst));
}

CheckResult self_l2() {
  const Vector v = Vector::LinSpaced(10, -1.0, 2.0);
  const double e = relative_l2(v, v);
  return make("relative L2 of a field against itself", e == 0.0, "value = " + sci(e));
}

CheckResult checkpoint() {
  Checkpoint cp;
  cp.approximator = init_network(1);
  cp.generator = init_network(2);
  cp.discriminator = init_discriminator(3, 4);
  cp.adam1 = adam_init(std::as_const(cp.approximator).tensors());
  cp.adam2 = adam_init(std::as_const(cp.generator).tensors());
  cp.adam3 = adam_init(std::as_const(cp.discriminator).tensors());
  const auto back = deserialize_checkpoint(serialize(cp));
  const bool ok = back.approximator.flatten() == cp.approximator.flatten() &&
                  back.generator.flatten() == cp.generator.flatten() && back.discriminator.weight == cp.discriminator.weight;
  return make("checkpoint round trip", ok, ok ? "exact" : "mismatch");
}

CheckResult determinism() {
  ExperimentConfig cfg;
  cfg.train.epochs = 10;
  cfg.recovery.mode = "none";
  const auto a = run_experiment(cfg, {});
  const auto b = run_experiment(cfg, {});
  bool same = a.metrics.history.size() == b.metrics.history.size();
  for (std::size_t i = 0; same && i < a.metrics.history.size(); ++i)
    same = a.metrics.history[i].loss1 == b.metrics.history[i].loss1 && a.metrics.history[i].loss2 == b.metrics.history[i].loss2;
  return make("seeded training is reproducible", same, same ? "identical losses" : "losses differ");
}

}  // namespace

std::vector<CheckResult> run_checks() {
  std::vector<CheckResult> out;
  for (auto* fn : {&green_identity, &fdm_linear, &flux, &gradients, &self_l2, &checkpoint, &determinism}) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"check raised", false, e.what()});
    }
  }
  return out;
}

}  // namespace bcid
