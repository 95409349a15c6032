#include <cmath>
#include <cstdio>
#include <filesystem>

#include "bcid/errors.hpp"
#include "bcid/problem.hpp"
#include "bcid/trainer.hpp"
#include "doctest.h"

using namespace bcid;

namespace {

Assembler make_assembler(const std::string& name, CollocationConfig cfg = {}) {
  const auto problem = make_problem(name);
  const auto data = prepare_data(problem);
  auto colloc = build_collocation(problem.shape, cfg, data.values);
  auto kernels = precompute(colloc, problem.dim());
  return Assembler(std::move(colloc), std::move(kernels));
}

double window_mean(const std::vector<EpochRecord>& h, std::size_t from, std::size_t len, double EpochRecord::*field) {
  double s = 0;
  for (std::size_t i = from; i < from + len; ++i) s += h[i].*field;
  return s / static_cast<double>(len);
}

}  // namespace

TEST_CASE("adam first step moves by lr") {
  Matrix p = Matrix::Constant(2, 3, 0.5);
  std::vector<Matrix*> params{&p};
  auto st = adam_init({&p});
  adam_step(params, {Matrix::Ones(2, 3)}, st, 1e-3, 0.9, 0.999, 1e-8);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double delta = 0.5 - p(i);
    CHECK(delta >= 9.99e-4);
    CHECK(delta <= 1e-3);
  }
  CHECK(st.step == 1);
  Matrix q = Matrix::Constant(1, 1, 0.5);
  auto sq = adam_init({&q});
  adam_step({&q}, {Matrix::Constant(1, 1, -7.0)}, sq, 1e-3, 0.9, 0.999, 1e-8);
  CHECK(q(0, 0) - 0.5 == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  Matrix p = Matrix::Random(3, 3);
  const Matrix before = p;
  auto st = adam_init({&p});
  for (int i = 0; i < 20; ++i) adam_step({&p}, {Matrix::Zero(3, 3)}, st, 1e-3, 0.9, 0.999, 1e-8);
  CHECK(p == before);
}

TEST_CASE("adam rejects mismatched shapes") {
  Matrix p = Matrix::Zero(2, 2);
  auto st = adam_init({&p});
  CHECK_THROWS_AS(adam_step({&p}, {Matrix::Zero(2, 3)}, st, 1e-3, 0.9, 0.999, 1e-8), ContractViolation);
  CHECK_THROWS_AS(adam_step({&p}, {}, st, 1e-3, 0.9, 0.999, 1e-8), ContractViolation);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = {};
  c.lr_generator = 0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = {};
  c.feedback = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = {};
  c.beta2 = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
}

TEST_CASE("harmonic constant data: zero approximator sits at the quadrature floor") {
  auto as = make_assembler("harmonic_constant");
  CHECK(loss1(as.r1(zero_network(2))) < 1e-6);
}

TEST_CASE("training is deterministic and records every epoch") {
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 11;
  auto a = train(as, cfg);
  auto b = train(as, cfg);
  REQUIRE(a.metrics.history.size() == 30);
  REQUIRE(b.metrics.history.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto& x = a.metrics.history[i];
    const auto& y = b.metrics.history[i];
    CHECK(x.epoch == static_cast<int>(i));
    CHECK(x.loss1 == y.loss1);
    CHECK(x.loss2 == y.loss2);
    CHECK(x.loss3 == y.loss3);
    CHECK(x.loss1 >= 0);
    CHECK(x.loss2 >= 0);
    CHECK(x.loss3 >= 0);
  }
  CHECK(a.approximator.flatten() == b.approximator.flatten());
  CHECK(a.generator.flatten() == b.generator.flatten());
  cfg.seed = 12;
  auto c = train(as, cfg);
  CHECK(c.approximator.flatten() != a.approximator.flatten());
}

TEST_CASE("monitor sees each epoch in order") {
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 5;
  std::vector<int> seen;
  train(as, cfg, [&](EpochRecord& r, const NetworkParams&, const NetworkParams&) { seen.push_back(r.epoch); });
  CHECK(seen == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("checkpoint round trip is exact") {
  Checkpoint cp;
  cp.epoch = 17;
  cp.lr_scale = 0.25;
  cp.approximator = init_network(1, 10, 2, 2);
  cp.generator = init_network(2, 10, 2, 2);
  cp.discriminator = init_discriminator(3, 24);
  cp.adam1 = adam_init(std::as_const(cp.approximator).tensors());
  cp.adam2 = adam_init(std::as_const(cp.generator).tensors());
  cp.adam3 = adam_init(std::as_const(cp.discriminator).tensors());
  adam_step(cp.approximator.tensors(), [&] {
    std::vector<Matrix> g;
    for (const Matrix* m : std::as_const(cp.approximator).tensors()) g.push_back(Matrix::Constant(m->rows(), m->cols(), 0.1 / 3.0));
    return g;
  }(), cp.adam1, 1e-3, 0.9, 0.999, 1e-8);

  const auto back = deserialize_checkpoint(serialize(cp));
  CHECK(back.epoch == 17);
  CHECK(back.lr_scale == 0.25);
  CHECK(back.approximator.flatten() == cp.approximator.flatten());
  CHECK(back.generator.flatten() == cp.generator.flatten());
  CHECK(back.discriminator.weight == cp.discriminator.weight);
  CHECK(back.discriminator.bias == cp.discriminator.bias);
  CHECK(back.adam1.step == 1);
  REQUIRE(back.adam1.m.size() == cp.adam1.m.size());
  for (std::size_t k = 0; k < cp.adam1.m.size(); ++k) {
    CHECK(back.adam1.m[k] == cp.adam1.m[k]);
    CHECK(back.adam1.v[k] == cp.adam1.v[k]);
  }

  const auto path = (std::filesystem::temp_directory_path() / "bcid_cp_test.txt").string();
  save_checkpoint(path, cp);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.approximator.flatten() == cp.approximator.flatten());
  std::remove(path.c_str());

  CHECK_THROWS_AS(deserialize_checkpoint("meta 1 2 0 1\n"), DataError);
}

TEST_CASE("training writes checkpoints at the configured cadence") {
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.checkpoint_every = 4;
  cfg.checkpoint_path = (std::filesystem::temp_directory_path() / "bcid_cp_cadence.txt").string();
  auto res = train(as, cfg);
  const auto cp = load_checkpoint(cfg.checkpoint_path);
  CHECK(cp.epoch == 8);
  std::remove(cfg.checkpoint_path.c_str());
}

TEST_CASE("divergence guard restarts then aborts") {
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.divergence_threshold = 0.0;  // every loss counts as diverged
  try {
    train(as, cfg);
    FAIL("expected TrainingAborted");
  } catch (const TrainingAborted& e) {
    CHECK(e.epoch() == 0);
    CHECK(e.partial_metrics().restarts == 3);
    CHECK(e.partial_metrics().warnings.size() == 3);
    CHECK(e.last_checkpoint().lr_scale == doctest::Approx(0.125));
  }
}

TEST_CASE("non-finite loss aborts with epoch and checkpoint") {
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.lr_approximator = 1e200;
  cfg.lr_generator = 1e200;
  cfg.divergence_threshold = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train(as, cfg), TrainingAborted);
  try {
    train(as, cfg);
  } catch (const TrainingAborted& e) {
    CHECK(e.epoch() >= 0);
    CHECK(e.epoch() < 50);
    CHECK(e.last_checkpoint().approximator.all_finite());
    CHECK(e.partial_metrics().history.size() == static_cast<std::size_t>(e.epoch()));
  }
}

TEST_CASE("resampling needs the collocation configuration") {
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.resample_interior = true;
  CHECK_THROWS_AS(train(as, cfg), ConfigurationError);
  CollocationConfig cc;
  auto res = train(as, cfg, {}, &cc);
  CHECK(res.metrics.history.size() == 2);
}

TEST_CASE("ablation without discriminator: windowed losses decrease") {
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.discriminator = false;
  cfg.feedback = 0.0;
  auto res = train(as, cfg);
  const auto& h = res.metrics.history;
  for (std::size_t w = 50; w + 50 <= h.size(); w += 50) {
    CHECK(window_mean(h, w, 50, &EpochRecord::loss1) < window_mean(h, w - 50, 50, &EpochRecord::loss1));
    CHECK(window_mean(h, w, 50, &EpochRecord::loss2) < window_mean(h, w - 50, 50, &EpochRecord::loss2));
  }
}

TEST_CASE("loss1 at the analytic source is far below the trained loss1") {
  const auto problem = make_problem("laplace_2d");
  auto as = make_assembler("laplace_2d");
  TrainConfig cfg;
  cfg.epochs = 300;
  auto res = train(as, cfg);
  const double trained = loss1(as.r1(res.approximator));
  const double exact = loss1(as.r1(problem.g_exact));
  MESSAGE("loss1 exact g " << exact << " trained " << trained);
  CHECK(exact <= 10.0 * trained);
}
