#include "bcid/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace bcid {

namespace {

constexpr std::uint64_t kApproximatorStream = 0x1B873593ULL;
constexpr std::uint64_t kGeneratorStream = 0xCC9E2D51ULL;
constexpr std::uint64_t kDiscriminatorStream = 0xE6546B64ULL;
constexpr std::uint64_t kResampleStream = 0x85EBCA6BULL;

std::vector<Matrix> values_of(const std::vector<const Matrix*>& ptrs) {
  std::vector<Matrix> out;
  out.reserve(ptrs.size());
  for (const Matrix* p : ptrs) out.push_back(*p);
  return out;
}

std::vector<Matrix> values_of(const std::vector<Matrix*>& ptrs) { return values_of(std::vector<const Matrix*>(ptrs.begin(), ptrs.end())); }

Var weighted_sum(Tape& tape, Var row, const Vector& weights) {
  return tape.sum(tape.mul(row, tape.constant(weights.transpose())));
}

// |w_k| / sum |w|, uniform when the discriminator weights vanish.
Vector feedback_weights(const DiscriminatorParams& d, Eigen::Index k) {
  Vector w = d.weight.row(0).transpose().cwiseAbs();
  const double s = w.sum();
  if (!(s > 0.0) || !std::isfinite(s)) return Vector::Constant(k, 1.0 / static_cast<double>(k));
  return w / s;
}

void write_adam(std::ostream& os, const std::string& prefix, const AdamState& st) {
  Matrix step = Matrix::Constant(1, 1, static_cast<double>(st.step));
  write_tensors(os, prefix, {&step}, {"step"});
  std::vector<const Matrix*> ptrs;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < st.m.size(); ++k) {
    ptrs.push_back(&st.m[k]);
    names.push_back("m" + std::to_string(k));
    ptrs.push_back(&st.v[k]);
    names.push_back("v" + std::to_string(k));
  }
  write_tensors(os, prefix, ptrs, names);
}

const Matrix& need(const TensorMap& map, const std::string& key) {
  auto it = map.find(key);
  if (it == map.end()) throw DataError("checkpoint is missing '" + key + "'");
  return it->second;
}

AdamState read_adam(const TensorMap& map, const std::string& prefix, std::size_t count) {
  AdamState st;
  st.step = static_cast<long>(need(map, prefix + "step")(0, 0));
  for (std::size_t k = 0; k < count; ++k) {
    st.m.push_back(need(map, prefix + "m" + std::to_string(k)));
    st.v.push_back(need(map, prefix + "v" + std::to_string(k)));
  }
  return st;
}

template <class Net>
void read_net(const TensorMap& map, const std::string& prefix, Net& net, const std::vector<std::string>& names) {
  auto tensors = net.tensors();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const Matrix& m = need(map, prefix + names[k]);
    if (m.rows() != tensors[k]->rows() || m.cols() != tensors[k]->cols())
      throw DataError("checkpoint tensor '" + prefix + names[k] + "' has the wrong shape");
    *tensors[k] = m;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigurationError("[train] epochs: must be >= 1");
  if (!(lr_approximator > 0) || !(lr_generator > 0) || !(lr_discriminator > 0))
    throw ConfigurationError("[train] lr_*: learning rates must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigurationError("[train] beta1/beta2: must lie in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigurationError("[train] adam_eps: must be > 0");
  if (width < 1) throw ConfigurationError("[train] width: must be >= 1");
  if (blocks < 0) throw ConfigurationError("[train] blocks: must be >= 0");
  if (!(feedback >= 0)) throw ConfigurationError("[train] feedback: must be >= 0");
  if (checkpoint_every < 1) throw ConfigurationError("[train] checkpoint_every: must be >= 1");
  if (max_restarts < 0) throw ConfigurationError("[train] max_restarts: must be >= 0");
}

AdamState adam_init(const std::vector<const Matrix*>& params) {
  AdamState st;
  for (const Matrix* p : params) {
    st.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    st.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return st;
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& st, double lr,
               double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw ContractViolation("adam_step: parameter, gradient and state counts differ");
  ++st.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k]->rows() || grads[k].cols() != params[k]->cols())
      throw ContractViolation("adam_step: gradient shape mismatch");
    st.m[k] = beta1 * st.m[k] + (1.0 - beta1) * grads[k];
    st.v[k] = beta2 * st.v[k] + (1.0 - beta2) * grads[k].cwiseAbs2();
    params[k]->array() -= lr * (st.m[k].array() / c1) / ((st.v[k].array() / c2).sqrt() + eps);
  }
}

std::string serialize(const Checkpoint& cp) {
  std::ostringstream os;
  os << "# training checkpoint\n";
  Matrix meta(1, 2);
  meta << cp.epoch, cp.lr_scale;
  Matrix shape(1, 3);
  shape << cp.approximator.input_dim, cp.approximator.width, static_cast<double>(cp.approximator.blocks.size());
  write_tensors(os, "", {&meta, &shape}, {"meta", "shape"});
  write_tensors(os, "approximator.", cp.approximator.tensors(), cp.approximator.tensor_names());
  write_tensors(os, "generator.", cp.generator.tensors(), cp.generator.tensor_names());
  write_tensors(os, "discriminator.", cp.discriminator.tensors(), {"weight", "bias"});
  write_adam(os, "adam1.", cp.adam1);
  write_adam(os, "adam2.", cp.adam2);
  write_adam(os, "adam3.", cp.adam3);
  return os.str();
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  std::istringstream is(text);
  const TensorMap map = read_tensors(is);
  Checkpoint cp;
  const Matrix& meta = need(map, "meta");
  const Matrix& shape = need(map, "shape");
  if (meta.size() != 2 || shape.size() != 3) throw DataError("checkpoint header is malformed");
  cp.epoch = static_cast<int>(meta(0, 0));
  cp.lr_scale = meta(0, 1);
  const int d = static_cast<int>(shape(0, 0)), m = static_cast<int>(shape(0, 1)), b = static_cast<int>(shape(0, 2));
  cp.approximator = zero_network(d, m, b);
  cp.generator = zero_network(d, m, b);
  read_net(map, "approximator.", cp.approximator, cp.approximator.tensor_names());
  read_net(map, "generator.", cp.generator, cp.generator.tensor_names());
  const Matrix& dw = need(map, "discriminator.weight");
  cp.discriminator.weight = dw;
  cp.discriminator.bias = need(map, "discriminator.bias");
  const std::size_t n = cp.approximator.tensors().size();
  cp.adam1 = read_adam(map, "adam1.", n);
  cp.adam2 = read_adam(map, "adam2.", n);
  cp.adam3 = read_adam(map, "adam3.", 2);
  return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw ConfigurationError("cannot write checkpoint " + path);
    os << serialize(cp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigurationError("cannot move checkpoint into " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

TrainResult train(Assembler& as, const TrainConfig& cfg, const EpochMonitor& monitor,
                  const CollocationConfig* resample_config) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int dim = as.colloc().dim;
  const Eigen::Index k = as.supervision_count();
  const bool use_disc = cfg.discriminator && k > 0;
  const bool refine = use_disc && cfg.feedback > 0.0;
  if (cfg.resample_interior && !resample_config)
    throw ConfigurationError("resampling interior sources needs the collocation configuration");

  Checkpoint cur;
  cur.approximator = init_network(cfg.seed ^ kApproximatorStream, cfg.width, dim, cfg.blocks);
  cur.generator = init_network(cfg.seed ^ kGeneratorStream, cfg.width, dim, cfg.blocks);
  cur.discriminator = init_discriminator(cfg.seed ^ kDiscriminatorStream, std::max<int>(1, static_cast<int>(k)));
  cur.adam1 = adam_init(std::as_const(cur.approximator).tensors());
  cur.adam2 = adam_init(std::as_const(cur.generator).tensors());
  cur.adam3 = adam_init(std::as_const(cur.discriminator).tensors());

  RunMetrics metrics;
  Checkpoint saved = cur;
  auto checkpoint = [&]() {
    saved = cur;
    if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, saved);
  };
  auto abort = [&](const std::string& why, int epoch) {
    metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    throw TrainingAborted(why, epoch, saved, metrics);
  };

  NetworkParams& a = cur.approximator;
  NetworkParams& g = cur.generator;
  DiscriminatorParams& d = cur.discriminator;

  while (cur.epoch < cfg.epochs) {
    const int epoch = cur.epoch;
    const double lr1 = cfg.lr_approximator * cur.lr_scale;
    const double lr2 = cfg.lr_generator * cur.lr_scale;
    const double lr3 = cfg.lr_discriminator * cur.lr_scale;
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      if (cfg.resample_interior && epoch > 0) {
        CollocationSet fresh = as.colloc();
        resample_interior_sources(fresh, *resample_config,
                                  resample_config->seed + kResampleStream * static_cast<std::uint64_t>(epoch));
        as.set_interior_sources(std::move(fresh.interior_sources));
      }

      // approximator on Loss1
      auto [l1, g1] = value_and_grad(
          [&](Tape& t, std::span<const Var> v) { return t.mean(t.square(as.r1(t, bind_vars(a, v)))); },
          values_of(a.tensors()));
      adam_step(a.tensors(), g1, cur.adam1, lr1, cfg.beta1, cfg.beta2, cfg.adam_eps);
      rec.loss1 = l1;

      // generator on Loss2 with the current approximator
      auto [l2, g2] = value_and_grad(
          [&](Tape& t, std::span<const Var> v) { return t.mean(t.square(as.r2(t, a, bind_vars(g, v)))); },
          values_of(g.tensors()));
      adam_step(g.tensors(), g2, cur.adam2, lr2, cfg.beta1, cfg.beta2, cfg.adam_eps);
      rec.loss2 = l2;

      if (k > 0) {
        const Vector e = as.mismatch(g);
        rec.loss3 = e.squaredNorm() / static_cast<double>(k);
        if (use_disc) {
          // discriminator regresses Loss3 from the per-point mismatches
          const Vector feat = e.cwiseAbs();
          auto [ld, gd] = value_and_grad(
              [&](Tape& t, std::span<const Var> v) {
                const Var pred = t.add(t.matmul(v[0], t.constant(feat)), v[1]);
                return t.square(t.sub(pred, t.constant(Matrix::Constant(1, 1, rec.loss3))));
              },
              values_of(d.tensors()));
          (void)ld;
          adam_step(d.tensors(), gd, cur.adam3, lr3, cfg.beta1, cfg.beta2, cfg.adam_eps);
        }
      }

      if (refine) {
        const Vector w = feedback_weights(d, k);
        const Eigen::Index nd = static_cast<Eigen::Index>(as.colloc().check_points.size());
        const Vector wc = nd > 0 ? Vector(w.head(nd) / std::max(w.head(nd).sum(), 1e-300)) : Vector();
        auto [r1v, rg1] = value_and_grad(
            [&](Tape& t, std::span<const Var> v) {
              const NetworkVars nv = bind_vars(a, v);
              Var loss = t.mean(t.square(as.r1(t, nv)));
              if (nd > 0) loss = t.add(loss, t.scale(weighted_sum(t, t.square(as.r1_check(t, nv)), wc), cfg.feedback));
              return loss;
            },
            values_of(a.tensors()));
        (void)r1v;
        adam_step(a.tensors(), rg1, cur.adam1, lr1, cfg.beta1, cfg.beta2, cfg.adam_eps);
        auto [r2v, rg2] = value_and_grad(
            [&](Tape& t, std::span<const Var> v) {
              const NetworkVars nv = bind_vars(g, v);
              const Var l = t.mean(t.square(as.r2(t, a, nv)));
              return t.add(l, t.scale(weighted_sum(t, t.square(as.mismatch(t, nv)), w), cfg.feedback));
            },
            values_of(g.tensors()));
        (void)r2v;
        adam_step(g.tensors(), rg2, cur.adam2, lr2, cfg.beta1, cfg.beta2, cfg.adam_eps);
      }
    } catch (const TrainingAborted&) {
      throw;
    } catch (const NumericError& e) {
      abort(std::string("non-finite value during training: ") + e.what(), epoch);
    }

    if (!std::isfinite(rec.loss1) || !std::isfinite(rec.loss2) || (k > 0 && !std::isfinite(rec.loss3)) ||
        !a.all_finite() || !g.all_finite())
      abort("non-finite loss", epoch);
    const double worst = std::max({rec.loss1, rec.loss2, k > 0 ? rec.loss3 : 0.0});
    if (worst > cfg.divergence_threshold) {
      if (metrics.restarts >= cfg.max_restarts) abort("loss kept diverging after " + std::to_string(metrics.restarts) + " restarts", epoch);
      ++metrics.restarts;
      const double scale = saved.lr_scale * 0.5;
      cur = saved;
      cur.lr_scale = scale;
      saved.lr_scale = scale;
      metrics.history.resize(static_cast<std::size_t>(cur.epoch));
      metrics.warnings.push_back("divergence at epoch " + std::to_string(epoch) + ": learning rates halved, restored epoch " +
                                 std::to_string(cur.epoch));
      continue;
    }

    if (monitor) monitor(rec, a, g);
    metrics.history.push_back(rec);
    ++cur.epoch;
    if (cur.epoch % cfg.checkpoint_every == 0) checkpoint();
  }

  metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {a, g, d, metrics};
}

}  // namespace bcid
