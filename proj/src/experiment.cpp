#include "bcid/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bcid/assembly.hpp"
#include "bcid/errors.hpp"
#include "bcid/plot.hpp"
#include "json.hpp"

namespace bcid {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : (std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf")); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigurationError("cannot write " + p.string());
  return os;
}

void write_metrics_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
  auto os = open_out(path);
  os << "epoch,loss1,loss2,loss3,l2_u,l2_eps\n";
  for (const auto& r : history)
    os << r.epoch << ',' << fmt(r.loss1) << ',' << fmt(r.loss2) << ',' << fmt(r.loss3) << ',' << fmt(r.l2_u) << ','
       << fmt(r.l2_eps) << '\n';
}

Vector sample(const ScalarField& f, const Matrix& pts) {
  Vector out(pts.cols());
  for (Eigen::Index j = 0; j < pts.cols(); ++j) out(j) = f ? f(pts.col(j)) : std::nan("");
  return out;
}

void write_field_csv(const fs::path& path, const Matrix& pts, const Vector& value, const Vector& ref) {
  auto os = open_out(path);
  const auto d = pts.rows();
  os << (d == 3 ? "x,y,z,value,reference,abs_error\n" : "x,y,value,reference,abs_error\n");
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    for (Eigen::Index a = 0; a < d; ++a) os << fmt(pts(a, j)) << ',';
    os << fmt(value(j)) << ',' << fmt(ref(j)) << ',' << fmt(std::abs(value(j) - ref(j))) << '\n';
  }
}

// res x res lattice on a coordinate plane through the cube centre.
Matrix plane_points(int res, int a, int b) {
  Matrix pts(3, res * res);
  const double s = 1.0 / (res - 1);
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) {
      Vector p = Vector::Constant(3, 0.5);
      p(a) = i * s;
      p(b) = j * s;
      pts.col(j * res + i) = p;
    }
  return pts;
}

// Square raster over the bounding box; outside points become NaN.
Matrix raster(const Domain& dom, int res, const std::function<Vector(const Matrix&)>& eval) {
  const double s = 1.0 / (res - 1);
  std::vector<Point> inside;
  std::vector<std::pair<int, int>> where;
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) {
      const Point p = make_point(i * s, j * s);
      if (!dom.contains(p) && !dom.on_boundary(p, 1e-12)) continue;
      inside.push_back(p);
      where.emplace_back(j, i);
    }
  const Vector v = eval(positions_of(inside));
  Matrix img = Matrix::Constant(res, res, std::nan(""));
  for (std::size_t k = 0; k < where.size(); ++k) img(where[k].first, where[k].second) = v(static_cast<Eigen::Index>(k));
  return img;
}

Matrix reshape_plane(const Vector& v, int res) {
  Matrix img(res, res);
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) img(j, i) = v(j * res + i);
  return img;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

struct Recovered {
  std::optional<MediumField> field;
  std::vector<std::string> warnings;
};

Recovered recover(const ExperimentConfig& cfg, const ProblemSpec& problem, const PreparedData& data,
                  const CollocationSet& colloc, const NetworkParams& approximator, const NetworkParams& generator,
                  const Matrix& eval_pts) {
  Recovered out;
  std::string mode = cfg.recovery.mode;
  if (mode == "auto") mode = problem.piecewise() ? "piecewise" : "smooth";
  if (mode == "none") return out;
  if (!problem.f) throw ConfigurationError("[recovery] mode: the problem has no source term");
  // The source network is only constrained at the integration nodes; off them
  // the cubic activations extrapolate badly, so recover there by default.
  const auto nodes = cfg.recovery.nodes > 0
                         ? sample_interior(problem.shape, cfg.recovery.nodes, cfg.train.seed, {SamplerKind::Lattice, 0.0})
                         : colloc.interior_nodes;
  RecoveryInputs in = recovery_inputs(nodes, approximator, generator, problem.f);
  if (data.grad_singular)
    for (Eigen::Index j = 0; j < in.points.cols(); ++j) in.grad_u.col(j) += data.grad_singular(in.points.col(j));
  RecoveryResult r;
  if (mode == "piecewise") {
    if (!problem.piecewise()) throw ConfigurationError("[recovery] mode: piecewise recovery needs problem regions");
    r = recover_piecewise(in, problem.regions);
  } else {
    std::vector<Anchor> anchors;
    if (cfg.recovery.anchor == "boundary") {
      if (!problem.eps_exact)
        throw ConfigurationError("[recovery] anchor: boundary anchors need the medium on the boundary");
      for (const Point& p : boundary_sources(Domain(problem.shape), cfg.collocation.sources_per_edge))
        anchors.push_back({p, problem.eps_exact(p)});
    } else {
      const Point pos = cfg.recovery.anchor_point ? *cfg.recovery.anchor_point
                                                  : default_anchor_position(colloc.boundary_nodes, generator);
      if (pos.size() != problem.dim()) throw ConfigurationError("[recovery] anchor_point: wrong dimension");
      double value;
      if (cfg.recovery.anchor_value) value = *cfg.recovery.anchor_value;
      else if (problem.eps_exact) value = problem.eps_exact(pos);
      else throw ConfigurationError("[recovery] anchor_value: missing and the medium is unknown");
      anchors.push_back({pos, value});
    }
    r = recover_smooth(in, anchors, cfg.recovery.train, eval_pts);
  }
  out.field = std::move(r.field);
  out.warnings = std::move(r.warnings);
  return out;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const ExperimentResult& res,
                    const std::string& extra_status, const std::vector<std::string>& files) {
  nlohmann::ordered_json j;
  const std::string canon = canonical_text(cfg);
  j["config_hash"] = "fnv1a64:" + hex64(fnv1a(canon));
  j["seed"] = cfg.train.seed;
  j["version"] = BCID_VERSION;
  j["problem"] = cfg.problem;
  j["status"] = extra_status;
  j["wall_seconds"] = res.metrics.wall_seconds;
  j["epochs_completed"] = res.metrics.history.size();
  j["restarts"] = res.metrics.restarts;
  j["duplicate_rows"] = res.metrics.duplicate_rows;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  j["results"] = {{"l2_u", num(res.metrics.l2_u)}, {"l2_eps", num(res.metrics.l2_eps)}, {"l2_g", num(res.metrics.l2_g)},
                  {"final_loss", num(res.final_loss)}};
  for (const auto& [name, v] : res.region_estimates) j["results"]["regions"][name] = v;
  j["warnings"] = res.metrics.warnings;
  j["files"] = files;
  if (cfg.problem == "laplace_2d") {
    auto& ctx = j["context"];
    for (const auto& row : laplace_context_table())
      ctx.push_back({{"method", row.method}, {"medium_l2", row.medium_l2}, {"solution_l2", row.solution_l2}});
  }
  j["config"] = canon;
  auto os = open_out(dir / "manifest.json");
  os << j.dump(2) << '\n';
}

void write_report(const fs::path& dir, const ExperimentConfig& cfg, const ExperimentResult& res) {
  auto os = open_out(dir / "report.md");
  os << "# " << cfg.problem << "\n\n";
  os << "| quantity | value |\n|---|---|\n";
  os << "| solution L2 | " << fmt(res.metrics.l2_u) << " |\n";
  os << "| medium L2 | " << fmt(res.metrics.l2_eps) << " |\n";
  os << "| source L2 | " << fmt(res.metrics.l2_g) << " |\n";
  for (const auto& [name, v] : res.region_estimates) os << "| medium in " << name << " | " << fmt(v) << " |\n";
  if (cfg.problem == "laplace_2d") {
    os << "\nReference L2 errors reported for other solvers on this benchmark (context only, not recomputed):\n\n";
    os << "| method | medium L2 | solution L2 |\n|---|---|---|\n";
    for (const auto& row : laplace_context_table())
      os << "| " << row.method << " | " << fmt(row.medium_l2) << " | " << fmt(row.solution_l2) << " |\n";
    os << "| this run | " << fmt(res.metrics.l2_eps) << " | " << fmt(res.metrics.l2_u) << " |\n";
  }
  if (!res.metrics.warnings.empty()) {
    os << "\nWarnings:\n\n";
    for (const auto& w : res.metrics.warnings) os << "- " << w << "\n";
  }
}

}  // namespace

const std::vector<ContextRow>& laplace_context_table() {
  static const std::vector<ContextRow> rows{
      {"PINN", 0.0313, 0.3117}, {"WAN", 0.0526, 0.2978}, {"DRM", 0.9872, 0.2281}, {"boundary-only networks (published)", 0.0143, 0.0121}};
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec problem = cfg.problem_spec();
  const PreparedData data = prepare_data(problem);
  CollocationConfig cc = cfg.collocation;
  cc.seed = cfg.train.seed;
  CollocationSet colloc = build_collocation(problem.shape, cc, data.values);
  KernelMatrices kernels = precompute(colloc, problem.dim());
  Assembler as(std::move(colloc), std::move(kernels));

  const Matrix eval_pts = evaluation_points(problem.shape, problem.eval_resolution);
  const Vector u_ref = sample(data.u_reference, eval_pts);
  const bool have_u = static_cast<bool>(data.u_reference);

  const bool write = !out_dir.empty();
  if (write) fs::create_directories(out_dir);
  std::vector<std::string> files;

  TrainConfig tc = cfg.train;
  if (write && cfg.output.checkpoint) {
    tc.checkpoint_path = (out_dir / "checkpoint.txt").string();
    files.push_back("checkpoint.txt");
  }
  auto monitor = [&](EpochRecord& rec, const NetworkParams&, const NetworkParams& gen) {
    if (have_u) rec.l2_u = relative_l2(solution_values(data, forward(gen, eval_pts), eval_pts), u_ref);
  };

  ExperimentResult res;
  TrainResult tr;
  try {
    tr = train(as, tc, monitor, &cc);
  } catch (const TrainingAborted& e) {
    res.status = "aborted";
    res.metrics = e.partial_metrics();
    res.metrics.duplicate_rows = data.duplicate_rows;
    res.metrics.warnings.push_back(e.what());
    if (write) {
      write_metrics_csv(out_dir / "metrics.csv", res.metrics.history);
      files.push_back("metrics.csv");
      write_manifest(out_dir, cfg, res, "aborted", files);
    }
    throw;
  }
  res.metrics = tr.metrics;
  res.metrics.duplicate_rows = data.duplicate_rows;
  if (data.duplicate_rows > 0)
    res.metrics.warnings.push_back(std::to_string(data.duplicate_rows) + " duplicate boundary rows (last one kept)");

  auto solution = [&](const Matrix& p) { return solution_values(data, forward(tr.generator, p), p); };
  const Vector u_hat = solution(eval_pts);
  res.metrics.l2_u = have_u ? relative_l2(u_hat, u_ref) : std::nan("");
  const Vector g_hat = forward(tr.approximator, eval_pts);
  const Vector g_ref = sample(data.g_reference, eval_pts);
  if (data.g_reference) {
    // scored where the residuals constrain it: the integration nodes
    const Matrix q = as.colloc().interior_node_positions();
    res.metrics.l2_g = relative_l2(forward(tr.approximator, q), sample(data.g_reference, q));
  }

  const Recovered rec = recover(cfg, problem, data, as.colloc(), tr.approximator, tr.generator, eval_pts);
  for (const auto& w : rec.warnings) res.metrics.warnings.push_back(w);
  const Vector eps_ref = sample(problem.eps_exact, eval_pts);
  Vector eps_hat = Vector::Constant(eval_pts.cols(), std::nan(""));
  if (rec.field) {
    eps_hat = rec.field->evaluate(eval_pts);
    if (problem.eps_exact) res.metrics.l2_eps = relative_l2(eps_hat, eps_ref);
    if (rec.field->kind == MediumField::Kind::PiecewiseConstants)
      for (const auto& r : rec.field->regions) res.region_estimates.emplace_back(r.name, r.true_value);
  }
  if (!res.metrics.history.empty()) {
    auto& last = res.metrics.history.back();
    last.l2_eps = res.metrics.l2_eps;
    res.final_loss = last.loss1 + last.loss2;
  }
  res.metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!write) return res;

  write_metrics_csv(out_dir / "metrics.csv", res.metrics.history);
  write_field_csv(out_dir / "field_u.csv", eval_pts, u_hat, u_ref);
  write_field_csv(out_dir / "field_eps.csv", eval_pts, eps_hat, eps_ref);
  write_field_csv(out_dir / "field_g.csv", eval_pts, g_hat, g_ref);
  files.insert(files.end(), {"metrics.csv", "field_u.csv", "field_eps.csv", "field_g.csv"});

  auto eps_eval = [&](const Matrix& p) -> Vector {
    return rec.field ? rec.field->evaluate(p) : Vector(Vector::Constant(p.cols(), std::nan("")));
  };
  if (problem.dim() == 3) {
    const int res3 = problem.eval_resolution;
    const std::array<std::tuple<const char*, int, int>, 3> planes{{{"x1x2", 0, 1}, {"x1x3", 0, 2}, {"x2x3", 1, 2}}};
    for (const auto& [name, a, b] : planes) {
      const Matrix pts = plane_points(res3, a, b);
      const Vector uh = solution(pts), ur = sample(data.u_reference, pts);
      const Vector eh = eps_eval(pts), er = sample(problem.eps_exact, pts);
      write_field_csv(out_dir / ("field_u_" + std::string(name) + ".csv"), pts, uh, ur);
      write_field_csv(out_dir / ("field_eps_" + std::string(name) + ".csv"), pts, eh, er);
      files.push_back("field_u_" + std::string(name) + ".csv");
      files.push_back("field_eps_" + std::string(name) + ".csv");
      if (cfg.output.plots) {
        write_heatmap_png((out_dir / ("u_" + std::string(name) + ".png")).string(), reshape_plane(uh, res3), 8);
        write_heatmap_png((out_dir / ("eps_" + std::string(name) + ".png")).string(), reshape_plane(eh, res3), 8);
        files.push_back("u_" + std::string(name) + ".png");
        files.push_back("eps_" + std::string(name) + ".png");
      }
    }
  }

  if (cfg.output.plots) {
    Series l1, l2, l3, lu;
    for (const auto& r : res.metrics.history) {
      const double x = r.epoch;
      l1.x.push_back(x), l1.y.push_back(r.loss1);
      l2.x.push_back(x), l2.y.push_back(r.loss2);
      l3.x.push_back(x), l3.y.push_back(r.loss3);
      lu.x.push_back(x), lu.y.push_back(r.l2_u);
    }
    write_line_plot_png((out_dir / "losses.png").string(), {l1, l2, l3}, true);
    write_line_plot_png((out_dir / "l2_u.png").string(), {lu}, true);
    files.insert(files.end(), {"losses.png", "l2_u.png"});
    if (problem.dim() == 2) {
      const Domain dom(problem.shape);
      const int r = 81;
      write_heatmap_png((out_dir / "u.png").string(), raster(dom, r, solution));
      write_heatmap_png((out_dir / "eps.png").string(), raster(dom, r, eps_eval));
      write_heatmap_png((out_dir / "g.png").string(), raster(dom, r, [&](const Matrix& p) { return forward(tr.approximator, p); }));
      files.insert(files.end(), {"u.png", "eps.png", "g.png"});
      if (have_u) {
        write_heatmap_png((out_dir / "u_error.png").string(), raster(dom, r, [&](const Matrix& p) {
                            return Vector((solution(p) - sample(data.u_reference, p)).cwiseAbs());
                          }));
        files.push_back("u_error.png");
      }
    }
  }
  write_report(out_dir, cfg, res);
  files.push_back("report.md");
  write_manifest(out_dir, cfg, res, res.status, files);
  return res;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractViolation("fit_loglog needs matching samples, at least 2");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ContractViolation("fit_loglog needs positive samples");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
    mx += lx.back();
    my += ly.back();
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0) throw ContractViolation("fit_loglog needs at least two distinct x values");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    rss += r * r;
  }
  fit.std_error = x.size() > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
  fit.flagged = fit.slope + 2.0 * fit.std_error >= 0.0;
  return fit;
}

int interior_count_for(int m_b, int dim) {
  const double p = static_cast<double>(dim) / (dim - 1);
  return std::max(1, static_cast<int>(std::lround(100.0 * std::pow(m_b / 40.0, p))));
}

ConvergenceResult run_convergence_study(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto& cs = cfg.convergence;
  if (cs.ladder.size() < 3) throw ConfigurationError("[convergence] ladder: at least 3 rungs are needed");
  const ProblemSpec problem = cfg.problem_spec();
  const Domain dom(problem.shape);
  const int edges = static_cast<int>(dom.segments().size());

  ConvergenceResult out;
  std::vector<double> xs, ys;
  std::ofstream trials_csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    trials_csv = open_out(out_dir / "convergence_trials.csv");
    trials_csv << "m_b,m_i,trial,seed,loss,l2_u,l2_eps\n";
  }
  for (int m_b : cs.ladder) {
    ExperimentConfig rung = cfg;
    rung.collocation.sources_per_edge = std::max(1, static_cast<int>(std::lround(static_cast<double>(m_b) / edges)));
    const int actual_b = static_cast<int>(boundary_sources(dom, rung.collocation.sources_per_edge).size());
    const int m_i = interior_count_for(actual_b, problem.dim());
    rung.collocation.interior_sources = m_i;
    rung.collocation.interior_nodes = m_i;
    if (!cs.recover) rung.recovery.mode = "none";
    ConvergenceRow row;
    row.m_b = actual_b;
    row.m_i = m_i;
    double eps_sum = 0;
    for (int t = 0; t < cs.trials; ++t) {
      rung.set_seed(cfg.train.seed + static_cast<std::uint64_t>(t));
      const ExperimentResult r = run_experiment(rung, {});
      row.loss += r.final_loss / cs.trials;
      row.trial_l2_u.push_back(r.metrics.l2_u);
      row.l2_u += r.metrics.l2_u / cs.trials;
      eps_sum += r.metrics.l2_eps;
      xs.push_back(actual_b);
      ys.push_back(r.metrics.l2_u);
      if (trials_csv)
        trials_csv << actual_b << ',' << m_i << ',' << t << ',' << rung.train.seed << ',' << fmt(r.final_loss) << ','
                   << fmt(r.metrics.l2_u) << ',' << fmt(r.metrics.l2_eps) << '\n';
    }
    row.l2_eps = eps_sum / cs.trials;
    out.rows.push_back(row);
  }
  out.fit = fit_loglog(xs, ys);

  if (!out_dir.empty()) {
    auto os = open_out(out_dir / "convergence.csv");
    os << "m_b,m_i,loss,l2_u,l2_eps\n";
    for (const auto& r : out.rows)
      os << r.m_b << ',' << r.m_i << ',' << fmt(r.loss) << ',' << fmt(r.l2_u) << ',' << fmt(r.l2_eps) << '\n';
    auto fo = open_out(out_dir / "convergence_fit.csv");
    fo << "slope,intercept,std_error,reference_slope,status\n";
    fo << fmt(out.fit.slope) << ',' << fmt(out.fit.intercept) << ',' << fmt(out.fit.std_error) << ','
       << fmt(cs.reference_slope) << ',' << (out.fit.flagged ? "flagged" : "ok") << '\n';
    if (cfg.output.plots) {
      Series meas, ref;
      for (const auto& r : out.rows) {
        meas.x.push_back(std::log(r.m_b));
        meas.y.push_back(r.l2_u);
        ref.x.push_back(std::log(r.m_b));
        ref.y.push_back(out.rows.front().l2_u * std::pow(static_cast<double>(r.m_b) / out.rows.front().m_b, cs.reference_slope));
      }
      write_line_plot_png((out_dir / "convergence.png").string(), {meas, ref}, true);
    }
  }
  return out;
}

void run_forward(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const ProblemSpec problem = cfg.problem_spec();
  if (!problem.eps_exact || !problem.f || !problem.dirichlet)
    throw ConfigurationError("[problem] name: the forward solver needs a known medium, source and boundary values");
  const double h = problem.fdm_h;
  const Grid grid = solve_forward(problem.shape, problem.eps_exact, problem.f, problem.dirichlet, h);
  auto bd = build_domain(problem.shape, cfg.collocation.gauss_order, cfg.collocation.panels_per_edge);
  const auto q = extract_neumann(grid, bd.nodes);
  for (std::size_t k = 0; k < bd.nodes.size(); ++k) {
    bd.nodes[k].dirichlet = problem.dirichlet(bd.nodes[k].position);
    bd.nodes[k].neumann = q[k];
  }
  fs::create_directories(out_dir);
  write_boundary_csv((out_dir / "boundary.csv").string(), bd.nodes, problem.dim());
  auto os = open_out(out_dir / "grid.csv");
  os << (grid.dim == 3 ? "x,y,z,u\n" : "x,y,u\n");
  const int n = grid.nodes_per_axis();
  const int nk = grid.dim == 3 ? n : 1;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (grid.kind[grid.index(i, j, k)] == NodeKind::Outside) continue;
        const Point p = grid.position(i, j, k);
        for (Eigen::Index a = 0; a < p.size(); ++a) os << fmt(p(a)) << ',';
        os << fmt(grid.at(i, j, k)) << '\n';
      }
}

}  // namespace bcid
