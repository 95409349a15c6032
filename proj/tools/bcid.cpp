// Command-line experiment runner.
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bcid/errors.hpp"
#include "bcid/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadConfig = 2, kAborted = 3, kBadData = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool no_discriminator = false;
  bool resample = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI configuration file");
  app->add_option("--seed", c.seed, "override the training/sampling seed");
  app->add_option("--out-dir", c.out_dir, "output directory (overrides [output] dir)");
  app->add_flag("--no-discriminator", c.no_discriminator, "train without the discriminator and its feedback");
  app->add_flag("--resample-interior", c.resample, "draw fresh interior source points every epoch");
}

bcid::ExperimentConfig resolve(const Common& c) {
  bcid::ExperimentConfig cfg = c.config.empty() ? bcid::ExperimentConfig{} : bcid::load_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  if (!c.out_dir.empty()) cfg.output.dir = c.out_dir;
  if (c.no_discriminator) {
    cfg.train.discriminator = false;
    cfg.train.feedback = 0.0;
  }
  if (c.resample) cfg.train.resample_interior = true;
  cfg.validate();
  return cfg;
}

void print_result(const bcid::ExperimentResult& r) {
  auto show = [](double v) { return std::isfinite(v) ? bcid::format_double(v) : std::string("n/a"); };
  std::cout << "status      " << r.status << "\n"
            << "epochs      " << r.metrics.history.size() << "\n"
            << "l2_u        " << show(r.metrics.l2_u) << "\n"
            << "l2_eps      " << show(r.metrics.l2_eps) << "\n"
            << "l2_g        " << show(r.metrics.l2_g) << "\n";
  for (const auto& [name, v] : r.region_estimates) std::cout << "eps[" << name << "] " << show(v) << "\n";
  std::cout << "wall_time_s " << show(r.metrics.wall_seconds) << "\n";
  for (const auto& w : r.metrics.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-only coefficient identification experiments"};
  app.require_subcommand(1);
  Common common;
  auto* run = app.add_subcommand("run", "train, recover and evaluate one experiment");
  auto* conv = app.add_subcommand("convergence", "error versus boundary sample count study");
  auto* fwd = app.add_subcommand("forward", "forward-solve a problem and export boundary data");
  auto* check = app.add_subcommand("check", "run the invariant suite");
  for (auto* sub : {run, conv, fwd}) add_common(sub, common);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadConfig;
  }

  try {
    if (check->parsed()) {
      bool ok = true;
      for (const auto& c : bcid::run_checks()) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        ok = ok && c.passed;
      }
      return ok ? kOk : kFailure;
    }
    const bcid::ExperimentConfig cfg = resolve(common);
    if (run->parsed()) {
      const auto r = bcid::run_experiment(cfg, cfg.output.dir);
      print_result(r);
      std::cout << "outputs     " << cfg.output.dir << "\n";
      return kOk;
    }
    if (conv->parsed()) {
      const auto r = bcid::run_convergence_study(cfg, cfg.output.dir);
      std::cout << "m_b,m_i,loss,l2_u,l2_eps\n";
      for (const auto& row : r.rows)
        std::cout << row.m_b << ',' << row.m_i << ',' << bcid::format_double(row.loss) << ','
                  << bcid::format_double(row.l2_u) << ',' << bcid::format_double(row.l2_eps) << "\n";
      std::cout << "slope " << bcid::format_double(r.fit.slope) << " +- " << bcid::format_double(r.fit.std_error)
                << (r.fit.flagged ? " (flagged: not decreasing)" : "") << "\n";
      return r.fit.flagged ? kFailure : kOk;
    }
    if (fwd->parsed()) {
      bcid::run_forward(cfg, cfg.output.dir);
      std::cout << "wrote " << cfg.output.dir << "/boundary.csv\n";
      return kOk;
    }
  } catch (const bcid::TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << " (partial metrics written)\n";
    return kAborted;
  } catch (const bcid::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const bcid::IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << "\n";
    return kBadData;
  } catch (const bcid::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kBadData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
