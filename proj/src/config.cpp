#include "bcid/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <cctype>
#include <sstream>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

namespace pt = boost::property_tree;

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  double v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigurationError(field + ": expected a number, got '" + text + "'");
  return v;
}

long long to_int(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  long long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigurationError(field + ": expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigurationError(field + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(item, field));
  if (out.empty()) throw ConfigurationError(field + ": expected a comma-separated list");
  return out;
}

template <class F>
void rethrow_as_field(const std::string& field, F&& f) {
  try {
    f();
  } catch (const ConfigurationError& e) {
    const std::string msg = e.what();
    if (msg.rfind('[', 0) == 0) throw;
    throw ConfigurationError(field + ": " + msg);
  }
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string section) : section_(std::move(section)) {
    if (auto child = tree.get_child_optional(section_)) node_ = &*child;
  }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (!node_) return std::nullopt;
    auto v = node_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void get(const std::string& key, int& out) {
    if (auto v = raw(key)) out = static_cast<int>(to_int(*v, where(section_, key)));
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (auto v = raw(key)) {
      const auto x = to_int(*v, where(section_, key));
      if (x < 0) throw ConfigurationError(where(section_, key) + ": must be >= 0");
      out = static_cast<std::uint64_t>(x);
    }
  }
  void get(const std::string& key, double& out) {
    if (auto v = raw(key)) out = to_double(*v, where(section_, key));
  }
  void get(const std::string& key, bool& out) {
    if (auto v = raw(key)) out = to_bool(*v, where(section_, key));
  }
  void get(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void get(const std::string& key, SamplerKind& out) {
    if (auto v = raw(key)) rethrow_as_field(where(section_, key), [&] { out = parse_sampler(*v); });
  }

  void reject_unknown() const {
    if (!node_) return;
    for (const auto& [key, _] : *node_)
      if (!seen_.count(key)) throw ConfigurationError(where(section_, key) + ": unknown key");
  }

  const std::string& section() const { return section_; }

 private:
  std::string section_;
  const pt::ptree* node_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections{"problem", "collocation", "train", "recovery", "output", "convergence"};

}  // namespace

void ExperimentConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  collocation.seed = seed;
  recovery.train.seed = seed;
}

ProblemSpec ExperimentConfig::problem_spec() const {
  ProblemSpec p = make_problem(problem);
  if (source) p.source = *source;
  if (!data_file.empty()) p.data_file = data_file;
  if (fdm_h) p.fdm_h = *fdm_h;
  if (eval_resolution) p.eval_resolution = *eval_resolution;
  return p;
}

void ExperimentConfig::validate() const {
  rethrow_as_field("[problem] name", [&] { (void)make_problem(problem); });
  if (source && *source == DataSource::FromFile && data_file.empty())
    throw ConfigurationError("[problem] data_file: required when data_source = file");
  if (fdm_h && !(*fdm_h > 0 && *fdm_h <= 0.5)) throw ConfigurationError("[problem] fdm_h: must lie in (0, 0.5]");
  if (eval_resolution && *eval_resolution < 2) throw ConfigurationError("[problem] eval_resolution: must be >= 2");
  const auto& c = collocation;
  if (c.sources_per_edge < 1) throw ConfigurationError("[collocation] sources_per_edge: must be >= 1");
  if (c.gauss_order < 1 || c.gauss_order > 32) throw ConfigurationError("[collocation] gauss_order: must lie in [1, 32]");
  if (c.panels_per_edge < 1) throw ConfigurationError("[collocation] panels_per_edge: must be >= 1");
  if (c.interior_sources < 1) throw ConfigurationError("[collocation] interior_sources: must be >= 1");
  if (c.interior_nodes < 1) throw ConfigurationError("[collocation] interior_nodes: must be >= 1");
  if (c.check_points_per_edge < 0) throw ConfigurationError("[collocation] check_points_per_edge: must be >= 0");
  if (!(c.source_margin >= 0 && c.source_margin < 0.25))
    throw ConfigurationError("[collocation] source_margin: must lie in [0, 0.25)");
  rethrow_as_field("[train]", [&] { train.validate(); });
  const auto& r = recovery;
  if (r.mode != "auto" && r.mode != "smooth" && r.mode != "piecewise" && r.mode != "none")
    throw ConfigurationError("[recovery] mode: expected auto, smooth, piecewise or none, got '" + r.mode + "'");
  if (r.anchor != "boundary" && r.anchor != "point")
    throw ConfigurationError("[recovery] anchor: expected boundary or point, got '" + r.anchor + "'");
  if (r.nodes != 0 && r.nodes < 5) throw ConfigurationError("[recovery] nodes: must be 0 or >= 5");
  rethrow_as_field("[recovery]", [&] { r.train.validate(); });
  if (output.dir.empty()) throw ConfigurationError("[output] dir: must not be empty");
  const auto& v = convergence;
  for (std::size_t i = 0; i < v.ladder.size(); ++i) {
    if (v.ladder[i] < 4) throw ConfigurationError("[convergence] ladder: rungs must be >= 4");
    if (i > 0 && v.ladder[i] <= v.ladder[i - 1]) throw ConfigurationError("[convergence] ladder: must be strictly increasing");
  }
  if (v.trials < 1) throw ConfigurationError("[convergence] trials: must be >= 1");
  if (!(v.holder_exponent > 0 && v.holder_exponent <= 1))
    throw ConfigurationError("[convergence] holder_exponent: must lie in (0, 1]");
}

// Trailing "; note" or "# note" after a value; the INI reader only knows full-line comments.
static std::string strip_inline_comments(const std::string& text) {
  std::istringstream in(text);
  std::string out, line;
  while (std::getline(in, line)) {
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == ';' || line[i] == '#') && std::isspace(static_cast<unsigned char>(line[i - 1]))) {
        line.erase(i);
        break;
      }
    }
    out += line;
    out += '\n';
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(strip_inline_comments(text));
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigurationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, child] : tree) {
    if (!kSections.count(section)) throw ConfigurationError("[" + section + "]: unknown section");
    if (child.empty() && !child.data().empty()) throw ConfigurationError(section + ": key outside of any section");
  }

  ExperimentConfig cfg;
  {
    Reader r(tree, "problem");
    r.get("name", cfg.problem);
    if (auto v = r.raw("data_source")) rethrow_as_field("[problem] data_source", [&] { cfg.source = parse_data_source(*v); });
    r.get("data_file", cfg.data_file);
    if (auto v = r.raw("fdm_h")) cfg.fdm_h = to_double(*v, "[problem] fdm_h");
    if (auto v = r.raw("eval_resolution")) cfg.eval_resolution = static_cast<int>(to_int(*v, "[problem] eval_resolution"));
    r.reject_unknown();
  }
  {
    Reader r(tree, "collocation");
    auto& c = cfg.collocation;
    r.get("sources_per_edge", c.sources_per_edge);
    r.get("gauss_order", c.gauss_order);
    r.get("panels_per_edge", c.panels_per_edge);
    r.get("interior_sources", c.interior_sources);
    r.get("interior_nodes", c.interior_nodes);
    r.get("check_points_per_edge", c.check_points_per_edge);
    r.get("source_margin", c.source_margin);
    r.get("source_sampler", c.source_sampler);
    r.get("node_sampler", c.node_sampler);
    r.reject_unknown();
  }
  {
    Reader r(tree, "train");
    auto& t = cfg.train;
    r.get("epochs", t.epochs);
    std::uint64_t seed = t.seed;
    r.get("seed", seed);
    cfg.set_seed(seed);
    r.get("width", t.width);
    r.get("blocks", t.blocks);
    r.get("lr_approximator", t.lr_approximator);
    r.get("lr_generator", t.lr_generator);
    r.get("lr_discriminator", t.lr_discriminator);
    r.get("beta1", t.beta1);
    r.get("beta2", t.beta2);
    r.get("adam_eps", t.adam_eps);
    r.get("feedback", t.feedback);
    r.get("discriminator", t.discriminator);
    r.get("resample_interior", t.resample_interior);
    r.get("checkpoint_every", t.checkpoint_every);
    r.get("divergence_threshold", t.divergence_threshold);
    r.get("max_restarts", t.max_restarts);
    r.reject_unknown();
  }
  {
    Reader r(tree, "recovery");
    auto& s = cfg.recovery;
    r.get("mode", s.mode);
    r.get("anchor", s.anchor);
    if (auto v = r.raw("anchor_point")) {
      const auto xs = to_list(*v, "[recovery] anchor_point");
      s.anchor_point = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    }
    if (auto v = r.raw("anchor_value")) s.anchor_value = to_double(*v, "[recovery] anchor_value");
    r.get("nodes", s.nodes);
    r.get("epochs", s.train.epochs);
    r.get("lr", s.train.lr);
    r.get("anchor_weight", s.train.anchor_weight);
    r.get("smoothness", s.train.smoothness);
    r.get("positivity_tolerance", s.train.positivity_tolerance);
    r.reject_unknown();
  }
  {
    Reader r(tree, "output");
    r.get("dir", cfg.output.dir);
    r.get("plots", cfg.output.plots);
    r.get("checkpoint", cfg.output.checkpoint);
    r.reject_unknown();
  }
  {
    Reader r(tree, "convergence");
    auto& v = cfg.convergence;
    if (auto s = r.raw("ladder")) {
      v.ladder.clear();
      for (double x : to_list(*s, "[convergence] ladder")) {
        if (x != std::floor(x)) throw ConfigurationError("[convergence] ladder: rungs must be integers");
        v.ladder.push_back(static_cast<int>(x));
      }
    }
    r.get("trials", v.trials);
    r.get("holder_exponent", v.holder_exponent);
    r.get("reference_slope", v.reference_slope);
    r.get("recover", v.recover);
    r.reject_unknown();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
  auto num = [](double v) { return format_double(v); };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  const ProblemSpec p = cfg.problem_spec();
  os << "[problem]\n";
  kv("name", cfg.problem);
  kv("data_source", std::string(to_string(p.source)));
  kv("data_file", p.data_file);
  kv("fdm_h", num(p.fdm_h));
  kv("eval_resolution", std::to_string(p.eval_resolution));
  const auto& c = cfg.collocation;
  os << "[collocation]\n";
  kv("sources_per_edge", std::to_string(c.sources_per_edge));
  kv("gauss_order", std::to_string(c.gauss_order));
  kv("panels_per_edge", std::to_string(c.panels_per_edge));
  kv("interior_sources", std::to_string(c.interior_sources));
  kv("interior_nodes", std::to_string(c.interior_nodes));
  kv("check_points_per_edge", std::to_string(c.check_points_per_edge));
  kv("source_margin", num(c.source_margin));
  kv("source_sampler", std::string(to_string(c.source_sampler)));
  kv("node_sampler", std::string(to_string(c.node_sampler)));
  const auto& t = cfg.train;
  os << "[train]\n";
  kv("epochs", std::to_string(t.epochs));
  kv("seed", std::to_string(t.seed));
  kv("width", std::to_string(t.width));
  kv("blocks", std::to_string(t.blocks));
  kv("lr_approximator", num(t.lr_approximator));
  kv("lr_generator", num(t.lr_generator));
  kv("lr_discriminator", num(t.lr_discriminator));
  kv("beta1", num(t.beta1));
  kv("beta2", num(t.beta2));
  kv("adam_eps", num(t.adam_eps));
  kv("feedback", num(t.feedback));
  kv("discriminator", flag(t.discriminator));
  kv("resample_interior", flag(t.resample_interior));
  kv("checkpoint_every", std::to_string(t.checkpoint_every));
  kv("divergence_threshold", num(t.divergence_threshold));
  kv("max_restarts", std::to_string(t.max_restarts));
  const auto& r = cfg.recovery;
  os << "[recovery]\n";
  kv("mode", r.mode);
  kv("anchor", r.anchor);
  if (r.anchor_point) {
    std::string s;
    for (Eigen::Index i = 0; i < r.anchor_point->size(); ++i) s += (i ? "," : "") + num((*r.anchor_point)(i));
    kv("anchor_point", s);
  }
  if (r.anchor_value) kv("anchor_value", num(*r.anchor_value));
  kv("nodes", std::to_string(r.nodes));
  kv("epochs", std::to_string(r.train.epochs));
  kv("lr", num(r.train.lr));
  kv("anchor_weight", num(r.train.anchor_weight));
  kv("smoothness", num(r.train.smoothness));
  kv("positivity_tolerance", num(r.train.positivity_tolerance));
  // [output] is left out: where results go does not change them.
  os << "[convergence]\n";
  std::string ladder;
  for (std::size_t i = 0; i < cfg.convergence.ladder.size(); ++i)
    ladder += (i ? "," : "") + std::to_string(cfg.convergence.ladder[i]);
  kv("ladder", ladder);
  kv("trials", std::to_string(cfg.convergence.trials));
  kv("holder_exponent", num(cfg.convergence.holder_exponent));
  kv("reference_slope", num(cfg.convergence.reference_slope));
  kv("recover", flag(cfg.convergence.recover));
  return os.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bcid
