#include <filesystem>
#include <string>

#include "bcid/config.hpp"
#include "bcid/errors.hpp"
#include "doctest.h"

using namespace bcid;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
  const auto cfg = parse_config("");
  CHECK(cfg.problem == "laplace_2d");
  CHECK(cfg.train.epochs == 500);
  CHECK(cfg.train.width == 10);
  CHECK(cfg.train.lr_generator == doctest::Approx(1e-3));
  CHECK(cfg.collocation.sources_per_edge == 10);
  CHECK(cfg.collocation.gauss_order == 8);
  CHECK(cfg.recovery.mode == "auto");
  CHECK(cfg.convergence.ladder == std::vector<int>{16, 32, 64, 128});
  CHECK(cfg.convergence.trials == 3);
}

TEST_CASE("values and inline comments parse") {
  const auto cfg = parse_config(
      "[problem]\nname = cube_3d   ; three dimensions\n"
      "[train]\nepochs = 12 # short\nseed = 7\ndiscriminator = false\n"
      "[recovery]\nanchor = point\nanchor_point = 0.5, 0.25\nanchor_value = 2\n"
      "[convergence]\nladder = 8,16,32\n");
  CHECK(cfg.problem == "cube_3d");
  CHECK(cfg.train.epochs == 12);
  CHECK(cfg.train.seed == 7);
  CHECK_FALSE(cfg.train.discriminator);
  REQUIRE(cfg.recovery.anchor_point.has_value());
  CHECK((*cfg.recovery.anchor_point)(1) == doctest::Approx(0.25));
  CHECK(*cfg.recovery.anchor_value == doctest::Approx(2.0));
  CHECK(cfg.convergence.ladder.size() == 3);
}

TEST_CASE("errors name the section and key") {
  CHECK(error_of("[train]\nepochs = abc\n").find("[train] epochs") != std::string::npos);
  CHECK(error_of("[train]\nepochs = 0\n").find("[train] epochs") != std::string::npos);
  CHECK(error_of("[train]\nepoch = 10\n").find("[train] epoch") != std::string::npos);
  CHECK(error_of("[bogus]\nx = 1\n").find("[bogus]") != std::string::npos);
  CHECK(error_of("[problem]\nname = nowhere\n").find("[problem] name") != std::string::npos);
  CHECK(error_of("[recovery]\nmode = magic\n").find("[recovery] mode") != std::string::npos);
  CHECK(error_of("[convergence]\nladder = 32,16\n").find("[convergence] ladder") != std::string::npos);
  CHECK(error_of("[collocation]\nsource_sampler = sobol\n").find("[collocation] source_sampler") !=
        std::string::npos);
}

TEST_CASE("missing file is a configuration error") {
  CHECK_THROWS_AS(load_config("/nonexistent/bcid.ini"), ConfigurationError);
}

TEST_CASE("canonical text ignores formatting and output settings") {
  const auto a = parse_config("[train]\nepochs=20\n[output]\ndir = a\n");
  const auto b = parse_config("; comment\n[train]\n  epochs =   20   \n[output]\ndir = elsewhere\nplots = false\n");
  CHECK(canonical_text(a) == canonical_text(b));
  CHECK(fnv1a(canonical_text(a)) == fnv1a(canonical_text(b)));
  const auto c = parse_config("[train]\nepochs=21\n");
  CHECK(fnv1a(canonical_text(a)) != fnv1a(canonical_text(c)));
  // canonical text parses back to the same configuration
  CHECK(canonical_text(parse_config(canonical_text(a))) == canonical_text(a));
}

TEST_CASE("fnv1a matches published test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("seed override reaches every random consumer") {
  auto cfg = parse_config("");
  cfg.set_seed(42);
  CHECK(cfg.train.seed == 42);
  CHECK(cfg.collocation.seed == 42);
  CHECK(cfg.recovery.train.seed == 42);
}

TEST_CASE("shipped configurations parse and validate") {
  const std::filesystem::path dir = BCID_SOURCE_DIR "/configs";
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()).problem_spec());
    ++count;
  }
  CHECK(count >= 4);
}
