#include <doctest.h>

#include <filesystem>

#include "anderson/criteria.hpp"
#include "anderson/error.hpp"
#include "anderson/harness.hpp"
#include "support.hpp"

using namespace anderson;
namespace fs = std::filesystem;

namespace {

harness::Config fmm_config(const fs::path& out) {
  auto c = harness::Config::parse(R"(
# small fractional-moment run
diagnostic.name = fmm
[topology]
kind = lattice
sides = 80
[disorder]
family = uniform
lambda = 6
seed = 3
[diagnostic]
s = 0.5
x = 40
max_distance = 10
[execution]
n_samples = 40
)");
  c.set("execution.output", out.string());
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = harness::Config::parse("a.b = 1\n[sec]\nkey = x, y  # trailing\n\n");
  CHECK(c.get("a.b") == "1");
  CHECK(c.get("sec.key") == "x, y");
  CHECK(harness::Config::parse(c.text()).entries() == c.entries());
  CHECK_THROWS_AS(harness::Config::parse("a = 1\na = 2\n"), ValidationError);
  CHECK_THROWS_AS(harness::Config::parse("just words\n"), ValidationError);
  CHECK_THROWS_AS(harness::Config::parse("[open\n"), ValidationError);
}

TEST_CASE("unknown diagnostics list the available names") {
  auto c = harness::Config::parse("diagnostic.name = nope\n");
  try {
    harness::ExperimentConfig::from(c);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("diagnostic.name") != std::string::npos);
    for (const auto& name : harness::available_diagnostics()) CHECK(msg.find(name) != std::string::npos);
  }
}

TEST_CASE("validation names the field before any work") {
  const auto dir = testing::scratch("validation");
  auto c = fmm_config(dir / "run");
  c.set("diagnostic.s", "1.5");
  try {
    harness::run(harness::ExperimentConfig::from(c));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("diagnostic.s") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "run"));
  c = fmm_config(dir / "run");
  c.set("diagnostic.typo", "1");
  CHECK_THROWS_AS(harness::run(harness::ExperimentConfig::from(c)), ValidationError);
  c = fmm_config(dir / "run");
  c.set("execution.n_samples", "1");
  CHECK_THROWS_AS(harness::run(harness::ExperimentConfig::from(c)), ValidationError);
  c = fmm_config(dir / "run");
  c.set("execution.workers", "0");
  CHECK_THROWS_AS(harness::ExperimentConfig::from(c), ValidationError);
}

TEST_CASE("repeated runs are byte identical, worker count does not matter") {
  const auto dir = testing::scratch("repro");
  const auto a = harness::run(harness::ExperimentConfig::from(fmm_config(dir / "a")));
  const auto b = harness::run(harness::ExperimentConfig::from(fmm_config(dir / "b")));
  auto c4 = fmm_config(dir / "c");
  c4.set("execution.workers", "4");
  const auto c = harness::run(harness::ExperimentConfig::from(c4));
  REQUIRE(a.complete);
  REQUIRE_FALSE(a.outputs.empty());
  for (const auto& f : a.outputs) {
    const auto ref = testing::slurp(dir / "a" / f.path);
    CHECK(!ref.empty());
    CHECK(ref == testing::slurp(dir / "b" / f.path));
    CHECK(ref == testing::slurp(dir / "c" / f.path));
  }
  // manifest completeness: every referenced output exists and parses
  const auto manifest = io::json::parse(testing::slurp(dir / "a" / "manifest.json"));
  CHECK(manifest.at("schema") == io::schema_version);
  CHECK(manifest.at("complete") == true);
  for (const auto& f : manifest.at("outputs")) CHECK(fs::exists(dir / "a" / f.at("path").get<std::string>()));
  const auto fit = io::json::parse(testing::slurp(dir / "a" / "fmm_fit.json"));
  CHECK(fit.at("schema") == io::schema_version);

  const auto report = harness::replay(dir / "a" / "manifest.json", dir / "replay", 2u);
  CHECK(report.identical());
}

TEST_CASE("json output format") {
  const auto dir = testing::scratch("json");
  auto c = fmm_config(dir / "run");
  c.set("execution.format", "json");
  const auto m = harness::run(harness::ExperimentConfig::from(c));
  for (const auto& f : m.outputs) {
    const auto doc = io::json::parse(testing::slurp(dir / "run" / f.path));
    CHECK(doc.at("schema") == io::schema_version);
  }
}

TEST_CASE("failures after validation leave an incomplete manifest") {
  const auto dir = testing::scratch("partial");
  // E = 0 is an eigenvalue of the clean 3-site path; a real-energy solve must fail
  auto c = harness::Config::parse(
      "diagnostic.name = green\ntopology.kind = lattice\ntopology.sides = 3\n"
      "disorder.lambda = 0\ndiagnostic.energy = 0\ndiagnostic.eps = 0\n");
  c.set("execution.output", (dir / "run").string());
  CHECK_THROWS_AS(harness::run(harness::ExperimentConfig::from(c)), NumericalError);
  const auto manifest = io::json::parse(testing::slurp(dir / "run" / "manifest.json"));
  CHECK(manifest.at("complete") == false);
  CHECK(manifest.at("error").get<std::string>().find("resolvent") != std::string::npos);
}

TEST_CASE("sweep validation") {
  const auto dir = testing::scratch("sweep_bad");
  const auto cfg = harness::ExperimentConfig::from(fmm_config(dir));
  CHECK_THROWS_AS(harness::sweep(cfg, "disorder.lambda", {}), ValidationError);
  CHECK_THROWS_AS(harness::sweep(cfg, "topology.sides", {"10", "20"}), ValidationError);
  CHECK_THROWS_AS(harness::sweep(cfg, "diagnostic.nothing", {"1"}), ValidationError);
  CHECK_THROWS_AS(harness::sweep(cfg, "disorder.lambda", {"1", "-3"}), ValidationError);
}

TEST_CASE("lambda sweep: fitted decay steepens with disorder") {
  const auto dir = testing::scratch("sweep_lambda");
  const auto result = harness::sweep(harness::ExperimentConfig::from(fmm_config(dir)), "disorder.lambda",
                                     {"0.5", "2", "8"});
  REQUIRE(result.runs.size() == 3);
  CHECK(fs::exists(result.summary_path));
  CHECK(result.summary.rows.size() == 3);
  const double r0 = result.runs[0].headline.at("rate");
  const double r1 = result.runs[1].headline.at("rate");
  const double r2 = result.runs[2].headline.at("rate");
  CHECK(r1 < r0);
  CHECK(r2 < r1);
  CHECK(result.runs[0].config.master_seed != result.runs[1].config.master_seed);
}

TEST_CASE("s sweep records the a-priori constants") {
  const auto dir = testing::scratch("sweep_s");
  auto c = fmm_config(dir);
  c.set("execution.n_samples", "5");
  const auto result = harness::sweep(harness::ExperimentConfig::from(c), "diagnostic.s", {"0.25", "0.5", "0.75"});
  const DisorderSpec law{UniformLaw{0, 1}, 6.0, 0};
  const double ss[] = {0.25, 0.5, 0.75};
  for (int i = 0; i < 3; ++i) {
    const double got = result.runs[i].headline.at("apriori_constant");
    CHECK(got == doctest::Approx(apriori_constant(law, ss[i])));
    // closed form at beta = 1/2: 2 (1/2)^{1-s} / (1-s)
    CHECK(got == doctest::Approx(2.0 * std::pow(0.5, 1.0 - ss[i]) / (1.0 - ss[i])).epsilon(1e-6));
  }
}

TEST_CASE("every diagnostic runs from a small config") {
  const auto dir = testing::scratch("all");
  const std::map<std::string, std::string> configs = {
      {"spectrum", "topology.kind = lattice\ntopology.sides = 30\ndiagnostic.energies = -1, 0, 1\nexecution.n_samples = 3\n"},
      {"green", "topology.kind = lattice\ntopology.sides = 6, 6\n"},
      {"saw", "topology.kind = lattice\ntopology.sides = 3, 3\n"},
      {"tree", "topology.kind = bethe\ntopology.branching = 2\ntopology.depth = 4\n"},
      {"popdyn", "diagnostic.pool_size = 1000\ndiagnostic.sweeps = 20\ndisorder.lambda = 0.5\n"},
      {"wegner", "topology.kind = lattice\ntopology.sides = 20\ndiagnostic.side = 5\nexecution.n_samples = 50\n"},
      {"goodbox", "topology.kind = lattice\ntopology.sides = 12\ndiagnostic.side = 6\nexecution.n_samples = 20\n"},
      {"msa", "diagnostic.max_steps = 1\nexecution.n_samples = 10\ndisorder.lambda = 20\n"},
      {"fmm", "topology.kind = lattice\ntopology.sides = 30\nexecution.n_samples = 10\n"},
      {"dynamics", "topology.kind = lattice\ntopology.sides = 41\nexecution.n_samples = 3\ndiagnostic.t_steps = 10\n"},
  };
  CHECK(configs.size() == harness::available_diagnostics().size());
  for (const auto& [name, text] : configs) {
    CAPTURE(name);
    auto c = harness::Config::parse(text);
    c.set("diagnostic.name", name);
    c.set("execution.output", (dir / name).string());
    const auto m = harness::run(harness::ExperimentConfig::from(c));
    CHECK(m.complete);
    for (const auto& f : m.outputs) CHECK(fs::file_size(dir / name / f.path) > 0);
  }
}
