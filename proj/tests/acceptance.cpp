// Acceptance checks. `acceptance N` runs criterion N and prints one
// PASS/FAIL line; with no argument every criterion runs in turn.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "anderson/criteria.hpp"
#include "anderson/dynamics.hpp"
#include "anderson/error.hpp"
#include "anderson/green.hpp"
#include "anderson/harness.hpp"
#include "support.hpp"

using namespace anderson;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

PotentialSample flat(const Topology& t) { return {std::vector<double>(t.vertex_count(), 0.0), 0}; }

fs::path workdir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "anderson_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome c1() {
  auto path = Topology::lattice({2000});
  const auto ev = eigenvalues(assemble_hamiltonian(path, flat(path), 0.0));
  const double exact = 2.0 * std::cos(std::numbers::pi / 2001.0);
  const double top = ev(ev.size() - 1);
  const double err = std::max(std::abs(top - exact), std::abs(ev(0) + exact));
  const auto hull = spectrum_hull(DisorderSpec{UniformLaw{0, 1}, 0.0, 0}, path, 1);
  const bool ok = err <= 1e-6 && hull.theory_min == -2.0 && hull.theory_max == 2.0 &&
                  hull.empirical_min >= -2.0 && hull.empirical_max <= 2.0 && 2.0 - hull.empirical_max < 1e-5;
  return {ok, fmt("max eigenvalue %.12f, |error| %.2e vs 2cos(pi/2001); hull [%.7f, ...]", top, err, hull.empirical_min)};
}

Outcome c2() {
  auto tree = Topology::bethe(2, 12);
  const auto h = assemble_hamiltonian(tree, flat(tree), 0.0);
  const auto ex = extreme_eigenvalues(h);
  const double r = 2.0 * std::sqrt(2.0);
  const bool ok = ex.max >= r - 0.05 && ex.max <= r;
  return {ok, fmt("top eigenvalue %.6f (Lanczos, %g iterations), target [%.6f, 2sqrt2]", ex.max, ex.iterations, r - 0.05)};
}

Outcome c3() {
  auto path = Topology::lattice({2000});
  const auto hull = spectrum_hull(DisorderSpec{UniformLaw{0, 1}, 1.0, 3}, path, 20);
  const bool ok = std::abs(hull.empirical_min + 2.0) <= 0.05 && std::abs(hull.empirical_max - 3.0) <= 0.05;
  return {ok, fmt("empirical hull [%.4f, %.4f], target [-2, 3] within 0.05", hull.empirical_min, hull.empirical_max)};
}

Outcome c4() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 2);
  const Complex zs[] = {{0, 1}, {0, 2}, {0.5, 0.1}};
  double worst = 0.0;
  std::size_t pairs = 0;
  for (int inst = 0; inst < 100; ++inst) {
    Topology t = Topology::lattice({2});
    switch (pick(rng)) {
      case 0: t = Topology::lattice({std::uniform_int_distribution<int>(2, 12)(rng)}); break;
      case 1: t = Topology::lattice({std::uniform_int_distribution<int>(2, 3)(rng), std::uniform_int_distribution<int>(2, 4)(rng)}); break;
      default: t = std::uniform_int_distribution<int>(0, 1)(rng) ? Topology::bethe(2, 2) : Topology::bethe(3, 1); break;
    }
    DisorderSpec spec{UniformLaw{-1, 1}, std::uniform_real_distribution<double>(0.5, 3.0)(rng), rng()};
    const auto conv = inst % 2 ? Convention::laplacian : Convention::adjacency;
    const auto h = assemble_hamiltonian(t, sample_potential(spec, t, 0), spec.lambda, conv);
    const ComplexEnergy z{zs[inst % 3].real(), zs[inst % 3].imag()};
    const Eigen::MatrixXcd ref = testing::inverse_shifted(h.dense(), z.z());
    const auto n = h.dimension();
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < n; ++y) {
        const auto s = saw_expansion(h, z, x, y);
        worst = std::max(worst, std::abs(s.value - ref(x, y)) / std::abs(ref(x, y)));
        ++pairs;
      }
    }
  }
  return {worst <= 1e-10, fmt("worst relative error %.2e over %g entries of 100 graphs", worst, static_cast<double>(pairs))};
}

Outcome c5() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int k = std::uniform_int_distribution<int>(2, 3)(rng);
    const int depth = std::uniform_int_distribution<int>(1, 5)(rng);
    auto tree = Topology::bethe(k, depth);
    DisorderSpec spec{UniformLaw{-1, 1}, std::uniform_real_distribution<double>(0.0, 4.0)(rng), rng()};
    const auto pot = sample_potential(spec, tree, 0);
    const ComplexEnergy z{std::uniform_real_distribution<double>(-3, 3)(rng), std::uniform_real_distribution<double>(0.05, 1)(rng)};
    const auto tg = tree_green_recursive(tree, pot, spec.lambda, z);
    const Eigen::MatrixXcd ref = testing::inverse_shifted(assemble_hamiltonian(tree, pot, spec.lambda).dense(), z.z());
    for (VertexId v = 0; v < tree.vertex_count(); ++v) {
      const Complex d = ref(0, static_cast<Eigen::Index>(v));
      worst = std::max(worst, std::abs(tg.root_to(tree, v) - d) / std::abs(d));
    }
  }
  return {worst <= 1e-12, fmt("worst relative error %.2e, root and every path product", worst)};
}

Outcome c6() {
  PopulationParams p;
  p.branching = 2;
  p.z = {0.0, 1e-3};
  p.pool_size = 10000;
  p.sweeps = 50;
  const auto r = population_dynamics(p, DisorderSpec{UniformLaw{0, 1}, 0.0, 6});
  const double target = 1.0 / std::sqrt(2.0);
  const double rel = std::abs(r.mean_im - target) / target;
  return {rel <= 0.01, fmt("mean Im G %.6f vs 1/sqrt2, relative deviation %.2e", r.mean_im, rel)};
}

Outcome c7() {
  std::mt19937_64 rng(7);
  std::size_t violations = 0;
  double worst = 0.0;
  int trials = 0;
  while (trials < 1000) {
    Topology t = std::uniform_int_distribution<int>(0, 1)(rng)
                     ? Topology::lattice({std::uniform_int_distribution<int>(3, 200)(rng)})
                     : Topology::lattice({std::uniform_int_distribution<int>(3, 14)(rng), std::uniform_int_distribution<int>(3, 14)(rng)});
    DisorderSpec spec{UniformLaw{0, 1}, std::uniform_real_distribution<double>(0.0, 3.0)(rng), rng()};
    const auto h = assemble_hamiltonian(t, sample_potential(spec, t, 0), spec.lambda, Convention::laplacian);
    const int side = std::uniform_int_distribution<int>(1, 12)(rng);
    const auto center = std::uniform_int_distribution<VertexId>(0, t.vertex_count() - 1)(rng);
    const auto hs = restrict_to(h, box_region(t, center, side));
    const auto ev = eigenvalues(hs);
    ComplexEnergy z{std::uniform_real_distribution<double>(-1.0, 12.0)(rng), 0.0};
    if (std::uniform_int_distribution<int>(0, 1)(rng)) {
      z.eps = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    } else if ((ev.array() - z.energy).abs().minCoeff() < 0.05) {
      continue;  // real energy too close to the spectrum for a clean trial
    }
    const auto n = hs.dimension();
    const auto x = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    const auto y = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    const double eps_ct = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto r = combes_thomas_check(hs, t, z, x, y, eps_ct);
    violations += r.violated;
    worst = std::max(worst, r.lhs / r.rhs);
    ++trials;
  }
  return {violations == 0, fmt("%g violations in 1000 trials, worst lhs/rhs %.3f", static_cast<double>(violations), worst)};
}

Outcome c8() {
  auto one = Topology::lattice({1});
  const std::size_t n = 10000;
  const auto single = wegner_estimate(DisorderSpec{UniformLaw{0, 1}, 1.0, 8}, one, Region({0}), 0.5, 0.1, n);
  const double sigma = std::sqrt(0.2 * 0.8 / static_cast<double>(n));
  const bool single_ok = std::abs(single.mean - 0.2) <= 3.0 * sigma;

  auto box = Topology::lattice({10});
  std::vector<VertexId> all(10);
  for (VertexId v = 0; v < 10; ++v) all[v] = v;
  const std::vector<double> etas{0.002, 0.005, 0.01, 0.02, 0.05};
  const auto est = wegner_sweep(DisorderSpec{UniformLaw{0, 1}, 1.0, 9}, box, Region(all), 0.5, etas, 20000);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    xs.push_back(std::log(etas[i]));
    ys.push_back(est[i].mean);
  }
  const auto fit = log_linear_fit(xs, ys);
  const bool slope_ok = std::abs(fit.rate - 1.0) <= 0.15;
  return {single_ok && slope_ok,
          fmt("single vertex %.4f (3 sigma = %.4f); eta exponent %.3f", single.mean, 3.0 * sigma, fit.rate)};
}

Outcome c9() {
  DisorderSpec law{UniformLaw{0, 1}, 1.0, 0};
  const double a = std::abs(apriori_integral(law, 0.5, 0.5) - 2.0 * std::sqrt(2.0));
  const double b = std::abs(apriori_integral(law, 0.5, 10.0) - 2.0 * (std::sqrt(10.0) - 3.0));
  return {a <= 1e-6 && b <= 1e-6, fmt("|error| %.2e at beta=1/2, %.2e at beta=10", a, b)};
}

Outcome c10() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    Eigen::MatrixXd h0(20, 20);
    for (int i = 0; i < 20; ++i) {
      for (int j = i; j < 20; ++j) h0(i, j) = h0(j, i) = u(rng);
    }
    const auto a = std::uniform_int_distribution<Eigen::Index>(0, 19)(rng);
    auto b = std::uniform_int_distribution<Eigen::Index>(0, 18)(rng);
    if (b >= a) ++b;
    Eigen::MatrixXd w(2, 2);
    w(0, 0) = 2 * u(rng);
    w(1, 1) = 2 * u(rng);
    w(0, 1) = w(1, 0) = u(rng);
    const Complex z{2 * u(rng), 0.05 + std::abs(u(rng))};
    worst = std::max(worst, krein_rank2_check(h0, {a, b}, w, z).residual);
  }
  return {worst <= 1e-10, fmt("worst residual %.2e over 100 instances", worst)};
}

harness::Config fmm_config(const fs::path& out) {
  auto c = harness::Config::parse(
      "diagnostic.name = fmm\n"
      "topology.kind = lattice\ntopology.sides = 400\n"
      "disorder.family = uniform\ndisorder.lambda = 10\ndisorder.seed = 11\n"
      "diagnostic.energy = 0\ndiagnostic.eps = 0.001\ndiagnostic.s = 0.3333333333333333\n"
      "diagnostic.x = 200\ndiagnostic.max_distance = 15\n"
      "execution.n_samples = 500\n");
  c.set("execution.output", out.string());
  return c;
}

Outcome c11() {
  const auto m = harness::run(harness::ExperimentConfig::from(fmm_config(workdir("c11"))));
  const double rate = m.headline.at("rate");
  const double r2 = m.headline.at("r_squared");
  return {rate < -0.1 && r2 >= 0.9, fmt("fitted rate %.4f, R^2 %.4f (500 realizations)", rate, r2)};
}

harness::Config dynamics_config(const fs::path& out, double lambda) {
  auto c = harness::Config::parse(
      "diagnostic.name = dynamics\n"
      "topology.kind = lattice\ntopology.sides = 300\n"
      "disorder.family = uniform\ndisorder.seed = 12\n"
      "diagnostic.fit_max_distance = 15\ndiagnostic.t_max = 50\ndiagnostic.t_steps = 25\n"
      "execution.n_samples = 50\n");
  c.set("disorder.lambda", io::format_double(lambda));
  c.set("execution.output", out.string());
  return c;
}

Outcome c12() {
  const auto loc = harness::run(harness::ExperimentConfig::from(dynamics_config(workdir("c12_loc"), 5.0)));
  const auto clean = harness::run(harness::ExperimentConfig::from(dynamics_config(workdir("c12_clean"), 0.0)));
  const double rate = loc.headline.at("correlator_rate");
  const double r2 = loc.headline.at("correlator_r_squared");
  const double clean_rate = clean.headline.at("correlator_rate");
  return {rate < -0.05 && r2 >= 0.9 && std::abs(clean_rate) < 0.01,
          fmt("lambda=5 rate %.4f R^2 %.4f; lambda=0 rate %.5f", rate, r2, clean_rate)};
}

Outcome c13() {
  const int n = 1000;
  auto t = Topology::lattice({n});
  const VertexId origin = n / 2;
  const auto pos = position_norms(t, origin);
  const double horizon = light_cone_horizon(t, origin);
  Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(n);
  delta(origin) = 1.0;

  std::vector<double> grid;
  for (double s = 5.0; s <= 50.0 + 1e-9; s += 2.5) grid.push_back(s);
  const auto clean = eigendecompose(assemble_hamiltonian(t, flat(t), 0.0));
  const auto ballistic = transport_moment(clean, EnergyWindow::everything(), delta, 2.0, grid, pos, horizon);
  std::vector<double> lt;
  for (double s : grid) lt.push_back(std::log(s));
  // slope of log value against log t
  const auto fit = log_linear_fit(lt, ballistic.values);

  DisorderSpec spec{UniformLaw{0, 1}, 5.0, 13};
  const auto d = eigendecompose(assemble_hamiltonian(t, sample_potential(spec, t, 0), spec.lambda));
  std::vector<double> all_t;
  for (int k = 0; k <= 400; ++k) all_t.push_back(0.25 * k);
  const auto loc = transport_moment(d, EnergyWindow::everything(), delta, 2.0, all_t, pos, horizon);
  const double at1 = loc.values[4];
  const double sup = *std::max_element(loc.values.begin(), loc.values.end());
  const bool ok = std::abs(fit.rate - 2.0) <= 0.2 && !ballistic.beyond_horizon && sup <= 50.0 * at1;
  return {ok, fmt("lambda=0 log-log slope %.4f (horizon t=%.0f); lambda=5 sup/value(t=1) = %.2f", fit.rate, horizon,
                  sup / at1)};
}

Outcome c14() {
  std::mt19937_64 rng(14);
  double worst_split = 0.0;
  double worst_formula = 0.0;
  int done = 0;
  while (done < 100) {
    Topology t = std::uniform_int_distribution<int>(0, 1)(rng)
                     ? Topology::lattice({std::uniform_int_distribution<int>(6, 60)(rng)})
                     : Topology::lattice({std::uniform_int_distribution<int>(4, 9)(rng), std::uniform_int_distribution<int>(4, 9)(rng)});
    const auto conv = done % 2 ? Convention::laplacian : Convention::adjacency;
    DisorderSpec spec{UniformLaw{0, 1}, std::uniform_real_distribution<double>(0.5, 4.0)(rng), rng()};
    const auto h = assemble_hamiltonian(t, sample_potential(spec, t, 0), spec.lambda, conv);
    const auto center = std::uniform_int_distribution<VertexId>(0, t.vertex_count() - 1)(rng);
    const Region region = box_region(t, center, std::uniform_int_distribution<int>(1, 5)(rng));
    if (region.size() == t.vertex_count()) continue;
    worst_split = std::max(worst_split, boundary_operator(h, region).residual);
    const auto dec = eigendecompose(h);
    const auto k = std::uniform_int_distribution<Eigen::Index>(0, dec.values.size() - 1)(rng);
    const auto ev = eigenvalues(restrict_to(h, region));
    if ((ev.array() - dec.values(k)).abs().minCoeff() < 1e-6) continue;
    worst_formula = std::max(worst_formula, boundary_formula_check(h, region, dec.values(k), dec.vectors.col(k)));
    ++done;
  }
  return {worst_split == 0.0 && worst_formula <= 1e-8,
          fmt("decomposition residual %.1e, boundary formula residual %.2e over 100 instances", worst_split, worst_formula)};
}

Outcome c15() {
  std::vector<std::string> notes;
  bool ok = true;
  auto check = [&](const harness::Config& config, const std::string& tag) {
    const auto base = workdir("c15_" + tag);
    auto c = config;
    c.set("execution.output", (base / "serial").string());
    c.set("execution.workers", "1");
    harness::run(harness::ExperimentConfig::from(c));
    const auto serial = harness::replay(base / "serial" / "manifest.json", base / "replay_serial", 1u);
    const auto parallel = harness::replay(base / "serial" / "manifest.json", base / "replay_parallel", 4u);
    ok = ok && serial.identical() && parallel.identical();
    notes.push_back(tag + (serial.identical() && parallel.identical() ? " identical" : " DIFFERS"));
  };
  check(fmm_config(""), "fmm");
  check(dynamics_config("", 5.0), "dynamics");
  auto w = harness::Config::parse(
      "diagnostic.name = wegner\ntopology.kind = lattice\ntopology.sides = 10\n"
      "diagnostic.energy = 0.5\ndiagnostic.etas = 0.002, 0.005, 0.01, 0.02, 0.05\nexecution.n_samples = 20000\n");
  check(w, "wegner");
  std::string detail = "manifest replays (1 and 4 workers): ";
  for (std::size_t i = 0; i < notes.size(); ++i) detail += (i ? ", " : "") + notes[i];
  return {ok, detail};
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {"adjacency spectrum of the path", 60, c1},
      {"Bethe truncation top eigenvalue", 60, c2},
      {"deterministic spectrum hull", 120, c3},
      {"self-avoiding walk identity", 60, c4},
      {"tree recursion", 60, c5},
      {"population dynamics fixed point", 60, c6},
      {"Combes-Thomas bound", 120, c7},
      {"Wegner estimate", 120, c8},
      {"a-priori integral", 60, c9},
      {"Krein rank-two formula", 60, c10},
      {"fractional moment decay", 300, c11},
      {"eigenfunction correlator decay", 300, c12},
      {"transport contrast", 300, c13},
      {"boundary decomposition and formula", 60, c14},
      {"reproducibility", 600, c15},
  };
  return list;
}

bool run_one(std::size_t index) {
  const auto& c = criteria()[index - 1];
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = c.run();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs <= c.budget_seconds;
  const bool pass = out.pass && in_time;
  std::printf("criterion %zu (%s): %s | %s | %.1f s of %.0f s\n", index, c.name, pass ? "PASS" : "FAIL",
              out.detail.c_str(), secs, c.budget_seconds);
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) {
    const auto index = static_cast<std::size_t>(std::stoul(argv[1]));
    if (index < 1 || index > criteria().size()) {
      std::fprintf(stderr, "criterion must be 1..%zu\n", criteria().size());
      return 2;
    }
    return run_one(index) ? 0 : 1;
  }
  bool all = true;
  for (std::size_t i = 1; i <= criteria().size(); ++i) all = run_one(i) && all;
  return all ? 0 : 1;
}
