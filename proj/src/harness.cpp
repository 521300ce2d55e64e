#include "anderson/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "anderson/criteria.hpp"
#include "anderson/dynamics.hpp"
#include "anderson/error.hpp"
#include "anderson/green.hpp"
#include "anderson/parallel.hpp"
#include "anderson/rng.hpp"

namespace anderson::harness {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, value);
  if (r.ec != std::errc() || r.ptr != end) throw ValidationError(key + ": expected a number, got '" + text + "'");
  return value;
}

template <class Int>
Int parse_integer(const std::string& key, const std::string& text) {
  Int value = 0;
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, value);
  if (r.ec != std::errc() || r.ptr != end) throw ValidationError(key + ": expected an integer, got '" + text + "'");
  return value;
}

// Typed access to a Config that remembers which keys a diagnostic reads and
// whether it reads them as scalars or lists.
class Params {
 public:
  explicit Params(const Config& config) : config_(config) {}

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    used_[key] = true;
    if (config_.has(key)) return config_.get(key);
    if (!fallback) throw ValidationError(key + ": required");
    return *fallback;
  }

  std::string choice(const std::string& key, const std::vector<std::string>& options,
                     std::optional<std::string> fallback = std::nullopt) {
    const std::string v = text(key, std::move(fallback));
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      throw ValidationError(key + ": must be one of {" + join(options, ", ") + "}, got '" + v + "'");
    }
    return v;
  }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
    used_[key] = true;
    if (config_.has(key)) return parse_double(key, config_.get(key));
    if (!fallback) throw ValidationError(key + ": required");
    return *fallback;
  }

  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    used_[key] = true;
    if (config_.has(key)) return parse_integer<long long>(key, config_.get(key));
    if (!fallback) throw ValidationError(key + ": required");
    return *fallback;
  }

  std::uint64_t u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    used_[key] = true;
    if (config_.has(key)) return parse_integer<std::uint64_t>(key, config_.get(key));
    if (!fallback) throw ValidationError(key + ": required");
    return *fallback;
  }

  std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    used_[key] = false;
    if (!config_.has(key)) {
      if (!fallback) throw ValidationError(key + ": required");
      return *fallback;
    }
    std::vector<double> out;
    for (const auto& item : split_list(config_.get(key))) out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<int> ints(const std::string& key) {
    used_[key] = false;
    if (!config_.has(key)) throw ValidationError(key + ": required");
    std::vector<int> out;
    for (const auto& item : split_list(config_.get(key))) out.push_back(parse_integer<int>(key, item));
    if (out.empty()) throw ValidationError(key + ": must not be empty");
    return out;
  }

  void mark(const std::string& key) { used_[key] = true; }
  const std::map<std::string, bool>& used() const noexcept { return used_; }

  void reject_unknown() const {
    for (const auto& [key, value] : config_.entries()) {
      if (!used_.count(key)) throw ValidationError(key + ": not a parameter of this run");
    }
  }

 private:
  const Config& config_;
  std::map<std::string, bool> used_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ValidationError(key + ": " + what);
}

Topology build_topology(Params& p) {
  const std::string kind = p.choice("topology.kind", {"lattice", "bethe", "delone"});
  try {
    if (kind == "lattice") {
      auto sides = p.ints("topology.sides");
      const auto b = p.choice("topology.boundary", {"open", "periodic"}, "open");
      return Topology::lattice(std::move(sides), b == "periodic" ? Boundary::periodic : Boundary::open);
    }
    if (kind == "bethe") {
      return Topology::bethe(static_cast<int>(p.integer("topology.branching")),
                             static_cast<int>(p.integer("topology.depth")));
    }
    auto sides = p.ints("topology.sides");
    return Topology::delone(std::move(sides), static_cast<int>(p.integer("topology.radius", 1)),
                            p.u64("topology.seed", 0));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("topology: ") + e.what());
  }
}

DisorderSpec build_disorder(Params& p, std::uint64_t seed) {
  DisorderSpec spec;
  const std::string family = p.choice("disorder.family", {"uniform", "bernoulli", "discrete"}, "uniform");
  if (family == "uniform") {
    spec.law = UniformLaw{p.real("disorder.a", 0.0), p.real("disorder.b", 1.0)};
  } else if (family == "bernoulli") {
    spec.law = BernoulliLaw{p.real("disorder.p", 0.5)};
  } else {
    spec.law = DiscreteLaw{p.reals("disorder.values"), p.reals("disorder.probs")};
  }
  spec.lambda = p.real("disorder.lambda", 1.0);
  spec.seed = seed;
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("disorder: ") + e.what());
  }
  return spec;
}

Convention build_convention(Params& p) {
  return p.choice("diagnostic.convention", {"adjacency", "laplacian"}, "adjacency") == "laplacian"
             ? Convention::laplacian
             : Convention::adjacency;
}

VertexId center_vertex(const Topology& t) {
  if (t.kind() == TopologyKind::bethe) return 0;
  std::vector<int> c;
  for (int side : t.sides()) c.push_back(side / 2);
  return t.vertex_at(c);
}

VertexId vertex_param(Params& p, const std::string& key, const Topology& t, VertexId fallback) {
  const auto v = p.u64(key, fallback);
  require(v < t.vertex_count(), key, "vertex id out of range [0, " + std::to_string(t.vertex_count()) + ")");
  return static_cast<VertexId>(v);
}

ComplexEnergy energy_params(Params& p, double default_eps) {
  ComplexEnergy z{p.real("diagnostic.energy", 0.0), p.real("diagnostic.eps", default_eps)};
  require(std::isfinite(z.energy), "diagnostic.energy", "must be finite");
  require(z.eps >= 0.0 && std::isfinite(z.eps), "diagnostic.eps", "must be finite and >= 0");
  return z;
}

// Lowest-id vertex at each exact distance 1..max from x.
std::vector<VertexId> probes_by_distance(const Topology& t, VertexId x, std::size_t max_distance,
                                         const std::string& key) {
  std::vector<VertexId> out(max_distance, t.vertex_count());
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    const auto d = t.distance(x, v);
    if (d >= 1 && d <= max_distance && out[d - 1] == t.vertex_count()) out[d - 1] = v;
  }
  for (std::size_t d = 0; d < max_distance; ++d) {
    require(out[d] != t.vertex_count(), key, "no vertex at distance " + std::to_string(d + 1));
  }
  return out;
}

json fit_json(const DecayFit& fit) {
  return {{"rate", fit.rate}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
}

struct Product {
  std::vector<std::pair<std::string, io::Table>> tables;
  std::vector<std::pair<std::string, json>> documents;
  json headline = json::object();
};

struct Context {
  const ExperimentConfig& config;
  Params& params;
  std::uint64_t seed;  // diagnostic stream key
};

void require_ensemble(const Context& c) {
  require(c.config.n_samples >= 2, "execution.n_samples", "must be >= 2 for an estimate with a standard error");
}

using Job = std::function<Product()>;
using Prepare = Job (*)(Context&);

Job prepare_spectrum(Context& c) {
  auto topo = build_topology(c.params);
  auto spec = build_disorder(c.params, c.seed);
  auto energies = c.params.reals("diagnostic.energies", std::vector<double>{});
  const auto n = c.config.n_samples;
  const auto workers = c.config.workers;
  return [=] {
    Product out;
    const auto hull = spectrum_hull(spec, topo, n, workers);
    io::Table t{{"realizations", "empirical_min", "empirical_max", "theory_min", "theory_max"}, {}};
    t.add({hull.realizations, hull.empirical_min, hull.empirical_max, hull.theory_min, hull.theory_max});
    out.tables.emplace_back("spectrum", std::move(t));
    if (!energies.empty()) {
      io::Table ids{{"energy", "value", "stderr"}, {}};
      for (const auto& pt : ids_estimate(spec, topo, energies, n, workers)) ids.add({pt.energy, pt.value, pt.stderr_});
      out.tables.emplace_back("ids", std::move(ids));
    }
    out.headline = {{"empirical_min", hull.empirical_min}, {"empirical_max", hull.empirical_max},
                    {"theory_min", hull.theory_min}, {"theory_max", hull.theory_max}};
    return out;
  };
}

Job prepare_green(Context& c) {
  auto topo = build_topology(c.params);
  auto spec = build_disorder(c.params, c.seed);
  const auto convention = build_convention(c.params);
  const auto realization = c.params.u64("diagnostic.realization", 0);
  const auto z = energy_params(c.params, 1e-3);
  const auto source = vertex_param(c.params, "diagnostic.source", topo, center_vertex(topo));
  return [=] {
    Product out;
    const auto h = assemble_hamiltonian(topo, sample_potential(spec, topo, realization), spec.lambda, convention);
    const Eigen::VectorXcd col = green_column(h, z, static_cast<Eigen::Index>(source));
    out.tables.emplace_back("green_column", io::green_column_table(col, topo, source));
    const double sw = col.squaredNorm();
    out.documents.emplace_back("green_summary", json{{"source", source},
                                                     {"realization", realization},
                                                     {"energy", z.energy},
                                                     {"eps", z.eps},
                                                     {"convention", to_string(convention)},
                                                     {"simon_wolff_sum", sw}});
    out.headline = {{"abs_g_source", std::abs(col(static_cast<Eigen::Index>(source)))}, {"simon_wolff_sum", sw}};
    return out;
  };
}

Job prepare_saw(Context& c) {
  auto topo = build_topology(c.params);
  if (topo.vertex_count() > saw_vertex_cap) {
    throw BudgetError("topology: saw expansion needs at most " + std::to_string(saw_vertex_cap) + " vertices");
  }
  auto spec = build_disorder(c.params, c.seed);
  const auto convention = build_convention(c.params);
  const auto realization = c.params.u64("diagnostic.realization", 0);
  const auto z = energy_params(c.params, 1.0);
  const auto x = vertex_param(c.params, "diagnostic.x", topo, 0);
  const auto y = vertex_param(c.params, "diagnostic.y", topo, topo.vertex_count() - 1);
  return [=] {
    Product out;
    const auto h = assemble_hamiltonian(topo, sample_potential(spec, topo, realization), spec.lambda, convention);
    const auto saw = saw_expansion(h, z, static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    const Complex direct = dense_resolvent(h.dense(), z.z())(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    const double rel = std::abs(saw.value - direct) / std::max(std::abs(direct), 1e-300);
    io::Table t{{"x", "y", "saw_re", "saw_im", "direct_re", "direct_im", "walks", "rel_error"}, {}};
    t.add({x, y, saw.value.real(), saw.value.imag(), direct.real(), direct.imag(), saw.walks, rel});
    out.tables.emplace_back("saw", std::move(t));
    out.headline = {{"walks", saw.walks}, {"rel_error", rel}};
    return out;
  };
}

Job prepare_tree(Context& c) {
  auto topo = build_topology(c.params);
  require(topo.kind() == TopologyKind::bethe, "topology.kind", "tree recursion needs kind = bethe");
  auto spec = build_disorder(c.params, c.seed);
  const auto realization = c.params.u64("diagnostic.realization", 0);
  const auto z = energy_params(c.params, 1e-3);
  require(z.eps > 0.0, "diagnostic.eps", "must be > 0");
  return [=] {
    Product out;
    const auto potential = sample_potential(spec, topo, realization);
    const auto tg = tree_green_recursive(topo, potential, spec.lambda, z);
    const bool oracle = topo.vertex_count() <= static_cast<std::size_t>(default_dense_cap);
    Eigen::MatrixXcd dense;
    if (oracle) dense = dense_resolvent(assemble_hamiltonian(topo, potential, spec.lambda).dense(), z.z());
    io::Table t{{"vertex", "depth", "re", "im", "dense_re", "dense_im", "rel_error"}, {}};
    double worst = 0.0;
    for (VertexId v = 0; v < topo.vertex_count(); ++v) {
      const Complex g = tg.root_to(topo, v);
      if (oracle) {
        const Complex d = dense(0, static_cast<Eigen::Index>(v));
        const double rel = std::abs(g - d) / std::max(std::abs(d), 1e-300);
        worst = std::max(worst, rel);
        t.add({v, topo.depth_of(v), g.real(), g.imag(), d.real(), d.imag(), rel});
      } else {
        t.add({v, topo.depth_of(v), g.real(), g.imag(), nullptr, nullptr, nullptr});
      }
    }
    out.tables.emplace_back("tree", std::move(t));
    out.headline = {{"root_re", tg.root().real()}, {"root_im", tg.root().imag()},
                    {"max_rel_error", oracle ? json(worst) : json(nullptr)}};
    return out;
  };
}

Job prepare_popdyn(Context& c) {
  auto spec = build_disorder(c.params, c.seed);
  PopulationParams pp;
  pp.branching = static_cast<int>(c.params.integer("diagnostic.branching", 2));
  pp.z = energy_params(c.params, 1e-3);
  const auto pool = c.params.integer("diagnostic.pool_size", 10000);
  const auto sweeps = c.params.integer("diagnostic.sweeps", 50);
  const auto bins = c.params.integer("diagnostic.bins", 50);
  pp.s = c.params.real("diagnostic.s", 0.5);
  pp.init = c.params.choice("diagnostic.init", {"clean_fixed_point", "constant_i"}, "clean_fixed_point") ==
                    "constant_i"
                ? PoolInit::constant_i
                : PoolInit::clean_fixed_point;
  require(pp.branching >= 2, "diagnostic.branching", "must be >= 2");
  require(pool >= 1000, "diagnostic.pool_size", "must be >= 1000");
  require(sweeps >= 20, "diagnostic.sweeps", "must be >= 20");
  require(bins >= 1, "diagnostic.bins", "must be >= 1");
  require(pp.s > 0.0 && pp.s < 1.0, "diagnostic.s", "must lie in (0, 1)");
  require(pp.z.eps > 0.0, "diagnostic.eps", "must be > 0");
  pp.pool_size = static_cast<std::size_t>(pool);
  pp.sweeps = static_cast<std::size_t>(sweeps);
  pp.histogram_bins = static_cast<std::size_t>(bins);
  return [=] {
    Product out;
    const auto result = population_dynamics(pp, spec);
    out.tables.emplace_back("popdyn_histogram", io::histogram_table(result));
    out.documents.emplace_back("popdyn_summary", io::population_summary(result, pp, spec));
    out.headline = {{"mean_im_g", result.mean_im}, {"drift", result.drift}, {"converged", result.converged}};
    return out;
  };
}

Region region_param(Params& p, const Topology& topo) {
  if (!p.text("diagnostic.side", std::string{}).empty()) {
    const auto side = p.integer("diagnostic.side");
    require(side >= 1, "diagnostic.side", "must be >= 1");
    const auto center = vertex_param(p, "diagnostic.center", topo, center_vertex(topo));
    return box_region(topo, center, static_cast<int>(side));
  }
  std::vector<VertexId> all(topo.vertex_count());
  for (VertexId v = 0; v < all.size(); ++v) all[v] = v;
  return Region(std::move(all));
}

Job prepare_wegner(Context& c) {
  require_ensemble(c);
  auto topo = build_topology(c.params);
  auto spec = build_disorder(c.params, c.seed);
  const auto convention = build_convention(c.params);
  const double energy = c.params.real("diagnostic.energy", 0.0);
  const auto etas = c.params.reals("diagnostic.etas", std::vector<double>{0.01, 0.02, 0.05, 0.1});
  require(!etas.empty(), "diagnostic.etas", "must not be empty");
  for (double eta : etas) require(eta > 0.0, "diagnostic.etas", "every eta must be > 0");
  const auto region = region_param(c.params, topo);
  const auto n = c.config.n_samples;
  const auto workers = c.config.workers;
  return [=] {
    Product out;
    const auto estimates = wegner_sweep(spec, topo, region, energy, etas, n, workers, convention);
    auto t = io::estimate_table();
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < etas.size(); ++i) {
      io::add_estimate_row(t, "eta=" + io::format_double(etas[i]), estimates[i]);
      if (estimates[i].mean > 0.0) {
        xs.push_back(std::log(etas[i]));
        ys.push_back(estimates[i].mean);
      }
    }
    out.tables.emplace_back("wegner", std::move(t));
    out.headline["region_size"] = region.size();
    out.headline["eta_exponent"] = xs.size() >= 2 ? json(log_linear_fit(xs, ys).rate) : json(nullptr);
    return out;
  };
}

Job prepare_goodbox(Context& c) {
  require_ensemble(c);
  auto topo = build_topology(c.params);
  auto spec = build_disorder(c.params, c.seed);
  const auto convention = build_convention(c.params);
  GoodBoxParams gp;
  gp.energy = c.params.real("diagnostic.energy", 0.0);
  gp.side = static_cast<int>(c.params.integer("diagnostic.side", 4));
  gp.mass = c.params.real("diagnostic.mass", 0.1);
  gp.center = vertex_param(c.params, "diagnostic.center", topo, center_vertex(topo));
  require(gp.side >= 4, "diagnostic.side", "must be >= 4");
  require(gp.mass > 0.0, "diagnostic.mass", "must be > 0");
  const auto n = c.config.n_samples;
  const auto workers = c.config.workers;
  return [=] {
    Product out;
    const auto e = good_box_probability(spec, topo, gp, n, workers, convention);
    auto t = io::estimate_table();
    io::add_estimate_row(t, "side=" + std::to_string(gp.side) + " mass=" + io::format_double(gp.mass), e);
    out.tables.emplace_back("goodbox", std::move(t));
    out.headline = {{"not_good_probability", e.mean}, {"stderr", e.stderr_}};
    return out;
  };
}

Job prepare_msa(Context& c) {
  require_ensemble(c);
  auto spec = build_disorder(c.params, c.seed);
  MsaParams mp;
  const int dimension = static_cast<int>(c.params.integer("diagnostic.dimension", 1));
  mp.initial_scale = static_cast<int>(c.params.integer("diagnostic.initial_scale", 10));
  mp.alpha = c.params.real("diagnostic.alpha", 1.5);
  mp.beta = c.params.real("diagnostic.beta", 3.0);
  mp.max_steps = static_cast<int>(c.params.integer("diagnostic.max_steps", 2));
  const double mass = c.params.real("diagnostic.mass", 0.1);
  const double energy = c.params.real("diagnostic.energy", 0.0);
  const auto budget = c.params.integer("diagnostic.dense_budget", 4096);
  require(dimension >= 1, "diagnostic.dimension", "must be >= 1");
  require(mp.initial_scale >= 4, "diagnostic.initial_scale", "must be >= 4");
  require(mp.alpha > 1.0, "diagnostic.alpha", "must be > 1");
  require(mp.beta > 2.0 * dimension, "diagnostic.beta", "must be > 2 * diagnostic.dimension");
  require(mp.max_steps >= 0, "diagnostic.max_steps", "must be >= 0");
  require(mass > 0.0, "diagnostic.mass", "must be > 0");
  require(budget >= 1, "diagnostic.dense_budget", "must be >= 1");
  const auto n = c.config.n_samples;
  const auto workers = c.config.workers;
  return [=] {
    Product out;
    const auto run = msa_scale_run(spec, dimension, mp, mass, energy, n, workers, static_cast<std::size_t>(budget));
    io::Table t{{"side", "mean", "stderr", "n", "seed", "target", "satisfied"}, {}};
    for (const auto& s : run.scales) {
      t.add({s.side, s.estimate.mean, s.estimate.stderr_, s.estimate.n_samples, s.estimate.seed, s.target,
             s.satisfied});
    }
    out.tables.emplace_back("msa", std::move(t));
    out.documents.emplace_back("msa_schedule", json{{"schedule", run.schedule},
                                                    {"truncated", run.truncated},
                                                    {"note", run.note}});
    out.headline = {{"scales_run", run.scales.size()}, {"truncated", run.truncated}};
    return out;
  };
}

Job prepare_fmm(Context& c) {
  require_ensemble(c);
  auto topo = build_topology(c.params);
  auto spec = build_disorder(c.params, c.seed);
  FractionalMomentParams fp;
  fp.s = c.params.real("diagnostic.s", 0.5);
  fp.z = energy_params(c.params, 1e-3);
  require(fp.s > 0.0 && fp.s < 1.0, "diagnostic.s", "must lie in (0, 1)");
  require(fp.z.eps > 0.0, "diagnostic.eps", "must be > 0");
  const auto x = vertex_param(c.params, "diagnostic.x", topo, center_vertex(topo));
  const auto max_distance = c.params.integer("diagnostic.max_distance", 15);
  require(max_distance >= 4, "diagnostic.max_distance", "must be >= 4 for a decay fit");
  auto ys = probes_by_distance(topo, x, static_cast<std::size_t>(max_distance), "diagnostic.max_distance");
  const auto n = c.config.n_samples;
  const auto workers = c.config.workers;
  return [=] {
    Product out;
    const auto estimates = fractional_moment_profile(spec, topo, fp, x, ys, n, workers);
    auto t = io::estimate_table();
    std::vector<double> ds, means;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      io::add_estimate_row(t, "distance=" + std::to_string(i + 1) + " y=" + std::to_string(ys[i]), estimates[i]);
      ds.push_back(static_cast<double>(i + 1));
      means.push_back(estimates[i].mean);
    }
    out.tables.emplace_back("fmm", std::move(t));
    const auto fit = decay_rate_fit(ds, means);
    out.headline = {{"rate", fit.rate}, {"r_squared", fit.r_squared}, {"s", fp.s}, {"lambda", spec.lambda}};
    if (std::holds_alternative<UniformLaw>(spec.law)) out.headline["apriori_constant"] = apriori_constant(spec, fp.s);
    out.documents.emplace_back("fmm_fit", fit_json(fit));
    return out;
  };
}

Job prepare_dynamics(Context& c) {
  require_ensemble(c);
  auto topo = build_topology(c.params);
  auto spec = build_disorder(c.params, c.seed);
  EnergyWindow window{c.params.real("diagnostic.window_lo", -std::numeric_limits<double>::infinity()),
                      c.params.real("diagnostic.window_hi", std::numeric_limits<double>::infinity())};
  require(window.lo <= window.hi, "diagnostic.window_lo", "must be <= diagnostic.window_hi");
  const auto origin = vertex_param(c.params, "diagnostic.origin", topo, center_vertex(topo));
  const double t_max = c.params.real("diagnostic.t_max", 50.0);
  const auto steps = c.params.integer("diagnostic.t_steps", 50);
  const double p = c.params.real("diagnostic.p", 2.0);
  const double profile_energy = c.params.real("diagnostic.profile_energy", 0.0);
  const auto fit_distance = c.params.integer("diagnostic.fit_max_distance", 15);
  require(t_max > 0.0, "diagnostic.t_max", "must be > 0");
  require(steps >= 1, "diagnostic.t_steps", "must be >= 1");
  require(p >= 0.0, "diagnostic.p", "must be >= 0");
  require(fit_distance >= 4, "diagnostic.fit_max_distance", "must be >= 4");
  if (topo.vertex_count() > static_cast<std::size_t>(default_dense_cap)) {
    throw BudgetError("topology: dynamics needs a full eigendecomposition (at most 4096 vertices)");
  }
  const auto n = c.config.n_samples;
  const auto workers = c.config.workers;
  return [=] {
    std::vector<double> grid;
    for (long long k = 0; k <= steps; ++k) grid.push_back(t_max * static_cast<double>(k) / static_cast<double>(steps));
    const auto positions = position_norms(topo, origin);
    const double horizon = light_cone_horizon(topo, origin);
    const auto nv = topo.vertex_count();
    const auto o = static_cast<Eigen::Index>(origin);

    std::vector<std::vector<double>> q(n), sup(n), transport(n);
    std::vector<EigenfunctionProfile> profiles(n);
    std::vector<double> profile_energies(n);
    parallel_for(n, workers, [&](std::size_t r) {
      const auto h = assemble_hamiltonian(topo, sample_potential(spec, topo, r), spec.lambda);
      const auto d = eigendecompose(h);
      const Eigen::VectorXd row = correlator_row(d, window, o);
      q[r].assign(row.data(), row.data() + row.size());
      // sup over the grid of |<delta_y, e^{-itH} chi_I delta_origin>| for all y at once
      Eigen::VectorXd in_window(d.values.size());
      for (Eigen::Index k = 0; k < d.values.size(); ++k) in_window(k) = window.contains(d.values(k)) ? 1.0 : 0.0;
      Eigen::VectorXd best = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
      for (double t : grid) {
        Eigen::VectorXcd w(d.values.size());
        for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = std::polar(in_window(k) * d.vectors(o, k), -t * d.values(k));
        best = best.cwiseMax((d.vectors.cast<Complex>() * w).cwiseAbs());
      }
      sup[r].assign(best.data(), best.data() + best.size());
      Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(nv));
      delta(o) = 1.0;
      transport[r] = transport_moment(d, window, delta, p, grid, positions, horizon).values;
      Eigen::Index k0 = 0;
      (d.values.array() - profile_energy).abs().minCoeff(&k0);
      profile_energies[r] = d.values(k0);
      profiles[r] = eigenfunction_profile(d.vectors.col(k0), topo, 1.0);
    });

    auto column_stats = [&](const std::vector<std::vector<double>>& rows, std::size_t j) {
      std::vector<double> xs(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) xs[r] = rows[r][j];
      return mean_stderr(xs);
    };

    Product out;
    io::Table corr{{"y", "distance", "q_mean", "q_stderr", "sup_kernel_mean", "sup_kernel_stderr"}, {}};
    std::vector<std::vector<double>> by_distance(static_cast<std::size_t>(fit_distance));
    for (VertexId y = 0; y < nv; ++y) {
      const auto qs = column_stats(q, y);
      const auto ss = column_stats(sup, y);
      const auto dist = topo.distance(origin, y);
      corr.add({y, dist, qs.mean, qs.stderr_, ss.mean, ss.stderr_});
      if (dist >= 1 && dist <= by_distance.size()) by_distance[dist - 1].push_back(qs.mean);
    }
    out.tables.emplace_back("correlator", std::move(corr));

    io::Table tr{{"t", "mean", "stderr"}, {}};
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto s = column_stats(transport, j);
      tr.add({grid[j], s.mean, s.stderr_});
    }
    out.tables.emplace_back("transport", std::move(tr));

    std::vector<double> ds, qm;
    for (std::size_t i = 0; i < by_distance.size(); ++i) {
      if (by_distance[i].empty()) continue;
      ds.push_back(static_cast<double>(i + 1));
      qm.push_back(pairwise_sum(by_distance[i]) / static_cast<double>(by_distance[i].size()));
    }
    const auto fit = decay_rate_fit(ds, qm);

    json prof = json::array();
    for (std::size_t r = 0; r < n; ++r) prof.push_back(io::profile_to_json(profiles[r], profile_energies[r]));
    out.documents.emplace_back("dynamics_summary", json{{"horizon", horizon},
                                                        {"beyond_horizon", grid.back() > horizon},
                                                        {"correlator_fit", fit_json(fit)},
                                                        {"profiles", std::move(prof)}});
    out.headline = {{"correlator_rate", fit.rate}, {"correlator_r_squared", fit.r_squared}, {"horizon", horizon}};
    return out;
  };
}

const std::map<std::string, Prepare>& registry() {
  static const std::map<std::string, Prepare> table = {
      {"spectrum", prepare_spectrum}, {"green", prepare_green},     {"saw", prepare_saw},
      {"tree", prepare_tree},         {"popdyn", prepare_popdyn},   {"wegner", prepare_wegner},
      {"goodbox", prepare_goodbox},   {"msa", prepare_msa},         {"fmm", prepare_fmm},
      {"dynamics", prepare_dynamics},
  };
  return table;
}

void mark_common(Params& p) {
  for (const char* key : {"diagnostic.name", "disorder.seed", "execution.n_samples", "execution.workers",
                          "execution.output", "execution.format"}) {
    p.mark(key);
  }
}

// Validates everything and returns the job without doing any work.
Job prepare(const ExperimentConfig& config, Params& params) {
  mark_common(params);
  Context ctx{config, params, diagnostic_seed(config.master_seed, config.diagnostic)};
  Job job = registry().at(config.diagnostic)(ctx);
  params.reject_unknown();
  return job;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("execution.output: cannot write " + path.string());
  out << content;
  if (!out) throw ValidationError("execution.output: write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string seed_rule() {
  return "diagnostic_seed = hash(master_seed, fnv1a(diagnostic)); potential(r, v) = "
         "F^-1(unit(hash(hash(diagnostic_seed, 0x706f74656e7469, r), v))) for realization r and vertex v; "
         "hash = splitmix64 chaining, unit = top 53 bits / 2^53";
}

void write_manifest(const RunManifest& m) {
  write_file(m.config.output / "manifest.json", m.to_json().dump(2) + "\n");
}

}  // namespace

// ---------------------------------------------------------------------------

Config Config::parse(std::string_view text) {
  Config c;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (c.has(key)) throw ValidationError(where + ": duplicate key '" + key + "'");
    c.set(key, trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const fs::path& path) { return parse(read_file(path)); }

const std::string& Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ValidationError(key + ": required");
  return it->second;
}

std::string Config::text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::vector<std::string> available_diagnostics() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

std::uint64_t diagnostic_seed(std::uint64_t master_seed, const std::string& diagnostic) {
  return hash_keys(master_seed, hash_name(diagnostic));
}

ExperimentConfig ExperimentConfig::from(const Config& config) {
  ExperimentConfig e;
  e.values = config;
  Params p(config);
  e.diagnostic = p.text("diagnostic.name");
  if (!registry().count(e.diagnostic)) {
    throw ValidationError("diagnostic.name: unknown diagnostic '" + e.diagnostic + "'; available: " +
                          join(available_diagnostics(), ", "));
  }
  e.master_seed = p.u64("disorder.seed", 0);
  const auto n = p.integer("execution.n_samples", 100);
  require(n >= 1, "execution.n_samples", "must be >= 1");
  e.n_samples = static_cast<std::size_t>(n);
  const auto w = p.integer("execution.workers", 1);
  require(w >= 1 && w <= 1024, "execution.workers", "must lie in [1, 1024]");
  e.workers = static_cast<unsigned>(w);
  e.output = p.text("execution.output", std::string("out"));
  require(!e.output.empty(), "execution.output", "must not be empty");
  e.format = p.choice("execution.format", {"csv", "json"}, "csv") == "json" ? io::Format::json : io::Format::csv;
  return e;
}

json RunManifest::to_json() const {
  json doc;
  doc["schema"] = io::schema_version;
  doc["version"] = version_tag;
  doc["diagnostic"] = config.diagnostic;
  doc["config"] = config.values.entries();
  doc["master_seed"] = config.master_seed;
  doc["diagnostic_seed"] = diagnostic_seed(config.master_seed, config.diagnostic);
  doc["seed_rule"] = seed_rule();
  doc["n_samples"] = config.n_samples;
  doc["workers"] = config.workers;
  json files = json::array();
  for (const auto& f : outputs) files.push_back({{"name", f.name}, {"path", f.path}});
  doc["outputs"] = std::move(files);
  doc["headline"] = headline;
  doc["wall_clock_seconds"] = wall_clock_seconds;
  doc["complete"] = complete;
  if (!error.empty()) doc["error"] = error;
  return doc;
}

RunManifest RunManifest::from_json(const json& doc) {
  try {
    Config c;
    for (const auto& [k, v] : doc.at("config").items()) c.set(k, v.get<std::string>());
    RunManifest m;
    m.config = ExperimentConfig::from(c);
    for (const auto& f : doc.at("outputs")) m.outputs.push_back({f.at("name"), f.at("path")});
    m.headline = doc.value("headline", json::object());
    m.wall_clock_seconds = doc.value("wall_clock_seconds", 0.0);
    m.complete = doc.value("complete", false);
    m.error = doc.value("error", std::string{});
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

RunManifest run(const ExperimentConfig& config) {
  Params params(config.values);
  Job job = prepare(config, params);

  std::error_code ec;
  fs::create_directories(config.output, ec);
  if (ec) throw ValidationError("execution.output: cannot create " + config.output.string() + ": " + ec.message());

  RunManifest m;
  m.config = config;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  try {
    Product product = job();
    const char* ext = config.format == io::Format::json ? ".json" : ".csv";
    for (const auto& [name, table] : product.tables) {
      std::ostringstream s;
      io::write_table(s, table, config.format);
      write_file(config.output / (name + ext), s.str());
      m.outputs.push_back({name, name + ext});
    }
    for (auto& [name, doc] : product.documents) {
      doc["schema"] = io::schema_version;
      write_file(config.output / (name + ".json"), doc.dump(2) + "\n");
      m.outputs.push_back({name, name + ".json"});
    }
    m.headline = std::move(product.headline);
    m.complete = true;
  } catch (const std::exception& e) {
    m.error = e.what();
    m.wall_clock_seconds = elapsed();
    write_manifest(m);
    throw;
  }
  m.wall_clock_seconds = elapsed();
  write_manifest(m);
  return m;
}

SweepResult sweep(const ExperimentConfig& config, const std::string& path, const std::vector<std::string>& values) {
  if (values.empty()) throw ValidationError("sweep.values: must not be empty");
  if (path == "diagnostic.name" || path == "execution.output") {
    throw ValidationError("sweep.path: '" + path + "' cannot be swept");
  }
  {
    Params probe(config.values);
    prepare(config, probe);
    const auto it = probe.used().find(path);
    if (it == probe.used().end()) {
      throw ValidationError("sweep.path: '" + path + "' is not a parameter of diagnostic '" + config.diagnostic + "'");
    }
    if (!it->second) throw ValidationError("sweep.path: '" + path + "' is a list, not a scalar");
  }
  SweepResult result;
  std::vector<ExperimentConfig> subs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Config c = config.values;
    c.set(path, values[i]);
    c.set("disorder.seed", std::to_string(hash_keys(config.master_seed, i)));
    c.set("execution.output", (config.output / ("sweep_" + std::to_string(i))).string());
    subs.push_back(ExperimentConfig::from(c));
    Params check(subs.back().values);
    prepare(subs.back(), check);
  }
  for (const auto& sub : subs) result.runs.push_back(run(sub));

  std::set<std::string> keys;
  for (const auto& r : result.runs) {
    for (const auto& [k, v] : r.headline.items()) keys.insert(k);
  }
  result.summary.columns = {"index", "value", "seed"};
  result.summary.columns.insert(result.summary.columns.end(), keys.begin(), keys.end());
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    std::vector<json> row{i, values[i], result.runs[i].config.master_seed};
    for (const auto& k : keys) {
      const auto& h = result.runs[i].headline;
      if (!h.contains(k)) {
        row.emplace_back(nullptr);
      } else if (h[k].is_structured()) {
        row.emplace_back(h[k].dump());
      } else {
        row.push_back(h[k]);
      }
    }
    result.summary.add(std::move(row));
  }
  const char* ext = config.format == io::Format::json ? ".json" : ".csv";
  result.summary_path = config.output / (std::string("sweep_summary") + ext);
  std::ostringstream s;
  io::write_table(s, result.summary, config.format);
  write_file(result.summary_path, s.str());
  return result;
}

ReplayReport replay(const fs::path& manifest_path, const fs::path& output, std::optional<unsigned> workers) {
  json doc;
  try {
    doc = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ValidationError("manifest: " + std::string(e.what()));
  }
  const RunManifest original = RunManifest::from_json(doc);
  if (!original.complete) throw ValidationError("manifest: the recorded run is incomplete");
  Config c = original.config.values;
  c.set("execution.output", output.string());
  if (workers) c.set("execution.workers", std::to_string(*workers));
  ReplayReport report;
  report.manifest = run(ExperimentConfig::from(c));
  const fs::path base = manifest_path.parent_path();
  for (const auto& f : original.outputs) {
    const fs::path a = base / f.path;
    const fs::path b = output / f.path;
    if (!fs::exists(a) || !fs::exists(b) || read_file(a) != read_file(b)) report.mismatched.push_back(f.name);
  }
  return report;
}

}  // namespace anderson::harness
