#include "anderson/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anderson/error.hpp"
#include "anderson/parallel.hpp"

namespace anderson {

namespace {

void require_samples(std::size_t n, const char* who) {
  if (n < 2) throw ValidationError(std::string(who) + ": n_samples must be >= 2");
}

Eigen::VectorXd region_spectrum(const DisorderSpec& spec, const Topology& topology, const Region& region,
                                std::uint64_t realization, Convention convention) {
  const auto pot = sample_potential(spec, topology, realization);
  const auto h = assemble_hamiltonian(topology, pot, spec.lambda, convention);
  return eigenvalues(restrict_to(h, region));
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

DiagnosticEstimate make_estimate(const std::vector<double>& samples, std::uint64_t seed) {
  if (samples.size() < 2) throw ValidationError("estimate: needs n_samples >= 2 for a standard error");
  const auto ms = mean_stderr(samples);
  DiagnosticEstimate est;
  est.mean = ms.mean;
  est.stderr_ = ms.stderr_;
  est.n_samples = samples.size();
  est.seed = seed;
  return est;
}

// ---------------------------------------------------------------------------

double spectral_distance(const DisorderSpec& spec, const Topology& topology, const Region& region,
                         double energy, std::uint64_t realization, Convention convention) {
  const auto ev = region_spectrum(spec, topology, region, realization, convention);
  return (ev.array() - energy).abs().minCoeff();
}

std::vector<DiagnosticEstimate> wegner_sweep(const DisorderSpec& spec, const Topology& topology,
                                             const Region& region, double energy,
                                             const std::vector<double>& etas, std::size_t n_samples,
                                             unsigned workers, Convention convention) {
  require_samples(n_samples, "wegner_estimate");
  spec.validate();
  for (double eta : etas) {
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("wegner_estimate: eta must lie in (0, 1]");
  }
  std::vector<double> distances(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t r) {
    distances[r] = spectral_distance(spec, topology, region, energy, r, convention);
  });
  std::vector<DiagnosticEstimate> out;
  std::vector<double> events(n_samples);
  for (double eta : etas) {
    for (std::size_t r = 0; r < n_samples; ++r) events[r] = distances[r] < eta ? 1.0 : 0.0;
    auto est = make_estimate(events, spec.seed);
    if (!spec.absolutely_continuous()) {
      est.bound_label = "not applicable: single-site law has no density";
    } else if (spec.lambda == 0.0) {
      est.bound_label = "not applicable: lambda = 0";
    } else {
      est.bound_value = spec.density_sup() / spec.lambda * 2.0 * eta * static_cast<double>(region.size());
      est.bound_satisfied = est.mean <= *est.bound_value + 3.0 * est.stderr_;
      est.bound_label = "model bound rho_max/lambda*2*eta*|region|";
    }
    out.push_back(std::move(est));
  }
  return out;
}

DiagnosticEstimate wegner_estimate(const DisorderSpec& spec, const Topology& topology,
                                   const Region& region, double energy, double eta,
                                   std::size_t n_samples, unsigned workers, Convention convention) {
  return wegner_sweep(spec, topology, region, energy, {eta}, n_samples, workers, convention).front();
}

DiagnosticEstimate wegner_between_boxes(const DisorderSpec& spec, const Topology& topology,
                                        const Region& first, const Region& second, double eta,
                                        std::size_t n_samples, unsigned workers, Convention convention) {
  require_samples(n_samples, "wegner_between_boxes");
  spec.validate();
  if (!(eta > 0.0)) throw ValidationError("wegner_between_boxes: eta must be > 0");
  for (VertexId v : first.vertices) {
    if (second.contains(v)) throw ValidationError("wegner_between_boxes: the boxes overlap at vertex " + std::to_string(v));
  }
  std::vector<double> events(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t r) {
    const auto pot = sample_potential(spec, topology, r);
    const auto h = assemble_hamiltonian(topology, pot, spec.lambda, convention);
    const auto s1 = eigenvalues(restrict_to(h, first));
    const auto s2 = eigenvalues(restrict_to(h, second));
    // Both spectra are sorted: merge-walk for the smallest gap.
    double gap = std::numeric_limits<double>::infinity();
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    while (i < s1.size() && j < s2.size()) {
      gap = std::min(gap, std::abs(s1(i) - s2(j)));
      if (s1(i) < s2(j)) ++i; else ++j;
    }
    events[r] = gap < 2.0 * eta ? 1.0 : 0.0;
  });
  auto est = make_estimate(events, spec.seed);
  if (spec.absolutely_continuous() && spec.lambda > 0.0) {
    est.bound_value = spec.density_sup() / spec.lambda * 4.0 * eta * static_cast<double>(first.size()) *
                      static_cast<double>(second.size());
    est.bound_satisfied = est.mean <= *est.bound_value + 3.0 * est.stderr_;
    est.bound_label = "model bound rho_max/lambda*4*eta*|region1|*|region2|";
  } else {
    est.bound_label = "not applicable: needs a density and lambda > 0";
  }
  return est;
}

// ---------------------------------------------------------------------------

double good_box_statistic(const Hamiltonian& h_full, const Topology& topology, const GoodBoxParams& params) {
  if (params.side < 4) throw ValidationError("good_box: L must be >= 4");
  const Region box = box_region(topology, params.center, params.side);
  const Region core = box_region(topology, params.center, params.side / 2);
  const auto boundary = boundary_sets(topology, box);
  if (boundary.region_is_whole_graph || boundary.inner.empty()) {
    throw ValidationError("good_box: the box must sit strictly inside the topology");
  }
  const Hamiltonian h_box = restrict_to(h_full, box);
  const auto ev = eigenvalues(h_box);
  if ((ev.array() - params.energy).abs().minCoeff() < 1e-12) {
    return std::numeric_limits<double>::infinity();
  }
  const Resolvent resolvent(h_box, {params.energy, 0.0}, true);
  std::vector<Eigen::Index> core_rows;
  for (VertexId v : core.vertices) core_rows.push_back(*h_box.local_index(v));
  double worst = 0.0;
  for (VertexId y : boundary.inner) {
    const auto column = resolvent.column(*h_box.local_index(y));
    for (Eigen::Index x : core_rows) worst = std::max(worst, std::abs(column(x)));
  }
  return worst;
}

bool box_is_good(double statistic, const GoodBoxParams& params) {
  return statistic <= std::exp(-params.mass * params.side / 2.0);
}

DiagnosticEstimate good_box_probability(const DisorderSpec& spec, const Topology& topology,
                                        const GoodBoxParams& params, std::size_t n_samples,
                                        unsigned workers, Convention convention) {
  require_samples(n_samples, "good_box_probability");
  spec.validate();
  if (!(params.mass > 0.0)) throw ValidationError("good_box: m must be > 0");
  std::vector<double> bad(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t r) {
    const auto pot = sample_potential(spec, topology, r);
    const auto h = assemble_hamiltonian(topology, pot, spec.lambda, convention);
    bad[r] = box_is_good(good_box_statistic(h, topology, params), params) ? 0.0 : 1.0;
  });
  return make_estimate(bad, spec.seed);
}

std::vector<int> msa_schedule(const MsaParams& params) {
  if (!(params.alpha > 1.0 && params.alpha < 2.0)) {
    throw ValidationError("msa: alpha must lie in the open interval (1, 2)");
  }
  if (params.initial_scale < 1) throw ValidationError("msa: L0 must be >= 1");
  if (params.max_steps < 0) throw ValidationError("msa: k_max must be >= 0");
  auto next_odd = [](double x) {
    auto v = static_cast<long long>(std::ceil(x - 1e-9));
    if (v % 2 == 0) ++v;
    return v;
  };
  std::vector<int> schedule;
  long long scale = next_odd(params.initial_scale);
  for (int k = 0; k <= params.max_steps; ++k) {
    if (scale > std::numeric_limits<int>::max()) break;
    schedule.push_back(static_cast<int>(scale));
    scale = next_odd(std::pow(static_cast<double>(scale), params.alpha));
  }
  return schedule;
}

MsaRun msa_scale_run(const DisorderSpec& spec, int dimension, const MsaParams& params, double mass,
                     double energy, std::size_t n_samples, unsigned workers, std::size_t dense_budget) {
  if (dimension < 1) throw ValidationError("msa: dimension must be >= 1");
  if (!(params.beta > 2.0 * dimension)) throw ValidationError("msa: beta must be > 2d");
  MsaRun run;
  run.schedule = msa_schedule(params);
  for (int side : run.schedule) {
    const double volume = std::pow(static_cast<double>(side), dimension);
    if (volume > static_cast<double>(dense_budget)) {
      run.truncated = true;
      run.note = "scale L=" + std::to_string(side) + " has box volume " + fmt_double(volume) +
                 " above the dense budget " + std::to_string(dense_budget) + "; run truncated";
      break;
    }
    const auto topology = Topology::lattice(std::vector<int>(static_cast<std::size_t>(dimension), side + 2));
    const std::vector<int> middle(static_cast<std::size_t>(dimension), (side + 1) / 2);
    GoodBoxParams gb{energy, side, mass, topology.vertex_at(middle)};
    MsaScale scale;
    scale.side = side;
    scale.estimate = good_box_probability(spec, topology, gb, n_samples, workers);
    scale.target = std::pow(static_cast<double>(side), -params.beta);
    scale.satisfied = scale.estimate.mean <= scale.target;
    run.scales.push_back(std::move(scale));
  }
  return run;
}

// ---------------------------------------------------------------------------

std::vector<DiagnosticEstimate> fractional_moment_profile(const DisorderSpec& spec, const Topology& topology,
                                                          const FractionalMomentParams& params, VertexId x,
                                                          const std::vector<VertexId>& ys,
                                                          std::size_t n_samples, unsigned workers) {
  require_samples(n_samples, "fractional_moment");
  spec.validate();
  if (!(params.s > 0.0 && params.s < 1.0)) throw ValidationError("fractional_moment: s must lie in (0, 1)");
  if (!(params.z.eps > 0.0)) throw ValidationError("fractional_moment: eps must be > 0");
  if (x >= topology.vertex_count()) throw ValidationError("fractional_moment: x out of range");
  for (VertexId y : ys) {
    if (y >= topology.vertex_count()) throw ValidationError("fractional_moment: y out of range");
  }
  std::vector<std::vector<double>> samples(ys.size(), std::vector<double>(n_samples));
  parallel_for(n_samples, workers, [&](std::size_t r) {
    const auto pot = sample_potential(spec, topology, r);
    const auto h = assemble_hamiltonian(topology, pot, spec.lambda);
    // G is symmetric, so column x holds G(x, y) for every y.
    const auto column = green_column(h, params.z, static_cast<Eigen::Index>(x));
    for (std::size_t i = 0; i < ys.size(); ++i) samples[i][r] = std::pow(std::abs(column(ys[i])), params.s);
  });
  std::vector<DiagnosticEstimate> out;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    auto est = make_estimate(samples[i], spec.seed);
    if (ys[i] == x) {
      if (spec.absolutely_continuous() && spec.lambda > 0.0) {
        est.bound_value = apriori_constant(spec, params.s) / std::pow(spec.lambda, params.s);
        est.bound_satisfied = est.mean <= *est.bound_value + 3.0 * est.stderr_;
        est.bound_label = "a-priori bound C1/lambda^s";
      } else {
        est.bound_label = "not applicable: needs a density and lambda > 0";
      }
    }
    out.push_back(std::move(est));
  }
  return out;
}

DiagnosticEstimate fractional_moment(const DisorderSpec& spec, const Topology& topology,
                                     const FractionalMomentParams& params, VertexId x, VertexId y,
                                     std::size_t n_samples, unsigned workers) {
  return fractional_moment_profile(spec, topology, params, x, {y}, n_samples, workers).front();
}

}  // namespace anderson
