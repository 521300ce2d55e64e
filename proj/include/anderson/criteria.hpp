#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anderson/green.hpp"
#include "anderson/operator.hpp"
#include "anderson/topology.hpp"

namespace anderson {

/// Monte-Carlo estimate of a probabilistic quantity.
struct DiagnosticEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  ///< sample sd / sqrt(n)
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::optional<double> bound_value;
  std::optional<bool> bound_satisfied;
  std::string bound_label;  ///< what the bound is, or why it does not apply
};

/// Builds an estimate from per-realization values (pairwise summation).
DiagnosticEstimate make_estimate(const std::vector<double>& samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Wegner

/// dist(E, sigma(H_region)) for realization r.
double spectral_distance(const DisorderSpec& spec, const Topology& topology, const Region& region,
                         double energy, std::uint64_t realization,
                         Convention convention = Convention::adjacency);

/// P(dist(E, sigma(H_region)) < eta) compared with the model bound
/// (rho_max / lambda) 2 eta |region|.
DiagnosticEstimate wegner_estimate(const DisorderSpec& spec, const Topology& topology,
                                   const Region& region, double energy, double eta,
                                   std::size_t n_samples, unsigned workers = 1,
                                   Convention convention = Convention::adjacency);

/// The same event for several eta with common random numbers.
std::vector<DiagnosticEstimate> wegner_sweep(const DisorderSpec& spec, const Topology& topology,
                                             const Region& region, double energy,
                                             const std::vector<double>& etas, std::size_t n_samples,
                                             unsigned workers = 1,
                                             Convention convention = Convention::adjacency);

/// P(exists E within eta of both spectra) = P(min gap between the spectra < 2 eta),
/// compared with (rho_max / lambda) 4 eta |region1| |region2|.
DiagnosticEstimate wegner_between_boxes(const DisorderSpec& spec, const Topology& topology,
                                        const Region& first, const Region& second, double eta,
                                        std::size_t n_samples, unsigned workers = 1,
                                        Convention convention = Convention::adjacency);

// ---------------------------------------------------------------------------
// Good boxes and the multiscale schedule

struct GoodBoxParams {
  double energy = 0.0;
  int side = 4;
  double mass = 0.1;  ///< decay rate m
  VertexId center = 0;
};

/// Largest |G_box(E; x, y)| over x in the core Lambda_{floor(L/2)}(u) and y
/// in the inner boundary. +infinity when E is within 1e-12 of sigma(H_box).
double good_box_statistic(const Hamiltonian& h_full, const Topology& topology,
                          const GoodBoxParams& params);

/// Whether the statistic exceeds e^{-m L / 2}.
bool box_is_good(double statistic, const GoodBoxParams& params);

/// p_{E,L,m,u} = P(box not (m, E)-good).
DiagnosticEstimate good_box_probability(const DisorderSpec& spec, const Topology& topology,
                                        const GoodBoxParams& params, std::size_t n_samples,
                                        unsigned workers = 1,
                                        Convention convention = Convention::adjacency);

struct MsaParams {
  int initial_scale = 10;
  double alpha = 1.5;
  double beta = 3.0;
  int max_steps = 2;
};

/// L_0 and L_{k+1} = L_k^alpha, each rounded up to the next odd integer.
std::vector<int> msa_schedule(const MsaParams& params);

struct MsaScale {
  int side = 0;
  DiagnosticEstimate estimate;
  double target = 0.0;  ///< L^{-beta}
  bool satisfied = false;
};

struct MsaRun {
  std::vector<int> schedule;
  std::vector<MsaScale> scales;
  bool truncated = false;  ///< a scale exceeded the dense budget
  std::string note;
};

/// Runs good_box_probability at every feasible scale on a d-dimensional open
/// lattice of side L+2 with the box centred.
MsaRun msa_scale_run(const DisorderSpec& spec, int dimension, const MsaParams& params,
                     double mass, double energy, std::size_t n_samples, unsigned workers = 1,
                     std::size_t dense_budget = 4096);

// ---------------------------------------------------------------------------
// Fractional moments

struct FractionalMomentParams {
  double s = 0.5;
  ComplexEnergy z{0.0, 1e-3};
};

/// E|G(z; x, y)|^s. For x = y with an absolutely continuous law the a-priori
/// bound C1 / lambda^s is attached.
DiagnosticEstimate fractional_moment(const DisorderSpec& spec, const Topology& topology,
                                     const FractionalMomentParams& params, VertexId x, VertexId y,
                                     std::size_t n_samples, unsigned workers = 1);

/// E|G(z; x, y)|^s for many y from one solve per realization.
std::vector<DiagnosticEstimate> fractional_moment_profile(const DisorderSpec& spec,
                                                          const Topology& topology,
                                                          const FractionalMomentParams& params,
                                                          VertexId x, const std::vector<VertexId>& ys,
                                                          std::size_t n_samples, unsigned workers = 1);

/// int rho(v) / |v - beta|^s dv for the uniform density of the law.
double apriori_integral(const DisorderSpec& law, double s, std::complex<double> beta);

/// sup over beta of apriori_integral: the constant C1 in E|G(x,x)|^s <= C1 / lambda^s.
double apriori_constant(const DisorderSpec& law, double s);

struct DecouplingResult {
  double c2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<std::pair<double, double>> excluded;  ///< grid points with RHS < 1e-14
};

/// Smallest C2 with int |v-b|^{-s} rho <= C2 int |v-a|^s |v-b|^{-s} rho on the grid.
DecouplingResult decoupling_check(const DisorderSpec& law, double s, const std::vector<double>& alpha_grid,
                                  const std::vector<double>& beta_grid);

/// int |v - a|^{power_a} |v - b|^{-s} rho(v) dv for the uniform law.
double weighted_singular_integral(const DisorderSpec& law, double s, std::complex<double> beta,
                                  double power_a, std::complex<double> a);

// ---------------------------------------------------------------------------

struct DecayFit {
  double rate = 0.0;  ///< slope of log(value); decay is negative
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares of log(value) against distance. Needs >= 4 positive values.
DecayFit decay_rate_fit(const std::vector<double>& distances, const std::vector<double>& values);

/// Same without the minimum point count (used internally by profile fits).
DecayFit log_linear_fit(const std::vector<double>& xs, const std::vector<double>& values);

}  // namespace anderson
