#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "anderson/operator.hpp"
#include "anderson/topology.hpp"

namespace anderson {

/// Closed energy window I = [lo, hi] for the spectral projection chi_I(H).
struct EnergyWindow {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double e) const noexcept { return e >= lo && e <= hi; }
  static EnergyWindow everything() { return {}; }
};

struct EvolutionState {
  Eigen::VectorXcd amplitudes;
  double time = 0.0;
  bool empty_window = false;
};

/// sum_{E_k in I} e^{-i t E_k} <v_k, initial> v_k.
EvolutionState evolve(const SpectralDecomposition& decomposition, const EnergyWindow& window,
                      const Eigen::VectorXcd& initial, double t);

struct DlKernel {
  double sampled_max = 0.0;  ///< max over the grid of |<delta_y, e^{-itH} chi_I delta_x>|
  double correlator = 0.0;   ///< Q(x, y) = sum_{E_k in I} |v_k(x)| |v_k(y)|
};

DlKernel dl_kernel(const SpectralDecomposition& decomposition, const EnergyWindow& window,
                   Eigen::Index x, Eigen::Index y, const std::vector<double>& t_grid);

/// Q(x, y) for every y.
Eigen::VectorXd correlator_row(const SpectralDecomposition& decomposition, const EnergyWindow& window,
                               Eigen::Index x);

/// |x| per vertex: box distance from the origin (sup-norm on lattices, graph
/// distance on trees).
std::vector<double> position_norms(const Topology& topology, VertexId origin);

/// Time by which a ballistic front (speed <= max degree) from the origin can
/// reach a vertex of reduced degree.
double light_cone_horizon(const Topology& topology, VertexId origin);

struct TransportSeries {
  std::vector<double> times;
  std::vector<double> values;  ///< || |X|^p e^{-itH} chi_I(H) phi ||
  double horizon = 0.0;
  bool beyond_horizon = false;  ///< some t exceeds the light-cone horizon
};

TransportSeries transport_moment(const SpectralDecomposition& decomposition, const EnergyWindow& window,
                                 const Eigen::VectorXcd& phi, double p, const std::vector<double>& t_grid,
                                 const std::vector<double>& positions, double horizon);

/// sum_x |x|^2 |<delta_x, e^{-itH} delta_origin>|^2.
double diffusion_sum(const SpectralDecomposition& decomposition, double t, Eigen::Index origin,
                     const std::vector<double>& positions);

struct EigenfunctionProfile {
  VertexId center = 0;
  double rate = 0.0;  ///< -infinity when no off-centre amplitude is above 1e-14
  double r_squared = 0.0;
  double max_amplitude = 0.0;
};

/// Centre of localization and exponential (or stretched, zeta < 1) decay fit
/// of log|phi| against dist(x, center)^zeta.
EigenfunctionProfile eigenfunction_profile(const Eigen::VectorXd& phi, const Topology& topology,
                                           double zeta = 1.0);

/// sum_x |phi(x)|^4 for a unit vector.
double ipr(const Eigen::VectorXd& phi);

}  // namespace anderson
