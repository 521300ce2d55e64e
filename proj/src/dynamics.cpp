#include "anderson/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "anderson/criteria.hpp"
#include "anderson/error.hpp"

namespace anderson {

namespace {

std::vector<Eigen::Index> window_indices(const SpectralDecomposition& d, const EnergyWindow& window) {
  if (window.lo > window.hi) throw ValidationError("energy window: lo must be <= hi");
  std::vector<Eigen::Index> ks;
  for (Eigen::Index k = 0; k < d.values.size(); ++k) {
    if (window.contains(d.values(k))) ks.push_back(k);
  }
  return ks;
}

}  // namespace

EvolutionState evolve(const SpectralDecomposition& decomposition, const EnergyWindow& window,
                      const Eigen::VectorXcd& initial, double t) {
  const auto& v = decomposition.vectors;
  if (initial.size() != v.rows()) throw ValidationError("evolve: initial state size mismatch");
  const auto ks = window_indices(decomposition, window);
  EvolutionState out;
  out.time = t;
  out.amplitudes = Eigen::VectorXcd::Zero(v.rows());
  out.empty_window = ks.empty();
  for (Eigen::Index k : ks) {
    const std::complex<double> overlap = v.col(k).cast<std::complex<double>>().dot(initial);
    out.amplitudes += (std::polar(1.0, -t * decomposition.values(k)) * overlap) * v.col(k).cast<std::complex<double>>();
  }
  return out;
}

DlKernel dl_kernel(const SpectralDecomposition& decomposition, const EnergyWindow& window, Eigen::Index x,
                   Eigen::Index y, const std::vector<double>& t_grid) {
  const auto& v = decomposition.vectors;
  const auto ks = window_indices(decomposition, window);
  DlKernel out;
  for (Eigen::Index k : ks) out.correlator += std::abs(v(x, k)) * std::abs(v(y, k));
  for (double t : t_grid) {
    std::complex<double> amp = 0.0;
    for (Eigen::Index k : ks) amp += std::polar(1.0, -t * decomposition.values(k)) * v(x, k) * v(y, k);
    out.sampled_max = std::max(out.sampled_max, std::abs(amp));
  }
  return out;
}

Eigen::VectorXd correlator_row(const SpectralDecomposition& decomposition, const EnergyWindow& window,
                               Eigen::Index x) {
  const auto& v = decomposition.vectors;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(v.rows());
  for (Eigen::Index k : window_indices(decomposition, window)) {
    row += std::abs(v(x, k)) * v.col(k).cwiseAbs();
  }
  return row;
}

std::vector<double> position_norms(const Topology& topology, VertexId origin) {
  std::vector<double> out(topology.vertex_count());
  for (VertexId v = 0; v < topology.vertex_count(); ++v) {
    out[v] = static_cast<double>(topology.box_distance(origin, v));
  }
  return out;
}

double light_cone_horizon(const Topology& topology, VertexId origin) {
  const auto dist = bfs_distances(topology, origin);
  std::size_t nearest = std::numeric_limits<std::size_t>::max();
  for (VertexId v = 0; v < topology.vertex_count(); ++v) {
    if (topology.degree(v) < topology.max_degree()) nearest = std::min(nearest, dist[v]);
  }
  if (nearest == std::numeric_limits<std::size_t>::max()) {
    nearest = *std::max_element(dist.begin(), dist.end());
  }
  return static_cast<double>(nearest) / static_cast<double>(std::max<std::size_t>(1, topology.max_degree()));
}

TransportSeries transport_moment(const SpectralDecomposition& decomposition, const EnergyWindow& window,
                                 const Eigen::VectorXcd& phi, double p, const std::vector<double>& t_grid,
                                 const std::vector<double>& positions, double horizon) {
  if (!(p >= 0.0)) throw ValidationError("transport_moment: p must be >= 0");
  if (static_cast<Eigen::Index>(positions.size()) != phi.size()) {
    throw ValidationError("transport_moment: positions size mismatch");
  }
  Eigen::VectorXd weight(phi.size());
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    weight(i) = p == 0.0 ? 1.0 : std::pow(positions[static_cast<std::size_t>(i)], p);
  }
  // Project once, then each time is a phase rotation in the eigenbasis.
  const auto ks = window_indices(decomposition, window);
  const auto& v = decomposition.vectors;
  Eigen::MatrixXd basis(v.rows(), static_cast<Eigen::Index>(ks.size()));
  Eigen::VectorXd energies(static_cast<Eigen::Index>(ks.size()));
  for (std::size_t j = 0; j < ks.size(); ++j) {
    basis.col(static_cast<Eigen::Index>(j)) = v.col(ks[j]);
    energies(static_cast<Eigen::Index>(j)) = decomposition.values(ks[j]);
  }
  const Eigen::VectorXcd overlaps = basis.transpose().cast<std::complex<double>>() * phi;
  TransportSeries out;
  out.horizon = horizon;
  for (double t : t_grid) {
    Eigen::VectorXcd rotated(overlaps.size());
    for (Eigen::Index j = 0; j < overlaps.size(); ++j) rotated(j) = std::polar(1.0, -t * energies(j)) * overlaps(j);
    const Eigen::VectorXcd state = basis.cast<std::complex<double>>() * rotated;
    out.times.push_back(t);
    out.values.push_back((weight.cast<std::complex<double>>().cwiseProduct(state)).norm());
    if (t > horizon) out.beyond_horizon = true;
  }
  return out;
}

double diffusion_sum(const SpectralDecomposition& decomposition, double t, Eigen::Index origin,
                     const std::vector<double>& positions) {
  const auto& v = decomposition.vectors;
  if (static_cast<Eigen::Index>(positions.size()) != v.rows()) {
    throw ValidationError("diffusion_sum: positions size mismatch");
  }
  Eigen::VectorXcd rotated(v.cols());
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    rotated(k) = std::polar(1.0, -t * decomposition.values(k)) * v(origin, k);
  }
  const Eigen::VectorXcd state = v.cast<std::complex<double>>() * rotated;
  double sum = 0.0;
  for (Eigen::Index x = 0; x < state.size(); ++x) {
    const double r = positions[static_cast<std::size_t>(x)];
    sum += r * r * std::norm(state(x));
  }
  return sum;
}

EigenfunctionProfile eigenfunction_profile(const Eigen::VectorXd& phi, const Topology& topology, double zeta) {
  if (static_cast<std::size_t>(phi.size()) != topology.vertex_count()) {
    throw ValidationError("eigenfunction_profile: vector size mismatch");
  }
  if (std::abs(phi.norm() - 1.0) > 1e-8) throw ValidationError("eigenfunction_profile: phi must be normalized");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw ValidationError("eigenfunction_profile: zeta must lie in (0, 1]");
  EigenfunctionProfile out;
  // First maximal index: ties go to the smallest vertex id.
  Eigen::Index center = 0;
  for (Eigen::Index i = 1; i < phi.size(); ++i) {
    if (std::abs(phi(i)) > std::abs(phi(center))) center = i;
  }
  out.center = static_cast<VertexId>(center);
  out.max_amplitude = std::abs(phi(center));
  std::vector<double> xs;
  std::vector<double> ys;
  bool off_center = false;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double a = std::abs(phi(i));
    if (a < 1e-14) continue;
    const double dist = static_cast<double>(topology.distance(out.center, static_cast<VertexId>(i)));
    off_center = off_center || dist > 0.0;
    xs.push_back(std::pow(dist, zeta));
    ys.push_back(a);
  }
  if (!off_center) {
    out.rate = -std::numeric_limits<double>::infinity();
    out.r_squared = 1.0;
    return out;
  }
  const auto fit = log_linear_fit(xs, ys);
  out.rate = fit.rate;
  out.r_squared = fit.r_squared;
  return out;
}

double ipr(const Eigen::VectorXd& phi) {
  if (std::abs(phi.squaredNorm() - 1.0) > 1e-10) throw ValidationError("ipr: phi must be normalized within 1e-10");
  return phi.array().square().square().sum();
}

}  // namespace anderson
