#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "anderson/topology.hpp"

namespace anderson {

// ---------------------------------------------------------------------------
// Disorder

struct UniformLaw {
  double a = 0.0;
  double b = 1.0;
};
/// Point masses at 0 (probability 1-p) and 1 (probability p).
struct BernoulliLaw {
  double p = 0.5;
};
struct DiscreteLaw {
  std::vector<double> values;
  std::vector<double> probs;
};
using SiteLaw = std::variant<UniformLaw, BernoulliLaw, DiscreteLaw>;

struct DisorderSpec {
  SiteLaw law = UniformLaw{};
  double lambda = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// [min, max] of the support of the single-site law.
  std::pair<double, double> support() const;
  bool absolutely_continuous() const noexcept;
  /// Supremum of the single-site density; only for absolutely continuous laws.
  double density_sup() const;
  /// Draw from the single-site law given a uniform variate in [0, 1).
  double quantile(double u) const;
};

struct PotentialSample {
  std::vector<double> values;
  std::uint64_t realization = 0;
};

/// One i.i.d. draw per vertex keyed by (seed, realization, vertex). Off-mask
/// sites of a Delone topology carry zero.
PotentialSample sample_potential(const DisorderSpec& spec, const Topology& topology,
                                 std::uint64_t realization);

// ---------------------------------------------------------------------------
// Hamiltonians

enum class Convention {
  adjacency,  ///< H = A + lambda V, hopping +1
  laplacian   ///< H = deg - A + lambda V, hopping -1
};

std::string to_string(Convention convention);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

struct Hamiltonian {
  SparseMatrix matrix;
  Convention convention = Convention::adjacency;
  /// Row i of matrix corresponds to topology vertex index_map[i].
  std::vector<VertexId> index_map;

  Eigen::Index dimension() const noexcept { return matrix.rows(); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
  /// Off-diagonal value carried by an edge in this convention.
  double hopping() const noexcept { return convention == Convention::adjacency ? 1.0 : -1.0; }
  /// Local row of a topology vertex, if present.
  std::optional<Eigen::Index> local_index(VertexId v) const;
};

Hamiltonian assemble_hamiltonian(const Topology& topology, const PotentialSample& potential,
                                 double lambda, Convention convention = Convention::adjacency);

/// Principal submatrix on the region (topology vertex ids), reindexed densely.
Hamiltonian restrict_to(const Hamiltonian& h, const Region& region);

struct BoundaryDecomposition {
  SparseMatrix boundary;   ///< Upsilon: the cut edges in both orientations
  SparseMatrix block_sum;  ///< H_region (+) H_complement embedded in full size
  double residual = 0.0;   ///< max |H - block_sum - boundary|
};

/// Splits a full-graph Hamiltonian along a region. Upsilon carries the
/// convention's hopping value on every cut edge.
BoundaryDecomposition boundary_operator(const Hamiltonian& h, const Region& region);

// ---------------------------------------------------------------------------
// Spectra

struct SpectralDecomposition {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< orthonormal columns
};

constexpr Eigen::Index default_dense_cap = 4096;

SpectralDecomposition eigendecompose(const Hamiltonian& h, Eigen::Index cap = default_dense_cap);
Eigen::VectorXd eigenvalues(const Hamiltonian& h, Eigen::Index cap = default_dense_cap);

struct ExtremeEigenvalues {
  double min = 0.0;
  double max = 0.0;
  int iterations = 0;
};

/// Lanczos with full reorthogonalisation; the fallback above the dense cap.
ExtremeEigenvalues extreme_eigenvalues(const Hamiltonian& h, double tolerance = 1e-12,
                                       int max_iterations = 600);

/// Largest eigenvalue of |A| for the pure adjacency operator of the infinite
/// graph the topology truncates: 2d for Z^d, 2 sqrt(K) for the Bethe lattice.
double infinite_adjacency_radius(const Topology& topology);

struct HullReport {
  double empirical_min = 0.0;
  double empirical_max = 0.0;
  double theory_min = 0.0;  ///< -radius + lambda a
  double theory_max = 0.0;  ///< +radius + lambda b
  std::size_t realizations = 0;
};

/// Empirical spectral extremes over an ensemble (adjacency convention).
HullReport spectrum_hull(const DisorderSpec& spec, const Topology& topology,
                         std::size_t n_realizations, unsigned workers = 1);

/// max |U H_omega U* - H_{shifted omega}| for a lattice translation.
double translation_covariance_check(const DisorderSpec& spec, const Topology& topology,
                                    const std::vector<int>& shift, std::uint64_t realization = 0);

struct IdsPoint {
  double energy = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Empirical integrated density of states E[#{eigenvalues <= E}] / |Lambda|.
std::vector<IdsPoint> ids_estimate(const DisorderSpec& spec, const Topology& topology,
                                   const std::vector<double>& energies,
                                   std::size_t n_realizations, unsigned workers = 1);

/// ||(A - E) phi|| / ||phi|| for the plane wave exp(i theta . x) truncated to
/// a side-n cube of Z^d, E = 2 sum_k cos(theta_k) with equal theta_k.
double weyl_residual(const Topology& lattice_kind, double energy, int n);

}  // namespace anderson
