#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "anderson/operator.hpp"
#include "anderson/topology.hpp"

namespace anderson {

using Complex = std::complex<double>;

/// z = E + i eps with eps >= 0.
struct ComplexEnergy {
  double energy = 0.0;
  double eps = 0.0;

  Complex z() const noexcept { return {energy, eps}; }
};

/// Factorised resolvent (H - z)^{-1}. Indices are rows of H, which coincide
/// with vertex ids for full-graph operators.
class Resolvent {
 public:
  /// Real energies (eps = 0) are checked against the spectrum unless the
  /// caller certifies that E is off the spectrum.
  Resolvent(const Hamiltonian& h, ComplexEnergy z, bool certified_off_spectrum = false);
  ~Resolvent();
  Resolvent(Resolvent&&) noexcept;
  Resolvent& operator=(Resolvent&&) noexcept;

  /// Solves (H - z) u = delta_y and checks the residual.
  Eigen::VectorXcd column(Eigen::Index y) const;
  Complex entry(Eigen::Index x, Eigen::Index y) const { return column(y)(x); }
  /// Residual of the most recent solve.
  double last_residual() const noexcept { return last_residual_; }
  Eigen::Index dimension() const noexcept { return dimension_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Eigen::Index dimension_ = 0;
  double z_abs_ = 0.0;
  mutable double last_residual_ = 0.0;
};

Complex green_entry(const Hamiltonian& h, ComplexEnergy z, Eigen::Index x, Eigen::Index y);
Eigen::VectorXcd green_column(const Hamiltonian& h, ComplexEnergy z, Eigen::Index y);

/// (H - z)^{-1} by dense LU. Test oracle and small-system helper.
Eigen::MatrixXcd dense_resolvent(const Eigen::MatrixXd& h, Complex z);

// ---------------------------------------------------------------------------

struct CombesThomasResult {
  double lhs = 0.0;  ///< |G_S(z; x, y)|
  double rhs = 0.0;  ///< the exponential bound
  double eta = 0.0;  ///< dist(z, sigma(H_S))
  bool violated = false;
};

/// Combes-Thomas bound for a laplacian-convention operator restricted to S.
/// `h_s` must be a restriction of an operator on `lattice`; x, y are rows of
/// h_s. Distances are measured in the lattice's sup-norm.
CombesThomasResult combes_thomas_check(const Hamiltonian& h_s, const Topology& lattice,
                                       ComplexEnergy z, Eigen::Index x, Eigen::Index y,
                                       double eps_ct);

/// Every pair (x, y) of h_s at once from one dense inversion.
struct CombesThomasScan {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  ///< max lhs / rhs
};
CombesThomasScan combes_thomas_scan(const Hamiltonian& h_s, const Topology& lattice,
                                    ComplexEnergy z, double eps_ct);

// ---------------------------------------------------------------------------

constexpr std::size_t saw_vertex_cap = 16;

struct SawResult {
  Complex value;
  std::size_t walks = 0;
};

/// Self-avoiding-walk expansion of G_Lambda(z; x, y): the sum over SAWs w of
/// prod_j G_{Lambda_j}(z; w_j, w_j) with Lambda_{j+1} = Lambda_j \ {w_j},
/// times the hopping factor prod_j (-H_{w_j w_{j+1}}), which is 1 for the
/// laplacian convention. Refuses operators above saw_vertex_cap.
SawResult saw_expansion(const Hamiltonian& h_region, ComplexEnergy z, Eigen::Index x, Eigen::Index y);

/// Enumerates self-avoiding walks from x to y in the off-diagonal pattern of
/// a symmetric matrix.
std::vector<std::vector<Eigen::Index>> enumerate_saws(const Eigen::MatrixXd& h, Eigen::Index x,
                                                      Eigen::Index y);

// ---------------------------------------------------------------------------

struct KreinResult {
  double residual = 0.0;
  Eigen::MatrixXcd direct;   ///< P (H - z)^{-1} P
  Eigen::MatrixXcd formula;  ///< [W + [P (H0 - z)^{-1} P]^{-1}]^{-1}
};

/// Krein formula for W = P W P with P the coordinate projection on `sites`
/// (one or two of them). `w` is the k x k block of W on range(P).
KreinResult krein_rank2_check(const Eigen::MatrixXd& h0, const std::vector<Eigen::Index>& sites,
                              const Eigen::MatrixXd& w, Complex z);

// ---------------------------------------------------------------------------

/// max_{x in region} |psi(x) + sum_{(k,m) in cut} G_region(E; x, k) Upsilon(k, m) psi(m)|.
/// With hopping +1 this is psi(x) = -sum G(E; x, k) psi(m).
double boundary_formula_check(const Hamiltonian& h_ambient, const Region& region, double energy,
                              const Eigen::VectorXd& psi);

// ---------------------------------------------------------------------------

/// Leaf-upward cavity recursion on a rooted tree, adjacency convention.
struct TreeGreen {
  /// cavity[v] = G of the forward subtree rooted at v, at (v, v). cavity[0]
  /// is the full-tree root value.
  std::vector<Complex> cavity;

  Complex root() const { return cavity.front(); }
  /// G(z; 0, x) = prod over the root-to-x path of cavity values times the
  /// hopping factor (-1)^{depth(x)}.
  Complex root_to(const Topology& tree, VertexId x) const;
};

TreeGreen tree_green_recursive(const Topology& tree, const PotentialSample& potential,
                               double lambda, ComplexEnergy z);

// ---------------------------------------------------------------------------

enum class PoolInit {
  clean_fixed_point,  ///< lambda = 0 solution of K G^2 + z G + 1 = 0
  constant_i          ///< G = i
};

struct PopulationParams {
  int branching = 2;
  ComplexEnergy z{0.0, 1e-3};
  std::size_t pool_size = 10000;
  std::size_t sweeps = 50;
  double s = 0.5;  ///< fractional moment reported
  PoolInit init = PoolInit::clean_fixed_point;
  std::size_t histogram_bins = 50;
};

struct PopulationResult {
  std::vector<Complex> pool;
  std::vector<double> mean_im_history;  ///< per sweep
  double mean_im = 0.0;
  double mean_abs_s = 0.0;
  double mean_abs2 = 0.0;
  double drift = 0.0;  ///< relative change of mean Im G over the last 5 sweeps
  bool converged = false;
  std::vector<double> bin_edges;  ///< histogram of Im G
  std::vector<std::size_t> counts;
};

/// lambda = 0 forward Green's value on the rooted K-tree.
Complex clean_tree_fixed_point(int branching, Complex z);

/// Distributional fixed point of the tree recursion by synchronous pool
/// resampling.
PopulationResult population_dynamics(const PopulationParams& params, const DisorderSpec& spec);

// ---------------------------------------------------------------------------

/// sum_y |G(z; x, y)|^2 = ||(H - z)^{-1} delta_x||^2.
double simon_wolff_sum(const Hamiltonian& h, ComplexEnergy z, Eigen::Index x);

}  // namespace anderson
