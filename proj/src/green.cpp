#include "anderson/green.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "anderson/error.hpp"
#include "anderson/parallel.hpp"
#include "anderson/rng.hpp"

namespace anderson {

// ---------------------------------------------------------------------------
// Resolvent

struct Resolvent::Impl {
  using ComplexSparse = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;
  bool real = false;
  SparseMatrix shifted_real;
  ComplexSparse shifted_complex;
  Eigen::SparseLU<SparseMatrix> lu_real;
  Eigen::SparseLU<ComplexSparse> lu_complex;

  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const {
    if (real) {
      const Eigen::VectorXd re = lu_real.solve(rhs.real());
      const Eigen::VectorXd im = lu_real.solve(rhs.imag());
      Eigen::VectorXcd out(re.size());
      out.real() = re;
      out.imag() = im;
      return out;
    }
    return lu_complex.solve(rhs);
  }
  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const {
    if (real) {
      Eigen::VectorXcd out(u.size());
      out.real() = shifted_real * u.real();
      out.imag() = shifted_real * u.imag();
      return out;
    }
    return shifted_complex * u;
  }
};

Resolvent::Resolvent(const Hamiltonian& h, ComplexEnergy z, bool certified_off_spectrum)
    : impl_(std::make_unique<Impl>()), dimension_(h.dimension()), z_abs_(std::abs(z.z())) {
  if (z.eps < 0.0) throw ValidationError("resolvent: eps must be >= 0");
  if (dimension_ == 0) throw ValidationError("resolvent: empty operator");
  SparseMatrix identity(dimension_, dimension_);
  identity.setIdentity();
  if (z.eps == 0.0) {
    if (!certified_off_spectrum && dimension_ <= default_dense_cap) {
      const auto ev = eigenvalues(h);
      const double gap = (ev.array() - z.energy).abs().minCoeff();
      if (gap < 1e-8) {
        throw NumericalError("resolvent: real energy " + std::to_string(z.energy) +
                             " lies within 1e-8 of the spectrum (distance " +
                             std::to_string(gap) + ")");
      }
    }
    impl_->real = true;
    impl_->shifted_real = h.matrix - z.energy * identity;
    impl_->shifted_real.makeCompressed();
    impl_->lu_real.compute(impl_->shifted_real);
    if (impl_->lu_real.info() != Eigen::Success) {
      throw NumericalError("resolvent: factorisation failed (singular H - E)");
    }
  } else {
    impl_->shifted_complex = h.matrix.cast<Complex>() - z.z() * identity.cast<Complex>();
    impl_->shifted_complex.makeCompressed();
    impl_->lu_complex.compute(impl_->shifted_complex);
    if (impl_->lu_complex.info() != Eigen::Success) {
      throw NumericalError("resolvent: factorisation failed");
    }
  }
}

Resolvent::~Resolvent() = default;
Resolvent::Resolvent(Resolvent&&) noexcept = default;
Resolvent& Resolvent::operator=(Resolvent&&) noexcept = default;

Eigen::VectorXcd Resolvent::column(Eigen::Index y) const {
  if (y < 0 || y >= dimension_) throw ValidationError("resolvent: column index out of range");
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dimension_);
  rhs(y) = 1.0;
  Eigen::VectorXcd u = impl_->solve(rhs);
  // One step of iterative refinement.
  u += impl_->solve(rhs - impl_->apply(u));
  last_residual_ = (impl_->apply(u) - rhs).norm();
  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  if (!std::isfinite(last_residual_) || last_residual_ > 1e-10 * (1.0 + z_abs_) * scale) {
    throw NumericalError("resolvent: residual " + std::to_string(last_residual_) +
                         " above tolerance (near-singular H - z)");
  }
  return u;
}

Complex green_entry(const Hamiltonian& h, ComplexEnergy z, Eigen::Index x, Eigen::Index y) {
  return Resolvent(h, z).entry(x, y);
}

Eigen::VectorXcd green_column(const Hamiltonian& h, ComplexEnergy z, Eigen::Index y) {
  return Resolvent(h, z).column(y);
}

Eigen::MatrixXcd dense_resolvent(const Eigen::MatrixXd& h, Complex z) {
  Eigen::MatrixXcd shifted = h.cast<Complex>();
  shifted.diagonal().array() -= z;
  return shifted.partialPivLu().inverse();
}

// ---------------------------------------------------------------------------
// Combes-Thomas

namespace {

struct CtSetup {
  double eta;
  double decay;  ///< log(eps eta / 2d + 1)
};

CtSetup combes_thomas_setup(const Hamiltonian& h_s, const Topology& lattice, ComplexEnergy z,
                            double eps_ct) {
  if (h_s.convention != Convention::laplacian) {
    throw ValidationError("combes_thomas: the bound is stated for H = -Laplacian + V; use the laplacian convention");
  }
  if (lattice.kind() == TopologyKind::bethe) {
    throw ValidationError("combes_thomas: needs a lattice topology");
  }
  if (!(eps_ct > 0.0 && eps_ct < 1.0)) throw ValidationError("combes_thomas: eps_ct must lie in (0, 1)");
  const auto ev = eigenvalues(h_s);
  double eta = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < ev.size(); ++k) eta = std::min(eta, std::abs(Complex(ev(k)) - z.z()));
  if (eta < 1e-10) throw NumericalError("combes_thomas: z lies within 1e-10 of sigma(H_S)");
  const double two_d = 2.0 * lattice.dimension();
  return {eta, std::log(eps_ct * eta / two_d + 1.0)};
}

}  // namespace

CombesThomasResult combes_thomas_check(const Hamiltonian& h_s, const Topology& lattice,
                                       ComplexEnergy z, Eigen::Index x, Eigen::Index y,
                                       double eps_ct) {
  const auto setup = combes_thomas_setup(h_s, lattice, z, eps_ct);
  CombesThomasResult out;
  out.eta = setup.eta;
  out.lhs = std::abs(dense_resolvent(h_s.dense(), z.z())(x, y));
  const double dist = static_cast<double>(lattice.distance(h_s.index_map[x], h_s.index_map[y]));
  out.rhs = std::exp(-setup.decay * dist) / (setup.eta * (1.0 - eps_ct));
  out.violated = out.lhs > out.rhs * (1.0 + 1e-12);
  return out;
}

CombesThomasScan combes_thomas_scan(const Hamiltonian& h_s, const Topology& lattice,
                                    ComplexEnergy z, double eps_ct) {
  const auto setup = combes_thomas_setup(h_s, lattice, z, eps_ct);
  const Eigen::MatrixXcd g = dense_resolvent(h_s.dense(), z.z());
  CombesThomasScan out;
  const double prefactor = 1.0 / (setup.eta * (1.0 - eps_ct));
  for (Eigen::Index x = 0; x < g.rows(); ++x) {
    for (Eigen::Index y = 0; y < g.cols(); ++y) {
      const double dist = static_cast<double>(lattice.distance(h_s.index_map[x], h_s.index_map[y]));
      const double rhs = prefactor * std::exp(-setup.decay * dist);
      const double lhs = std::abs(g(x, y));
      ++out.pairs;
      if (lhs > rhs * (1.0 + 1e-12)) ++out.violations;
      out.worst_ratio = std::max(out.worst_ratio, lhs / rhs);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-avoiding walks

std::vector<std::vector<Eigen::Index>> enumerate_saws(const Eigen::MatrixXd& h, Eigen::Index x,
                                                      Eigen::Index y) {
  const Eigen::Index n = h.rows();
  std::vector<std::vector<Eigen::Index>> adjacency(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && h(i, j) != 0.0) adjacency[i].push_back(j);
    }
  }
  std::vector<std::vector<Eigen::Index>> walks;
  std::vector<Eigen::Index> path{x};
  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  visited[x] = true;
  std::function<void(Eigen::Index)> extend = [&](Eigen::Index u) {
    if (u == y) {
      walks.push_back(path);
      return;
    }
    for (Eigen::Index v : adjacency[u]) {
      if (visited[v]) continue;
      visited[v] = true;
      path.push_back(v);
      extend(v);
      path.pop_back();
      visited[v] = false;
    }
  };
  extend(x);
  return walks;
}

SawResult saw_expansion(const Hamiltonian& h_region, ComplexEnergy z, Eigen::Index x, Eigen::Index y) {
  const Eigen::Index n = h_region.dimension();
  if (static_cast<std::size_t>(n) > saw_vertex_cap) {
    throw BudgetError("saw_expansion: region has " + std::to_string(n) + " vertices; the cap is " +
                      std::to_string(saw_vertex_cap));
  }
  if (x < 0 || y < 0 || x >= n || y >= n) throw ValidationError("saw_expansion: site out of range");
  const Eigen::MatrixXd h = h_region.dense();

  // Diagonal of (H_S - z)^{-1} for each depleted region S, keyed by bitmask.
  std::unordered_map<std::uint32_t, Eigen::VectorXcd> diagonals;
  auto diagonal_entry = [&](std::uint32_t mask, Eigen::Index site) -> Complex {
    auto it = diagonals.find(mask);
    if (it == diagonals.end()) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (mask & (1u << i)) members.push_back(i);
      }
      const auto m = static_cast<Eigen::Index>(members.size());
      Eigen::MatrixXd sub(m, m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = h(members[a], members[b]);
      }
      const Eigen::MatrixXcd inv = dense_resolvent(sub, z.z());
      Eigen::VectorXcd full = Eigen::VectorXcd::Zero(n);
      for (Eigen::Index a = 0; a < m; ++a) full(members[a]) = inv(a, a);
      it = diagonals.emplace(mask, std::move(full)).first;
    }
    return it->second(site);
  };

  SawResult out;
  const std::uint32_t all = n == 32 ? ~0u : ((1u << n) - 1u);
  for (const auto& walk : enumerate_saws(h, x, y)) {
    std::uint32_t mask = all;
    Complex term = 1.0;
    for (std::size_t j = 0; j < walk.size(); ++j) {
      term *= diagonal_entry(mask, walk[j]);
      if (j + 1 < walk.size()) term *= -h(walk[j], walk[j + 1]);
      mask &= ~(1u << walk[j]);
    }
    out.value += term;
    ++out.walks;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Krein

KreinResult krein_rank2_check(const Eigen::MatrixXd& h0, const std::vector<Eigen::Index>& sites,
                              const Eigen::MatrixXd& w, Complex z) {
  const auto k = static_cast<Eigen::Index>(sites.size());
  if (k < 1 || k > 2) throw ValidationError("krein: projection rank must be 1 or 2");
  if (w.rows() != k || w.cols() != k) throw ValidationError("krein: W block size must match the projection rank");
  if (k == 2 && sites[0] == sites[1]) throw ValidationError("krein: projection sites must be distinct");
  Eigen::MatrixXd h = h0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) h(sites[a], sites[b]) += w(a, b);
  }
  const Eigen::MatrixXcd g0 = dense_resolvent(h0, z);
  const Eigen::MatrixXcd g = dense_resolvent(h, z);
  KreinResult out;
  Eigen::MatrixXcd inner(k, k);
  out.direct.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      inner(a, b) = g0(sites[a], sites[b]);
      out.direct(a, b) = g(sites[a], sites[b]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> inner_lu(inner);
  inner_lu.setThreshold(1e-13);
  if (!inner_lu.isInvertible()) throw NumericalError("krein: P (H0 - z)^{-1} P is singular on range(P)");
  const Eigen::MatrixXcd outer = w.cast<Complex>() + inner_lu.inverse();
  Eigen::FullPivLU<Eigen::MatrixXcd> outer_lu(outer);
  outer_lu.setThreshold(1e-13);
  if (!outer_lu.isInvertible()) throw NumericalError("krein: W + [P (H0 - z)^{-1} P]^{-1} is singular");
  out.formula = outer_lu.inverse();
  out.residual = (out.direct - out.formula).cwiseAbs().maxCoeff();
  return out;
}

// ---------------------------------------------------------------------------
// Boundary formula

double boundary_formula_check(const Hamiltonian& h_ambient, const Region& region, double energy,
                              const Eigen::VectorXd& psi) {
  if (psi.size() != h_ambient.dimension()) throw ValidationError("boundary_formula: psi size mismatch");
  const Hamiltonian h_region = restrict_to(h_ambient, region);
  const auto ev = eigenvalues(h_region);
  if ((ev.array() - energy).abs().minCoeff() < 1e-10) {
    throw NumericalError("boundary_formula: E lies within 1e-10 of sigma(H_region)");
  }
  Eigen::MatrixXd shifted = h_region.dense();
  shifted.diagonal().array() -= energy;
  const Eigen::MatrixXd g = shifted.partialPivLu().inverse();

  const auto n = static_cast<std::size_t>(h_ambient.dimension());
  std::vector<bool> inside(n, false);
  std::vector<Eigen::Index> local_rows(region.size());
  for (std::size_t i = 0; i < region.size(); ++i) {
    local_rows[i] = *h_ambient.local_index(region.vertices[i]);
    inside[static_cast<std::size_t>(local_rows[i])] = true;
  }
  // (Upsilon psi)(k) for k inside the region.
  Eigen::VectorXd upsilon_psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(region.size()));
  for (std::size_t i = 0; i < region.size(); ++i) {
    const Eigen::Index k = local_rows[i];
    for (SparseMatrix::InnerIterator it(h_ambient.matrix, k); it; ++it) {
      if (!inside[static_cast<std::size_t>(it.row())]) upsilon_psi(static_cast<Eigen::Index>(i)) += it.value() * psi(it.row());
    }
  }
  const Eigen::VectorXd predicted = -(g * upsilon_psi);
  double worst = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i) {
    worst = std::max(worst, std::abs(psi(local_rows[i]) - predicted(static_cast<Eigen::Index>(i))));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Trees

Complex TreeGreen::root_to(const Topology& tree, VertexId x) const {
  Complex value = 1.0;
  int depth = 0;
  for (VertexId v = x;; v = tree.parent(v)) {
    value *= cavity[v];
    if (v == 0) break;
    ++depth;
  }
  return depth % 2 == 0 ? value : -value;
}

TreeGreen tree_green_recursive(const Topology& tree, const PotentialSample& potential, double lambda,
                               ComplexEnergy z) {
  if (tree.kind() != TopologyKind::bethe) throw ValidationError("tree_green_recursive: needs a bethe topology");
  if (!(z.eps > 0.0)) throw ValidationError("tree_green_recursive: eps must be > 0");
  if (potential.values.size() != tree.vertex_count()) throw ValidationError("tree_green_recursive: potential size mismatch");
  TreeGreen out;
  out.cavity.assign(tree.vertex_count(), Complex{});
  // Children carry larger heap indices, so a reverse sweep is leaf-upward.
  for (VertexId v = tree.vertex_count(); v-- > 0;) {
    Complex denom = lambda * potential.values[v] - z.z();
    for (VertexId c : tree.children(v)) denom -= out.cavity[c];
    out.cavity[v] = 1.0 / denom;
  }
  return out;
}

Complex clean_tree_fixed_point(int branching, Complex z) {
  const double k = static_cast<double>(branching);
  const Complex root = std::sqrt(z * z - 4.0 * k);
  const Complex g1 = (-z + root) / (2.0 * k);
  const Complex g2 = (-z - root) / (2.0 * k);
  if (z.imag() > 0.0) return g1.imag() > g2.imag() ? g1 : g2;
  if (std::abs(std::abs(g1) - std::abs(g2)) > 1e-14) return std::abs(g1) < std::abs(g2) ? g1 : g2;
  return g1.imag() >= g2.imag() ? g1 : g2;
}

PopulationResult population_dynamics(const PopulationParams& params, const DisorderSpec& spec) {
  spec.validate();
  if (params.branching < 2) throw ValidationError("population_dynamics: K must be >= 2");
  if (params.pool_size < 1000) throw ValidationError("population_dynamics: pool_size must be >= 1000");
  if (params.sweeps < 20) throw ValidationError("population_dynamics: sweeps must be >= 20");
  if (!(params.z.eps > 0.0)) throw ValidationError("population_dynamics: eps must be > 0");
  if (!(params.s > 0.0)) throw ValidationError("population_dynamics: s must be > 0");

  const std::size_t n = params.pool_size;
  const Complex z = params.z.z();
  const Complex start = params.init == PoolInit::clean_fixed_point
                            ? clean_tree_fixed_point(params.branching, z)
                            : Complex(0.0, 1.0);
  std::vector<Complex> pool(n, start);
  std::vector<Complex> next(n);
  std::vector<double> im(n);
  PopulationResult out;
  const std::uint64_t key = hash_keys(spec.seed, hash_name("population_dynamics"));
  for (std::size_t sweep = 0; sweep < params.sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      CounterStream stream(hash_keys(key, sweep, i));
      Complex denom = spec.lambda * spec.quantile(stream.uniform()) - z;
      for (int k = 0; k < params.branching; ++k) denom -= pool[stream.below(n)];
      next[i] = 1.0 / denom;
      if (!(std::abs(next[i]) <= 1e12)) {
        throw NumericalError("population_dynamics: pool diverged at sweep " + std::to_string(sweep) +
                             " (|G| = " + std::to_string(std::abs(next[i])) + ")");
      }
    }
    pool.swap(next);
    for (std::size_t i = 0; i < n; ++i) im[i] = pool[i].imag();
    out.mean_im_history.push_back(pairwise_sum(im) / static_cast<double>(n));
  }

  std::vector<double> abs_s(n);
  std::vector<double> abs2(n);
  for (std::size_t i = 0; i < n; ++i) {
    abs_s[i] = std::pow(std::abs(pool[i]), params.s);
    abs2[i] = std::norm(pool[i]);
  }
  out.mean_im = out.mean_im_history.back();
  out.mean_abs_s = pairwise_sum(abs_s) / static_cast<double>(n);
  out.mean_abs2 = pairwise_sum(abs2) / static_cast<double>(n);

  const auto& hist = out.mean_im_history;
  const std::size_t window = std::min<std::size_t>(5, hist.size());
  const auto [lo, hi] = std::minmax_element(hist.end() - static_cast<std::ptrdiff_t>(window), hist.end());
  out.drift = (*hi - *lo) / std::max(std::abs(out.mean_im), 1e-300);
  out.converged = out.drift < 1e-3;

  const auto [imin, imax] = std::minmax_element(im.begin(), im.end());
  double left = *imin;
  double right = *imax;
  if (right - left < 1e-12 * std::max(1.0, std::abs(left))) {
    const double pad = 1e-6 * std::max(1.0, std::abs(left));
    left -= pad;
    right += pad;
  }
  const std::size_t bins = std::max<std::size_t>(1, params.histogram_bins);
  out.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    out.bin_edges[b] = left + (right - left) * static_cast<double>(b) / static_cast<double>(bins);
  }
  out.counts.assign(bins, 0);
  for (double v : im) {
    auto b = static_cast<std::size_t>((v - left) / (right - left) * static_cast<double>(bins));
    out.counts[std::min(b, bins - 1)]++;
  }
  out.pool = std::move(pool);
  return out;
}

double simon_wolff_sum(const Hamiltonian& h, ComplexEnergy z, Eigen::Index x) {
  if (!(z.eps > 0.0)) throw ValidationError("simon_wolff_sum: eps must be > 0");
  return green_column(h, z, x).squaredNorm();
}

}  // namespace anderson
