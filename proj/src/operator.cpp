#include "anderson/operator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "anderson/error.hpp"
#include "anderson/parallel.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::uint64_t potential_stream = 0x706f74656e7469ULL;
}  // namespace

void DisorderSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("disorder: lambda must be finite and >= 0");
  }
  std::visit(overloaded{
                 [](const UniformLaw& u) {
                   if (!(u.a < u.b)) throw ValidationError("disorder: uniform law needs a < b");
                 },
                 [](const BernoulliLaw& b) {
                   if (!(b.p >= 0.0 && b.p <= 1.0)) {
                     throw ValidationError("disorder: bernoulli p must lie in [0, 1]");
                   }
                 },
                 [](const DiscreteLaw& d) {
                   if (d.values.empty() || d.values.size() != d.probs.size()) {
                     throw ValidationError("disorder: discrete law needs matching non-empty values and probs");
                   }
                   double total = 0.0;
                   for (double p : d.probs) {
                     if (!(p >= 0.0)) throw ValidationError("disorder: discrete probabilities must be >= 0");
                     total += p;
                   }
                   if (std::abs(total - 1.0) > 1e-12) {
                     throw ValidationError("disorder: discrete probabilities must sum to 1 within 1e-12");
                   }
                   for (double v : d.values) {
                     if (!std::isfinite(v)) throw ValidationError("disorder: discrete values must be finite");
                   }
                 },
             },
             law);
}

std::pair<double, double> DisorderSpec::support() const {
  return std::visit(overloaded{
                        [](const UniformLaw& u) { return std::pair{u.a, u.b}; },
                        [](const BernoulliLaw& b) {
                          if (b.p == 0.0) return std::pair{0.0, 0.0};
                          if (b.p == 1.0) return std::pair{1.0, 1.0};
                          return std::pair{0.0, 1.0};
                        },
                        [](const DiscreteLaw& d) {
                          double lo = std::numeric_limits<double>::infinity();
                          double hi = -lo;
                          for (std::size_t i = 0; i < d.values.size(); ++i) {
                            if (d.probs[i] > 0.0) {
                              lo = std::min(lo, d.values[i]);
                              hi = std::max(hi, d.values[i]);
                            }
                          }
                          return std::pair{lo, hi};
                        },
                    },
                    law);
}

bool DisorderSpec::absolutely_continuous() const noexcept {
  return std::holds_alternative<UniformLaw>(law);
}

double DisorderSpec::density_sup() const {
  if (const auto* u = std::get_if<UniformLaw>(&law)) return 1.0 / (u->b - u->a);
  throw ValidationError("disorder: density requested for a law without a density");
}

double DisorderSpec::quantile(double u) const {
  return std::visit(overloaded{
                        [u](const UniformLaw& l) { return l.a + (l.b - l.a) * u; },
                        [u](const BernoulliLaw& l) { return u < l.p ? 1.0 : 0.0; },
                        [u](const DiscreteLaw& l) {
                          double acc = 0.0;
                          for (std::size_t i = 0; i + 1 < l.values.size(); ++i) {
                            acc += l.probs[i];
                            if (u < acc) return l.values[i];
                          }
                          return l.values.back();
                        },
                    },
                    law);
}

PotentialSample sample_potential(const DisorderSpec& spec, const Topology& topology,
                                 std::uint64_t realization) {
  spec.validate();
  PotentialSample out;
  out.realization = realization;
  out.values.resize(topology.vertex_count());
  const std::uint64_t key = hash_keys(spec.seed, potential_stream, realization);
  const auto& mask = topology.mask();
  for (VertexId v = 0; v < topology.vertex_count(); ++v) {
    out.values[v] = mask[v] ? spec.quantile(to_unit(hash_keys(key, v))) : 0.0;
  }
  return out;
}

std::string to_string(Convention convention) {
  return convention == Convention::adjacency ? "adjacency" : "laplacian";
}

std::optional<Eigen::Index> Hamiltonian::local_index(VertexId v) const {
  auto it = std::lower_bound(index_map.begin(), index_map.end(), v);
  if (it == index_map.end() || *it != v) return std::nullopt;
  return static_cast<Eigen::Index>(it - index_map.begin());
}

Hamiltonian assemble_hamiltonian(const Topology& topology, const PotentialSample& potential,
                                 double lambda, Convention convention) {
  const std::size_t n = topology.vertex_count();
  if (potential.values.size() != n) {
    throw ValidationError("assemble_hamiltonian: potential has " +
                          std::to_string(potential.values.size()) + " values for " +
                          std::to_string(n) + " vertices");
  }
  Hamiltonian h;
  h.convention = convention;
  h.index_map.resize(n);
  std::iota(h.index_map.begin(), h.index_map.end(), VertexId{0});
  const double hop = h.hopping();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n * (topology.max_degree() + 1));
  for (VertexId v = 0; v < n; ++v) {
    double diag = lambda * potential.values[v];
    if (convention == Convention::laplacian) diag += static_cast<double>(topology.degree(v));
    triplets.emplace_back(v, v, diag);
    for (VertexId u : topology.neighbors(v)) triplets.emplace_back(v, u, hop);
  }
  h.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  h.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

Hamiltonian restrict_to(const Hamiltonian& h, const Region& region) {
  if (region.empty()) throw ValidationError("restrict: region is empty");
  std::vector<Eigen::Index> local(region.size());
  for (std::size_t i = 0; i < region.size(); ++i) {
    auto idx = h.local_index(region.vertices[i]);
    if (!idx) {
      throw ValidationError("restrict: vertex " + std::to_string(region.vertices[i]) +
                            " is not in the operator's domain");
    }
    local[i] = *idx;
  }
  std::vector<Eigen::Index> position(static_cast<std::size_t>(h.dimension()), -1);
  for (std::size_t i = 0; i < local.size(); ++i) position[local[i]] = static_cast<Eigen::Index>(i);

  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t j = 0; j < local.size(); ++j) {
    for (SparseMatrix::InnerIterator it(h.matrix, local[j]); it; ++it) {
      const Eigen::Index i = position[it.row()];
      if (i >= 0) triplets.emplace_back(i, static_cast<Eigen::Index>(j), it.value());
    }
  }
  Hamiltonian out;
  out.convention = h.convention;
  out.index_map.resize(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) out.index_map[i] = h.index_map[local[i]];
  const auto m = static_cast<Eigen::Index>(region.size());
  out.matrix.resize(m, m);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

BoundaryDecomposition boundary_operator(const Hamiltonian& h, const Region& region) {
  const auto n = static_cast<std::size_t>(h.dimension());
  const auto in = region.indicator(n);
  std::vector<Eigen::Triplet<double>> cut;
  std::vector<Eigen::Triplet<double>> blocks;
  for (Eigen::Index j = 0; j < h.matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(h.matrix, j); it; ++it) {
      const bool same_side = in[static_cast<std::size_t>(it.row())] == in[static_cast<std::size_t>(j)];
      (same_side ? blocks : cut).emplace_back(it.row(), j, it.value());
    }
  }
  BoundaryDecomposition out;
  out.boundary.resize(h.dimension(), h.dimension());
  out.boundary.setFromTriplets(cut.begin(), cut.end());
  out.block_sum.resize(h.dimension(), h.dimension());
  out.block_sum.setFromTriplets(blocks.begin(), blocks.end());
  const SparseMatrix diff = h.matrix - out.block_sum - out.boundary;
  double r = 0.0;
  for (Eigen::Index j = 0; j < diff.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(diff, j); it; ++it) r = std::max(r, std::abs(it.value()));
  }
  out.residual = r;
  return out;
}

namespace {
void check_dense_cap(const Hamiltonian& h, Eigen::Index cap) {
  if (h.dimension() > cap) {
    throw BudgetError("eigendecompose: dimension " + std::to_string(h.dimension()) +
                      " exceeds the dense cap " + std::to_string(cap) +
                      "; use extreme_eigenvalues (iterative mode) instead");
  }
  if (h.dimension() == 0) throw ValidationError("eigendecompose: empty operator");
}
}  // namespace

SpectralDecomposition eigendecompose(const Hamiltonian& h, Eigen::Index cap) {
  check_dense_cap(h, cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.dense());
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecompose: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::VectorXd eigenvalues(const Hamiltonian& h, Eigen::Index cap) {
  check_dense_cap(h, cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalues: eigensolver did not converge");
  return solver.eigenvalues();
}

ExtremeEigenvalues extreme_eigenvalues(const Hamiltonian& h, double tolerance, int max_iterations) {
  const Eigen::Index n = h.dimension();
  if (n == 0) throw ValidationError("extreme_eigenvalues: empty operator");
  if (n <= 64) {
    const auto ev = eigenvalues(h);
    return {ev(0), ev(n - 1), 0};
  }
  const int kmax = static_cast<int>(std::min<Eigen::Index>(max_iterations, n));
  Eigen::MatrixXd basis(n, kmax + 1);
  Eigen::VectorXd start(n);
  CounterStream stream(0x6c616e637a6f73ULL);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = 0.5 + stream.uniform();
  basis.col(0) = start.normalized();

  std::vector<double> alpha;
  std::vector<double> beta;
  double prev_min = std::numeric_limits<double>::infinity();
  double prev_max = -prev_min;
  ExtremeEigenvalues out;
  for (int k = 0; k < kmax; ++k) {
    Eigen::VectorXd w = h.matrix * basis.col(k);
    alpha.push_back(basis.col(k).dot(w));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeffs = basis.leftCols(k + 1).transpose() * w;
      w -= basis.leftCols(k + 1) * coeffs;
    }
    const double b = w.norm();
    const bool last = (k + 1 == kmax) || b < 1e-14;
    if ((k + 1) % 10 == 0 || last) {
      const int m = k + 1;
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
      const double lo = small.eigenvalues()(0);
      const double hi = small.eigenvalues()(m - 1);
      out = {lo, hi, m};
      const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
      if (last || (std::abs(lo - prev_min) < tolerance * scale &&
                   std::abs(hi - prev_max) < tolerance * scale)) {
        return out;
      }
      prev_min = lo;
      prev_max = hi;
    }
    beta.push_back(b);
    basis.col(k + 1) = w / b;
  }
  return out;
}

double infinite_adjacency_radius(const Topology& topology) {
  if (topology.kind() == TopologyKind::bethe) return 2.0 * std::sqrt(static_cast<double>(topology.branching()));
  return 2.0 * topology.dimension();
}

HullReport spectrum_hull(const DisorderSpec& spec, const Topology& topology,
                         std::size_t n_realizations, unsigned workers) {
  if (n_realizations < 1) throw ValidationError("spectrum_hull: n_realizations must be >= 1");
  spec.validate();
  std::vector<double> lows(n_realizations);
  std::vector<double> highs(n_realizations);
  parallel_for(n_realizations, workers, [&](std::size_t r) {
    const auto pot = sample_potential(spec, topology, r);
    const auto h = assemble_hamiltonian(topology, pot, spec.lambda, Convention::adjacency);
    if (h.dimension() <= default_dense_cap) {
      const auto ev = eigenvalues(h);
      lows[r] = ev(0);
      highs[r] = ev(ev.size() - 1);
    } else {
      const auto ex = extreme_eigenvalues(h);
      lows[r] = ex.min;
      highs[r] = ex.max;
    }
  });
  HullReport report;
  report.realizations = n_realizations;
  report.empirical_min = *std::min_element(lows.begin(), lows.end());
  report.empirical_max = *std::max_element(highs.begin(), highs.end());
  const auto [a, b] = spec.support();
  const double radius = infinite_adjacency_radius(topology);
  report.theory_min = -radius + spec.lambda * a;
  report.theory_max = radius + spec.lambda * b;
  return report;
}

double translation_covariance_check(const DisorderSpec& spec, const Topology& topology,
                                    const std::vector<int>& shift, std::uint64_t realization) {
  if (topology.kind() != TopologyKind::lattice || topology.boundary() != Boundary::periodic) {
    throw ValidationError("translation_covariance_check: needs a periodic lattice; open boundaries break covariance at the edge");
  }
  if (static_cast<int>(shift.size()) != topology.dimension()) {
    throw ValidationError("translation_covariance_check: shift dimension mismatch");
  }
  const std::size_t n = topology.vertex_count();
  // translate[x] = x + shift (mod sides)
  std::vector<VertexId> translate(n);
  for (VertexId v = 0; v < n; ++v) {
    auto c = topology.coordinates(v);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const int side = topology.sides()[k];
      c[k] = ((c[k] + shift[k]) % side + side) % side;
    }
    translate[v] = topology.vertex_at(c);
  }
  const auto pot = sample_potential(spec, topology, realization);
  PotentialSample shifted = pot;
  for (VertexId v = 0; v < n; ++v) shifted.values[translate[v]] = pot.values[v];

  const Eigen::MatrixXd h = assemble_hamiltonian(topology, pot, spec.lambda).dense();
  const Eigen::MatrixXd h_shifted = assemble_hamiltonian(topology, shifted, spec.lambda).dense();
  // (U H U*)(translate[x], translate[y]) = H(x, y)
  Eigen::MatrixXd conjugated(n, n);
  for (VertexId x = 0; x < n; ++x) {
    for (VertexId y = 0; y < n; ++y) conjugated(translate[x], translate[y]) = h(x, y);
  }
  return (conjugated - h_shifted).cwiseAbs().maxCoeff();
}

std::vector<IdsPoint> ids_estimate(const DisorderSpec& spec, const Topology& topology,
                                   const std::vector<double>& energies,
                                   std::size_t n_realizations, unsigned workers) {
  if (!std::is_sorted(energies.begin(), energies.end())) {
    throw ValidationError("ids_estimate: energy grid must be sorted");
  }
  if (n_realizations < 1) throw ValidationError("ids_estimate: n_realizations must be >= 1");
  const std::size_t m = energies.size();
  std::vector<std::vector<double>> fractions(m, std::vector<double>(n_realizations));
  parallel_for(n_realizations, workers, [&](std::size_t r) {
    const auto pot = sample_potential(spec, topology, r);
    const auto ev = eigenvalues(assemble_hamiltonian(topology, pot, spec.lambda));
    const double size = static_cast<double>(ev.size());
    const std::vector<double> sorted(ev.data(), ev.data() + ev.size());
    for (std::size_t i = 0; i < m; ++i) {
      const auto count = std::upper_bound(sorted.begin(), sorted.end(), energies[i]) - sorted.begin();
      fractions[i][r] = static_cast<double>(count) / size;
    }
  });
  std::vector<IdsPoint> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ms = mean_stderr(fractions[i]);
    out[i] = {energies[i], ms.mean, ms.stderr_};
  }
  return out;
}

double weyl_residual(const Topology& lattice_kind, double energy, int n) {
  if (lattice_kind.kind() != TopologyKind::lattice) {
    throw ValidationError("weyl_residual: needs a lattice topology");
  }
  if (n < 1) throw ValidationError("weyl_residual: n must be >= 1");
  const int d = lattice_kind.dimension();
  if (std::abs(energy) > 2.0 * d) {
    throw ValidationError("weyl_residual: |E| > 2d has no real momentum");
  }
  const double theta = std::acos(energy / (2.0 * d));
  // A one-site frame around the side-n cube holds the boundary defect exactly.
  const auto frame = Topology::lattice(std::vector<int>(static_cast<std::size_t>(d), n + 2));
  const std::size_t count = frame.vertex_count();
  std::vector<std::complex<double>> phi(count);
  for (VertexId v = 0; v < count; ++v) {
    const auto c = frame.coordinates(v);
    bool inside = true;
    int phase = 0;
    for (int ck : c) {
      inside = inside && ck >= 1 && ck <= n;
      phase += ck - 1;
    }
    if (inside) phi[v] = std::polar(1.0, theta * phase);
  }
  double residual2 = 0.0;
  double norm2 = 0.0;
  for (VertexId v = 0; v < count; ++v) {
    std::complex<double> hv = -energy * phi[v];
    for (VertexId u : frame.neighbors(v)) hv += phi[u];
    residual2 += std::norm(hv);
    norm2 += std::norm(phi[v]);
  }
  return std::sqrt(residual2 / norm2);
}

}  // namespace anderson
