#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anderson/error.hpp"
#include "anderson/operator.hpp"
#include "support.hpp"

using namespace anderson;

namespace {

PotentialSample zeros(const Topology& t) { return {std::vector<double>(t.vertex_count(), 0.0), 0}; }

}  // namespace

TEST_CASE("disorder laws validate their parameters") {
  CHECK_NOTHROW((DisorderSpec{UniformLaw{0, 1}, 1.0, 0}.validate()));
  CHECK_THROWS_AS((DisorderSpec{UniformLaw{1, 1}, 1.0, 0}.validate()), ValidationError);
  CHECK_THROWS_AS((DisorderSpec{BernoulliLaw{1.5}, 1.0, 0}.validate()), ValidationError);
  CHECK_THROWS_AS((DisorderSpec{DiscreteLaw{{0, 1}, {0.5, 0.4}}, 1.0, 0}.validate()), ValidationError);
  CHECK_THROWS_AS((DisorderSpec{DiscreteLaw{{0, 1}, {0.5}}, 1.0, 0}.validate()), ValidationError);
  CHECK_THROWS_AS((DisorderSpec{UniformLaw{0, 1}, -1.0, 0}.validate()), ValidationError);
  DisorderSpec u{UniformLaw{-1, 3}, 1.0, 0};
  CHECK(u.absolutely_continuous());
  CHECK(u.density_sup() == doctest::Approx(0.25));
  CHECK((u.support() == std::pair<double, double>{-1, 3}));
  CHECK_FALSE((DisorderSpec{BernoulliLaw{0.3}, 1.0, 0}.absolutely_continuous()));
}

TEST_CASE("potential samples: support, determinism, independence across realizations") {
  auto t = Topology::lattice({2000});
  DisorderSpec spec{UniformLaw{2, 4}, 1.0, 5};
  const auto a = sample_potential(spec, t, 0);
  CHECK(a.values == sample_potential(spec, t, 0).values);
  CHECK(a.values != sample_potential(spec, t, 1).values);
  double sum = 0.0;
  for (double v : a.values) {
    REQUIRE(v >= 2.0);
    REQUIRE(v <= 4.0);
    sum += v;
  }
  CHECK(sum / 2000.0 == doctest::Approx(3.0).epsilon(0.02));

  DisorderSpec b{BernoulliLaw{0.25}, 1.0, 5};
  double ones = 0.0;
  for (double v : sample_potential(b, t, 3).values) {
    REQUIRE((v == 0.0 || v == 1.0));
    ones += v;
  }
  CHECK(ones / 2000.0 == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("delone potentials vanish off the mask") {
  auto t = Topology::delone({20}, 1, 3);
  const auto p = sample_potential(DisorderSpec{UniformLaw{1, 2}, 1.0, 0}, t, 0);
  for (VertexId v = 0; v < t.vertex_count(); ++v) CHECK((p.values[v] == 0.0) == !t.mask()[v]);
}

TEST_CASE("path adjacency spectrum matches the closed form") {
  const int n = 40;
  auto t = Topology::lattice({n});
  const auto ev = eigenvalues(assemble_hamiltonian(t, zeros(t), 0.0));
  std::vector<double> exact;
  for (int k = 1; k <= n; ++k) exact.push_back(2.0 * std::cos(std::numbers::pi * k / (n + 1)));
  std::sort(exact.begin(), exact.end());
  for (int k = 0; k < n; ++k) CHECK(ev(k) == doctest::Approx(exact[k]).epsilon(1e-12));
}

TEST_CASE("conventions: adjacency vs laplacian entries") {
  auto g = Topology::lattice({3, 3});
  DisorderSpec spec{UniformLaw{0, 1}, 2.0, 1};
  const auto pot = sample_potential(spec, g, 0);
  const Eigen::MatrixXd a = testing::adjacency(g);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(9, 9);
  for (int i = 0; i < 9; ++i) v(i, i) = 2.0 * pot.values[i];
  const Eigen::MatrixXd adj = assemble_hamiltonian(g, pot, 2.0, Convention::adjacency).dense();
  CHECK((adj - (a + v)).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXd deg = Eigen::MatrixXd::Zero(9, 9);
  for (int i = 0; i < 9; ++i) deg(i, i) = a.row(i).sum();
  const Eigen::MatrixXd lap = assemble_hamiltonian(g, pot, 2.0, Convention::laplacian).dense();
  CHECK((lap - (deg - a + v)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("restriction is the principal submatrix") {
  auto g = Topology::lattice({4, 4});
  DisorderSpec spec{UniformLaw{0, 1}, 1.0, 2};
  const auto h = assemble_hamiltonian(g, sample_potential(spec, g, 0), 1.0);
  const Region r({1, 2, 5, 6, 11});
  const auto hr = restrict_to(h, r);
  CHECK(hr.index_map == r.vertices);
  const Eigen::MatrixXd full = h.dense();
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      CHECK(hr.dense()(i, j) == full(static_cast<Eigen::Index>(r.vertices[i]), static_cast<Eigen::Index>(r.vertices[j])));
    }
  }
  CHECK(hr.local_index(5) == 2);
  CHECK_FALSE(hr.local_index(0).has_value());
}

TEST_CASE("boundary decomposition is exact") {
  auto g = Topology::lattice({5, 5});
  for (auto conv : {Convention::adjacency, Convention::laplacian}) {
    const auto h = assemble_hamiltonian(g, sample_potential(DisorderSpec{UniformLaw{0, 1}, 1.0, 3}, g, 0), 1.0, conv);
    const Region r({0, 1, 2, 5, 6, 7});
    const auto d = boundary_operator(h, r);
    CHECK(d.residual == 0.0);
    const auto cut = boundary_sets(g, r).edges.size();
    CHECK(static_cast<std::size_t>(d.boundary.nonZeros()) == 2 * cut);
    const Eigen::MatrixXd up(d.boundary);
    CHECK(up.cwiseAbs().maxCoeff() == 1.0);
    CHECK(up.sum() == doctest::Approx(h.hopping() * 2.0 * static_cast<double>(cut)));
  }
}

TEST_CASE("Lanczos extremes agree with the dense solver") {
  auto g = Topology::lattice({15, 14});
  const auto h = assemble_hamiltonian(g, sample_potential(DisorderSpec{UniformLaw{0, 1}, 3.0, 9}, g, 0), 3.0);
  const auto ev = eigenvalues(h);
  const auto ex = extreme_eigenvalues(h);
  CHECK(ex.min == doctest::Approx(ev(0)).epsilon(1e-9));
  CHECK(ex.max == doctest::Approx(ev(ev.size() - 1)).epsilon(1e-9));
}

TEST_CASE("dense cap raises a budget error") {
  auto t = Topology::lattice({30});
  const auto h = assemble_hamiltonian(t, zeros(t), 0.0);
  CHECK_THROWS_AS(eigendecompose(h, 10), BudgetError);
  CHECK_THROWS_AS(eigenvalues(h, 10), BudgetError);
}

TEST_CASE("spectral hull of the clean chain sits inside [-2, 2]") {
  auto t = Topology::lattice({200});
  const auto hull = spectrum_hull(DisorderSpec{UniformLaw{0, 1}, 0.0, 0}, t, 2);
  CHECK(hull.empirical_max == doctest::Approx(2.0 * std::cos(std::numbers::pi / 201.0)).epsilon(1e-10));
  CHECK(hull.theory_min == -2.0);
  CHECK(hull.theory_max == 2.0);
  CHECK(infinite_adjacency_radius(Topology::bethe(3, 2)) == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(infinite_adjacency_radius(Topology::lattice({3, 3, 3})) == 6.0);
}

TEST_CASE("translation covariance on a periodic lattice") {
  auto t = Topology::lattice({6, 5}, Boundary::periodic);
  CHECK((translation_covariance_check(DisorderSpec{UniformLaw{0, 1}, 1.5, 4}, t, {2, 3}) == 0.0));
  CHECK_THROWS_AS((translation_covariance_check(DisorderSpec{}, Topology::lattice({5}), {1})), ValidationError);
}

TEST_CASE("integrated density of states is a monotone fraction") {
  auto t = Topology::lattice({100});
  const std::vector<double> es{-3, -1, 0, 1, 2, 4};
  const auto ids = ids_estimate(DisorderSpec{UniformLaw{0, 1}, 1.0, 0}, t, es, 10);
  CHECK(ids.front().value == 0.0);
  CHECK(ids.back().value == 1.0);
  for (std::size_t i = 1; i < ids.size(); ++i) CHECK(ids[i].value >= ids[i - 1].value);
}

TEST_CASE("Weyl residual of a truncated plane wave") {
  auto kind = Topology::lattice({1});
  for (int n : {10, 40, 160}) CHECK(weyl_residual(kind, 0.5, n) == doctest::Approx(2.0 / std::sqrt(n)).epsilon(1e-9));
  CHECK(weyl_residual(Topology::lattice({1, 1}), 1.0, 30) < weyl_residual(Topology::lattice({1, 1}), 1.0, 10));
}
