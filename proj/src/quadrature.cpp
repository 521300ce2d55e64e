// Singular integrals against the single-site density.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

#include "anderson/criteria.hpp"
#include "anderson/error.hpp"

namespace anderson {

namespace {

using boost::math::quadrature::gauss_kronrod;

const UniformLaw& require_uniform(const DisorderSpec& law, const char* who) {
  const auto* u = std::get_if<UniformLaw>(&law.law);
  if (u == nullptr) {
    throw ValidationError(std::string(who) + ": needs an absolutely continuous law (uniform); point masses have no density");
  }
  return *u;
}

// Integral of f between e and m (either order) where f may blow up like |v - e|^{-s} at e.
// The substitution v = e +/- w^q with q = 1/(1-s) makes the integrand bounded.
// f receives v as (base, offset) so distances to the breakpoint keep full precision.
template <class F>
double integrate_from_breakpoint(const F& f, double e, double m, double s) {
  if (e == m) return 0.0;
  const double q = 1.0 / (1.0 - s);
  const double sign = m > e ? 1.0 : -1.0;
  const double w_max = std::pow(std::abs(m - e), 1.0 / q);
  auto g = [&](double w) {
    if (w <= 0.0) w = 1e-300;
    return f(e, sign * std::pow(w, q)) * q * std::pow(w, q - 1.0);
  };
  double error = 0.0;
  const double value = gauss_kronrod<double, 31>::integrate(g, 0.0, w_max, 12, 1e-11, &error);
  return value;
}

template <class F>
double integrate_with_breakpoints(const F& f, double lo, double hi, std::vector<double> points, double s) {
  points.push_back(lo);
  points.push_back(hi);
  for (auto& p : points) p = std::clamp(p, lo, hi);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double l = points[i];
    const double r = points[i + 1];
    const double mid = 0.5 * (l + r);
    total += integrate_from_breakpoint(f, l, mid, s);
    total += integrate_from_breakpoint(f, r, mid, s);
  }
  return total;
}

}  // namespace

double weighted_singular_integral(const DisorderSpec& law, double s, std::complex<double> beta,
                                  double power_a, std::complex<double> a) {
  const auto& u = require_uniform(law, "singular integral");
  if (!(s > 0.0 && s < 1.0)) {
    throw ValidationError("singular integral: s must lie in (0, 1); for s >= 1 the integral may diverge");
  }
  const double density = 1.0 / (u.b - u.a);
  auto f = [&](double base, double offset) {
    const double db = std::abs(std::complex<double>((base - beta.real()) + offset, -beta.imag()));
    double value = density * std::pow(db, -s);
    if (power_a != 0.0) value *= std::pow(std::abs(std::complex<double>((base - a.real()) + offset, -a.imag())), power_a);
    return value;
  };
  return integrate_with_breakpoints(f, u.a, u.b, {beta.real(), a.real()}, s);
}

double apriori_integral(const DisorderSpec& law, double s, std::complex<double> beta) {
  return weighted_singular_integral(law, s, beta, 0.0, {});
}

double apriori_constant(const DisorderSpec& law, double s) {
  const auto& u = require_uniform(law, "apriori_constant");
  // v -> int rho |v - beta|^{-s} is concave in real beta on the support and
  // decreasing outside it; golden-section search on [a, b].
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = u.a;
  double hi = u.b;
  auto value = [&](double beta) { return apriori_integral(law, s, beta); };
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = value(x1);
  double f2 = value(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-9 * (u.b - u.a); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = value(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = value(x1);
    }
  }
  return std::max({f1, f2, value(0.5 * (lo + hi))});
}

DecouplingResult decoupling_check(const DisorderSpec& law, double s, const std::vector<double>& alpha_grid,
                                  const std::vector<double>& beta_grid) {
  require_uniform(law, "decoupling_check");
  if (alpha_grid.empty() || beta_grid.empty()) throw ValidationError("decoupling_check: grids must be non-empty");
  DecouplingResult out;
  bool found = false;
  for (double b : beta_grid) {
    const double lhs = apriori_integral(law, s, b);
    for (double a : alpha_grid) {
      const double rhs = weighted_singular_integral(law, s, b, s, a);
      if (rhs < 1e-14) {
        out.excluded.emplace_back(a, b);
        continue;
      }
      const double ratio = lhs / rhs;
      if (!found || ratio > out.c2) {
        out.c2 = ratio;
        out.alpha = a;
        out.beta = b;
        found = true;
      }
    }
  }
  if (!found) throw NumericalError("decoupling_check: every grid point was excluded");
  return out;
}

DecayFit log_linear_fit(const std::vector<double>& xs, const std::vector<double>& values) {
  if (xs.size() != values.size()) throw ValidationError("decay fit: size mismatch");
  if (xs.size() < 2) throw ValidationError("decay fit: needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> ys(values.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(values[i] > 0.0)) throw ValidationError("decay fit: values must be positive");
    ys[i] = std::log(values[i]);
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("decay fit: distances must not all coincide");
  DecayFit fit;
  fit.rate = sxy / sxx;
  fit.intercept = my - fit.rate * mx;
  // A constant series has nothing to explain.
  const double scale = std::max(1.0, std::abs(my));
  if (syy <= 1e-24 * scale * scale * n) {
    fit.rate = 0.0;
    fit.r_squared = 0.0;
    return fit;
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.rate * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = 1.0 - ss_res / syy;
  return fit;
}

DecayFit decay_rate_fit(const std::vector<double>& distances, const std::vector<double>& values) {
  if (distances.size() < 4) throw ValidationError("decay_rate_fit: needs at least 4 points");
  return log_linear_fit(distances, values);
}

}  // namespace anderson
