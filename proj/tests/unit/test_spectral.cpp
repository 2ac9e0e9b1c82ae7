#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/special_functions/airy.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>

#include "bbm/errors.hpp"
#include "bbm/spectral.hpp"

using namespace bbm;
using namespace bbm::spectral;

namespace {

const double kQuarticRoot = std::pow(std::numbers::pi, -0.25);

// first zero of Ai' (the even ground level of -f'' + |x| f is its negative)
double airy_prime_zero1() {
  auto f = [](double x) { return boost::math::airy_ai_prime(x); };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::bisect(f, -1.5, -0.5, tol, it);
  return 0.5 * (r.first + r.second);
}

}  // namespace

TEST_CASE("harmonic oscillator levels and ground state") {
  const auto s = solve_spectrum(2.0, 6, 1e-9);
  REQUIRE(s.levels() == 6);
  for (std::size_t n = 0; n < 6; ++n) CHECK(std::abs(s.eigenvalues[n] - (2.0 * n + 1.0)) < 1e-8);
  CHECK(std::abs(s.evaluate(0, 0.0)) == doctest::Approx(kQuarticRoot).epsilon(1e-6));
  const double sign0 = s.evaluate(0, 0.0) > 0 ? 1.0 : -1.0;
  const double sign1 = s.evaluate(1, 0.5) > 0 ? 1.0 : -1.0;
  for (double x : {-2.5, -1.0, 0.3, 1.7, 3.0}) {
    CHECK(sign0 * s.evaluate(0, x) == doctest::Approx(kQuarticRoot * std::exp(-x * x / 2)).epsilon(1e-5));
    CHECK(sign1 * s.evaluate(1, x) ==
          doctest::Approx(kQuarticRoot * std::sqrt(2.0) * x * std::exp(-x * x / 2)).epsilon(1e-5));
  }
}

TEST_CASE("linear potential against Airy functions") {
  const auto s = solve_spectrum(1.0, 2, 1e-9);
  const double ap1 = airy_prime_zero1();
  CHECK(std::abs(s.eigenvalues[0] + ap1) < 1e-11);
  CHECK(std::abs(s.eigenvalues[1] + boost::math::airy_ai_zero<double>(1)) < 1e-11);
  // phi_0(x) is proportional to Ai(x + a'_1) for x >= 0
  const double r0 = s.evaluate(0, 0.0) / boost::math::airy_ai(ap1);
  for (double x : {0.5, 1.0, 2.0, 4.0}) CHECK(s.evaluate(0, x) == doctest::Approx(r0 * boost::math::airy_ai(x + ap1)).epsilon(1e-5));
}

TEST_CASE("ground level for a kinked potential") {
  // shooting with an adaptive Runge-Kutta integrator (rtol 1e-13) from f(0) = 1,
  // f'(0) = 0, root of f(X) for X = 12 (25 for alpha = 0.5)
  const std::pair<double, double> oracle[] = {
      {0.5, 1.059617367551359}, {0.8, 1.0323289080784908}, {1.5, 1.001184372513237}};
  for (const auto& [alpha, lambda0] : oracle) {
    CAPTURE(alpha);
    const auto s = solve_spectrum(alpha, 1, 1e-10);
    CHECK(std::abs(s.eigenvalues[0] - lambda0) < 1e-10);
    CHECK(s.error_estimates[0] < 1e-10);
  }
}

TEST_CASE("exact rescaling in q") {
  const auto s1 = solve_spectrum(2.0, 3, 1e-9);
  const auto s16 = rescale_to_q(s1, 16.0);
  CHECK(s16.eigenvalues[0] == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(s16.eigenvalues[2] == doctest::Approx(20.0).epsilon(1e-8));
  // rescaled eigenfunctions stay normalized
  CHECK(inner_product(s16, 0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  const auto sq = solve_spectrum(1.3, 3, 1e-9, SpectrumOptions{.q = 3.0});
  const auto r = rescale_to_q(solve_spectrum(1.3, 3, 1e-9), 3.0);
  for (std::size_t n = 0; n < 3; ++n) CHECK(std::abs(sq.eigenvalues[n] - r.eigenvalues[n]) < 1e-8);
}

TEST_CASE("weyl constant closed forms") {
  CHECK(weyl_constant(2.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(weyl_constant(1.0) == doctest::Approx(4.0 / (3.0 * std::numbers::pi)).epsilon(1e-10));
  CHECK_THROWS_AS(weyl_constant(0.0), DomainError);
}

TEST_CASE("orthonormality, oscillation and ordering") {
  for (double a : {0.8, 1.5}) {
    const auto s = solve_spectrum(a, 8, 1e-8);
    for (std::size_t m = 0; m < 8; ++m) {
      CHECK(count_sign_changes(s, m) == m);
      if (m > 0) CHECK(s.eigenvalues[m] > s.eigenvalues[m - 1]);
      for (std::size_t n = m; n < 8; ++n) CHECK(std::abs(inner_product(s, m, n) - (m == n ? 1.0 : 0.0)) < 1e-6);
    }
    for (std::size_t n = 0; n < 8; ++n) CHECK(s.residuals[n] <= s.accuracy * (1.0 + s.eigenvalues[n]));
  }
}

TEST_CASE("larger domain leaves the ground level unchanged") {
  const auto a = solve_spectrum(1.2, 1, 1e-10);
  SpectrumOptions o;
  o.x_max = 2.0 * a.x_max();
  const auto b = solve_spectrum(1.2, 1, 1e-10, o);
  CHECK(std::abs(a.eigenvalues[0] - b.eigenvalues[0]) < 1e-9);
}

TEST_CASE("ground state is positive, even, and log-concave where sampled") {
  const auto s = solve_spectrum(1.0, 1, 1e-9);
  const double sgn = s.evaluate(0, 0.0) > 0 ? 1.0 : -1.0;
  double prev = 1e9;
  for (double x = 0.0; x < 6.0; x += 0.1) {
    const double v = sgn * s.evaluate(0, x);
    CHECK(v > 0.0);
    CHECK(v <= prev);
    CHECK(s.evaluate(0, -x) == doctest::Approx(s.evaluate(0, x)));
    prev = v;
  }
  for (double x = 0.2; x < 5.0; x += 0.2) {
    const double l = std::log(sgn * s.evaluate(0, x - 0.1)), c = std::log(sgn * s.evaluate(0, x)),
                 r = std::log(sgn * s.evaluate(0, x + 0.1));
    CHECK(l + r - 2 * c <= 1e-9);
  }
}

TEST_CASE("tail envelope") {
  const auto s = solve_spectrum(1.0, 6, 1e-8);
  const double C = fit_tail_constant(s, 5);
  CHECK(std::isfinite(C));
  CHECK(tail_bound_ratio(s, C, 5) <= 1.0 + 1e-12);
}

TEST_CASE("weyl report shape") {
  const auto s = solve_spectrum(2.0, 21, 1e-6);
  const auto w = weyl_check(s, {5, 10, 20});
  // harmonic case: lambda_n = 2n + 1 against (2n)^1, error 1/(2n)-ish
  CHECK(w.error_at(10) < w.error_at(5));
  CHECK(w.decreasing_at_checkpoints);
}

TEST_CASE("derivative tail and convexity past the turning point") {
  for (double a : {0.8, 1.0, 1.5}) {
    CAPTURE(a);
    const auto s = spectral::solve_spectrum(a, 1, 1e-8);
    const double d = 1e-3;
    const double x_half = 0.5 * s.x_max();
    for (double x = x_half; x < s.x_max() - 2 * d; x += 0.5)
      CHECK(std::abs(s.evaluate(0, x + d) - s.evaluate(0, x - d)) / (2 * d) < 1e-10);
    const double turn = std::pow(s.eigenvalues[0], 1.0 / a);
    for (double x = turn; x < 8.0; x += 0.05) {
      const double l = s.evaluate(0, x - d), c = s.evaluate(0, x), r = s.evaluate(0, x + d);
      CHECK(l + r - 2 * c >= -1e-12);
      CHECK(r <= l);
    }
  }
}
