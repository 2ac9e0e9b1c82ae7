#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "bbm/errors.hpp"
#include "bbm/mc_kernel.hpp"
#include "bbm/special.hpp"

using namespace bbm;
using namespace bbm::mc;

namespace {

double gauss(double x, double var) { return std::exp(-x * x / (2 * var)) / std::sqrt(2 * std::numbers::pi * var); }

SamplerConfig cfg(std::size_t n, double step, std::uint64_t seed) {
  SamplerConfig c;
  c.n_samples = n;
  c.step = step;
  c.seed = seed;
  c.workers = 1;
  return c;
}

}  // namespace

TEST_CASE("trivial weights") {
  WeightSpec w;
  w.beta = 0.0;
  const auto m = estimate_total_mass(1.0, 3.0, 0.5, w, cfg(200, 0.05, 1));
  CHECK(m.value == doctest::Approx(1.0).epsilon(1e-14));
  WeightSpec w1;
  const auto e = estimate_total_mass(2.0, 2.0, 0.5, w1, cfg(200, 0.05, 1));
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-14));
  const auto g = estimate_Gtilde(1.0, 0.2, 4.0, -0.7, w, cfg(200, 0.05, 1));
  CHECK(g.value == doctest::Approx(gauss(-0.9, 3.0)).epsilon(1e-12));
}

TEST_CASE("weights are ordered by the envelope on shared paths") {
  WeightSpec none;
  none.alpha = 1.2;
  none.beta = 0.8;
  none.envelope = make_envelope(0.5, 1.0, 0.5, 1.2);
  WeightSpec plus = none, minus = none;
  plus.kind = EnvelopeKind::Plus;
  minus.kind = EnvelopeKind::Minus;
  const auto c = cfg(2000, 0.05, 9);
  const double s = 2.0, t = 6.0, x = 0.5, y = 1.0;
  const double vp = estimate_Gtilde(s, x, t, y, plus, c).value;
  const double v0 = estimate_Gtilde(s, x, t, y, none, c).value;
  const double vm = estimate_Gtilde(s, x, t, y, minus, c).value;
  CHECK(vp <= v0);
  CHECK(v0 <= vm);
  CHECK(vp > 0.0);
  CHECK(vm <= gauss(y - x, t - s));
}

TEST_CASE("localization") {
  WeightSpec w;
  w.alpha = 1.0;
  w.beta = 0.5;
  const auto c = cfg(2000, 0.05, 4);
  const auto r = localization_probe(1.0, 8.0, 0.0, 0.0, 0.3, w, c);
  CHECK(r.ratio >= 0.0);
  CHECK(r.ratio <= 1.0);
  CHECK(r.restricted.value <= r.unrestricted.value);
  const auto wide = localization_probe(1.0, 8.0, 0.0, 0.0, 20.0, w, c);
  CHECK(wide.ratio == 0.0);
  CHECK_THROWS_AS(localization_probe(1.0, 8.0, 0.0, 0.0, 0.0, w, c), DomainError);
}

TEST_CASE("bridge barrier") {
  CHECK(bridge_barrier_probability(0.0, 0.0, 1.0, 0.0, 1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  const auto e = bridge_barrier_mc(0.0, 0.0, 1.0, 0.0, 1.0, cfg(4000, 0.05, 2));
  CHECK(std::abs(e.value - std::exp(-2.0)) < 4.0 * e.std_error + 1e-3);
  CHECK_THROWS_AS(bridge_barrier_probability(0.0, 2.0, 1.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(bridge_barrier_probability(1.0, 0.0, 1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("envelope threshold matches the closed form") {
  for (double alpha : {0.8, 1.0, 1.5}) {
    for (double a : {0.5, 2.0, 4.0}) {
      const double eta = std::min(0.5, alpha / (alpha + a));
      CHECK(envelope_monotone(0.5, a, 0.5, alpha, 0.99 * eta));
      if (eta < 0.5) CHECK_FALSE(envelope_monotone(0.5, a, 0.5, alpha, 1.05 * eta));
      CHECK(make_envelope(0.5, a, 0.5, alpha).eta == doctest::Approx(eta).epsilon(0.02));
    }
  }
  ErrorEnvelope env;
  env.L = 2.0;
  env.b = 0.5;
  CHECK(env.r0() == doctest::Approx(16.0));
  CHECK(env.plus(100.0, 1.0) == 1.0);
  CHECK(env.minus(100.0, 1.0) == -env.eta);
}

TEST_CASE("determinism and sampler validation") {
  WeightSpec w;
  const auto a = estimate_total_mass(1.0, 3.0, 0.0, w, cfg(500, 0.05, 42));
  const auto b = estimate_total_mass(1.0, 3.0, 0.0, w, cfg(500, 0.05, 42));
  auto c4 = cfg(500, 0.05, 42);
  c4.workers = 4;
  const auto d = estimate_total_mass(1.0, 3.0, 0.0, w, c4);
  const auto e = estimate_total_mass(1.0, 3.0, 0.0, w, cfg(500, 0.05, 43));
  CHECK(a.value == b.value);
  CHECK(a.value == d.value);
  CHECK(a.value != e.value);
  CHECK_THROWS_AS(estimate_total_mass(1.0, 3.0, 0.0, w, cfg(99, 0.05, 1)), ConfigError);
  CHECK_THROWS_AS(estimate_total_mass(1.0, 3.0, 0.0, w, cfg(500, 0.2, 1)), ConfigError);
  CHECK_THROWS_AS(estimate_total_mass(0.0, 3.0, 0.0, w, cfg(500, 0.05, 1)), DomainError);
}

TEST_CASE("bessel functions") {
  for (double x : {0.0, 0.3, 5.0, 19.9, 20.1, 45.0, 300.0})
    CHECK(special::bessel_i0(x) == doctest::Approx(boost::math::cyl_bessel_i(0, x)).epsilon(1e-13));
  CHECK(special::log_bessel_i0(2000.0) ==
        doctest::Approx(2000.0 - 0.5 * std::log(2 * std::numbers::pi * 2000.0) + std::log1p(1.0 / 16000.0 + 9.0 / (2 * 16000.0 * 16000.0) + 225.0 / (6 * std::pow(16000.0, 3)))).epsilon(1e-12));
  for (double r0 : {0.0, 1.0, 6.0}) {
    for (double s : {0.5, 2.0}) {
      auto f = [&](double z) { return special::bessel_density(r0, s, z); };
      const double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, r0 + 40.0, 15, 1e-13);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
      for (double z = 0.0; z < r0 + 10; z += 0.37) CHECK(f(z) <= special::bessel_density_upper(r0, s, z) * (1 + 1e-12));
    }
  }
  CHECK_THROWS_AS(special::bessel_i0(-1.0), DomainError);
}

TEST_CASE("halving the step moves estimates by less than two standard errors") {
  WeightSpec w;
  w.alpha = 1.0;
  w.beta = 1.0;
  for (double x : {0.0, 1.0}) {
    const auto a = estimate_total_mass(1.0, 4.0, x, w, cfg(20000, 0.1, 31));
    const auto b = estimate_total_mass(1.0, 4.0, x, w, cfg(20000, 0.05, 31));
    CHECK(std::abs(a.value - b.value) < 2.0 * std::hypot(a.std_error, b.std_error));
    const auto ga = estimate_Gtilde(1.0, x, 4.0, 0.5, w, cfg(20000, 0.1, 32));
    const auto gb = estimate_Gtilde(1.0, x, 4.0, 0.5, w, cfg(20000, 0.05, 32));
    CHECK(std::abs(ga.value - gb.value) < 2.0 * std::hypot(ga.std_error, gb.std_error));
  }
}
