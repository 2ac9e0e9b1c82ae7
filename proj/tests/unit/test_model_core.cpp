#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bbm/errors.hpp"
#include "bbm/model_core.hpp"

using namespace bbm;
using namespace bbm::model;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
// ground state of -f'' + |x| f: minus the first zero of Ai' (mpmath, 20 digits)
constexpr double kAiryLambda0 = 1.0187929716474710890;
}  // namespace

TEST_CASE("rate is 2pi periodic for every family") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> th(-50.0, 50.0);
  std::uniform_real_distribution<double> al(0.3, 3.0);
  for (auto fam : {RateFamily::SinPow, RateFamily::PowClamp, RateFamily::Homogeneous}) {
    for (int i = 0; i < 1000; ++i) {
      const auto p = make_params(al(gen), 0.2, fam);
      const double t = th(gen);
      const double b = branching_rate(t, p);
      CHECK(b >= 0.0);
      CHECK(b <= 1.0);
      CHECK(branching_rate(t + 2 * kPi, p) == doctest::Approx(b).epsilon(1e-12));
      CHECK(branching_rate(t - 6 * kPi, p) == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("sinpow endpoint values and wrap") {
  const auto p = make_params(1.3, 1.0);
  CHECK(branching_rate(0.0, p) == 1.0);
  CHECK(branching_rate(kPi, p) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(branching_rate(-kPi, p) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
}

TEST_CASE("sinpow rate increases with alpha at fixed angle") {
  for (double t : {0.1, 0.7, 1.5, 2.5, 3.0}) {
    double prev = -1.0;
    for (double a = 0.25; a <= 4.0; a += 0.25) {
      const double b = branching_rate(t, make_params(a, 1.0));
      CHECK(b >= prev);
      prev = b;
    }
  }
}

TEST_CASE("small-angle expansion of sinpow") {
  for (double a : {0.7, 1.0, 1.6, 2.0}) {
    const auto p = make_params(a, 1.0);
    const double beta = p.effective_beta();
    CHECK(beta == doctest::Approx(std::pow(2.0, -a)));
    for (double t = -0.1; t <= 0.1; t += 0.001) {
      const double b = branching_rate(t, p);
      CHECK(std::abs(b - (1.0 - beta * std::pow(std::abs(t), a))) <= t * t);
    }
  }
}

TEST_CASE("powclamp and homogeneous") {
  const auto p = make_params(1.0, 0.5, RateFamily::PowClamp);
  CHECK(branching_rate(1.0, p) == doctest::Approx(0.5));
  CHECK(branching_rate(3.0, p) == 0.0);
  CHECK(p.effective_beta() == 0.5);
  const auto h = make_params(1.0, 1.0, RateFamily::Homogeneous);
  CHECK(branching_rate(2.0, h) == 1.0);
  CHECK(branching_rate_at(0.0, 0.0, p) == 1.0);
  CHECK(branching_rate_at(-1.0, 1e-300, p) == 0.0);
}

TEST_CASE("two theta1 formulas agree") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> al(0.7, 1.95), be(0.05, 4.0), la(0.5, 3.0);
  for (int i = 0; i < 50; ++i) {
    const auto p = make_params(al(gen), be(gen), RateFamily::PowClamp);
    const double l0 = la(gen);
    const auto c = make_constants(p, l0);
    CHECK(c.theta1 == doctest::Approx(theta1_alternative(p.alpha, p.beta, l0)).epsilon(1e-12));
    CHECK(c.kappa == doctest::Approx(2 * p.alpha / (2 + p.alpha)));
  }
}

TEST_CASE("centering values for alpha = 1, beta = 1") {
  const auto p = make_params(1.0, 1.0, RateFamily::PowClamp);
  const auto c = make_constants(p, kAiryLambda0);
  CHECK(c.theta1 == doctest::Approx(1.925398065695399).epsilon(1e-12));
  CHECK(log_coefficient(1.0) == doctest::Approx(4.0 / (3.0 * kSqrt2)).epsilon(1e-14));
  CHECK(centering_m(1.0, c) == doctest::Approx(kSqrt2 - c.theta1 / kSqrt2).epsilon(1e-14));
  CHECK(centering_m(1000.0, c) == doctest::Approx(1394.0862479516677).epsilon(1e-10));
  CHECK(barrier_m_plus(100.0, c) == doctest::Approx(181.15371114721845).epsilon(1e-10));
  for (double t = 1.0; t < 1e4; t *= 1.7) CHECK(barrier_m_plus(t, c) - centering_m(t, c) >= 0.0);
  for (double t = 1.5; t < 1e4; t *= 1.7) CHECK(barrier_m_plus(t, c) - centering_m(t, c) > 0.0);
}

TEST_CASE("centering domain") {
  const auto c = make_constants(make_params(1.0, 1.0, RateFamily::PowClamp), kAiryLambda0);
  CHECK_THROWS_AS(centering_m(0.5, c), DomainError);
  CHECK_THROWS_AS(barrier_m_plus(0.99, c), DomainError);
  const auto bad = make_constants(make_params(2.5, 1.0, RateFamily::PowClamp), 1.0);
  CHECK_THROWS_AS(centering_m(10.0, bad), DomainError);
  CHECK_THROWS_AS(tube_upper(0.5, 10.0, 1.0, 0.1, c), DomainError);
  CHECK_THROWS_AS(tube_lower(11.0, 10.0, 0.1, c), DomainError);
}

TEST_CASE("tube ends") {
  const auto c = make_constants(make_params(1.0, 1.0, RateFamily::PowClamp), kAiryLambda0);
  const double t = 400.0;
  CHECK(tube_upper(t, t, 1.0, 0.1, c) == doctest::Approx(centering_m(t, c)));
  CHECK(tube_lower(0.0, t, 0.1, c) == 0.0);
  for (double s = 2.0; s < t; s += 7.0) CHECK(tube_lower(s, t, 0.1, c) <= tube_upper(s, t, 1.0, 0.1, c) + 1e-12);
}

TEST_CASE("conjectured corrections") {
  const auto r2 = conjectured_corrections(make_params(2.0, 1.0, RateFamily::PowClamp));
  CHECK(r2.alpha2_log_coefficient == doctest::Approx(2.0 / kSqrt2));
  CHECK_FALSE(r2.alpha_gt2_log_coefficient.has_value());
  const auto r4 = conjectured_corrections(make_params(4.0, 1.0, RateFamily::PowClamp));
  REQUIRE(r4.alpha_gt2_log_coefficient.has_value());
  CHECK(*r4.alpha_gt2_log_coefficient == doctest::Approx(1.25 / kSqrt2));
  CHECK(r4.label.find("conjecture") != std::string::npos);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(make_params(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(make_params(1.0, -1.0), ConfigError);
  CHECK_THROWS_AS(make_params(2.5, 1.0, RateFamily::SinPow, true), ConfigError);
  CHECK_NOTHROW(make_params(1.5, 1.0, RateFamily::SinPow, true));
  CHECK_THROWS_AS(make_params(1.0, 1.0, RateFamily::Custom), ConfigError);
  CHECK_THROWS_AS(rate_family_from_string("quadratic"), ConfigError);
}

TEST_CASE("custom table") {
  RateTable t;
  t.values.assign(10, 0.5);
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t.values.assign(17, 0.5);
  t.values[3] = 1.5;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t.values[3] = 0.5;
  t.values.back() = 0.25;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t.values.back() = 0.5;
  ModelParams p;
  p.rate_family = RateFamily::Custom;
  // linear ramp in |theta|: 1 at 0, 0 at +-pi
  for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = std::abs(static_cast<double>(i) - 8.0) / 8.0;
  for (auto& v : t.values) v = 1.0 - v;
  p.table = t;
  CHECK_NOTHROW(p.validate());
  CHECK(branching_rate(0.0, p) == doctest::Approx(1.0));
  CHECK(branching_rate(kPi / 2, p) == doctest::Approx(0.5));
  CHECK(branching_rate(kPi / 2 + 2 * kPi, p) == doctest::Approx(0.5));
}

TEST_CASE("config text round trip") {
  const auto p = make_params(1.25, 0.75, RateFamily::PowClamp);
  const auto q = params_from_config_text(to_config_text(p));
  CHECK(q.alpha == p.alpha);
  CHECK(q.beta == p.beta);
  CHECK(q.rate_family == p.rate_family);
}
