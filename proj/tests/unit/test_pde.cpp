#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bbm/barriers.hpp"
#include "bbm/errors.hpp"
#include "bbm/galerkin.hpp"
#include "bbm/pde_solver.hpp"
#include "bbm/spectral.hpp"

using namespace bbm;
using namespace bbm::pde;

namespace {

double gauss(double x, double var) { return std::exp(-x * x / (2 * var)) / std::sqrt(2 * std::numbers::pi * var); }

}  // namespace

TEST_CASE("barrier pair sandwiches (1-t)^-alpha") {
  for (double a : {0.8, 1.0, 1.7}) {
    const double T = 0.6, e1 = 0.03, e2 = 0.02;
    const auto bp = build_barriers(T, e1, e2, a);
    for (int i = 0; i <= 10000; ++i) {
      const double t = T * i / 10000.0;
      const double q = std::pow(1.0 - t, -a);
      CHECK(bp.q_star.value(t) <= q * (1 + 1e-12));
      CHECK(bp.q_upper.value(t) >= q * (1 - 1e-12));
      if (t >= 2 * e1 && t <= T - 2 * e2) {
        CHECK(bp.q_star.value(t) == doctest::Approx(q).epsilon(1e-12));
        CHECK(bp.q_upper.value(t) == doctest::Approx(q).epsilon(1e-12));
      }
    }
    CHECK(bp.q_star.value(0.0) == 1.0);
    CHECK(bp.q_upper.value(T) == doctest::Approx(std::pow(1 - T, -a)));
    CHECK(bp.q_star.constant_on(0.0, e1));
    CHECK(bp.q_star.constant_on(T - e2, T));
    CHECK(bp.q_upper.constant_on(0.0, e1));
    CHECK(bp.q_upper.constant_on(T - e2, T));
  }
}

TEST_CASE("barrier domain errors") {
  CHECK_THROWS_AS(build_barriers(0.5, 0.06, 0.01, 1.0), DomainError);
  CHECK_THROWS_AS(build_barriers(0.95, 0.01, 0.01, 1.0), DomainError);
  CHECK_THROWS_AS(build_barriers(1.0, 0.01, 0.01, 1.0), DomainError);
  CHECK_THROWS_AS(build_barriers(0.5, 0.0, 0.01, 1.0), DomainError);
  CHECK_THROWS_AS(check_fundamental_regime(30.0, 0.8, 1.0), DomainError);
  CHECK_THROWS_AS(check_fundamental_regime(100.0, 0.1, 1.0), DomainError);
  CHECK_NOTHROW(check_fundamental_regime(100.0, 0.5, 1.0));
}

TEST_CASE("eps choice algebra") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> rr(40, 2000), tt(0.05, 0.9), aa(0.7, 1.9);
  for (int i = 0; i < 200; ++i) {
    const double rho = rr(gen), T = tt(gen), a = aa(gen);
    const auto e = choose_eps(rho, T, a);
    const double k = 2 * a / (2 + a);
    CHECK(rho * e.eps1 * e.eps1 == doctest::Approx(e.delta).epsilon(1e-12));
    CHECK(e.delta * rho * std::pow(1 - T, 1 - k) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rho * std::pow(1 - T, 1 - k) * std::pow(e.eps2 / (1 - T), 2) == doctest::Approx(e.delta).epsilon(1e-12));
  }
}

TEST_CASE("q path integrals in closed form") {
  const auto p = QPath::power(1.5, 0.7);
  // int_0^0.7 (1-s)^-0.75 ds = 4 (1 - 0.3^0.25)
  CHECK(p.integral_pow(0.0, 0.7, 0.5) == doctest::Approx(4 * (1 - std::pow(0.3, 0.25))).epsilon(1e-12));
  CHECK(integral_one_minus_s_pow(0.7, 0.75) == doctest::Approx(4 * (1 - std::pow(0.3, 0.25))).epsilon(1e-12));
  const auto c = QPath::constant(2.0, 0.5);
  CHECK(c.integral_pow(0.1, 0.3, 2.0) == doctest::Approx(0.8));
  CHECK(c.log_derivative(0.2) == 0.0);
  CHECK(p.log_derivative(0.5) == doctest::Approx(1.5 / 0.5));
}

TEST_CASE("heat mode matches the Gaussian and conserves mass") {
  const double rho = 1.0, T = 0.5, var0 = 0.5;
  auto error_for = [&](double c_step) {
    PdeGrid g;
    g.x_max = 15.0;
    g.h = 0.05;
    g.c_step = c_step;
    g.potential_scale = 0.0;
    const auto x = space_grid(g);
    std::vector<double> u0(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) u0[j] = gauss(x[j] - 1.0, var0);
    const auto f = solve_pde(u0, 0.0, rho, 1.0, T, g);
    CHECK(f.mass.back() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(f.min_value > -1e-12);
    double err = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      err = std::max(err, std::abs(f.values.back()[j] - gauss(x[j] - 1.0, var0 + 2 * rho * T)));
    return err;
  };
  const double e1 = error_for(0.01), e2 = error_for(0.005);
  CHECK(e2 < 3e-6);
  CHECK(e1 / e2 > 3.0);  // second order in time
}

TEST_CASE("killed evolution stays nonnegative and loses mass") {
  PdeGrid g;
  g.x_max = 10.0;
  g.h = 0.02;
  const auto x = space_grid(g);
  std::vector<double> u0(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) u0[j] = gauss(x[j], 0.01);
  const auto f = solve_pde(u0, 0.0, 20.0, 1.2, 0.6, g, nullptr, {0.2, 0.4, 0.6});
  CHECK(f.min_value > -1e-10);
  for (std::size_t i = 1; i < f.mass.size(); ++i) CHECK(f.mass[i] < f.mass[i - 1]);
}

TEST_CASE("fundamental solution basics") {
  FundamentalOptions o;
  o.grid.h = 0.02;
  const auto g = fundamental_solution_g(0.0, 0.4, 40.0, 1.0, o);
  const auto& xs = g.field.space_grid;
  const auto& u = g.field.values.back();
  for (std::size_t j = 0; j < xs.size(); ++j) CHECK(u[j] == doctest::Approx(u[xs.size() - 1 - j]).epsilon(1e-8).scale(1e-12));
  // without the exp(lambda0 ...) renormalization the mass is a killing probability
  FundamentalOptions raw = o;
  raw.renormalize = false;
  const auto h = fundamental_solution_g(0.5, 0.4, 40.0, 1.0, raw);
  CHECK(h.field.mass.back() <= 1.0);
  CHECK(h.field.mass.back() > 0.0);
}

TEST_CASE("comparison with the barrier potentials") {
  const double T = 0.4, rho = 60.0, a = 1.0;
  const auto bp = build_barriers(T, 0.02, 0.02, a);
  FundamentalOptions base;
  base.grid.h = 0.02;
  base.renormalize = false;
  base.richardson_space = false;
  auto run = [&](const QPath* q) {
    FundamentalOptions o = base;
    o.q = q;
    return fundamental_solution_g(0.3, T, rho, a, o);
  };
  const auto lo = run(&bp.q_upper);
  const auto mid = run(nullptr);
  const auto hi = run(&bp.q_star);
  for (double x = -3.0; x <= 3.0; x += 0.25) {
    CHECK(lo(x) <= mid(x) * (1 + 1e-9) + 1e-14);
    CHECK(mid(x) <= hi(x) * (1 + 1e-9) + 1e-14);
  }
}

TEST_CASE("kernel without killing is the Brownian transition density") {
  PdeGrid g;
  g.potential_scale = 0.0;
  g.h = 0.02;
  const double s = 2.0, t = 5.0;
  for (double y : {0.0, 0.7}) {
    const double G = kernel_G_from_g(s, 0.3, t, y, 1.0, 1.0, g);
    CHECK(G == doctest::Approx(gauss(y - 0.3, t - s)).epsilon(1e-5));
  }
  CHECK_THROWS_AS(kernel_G_from_g(5.0, 0.0, 2.0, 0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(kernel_G_from_g(1.0, 0.0, 2.0, 0.0, 0.0, 1.0), DomainError);
}

TEST_CASE("galerkin coupling for the harmonic potential") {
  // phi_{q,n}(x) = q^(1/8) h_n(q^(1/4) x), so d/dq at q = 1 is (a^2 - a^dagger^2) / 8
  const auto sys = spectral::solve_spectrum(2.0, 8, 1e-9);
  const auto m = galerkin_matrices(sys, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(m.A(i, i) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(m.A(i, j) == doctest::Approx(-m.A(j, i)).scale(1.0).epsilon(1e-9));
      if ((i + j) % 2 == 1 || (i > j ? i - j : j - i) != 2) CHECK(std::abs(m.A(i, j)) < 1e-6);
    }
  }
  CHECK(std::abs(m.A(0, 2)) == doctest::Approx(std::sqrt(2.0) / 8).epsilon(1e-5));
  CHECK(std::abs(m.A(1, 3)) == doctest::Approx(std::sqrt(6.0) / 8).epsilon(1e-5));
  CHECK(std::abs(m.A(2, 4)) == doctest::Approx(std::sqrt(12.0) / 8).epsilon(1e-5));
  CHECK(m.D[0] == 0.0);
  CHECK(m.D[3] == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("decoupled galerkin modes decay as scalar exponentials") {
  const auto sys = spectral::solve_spectrum(1.0, 8, 1e-9);
  const auto m = galerkin_matrices(sys, 6);
  const auto c0 = initial_coefficients(sys, 1.0, 0.4, 6);
  EvolveOptions eo;
  eo.zero_a = true;
  const double rho = 5.0, T = 0.5;
  const auto q = QPath::power(1.0, T);
  const auto path = evolve_coefficients(c0, q, rho, m, T, eo);
  const double I = q.integral_pow(0.0, T, 2.0 / 3.0);
  for (std::size_t n = 0; n < 6; ++n)
    CHECK(path.final()[n] == doctest::Approx(c0[n] * std::exp(-rho * m.D[n] * I)).epsilon(1e-8).scale(1e-14));
  CHECK(path.max_norm_increase <= 0.0);
}

TEST_CASE("coupled galerkin norm never grows") {
  const auto sys = spectral::solve_spectrum(1.3, 14, 1e-8);
  const auto m = galerkin_matrices(sys, 12);
  const auto bp = build_barriers(0.5, 0.02, 0.02, 1.3);
  const auto c0 = initial_coefficients(sys, 1.0, 0.2, 12);
  const auto path = evolve_coefficients(c0, bp.q_upper, 50.0, m, 0.5);
  CHECK(path.max_norm_increase <= 1e-14);
  for (std::size_t i = 1; i < path.norms.size(); ++i) CHECK(path.norms[i] <= path.norms[i - 1] + 1e-14);
}
