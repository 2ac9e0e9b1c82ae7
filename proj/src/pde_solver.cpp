#include "bbm/pde_solver.hpp"

#include <boost/math/special_functions/zeta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bbm/errors.hpp"
#include "bbm/numerics.hpp"

namespace bbm::pde {

namespace {

std::vector<double> sorted_stops(double t_start, double T, std::vector<double> stops) {
  stops.push_back(T);
  std::erase_if(stops, [&](double b) { return !(b > t_start && b <= T); });
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  return stops;
}

// Step boundaries t_start = t_0 < t_1 < ... < t_K = T containing every stop.
std::vector<double> time_grid(double t_start, double rho, double alpha, double /*T*/, const PdeGrid& grid,
                              const std::vector<double>& stops, std::size_t cap) {
  std::vector<double> times{t_start};
  double t = t_start;
  for (double b : stops) {
    while (t < b) {
      double dt = grid.c_step / (rho * std::pow(1.0 - t, -alpha));
      if (t > 0.0) dt = std::min(dt, grid.growth * t);
      const double rest = b - t;
      if (rest <= dt) {
        dt = rest;
      } else if (rest < 1.5 * dt) {
        dt = 0.5 * rest;
      }
      t = (dt == rest) ? b : t + dt;
      times.push_back(t);
      if (times.size() > cap + 1) return times;
    }
  }
  return times;
}

class CompactCrankNicolson {
 public:
  CompactCrankNicolson(const std::vector<double>& x, double rho, double alpha, double scale, double shift,
                       const QPath& q)
      : rho_(rho), scale_(scale), shift_(shift), p_(2.0 / (2.0 + alpha)), q_(q) {
    pot_.resize(x.size());
    const double h = x[1] - x[0];
    for (std::size_t j = 0; j < x.size(); ++j) {
      // a node on the kink of |x|^alpha gets the zeta correction that removes the
      // h^(1+alpha) sampling error (see the spectral solver)
      pot_[j] = std::abs(x[j]) < 1e-9 * h ? -2.0 * boost::math::zeta(-alpha) * std::pow(h, alpha)
                                          : std::pow(std::abs(x[j]), alpha);
    }
    inv_h2_ = 1.0 / (h * h);
    const std::size_t n = x.size() - 2;
    sub_.resize(n);
    diag_.resize(n);
    sup_.resize(n);
    rhs_.resize(n);
  }

  // One step from ta to tb on interior unknowns u[1..J-1]; u[0] = u[J] = 0.
  // theta = 1/2 is Crank-Nicolson, theta = 1 backward Euler.
  void step(std::vector<double>& u, double ta, double tb, double theta = 0.5) {
    const double dt = tb - ta;
    const double q_mid = q_.value(theta == 0.5 ? 0.5 * (ta + tb) : tb);
    const double qm = scale_ * q_mid;
    const double sigma = shift_ * std::pow(q_mid, p_);
    const double r = theta * dt * rho_;
    const double re = (1.0 - theta) * dt * rho_;
    const std::size_t J = u.size() - 1;
    constexpr double m_off = 1.0 / 12.0;
    constexpr double m_diag = 10.0 / 12.0;
    for (std::size_t j = 1; j < J; ++j) {
      const double vl = qm * pot_[j - 1];
      const double vc = qm * pot_[j];
      const double vr = qm * pot_[j + 1];
      const double kl = inv_h2_ + m_off * (sigma - vl);
      const double kc = -2.0 * inv_h2_ + m_diag * (sigma - vc);
      const double kr = inv_h2_ + m_off * (sigma - vr);
      const std::size_t k = j - 1;
      sub_[k] = m_off - r * kl;
      diag_[k] = m_diag - r * kc;
      sup_[k] = m_off - r * kr;
      rhs_[k] = (m_off + re * kl) * u[j - 1] + (m_diag + re * kc) * u[j] + (m_off + re * kr) * u[j + 1];
    }
    // sub_[k] multiplies u_{k-1} in row k: shift for the solver's convention
    num::solve_tridiagonal(std::span<const double>(sub_).subspan(1), diag_,
                           std::span<const double>(sup_).first(sup_.size() - 1), rhs_, scratch_);
    for (std::size_t j = 1; j < J; ++j) u[j] = rhs_[j - 1];
  }

 private:
  double rho_;
  double scale_;
  double shift_;
  double p_;
  const QPath& q_;
  double inv_h2_ = 0.0;
  std::vector<double> pot_, sub_, diag_, sup_, rhs_, scratch_;
};

struct RunOutput {
  std::vector<std::vector<double>> values;
};

RunOutput run(const std::vector<double>& initial, const std::vector<double>& x, const std::vector<double>& times,
              const std::vector<double>& outputs, double rho, double alpha, double scale, double shift,
              const QPath& q, int substeps) {
  CompactCrankNicolson cn(x, rho, alpha, scale, shift, q);
  std::vector<double> u = initial;
  u.front() = 0.0;
  u.back() = 0.0;
  RunOutput out;
  std::size_t next = 0;
  // Starting at t = 0 there is no smoothing age to bound the first steps, and CN
  // leaves the high modes of rough data undamped: the first steps are replaced by
  // pairs of backward-Euler half steps (Rannacher start).
  const std::size_t rannacher = times.front() == 0.0 ? 2 : 0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double ta = times[k - 1];
    const double tb = times[k];
    const int parts = k <= rannacher ? 2 * substeps : substeps;
    for (int s = 0; s < parts; ++s) {
      const double a = ta + (tb - ta) * s / parts;
      const double b = (s + 1 == parts) ? tb : ta + (tb - ta) * (s + 1) / parts;
      cn.step(u, a, b, k <= rannacher ? 1.0 : 0.5);
    }
    while (next < outputs.size() && outputs[next] == tb) {
      out.values.push_back(u);
      ++next;
    }
  }
  return out;
}

double trapezoid_mass(const std::vector<double>& u, double h) {
  double s = 0.0;
  for (double v : u) s += v;
  return h * (s - 0.5 * (u.front() + u.back()));
}

}  // namespace

std::vector<double> space_grid(const PdeGrid& grid) {
  if (!(grid.h > 0.0 && grid.x_max > 0.0)) throw DomainError("space grid needs h > 0 and x_max > 0");
  const auto half = static_cast<std::size_t>(std::llround(grid.x_max / grid.h));
  std::vector<double> x(2 * half + 1);
  for (std::size_t j = 0; j < x.size(); ++j)
    x[j] = (static_cast<double>(j) - static_cast<double>(half)) * grid.h;
  return x;
}

std::size_t count_steps(double t_start, double rho, double alpha, double T, const PdeGrid& grid,
                        const std::vector<double>& breakpoints) {
  const auto stops = sorted_stops(t_start, T, breakpoints);
  return time_grid(t_start, rho, alpha, T, grid, stops, grid.max_steps).size() - 1;
}

PdeField solve_pde(const std::vector<double>& initial, double t_start, double rho, double alpha, double T,
                   const PdeGrid& grid, const QPath* q, std::vector<double> output_times,
                   std::vector<double> extra_breakpoints) {
  if (!(T < 1.0)) throw DomainError("solve_pde requires T < 1");
  if (!(T > t_start && t_start >= 0.0)) throw DomainError("solve_pde requires 0 <= t_start < T");
  if (!(rho > 0.0)) throw DomainError("solve_pde requires rho > 0");
  if (!(alpha > 0.0)) throw DomainError("solve_pde requires alpha > 0");
  const auto x = space_grid(grid);
  if (initial.size() != x.size()) throw DomainError("initial condition does not match the space grid");
  for (double v : initial) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("initial condition must be finite and nonnegative");
  }

  const QPath default_q = QPath::power(alpha, T);
  const QPath& qp = q ? *q : default_q;
  if (q && qp.t_end() < T - 1e-14) throw DomainError("q path does not cover [0, T]");

  if (output_times.empty()) output_times.push_back(T);
  std::sort(output_times.begin(), output_times.end());
  for (double t : output_times) {
    if (!(t > t_start && t <= T)) throw DomainError("output times must lie in (t_start, T]");
  }
  auto stops = qp.breakpoints();
  stops.insert(stops.end(), extra_breakpoints.begin(), extra_breakpoints.end());
  stops.insert(stops.end(), output_times.begin(), output_times.end());
  stops = sorted_stops(t_start, T, stops);

  const auto times = time_grid(t_start, rho, alpha, T, grid, stops, grid.max_steps);
  if (times.size() - 1 > grid.max_steps) {
    double lo = t_start, hi = T;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (count_steps(t_start, rho, alpha, mid, grid, {}) <= grid.max_steps) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    throw ResourceError("time-step budget exceeded; largest feasible T is about " + std::to_string(lo), lo);
  }

  auto coarse = run(initial, x, times, output_times, rho, alpha, grid.potential_scale, grid.shift, qp, 1);
  PdeField field;
  field.values = std::move(coarse.values);
  if (grid.richardson_time) {
    auto fine = run(initial, x, times, output_times, rho, alpha, grid.potential_scale, grid.shift, qp, 2);
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j)
        field.values[i][j] = (4.0 * fine.values[i][j] - field.values[i][j]) / 3.0;
    }
  }
  field.time_grid = output_times;
  field.space_grid = x;
  field.rho = rho;
  field.alpha = alpha;
  field.t_start = t_start;
  field.steps = times.size() - 1;
  field.q_description = qp.describe();
  if (grid.shift != 0.0) {
    const double p = 2.0 / (2.0 + alpha);
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      const double undo = std::exp(-grid.shift * rho * qp.integral_pow(t_start, output_times[i], p));
      for (double& v : field.values[i]) v *= undo;
    }
  }
  field.min_value = 0.0;
  for (const auto& u : field.values) {
    field.mass.push_back(trapezoid_mass(u, grid.h));
    for (double v : u) field.min_value = std::min(field.min_value, v);
  }
  return field;
}

double PdeField::interpolate(double x, std::size_t i) const {
  const auto& u = values.at(i);
  const double h = space_grid[1] - space_grid[0];
  if (x < space_grid.front() || x > space_grid.back()) throw DomainError("interpolation outside the space grid");
  return num::interp_cubic(u, space_grid.front(), h, x);
}

FundamentalSolution fundamental_solution_g(double xi, double T, double rho, double alpha,
                                           const FundamentalOptions& options) {
  PdeGrid grid = options.grid;
  if (options.renormalize && grid.potential_scale != 0.0)
    grid.shift = spectral::solve_spectrum(alpha, 1, 1e-10).eigenvalues[0];
  if (std::abs(xi) > 0.8 * grid.x_max) throw DomainError("xi too close to the domain boundary");
  const QPath default_q = QPath::power(alpha, T);
  const QPath& qp = options.q ? *options.q : default_q;

  auto solve_on = [&](const PdeGrid& g_grid, double width, double t_start) {
    const auto x = space_grid(g_grid);
    std::vector<double> u0(x.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = (x[j] - xi) / width;
      u0[j] = std::exp(-0.5 * d * d);
      sum += u0[j];
    }
    // killing accumulated over [0, t_start] while the mass sits at xi
    const double weight =
        std::exp(-rho * t_start * g_grid.potential_scale * qp.value(0.0) * std::pow(std::abs(xi), alpha));
    for (double& v : u0) v *= weight / (sum * g_grid.h);
    return solve_pde(u0, t_start, rho, alpha, T, g_grid, &qp, {T}, options.extra_breakpoints);
  };

  auto solve_with_width = [&](double width) {
    FundamentalSolution g;
    g.xi = xi;
    g.T = T;
    g.width = width;
    g.t_start = width * width / (2.0 * rho);
    g.field = solve_on(grid, width, g.t_start);
    if (options.richardson_space) {
      PdeGrid fine_grid = grid;
      fine_grid.h = 0.5 * grid.h;
      const auto fine = solve_on(fine_grid, width, g.t_start);
      auto& u = g.field.values[0];
      g.field.min_value = 0.0;
      // fourth order away from the origin; next to it the leftover kink term is
      // O(h^(2+alpha)), which this weighting still reduces by an order of magnitude
      for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = (16.0 * fine.values[0][2 * j] - u[j]) / 15.0;
        g.field.min_value = std::min(g.field.min_value, u[j]);
      }
      g.field.mass[0] = (16.0 * fine.mass[0] - g.field.mass[0]) / 15.0;
    }
    return g;
  };

  auto g = solve_with_width(2.0 * grid.h);
  if (options.width_check) {
    const auto narrow = solve_with_width(grid.h);
    double peak = 0.0, diff = 0.0;
    for (std::size_t j = 0; j < g.field.values[0].size(); ++j) {
      peak = std::max(peak, std::abs(g.field.values[0][j]));
      diff = std::max(diff, std::abs(g.field.values[0][j] - narrow.field.values[0][j]));
    }
    g.width_halving_change = peak > 0.0 ? diff / peak : 0.0;
  }
  return g;
}

ProductForm product_form_check(const FundamentalSolution& g, const spectral::EigenSystem& ground, double x) {
  if (ground.q != 1.0) throw DomainError("product form needs the q = 1 ground state");
  const double alpha = ground.alpha;
  const double kappa = 2.0 * alpha / (2.0 + alpha);
  ProductForm pf;
  pf.lambda0 = ground.eigenvalues.at(0);
  pf.prefactor = std::exp(pf.lambda0 * g.field.rho * integral_one_minus_s_pow(g.T, kappa));
  const double shrink = std::pow(1.0 - g.T, -kappa / 2.0);
  pf.limit = ground.evaluate(0, g.xi) * std::pow(1.0 - g.T, -kappa / 4.0) * ground.evaluate(0, shrink * x);
  pf.renormalized = pf.prefactor * g(x);
  pf.relative_deviation = std::abs(pf.renormalized - pf.limit) / pf.limit;
  return pf;
}

double rho_for_kernel(double t, double beta, double alpha) {
  const double kappa = 2.0 * alpha / (2.0 + alpha);
  return std::pow(beta, 2.0 / (2.0 + alpha)) * std::pow(2.0, -2.0 * alpha / (2.0 + alpha)) *
         std::pow(t, 1.0 - kappa);
}

double kernel_G_from_g(double s, double x, double t, double y, double beta, double alpha, const PdeGrid& grid) {
  if (!(s > 0.0 && s < t)) throw DomainError("kernel_G_from_g requires 0 < s < t");
  if (!(beta > 0.0)) throw DomainError("kernel_G_from_g requires beta > 0");
  const double rho = rho_for_kernel(t, beta, alpha);
  const double k = std::sqrt(2.0 * rho / t);
  const double T = 1.0 - s / t;
  const double xi = k * y;
  const double xg = k * x;
  const double reach = 0.8 * grid.x_max;
  if (std::abs(xi) > reach || std::abs(xg) > reach)
    throw DomainError("kernel arguments fall outside the grid of g (extrapolation refused)");
  FundamentalOptions opt;
  opt.grid = grid;
  if (grid.potential_scale == 0.0) opt.renormalize = false;
  const auto g = fundamental_solution_g(xi, T, rho, alpha, opt);
  return k * g(xg);
}

}  // namespace bbm::pde
