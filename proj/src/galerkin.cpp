#include "bbm/galerkin.hpp"

#include <algorithm>
#include <cmath>

#include "bbm/errors.hpp"
#include "bbm/numerics.hpp"

namespace bbm::pde {

namespace {

// phi on the half-line grid extended to negative indices by parity and by zero
// beyond X_max.
double sample(const std::vector<double>& f, bool odd, std::ptrdiff_t j) {
  if (j < 0) return odd ? -f[static_cast<std::size_t>(-j)] : f[static_cast<std::size_t>(-j)];
  if (j >= static_cast<std::ptrdiff_t>(f.size())) return 0.0;
  return f[static_cast<std::size_t>(j)];
}

std::vector<double> derivative(const std::vector<double>& f, bool odd, double h) {
  std::vector<double> d(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto j = static_cast<std::ptrdiff_t>(i);
    d[i] = (sample(f, odd, j - 2) - 8.0 * sample(f, odd, j - 1) + 8.0 * sample(f, odd, j + 1) -
            sample(f, odd, j + 2)) /
           (12.0 * h);
  }
  return d;
}

}  // namespace

GalerkinMatrices galerkin_matrices(const spectral::EigenSystem& sys, std::size_t N) {
  if (sys.levels() < N) throw DomainError("eigen system holds fewer levels than requested modes");
  if (sys.q != 1.0) throw DomainError("galerkin matrices are built from the q = 1 eigenfunctions");
  GalerkinMatrices m;
  m.N = N;
  m.alpha = sys.alpha;
  m.lambdas.assign(sys.eigenvalues.begin(), sys.eigenvalues.begin() + static_cast<std::ptrdiff_t>(N));
  for (double l : m.lambdas) m.D.push_back(l - m.lambdas[0]);
  m.D[0] = 0.0;

  std::vector<std::vector<double>> xdphi(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto d = derivative(sys.eigenfunctions[i], i % 2 == 1, sys.h);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] *= sys.grid[k];
    xdphi[i] = std::move(d);
  }

  m.B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  std::vector<double> integrand(sys.grid.size());
  const double scale = 1.0 / (2.0 + sys.alpha);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      double value = 0.0;
      if ((i + j) % 2 == 0) {  // otherwise the integrand is odd
        const auto& phi_j = sys.eigenfunctions[j];
        for (std::size_t k = 0; k < integrand.size(); ++k) integrand[k] = phi_j[k] * xdphi[i][k];
        value = 2.0 * num::simpson(integrand, sys.h);
      }
      m.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scale * ((i == j ? 0.5 : 0.0) + value);
    }
  }
  m.antisymmetry_defect = (m.B + m.B.transpose()).cwiseAbs().maxCoeff();
  m.A = 0.5 * (m.B - m.B.transpose());
  if (m.antisymmetry_defect > 1e-5)
    throw AccuracyError("coupling matrix quadrature defect " + std::to_string(m.antisymmetry_defect) +
                            " exceeds 1e-5",
                        0.0, m.antisymmetry_defect);
  return m;
}

std::vector<double> initial_coefficients(const spectral::EigenSystem& sys, double q0, double xi, std::size_t N) {
  const double a = sys.alpha;
  const double amp = std::pow(q0, 1.0 / (2.0 * (2.0 + a)));
  const double stretch = std::pow(q0, 1.0 / (2.0 + a));
  std::vector<double> c(N);
  for (std::size_t n = 0; n < N; ++n) c[n] = amp * sys.evaluate(n, stretch * xi);
  return c;
}

CoefficientPath evolve_coefficients(const std::vector<double>& c0, const QPath& q, double rho,
                                    const GalerkinMatrices& m, double T, const EvolveOptions& options) {
  const std::size_t N = m.N;
  if (c0.size() != N) throw DomainError("initial coefficients do not match the number of modes");
  for (double v : c0) {
    if (!std::isfinite(v)) throw DomainError("initial coefficients must be finite");
  }
  if (!(T > 0.0 && T < 1.0)) throw DomainError("evolve_coefficients requires 0 < T < 1");
  if (q.t_end() < T - 1e-14) throw DomainError("q path does not cover [0, T]");

  const double p = 2.0 / (2.0 + m.alpha);
  auto stops = q.breakpoints();
  stops.push_back(T);
  std::erase_if(stops, [&](double b) { return !(b > 0.0 && b <= T); });
  std::sort(stops.begin(), stops.end());

  CoefficientPath path;
  path.q_description = q.describe();
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(c0.data(), static_cast<Eigen::Index>(N));
  const auto record = [&](double t) {
    path.times.push_back(t);
    path.coefficients.emplace_back(c.data(), c.data() + N);
    path.norms.push_back(c.norm());
  };
  record(0.0);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  Eigen::VectorXd decay(static_cast<Eigen::Index>(N));
  auto apply_diagonal = [&](double ta, double tb) {
    const double integral = q.integral_pow(ta, tb, p);
    for (std::size_t i = 0; i < N; ++i) {
      decay[static_cast<Eigen::Index>(i)] = std::exp(-rho * m.D[i] * integral);
    }
    c = c.cwiseProduct(decay);
  };

  double t = 0.0;
  for (double b : stops) {
    while (t < b) {
      double dt = std::min(options.max_step, options.relative_step * (1.0 - t));
      if (b - t <= dt * 1.0000001) dt = b - t;
      const double tb = (dt == b - t) ? b : t + dt;
      const double tm = 0.5 * (t + tb);
      apply_diagonal(t, tm);
      if (!options.zero_a) {
        const double theta = std::log(q.value(tb)) - std::log(q.value(t));
        if (theta != 0.0) {
          const Eigen::MatrixXd half = 0.5 * theta * m.A;
          c = (I - half).partialPivLu().solve((I + half) * c);
        }
      }
      apply_diagonal(tm, tb);
      if (!c.allFinite()) throw NumericalError("coefficient evolution produced non-finite values", t, tb);
      t = tb;
      record(t);
    }
  }
  for (std::size_t i = 1; i < path.norms.size(); ++i)
    path.max_norm_increase = std::max(path.max_norm_increase, path.norms[i] - path.norms[i - 1]);
  const double norm = path.norms.back();
  path.tail_ratio = norm > 0.0 ? std::abs(path.coefficients.back()[N - 1]) / norm : 0.0;
  return path;
}

std::vector<double> reconstruct_W(const std::vector<double>& c, const spectral::EigenSystem& sys, double qT,
                                  const std::vector<double>& xs) {
  if (c.size() > sys.levels()) throw DomainError("more coefficients than stored levels");
  const auto scaled = spectral::rescale_to_q(sys, qT);
  std::vector<double> w(xs.size(), 0.0);
  for (std::size_t n = 0; n < c.size(); ++n) {
    for (std::size_t k = 0; k < xs.size(); ++k) w[k] += c[n] * scaled.evaluate(n, xs[k]);
  }
  return w;
}

C0StabilityReport check_c0_stability(const std::vector<double>& rho_list, double T, double alpha,
                                     const C0StabilityOptions& options) {
  if (rho_list.empty()) throw DomainError("check_c0_stability needs at least one rho");
  for (double rho : rho_list) check_fundamental_regime(rho, T, alpha);
  const auto sys = spectral::solve_spectrum(alpha, options.N, 1e-8);
  const auto m = galerkin_matrices(sys, options.N);

  C0StabilityReport report;
  report.alpha = alpha;
  report.T = T;
  report.xi = options.xi;
  for (double rho : rho_list) {
    C0StabilityRow row;
    row.rho = rho;
    const auto eps = choose_eps(rho, T, alpha);
    row.delta = eps.delta;
    row.eps1 = eps.eps1;
    row.eps2 = eps.eps2;
    const auto barriers = build_barriers(T, eps.eps1, eps.eps2, alpha);
    const QPath one = QPath::constant(1.0, T);
    const QPath& lower = options.constant_q ? one : barriers.q_star;
    const QPath& upper = options.constant_q ? one : barriers.q_upper;
    const auto c_lower = initial_coefficients(sys, lower.value(0.0), options.xi, options.N);
    const auto c_upper = initial_coefficients(sys, upper.value(0.0), options.xi, options.N);
    const auto p_lower = evolve_coefficients(c_lower, lower, rho, m, T, options.evolve);
    const auto p_upper = evolve_coefficients(c_upper, upper, rho, m, T, options.evolve);
    row.c0_initial = c_lower[0];
    row.c0_final_lower = p_lower.final()[0];
    row.c0_final_upper = p_upper.final()[0];
    row.deviation = std::max(std::abs(row.c0_final_lower - c_lower[0]), std::abs(row.c0_final_upper - c_upper[0]));
    report.rows.push_back(row);
  }
  if (report.rows.size() >= 2) {
    std::vector<double> lx, ly;
    for (const auto& r : report.rows) {
      if (r.deviation > 0.0) {
        lx.push_back(std::log(r.rho));
        ly.push_back(std::log(r.deviation));
      }
    }
    if (lx.size() >= 2) report.fitted_exponent = num::fit_line(lx, ly).slope;
  }
  return report;
}

}  // namespace bbm::pde
