#include "bbm/spectral.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "bbm/errors.hpp"
#include "bbm/io.hpp"
#include "bbm/numerics.hpp"

namespace bbm::spectral {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

struct GridSolution {
  std::vector<double> eigenvalues;  // all levels, in order n = 0..N-1
};

// Point samples of |x|^alpha act like a trapezoid rule across the kink at 0, which
// leaves an h^(1+alpha) term in even eigenvalues (zeta(-alpha) times f(0)^2). Moving
// that mass onto the node at 0 cancels it, so the error expands in h^2 again.
double origin_potential(double alpha, double q, double h) {
  return -2.0 * boost::math::zeta(-alpha) * q * std::pow(h, alpha);
}

// Half-line matrix for one parity. Even levels use a mirrored ghost point at 0,
// symmetrized through f_0 = sqrt2 v_0; odd levels are Dirichlet at 0.
num::SymTridiagonal build_matrix(double alpha, double q, double h, std::size_t m, bool odd) {
  num::SymTridiagonal t;
  const double inv_h2 = 1.0 / (h * h);
  const std::size_t first = odd ? 1 : 0;
  const std::size_t n = m - first;  // unknowns x_first .. x_{m-1}; x_m is Dirichlet
  t.diag.resize(n);
  t.off.assign(n > 0 ? n - 1 : 0, -inv_h2);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = static_cast<double>(k + first) * h;
    t.diag[k] = 2.0 * inv_h2 + q * std::pow(x, alpha);
  }
  if (!odd && !t.off.empty()) t.off[0] = -kSqrt2 * inv_h2;
  if (!odd && n > 0) t.diag[0] += origin_potential(alpha, q, h);
  return t;
}

double level_guess(double alpha, double q, std::size_t n) {
  const double scale = std::pow(q, 2.0 / (2.0 + alpha));
  return scale * (1.5 * weyl_prediction(alpha, std::max<std::size_t>(n, 1)) + 3.0);
}

// Sturm count for the same matrix without forming 2/h^2 + V: with pivots written as
// d_i = 1 + e_i (matrix scaled by h^2), e_i = e_{i-1}/(1 + e_{i-1}) + h^2 (V_i - x)
// only adds small terms, so low levels keep their relative accuracy on fine grids.
class SturmCounter {
 public:
  SturmCounter(double alpha, double q, double h, std::size_t m, bool odd) : h2_(h * h), odd_(odd) {
    const std::size_t first = odd ? 1 : 0;
    v_.resize(m - first);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] = q * std::pow(static_cast<double>(k + first) * h, alpha);
    if (!odd && !v_.empty()) v_[0] = origin_potential(alpha, q, h);
  }

  std::size_t count_below(double x) const {
    constexpr double kTiny = 1e-300;
    std::size_t count = 0;
    double e = odd_ ? 1.0 + h2_ * (v_[0] - x) : 0.5 * h2_ * (v_[0] - x);
    if (1.0 + e < 0.0) ++count;
    for (std::size_t i = 1; i < v_.size(); ++i) {
      double d = 1.0 + e;
      if (std::abs(d) < kTiny) d = -kTiny;
      e = e / d + h2_ * (v_[i] - x);
      if (1.0 + e < 0.0) ++count;
    }
    return count;
  }

  double eigenvalue(std::size_t k, double lo, double hi) const {
    while (count_below(hi) <= k) hi = 2.0 * hi + 1.0;
    if (count_below(lo) > k) lo = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (count_below(mid) > k ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  double h2_;
  bool odd_;
  std::vector<double> v_;
};

std::vector<double> grid_eigenvalues(double alpha, double q, double h, std::size_t m, std::size_t levels,
                                     const std::vector<double>* previous) {
  std::vector<double> out(levels);
  for (int parity = 0; parity < 2; ++parity) {
    const SturmCounter t(alpha, q, h, m, parity == 1);
    double lo = 0.0;
    for (std::size_t n = static_cast<std::size_t>(parity); n < levels; n += 2) {
      const std::size_t k = n / 2;
      double hi = 0.0;
      double guess_lo = lo;
      if (previous) {
        const double p = (*previous)[n];
        guess_lo = std::max(lo, p - 1e-3 * (1.0 + p));
        hi = p + 0.05 * (1.0 + p);
      } else {
        hi = level_guess(alpha, q, n);
      }
      if (t.count_below(guess_lo) > k) guess_lo = lo;
      out[n] = t.eigenvalue(k, guess_lo, hi);
      lo = out[n];
    }
  }
  return out;
}

std::vector<double> eigenfunction_on_grid(double alpha, double q, double h, std::size_t m, std::size_t n,
                                          double lambda_h) {
  const bool odd = n % 2 == 1;
  const auto t = build_matrix(alpha, q, h, m, odd);
  const auto v = t.eigenvector(lambda_h);
  std::vector<double> f(m + 1, 0.0);
  if (odd) {
    for (std::size_t k = 0; k < v.size(); ++k) f[k + 1] = v[k];
  } else {
    f[0] = kSqrt2 * v[0];
    for (std::size_t k = 1; k < v.size(); ++k) f[k] = v[k];
  }
  // full-line trapezoid norm: h (f_0^2 + 2 sum_{i>=1} f_i^2)
  double norm2 = f[0] * f[0];
  for (std::size_t i = 1; i <= m; ++i) norm2 += 2.0 * f[i] * f[i];
  const double scale = 1.0 / std::sqrt(h * norm2);
  double peak = 0.0;
  for (double& x : f) {
    x *= scale;
    peak = std::max(peak, std::abs(x));
  }
  std::size_t last = 0;
  for (std::size_t i = 0; i <= m; ++i) {
    if (std::abs(f[i]) > 1e-6 * peak) last = i;
  }
  if (f[last] < 0.0) {
    for (double& x : f) x = -x;
  }
  return f;
}

double discrete_residual(double alpha, double q, double h, const std::vector<double>& f, bool odd,
                         double lambda_h) {
  const std::size_t m = f.size() - 1;
  const double inv_h2 = 1.0 / (h * h);
  double worst = 0.0;
  for (std::size_t i = odd ? 1 : 0; i < m; ++i) {
    const double left = (i == 0) ? f[1] : f[i - 1];  // mirror ghost for even levels
    const double x = static_cast<double>(i) * h;
    const double v = i == 0 ? origin_potential(alpha, q, h) : q * std::pow(x, alpha);
    const double r = (2.0 * f[i] - left - f[i + 1]) * inv_h2 + (v - lambda_h) * f[i];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace

double weyl_prediction(double alpha, std::size_t n) {
  return std::pow(static_cast<double>(n) / weyl_constant(alpha), 2.0 * alpha / (alpha + 2.0));
}

double weyl_constant(double alpha) {
  if (!(alpha > 0.0)) throw DomainError("weyl_constant requires alpha > 0");
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [alpha](double u) { return std::sqrt(std::max(0.0, 1.0 - std::pow(u, alpha))); };
  const double integral = integrator.integrate(f, 0.0, 1.0, 1e-14);
  return 2.0 / std::numbers::pi * integral;
}

double auto_x_max(double alpha, double q, double lambda_max) {
  // WKB decay exponent int_{x_t}^{X} sqrt(q x^alpha - lambda) dx beyond the turning point.
  const double x_turn = std::pow(lambda_max / q, 1.0 / alpha);
  constexpr double kTargetExponent = 40.0;
  constexpr double dx = 0.01;
  double x = x_turn;
  double integral = 0.0;
  while (integral < kTargetExponent) {
    const double mid = x + 0.5 * dx;
    integral += std::sqrt(std::max(0.0, q * std::pow(mid, alpha) - lambda_max)) * dx;
    x += dx;
  }
  return std::max(30.0, std::ceil(x));
}

EigenSystem solve_spectrum(double alpha, std::size_t n_max, double accuracy, const SpectrumOptions& options) {
  if (!(alpha > 0.0)) throw DomainError("solve_spectrum requires alpha > 0");
  if (n_max < 1) throw DomainError("solve_spectrum requires n_max >= 1");
  if (!(options.q > 0.0)) throw DomainError("solve_spectrum requires q > 0");
  if (!(accuracy > 0.0)) throw DomainError("accuracy must be positive");

  const double q = options.q;
  const double x_max =
      options.x_max > 0.0 ? options.x_max : auto_x_max(alpha, q, level_guess(alpha, q, n_max));

  double h = options.h;
  double prev_worst = std::numeric_limits<double>::quiet_NaN();
  for (int refinement = 0;; ++refinement) {
    const auto m = static_cast<std::size_t>(std::ceil(x_max / h));
    const auto l1 = grid_eigenvalues(alpha, q, h, m, n_max, nullptr);
    const auto l2 = grid_eigenvalues(alpha, q, h / 2.0, 2 * m, n_max, &l1);
    const auto l4 = grid_eigenvalues(alpha, q, h / 4.0, 4 * m, n_max, &l2);

    std::vector<double> lambda(n_max), err(n_max);
    double worst_err = 0.0;
    std::size_t worst_level = 0;
    for (std::size_t n = 0; n < n_max; ++n) {
      const double r1 = (4.0 * l2[n] - l1[n]) / 3.0;
      const double r1_fine = (4.0 * l4[n] - l2[n]) / 3.0;
      lambda[n] = (16.0 * r1_fine - r1) / 15.0;
      err[n] = std::abs(lambda[n] - r1_fine);
      if (err[n] > worst_err) {
        worst_err = err[n];
        worst_level = n;
      }
    }

    if (worst_err > accuracy) {
      if (refinement >= options.max_refinements) {
        throw NumericalError("eigenvalue of level " + std::to_string(worst_level) +
                                 " did not reach the requested accuracy",
                             prev_worst, lambda[worst_level]);
      }
      prev_worst = lambda[worst_level];
      h /= 2.0;
      continue;
    }

    EigenSystem sys;
    sys.alpha = alpha;
    sys.q = q;
    sys.h = h;
    sys.accuracy = accuracy;
    sys.grid.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) sys.grid[i] = static_cast<double>(i) * h;
    sys.eigenvalues = lambda;
    sys.error_estimates = err;
    sys.grid_eigenvalues = l1;
    for (std::size_t n = 0; n < n_max; ++n) {
      auto f = eigenfunction_on_grid(alpha, q, h, m, n, l1[n]);
      sys.residuals.push_back(discrete_residual(alpha, q, h, f, n % 2 == 1, l1[n]));
      sys.eigenfunctions.push_back(std::move(f));
    }
    return sys;
  }
}

double EigenSystem::evaluate(std::size_t n, double x) const {
  const auto& f = eigenfunctions.at(n);
  const bool odd = n % 2 == 1;
  const double sign = (odd && x < 0.0) ? -1.0 : 1.0;
  const double ax = std::abs(x);
  if (ax >= x_max()) return 0.0;
  const auto m = static_cast<std::ptrdiff_t>(f.size()) - 1;
  auto sample = [&](std::ptrdiff_t j) {
    if (j < 0) return odd ? -f[static_cast<std::size_t>(-j)] : f[static_cast<std::size_t>(-j)];
    if (j > m) return 0.0;
    return f[static_cast<std::size_t>(j)];
  };
  const double pos = ax / h;
  const auto i = static_cast<std::ptrdiff_t>(std::floor(pos));
  const double u = pos - static_cast<double>(i - 1);
  const double l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
  const double l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
  const double l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
  const double l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
  return sign * (l0 * sample(i - 1) + l1 * sample(i) + l2 * sample(i + 1) + l3 * sample(i + 2));
}

std::vector<double> EigenSystem::evaluate(std::size_t n, const std::vector<double>& xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(evaluate(n, x));
  return out;
}

EigenSystem rescale_to_q(const EigenSystem& sys, double q) {
  if (!(q > 0.0)) throw DomainError("rescale_to_q requires q > 0");
  const double r = q / sys.q;
  const double a = sys.alpha;
  const double lambda_scale = std::pow(r, 2.0 / (2.0 + a));
  const double x_scale = std::pow(r, -1.0 / (2.0 + a));
  const double amp_scale = std::pow(r, 1.0 / (2.0 * (2.0 + a)));
  EigenSystem out = sys;
  out.q = q;
  out.h = sys.h * x_scale;
  for (auto& x : out.grid) x *= x_scale;
  for (auto& l : out.eigenvalues) l *= lambda_scale;
  for (auto& l : out.grid_eigenvalues) l *= lambda_scale;
  for (auto& e : out.error_estimates) e *= lambda_scale;
  for (auto& r_ : out.residuals) r_ *= lambda_scale * amp_scale;
  for (auto& f : out.eigenfunctions) {
    for (auto& v : f) v *= amp_scale;
  }
  return out;
}

double WeylReport::error_at(std::size_t level) const {
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == level) return relative_error[i];
  }
  throw DomainError("level " + std::to_string(level) + " not in Weyl report");
}

WeylReport weyl_check(const EigenSystem& sys, std::vector<std::size_t> checkpoints) {
  if (sys.levels() < 20) throw DomainError("weyl_check needs at least 20 levels");
  WeylReport report;
  const double c = weyl_constant(sys.alpha);
  const double qscale = std::pow(sys.q, 2.0 / (2.0 + sys.alpha));
  for (std::size_t n = 1; n < sys.levels(); ++n) {
    const double w = qscale * std::pow(static_cast<double>(n) / c, 2.0 * sys.alpha / (sys.alpha + 2.0));
    report.n.push_back(n);
    report.relative_error.push_back(std::abs(sys.eigenvalues[n] - w) / w);
  }
  std::erase_if(checkpoints, [&](std::size_t k) { return k == 0 || k >= sys.levels(); });
  report.checkpoints = checkpoints;
  report.decreasing_at_checkpoints = checkpoints.size() >= 2;
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (!(report.error_at(checkpoints[i]) < report.error_at(checkpoints[i - 1])))
      report.decreasing_at_checkpoints = false;
  }
  return report;
}

std::size_t count_sign_changes(const EigenSystem& sys, std::size_t n) {
  const auto& f = sys.eigenfunctions.at(n);
  double peak = 0.0;
  for (double v : f) peak = std::max(peak, std::abs(v));
  const double threshold = 1e-9 * peak;
  std::size_t changes = 0;
  double last = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (std::abs(f[i]) <= threshold) continue;
    if (last != 0.0 && (f[i] > 0.0) != (last > 0.0)) ++changes;
    last = f[i];
  }
  return 2 * changes + (n % 2 == 1 ? 1 : 0);
}

double inner_product(const EigenSystem& sys, std::size_t m, std::size_t n) {
  if ((m + n) % 2 == 1) return 0.0;  // odd integrand on a symmetric domain
  const auto& a = sys.eigenfunctions.at(m);
  const auto& b = sys.eigenfunctions.at(n);
  double s = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) s += 2.0 * a[i] * b[i];
  return sys.h * s;
}

double fit_tail_constant(const EigenSystem& sys, std::size_t n_fit) {
  const double p = 0.5 * (2.0 + sys.alpha);
  double c = 0.0;
  for (std::size_t n = 1; n <= n_fit && n < sys.levels(); ++n) {
    const auto& f = sys.eigenfunctions[n];
    const double pref = std::pow(static_cast<double>(n + 1), 3.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double xp = std::pow(sys.grid[i], p);
      if (xp < 20.0 || std::abs(f[i]) < 1e-290) continue;
      const double needed = (xp + (2.0 + sys.alpha) * std::log(std::abs(f[i]) / pref)) / static_cast<double>(n);
      c = std::max(c, needed);
    }
  }
  return c;
}

double tail_bound_ratio(const EigenSystem& sys, double C, std::size_t n_max) {
  const double p = 0.5 * (2.0 + sys.alpha);
  double worst = 0.0;
  for (std::size_t n = 0; n <= n_max && n < sys.levels(); ++n) {
    const auto& f = sys.eigenfunctions[n];
    const double nd = static_cast<double>(n);
    const double pref = std::pow(nd + 1.0, 3.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double xp = std::pow(sys.grid[i], p);
      if (xp < C * nd + 20.0) continue;
      const double log_bound = std::log(pref) - (xp - C * nd) / (2.0 + sys.alpha);
      if (f[i] == 0.0) continue;
      worst = std::max(worst, std::exp(std::log(std::abs(f[i])) - log_bound));
    }
  }
  return worst;
}

std::string to_csv(const EigenSystem& sys) {
  std::vector<std::string> header{"x"};
  for (std::size_t n = 0; n < sys.levels(); ++n) header.push_back("phi_" + std::to_string(n));
  io::CsvWriter csv(header);
  std::vector<double> row(header.size());
  for (std::size_t i = 0; i < sys.grid.size(); ++i) {
    row[0] = sys.grid[i];
    for (std::size_t n = 0; n < sys.levels(); ++n) row[n + 1] = sys.eigenfunctions[n][i];
    csv.add_row(row);
  }
  return csv.str();
}

std::string to_json(const EigenSystem& sys) {
  nlohmann::json j;
  j["alpha"] = sys.alpha;
  j["q"] = sys.q;
  j["eigenvalues"] = sys.eigenvalues;
  j["grid"] = {{"h", sys.h}, {"x_max", sys.x_max()}, {"points", sys.grid.size()},
               {"representation", "half-line, parity of n"}};
  j["accuracy"] = {{"requested", sys.accuracy},
                   {"richardson_error_estimates", sys.error_estimates},
                   {"grid_eigenvalues", sys.grid_eigenvalues},
                   {"discrete_residuals", sys.residuals}};
  return io::dump_json(j);
}

}  // namespace bbm::spectral
