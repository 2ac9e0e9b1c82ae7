#include "bbm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bbm::num {

std::size_t SymTridiagonal::count_below(double x) const {
  // LDL^T pivots of (T - x I); negative pivots count eigenvalues below x.
  const std::size_t n = diag.size();
  constexpr double kTiny = 1e-300;
  std::size_t count = 0;
  double d = diag[0] - x;
  if (d < 0.0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(d) < kTiny) d = -kTiny;
    d = diag[i] - x - off[i - 1] * off[i - 1] / d;
    if (d < 0.0) ++count;
  }
  return count;
}

std::pair<double, double> SymTridiagonal::gershgorin() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < n) r += std::abs(off[i]);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  return {lo, hi};
}

double SymTridiagonal::eigenvalue(std::size_t k, double lo, double hi, double abs_tol) const {
  if (count_below(lo) > k || count_below(hi) <= k) {
    auto [glo, ghi] = gershgorin();
    lo = glo;
    hi = ghi;
  }
  for (int iter = 0; iter < 200 && hi - lo > abs_tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> SymTridiagonal::eigenvector(double lambda) const {
  const std::size_t n = diag.size();
  std::vector<double> sub(off), sup(off), d(n);
  const double scale = std::max(1.0, std::abs(lambda));
  const double shift = lambda + 1e-13 * scale;
  for (std::size_t i = 0; i < n; ++i) d[i] = diag[i] - shift;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  for (int iter = 0; iter < 3; ++iter) {
    v = solve_tridiagonal_pivot(sub, d, sup, v);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<double> solve_tridiagonal_pivot(std::span<const double> sub, std::span<const double> diag,
                                            std::span<const double> sup, std::span<const double> rhs) {
  // Gaussian elimination with partial pivoting; U has two super-diagonals.
  const std::size_t n = diag.size();
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> du(n, 0.0), du2(n, 0.0), dl(n, 0.0);
  std::vector<double> b(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i + 1 < n; ++i) du[i] = sup[i];
  for (std::size_t i = 0; i + 1 < n; ++i) dl[i] = sub[i];
  constexpr double kTiny = 1e-300;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (std::abs(d[i]) < kTiny) d[i] = kTiny;
      const double m = dl[i] / d[i];
      d[i + 1] -= m * du[i];
      b[i + 1] -= m * b[i];
      dl[i] = 0.0;
    } else {
      // swap rows i and i+1
      const double m = d[i] / dl[i];
      d[i] = dl[i];
      const double tmp = d[i + 1];
      d[i + 1] = du[i] - m * tmp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -m * du2[i];
      }
      du[i] = tmp;
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= m * b[i];
    }
  }
  if (std::abs(d[n - 1]) < kTiny) d[n - 1] = kTiny;
  std::vector<double> x(n);
  x[n - 1] = b[n - 1] / d[n - 1];
  if (n > 1) x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
  for (std::size_t k = n - 2; k-- > 0;) x[k] = (b[k] - du[k] * x[k + 1] - du2[k] * x[k + 2]) / d[k];
  return x;
}

void solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                       std::span<const double> sup, std::span<double> rhs, std::vector<double>& scratch) {
  const std::size_t n = diag.size();
  scratch.resize(n);
  double denom = diag[0];
  scratch[0] = sup.empty() ? 0.0 : sup[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - sub[i - 1] * scratch[i - 1];
    scratch[i] = (i + 1 < n) ? sup[i] / denom : 0.0;
    rhs[i] = (rhs[i] - sub[i - 1] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

double simpson(std::span<const double> values, double h) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (values[0] + values[1]);
  const std::size_t last = (n % 2 == 1) ? n - 1 : n - 2;
  double s = values[0] + values[last];
  for (std::size_t i = 1; i < last; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
  double total = s * h / 3.0;
  if (last != n - 1) total += 0.5 * h * (values[n - 2] + values[n - 1]);
  return total;
}

double interp_cubic(std::span<const double> values, double x0, double h, double x) {
  const std::size_t n = values.size();
  if (n < 4) throw std::invalid_argument("interp_cubic needs at least 4 samples");
  const double pos = (x - x0) / h;
  auto i = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
  i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 4);
  const double u = pos - static_cast<double>(i);  // node offsets 0,1,2,3
  const double* v = values.data() + i;
  const double l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
  const double l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
  const double l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
  const double l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
  return l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3];
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> weights) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line needs >= 2 matching points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sxx += w * (x[i] - mx) * (x[i] - mx);
    sxy += w * (x[i] - mx) * (y[i] - my);
    syy += w * (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += w * r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  if (weights.empty()) {
    fit.slope_stderr = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
  } else {
    fit.slope_stderr = std::sqrt(1.0 / sxx);  // known variances
  }
  return fit;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace bbm::num
