#pragma once

// Small numerical kernels shared by the deterministic solvers.

#include <cstddef>
#include <span>
#include <vector>

namespace bbm::num {

/// Symmetric tridiagonal matrix: diag[i], off[i] couples i and i+1.
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }

  /// Number of eigenvalues strictly below x (Sturm sequence count).
  std::size_t count_below(double x) const;

  /// k-th smallest eigenvalue (0-based) by bisection inside [lo, hi].
  double eigenvalue(std::size_t k, double lo, double hi, double abs_tol) const;

  /// Gershgorin bounds on the spectrum.
  std::pair<double, double> gershgorin() const;

  /// Unit-norm eigenvector for an (accurately known) eigenvalue by inverse iteration.
  std::vector<double> eigenvector(double lambda) const;
};

/// Solves a general tridiagonal system with partial pivoting.
/// sub[i] = A(i+1,i), diag[i] = A(i,i), sup[i] = A(i,i+1).
std::vector<double> solve_tridiagonal_pivot(std::span<const double> sub, std::span<const double> diag,
                                            std::span<const double> sup, std::span<const double> rhs);

/// Thomas algorithm for diagonally dominant systems; overwrites rhs with the solution.
/// Scratch vector is resized as needed.
void solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                       std::span<const double> sup, std::span<double> rhs, std::vector<double>& scratch);

/// Composite Simpson rule on a uniform grid (odd number of points; falls back to
/// trapezoid for the last interval when even).
double simpson(std::span<const double> values, double h);

/// 4-point Lagrange interpolation on a uniform grid starting at x0.
double interp_cubic(std::span<const double> values, double x0, double h, double x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};

/// Weighted least squares (weights = 1/variance; pass empty for unweighted).
LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> weights = {});

double median(std::vector<double> values);
double quantile(std::vector<double> values, double p);

}  // namespace bbm::num
