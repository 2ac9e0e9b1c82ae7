#pragma once

// Eigenpairs of L_q f = -f'' + q |x|^alpha f on the real line.
//
// Eigenfunctions are stored on the half-line grid x_i = i*h, i = 0..M; the
// full-line values follow from the parity of the level (even n: symmetric,
// odd n: antisymmetric).

#include <cstddef>
#include <string>
#include <vector>

namespace bbm::spectral {

struct SpectrumOptions {
  double q = 1.0;
  double h = 1.0 / 256.0;   // base grid; Richardson uses h/2 and h/4 as well
  double x_max = 0.0;       // 0 selects the automatic truncation
  int max_refinements = 3;  // base-grid halvings allowed before giving up
};

struct EigenSystem {
  double alpha = 0.0;
  double q = 1.0;
  double h = 0.0;
  std::vector<double> grid;         // x_i = i*h on [0, X_max]
  std::vector<double> eigenvalues;  // extrapolated lambda_{q,n}
  std::vector<std::vector<double>> eigenfunctions;

  // accuracy evidence
  double accuracy = 0.0;
  std::vector<double> error_estimates;    // Richardson defect per level
  std::vector<double> grid_eigenvalues;   // eigenvalue of the discrete problem on grid h
  std::vector<double> residuals;          // discrete residual per level

  std::size_t levels() const { return eigenvalues.size(); }
  double x_max() const { return grid.empty() ? 0.0 : grid.back(); }

  /// phi_n(x) on the full line (cubic interpolation, zero beyond X_max).
  double evaluate(std::size_t n, double x) const;

  /// phi_n on an arbitrary set of points.
  std::vector<double> evaluate(std::size_t n, const std::vector<double>& xs) const;
};

/// Solves for the first n_max levels with absolute eigenvalue error <= accuracy.
EigenSystem solve_spectrum(double alpha, std::size_t n_max, double accuracy = 1e-8,
                           const SpectrumOptions& options = {});

/// Exact change of variables from a q = 1 solve to potential strength q.
EigenSystem rescale_to_q(const EigenSystem& sys, double q);

/// c_alpha = (2/pi) int_0^1 sqrt(1 - u^alpha) du.
double weyl_constant(double alpha);

/// (n / c_alpha)^(2 alpha / (alpha + 2)).
double weyl_prediction(double alpha, std::size_t n);

struct WeylReport {
  std::vector<std::size_t> n;
  std::vector<double> relative_error;
  /// true when the error is strictly decreasing across the requested checkpoints
  bool decreasing_at_checkpoints = false;
  std::vector<std::size_t> checkpoints;

  double error_at(std::size_t level) const;
};

WeylReport weyl_check(const EigenSystem& sys, std::vector<std::size_t> checkpoints = {10, 20, 40});

// Property helpers used by tests and by the CLI's evidence output.

/// Number of sign changes of phi_n on the full line (tail noise below a relative
/// threshold is ignored).
std::size_t count_sign_changes(const EigenSystem& sys, std::size_t n);

/// Full-line inner product <phi_m, phi_n> by the trapezoid rule.
double inner_product(const EigenSystem& sys, std::size_t m, std::size_t n);

/// Smallest C such that |phi_n(x)| <= (n+1)^3 exp(-(x^((2+alpha)/2) - C n)/(2+alpha))
/// for 1 <= n <= n_fit on the grid points with x^((2+alpha)/2) >= 20.
double fit_tail_constant(const EigenSystem& sys, std::size_t n_fit = 5);

/// Checks the tail envelope with a given C; returns the worst ratio |phi|/bound.
double tail_bound_ratio(const EigenSystem& sys, double C, std::size_t n_max = 5);

/// Truncation point used by the automatic domain choice.
double auto_x_max(double alpha, double q, double lambda_max);

/// CSV with columns x, phi_0, ..., phi_{N-1} (half-line samples).
std::string to_csv(const EigenSystem& sys);

/// JSON sidecar: alpha, q, eigenvalues and accuracy evidence.
std::string to_json(const EigenSystem& sys);

}  // namespace bbm::spectral
