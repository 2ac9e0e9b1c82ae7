#pragma once

// Finite-difference evolution of  u_t = rho (u_xx - q(t) |x|^alpha u)  on [-X, X]
// and the fundamental solution g(0, xi; T, .) built on top of it.

#include <optional>
#include <string>
#include <vector>

#include "bbm/barriers.hpp"
#include "bbm/spectral.hpp"

namespace bbm::pde {

struct PdeGrid {
  double x_max = 15.0;
  double h = 0.01;
  double c_step = 0.02;          // dt <= c_step / (rho (1-t)^-alpha)
  double growth = 0.05;          // dt <= growth * t near the start
  bool richardson_time = false;  // combine runs with dt and dt/2
  std::size_t max_steps = 4'000'000;
  double potential_scale = 1.0;  // 0 turns the killing term off (heat equation)
  // The evolution runs on w = exp(shift rho int q^(2/(2+alpha))) u, which keeps the
  // slowly decaying ground mode O(1); values are mapped back to u on output.
  double shift = 0.0;
};

struct PdeField {
  std::vector<double> time_grid;   // output times
  std::vector<double> space_grid;  // x_j on [-X, X]
  std::vector<std::vector<double>> values;  // u(t_i, x_j)
  std::vector<double> mass;        // int u dx at each output time
  double rho = 0.0;
  double alpha = 0.0;
  double t_start = 0.0;
  std::size_t steps = 0;           // steps of the coarse run
  double min_value = 0.0;          // most negative value seen at output times
  std::string q_description;

  /// Cubic interpolation in x of the last output time (or output index i).
  double interpolate(double x, std::size_t i) const;
  double interpolate(double x) const { return interpolate(x, values.size() - 1); }
};

/// Evolves `initial` (sampled on the space grid, given at time t_start) to T.
/// q defaults to (1-t)^-alpha. Output times default to {T}.
PdeField solve_pde(const std::vector<double>& initial, double t_start, double rho, double alpha, double T,
                   const PdeGrid& grid = {}, const QPath* q = nullptr, std::vector<double> output_times = {},
                   std::vector<double> extra_breakpoints = {});

/// Space grid used by solve_pde.
std::vector<double> space_grid(const PdeGrid& grid);

/// Number of time steps a run to T would take (coarse run).
std::size_t count_steps(double t_start, double rho, double alpha, double T, const PdeGrid& grid,
                        const std::vector<double>& breakpoints);

struct FundamentalSolution {
  double xi = 0.0;
  double T = 0.0;
  double width = 0.0;    // Gaussian std used for the point mass
  double t_start = 0.0;  // width^2 / (2 rho): heat-kernel age of that Gaussian
  PdeField field;
  /// |g_w - g_{w/2}| at x = xi relative to g_w, when requested.
  std::optional<double> width_halving_change;

  double operator()(double x) const { return field.interpolate(x); }
};

struct FundamentalOptions {
  PdeGrid grid;
  bool renormalize = true;        // shift by the ground-state eigenvalue of -f'' + |x|^alpha f
  bool richardson_space = true;   // combine grids h and h/2 (same Gaussian width)
  const QPath* q = nullptr;
  std::vector<double> extra_breakpoints;
  bool width_check = false;
};

FundamentalSolution fundamental_solution_g(double xi, double T, double rho, double alpha,
                                           const FundamentalOptions& options = {});

/// phi0(xi) (1-T)^(-kappa/4) phi0((1-T)^(-kappa/2) x) from a q = 1 ground state.
struct ProductForm {
  double lambda0 = 0.0;
  double prefactor = 0.0;  // exp(lambda0 rho int_0^T (1-s)^-kappa ds)
  double limit = 0.0;      // product form at x
  double renormalized = 0.0;
  double relative_deviation = 0.0;
};

/// Compares exp(lambda0 rho int (1-s)^-kappa) g(0, xi; T, x) with the product form.
ProductForm product_form_check(const FundamentalSolution& g, const spectral::EigenSystem& ground, double x = 0.0);

/// rho for the G <-> g change of variables: beta^(2/(2+alpha)) 2^(-2alpha/(2+alpha)) t^(1-kappa).
double rho_for_kernel(double t, double beta, double alpha);

/// G(s, x; t, y) through g(0, k y; 1 - s/t, k x) * k with k = sqrt(2 rho / t).
double kernel_G_from_g(double s, double x, double t, double y, double beta, double alpha,
                       const PdeGrid& grid = {});

}  // namespace bbm::pde
