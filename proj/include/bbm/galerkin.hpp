#pragma once

// Spectral-Galerkin evolution of the coefficients c_n(t) = <phi_{q(t),n}, W_t>,
//   c' = (-rho q^(2/(2+alpha)) D + (q'/q) A) c.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bbm/barriers.hpp"
#include "bbm/spectral.hpp"

namespace bbm::pde {

struct GalerkinMatrices {
  std::size_t N = 0;
  double alpha = 0.0;
  std::vector<double> lambdas;  // lambda_0 .. lambda_{N-1} at q = 1
  std::vector<double> D;        // lambda_i - lambda_0
  Eigen::MatrixXd A;            // antisymmetric part of B
  Eigen::MatrixXd B;            // raw quadrature, before antisymmetrization
  double antisymmetry_defect = 0.0;  // max |B + B^T|
};

/// Requires sys at q = 1 with at least N levels. Throws AccuracyError when the
/// quadrature defect exceeds 1e-5.
GalerkinMatrices galerkin_matrices(const spectral::EigenSystem& sys, std::size_t N);

struct EvolveOptions {
  double max_step = 1e-3;
  double relative_step = 0.01;  // dt <= relative_step * (1 - t)
  bool zero_a = false;          // drop the coupling term (test hook)
};

struct CoefficientPath {
  std::vector<double> times;
  std::vector<std::vector<double>> coefficients;  // c(t_i)
  std::vector<double> norms;                      // ||c(t_i)||_2
  double tail_ratio = 0.0;                        // |c_{N-1}(T)| / ||c(T)||
  double max_norm_increase = 0.0;                 // largest ||c(t_{i+1})|| - ||c(t_i)||
  std::string q_description;

  const std::vector<double>& final() const { return coefficients.back(); }
};

/// c_n(0) = phi_{q0,n}(xi).
std::vector<double> initial_coefficients(const spectral::EigenSystem& sys, double q0, double xi, std::size_t N);

/// Strang splitting: exact exponential of the diagonal part over half steps and an
/// orthogonal Cayley step for the coupling, so ||c|| cannot grow.
CoefficientPath evolve_coefficients(const std::vector<double>& c0, const QPath& q, double rho,
                                    const GalerkinMatrices& m, double T, const EvolveOptions& options = {});

/// W_T(x) = sum_n c_n(T) phi_{q(T),n}(x).
std::vector<double> reconstruct_W(const std::vector<double>& c, const spectral::EigenSystem& sys, double qT,
                                  const std::vector<double>& xs);

struct C0StabilityRow {
  double rho = 0.0;
  double delta = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double c0_initial = 0.0;
  double c0_final_lower = 0.0;  // with q_star
  double c0_final_upper = 0.0;  // with q_upper
  double deviation = 0.0;       // max over the two barriers of |c0(T) - c0(0)|
};

struct C0StabilityReport {
  double alpha = 0.0;
  double T = 0.0;
  double xi = 0.0;
  std::vector<C0StabilityRow> rows;
  double fitted_exponent = 0.0;  // slope of log deviation against log rho
};

struct C0StabilityOptions {
  double xi = 0.0;
  std::size_t N = 24;
  bool constant_q = false;  // replace both barriers by q = 1 (test hook)
  EvolveOptions evolve;
};

C0StabilityReport check_c0_stability(const std::vector<double>& rho_list, double T, double alpha,
                                     const C0StabilityOptions& options = {});

}  // namespace bbm::pde
