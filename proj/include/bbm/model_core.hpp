#pragma once

// Model parameters, angle-dependent branching rates and the closed-form
// constants/centering functions of the planar inhomogeneous BBM.

#include <optional>
#include <string>
#include <vector>

namespace bbm::model {

enum class RateFamily { SinPow, PowClamp, Homogeneous, Custom };

std::string to_string(RateFamily family);
RateFamily rate_family_from_string(const std::string& name);

/// Branching rate sampled on a uniform grid covering [-pi, pi] (both endpoints
/// included, so the first and last values must coincide).
struct RateTable {
  std::vector<double> values;
  std::string path;  // provenance only; empty for in-memory tables

  static RateTable load(const std::string& path);
  void validate() const;
};

struct ModelParams {
  double alpha = 1.0;
  double beta = 1.0;
  RateFamily rate_family = RateFamily::SinPow;
  std::optional<RateTable> table;
  bool validate_theorem_range = false;

  void validate() const;

  /// beta as seen by the small-angle expansion b = 1 - beta |theta|^alpha.
  /// SinPow ignores the beta field: its expansion constant is 2^-alpha.
  double effective_beta() const;
};

ModelParams make_params(double alpha, double beta, RateFamily family = RateFamily::SinPow,
                        bool validate_theorem_range = false);

double kappa(double alpha);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

/// b(theta) in [0, 1]. Periodic in theta.
double branching_rate(double theta, const ModelParams& params);

/// Branching rate at a planar position; the origin gets b(0).
double branching_rate_at(double x, double y, const ModelParams& params);

struct DerivedConstants {
  double alpha = 0.0;
  double beta = 0.0;  // effective beta
  double kappa = 0.0;
  double lambda0 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

/// Builds the constants from the ground-state eigenvalue of -f'' + |x|^alpha f.
DerivedConstants make_constants(const ModelParams& params, double lambda0);

/// theta1 through the (2+alpha)/(2-alpha) form; equals make_constants(...).theta1.
double theta1_alternative(double alpha, double beta, double lambda0);

/// Coefficient c in m(t) = sqrt2 t - theta1/sqrt2 t^(1-kappa) - c log t.
double log_coefficient(double alpha);

double centering_m(double t, const DerivedConstants& consts);
double barrier_m_plus(double s, const DerivedConstants& consts);

/// Upper and lower curves bounding X of the particles used in the second-moment
/// argument, for s in [s0, t].
double tube_upper(double s, double t, double s0, double eps, const DerivedConstants& consts);
double tube_lower(double s, double t, double eps, const DerivedConstants& consts);

struct ConjectureReport {
  double alpha = 0.0;
  double beta = 0.0;
  /// Log coefficient conjectured for alpha = 2 (uses beta).
  double alpha2_log_coefficient = 0.0;
  /// Log coefficient conjectured for alpha > 2 (uses alpha); empty when alpha <= 2.
  std::optional<double> alpha_gt2_log_coefficient;
  std::string label = "conjecture: not part of the proven regime";
};

ConjectureReport conjectured_corrections(const ModelParams& params);

// Plain-text key/value configuration with a [model] section.
std::string to_config_text(const ModelParams& params);
ModelParams params_from_config_text(const std::string& text);

}  // namespace bbm::model
