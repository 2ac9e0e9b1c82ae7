#pragma once

// Piecewise potential strengths q(t) for the time-singular PDE, including the
// lower/upper barrier pair that sandwiches (1-t)^-alpha.

#include <string>
#include <vector>

namespace bbm::pde {

/// int_0^T (1-s)^-kappa ds.
double integral_one_minus_s_pow(double T, double kappa);

struct Segment {
  enum class Kind { Constant, Linear, Power };
  Kind kind = Kind::Constant;
  double t0 = 0.0;
  double t1 = 0.0;
  double a = 0.0;  // Constant: value; Linear: q(t0); Power: alpha in (1-t)^-alpha
  double b = 0.0;  // Linear: q(t1)
};

/// Continuous piecewise q on [0, T] built from constant, linear and (1-t)^-alpha pieces.
class QPath {
 public:
  static QPath power(double alpha, double T);
  static QPath constant(double q, double T);

  void append(const Segment& segment);

  double value(double t) const;
  /// q'(t)/q(t) (right derivative at breakpoints).
  double log_derivative(double t) const;
  /// int_{t0}^{t1} q(s)^p ds, evaluated piece by piece in closed form.
  double integral_pow(double t0, double t1, double p) const;

  std::vector<double> breakpoints() const;  // interior segment boundaries
  const std::vector<Segment>& segments() const { return segments_; }
  double t_end() const;
  bool constant_on(double t0, double t1) const;

  /// Compact description, e.g. "const[0,0.1]=1; lin[0.1,0.2]; pow[0.2,0.5]".
  std::string describe() const;

 private:
  const Segment& segment_at(double t) const;
  std::vector<Segment> segments_;
};

struct BarrierPair {
  double T = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double alpha = 0.0;
  QPath q_star;   // lower barrier
  QPath q_upper;  // upper barrier
};

/// Requires eps1, eps2 in (0, T/10] and eps2 <= (1-T)/10.
BarrierPair build_barriers(double T, double eps1, double eps2, double alpha);

struct EpsChoice {
  double delta = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
};

/// delta = 1/(rho (1-T)^(1-kappa)), eps1 = sqrt(delta/rho),
/// eps2 = (1-T) sqrt(delta / (rho (1-T)^(1-kappa))).
EpsChoice choose_eps(double rho, double T, double alpha);

/// Throws DomainError unless rho >= 40, T >= 20/rho and rho (1-T)^(1-kappa) >= 10.
void check_fundamental_regime(double rho, double T, double alpha);

}  // namespace bbm::pde
