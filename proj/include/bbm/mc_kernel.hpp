#pragma once

// Monte Carlo estimates of Brownian expectations weighted by
//   exp(-beta int_s^t |B_r / (sqrt2 r)|^alpha (1 + f(B_r, r)) dr).

#include <cstdint>
#include <vector>

namespace bbm::mc {

struct KernelEstimate {
  double value = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n)
  std::size_t n_samples = 0;
  double integrator_step = 0.0;
};

/// f+(y,r) = min(L(|y/r|^a + r^-b), 1) and f-(y,r) = -min(L(|y/r|^a + r^-b), eta).
struct ErrorEnvelope {
  double L = 1.0;
  double a = 1.0;
  double b = 1.0;
  double eta = 0.5;

  double plus(double y, double r) const;
  double minus(double y, double r) const;
  double r0() const;  // (2L)^(1/b)
};

/// Grid check that u -> u^alpha (1 + f-) is non-decreasing for every r >= r0
/// (u = y/r on a grid x grid points; r geometric from r0 up to where L r^-b = 1e-6).
bool envelope_monotone(double L, double a, double b, double alpha, double eta, std::size_t grid = 1000);

/// Largest eta in (0, 1/2] passing envelope_monotone, by bisection.
ErrorEnvelope make_envelope(double L, double a, double b, double alpha, std::size_t grid = 1000);

enum class EnvelopeKind { None, Plus, Minus };

struct WeightSpec {
  double alpha = 1.0;
  double beta = 1.0;
  EnvelopeKind kind = EnvelopeKind::None;
  ErrorEnvelope envelope;

  double f(double y, double r) const;
  double integrand(double y, double r) const;  // |y/(sqrt2 r)|^alpha (1 + f)
};

struct SamplerConfig {
  std::size_t n_samples = 10000;
  double step = 0.01;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0: hardware concurrency
};

/// E_(s,x)[weight] with forward Wiener paths. Requires step <= min(1, s)/10.
KernelEstimate estimate_total_mass(double s, double t, double x, const WeightSpec& weight, const SamplerConfig& cfg);

/// Gaussian transition density times E[weight | B_t = y] with Brownian bridges.
/// Paths depend only on (seed, s, x, t, y, step), so runs with different f share them.
KernelEstimate estimate_Gtilde(double s, double x, double t, double y, const WeightSpec& weight,
                               const SamplerConfig& cfg);

struct LocalizationResult {
  KernelEstimate restricted;    // weight times 1{path leaves the tube}
  KernelEstimate unrestricted;  // plain weight
  double ratio = 0.0;
};

/// Tube |B_r| < r^((kappa + eta)/2), checked on the sampled skeleton.
LocalizationResult localization_probe(double s, double t, double x, double y, double eta_exponent,
                                      const WeightSpec& weight, const SamplerConfig& cfg);

struct Alpha2Fit {
  double beta = 0.0;
  double expected = 0.0;  // (sqrt(1+8 beta) - 1) / 4
  std::vector<double> ratios;  // s/t
  std::vector<KernelEstimate> estimates;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double r_squared = 0.0;
  bool accuracy_warning = false;
};

/// E[exp(-beta int_s^t (Y_r/r)^2 dr)] for a standard Brownian motion Y started at 0
/// at time 0, for every s in s_list, regressed on log(s/t). `step` is the step in
/// log-time; the integral is taken along Z_v = Y_{s e^v} / sqrt(s e^v), a stationary
/// Ornstein-Uhlenbeck process sampled exactly.
Alpha2Fit alpha2_exponent_fit(double beta, const std::vector<double>& s_list, double t, const SamplerConfig& cfg);

/// P(bridge from (s,x) to (t,y) reaches K) = exp(-2(K-x)(K-y)/(t-s)).
double bridge_barrier_probability(double s, double x, double t, double y, double K);

/// MC of the same probability: skeleton bridges, with the exact crossing probability of
/// each sub-bridge averaged in (conditional expectation given the skeleton).
KernelEstimate bridge_barrier_mc(double s, double x, double t, double y, double K, const SamplerConfig& cfg);

}  // namespace bbm::mc
