#include "bbm/mc_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "bbm/errors.hpp"
#include "bbm/numerics.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"

namespace bbm::mc {

namespace {

// Stream tags; a fixed tag per sampling scheme keeps paths shared between
// estimators that use the same scheme (common random numbers).
constexpr std::uint64_t kForwardTag = 0x466f7277;
constexpr std::uint64_t kBridgeTag = 0x42726467;
constexpr std::uint64_t kOuTag = 0x4f550000;
constexpr std::size_t kChunk = 2048;

class NormalSequence {
 public:
  NormalSequence(const rng::Stream& stream, std::uint64_t sample) : stream_(stream), sample_(sample) {}

  double next() {
    if (pos_ == 4) {
      buf_ = stream_.normals(sample_, block_++, 0);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

 private:
  const rng::Stream& stream_;
  std::uint64_t sample_;
  std::uint32_t block_ = 0;
  std::array<double, 4> buf_{};
  int pos_ = 4;
};

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    n += 1.0;
    const double d = v - mean;
    mean += d / n;
    m2 += d * (v - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
};

template <std::size_t K, class SampleFn>
std::array<Moments, K> run_samples(std::size_t n, std::size_t workers, SampleFn&& sample) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  auto parts = par::map_indexed<std::array<Moments, K>>(
      chunks,
      [&](std::size_t c) {
        std::array<Moments, K> m{};
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t j = c * kChunk; j < end; ++j) {
          const std::array<double, K> v = sample(j);
          for (std::size_t k = 0; k < K; ++k) m[k].add(v[k]);
        }
        return m;
      },
      workers);
  std::array<Moments, K> total{};
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < K; ++k) total[k].merge(p[k]);
  }
  return total;
}

KernelEstimate to_estimate(const Moments& m, double scale, double step) {
  KernelEstimate e;
  e.n_samples = static_cast<std::size_t>(m.n);
  e.value = scale * m.mean;
  e.std_error = m.n > 1.0 ? scale * std::sqrt(m.m2 / (m.n - 1.0) / m.n) : 0.0;
  e.integrator_step = step;
  return e;
}

void check_sampler(const SamplerConfig& cfg) {
  if (cfg.n_samples < 100) throw ConfigError("n_samples must be at least 100");
  if (!(cfg.step > 0.0)) throw ConfigError("step must be positive");
}

// E|N(m, sd^2)|^alpha = sd^alpha 2^(alpha/2) Gamma((alpha+1)/2)/sqrt(pi) M(-alpha/2, 1/2, -m^2/(2 sd^2)),
// with Kummer's transformation M(a,b,z) = e^z M(b-a,b,-z) so the series has positive terms.
double gaussian_abs_moment(double m, double sd, double alpha) {
  if (sd <= 0.0) return std::pow(std::abs(m), alpha);
  const double ratio2 = (sd / m) * (sd / m);
  if (ratio2 < 1.0 / 64.0) {
    // |m|^alpha E|1 + (sd/m) Z|^alpha, expanded in (sd/m)^2; sign changes are
    // beyond 8 standard deviations
    const double c2 = 0.5 * alpha * (alpha - 1.0);
    const double c4 = c2 * (alpha - 2.0) * (alpha - 3.0) / 4.0;
    const double c6 = c4 * (alpha - 4.0) * (alpha - 5.0) / 6.0;
    return std::pow(std::abs(m), alpha) * (1.0 + ratio2 * (c2 + ratio2 * (c4 + ratio2 * c6)));
  }
  if (alpha == 1.0) {
    const double u = m / sd;
    return m * std::erf(u / std::numbers::sqrt2) + sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * u * u);
  }
  const double z = 0.5 * (m / sd) * (m / sd);
  const double a = 0.5 + 0.5 * alpha;  // b - a with b = 1/2
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 400; ++k) {
    term *= (a + k) / (0.5 + k) * z / (k + 1.0);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  const double log_pref = alpha * std::log(sd) + 0.5 * alpha * std::numbers::ln2 + std::lgamma(0.5 * (alpha + 1.0)) -
                          0.5 * std::log(std::numbers::pi) - z;
  return std::exp(log_pref) * sum;
}

// One step of the path integral between skeleton points (r0, y0) and (r1, y1).
// Away from 0 the trapezoid rule; near 0, where |y|^alpha has its kink, the mean of
// the integrand over the Brownian bridge joining the two points (4-point
// Gauss-Legendre in time, exact Gaussian moment in space, f at the bridge mean).
double step_integral(const WeightSpec& w, double y0, double r0, double y1, double r1) {
  const double dr = r1 - r0;
  const double reach = 2.0 * std::sqrt(dr);  // 4 bridge standard deviations
  const bool near_zero = std::min(std::abs(y0), std::abs(y1)) < reach || (y0 < 0.0) != (y1 < 0.0);
  if (!near_zero) return 0.5 * (w.integrand(y0, r0) + w.integrand(y1, r1)) * dr;
  static constexpr std::array<double, 4> nodes{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                               0.8611363115940526};
  static constexpr std::array<double, 4> weights{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                 0.3478548451374538};
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double frac = 0.5 * (1.0 + nodes[k]);
    const double r = r0 + frac * dr;
    const double m = y0 + frac * (y1 - y0);
    const double sd = std::sqrt(frac * (1.0 - frac) * dr);
    const double moment = gaussian_abs_moment(m, sd, w.alpha) / std::pow(std::numbers::sqrt2 * r, w.alpha);
    total += 0.5 * weights[k] * moment * (1.0 + w.f(m, r));
  }
  return total * dr;
}

std::size_t step_count(double span, double step) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / step - 1e-9)));
}

// Calls visit(r, B_r) at every skeleton point of the bridge from (s,x) to (t,y),
// including both endpoints.
template <class Visit>
void walk_bridge(double s, double x, double t, double y, std::size_t steps, NormalSequence& normals,
                 Visit&& visit) {
  const double dt = (t - s) / static_cast<double>(steps);
  double b = x;
  visit(s, b);
  for (std::size_t i = 1; i <= steps; ++i) {
    const double r_prev = s + static_cast<double>(i - 1) * dt;
    const double r = i == steps ? t : s + static_cast<double>(i) * dt;
    if (i == steps) {
      b = y;
    } else {
      const double remaining = t - r_prev;
      const double mean = b + (y - b) * (dt / remaining);
      const double var = dt * (t - r) / remaining;
      b = mean + std::sqrt(var) * normals.next();
    }
    visit(r, b);
  }
}

}  // namespace

double ErrorEnvelope::plus(double y, double r) const {
  return std::min(L * (std::pow(std::abs(y / r), a) + std::pow(r, -b)), 1.0);
}

double ErrorEnvelope::minus(double y, double r) const {
  return -std::min(L * (std::pow(std::abs(y / r), a) + std::pow(r, -b)), eta);
}

double ErrorEnvelope::r0() const { return std::pow(2.0 * L, 1.0 / b); }

bool envelope_monotone(double L, double a, double b, double alpha, double eta, std::size_t grid) {
  if (!(L > 0.0 && a > 0.0 && b > 0.0 && alpha > 0.0)) throw DomainError("envelope parameters must be positive");
  if (grid < 10) throw DomainError("envelope grid too small");
  // c = L r^-b ranges over (0, 1/2] for r >= r0; u = y/r up to where the cap at
  // eta is certainly active, beyond which the function is u^alpha (1 - eta).
  const double u_max = 2.0 * std::pow(std::max(eta, 1e-12) / L, 1.0 / a);
  std::vector<double> ua(grid), la(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double u = u_max * static_cast<double>(i) / static_cast<double>(grid - 1);
    ua[i] = std::pow(u, alpha);
    la[i] = L * std::pow(u, a);
  }
  const double c_min = 1e-6;
  for (std::size_t k = 0; k < grid; ++k) {
    const double c = 0.5 * std::pow(c_min / 0.5, static_cast<double>(k) / static_cast<double>(grid - 1));
    double prev = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
      const double g = ua[i] * (1.0 - std::min(la[i] + c, eta));
      if (g < prev * (1.0 - 1e-14)) return false;
      prev = g;
    }
  }
  return true;
}

ErrorEnvelope make_envelope(double L, double a, double b, double alpha, std::size_t grid) {
  ErrorEnvelope e{L, a, b, 0.5};
  if (envelope_monotone(L, a, b, alpha, 0.5, grid)) return e;
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (envelope_monotone(L, a, b, alpha, mid, grid) ? lo : hi) = mid;
  }
  if (!(lo > 0.0)) throw NumericalError("no admissible eta found for the envelope", lo, hi);
  e.eta = lo;
  return e;
}

double WeightSpec::f(double y, double r) const {
  switch (kind) {
    case EnvelopeKind::None: return 0.0;
    case EnvelopeKind::Plus: return envelope.plus(y, r);
    case EnvelopeKind::Minus: return envelope.minus(y, r);
  }
  return 0.0;
}

double WeightSpec::integrand(double y, double r) const {
  return std::pow(std::abs(y / (std::numbers::sqrt2 * r)), alpha) * (1.0 + f(y, r));
}

KernelEstimate estimate_total_mass(double s, double t, double x, const WeightSpec& weight, const SamplerConfig& cfg) {
  check_sampler(cfg);
  if (!(s > 0.0) || !(t >= s)) throw DomainError("total mass requires 0 < s <= t");
  if (cfg.step > std::min(1.0, s) / 10.0 * (1.0 + 1e-12)) throw ConfigError("step must be at most min(1, s)/10");
  KernelEstimate trivial{1.0, 0.0, cfg.n_samples, cfg.step};
  if (t == s || weight.beta == 0.0) return trivial;

  const rng::Stream stream(cfg.seed, kForwardTag);
  const std::size_t steps = step_count(t - s, cfg.step);
  const double dt = (t - s) / static_cast<double>(steps);
  const double sd = std::sqrt(dt);
  auto m = run_samples<1>(cfg.n_samples, cfg.workers, [&](std::size_t j) {
    NormalSequence z(stream, j);
    double b = x, r = s, integral = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
      const double r1 = i == steps ? t : s + static_cast<double>(i) * dt;
      const double b1 = b + sd * z.next();
      integral += step_integral(weight, b, r, b1, r1);
      b = b1;
      r = r1;
    }
    return std::array<double, 1>{std::exp(-weight.beta * integral)};
  });
  return to_estimate(m[0], 1.0, dt);
}

KernelEstimate estimate_Gtilde(double s, double x, double t, double y, const WeightSpec& weight,
                               const SamplerConfig& cfg) {
  check_sampler(cfg);
  if (!(s > 0.0 && t > s)) throw DomainError("G~ requires 0 < s < t");
  if (cfg.step > std::min(1.0, s) / 10.0 * (1.0 + 1e-12)) throw ConfigError("step must be at most min(1, s)/10");
  const double gauss = std::exp(-(y - x) * (y - x) / (2.0 * (t - s))) / std::sqrt(2.0 * std::numbers::pi * (t - s));
  if (weight.beta == 0.0) return {gauss, 0.0, cfg.n_samples, cfg.step};

  const rng::Stream stream(cfg.seed, kBridgeTag);
  const std::size_t steps = step_count(t - s, cfg.step);
  auto m = run_samples<1>(cfg.n_samples, cfg.workers, [&](std::size_t j) {
    NormalSequence z(stream, j);
    double integral = 0.0, prev_b = 0.0, prev_r = -1.0;
    walk_bridge(s, x, t, y, steps, z, [&](double r, double b) {
      if (prev_r >= 0.0) integral += step_integral(weight, prev_b, prev_r, b, r);
      prev_b = b;
      prev_r = r;
    });
    return std::array<double, 1>{std::exp(-weight.beta * integral)};
  });
  return to_estimate(m[0], gauss, (t - s) / static_cast<double>(steps));
}

LocalizationResult localization_probe(double s, double t, double x, double y, double eta_exponent,
                                      const WeightSpec& weight, const SamplerConfig& cfg) {
  check_sampler(cfg);
  if (!(eta_exponent > 0.0)) throw DomainError("localization exponent eta must be positive");
  if (!(s > 0.0 && t > s)) throw DomainError("localization probe requires 0 < s < t");
  const double kappa = 2.0 * weight.alpha / (2.0 + weight.alpha);
  const double expo = 0.5 * (kappa + eta_exponent);
  const rng::Stream stream(cfg.seed, kBridgeTag);
  const std::size_t steps = step_count(t - s, cfg.step);
  auto m = run_samples<2>(cfg.n_samples, cfg.workers, [&](std::size_t j) {
    NormalSequence z(stream, j);
    double integral = 0.0, prev_b = 0.0, prev_r = -1.0;
    bool exited = false;
    walk_bridge(s, x, t, y, steps, z, [&](double r, double b) {
      if (prev_r >= 0.0) integral += step_integral(weight, prev_b, prev_r, b, r);
      if (std::abs(b) >= std::pow(r, expo)) exited = true;
      prev_b = b;
      prev_r = r;
    });
    const double w = std::exp(-weight.beta * integral);
    return std::array<double, 2>{exited ? w : 0.0, w};
  });
  const double gauss = std::exp(-(y - x) * (y - x) / (2.0 * (t - s))) / std::sqrt(2.0 * std::numbers::pi * (t - s));
  const double dt = (t - s) / static_cast<double>(steps);
  LocalizationResult res;
  res.restricted = to_estimate(m[0], gauss, dt);
  res.unrestricted = to_estimate(m[1], gauss, dt);
  res.ratio = m[1].mean > 0.0 ? m[0].mean / m[1].mean : 0.0;
  return res;
}

Alpha2Fit alpha2_exponent_fit(double beta, const std::vector<double>& s_list, double t, const SamplerConfig& cfg) {
  check_sampler(cfg);
  if (!(beta >= 0.0)) throw DomainError("beta must be nonnegative");
  if (s_list.size() < 3) throw DomainError("alpha2 fit needs at least three s values");
  for (double s : s_list) {
    if (!(s > 0.0 && s < t)) throw DomainError("alpha2 fit requires 0 < s < t for every s");
  }
  Alpha2Fit fit;
  fit.beta = beta;
  fit.expected = 0.25 * (std::sqrt(1.0 + 8.0 * beta) - 1.0);

  // log-time horizons, each rounded onto the common grid
  std::vector<std::size_t> marks;
  for (double s : s_list) marks.push_back(step_count(std::log(t / s), cfg.step));
  const std::size_t steps = *std::max_element(marks.begin(), marks.end());
  const double dv = cfg.step;
  const double decay = std::exp(-0.5 * dv);
  const double noise = std::sqrt(1.0 - std::exp(-dv));
  const rng::Stream stream(cfg.seed, kOuTag);

  const std::size_t K = marks.size();
  std::vector<Moments> totals(K);
  const std::size_t chunks = (cfg.n_samples + kChunk - 1) / kChunk;
  auto parts = par::map_indexed<std::vector<Moments>>(
      chunks,
      [&](std::size_t c) {
        std::vector<Moments> m(K);
        std::vector<double> at(steps + 1);
        const std::size_t end = std::min(cfg.n_samples, (c + 1) * kChunk);
        for (std::size_t j = c * kChunk; j < end; ++j) {
          NormalSequence z(stream, j);
          double v = z.next();  // stationary start: Y_s / sqrt(s) ~ N(0, 1)
          double integral = 0.0;
          at[0] = 0.0;
          for (std::size_t i = 1; i <= steps; ++i) {
            const double v1 = decay * v + noise * z.next();
            integral += 0.5 * (v * v + v1 * v1) * dv;
            at[i] = integral;
            v = v1;
          }
          for (std::size_t k = 0; k < K; ++k) m[k].add(std::exp(-beta * at[marks[k]]));
        }
        return m;
      },
      cfg.workers);
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < K; ++k) totals[k].merge(p[k]);
  }

  std::vector<double> lx, ly, wts;
  for (std::size_t k = 0; k < K; ++k) {
    const double ratio = std::exp(-static_cast<double>(marks[k]) * dv);
    fit.ratios.push_back(ratio);
    fit.estimates.push_back(to_estimate(totals[k], 1.0, dv));
    const auto& e = fit.estimates.back();
    if (e.value > 0.0) {
      lx.push_back(std::log(ratio));
      ly.push_back(std::log(e.value));
      const double rel = e.std_error / e.value;
      wts.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
    }
  }
  if (lx.size() < 3) throw NumericalError("alpha2 fit: too few positive estimates");
  const auto line = num::fit_line(lx, ly, beta == 0.0 ? std::vector<double>{} : wts);
  fit.slope = line.slope;
  fit.slope_stderr = line.slope_stderr;
  fit.ci_low = line.slope - 1.96 * line.slope_stderr;
  fit.ci_high = line.slope + 1.96 * line.slope_stderr;
  fit.r_squared = line.r_squared;
  fit.accuracy_warning = beta != 0.0 && line.r_squared < 0.99;
  return fit;
}

double bridge_barrier_probability(double s, double x, double t, double y, double K) {
  if (!(t > s)) throw DomainError("bridge barrier requires s < t");
  if (!(x < K) || !(y < K)) throw DomainError("bridge barrier requires x < K and y < K");
  if (std::isinf(K)) return 0.0;
  return std::exp(-2.0 * (K - x) * (K - y) / (t - s));
}

KernelEstimate bridge_barrier_mc(double s, double x, double t, double y, double K, const SamplerConfig& cfg) {
  check_sampler(cfg);
  bridge_barrier_probability(s, x, t, y, K);  // argument checks
  const rng::Stream stream(cfg.seed, kBridgeTag);
  const std::size_t steps = step_count(t - s, cfg.step);
  const double dt = (t - s) / static_cast<double>(steps);
  auto m = run_samples<1>(cfg.n_samples, cfg.workers, [&](std::size_t j) {
    NormalSequence z(stream, j);
    double survive = 1.0, prev = 0.0;
    bool first = true;
    walk_bridge(s, x, t, y, steps, z, [&](double, double b) {
      if (!first) {
        if (prev >= K || b >= K) {
          survive = 0.0;
        } else {
          survive *= 1.0 - std::exp(-2.0 * (K - prev) * (K - b) / dt);
        }
      }
      first = false;
      prev = b;
    });
    return std::array<double, 1>{1.0 - survive};
  });
  return to_estimate(m[0], 1.0, dt);
}

}  // namespace bbm::mc
