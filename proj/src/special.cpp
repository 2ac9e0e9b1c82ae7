#include "bbm/special.hpp"

#include <cmath>
#include <numbers>

#include "bbm/errors.hpp"

namespace bbm::special {

double log_bessel_i0(double x) {
  if (!(x >= 0.0)) throw DomainError("I0 argument must be nonnegative");
  if (x < 20.0) {
    // sum (x/2)^(2k) / (k!)^2; terms are positive so no cancellation
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (static_cast<double>(k) * static_cast<double>(k));
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::log(sum);
  }
  // e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k); terms decrease until k ~ 2x.
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * odd * odd / (k * 8.0 * x);
    if (next > term) break;
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

double bessel_i0(double x) { return std::exp(log_bessel_i0(x)); }

double bessel_density(double r0, double s, double z) {
  if (!(s > 0.0)) throw DomainError("bessel density requires s > 0");
  if (!(z >= 0.0) || !(r0 >= 0.0)) throw DomainError("bessel density requires z, r0 >= 0");
  if (z == 0.0) return 0.0;
  const double log_value = std::log(z / s) - (r0 * r0 + z * z) / (2.0 * s) + log_bessel_i0(r0 * z / s);
  return std::exp(log_value);
}

double bessel_density_upper(double r0, double s, double z) {
  if (!(s > 0.0)) throw DomainError("bessel density requires s > 0");
  return (z / s) * std::exp(-(z - r0) * (z - r0) / (2.0 * s));
}

}  // namespace bbm::special
