#pragma once

// Modified Bessel function I0 and the 2D Bessel-process transition density.

namespace bbm::special {

/// log I0(x) for x >= 0. Power series below 20, asymptotic series above.
double log_bessel_i0(double x);

double bessel_i0(double x);

/// Density of the radius of a planar Brownian motion started at radius r0,
/// after time s, evaluated at z >= 0.
double bessel_density(double r0, double s, double z);

/// (z/s) exp(-(z-r0)^2/(2s)), which dominates bessel_density.
double bessel_density_upper(double r0, double s, double z);

}  // namespace bbm::special
