#include "bbm/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bbm/errors.hpp"
#include "bbm/io.hpp"

namespace bbm::pde {

namespace {

// int_{t0}^{t1} (1-s)^-a ds
double power_integral(double t0, double t1, double a) {
  if (std::abs(a - 1.0) < 1e-14) return std::log((1.0 - t0) / (1.0 - t1));
  return (std::pow(1.0 - t0, 1.0 - a) - std::pow(1.0 - t1, 1.0 - a)) / (1.0 - a);
}

}  // namespace

double integral_one_minus_s_pow(double T, double kappa) {
  if (!(T >= 0.0 && T < 1.0)) throw DomainError("integral requires 0 <= T < 1");
  return power_integral(0.0, T, kappa);
}

QPath QPath::power(double alpha, double T) {
  QPath p;
  p.append({Segment::Kind::Power, 0.0, T, alpha, 0.0});
  return p;
}

QPath QPath::constant(double q, double T) {
  if (!(q > 0.0)) throw DomainError("constant q must be positive");
  QPath p;
  p.append({Segment::Kind::Constant, 0.0, T, q, 0.0});
  return p;
}

void QPath::append(const Segment& segment) {
  if (!(segment.t1 > segment.t0)) throw DomainError("q segment must have positive length");
  if (!segments_.empty() && std::abs(segments_.back().t1 - segment.t0) > 1e-14)
    throw DomainError("q segments must be contiguous");
  if (segment.kind == Segment::Kind::Power && !(segment.t1 < 1.0))
    throw DomainError("(1-t)^-alpha piece must end before t = 1");
  segments_.push_back(segment);
}

double QPath::t_end() const { return segments_.empty() ? 0.0 : segments_.back().t1; }

const Segment& QPath::segment_at(double t) const {
  if (segments_.empty()) throw DomainError("empty q path");
  for (const auto& s : segments_) {
    if (t < s.t1) return s;
  }
  return segments_.back();
}

double QPath::value(double t) const {
  const auto& s = segment_at(t);
  switch (s.kind) {
    case Segment::Kind::Constant: return s.a;
    case Segment::Kind::Linear: return s.a + (s.b - s.a) * (t - s.t0) / (s.t1 - s.t0);
    case Segment::Kind::Power: return std::pow(1.0 - t, -s.a);
  }
  return 0.0;
}

double QPath::log_derivative(double t) const {
  const auto& s = segment_at(t);
  switch (s.kind) {
    case Segment::Kind::Constant: return 0.0;
    case Segment::Kind::Linear: return (s.b - s.a) / (s.t1 - s.t0) / value(t);
    case Segment::Kind::Power: return s.a / (1.0 - t);
  }
  return 0.0;
}

double QPath::integral_pow(double t0, double t1, double p) const {
  double total = 0.0;
  for (const auto& s : segments_) {
    const double a0 = std::max(t0, s.t0);
    const double a1 = std::min(t1, s.t1);
    if (!(a1 > a0)) continue;
    switch (s.kind) {
      case Segment::Kind::Constant:
        total += std::pow(s.a, p) * (a1 - a0);
        break;
      case Segment::Kind::Linear: {
        const double slope = (s.b - s.a) / (s.t1 - s.t0);
        const double q0 = s.a + slope * (a0 - s.t0);
        const double q1 = s.a + slope * (a1 - s.t0);
        if (std::abs(slope) < 1e-300) {
          total += std::pow(q0, p) * (a1 - a0);
        } else {
          total += (std::pow(q1, p + 1.0) - std::pow(q0, p + 1.0)) / (slope * (p + 1.0));
        }
        break;
      }
      case Segment::Kind::Power:
        total += power_integral(a0, a1, s.a * p);
        break;
    }
  }
  return total;
}

std::vector<double> QPath::breakpoints() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < segments_.size(); ++i) out.push_back(segments_[i].t0);
  return out;
}

bool QPath::constant_on(double t0, double t1) const {
  for (const auto& s : segments_) {
    if (s.t1 <= t0 || s.t0 >= t1) continue;
    if (s.kind != Segment::Kind::Constant) return false;
  }
  return value(t0) == value(t1);
}

std::string QPath::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (i) out << "; ";
    const std::string range = "[" + io::format_double(s.t0) + "," + io::format_double(s.t1) + "]";
    switch (s.kind) {
      case Segment::Kind::Constant: out << "const" << range << "=" << io::format_double(s.a); break;
      case Segment::Kind::Linear: out << "lin" << range; break;
      case Segment::Kind::Power: out << "pow" << range; break;
    }
  }
  return out.str();
}

BarrierPair build_barriers(double T, double eps1, double eps2, double alpha) {
  if (!(T > 0.0 && T < 1.0)) throw DomainError("barriers require 0 < T < 1");
  if (!(alpha > 0.0)) throw DomainError("barriers require alpha > 0");
  if (!(eps1 > 0.0)) throw DomainError("violated: eps1 > 0");
  if (!(eps2 > 0.0)) throw DomainError("violated: eps2 > 0");
  if (!(eps1 <= T / 10.0)) throw DomainError("violated: eps1 <= T/10");
  if (!(eps2 <= T / 10.0)) throw DomainError("violated: eps2 <= T/10");
  if (!(eps2 <= (1.0 - T) / 10.0)) throw DomainError("violated: eps2 <= (1-T)/10");

  using K = Segment::Kind;
  const double a = alpha;
  auto pw = [a](double t) { return std::pow(1.0 - t, -a); };
  BarrierPair bp;
  bp.T = T;
  bp.eps1 = eps1;
  bp.eps2 = eps2;
  bp.alpha = alpha;

  bp.q_star.append({K::Constant, 0.0, eps1, 1.0, 0.0});
  bp.q_star.append({K::Linear, eps1, 2.0 * eps1, 1.0, pw(2.0 * eps1)});
  bp.q_star.append({K::Power, 2.0 * eps1, T - 2.0 * eps2, a, 0.0});
  bp.q_star.append({K::Power, T - 2.0 * eps2, T - eps2, a, 0.0});
  bp.q_star.append({K::Constant, T - eps2, T, pw(T - eps2), 0.0});

  bp.q_upper.append({K::Constant, 0.0, eps1, pw(eps1), 0.0});
  bp.q_upper.append({K::Power, eps1, 2.0 * eps1, a, 0.0});
  bp.q_upper.append({K::Power, 2.0 * eps1, T - 2.0 * eps2, a, 0.0});
  bp.q_upper.append({K::Linear, T - 2.0 * eps2, T - eps2, pw(T - 2.0 * eps2), pw(T)});
  bp.q_upper.append({K::Constant, T - eps2, T, pw(T), 0.0});
  return bp;
}

EpsChoice choose_eps(double rho, double T, double alpha) {
  const double kappa = 2.0 * alpha / (2.0 + alpha);
  EpsChoice e;
  const double scale = rho * std::pow(1.0 - T, 1.0 - kappa);
  e.delta = 1.0 / scale;
  e.eps1 = std::sqrt(e.delta / rho);
  e.eps2 = (1.0 - T) * std::sqrt(e.delta / scale);
  return e;
}

void check_fundamental_regime(double rho, double T, double alpha) {
  const double kappa = 2.0 * alpha / (2.0 + alpha);
  if (!(rho >= 40.0)) throw DomainError("violated: rho >= 40");
  if (!(T >= 20.0 / rho)) throw DomainError("violated: T >= 20/rho");
  if (!(T < 1.0)) throw DomainError("violated: T < 1");
  if (!(rho * std::pow(1.0 - T, 1.0 - kappa) >= 10.0)) throw DomainError("violated: rho (1-T)^(1-kappa) >= 10");
}

}  // namespace bbm::pde
