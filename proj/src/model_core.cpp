#include "bbm/model_core.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bbm/errors.hpp"
#include "bbm/io.hpp"

namespace bbm::model {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr std::size_t kMinTablePoints = 16;

}  // namespace

std::string to_string(RateFamily family) {
  switch (family) {
    case RateFamily::SinPow: return "sinpow";
    case RateFamily::PowClamp: return "powclamp";
    case RateFamily::Homogeneous: return "homogeneous";
    case RateFamily::Custom: return "custom";
  }
  return "unknown";
}

RateFamily rate_family_from_string(const std::string& name) {
  if (name == "sinpow") return RateFamily::SinPow;
  if (name == "powclamp") return RateFamily::PowClamp;
  if (name == "homogeneous") return RateFamily::Homogeneous;
  if (name == "custom") return RateFamily::Custom;
  throw ConfigError("unknown rate family '" + name + "'");
}

RateTable RateTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rate table '" + path + "'");
  RateTable table;
  table.path = path;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    table.values.push_back(io::parse_double(line.substr(first)));
  }
  table.validate();
  return table;
}

void RateTable::validate() const {
  if (values.size() < kMinTablePoints)
    throw ConfigError("rate table needs at least 16 points, got " + std::to_string(values.size()));
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("rate table value outside [0,1]");
  }
  if (std::abs(values.front() - values.back()) > 1e-12)
    throw ConfigError("rate table is not 2pi-periodic: first and last values differ");
}

void ModelParams::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
  if (validate_theorem_range && !(alpha > 2.0 / 3.0 && alpha < 2.0))
    throw ConfigError("alpha outside the theorem range (2/3, 2)");
  if (rate_family == RateFamily::Custom) {
    if (!table) throw ConfigError("custom rate family requires a table");
    table->validate();
  }
}

double ModelParams::effective_beta() const {
  switch (rate_family) {
    case RateFamily::SinPow: return std::pow(2.0, -alpha);
    case RateFamily::Homogeneous: return 0.0;
    default: return beta;
  }
}

ModelParams make_params(double alpha, double beta, RateFamily family, bool validate_theorem_range) {
  ModelParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.rate_family = family;
  p.validate_theorem_range = validate_theorem_range;
  p.validate();
  return p;
}

double kappa(double alpha) { return 2.0 * alpha / (2.0 + alpha); }

double wrap_angle(double theta) {
  double r = std::remainder(theta, 2.0 * kPi);  // in [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double branching_rate(double theta, const ModelParams& params) {
  const double w = wrap_angle(theta);
  switch (params.rate_family) {
    case RateFamily::SinPow:
      return 1.0 - std::pow(std::abs(std::sin(0.5 * w)), params.alpha);
    case RateFamily::PowClamp:
      return std::max(1.0 - params.beta * std::pow(std::abs(w), params.alpha), 0.0);
    case RateFamily::Homogeneous:
      return 1.0;
    case RateFamily::Custom: {
      const auto& v = params.table->values;
      const double pos = (w + kPi) / (2.0 * kPi) * static_cast<double>(v.size() - 1);
      const auto i = std::min(static_cast<std::size_t>(pos), v.size() - 2);
      const double frac = pos - static_cast<double>(i);
      return std::clamp(v[i] + frac * (v[i + 1] - v[i]), 0.0, 1.0);
    }
  }
  return 0.0;
}

double branching_rate_at(double x, double y, const ModelParams& params) {
  if (x == 0.0 && y == 0.0) return branching_rate(0.0, params);
  return branching_rate(std::atan2(y, x), params);
}

DerivedConstants make_constants(const ModelParams& params, double lambda0) {
  DerivedConstants c;
  c.alpha = params.alpha;
  c.beta = params.effective_beta();
  c.kappa = kappa(params.alpha);
  c.lambda0 = lambda0;
  const double a = params.alpha;
  if (c.beta > 0.0) {
    c.theta1 = lambda0 * std::pow(c.beta, 2.0 / (2.0 + a)) * std::pow(2.0, -2.0 * a / (2.0 + a)) /
               (1.0 - c.kappa);
    c.theta2 = std::pow(2.0 * c.beta, 1.0 / (2.0 + a));
  }
  return c;
}

double theta1_alternative(double alpha, double beta, double lambda0) {
  return lambda0 * ((2.0 + alpha) / (2.0 - alpha)) * std::pow(beta, 2.0 / (2.0 + alpha)) /
         std::pow(2.0, 2.0 * alpha / (2.0 + alpha));
}

double log_coefficient(double alpha) {
  return 3.0 / (2.0 * kSqrt2) - alpha / (2.0 * kSqrt2 * (2.0 + alpha));
}

namespace {

void require_theorem_kappa(const DerivedConstants& c) {
  if (!(c.kappa > 0.5 && c.kappa < 1.0))
    throw DomainError("centering requires kappa in (1/2, 1), i.e. alpha in (2/3, 2)");
}

}  // namespace

double centering_m(double t, const DerivedConstants& consts) {
  if (!(t >= 1.0)) throw DomainError("centering_m requires t >= 1");
  require_theorem_kappa(consts);
  return kSqrt2 * t - consts.theta1 / kSqrt2 * std::pow(t, 1.0 - consts.kappa) -
         log_coefficient(consts.alpha) * std::log(t);
}

double barrier_m_plus(double s, const DerivedConstants& consts) {
  if (!(s >= 1.0)) throw DomainError("barrier_m_plus requires s >= 1");
  require_theorem_kappa(consts);
  return kSqrt2 * s - consts.theta1 / kSqrt2 * std::pow(s, 1.0 - consts.kappa) + 10.0 * std::log(s);
}

double tube_upper(double s, double t, double s0, double eps, const DerivedConstants& consts) {
  if (!(s >= s0 && s <= t)) throw DomainError("tube_upper requires s0 <= s <= t");
  const double slope = centering_m(t, consts) / t;
  return slope * s - std::pow(std::min(s - s0, t - s), 0.5 * (1.0 - eps));
}

double tube_lower(double s, double t, double eps, const DerivedConstants& consts) {
  if (!(s >= 0.0 && s <= t)) throw DomainError("tube_lower requires 0 <= s <= t");
  const double slope = centering_m(t, consts) / t;
  return slope * s - std::pow(s, 0.5 * (1.0 + eps));
}

ConjectureReport conjectured_corrections(const ModelParams& params) {
  ConjectureReport r;
  r.alpha = params.alpha;
  r.beta = params.effective_beta();
  r.alpha2_log_coefficient =
      3.0 / (2.0 * kSqrt2) + (std::sqrt(1.0 + 8.0 * r.beta) - 1.0) / (4.0 * kSqrt2);
  if (params.alpha > 2.0) r.alpha_gt2_log_coefficient = (1.0 + 1.0 / params.alpha) / kSqrt2;
  return r;
}

std::string to_config_text(const ModelParams& params) {
  std::ostringstream out;
  out << "[model]\n";
  out << "alpha = " << io::format_double(params.alpha) << "\n";
  out << "beta = " << io::format_double(params.beta) << "\n";
  out << "rate_family = " << to_string(params.rate_family) << "\n";
  if (params.table && !params.table->path.empty()) out << "table = " << params.table->path << "\n";
  out << "validate_theorem_range = " << (params.validate_theorem_range ? "true" : "false") << "\n";
  return out.str();
}

ModelParams params_from_config_text(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  const auto model = tree.get_child_optional("model");
  if (!model) throw ConfigError("model config lacks a [model] section");
  ModelParams p;
  p.alpha = io::parse_double(model->get<std::string>("alpha", "1"));
  p.beta = io::parse_double(model->get<std::string>("beta", "1"));
  p.rate_family = rate_family_from_string(model->get<std::string>("rate_family", "sinpow"));
  if (auto path = model->get_optional<std::string>("table")) p.table = RateTable::load(*path);
  const auto flag = model->get<std::string>("validate_theorem_range", "false");
  if (flag != "true" && flag != "false") throw ConfigError("validate_theorem_range must be true/false");
  p.validate_theorem_range = flag == "true";
  p.validate();
  return p;
}

}  // namespace bbm::model
