// The operation registry: every public operation of the library, with typed
// parameters, exposed to the CLI and to experiment specs.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bbm/barriers.hpp"
#include "bbm/bbm_sim.hpp"
#include "bbm/errors.hpp"
#include "bbm/galerkin.hpp"
#include "bbm/harness.hpp"
#include "bbm/io.hpp"
#include "bbm/mc_kernel.hpp"
#include "bbm/model_core.hpp"
#include "bbm/numerics.hpp"
#include "bbm/pde_solver.hpp"
#include "bbm/special.hpp"
#include "bbm/spectral.hpp"

namespace bbm::harness {

namespace {

using nlohmann::json;
using io::format_double;

// ---- parameter declarations ------------------------------------------------------

ParamInfo real(std::string name, std::string def, std::string help, std::optional<double> min = std::nullopt,
               bool min_ex = false, std::optional<double> max = std::nullopt, bool max_ex = false) {
  return {std::move(name), ParamType::Real, std::move(def), std::move(help), min, min_ex, max, max_ex, {}};
}
ParamInfo positive(std::string name, std::string def, std::string help) {
  return real(std::move(name), std::move(def), std::move(help), 0.0, true);
}
ParamInfo integer(std::string name, std::string def, std::string help, double min, std::optional<double> max = {}) {
  return {std::move(name), ParamType::Integer, std::move(def), std::move(help), min, false, max, false, {}};
}
ParamInfo list(std::string name, std::string def, std::string help, std::optional<double> min = std::nullopt,
               bool min_ex = false) {
  return {std::move(name), ParamType::RealList, std::move(def), std::move(help), min, min_ex, std::nullopt, false, {}};
}
ParamInfo choice(std::string name, std::string def, std::string help, std::vector<std::string> choices) {
  return {std::move(name), ParamType::String, std::move(def), std::move(help), {}, false, {}, false, std::move(choices)};
}
ParamInfo text(std::string name, std::string def, std::string help) {
  return {std::move(name), ParamType::String, std::move(def), std::move(help), {}, false, {}, false, {}};
}
ParamInfo flag(std::string name, std::string help) {
  return {std::move(name), ParamType::Flag, "false", std::move(help), {}, false, {}, false, {}};
}

std::vector<ParamInfo> model_params(std::string alpha_default = "1") {
  return {positive("alpha", std::move(alpha_default), "exponent alpha of the branching-rate deficit"),
          positive("beta", "1", "small-angle constant beta (PowClamp; SinPow uses 2^-alpha)"),
          choice("family", "sinpow", "branching-rate family", {"sinpow", "powclamp", "homogeneous", "custom"}),
          text("table", "", "rate table file for the custom family"),
          flag("theorem-range", "reject alpha outside (2/3, 2)")};
}

std::vector<ParamInfo> concat(std::vector<ParamInfo> a, const std::vector<ParamInfo>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

model::ModelParams model_from(const Params& p) {
  model::ModelParams m;
  m.alpha = p.real("alpha");
  m.beta = p.real("beta");
  m.rate_family = model::rate_family_from_string(p.str("family"));
  m.validate_theorem_range = p.flag("theorem-range");
  if (m.rate_family == model::RateFamily::Custom) {
    if (p.str("table").empty()) throw ConfigError("the custom family needs --table");
    m.table = model::RateTable::load(p.str("table"));
  }
  m.validate();
  return m;
}

model::DerivedConstants constants_for(const model::ModelParams& m) {
  const auto ground = spectral::solve_spectrum(m.alpha, 1, 1e-10);
  return model::make_constants(m, ground.eigenvalues[0]);
}

json model_json(const model::ModelParams& m) {
  json j = {{"alpha", m.alpha}, {"beta", m.beta}, {"family", model::to_string(m.rate_family)},
            {"effective_beta", m.effective_beta()}};
  if (m.table) j["table"] = m.table->path;
  return j;
}

json constants_json(const model::DerivedConstants& c) {
  return {{"alpha", c.alpha}, {"beta", c.beta},   {"kappa", c.kappa},
          {"lambda0", c.lambda0}, {"theta1", c.theta1}, {"theta2", c.theta2}};
}

json estimate_json(const mc::KernelEstimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n_samples", e.n_samples}, {"step", e.integrator_step}};
}

Check check_le(std::string name, double value, double bound) {
  return {std::move(name), value, "<= " + format_double(bound), value <= bound};
}
Check check_ge(std::string name, double value, double bound) {
  return {std::move(name), value, ">= " + format_double(bound), value >= bound};
}
Check check_true(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, "== 1", ok}; }

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
  return v;
}

mc::SamplerConfig sampler(const Params& p, std::uint64_t seed) {
  mc::SamplerConfig c;
  c.n_samples = p.count("samples");
  c.step = p.real("step");
  c.seed = seed;
  c.workers = p.count("workers");
  return c;
}

std::vector<ParamInfo> sampler_params(std::string samples, std::string step) {
  return {integer("samples", std::move(samples), "number of Monte Carlo paths", 100),
          positive("step", std::move(step), "path integration step"),
          integer("workers", "0", "worker threads (0: hardware concurrency); results do not depend on it", 0)};
}

std::vector<ParamInfo> envelope_params() {
  return {choice("envelope", "none", "error envelope added to the weight", {"none", "plus", "minus"}),
          positive("L", "1", "envelope constant L"), positive("a", "1", "envelope exponent a"),
          positive("b", "1", "envelope exponent b")};
}

mc::WeightSpec weight_from(const Params& p) {
  mc::WeightSpec w;
  w.alpha = p.real("alpha");
  w.beta = p.real("beta");
  const auto& kind = p.str("envelope");
  w.kind = kind == "plus" ? mc::EnvelopeKind::Plus : kind == "minus" ? mc::EnvelopeKind::Minus : mc::EnvelopeKind::None;
  if (w.kind == mc::EnvelopeKind::Minus) {
    w.envelope = mc::make_envelope(p.real("L"), p.real("a"), p.real("b"), w.alpha);
  } else {
    w.envelope.L = p.real("L");
    w.envelope.a = p.real("a");
    w.envelope.b = p.real("b");
  }
  return w;
}

pde::PdeGrid grid_from(const Params& p) {
  pde::PdeGrid g;
  g.h = p.real("dx");
  g.x_max = p.real("x-max");
  g.c_step = p.real("c-step");
  return g;
}

std::vector<ParamInfo> grid_params(std::string h = "0.01", std::string x_max = "15") {
  return {positive("dx", std::move(h), "space step"), positive("x-max", std::move(x_max), "half-width of the domain"),
          positive("c-step", "0.02", "time-step constant: dt <= c / (rho q(t))")};
}

sim::Functional functional_from(const Params& p, const std::string& prefix) {
  sim::Functional f;
  const auto& kind = p.str(prefix);
  if (kind == "zero") f.kind = sim::FunctionalKind::Zero;
  else if (kind == "one") f.kind = sim::FunctionalKind::One;
  else if (kind == "x-above") f.kind = sim::FunctionalKind::XAbove;
  else if (kind == "r-above") f.kind = sim::FunctionalKind::RAbove;
  else f.kind = sim::FunctionalKind::CylinderXAbove;
  f.level = p.real(prefix + "-level");
  f.times = p.reals(prefix + "-times");
  f.levels = p.reals(prefix + "-levels");
  if (f.kind == sim::FunctionalKind::CylinderXAbove && (f.times.empty() || f.times.size() != f.levels.size()))
    throw ConfigError("cylinder functional needs matching --" + prefix + "-times and --" + prefix + "-levels");
  return f;
}

std::vector<ParamInfo> functional_params(const std::string& prefix, std::string def) {
  return {choice(prefix, std::move(def), "path functional", {"zero", "one", "x-above", "r-above", "cylinder"}),
          real(prefix + "-level", "0", "threshold for x-above / r-above"),
          list(prefix + "-times", "", "cylinder times in (0, t)"),
          list(prefix + "-levels", "", "cylinder thresholds on X")};
}

json moment_json(const sim::MomentReport& r) {
  return {{"t", r.t},
          {"simulator_mean", r.simulator_mean},
          {"simulator_stderr", r.simulator_stderr},
          {"formula_mean", r.formula_mean},
          {"formula_stderr", r.formula_stderr},
          {"z", r.z},
          {"n_sim", r.n_sim},
          {"n_mc", r.n_mc},
          {"mc_step", r.mc_step},
          {"any_truncated", r.any_truncated}};
}

std::string stats_csv(const std::vector<std::pair<std::size_t, const sim::RunResult*>>& runs) {
  io::CsvWriter csv({"replicate", "t", "M", "max_X", "argmax_Y", "Z", "barrier_ok", "population"});
  for (const auto& [rep, run] : runs)
    for (const auto& s : run->stats)
      csv.add_row(std::vector<std::string>{std::to_string(rep), format_double(s.t), format_double(s.M),
                                           format_double(s.max_X), format_double(s.argmax_Y), format_double(s.Z),
                                           s.barrier_ok ? "1" : "0", std::to_string(s.population)});
  return csv.str();
}

std::string snapshots_csv(const std::vector<std::pair<std::string, const sim::RunResult*>>& runs,
                          const std::string& first_column) {
  io::CsvWriter csv({first_column, "time", "lineage_id", "x", "y"});
  for (const auto& [label, run] : runs)
    for (const auto& snap : run->snapshots)
      for (const auto& row : snap.rows)
        csv.add_row(std::vector<std::string>{label, format_double(snap.t), row.id.hex(), format_double(row.x),
                                             format_double(row.y)});
  return csv.str();
}

// ---- model_core -----------------------------------------------------------------

OpResult op_rate(const Params& p, std::optional<std::uint64_t>) {
  const auto m = model_from(p);
  OpResult r;
  io::CsvWriter csv({"theta", "b"});
  const std::vector<double> thetas =
      p.str("theta").empty() ? linspace(-std::numbers::pi, std::numbers::pi, p.count("points")) : p.reals("theta");
  double lo = 1.0, hi = 0.0;
  for (double th : thetas) {
    const double b = model::branching_rate(th, m);
    lo = std::min(lo, b);
    hi = std::max(hi, b);
    csv.add_row(std::vector<double>{th, b});
  }
  r.files["rate.csv"] = csv.str();
  r.summary = {{"model", model_json(m)}, {"min_b", lo}, {"max_b", hi}};
  r.checks.push_back(check_ge("min b", lo, 0.0));
  r.checks.push_back(check_le("max b", hi, 1.0));
  return r;
}

OpResult op_constants(const Params& p, std::optional<std::uint64_t>) {
  const auto m = model_from(p);
  const auto c = constants_for(m);
  OpResult r;
  r.summary = {{"model", model_json(m)},
               {"constants", constants_json(c)},
               {"log_coefficient", model::log_coefficient(m.alpha)}};
  // the (2+alpha)/(2-alpha) form only exists below alpha = 2
  if (m.alpha < 2.0) {
    const double alt = model::theta1_alternative(m.alpha, m.effective_beta(), c.lambda0);
    const double rel = c.theta1 == 0.0 ? std::abs(alt) : std::abs(alt - c.theta1) / std::abs(c.theta1);
    r.summary["theta1_alternative"] = alt;
    r.checks.push_back(check_le("theta1 two-formula relative difference", rel, 1e-12));
  }
  r.files["constants.json"] = io::dump_json(r.summary);
  return r;
}

OpResult op_centering(const Params& p, std::optional<std::uint64_t>) {
  const auto m = model_from(p);
  const auto c = constants_for(m);
  OpResult r;
  io::CsvWriter csv({"t", "m"});
  for (double t : p.reals("t")) csv.add_row(std::vector<double>{t, model::centering_m(t, c)});
  r.files["centering.csv"] = csv.str();
  r.summary = {{"model", model_json(m)}, {"constants", constants_json(c)},
               {"log_coefficient", model::log_coefficient(m.alpha)}};
  return r;
}

OpResult op_m_plus(const Params& p, std::optional<std::uint64_t>) {
  const auto m = model_from(p);
  const auto c = constants_for(m);
  OpResult r;
  io::CsvWriter csv({"s", "m_plus", "m", "difference"});
  double min_diff = std::numeric_limits<double>::infinity();
  for (double s : p.reals("s")) {
    const double mp = model::barrier_m_plus(s, c), mm = model::centering_m(s, c);
    if (s > 1.0) min_diff = std::min(min_diff, mp - mm);
    csv.add_row(std::vector<double>{s, mp, mm, mp - mm});
  }
  r.files["m_plus.csv"] = csv.str();
  r.summary = {{"model", model_json(m)}, {"constants", constants_json(c)}};
  if (std::isfinite(min_diff)) r.checks.push_back(check_ge("m_plus - m for s > 1", min_diff, 0.0));
  return r;
}

OpResult op_conjecture(const Params& p, std::optional<std::uint64_t>) {
  const auto m = model_from(p);
  const auto rep = model::conjectured_corrections(m);
  OpResult r;
  r.summary = {{"model", model_json(m)}, {"alpha2_log_coefficient", rep.alpha2_log_coefficient}, {"label", rep.label}};
  r.summary["alpha_gt2_log_coefficient"] =
      rep.alpha_gt2_log_coefficient ? json(*rep.alpha_gt2_log_coefficient) : json(nullptr);
  r.files["conjecture.json"] = io::dump_json(r.summary);
  return r;
}

OpResult op_tube(const Params& p, std::optional<std::uint64_t>) {
  const auto m = model_from(p);
  const auto c = constants_for(m);
  const double t = p.real("t"), s0 = p.real("s0"), eps = p.real("eps");
  if (!(s0 < t)) throw ConfigError("tube needs s0 < t");
  OpResult r;
  io::CsvWriter csv({"s", "lower", "upper"});
  bool ordered = true;
  for (double s : linspace(s0, t, p.count("points"))) {
    const double lo = model::tube_lower(s, t, eps, c), up = model::tube_upper(s, t, s0, eps, c);
    ordered = ordered && lo <= up;
    csv.add_row(std::vector<double>{s, lo, up});
  }
  r.files["tube.csv"] = csv.str();
  r.summary = {{"model", model_json(m)}, {"constants", constants_json(c)}, {"t", t}, {"s0", s0}, {"eps", eps}};
  r.checks.push_back(check_true("lower <= upper", ordered));
  return r;
}

// ---- spectral ---------------------------------------------------------------------

spectral::EigenSystem spectrum_from(const Params& p) {
  spectral::SpectrumOptions o;
  o.q = p.real("q");
  o.h = p.real("dx");
  o.x_max = p.real("x-max");
  return spectral::solve_spectrum(p.real("alpha"), p.count("levels"), p.real("accuracy"), o);
}

std::vector<ParamInfo> spectrum_params(std::string levels) {
  return {positive("alpha", "1", "potential exponent"),
          integer("levels", std::move(levels), "number of eigenvalues", 1, 400),
          positive("accuracy", "1e-8", "absolute eigenvalue accuracy"),
          positive("q", "1", "potential strength"),
          positive("dx", "0.00390625", "base grid step (Richardson uses h/2, h/4)"),
          real("x-max", "0", "domain truncation (0: automatic)", 0.0)};
}

void spectrum_checks(const spectral::EigenSystem& s, OpResult& r) {
  double ortho = 0.0;
  const std::size_t n = std::min<std::size_t>(s.eigenvalues.size(), 8);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      ortho = std::max(ortho, std::abs(spectral::inner_product(s, i, j) - (i == j ? 1.0 : 0.0)));
  bool zeros = true, increasing = s.eigenvalues.front() > 0.0;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    zeros = zeros && spectral::count_sign_changes(s, i) == i;
    if (i) increasing = increasing && s.eigenvalues[i] > s.eigenvalues[i - 1];
  }
  r.checks.push_back(check_le("orthonormality defect (first levels)", ortho, 1e-6));
  r.checks.push_back(check_true("phi_n has n sign changes", zeros));
  r.checks.push_back(check_true("0 < lambda_0 < lambda_1 < ...", increasing));
  double worst = 0.0;
  for (std::size_t i = 0; i < s.error_estimates.size(); ++i) worst = std::max(worst, s.error_estimates[i]);
  r.checks.push_back(check_le("Richardson error estimate", worst, s.accuracy));
}

OpResult op_spectrum(const Params& p, std::optional<std::uint64_t>) {
  const auto s = spectrum_from(p);
  OpResult r;
  r.files["spectrum.csv"] = spectral::to_csv(s);
  r.files["spectrum.json"] = spectral::to_json(s);
  r.summary = {{"alpha", s.alpha}, {"q", s.q}, {"eigenvalues", s.eigenvalues}, {"x_max", s.x_max()}, {"h", s.h}};
  spectrum_checks(s, r);
  return r;
}

OpResult op_rescale(const Params& p, std::optional<std::uint64_t>) {
  const double target = p.real("target-q");
  Params base_params = p;
  base_params.raw()["q"] = "1";
  const auto base = spectrum_from(base_params);
  const auto scaled = spectral::rescale_to_q(base, target);
  OpResult r;
  r.files["rescaled.csv"] = spectral::to_csv(scaled);
  r.files["rescaled.json"] = spectral::to_json(scaled);
  r.summary = {{"alpha", scaled.alpha}, {"q", target}, {"eigenvalues", scaled.eigenvalues}};
  if (p.flag("compare")) {
    Params direct_params = p;
    direct_params.raw()["q"] = p.str("target-q");
    const auto direct = spectrum_from(direct_params);
    double worst = 0.0;
    for (std::size_t i = 0; i < scaled.eigenvalues.size(); ++i)
      worst = std::max(worst, std::abs(scaled.eigenvalues[i] - direct.eigenvalues[i]) / direct.eigenvalues[i]);
    r.summary["direct_eigenvalues"] = direct.eigenvalues;
    r.checks.push_back(check_le("rescaled vs direct solve, relative", worst, 1e-8));
  }
  return r;
}

OpResult op_weyl(const Params& p, std::optional<std::uint64_t>) {
  const auto s = spectrum_from(p);
  const auto w = spectral::weyl_check(s);
  OpResult r;
  io::CsvWriter csv({"n", "lambda", "prediction", "relative_error"});
  for (std::size_t i = 0; i < w.n.size(); ++i)
    csv.add_row(std::vector<double>{static_cast<double>(w.n[i]), s.eigenvalues[w.n[i]],
                                    spectral::weyl_prediction(s.alpha, w.n[i]), w.relative_error[i]});
  r.files["weyl.csv"] = csv.str();
  r.summary = {{"alpha", s.alpha}, {"c_alpha", spectral::weyl_constant(s.alpha)},
               {"decreasing_at_checkpoints", w.decreasing_at_checkpoints}};
  if (s.eigenvalues.size() > 40) r.checks.push_back(check_le("relative error at n = 40", w.error_at(40), 0.02));
  r.checks.push_back(check_true("error decreasing over 10, 20, 40", w.decreasing_at_checkpoints));
  return r;
}

// ---- pde_kernel -------------------------------------------------------------------

pde::QPath q_path_from(const Params& p, double T, double alpha, double rho, json& meta) {
  const auto& kind = p.str("q-path");
  if (kind == "power") return pde::QPath::power(alpha, T);
  if (kind == "constant") return pde::QPath::constant(p.real("q"), T);
  const auto eps = pde::choose_eps(rho, T, alpha);
  meta["eps1"] = eps.eps1;
  meta["eps2"] = eps.eps2;
  auto pair = pde::build_barriers(T, eps.eps1, eps.eps2, alpha);
  return kind == "star" ? pair.q_star : pair.q_upper;
}

OpResult op_pde(const Params& p, std::optional<std::uint64_t>) {
  const double rho = p.real("rho"), alpha = p.real("alpha"), T = p.real("T"), xi = p.real("xi");
  auto grid = grid_from(p);
  grid.potential_scale = p.real("potential-scale");
  const double width = p.real("width") > 0 ? p.real("width") : 2.0 * grid.h;
  const auto xs = pde::space_grid(grid);
  std::vector<double> u0(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j)
    u0[j] = std::exp(-0.5 * std::pow((xs[j] - xi) / width, 2)) / (width * std::sqrt(2.0 * std::numbers::pi));
  json meta;
  const auto q = q_path_from(p, T, alpha, rho, meta);
  std::vector<double> outs = linspace(T / p.count("outputs"), T, p.count("outputs"));
  const auto f = pde::solve_pde(u0, 0.0, rho, alpha, T, grid, &q, outs);
  OpResult r;
  const std::size_t stride = std::max<std::size_t>(1, p.count("stride"));
  io::CsvWriter csv({"t", "x", "u"});
  for (std::size_t i = 0; i < f.time_grid.size(); ++i)
    for (std::size_t j = 0; j < f.space_grid.size(); j += stride)
      csv.add_row(std::vector<double>{f.time_grid[i], f.space_grid[j], f.values[i][j]});
  r.files["field.csv"] = csv.str();
  double max_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < f.mass.size(); ++i) max_increase = std::max(max_increase, f.mass[i] - f.mass[i - 1]);
  r.summary = {{"rho", rho},          {"alpha", alpha}, {"T", T},       {"xi", xi},
               {"width", width},      {"mass", f.mass}, {"steps", f.steps}, {"min_value", f.min_value},
               {"q", f.q_description}, {"barriers", meta}};
  r.files["field.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_ge("min u (positivity)", f.min_value, -1e-12));
  if (f.mass.size() > 1) {
    const double tol = grid.potential_scale == 0.0 ? 1e-10 : 1e-12;
    r.checks.push_back(check_le("largest mass increase between outputs", max_increase, tol));
  }
  return r;
}

OpResult op_barriers(const Params& p, std::optional<std::uint64_t>) {
  const double T = p.real("T"), alpha = p.real("alpha");
  double eps1 = p.real("eps1"), eps2 = p.real("eps2");
  if (eps1 == 0.0 || eps2 == 0.0) {
    const auto e = pde::choose_eps(p.real("rho"), T, alpha);
    if (eps1 == 0.0) eps1 = e.eps1;
    if (eps2 == 0.0) eps2 = e.eps2;
  }
  const auto pair = pde::build_barriers(T, eps1, eps2, alpha);
  OpResult r;
  io::CsvWriter csv({"t", "q_star", "q_true", "q_upper"});
  double worst = 0.0;
  const std::size_t n = p.count("points");
  for (double t : linspace(0.0, T, n)) {
    const double lo = pair.q_star.value(t), truth = std::pow(1.0 - t, -alpha), up = pair.q_upper.value(t);
    worst = std::max({worst, lo - truth, truth - up});
    csv.add_row(std::vector<double>{t, lo, truth, up});
  }
  r.files["barriers.csv"] = csv.str();
  r.summary = {{"T", T},
               {"eps1", eps1},
               {"eps2", eps2},
               {"alpha", alpha},
               {"q_star", pair.q_star.describe()},
               {"q_upper", pair.q_upper.describe()}};
  r.checks.push_back(check_le("sandwich violation q_star <= q <= q_upper", worst, 0.0));
  return r;
}

OpResult op_galerkin(const Params& p, std::optional<std::uint64_t>) {
  const double alpha = p.real("alpha"), rho = p.real("rho"), T = p.real("T");
  const std::size_t N = p.count("modes");
  const auto sys = spectral::solve_spectrum(alpha, N, 1e-8);
  const auto mats = pde::galerkin_matrices(sys, N);
  json meta;
  const auto q = q_path_from(p, T, alpha, rho, meta);
  const auto c0 = pde::initial_coefficients(sys, q.value(0.0), p.real("xi"), N);
  pde::EvolveOptions eo;
  eo.max_step = p.real("max-step");
  const auto path = pde::evolve_coefficients(c0, q, rho, mats, T, eo);
  OpResult r;
  std::vector<std::string> header{"t"};
  for (std::size_t n = 0; n < N; ++n) header.push_back("c_" + std::to_string(n));
  header.push_back("norm");
  io::CsvWriter csv(header);
  const std::size_t stride = std::max<std::size_t>(1, p.count("stride"));
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    if (i % stride != 0 && i + 1 != path.times.size()) continue;
    std::vector<double> row{path.times[i]};
    row.insert(row.end(), path.coefficients[i].begin(), path.coefficients[i].end());
    row.push_back(path.norms[i]);
    csv.add_row(row);
  }
  r.files["coefficients.csv"] = csv.str();
  json A = json::array();
  for (Eigen::Index i = 0; i < mats.A.rows(); ++i) {
    std::vector<double> row(mats.A.cols());
    for (Eigen::Index j = 0; j < mats.A.cols(); ++j) row[j] = mats.A(i, j);
    A.push_back(row);
  }
  r.files["matrices.json"] = io::dump_json({{"lambdas", mats.lambdas}, {"D", mats.D}, {"A", A},
                                            {"antisymmetry_defect", mats.antisymmetry_defect}});
  r.summary = {{"alpha", alpha},
               {"rho", rho},
               {"T", T},
               {"N", N},
               {"q", path.q_description},
               {"barriers", meta},
               {"c0_initial", c0[0]},
               {"c0_final", path.final()[0]},
               {"tail_ratio", path.tail_ratio},
               {"antisymmetry_defect", mats.antisymmetry_defect}};
  r.checks.push_back(check_le("largest norm increase", path.max_norm_increase, 1e-10));
  r.checks.push_back(check_le("quadrature antisymmetry defect", mats.antisymmetry_defect, 1e-5));
  r.checks.push_back(check_le("tail ratio |c_{N-1}|/||c||", path.tail_ratio, 1e-6));
  return r;
}

OpResult op_c0_stability(const Params& p, std::optional<std::uint64_t>) {
  pde::C0StabilityOptions o;
  o.xi = p.real("xi");
  o.N = p.count("modes");
  o.constant_q = p.flag("constant-q");
  const auto rep = pde::check_c0_stability(p.reals("rho"), p.real("T"), p.real("alpha"), o);
  OpResult r;
  io::CsvWriter csv({"rho", "delta", "eps1", "eps2", "c0_initial", "c0_final_lower", "c0_final_upper", "deviation"});
  for (const auto& row : rep.rows)
    csv.add_row(std::vector<double>{row.rho, row.delta, row.eps1, row.eps2, row.c0_initial, row.c0_final_lower,
                                    row.c0_final_upper, row.deviation});
  r.files["c0_stability.csv"] = csv.str();
  r.summary = {{"alpha", rep.alpha}, {"T", rep.T}, {"xi", rep.xi}, {"fitted_exponent", rep.fitted_exponent}};
  if (o.constant_q) {
    double worst = 0.0;
    for (const auto& row : rep.rows) worst = std::max(worst, row.deviation);
    r.checks.push_back(check_le("c0 drift with constant q", worst, 1e-10));
  } else {
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
      if (std::abs(rep.rows[i].rho / rep.rows[i - 1].rho - 2.0) > 1e-12) continue;
      const double ratio = rep.rows[i].deviation / rep.rows[i - 1].deviation;
      r.checks.push_back({"deviation ratio rho=" + format_double(rep.rows[i].rho), ratio, "in [0.3, 0.8]",
                          ratio >= 0.3 && ratio <= 0.8});
    }
  }
  return r;
}

OpResult op_fundamental(const Params& p, std::optional<std::uint64_t>) {
  const double xi = p.real("xi"), T = p.real("T"), rho = p.real("rho"), alpha = p.real("alpha");
  pde::FundamentalOptions o;
  o.grid = grid_from(p);
  o.width_check = p.flag("width-check");
  const auto g = pde::fundamental_solution_g(xi, T, rho, alpha, o);
  const auto ground = spectral::solve_spectrum(alpha, 1, 1e-10);
  const auto pf = pde::product_form_check(g, ground, p.real("x"));
  OpResult r;
  io::CsvWriter csv({"x", "g"});
  const auto& xs = g.field.space_grid;
  const auto& u = g.field.values.back();
  const std::size_t stride = std::max<std::size_t>(1, p.count("stride"));
  for (std::size_t j = 0; j < xs.size(); j += stride) csv.add_row(std::vector<double>{xs[j], u[j]});
  r.files["g.csv"] = csv.str();
  r.summary = {{"xi", xi},
               {"T", T},
               {"rho", rho},
               {"alpha", alpha},
               {"width", g.width},
               {"mass", g.field.mass.back()},
               {"min_value", g.field.min_value},
               {"product_form", {{"x", p.real("x")},
                                 {"lambda0", pf.lambda0},
                                 {"renormalized", pf.renormalized},
                                 {"limit", pf.limit},
                                 {"relative_deviation", pf.relative_deviation}}}};
  if (g.width_halving_change) r.summary["width_halving_change"] = *g.width_halving_change;
  r.checks.push_back(check_le("total mass", g.field.mass.back(), 1.0));
  r.checks.push_back(check_ge("min g (positivity)", g.field.min_value, -1e-12));
  r.checks.push_back(check_le("relative deviation from product form", pf.relative_deviation, 0.05));
  return r;
}

OpResult op_kernel_g(const Params& p, std::optional<std::uint64_t>) {
  const double s = p.real("s"), x = p.real("x"), t = p.real("t"), beta = p.real("beta"), alpha = p.real("alpha");
  const auto grid = grid_from(p);
  OpResult r;
  io::CsvWriter csv({"y", "G", "gaussian"});
  for (double y : p.reals("y")) {
    const double G = pde::kernel_G_from_g(s, x, t, y, beta, alpha, grid);
    const double gauss =
        std::exp(-(y - x) * (y - x) / (2.0 * (t - s))) / std::sqrt(2.0 * std::numbers::pi * (t - s));
    csv.add_row(std::vector<double>{y, G, gauss});
  }
  r.files["kernel_G.csv"] = csv.str();
  r.summary = {{"s", s}, {"x", x}, {"t", t}, {"beta", beta}, {"alpha", alpha},
               {"rho", pde::rho_for_kernel(t, beta, alpha)}};
  return r;
}

// ---- mc_kernel --------------------------------------------------------------------

OpResult op_mass(const Params& p, std::optional<std::uint64_t> seed) {
  const double s = p.real("s"), t = p.real("t"), x = p.real("x");
  const auto w = weight_from(p);
  const auto e = mc::estimate_total_mass(s, t, x, w, sampler(p, *seed));
  OpResult r;
  r.summary = {{"s", s}, {"t", t}, {"x", x}, {"alpha", w.alpha}, {"beta", w.beta}, {"estimate", estimate_json(e)}};
  if (w.beta > 0 && t > s) {
    // two-sided envelope (t/s)^(kappa/4) exp(theta1 (s^(1-kappa) - t^(1-kappa)))
    const double lambda0 = spectral::solve_spectrum(w.alpha, 1, 1e-10).eigenvalues[0];
    const double kappa = model::kappa(w.alpha);
    const double theta1 = lambda0 * std::pow(w.beta, 2.0 / (2.0 + w.alpha)) *
                          std::pow(2.0, -2.0 * w.alpha / (2.0 + w.alpha)) / (1.0 - kappa);
    const double env =
        std::pow(t / s, kappa / 4.0) * std::exp(theta1 * (std::pow(s, 1.0 - kappa) - std::pow(t, 1.0 - kappa)));
    r.summary["envelope"] = env;
    r.summary["envelope_ratio"] = e.value / env;
  }
  r.files["mass.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_ge("value", e.value, 0.0));
  r.checks.push_back(check_le("value", e.value, 1.0));
  return r;
}

OpResult op_gtilde(const Params& p, std::optional<std::uint64_t> seed) {
  const double s = p.real("s"), x = p.real("x"), t = p.real("t"), y = p.real("y");
  const auto w = weight_from(p);
  const auto e = mc::estimate_Gtilde(s, x, t, y, w, sampler(p, *seed));
  OpResult r;
  r.summary = {{"s", s}, {"x", x}, {"t", t}, {"y", y}, {"alpha", w.alpha}, {"beta", w.beta},
               {"estimate", estimate_json(e)}};
  if (p.flag("compare-pde")) {
    const double G = pde::kernel_G_from_g(s, x, t, y, w.beta, w.alpha);
    const double z = (e.value - G) / e.std_error;
    r.summary["pde"] = G;
    r.summary["z"] = z;
    r.checks.push_back(check_le("|z| against the PDE kernel", std::abs(z), 3.0));
  }
  r.files["gtilde.json"] = io::dump_json(r.summary);
  return r;
}

OpResult op_localization(const Params& p, std::optional<std::uint64_t> seed) {
  const double s = p.real("s"), x = p.real("x"), t = p.real("t"), y = p.real("y");
  const auto w = weight_from(p);
  const auto res = mc::localization_probe(s, t, x, y, p.real("eta"), w, sampler(p, *seed));
  OpResult r;
  r.summary = {{"s", s},
               {"x", x},
               {"t", t},
               {"y", y},
               {"eta", p.real("eta")},
               {"restricted", estimate_json(res.restricted)},
               {"unrestricted", estimate_json(res.unrestricted)},
               {"ratio", res.ratio}};
  r.files["localization.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_le("ratio", res.ratio, 1.0));
  return r;
}

OpResult op_alpha2(const Params& p, std::optional<std::uint64_t> seed) {
  const double beta = p.real("beta"), t = p.real("t");
  std::vector<double> s_list = p.reals("s");
  if (s_list.empty()) {
    for (double v = 1.0; v <= 5.01; v += 0.5) s_list.push_back(t * std::exp(-v));
  }
  const auto fit = mc::alpha2_exponent_fit(beta, s_list, t, sampler(p, *seed));
  OpResult r;
  io::CsvWriter csv({"s_over_t", "value", "std_error"});
  for (std::size_t i = 0; i < fit.ratios.size(); ++i)
    csv.add_row(std::vector<double>{fit.ratios[i], fit.estimates[i].value, fit.estimates[i].std_error});
  r.files["alpha2.csv"] = csv.str();
  r.summary = {{"beta", beta},
               {"t", t},
               {"slope", fit.slope},
               {"slope_stderr", fit.slope_stderr},
               {"ci", {fit.ci_low, fit.ci_high}},
               {"expected", fit.expected},
               {"r_squared", fit.r_squared},
               {"accuracy_warning", fit.accuracy_warning}};
  r.files["alpha2.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_ge("fit r^2", fit.r_squared, 0.99));
  return r;
}

OpResult op_bridge(const Params& p, std::optional<std::uint64_t> seed) {
  const double s = p.real("s"), x = p.real("x"), t = p.real("t"), y = p.real("y"), K = p.real("K");
  const double exact = mc::bridge_barrier_probability(s, x, t, y, K);
  const auto e = mc::bridge_barrier_mc(s, x, t, y, K, sampler(p, *seed));
  const double z = e.std_error > 0 ? (e.value - exact) / e.std_error : 0.0;
  OpResult r;
  r.summary = {{"s", s}, {"x", x}, {"t", t}, {"y", y}, {"K", K}, {"exact", exact}, {"estimate", estimate_json(e)},
               {"z", z}};
  r.files["bridge.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_le("|z| against the closed form", std::abs(z), 3.0));
  return r;
}

OpResult op_envelope(const Params& p, std::optional<std::uint64_t>) {
  const double L = p.real("L"), a = p.real("a"), b = p.real("b"), alpha = p.real("alpha");
  const std::size_t grid = p.count("grid");
  const auto env = mc::make_envelope(L, a, b, alpha, grid);
  const bool at = mc::envelope_monotone(L, a, b, alpha, env.eta, grid);
  const bool above = env.eta >= 0.5 ? false : mc::envelope_monotone(L, a, b, alpha, std::min(0.5, 1.05 * env.eta), grid);
  OpResult r;
  r.summary = {{"L", L}, {"a", a}, {"b", b}, {"alpha", alpha}, {"eta", env.eta}, {"r0", env.r0()},
               {"monotone_at_eta", at}, {"monotone_at_1.05_eta", above}};
  r.files["envelope.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_true("monotone at eta", at));
  if (env.eta < 0.5 / 1.05) r.checks.push_back(check_true("not monotone at 1.05 eta", !above));
  return r;
}

OpResult op_bessel(const Params& p, std::optional<std::uint64_t>) {
  const double r0 = p.real("r0"), s = p.real("s");
  const double z_max = p.real("z-max") > 0 ? p.real("z-max") : r0 + 12.0 * std::sqrt(s);
  const std::size_t n = p.count("points") | 1;  // odd for Simpson
  OpResult r;
  io::CsvWriter csv({"z", "density", "upper"});
  std::vector<double> dens;
  bool dominated = true;
  for (double z : linspace(0.0, z_max, n)) {
    const double d = special::bessel_density(r0, s, z), u = special::bessel_density_upper(r0, s, z);
    dominated = dominated && d <= u * (1.0 + 1e-14);
    dens.push_back(d);
    csv.add_row(std::vector<double>{z, d, u});
  }
  const double mass = num::simpson(dens, z_max / (n - 1));
  r.files["bessel.csv"] = csv.str();
  r.summary = {{"r0", r0}, {"s", s}, {"z_max", z_max}, {"integral", mass}};
  r.checks.push_back(check_le("|integral - 1|", std::abs(mass - 1.0), 1e-8));
  r.checks.push_back(check_true("density <= upper bound", dominated));
  return r;
}

// ---- bbm_sim ----------------------------------------------------------------------

OpResult op_simulate(const Params& p, std::optional<std::uint64_t> seed) {
  const auto m = model_from(p);
  const auto c = constants_for(m);
  const double t = p.real("t");
  sim::RunOptions o;
  o.snapshot_times = p.reals("snapshots");
  std::sort(o.snapshot_times.begin(), o.snapshot_times.end());
  o.cap = p.count("cap");
  o.s0 = p.real("s0");
  o.record_positions = p.flag("positions");
  o.record_splits = p.flag("splits");
  const std::size_t reps = p.count("replicates");
  std::vector<sim::RunResult> runs;
  for (std::size_t i = 0; i < reps; ++i)
    runs.push_back(sim::run_continuous(m, c, t, reps == 1 ? *seed : rng::derive_seed(*seed, i), o));
  OpResult r;
  std::vector<std::pair<std::size_t, const sim::RunResult*>> labelled;
  std::vector<std::pair<std::string, const sim::RunResult*>> named;
  for (std::size_t i = 0; i < reps; ++i) {
    labelled.emplace_back(i, &runs[i]);
    named.emplace_back(std::to_string(i), &runs[i]);
  }
  r.files["stats.csv"] = stats_csv(labelled);
  if (o.record_positions) r.files["snapshots.csv"] = snapshots_csv(named, "replicate");
  if (o.record_splits) {
    io::CsvWriter csv({"replicate", "lineage_id", "time", "theta"});
    for (std::size_t i = 0; i < reps; ++i)
      for (const auto& s : runs[i].splits)
        csv.add_row(std::vector<std::string>{std::to_string(i), s.id.hex(), format_double(s.time),
                                             format_double(s.theta)});
    r.files["splits.csv"] = csv.str();
  }
  json reps_json = json::array();
  bool gaps_ok = true, z_ok = true;
  for (const auto& run : runs) {
    reps_json.push_back({{"truncated", run.truncated},
                         {"halt_time", run.halt_time},
                         {"population", run.final_particles.size()},
                         {"proposals", run.proposals},
                         {"splits", run.splits_count}});
    for (const auto& s : run.stats) {
      if (s.max_X >= 0 && s.M < s.max_X) gaps_ok = false;
      if (s.barrier_ok && !(s.Z >= 0 && std::isfinite(s.Z))) z_ok = false;
    }
  }
  r.summary = {{"model", model_json(m)}, {"constants", constants_json(c)}, {"t", t}, {"cap", o.cap},
               {"replicates", reps_json}};
  r.files["run.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_true("M_t >= max_X", gaps_ok));
  r.checks.push_back(check_true("Z_t finite and >= 0 when barrier_ok", z_ok));
  return r;
}

OpResult op_couple(const Params& p, std::optional<std::uint64_t> seed) {
  auto shared = model_from(p);
  const auto alphas = p.reals("alphas");
  const auto res = sim::run_coupled(alphas, shared, p.real("t"), *seed, p.reals("snapshots"), p.flag("homogeneous"),
                                    p.count("cap"));
  OpResult r;
  io::CsvWriter sizes({"alpha", "t", "population", "truncated"});
  std::vector<std::pair<std::string, const sim::RunResult*>> named;
  for (const auto& m : res.members) {
    const std::string label = std::isinf(m.alpha) ? "inf" : format_double(m.alpha);
    named.emplace_back(label, &m.run);
    for (const auto& snap : m.run.snapshots)
      sizes.add_row(std::vector<std::string>{label, format_double(snap.t), std::to_string(snap.rows.size()),
                                             m.run.truncated ? "1" : "0"});
  }
  r.files["sizes.csv"] = sizes.str();
  if (p.flag("positions")) r.files["snapshots.csv"] = snapshots_csv(named, "alpha");
  r.summary = {{"alphas", alphas}, {"t", p.real("t")}, {"homogeneous", p.flag("homogeneous")},
               {"inclusion_chain", res.inclusion_chain}, {"violations", res.violations}};
  r.files["couple.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_true("lineage sets nested at every snapshot", res.inclusion_chain));
  return r;
}

OpResult op_discrete(const Params& p, std::optional<std::uint64_t> seed) {
  const auto m = model_from(p);
  const std::size_t n = p.count("n");
  const auto res = sim::run_discrete(m, n, *seed, p.count("cap"), p.count("bins"));
  OpResult r;
  io::CsvWriter sizes({"n", "population"});
  for (std::size_t i = 0; i < res.sizes.size(); ++i)
    sizes.add_row(std::vector<double>{static_cast<double>(i), static_cast<double>(res.sizes[i])});
  r.files["sizes.csv"] = sizes.str();
  io::CsvWriter bins({"theta_lo", "theta_hi", "trials", "doubles", "expected", "ci_low", "ci_high", "inside"});
  constexpr double z99 = 2.5758293035489004;
  std::size_t outside = 0, total = 0;
  for (const auto& b : res.bins) {
    const double half = z99 * std::sqrt(b.sum_b_var);
    const double lo = b.sum_b - half, hi = b.sum_b + half;
    const auto d = static_cast<double>(b.doubles);
    const bool inside = b.trials == 0 || (b.sum_b_var == 0.0 ? std::abs(d - b.sum_b) < 0.5 : d >= lo && d <= hi);
    outside += inside ? 0 : 1;
    total += b.trials;
    bins.add_row(std::vector<double>{b.theta_lo, b.theta_hi, static_cast<double>(b.trials), d, b.sum_b, lo, hi,
                                     inside ? 1.0 : 0.0});
  }
  r.files["bins.csv"] = bins.str();
  if (p.flag("positions")) {
    io::CsvWriter pos({"lineage_id", "x", "y"});
    for (const auto& q : res.particles)
      pos.add_row(std::vector<std::string>{q.id.hex(), std::to_string(q.x), std::to_string(q.y)});
    r.files["particles.csv"] = pos.str();
  }
  r.summary = {{"model", model_json(m)}, {"n", n}, {"truncated", res.truncated},
               {"halt_generation", res.halt_generation}, {"trials", total}, {"bins_outside_ci", outside}};
  r.files["discrete.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_le("theta bins outside the 99% binomial interval", static_cast<double>(outside), 0.0));
  if (m.rate_family == model::RateFamily::Homogeneous && !res.truncated)
    r.checks.push_back(check_true("|N(n)| = 2^n", res.sizes.back() == (std::size_t{1} << n)));
  return r;
}

sim::MomentOptions moment_options(const Params& p, std::uint64_t seed) {
  sim::MomentOptions o;
  o.n_sim = p.count("n-sim");
  o.n_mc = p.count("n-mc");
  o.mc_step = p.real("mc-step");
  o.cap = p.count("cap");
  o.seed = seed;
  return o;
}

std::vector<ParamInfo> moment_params(std::string n_sim, std::string n_mc) {
  return {integer("n-sim", std::move(n_sim), "simulator replicates", 2),
          integer("n-mc", std::move(n_mc), "Monte Carlo spine paths", 2),
          positive("mc-step", "0.002", "time step of the spine paths"),
          integer("cap", "2000000", "population cap per replicate", 1)};
}

OpResult op_mto1(const Params& p, std::optional<std::uint64_t> seed) {
  const auto m = model_from(p);
  const auto rep = sim::many_to_one_check(m, p.real("t"), functional_from(p, "f"), moment_options(p, *seed));
  OpResult r;
  r.summary = {{"model", model_json(m)}, {"f", p.str("f")}, {"report", moment_json(rep)}};
  r.files["many_to_one.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_le("|z|", std::abs(rep.z), 3.0));
  return r;
}

OpResult op_mto2(const Params& p, std::optional<std::uint64_t> seed) {
  const auto m = model_from(p);
  const auto rep = sim::many_to_two_check(m, p.real("t"), functional_from(p, "f"), functional_from(p, "g"),
                                          moment_options(p, *seed));
  OpResult r;
  r.summary = {{"model", model_json(m)}, {"f", p.str("f")}, {"g", p.str("g")}, {"report", moment_json(rep)}};
  r.files["many_to_two.json"] = io::dump_json(r.summary);
  r.checks.push_back(check_le("|z|", std::abs(rep.z), 3.0));
  return r;
}

OpResult op_porism(const Params& p, std::optional<std::uint64_t> seed) {
  const auto m = model_from(p);
  const auto c = constants_for(m);
  const auto ts = p.reals("t");
  const auto rep = sim::porism_probe(m, c, ts, p.count("replicates"), *seed, p.real("eps"), p.count("cap"));
  OpResult r;
  io::CsvWriter csv({"t", "replicates", "y_q10", "y_q25", "y_q50", "y_q75", "y_q90", "gap_q10", "gap_q25", "gap_q50",
                     "gap_q75", "gap_q90", "exceedance", "median_M_minus_m", "min_gap", "truncated"});
  bool gap_ok = true;
  for (const auto& row : rep.rows) {
    std::vector<double> v{row.t, static_cast<double>(row.replicates)};
    v.insert(v.end(), row.y_ratio_quantiles.begin(), row.y_ratio_quantiles.end());
    v.insert(v.end(), row.gap_quantiles.begin(), row.gap_quantiles.end());
    v.insert(v.end(), {row.exceedance, row.median_M_minus_m, row.min_gap, static_cast<double>(row.truncated)});
    csv.add_row(v);
    gap_ok = gap_ok && row.min_gap >= 0.0;
  }
  r.files["porism.csv"] = csv.str();
  io::CsvWriter reps({"replicate", "t", "M", "max_X", "argmax_Y", "m", "population"});
  for (std::size_t i = 0; i < rep.replicate_stats.size(); ++i)
    for (const auto& s : rep.replicate_stats[i])
      reps.add_row(std::vector<double>{static_cast<double>(i), s.t, s.M, s.max_X, s.argmax_Y,
                                       s.t >= 1.0 ? model::centering_m(s.t, c) : std::nan(""),
                                       static_cast<double>(s.population)});
  r.files["replicates.csv"] = reps.str();
  r.summary = {{"model", model_json(m)}, {"constants", constants_json(c)}, {"eps", rep.eps}};
  r.checks.push_back(check_true("M_t - max_X >= 0 in every replicate", gap_ok));
  return r;
}

std::vector<OperationInfo> build_registry() {
  std::vector<OperationInfo> ops;
  auto add = [&](std::string name, std::string module, std::string anchor, std::string help,
                 std::vector<std::string> functions, bool stochastic, std::vector<ParamInfo> params, auto fn) {
    ops.push_back({std::move(name), std::move(module), std::move(anchor), std::move(help), std::move(functions),
                   stochastic, std::move(params), fn});
  };

  // model_core
  add("rate", "model_core", "branching rate b(theta)", "evaluate the branching rate on a theta grid",
      {"branching_rate", "wrap_angle"}, false,
      concat(model_params(), {list("theta", "", "angles (radians); empty: uniform grid on [-pi, pi]"),
                              integer("points", "65", "grid size when --theta is empty", 2)}),
      op_rate);
  add("constants", "model_core", "constants kappa, theta1, theta2 and lambda0",
      "derived constants of the model (lambda0 from the spectral solver)",
      {"make_constants", "theta1_alternative", "log_coefficient"}, false, model_params(), op_constants);
  add("centering", "model_core", "centering m(t)", "evaluate m(t) at the given times", {"centering_m"}, false,
      concat(model_params(), {list("t", "1,10,100,1000", "times (>= 1)", 1.0)}), op_centering);
  add("m-plus", "model_core", "upper barrier m+(s)", "evaluate m+(s) and compare with m(s)",
      {"barrier_m_plus", "centering_m"}, false,
      concat(model_params(), {list("s", "1,10,100", "times (>= 1)", 1.0)}), op_m_plus);
  add("conjecture", "model_core", "conjectured log corrections for alpha = 2 and alpha > 2",
      "print the conjectured logarithmic coefficients (labelled conjecture)", {"conjectured_corrections"}, false,
      model_params("2"), op_conjecture);
  add("tube", "model_core", "tube curves for X between s0 and t", "evaluate the lower/upper tube curves",
      {"tube_lower", "tube_upper"}, false,
      concat(model_params(), {positive("t", "100", "horizon"), positive("s0", "2", "start of the window"),
                              positive("eps", "0.1", "tube exponent slack"),
                              integer("points", "101", "number of s values", 2)}),
      op_tube);

  // spectral
  add("spectrum", "spectral", "eigenvalues and eigenfunctions of -f'' + q|x|^alpha f",
      "solve the Sturm-Liouville problem and export (CSV + JSON)", {"solve_spectrum", "to_csv", "to_json"}, false,
      spectrum_params("5"), op_spectrum);
  add("rescale", "spectral", "scaling law lambda_{q,n} = q^(2/(2+alpha)) lambda_n",
      "rescale a q = 1 solve to another q (optionally compare with a direct solve)", {"rescale_to_q"}, false,
      concat(spectrum_params("5"), {positive("target-q", "5", "target potential strength"),
                                    flag("compare", "also solve directly at the target q")}),
      op_rescale);
  add("weyl", "spectral", "Weyl asymptotics lambda_n ~ (n/c_alpha)^(2alpha/(alpha+2))",
      "relative error of the Weyl law over the computed levels", {"weyl_constant", "weyl_prediction", "weyl_check"},
      false,
      [] {
        auto ps = spectrum_params("41");
        for (auto& q : ps)
          if (q.name == "accuracy") q.default_value = "1e-6";
        return ps;
      }(),
      op_weyl);

  // pde_kernel
  const std::vector<ParamInfo> q_choice{
      choice("q-path", "power", "potential strength path", {"power", "star", "upper", "constant"}),
      positive("q", "1", "value for --q-path constant")};
  add("pde", "pde_kernel", "time-singular PDE u_t = rho (u_xx - q(t)|x|^alpha u)",
      "evolve a Gaussian initial density and export the field", {"solve_pde", "space_grid"}, false,
      concat(concat({positive("rho", "100", "diffusion scale rho"), positive("alpha", "1", "potential exponent"),
                     real("T", "0.5", "final time", 0.0, true, 1.0, true), real("xi", "0", "centre of the initial density"),
                     real("width", "0", "initial Gaussian width (0: two space steps)", 0.0),
                     real("potential-scale", "1", "multiplier of the killing term (0: heat equation)", 0.0),
                     integer("outputs", "5", "number of output times", 1),
                     integer("stride", "10", "export every k-th grid point", 1)},
                    grid_params()),
             q_choice),
      op_pde);
  add("barriers", "pde_kernel", "lower/upper barriers q_* <= (1-t)^-alpha <= q^*",
      "build the barrier pair and tabulate it", {"build_barriers", "choose_eps", "QPath"}, false,
      {real("T", "0.5", "final time", 0.0, true, 1.0, true), positive("alpha", "1", "potential exponent"),
       real("eps1", "0", "first smoothing width (0: default choice from rho)", 0.0),
       real("eps2", "0", "second smoothing width (0: default choice from rho)", 0.0),
       positive("rho", "100", "rho used by the default eps choice"),
       integer("points", "10001", "grid size for the sandwich check", 2)},
      op_barriers);
  add("galerkin", "pde_kernel", "Galerkin coefficients c' = (-D(t) + A(t)) c",
      "evolve the spectral coefficients along a q path", {"galerkin_matrices", "initial_coefficients",
                                                          "evolve_coefficients"},
      false,
      concat({positive("alpha", "1", "potential exponent"), integer("modes", "24", "number of modes N", 1, 200),
              positive("rho", "100", "rho"), real("T", "0.4", "final time", 0.0, true, 1.0, true),
              real("xi", "0", "starting point"), positive("max-step", "0.001", "largest time step"),
              integer("stride", "10", "export every k-th step", 1)},
             q_choice),
      op_galerkin);
  add("c0-stability", "pde_kernel", "stability of the ground coefficient c_0 under the barriers",
      "|c0(T) - c0(0)| for each rho with both barriers", {"check_c0_stability"}, false,
      {list("rho", "100,200,400,800", "rho values", 0.0, true), real("T", "0.5", "final time", 0.0, true, 1.0, true),
       positive("alpha", "1", "potential exponent"), real("xi", "0", "starting point"),
       integer("modes", "24", "number of modes N", 1, 200), flag("constant-q", "replace both barriers by q = 1")},
      op_c0_stability);
  add("fundamental", "pde_kernel", "fundamental solution g(0, xi; T, x) and its product-form limit",
      "approximate g from a narrow Gaussian and compare with the ground-state product form",
      {"fundamental_solution_g", "product_form_check"}, false,
      concat({real("xi", "0", "starting point"), real("T", "0.5", "final time", 0.0, true, 1.0, true),
              positive("rho", "200", "rho"), positive("alpha", "1", "potential exponent"),
              real("x", "0", "evaluation point for the product-form comparison"),
              flag("width-check", "also run with half the Gaussian width"),
              integer("stride", "10", "export every k-th grid point", 1)},
             grid_params()),
      op_fundamental);
  add("kernel-g", "pde_kernel", "kernel G(s, x; t, y) through the rescaled g",
      "evaluate G via the change of variables to g", {"kernel_G_from_g", "rho_for_kernel"}, false,
      concat({positive("s", "4", "start time"), real("x", "0", "start point"), positive("t", "16", "end time"),
              list("y", "0,0.5,1", "end points"), positive("beta", "1", "beta"),
              positive("alpha", "1", "potential exponent")},
             grid_params()),
      op_kernel_g);

  // mc_kernel
  add("mass", "mc_kernel", "total mass E[exp(-beta int |B_r/(sqrt2 r)|^alpha (1+f) dr)]",
      "forward-path Monte Carlo of the total mass", {"estimate_total_mass"}, true,
      concat(concat({positive("s", "16", "start time"), positive("t", "64", "end time"), real("x", "0", "start point"),
                     positive("alpha", "1", "exponent"), real("beta", "1", "beta", 0.0)},
                    envelope_params()),
             sampler_params("10000", "0.1")),
      op_mass);
  add("gtilde", "mc_kernel", "weighted kernel G~(s, x; t, y)", "Brownian-bridge Monte Carlo of G~",
      {"estimate_Gtilde"}, true,
      concat(concat({positive("s", "4", "start time"), real("x", "0", "start point"), positive("t", "16", "end time"),
                     real("y", "0.5", "end point"), positive("alpha", "1", "exponent"), real("beta", "1", "beta", 0.0),
                     flag("compare-pde", "also evaluate G through the PDE and report the z-score")},
                    envelope_params()),
             sampler_params("10000", "0.04")),
      op_gtilde);
  add("localization", "mc_kernel", "weighted mass of paths leaving the tube |B_r| < r^((kappa+eta)/2)",
      "restricted vs unrestricted G~", {"localization_probe"}, true,
      concat(concat({positive("s", "4", "start time"), real("x", "0", "start point"), positive("t", "16", "end time"),
                     real("y", "0", "end point"), positive("eta", "0.5", "tube exponent excess"),
                     positive("alpha", "1", "exponent"), real("beta", "1", "beta", 0.0)},
                    envelope_params()),
             sampler_params("10000", "0.04")),
      op_localization);
  add("alpha2", "mc_kernel", "alpha = 2 decay exponent (sqrt(1+8 beta) - 1)/4",
      "fit the power-law exponent of E[exp(-beta int (Y_r/r)^2 dr)]", {"alpha2_exponent_fit"}, true,
      concat({real("beta", "1", "beta", 0.0), positive("t", "1", "end time"),
              list("s", "", "start times (empty: t e^-v for v = 1, 1.5, ..., 5)", 0.0, true)},
             sampler_params("20000", "0.01")),
      op_alpha2);
  add("bridge", "mc_kernel", "Brownian bridge barrier probability exp(-2(K-x)(K-y)/(t-s))",
      "closed form and Monte Carlo of the bridge crossing probability",
      {"bridge_barrier_probability", "bridge_barrier_mc"}, true,
      concat({real("s", "0", "start time", 0.0), real("x", "0", "start point"), positive("t", "1", "end time"),
              real("y", "0", "end point"), real("K", "1", "barrier level")},
             sampler_params("100000", "0.001")),
      op_bridge);
  add("envelope", "mc_kernel", "error envelopes f+ and f- with the largest admissible eta",
      "find eta by bisection and verify monotonicity", {"make_envelope", "envelope_monotone"}, false,
      {positive("L", "1", "envelope constant L"), positive("a", "1", "exponent a"), positive("b", "1", "exponent b"),
       positive("alpha", "1", "exponent alpha"), integer("grid", "1000", "monotonicity grid size", 10)},
      op_envelope);
  add("bessel", "mc_kernel", "2D Bessel transition density (z/s) exp(-(r0^2+z^2)/(2s)) I0(r0 z/s)",
      "tabulate the density and its upper bound", {"bessel_density", "bessel_density_upper", "log_bessel_i0"},
      false,
      {real("r0", "1", "starting radius", 0.0), positive("s", "1", "elapsed time"),
       real("z-max", "0", "largest z (0: r0 + 12 sqrt(s))", 0.0), integer("points", "4001", "grid size", 3)},
      op_bessel);

  // bbm_sim
  const std::vector<ParamInfo> cap{integer("cap", "2000000", "population cap (halt and flag)", 1)};
  add("simulate", "bbm_sim", "BBM with angle-dependent branching: M_t, max X, argmax Y, Z_t",
      "exact continuous-time simulation by thinning", {"run_continuous", "extremal_stats", "rate_at"}, true,
      concat(concat(model_params(),
                    {positive("t", "8", "horizon"), list("snapshots", "", "snapshot times (t is always added)", 0.0, true),
                     positive("s0", "1", "start of the barrier window"),
                     integer("replicates", "1", "independent replicates", 1),
                     flag("positions", "export every particle at each snapshot"),
                     flag("splits", "export the split events")}),
             cap),
      op_simulate);
  add("couple", "bbm_sim", "coupling across alpha (nested lineage sets)",
      "coupled SinPow runs with shared lineage randomness", {"run_coupled"}, true,
      concat(concat(model_params(), {list("alphas", "0.5,1,2,4", "ascending alphas", 0.0, true),
                                     positive("t", "10", "horizon"),
                                     list("snapshots", "2,4,6,8", "snapshot times", 0.0, true),
                                     flag("homogeneous", "append the homogeneous process (alpha = infinity)"),
                                     flag("positions", "export the snapshot positions")}),
             cap),
      op_couple);
  add("discrete", "bbm_sim", "discrete-time lattice model on Z^2", "synchronous generations on the lattice",
      {"run_discrete"}, true,
      concat(concat(model_params(), {integer("n", "12", "number of generations", 1, 62),
                                     integer("bins", "16", "theta bins for the offspring check", 1),
                                     flag("positions", "export the final particles")}),
             cap),
      op_discrete);
  add("mto1", "bbm_sim", "many-to-one identity", "simulator vs spine formula for sum_u F(path_u)",
      {"many_to_one_check"}, true,
      concat(concat(concat(model_params(), {positive("t", "2", "horizon")}), functional_params("f", "x-above")),
             moment_params("2000", "100000")),
      op_mto1);
  add("mto2", "bbm_sim", "many-to-two identity", "simulator vs two-spine formula for sum_{u != v} F(u) G(v)",
      {"many_to_two_check"}, true,
      concat(concat(concat(concat(model_params(), {positive("t", "1.5", "horizon")}), functional_params("f", "one")),
                    functional_params("g", "one")),
             moment_params("4000", "50000")),
      op_mto2);
  add("porism", "bbm_sim", "localization of the maximiser: |Y_argmax| / t^(kappa/2) and M_t - max X",
      "replicated extremes at several horizons", {"porism_probe"}, true,
      concat(concat(model_params(), {list("t", "8,12,16", "horizons", 0.0, true),
                                     integer("replicates", "200", "replicates", 1),
                                     positive("eps", "0.25", "exceedance exponent slack")}),
             cap),
      op_porism);
  return ops;
}

}  // namespace

const std::vector<OperationInfo>& operations() {
  static const std::vector<OperationInfo> registry = build_registry();
  return registry;
}

}  // namespace bbm::harness
