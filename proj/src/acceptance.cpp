#include "bbm/acceptance.hpp"

#include <boost/math/special_functions/airy.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "bbm/barriers.hpp"
#include "bbm/bbm_sim.hpp"
#include "bbm/cli.hpp"
#include "bbm/galerkin.hpp"
#include "bbm/harness.hpp"
#include "bbm/io.hpp"
#include "bbm/mc_kernel.hpp"
#include "bbm/model_core.hpp"
#include "bbm/numerics.hpp"
#include "bbm/pde_solver.hpp"
#include "bbm/spectral.hpp"

namespace bbm::acceptance {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok) { pass = pass && ok; }
  template <class T>
  Outcome& operator<<(const T& v) {
    detail << v;
    return *this;
  }
};

/// lambda_n for alpha = 1: even levels solve Ai'(-lambda) = 0, odd levels Ai(-lambda) = 0.
double airy_level(std::size_t n) {
  using boost::math::airy_ai_zero;
  const std::size_t k = n / 2 + 1;
  if (n % 2 == 1) return -airy_ai_zero<double>(static_cast<int>(k));
  // Ai' has exactly one zero between consecutive zeros of Ai, and one in (a_1, 0).
  const double lo = k == 1 ? 0.0 : -airy_ai_zero<double>(static_cast<int>(k - 1));
  const double hi = -airy_ai_zero<double>(static_cast<int>(k));
  auto f = [](double lam) { return boost::math::airy_ai_prime(-lam); };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

// ---- criteria --------------------------------------------------------------------

Outcome c01_spectral_golden() {
  Outcome o;
  const auto s2 = spectral::solve_spectrum(2.0, 3, 1e-8);
  double e2 = 0.0;
  for (std::size_t n = 0; n < 3; ++n) e2 = std::max(e2, std::abs(s2.eigenvalues[n] - (2.0 * n + 1.0)));
  const auto s1 = spectral::solve_spectrum(1.0, 3, 1e-8);
  double e1 = 0.0;
  for (std::size_t n = 0; n < 3; ++n) e1 = std::max(e1, std::abs(s1.eigenvalues[n] - airy_level(n)));
  o.require(e2 <= 1e-6 && e1 <= 1e-5);
  o << "alpha=2 max|err|=" << fmt(e2, 3) << " (<=1e-6), alpha=1 vs Airy zeros max|err|=" << fmt(e1, 3)
    << " (<=1e-5)";
  return o;
}

Outcome c02_weyl() {
  Outcome o;
  for (double a : {0.8, 1.0, 1.5}) {
    const auto s = spectral::solve_spectrum(a, 41, 1e-6);
    const auto w = spectral::weyl_check(s);
    const double e40 = w.error_at(40);
    o.require(e40 < 0.02 && w.decreasing_at_checkpoints);
    o << "a=" << fmt(a, 2) << ": " << fmt(w.error_at(10), 3) << ">" << fmt(w.error_at(20), 3) << ">" << fmt(e40, 3)
      << (a < 1.5 ? "; " : "");
  }
  o << " (n=40 < 2%, decreasing)";
  return o;
}

Outcome c03_scaling() {
  Outcome o;
  const auto base = spectral::solve_spectrum(1.0, 5, 1e-8);
  double worst = 0.0;
  for (double q : {0.5, 5.0}) {
    const auto r = spectral::rescale_to_q(base, q);
    spectral::SpectrumOptions opt;
    opt.q = q;
    const auto d = spectral::solve_spectrum(1.0, 5, 1e-8, opt);
    for (std::size_t n = 0; n < 5; ++n)
      worst = std::max(worst, std::abs(r.eigenvalues[n] - d.eigenvalues[n]) / d.eigenvalues[n]);
  }
  o.require(worst <= 1e-8);
  o << "max relative difference rescaled vs direct (q=0.5,5; 5 levels) = " << fmt(worst, 3) << " (<=1e-8)";
  return o;
}

Outcome c04_product_form() {
  Outcome o;
  const auto ground = spectral::solve_spectrum(1.0, 1, 1e-10);
  for (double xi : {0.0, 0.5}) {
    double dev[2];
    for (int k = 0; k < 2; ++k) {
      const double rho = k == 0 ? 200.0 : 400.0;
      const auto g = pde::fundamental_solution_g(xi, 0.5, rho, 1.0);
      dev[k] = pde::product_form_check(g, ground, 0.0).relative_deviation;
    }
    const double factor = dev[0] / dev[1];
    o.require(dev[0] < 0.05 && factor >= 1.5 && factor <= 3.0);
    o << "xi=" << fmt(xi, 2) << ": dev(200)=" << fmt(dev[0], 3) << " dev(400)=" << fmt(dev[1], 3)
      << " shrink=" << fmt(factor, 3) << (xi == 0.0 ? "; " : "");
  }
  o << " (dev < 5%, shrink in [1.5, 3])";
  return o;
}

Outcome c05_galerkin_fd() {
  Outcome o;
  const double rho = 100.0, T = 0.4, alpha = 1.0;
  const std::size_t N = 24;
  const auto sys = spectral::solve_spectrum(alpha, N, 1e-8);
  const auto m = pde::galerkin_matrices(sys, N);
  const auto q = pde::QPath::power(alpha, T);
  const auto path = pde::evolve_coefficients(pde::initial_coefficients(sys, 1.0, 0.0, N), q, rho, m, T);
  const auto g = pde::fundamental_solution_g(0.0, T, rho, alpha);
  const double pref = std::exp(sys.eigenvalues[0] * rho * q.integral_pow(0.0, T, 2.0 / (2.0 + alpha)));
  const auto& xs = g.field.space_grid;
  const auto& u = g.field.values.back();
  const auto w = pde::reconstruct_W(path.final(), sys, q.value(T), xs);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double f = u[k] * pref;
    num += (f - w[k]) * (f - w[k]);
    den += f * f;
  }
  const double rel = std::sqrt(num / den);
  o.require(rel <= 0.02);
  o << "relative L2 distance W_T(Galerkin, N=24) vs rescaled FD = " << fmt(rel, 3) << " (<=2%)";
  return o;
}

Outcome c06_constant_q() {
  Outcome o;
  const double alpha = 1.0, rho = 10.0, q = 2.0, T = 0.3;
  const std::size_t N = 8;
  const auto sys = spectral::solve_spectrum(alpha, N, 1e-8);
  const auto m = pde::galerkin_matrices(sys, N);
  const auto c0 = pde::initial_coefficients(sys, q, 0.5, N);
  const auto path = pde::evolve_coefficients(c0, pde::QPath::constant(q, T), rho, m, T);
  const double drift = std::abs(path.final()[0] - c0[0]);
  const double expected =
      c0[1] * std::exp(-rho * (sys.eigenvalues[1] - sys.eigenvalues[0]) * T * std::pow(q, 2.0 / (2.0 + alpha)));
  const double rel = std::abs(path.final()[1] - expected) / std::abs(expected);
  o.require(drift <= 1e-10 && rel <= 1e-8);
  o << "c0 drift=" << fmt(drift, 3) << " (<=1e-10), c1 vs closed-form decay rel=" << fmt(rel, 3) << " (<=1e-8)";
  return o;
}

Outcome c07_norm_monotone() {
  Outcome o;
  const double alpha = 1.0;
  const std::size_t N = 24;
  const auto sys = spectral::solve_spectrum(alpha, N, 1e-8);
  const auto m = pde::galerkin_matrices(sys, N);
  double worst = -std::numeric_limits<double>::infinity();
  int runs = 0;
  for (double rho : {100.0, 200.0, 400.0})
    for (double T : {0.4, 0.5}) {
      const auto eps = pde::choose_eps(rho, T, alpha);
      const auto pair = pde::build_barriers(T, eps.eps1, eps.eps2, alpha);
      for (const pde::QPath& q : {pair.q_star, pair.q_upper, pde::QPath::power(alpha, T)})
        for (double xi : {0.0, 0.7}) {
          const auto path = pde::evolve_coefficients(pde::initial_coefficients(sys, 1.0, xi, N), q, rho, m, T);
          worst = std::max(worst, path.max_norm_increase);
          ++runs;
        }
    }
  o.require(worst <= 1e-10);
  o << runs << " runs, largest step-to-step increase of ||c||_2 = " << fmt(worst, 3) << " (<=1e-10)";
  return o;
}

Outcome c08_kernel_cross() {
  Outcome o;
  mc::WeightSpec w;
  w.alpha = 1.0;
  w.beta = 1.0;
  double worst = 0.0;
  for (double y : {0.0, 0.5, 1.0}) {
    mc::SamplerConfig c;
    c.n_samples = 100000;
    c.step = 1e-2 * 4.0;
    c.seed = 7;
    const auto e = mc::estimate_Gtilde(4.0, 0.0, 16.0, y, w, c);
    const double G = pde::kernel_G_from_g(4.0, 0.0, 16.0, y, 1.0, 1.0);
    const double z = (e.value - G) / e.std_error;
    worst = std::max(worst, std::abs(z));
    o << "y=" << fmt(y, 2) << ": MC " << fmt(e.value, 6) << " PDE " << fmt(G, 6) << " z=" << fmt(z, 3) << "; ";
  }
  o.require(worst <= 3.0);
  o << "(|z| <= 3)";
  return o;
}

Outcome c09_mass_envelope() {
  Outcome o;
  mc::WeightSpec w;
  w.alpha = 1.0;
  w.beta = 1.0;
  const auto consts = model::make_constants(model::make_params(1.0, 1.0, model::RateFamily::PowClamp),
                                            spectral::solve_spectrum(1.0, 1, 1e-10).eigenvalues[0]);
  std::vector<double> ratios;
  for (double t : {64.0, 128.0, 256.0}) {
    const double s = 16.0;
    mc::SamplerConfig c;
    c.n_samples = 10000;
    c.step = 0.1;
    c.seed = 5;
    const auto e = mc::estimate_total_mass(s, t, 0.0, w, c);
    const double k = consts.kappa;
    const double env = std::pow(t / s, k / 4.0) *
                       std::exp(consts.theta1 * (std::pow(s, 1.0 - k) - std::pow(t, 1.0 - k)));
    ratios.push_back(e.value / env);
  }
  const double med = num::median(ratios);
  for (double r : ratios) o.require(r / med >= 0.5 && r / med <= 2.0);
  o << "ratios " << fmt(ratios[0]) << ", " << fmt(ratios[1]) << ", " << fmt(ratios[2]) << " around median "
    << fmt(med) << " (factor-2 band)";
  return o;
}

Outcome c10_alpha2() {
  Outcome o;
  for (double beta : {1.0, 3.0}) {
    mc::SamplerConfig c;
    c.n_samples = 20000;
    c.step = 0.01;
    c.seed = 3;
    std::vector<double> s;
    for (double v = 1.0; v <= 5.01; v += 0.5) s.push_back(std::exp(-v));
    const auto f = mc::alpha2_exponent_fit(beta, s, 1.0, c);
    const double target = beta == 1.0 ? 0.5 : 1.0, tol = beta == 1.0 ? 0.05 : 0.10;
    o.require(std::abs(f.slope - target) <= tol);
    o << "beta=" << fmt(beta, 2) << ": slope " << fmt(f.slope, 4) << " (" << fmt(target, 2) << " +- " << fmt(tol, 2)
      << ")" << (beta == 1.0 ? "; " : "");
  }
  return o;
}

Outcome c11_bridge() {
  Outcome o;
  double worst = 0.0;
  for (auto [K, t] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {1.5, 2.0}, {0.5, 0.5}}) {
    mc::SamplerConfig c;
    c.n_samples = 100000;
    c.step = 1e-3 * t;
    c.seed = 11;
    const auto e = mc::bridge_barrier_mc(0.0, 0.0, t, 0.0, K, c);
    const double p = mc::bridge_barrier_probability(0.0, 0.0, t, 0.0, K);
    const double z = (e.value - p) / e.std_error;
    worst = std::max(worst, std::abs(z));
    o << "(K=" << fmt(K, 2) << ",t=" << fmt(t, 2) << ") z=" << fmt(z, 3) << "; ";
  }
  o.require(worst <= 3.0);
  o << "(|z| <= 3)";
  return o;
}

Outcome c12_moments() {
  Outcome o;
  const auto P = model::make_params(1.0, 1.0);
  sim::Functional F;
  F.kind = sim::FunctionalKind::XAbove;
  F.level = 1.0;
  sim::MomentOptions o1;
  o1.n_sim = 2000;
  o1.n_mc = 100000;
  o1.seed = 5;
  const auto m1 = sim::many_to_one_check(P, 2.0, F, o1);
  o.require(std::abs(m1.z) <= 3.0);
  o << "many-to-one z=" << fmt(m1.z, 3) << "; ";

  const auto H = model::make_params(1.0, 1.0, model::RateFamily::Homogeneous);
  sim::Functional one;
  one.kind = sim::FunctionalKind::One;
  sim::MomentOptions o2;
  o2.n_sim = 20000;
  o2.n_mc = 2000;
  o2.seed = 6;
  const auto m2 = sim::many_to_two_check(H, 1.5, one, one, o2);
  const double exact = 2.0 * std::exp(1.5) * (std::exp(1.5) - 1.0);
  const double rel = std::abs(m2.simulator_mean - exact) / exact;
  o.require(rel <= 0.05);
  o << "b=1 second factorial moment " << fmt(m2.simulator_mean, 5) << " vs " << fmt(exact, 5) << " (rel "
    << fmt(rel, 3) << " <= 5%); ";

  sim::Functional F2;
  F2.kind = sim::FunctionalKind::XAbove;
  F2.level = 0.5;
  sim::MomentOptions o3;
  o3.n_sim = 4000;
  o3.n_mc = 50000;
  o3.seed = 8;
  const auto m3 = sim::many_to_two_check(P, 1.5, F2, F2, o3);
  o.require(std::abs(m3.z) <= 3.0);
  o << "many-to-two inhomogeneous z=" << fmt(m3.z, 3) << " (|z| <= 3)";
  return o;
}

Outcome c13_coupling() {
  Outcome o;
  const auto P = model::make_params(1.0, 1.0);
  const auto r = sim::run_coupled({0.5, 1.0, 2.0, 4.0}, P, 10.0, 9, {1, 2, 3, 4, 5, 6, 7, 8, 9}, true);
  bool any_truncated = false;
  for (const auto& m : r.members) any_truncated = any_truncated || m.run.truncated;
  o.require(r.inclusion_chain && !any_truncated);
  o << "populations at t=10:";
  for (const auto& m : r.members) o << ' ' << m.run.final_particles.size();
  o << " (alpha 0.5, 1, 2, 4, inf); nested at all " << r.members.front().run.snapshots.size() << " snapshots: "
    << (r.inclusion_chain ? "yes" : "no");
  return o;
}

Outcome c14_discrete() {
  Outcome o;
  const auto P = model::make_params(1.0, 1.0);
  // Independent runs until 10^4 offspring draws are collected.
  std::vector<sim::OffspringBin> bins;
  std::size_t trials = 0;
  for (std::uint64_t run = 0; trials < 10000; ++run) {
    const auto r = sim::run_discrete(P, 12, rng::derive_seed(14, run));
    if (bins.empty()) bins = r.bins;
    else
      for (std::size_t k = 0; k < bins.size(); ++k) {
        bins[k].trials += r.bins[k].trials;
        bins[k].doubles += r.bins[k].doubles;
        bins[k].sum_b += r.bins[k].sum_b;
        bins[k].sum_b_var += r.bins[k].sum_b_var;
      }
    trials = 0;
    for (const auto& b : bins) trials += b.trials;
  }
  constexpr double z99 = 2.5758293035489004;
  std::size_t outside = 0;
  for (const auto& b : bins) {
    if (b.trials == 0) continue;
    const double d = static_cast<double>(b.doubles);
    const bool inside = b.sum_b_var == 0.0 ? std::abs(d - b.sum_b) < 0.5
                                           : std::abs(d - b.sum_b) <= z99 * std::sqrt(b.sum_b_var);
    outside += inside ? 0 : 1;
  }
  const auto H = model::make_params(1.0, 1.0, model::RateFamily::Homogeneous);
  const auto h = sim::run_discrete(H, 16, 3);
  bool doubling = !h.truncated;
  for (std::size_t n = 0; n < h.sizes.size(); ++n) doubling = doubling && h.sizes[n] == (std::size_t{1} << n);
  o.require(outside == 0 && doubling);
  o << trials << " offspring draws in " << bins.size() << " theta bins, " << outside
    << " outside the 99% binomial interval; b=1: |N(n)| = 2^n for n <= 16: " << (doubling ? "yes" : "no");
  return o;
}

Outcome c15_extremes() {
  Outcome o;
  const auto P = model::make_params(1.0, 1.0);
  const auto C = model::make_constants(P, spectral::solve_spectrum(1.0, 1, 1e-10).eigenvalues[0]);
  const auto rep = sim::porism_probe(P, C, {8.0, 12.0, 16.0}, 200, 2024);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (const auto& row : rep.rows) {
    const double gap = row.gap_quantiles[2];
    const bool band = row.median_M_minus_m >= -6.0 && row.median_M_minus_m <= 6.0;
    const bool gap_ok = gap >= 0.0 && gap <= 1.0 && gap < prev_gap && row.truncated == 0;
    o.require(band && gap_ok);
    prev_gap = gap;
    o << "t=" << fmt(row.t, 3) << ": med(M-m)=" << fmt(row.median_M_minus_m, 3) << " med(M-maxX)=" << fmt(gap, 3)
      << (gap_ok ? "" : " [gap out of [0,1] or not shrinking]") << "; ";
  }
  o << "(M-m in [-6,6]; M-maxX in [0,1], shrinking)";
  return o;
}

Outcome c16_determinism(const fs::path& scratch) {
  Outcome o;
  // Small but complete argument sets for every stochastic subcommand.
  const std::map<std::string, std::vector<std::string>> small{
      {"mass", {"--s", "1", "--t", "2", "--samples", "200", "--step", "0.1"}},
      {"gtilde", {"--s", "1", "--t", "2", "--y", "0.3", "--samples", "200", "--step", "0.05"}},
      {"localization", {"--s", "1", "--t", "2", "--samples", "200", "--step", "0.05", "--eta", "0.1"}},
      {"alpha2", {"--samples", "200", "--step", "0.05"}},
      {"bridge", {"--samples", "500", "--step", "0.01"}},
      {"simulate", {"--t", "4", "--snapshots", "1,2,3", "--replicates", "2", "--positions", "--splits"}},
      {"couple", {"--t", "4", "--snapshots", "1,2,3", "--homogeneous", "--positions"}},
      {"discrete", {"--n", "8", "--positions"}},
      {"mto1", {"--t", "1", "--n-sim", "50", "--n-mc", "500", "--mc-step", "0.01"}},
      {"mto2", {"--t", "1", "--n-sim", "50", "--n-mc", "500", "--mc-step", "0.01"}},
      {"porism", {"--t", "2,3", "--replicates", "5"}}};
  std::size_t covered = 0, identical = 0;
  std::vector<std::string> bad;
  for (const auto& op : harness::operations()) {
    if (!op.stochastic) continue;
    ++covered;
    const auto it = small.find(op.name);
    if (it == small.end()) {
      bad.push_back(op.name + " (no arguments registered)");
      continue;
    }
    std::vector<fs::path> dirs{scratch / "determinism" / "a" / op.name, scratch / "determinism" / "b" / op.name};
    bool ran = true;
    for (const auto& d : dirs) {
      fs::remove_all(d);
      std::vector<std::string> args{op.name, "--seed", "20240917", "--out", d.string()};
      args.insert(args.end(), it->second.begin(), it->second.end());
      std::ostringstream out, err;
      const int code = cli::run_cli(args, out, err);
      if (code != cli::kOk && code != cli::kCheckFailed) ran = false;
    }
    bool same = ran;
    if (ran) {
      std::vector<std::string> names;
      for (const auto& e : fs::directory_iterator(dirs[0])) names.push_back(e.path().filename().string());
      std::size_t count_b = 0;
      for ([[maybe_unused]] const auto& e : fs::directory_iterator(dirs[1])) ++count_b;
      same = names.size() == count_b;
      for (const auto& n : names)
        same = same && fs::exists(dirs[1] / n) && io::read_file(dirs[0] / n) == io::read_file(dirs[1] / n);
    }
    if (same) ++identical;
    else bad.push_back(ran ? op.name : op.name + " (failed to run)");
  }
  o.require(bad.empty() && covered > 0);
  o << identical << "/" << covered << " stochastic subcommands byte-identical across two runs";
  if (!bad.empty()) {
    o << "; differing:";
    for (const auto& b : bad) o << ' ' << b;
  }
  return o;
}

const std::map<int, std::string>& titles() {
  static const std::map<int, std::string> t{
      {1, "Spectral golden values"},
      {2, "Weyl law"},
      {3, "Eigenvalue scaling law"},
      {4, "PDE vs product form"},
      {5, "Galerkin/FD cross-oracle"},
      {6, "Constant-q closed form"},
      {7, "Galerkin norm monotone"},
      {8, "Kernel cross-oracle (MC vs PDE)"},
      {9, "Total-mass envelope band"},
      {10, "alpha=2 exponent"},
      {11, "Bridge barrier formula"},
      {12, "Many-to-one / many-to-two identities"},
      {13, "Coupling inclusion chain"},
      {14, "Discrete lattice model"},
      {15, "Simulator extremes regression band"},
      {16, "Determinism of stochastic subcommands"}};
  return t;
}

}  // namespace

std::vector<int> criterion_ids() {
  std::vector<int> ids;
  for (const auto& [id, t] : titles()) ids.push_back(id);
  return ids;
}

std::string criterion_title(int id) { return titles().at(id); }

CriterionResult run_criterion(int id, const fs::path& scratch) {
  CriterionResult r;
  r.id = id;
  r.title = criterion_title(id);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Outcome o;
    switch (id) {
      case 1: o = c01_spectral_golden(); break;
      case 2: o = c02_weyl(); break;
      case 3: o = c03_scaling(); break;
      case 4: o = c04_product_form(); break;
      case 5: o = c05_galerkin_fd(); break;
      case 6: o = c06_constant_q(); break;
      case 7: o = c07_norm_monotone(); break;
      case 8: o = c08_kernel_cross(); break;
      case 9: o = c09_mass_envelope(); break;
      case 10: o = c10_alpha2(); break;
      case 11: o = c11_bridge(); break;
      case 12: o = c12_moments(); break;
      case 13: o = c13_coupling(); break;
      case 14: o = c14_discrete(); break;
      case 15: o = c15_extremes(); break;
      case 16: o = c16_determinism(scratch); break;
      default: throw std::out_of_range("unknown criterion");
    }
    r.pass = o.pass;
    r.detail = o.detail.str();
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string format_line(const CriterionResult& r) {
  char head[32];
  std::snprintf(head, sizeof head, "%s  %02d  ", r.pass ? "PASS" : "FAIL", r.id);
  char tail[32];
  std::snprintf(tail, sizeof tail, "  (%.1f s)", r.seconds);
  return std::string(head) + r.title + ": " + r.detail + tail;
}

bool run_suite(const std::vector<int>& ids, const fs::path& scratch, std::ostream& out) {
  const auto todo = ids.empty() ? criterion_ids() : ids;
  bool all = true;
  for (int id : todo) {
    const auto r = run_criterion(id, scratch);
    out << format_line(r) << std::endl;
    all = all && r.pass;
  }
  return all;
}

}  // namespace bbm::acceptance
