// Many-to-one and many-to-two identities: simulator averages against spine
// expectations computed by Monte Carlo over Brownian paths.

#include <algorithm>
#include <cmath>
#include <limits>

#include "bbm/bbm_sim.hpp"
#include "bbm/errors.hpp"
#include "bbm/parallel.hpp"

namespace bbm::sim {

namespace {

constexpr std::uint64_t kSpineTag = 0x5350494e;

void validate_functional(const Functional& F, double t) {
  if (F.kind == FunctionalKind::CylinderXAbove) {
    if (F.times.empty() || F.times.size() != F.levels.size())
      throw ConfigError("cylinder functional needs matching times and levels");
    if (!std::is_sorted(F.times.begin(), F.times.end())) throw ConfigError("cylinder times must increase");
    for (double s : F.times) {
      if (!(s > 0.0 && s < t)) throw ConfigError("cylinder times must lie in (0, t)");
    }
  }
}

// F on a path known at the cylinder times (xs[k]) and at t (x, y).
double evaluate(const Functional& F, const std::vector<double>& xs, double x, double y) {
  switch (F.kind) {
    case FunctionalKind::Zero: return 0.0;
    case FunctionalKind::One: return 1.0;
    case FunctionalKind::XAbove: return x > F.level ? 1.0 : 0.0;
    case FunctionalKind::RAbove: return std::hypot(x, y) > F.level ? 1.0 : 0.0;
    case FunctionalKind::CylinderXAbove:
      for (std::size_t k = 0; k < F.levels.size(); ++k) {
        if (!(xs[k] > F.levels[k])) return 0.0;
      }
      return 1.0;
  }
  return 0.0;
}

// History of a simulated particle holds (x, y) at each snapshot; the cylinder
// times are the leading snapshots and the last entry is t itself.
double evaluate_particle(const Functional& F, const Particle& p) {
  std::vector<double> xs;
  if (F.kind == FunctionalKind::CylinderXAbove) {
    for (std::size_t k = 0; k < F.times.size(); ++k) xs.push_back(p.history[2 * k]);
  }
  return evaluate(F, xs, p.x, p.y);
}

std::vector<double> union_times(const Functional& F, const Functional& G) {
  std::vector<double> times = F.times;
  times.insert(times.end(), G.times.begin(), G.times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

Functional restrict_to(const Functional& F, const std::vector<double>& all_times) {
  // re-express cylinder indices relative to the shared snapshot list
  if (F.kind != FunctionalKind::CylinderXAbove) return F;
  Functional out = F;
  out.times.clear();
  out.levels.assign(all_times.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < F.times.size(); ++k) {
    const auto pos = std::lower_bound(all_times.begin(), all_times.end(), F.times[k]) - all_times.begin();
    out.levels[static_cast<std::size_t>(pos)] = F.levels[k];
  }
  out.times = all_times;
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe summarize(const std::vector<double>& v) {
  MeanSe r;
  const double n = static_cast<double>(v.size());
  for (double x : v) r.mean += x;
  r.mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return r;
}

// Time grid on [from, t] that contains every cylinder time, with spacing <= step.
std::vector<double> time_grid(double from, double t, const std::vector<double>& marks, double step) {
  std::vector<double> knots{from};
  for (double m : marks) {
    if (m > from && m < t) knots.push_back(m);
  }
  knots.push_back(t);
  std::vector<double> grid{from};
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const double span = knots[k] - knots[k - 1];
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / step - 1e-9)));
    for (std::size_t i = 1; i <= n; ++i)
      grid.push_back(i == n ? knots[k] : knots[k - 1] + span * static_cast<double>(i) / static_cast<double>(n));
  }
  return grid;
}

class Normals {
 public:
  Normals(const rng::Stream& st, std::uint64_t sample, std::uint32_t purpose)
      : st_(st), sample_(sample), purpose_(purpose) {}
  double next() {
    if (pos_ == 4) {
      buf_ = st_.normals(sample_, block_++, purpose_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

 private:
  const rng::Stream& st_;
  std::uint64_t sample_;
  std::uint32_t purpose_;
  std::uint32_t block_ = 0;
  std::array<double, 4> buf_{};
  int pos_ = 4;
};

// Brownian path on `grid` from (x, y); returns int b along it (trapezoid) and fills
// the position at each cylinder time in `marks` into xs.
struct PathSummary {
  double integral = 0.0;
  double x = 0.0;
  double y = 0.0;
  std::vector<double> xs;
};

PathSummary walk(const std::vector<double>& grid, double x, double y, const std::vector<double>& marks,
                 const model::ModelParams& params, Normals& z, std::vector<double>* store_x = nullptr,
                 std::vector<double>* store_y = nullptr) {
  PathSummary s;
  double b_prev = rate_at(x, y, params);
  std::size_t m = 0;
  if (store_x) {
    store_x->assign(1, x);
    store_y->assign(1, y);
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double dt = grid[i] - grid[i - 1];
    const double sd = std::sqrt(dt);
    x += sd * z.next();
    y += sd * z.next();
    const double b = rate_at(x, y, params);
    s.integral += 0.5 * (b_prev + b) * dt;
    b_prev = b;
    while (m < marks.size() && marks[m] <= grid[i]) {  // marks are grid points
      s.xs.push_back(x);
      ++m;
    }
    if (store_x) {
      store_x->push_back(x);
      store_y->push_back(y);
    }
  }
  s.x = x;
  s.y = y;
  return s;
}

model::DerivedConstants plain_constants(const model::ModelParams& params) {
  model::DerivedConstants c;
  c.alpha = params.alpha;
  c.kappa = model::kappa(params.alpha);
  return c;
}

void check_options(const MomentOptions& o, double t) {
  if (!(t > 0.0)) throw DomainError("t must be positive");
  if (o.n_sim < 2 || o.n_mc < 2) throw ConfigError("n_sim and n_mc must be at least 2");
  if (!(o.mc_step > 0.0)) throw ConfigError("mc_step must be positive");
}

}  // namespace

MomentReport many_to_one_check(const model::ModelParams& params, double t, const Functional& F,
                               const MomentOptions& options) {
  params.validate();
  check_options(options, t);
  validate_functional(F, t);
  MomentReport rep;
  rep.t = t;
  rep.n_sim = options.n_sim;
  rep.n_mc = options.n_mc;
  rep.mc_step = options.mc_step;

  RunOptions ro;
  ro.snapshot_times = F.times;
  ro.track_history = F.kind == FunctionalKind::CylinderXAbove;
  ro.cap = options.cap;
  const auto consts = plain_constants(params);
  struct SimOut {
    double value = 0.0;
    bool truncated = false;
  };
  auto sims = par::map_indexed<SimOut>(options.n_sim, [&](std::size_t i) {
    const auto run = run_continuous(params, consts, t, rng::derive_seed(options.seed, i), ro);
    double sum = 0.0;
    for (const auto& p : run.final_particles) sum += evaluate_particle(F, p);
    return SimOut{sum, run.truncated};
  });
  std::vector<double> sim_values;
  for (const auto& s : sims) {
    sim_values.push_back(s.value);
    rep.any_truncated = rep.any_truncated || s.truncated;
  }

  const auto grid = time_grid(0.0, t, F.times, options.mc_step);
  const rng::Stream st(options.seed, kSpineTag);
  auto mc_values = par::map_indexed<double>(options.n_mc, [&](std::size_t j) {
    Normals z(st, j, 0);
    const auto path = walk(grid, 0.0, 0.0, F.times, params, z);
    const double f = evaluate(F, path.xs, path.x, path.y);
    return f == 0.0 ? 0.0 : f * std::exp(path.integral);
  });

  const auto a = summarize(sim_values);
  const auto b = summarize(mc_values);
  rep.simulator_mean = a.mean;
  rep.simulator_stderr = a.se;
  rep.formula_mean = b.mean;
  rep.formula_stderr = b.se;
  const double se = std::hypot(a.se, b.se);
  rep.z = se > 0.0 ? (a.mean - b.mean) / se : 0.0;
  return rep;
}

MomentReport many_to_two_check(const model::ModelParams& params, double t, const Functional& F, const Functional& G,
                               const MomentOptions& options) {
  params.validate();
  check_options(options, t);
  validate_functional(F, t);
  validate_functional(G, t);
  MomentReport rep;
  rep.t = t;
  rep.n_sim = options.n_sim;
  rep.n_mc = options.n_mc;
  rep.mc_step = options.mc_step;

  const auto marks = union_times(F, G);
  const Functional Fs = restrict_to(F, marks);
  const Functional Gs = restrict_to(G, marks);
  RunOptions ro;
  ro.snapshot_times = marks;
  ro.track_history = !marks.empty();
  ro.cap = options.cap;
  const auto consts = plain_constants(params);
  struct SimOut {
    double value = 0.0;
    bool truncated = false;
  };
  auto sims = par::map_indexed<SimOut>(options.n_sim, [&](std::size_t i) {
    const auto run = run_continuous(params, consts, t, rng::derive_seed(options.seed, i), ro);
    double sf = 0.0, sg = 0.0, sfg = 0.0;
    for (const auto& p : run.final_particles) {
      const double f = evaluate_particle(Fs, p);
      const double g = evaluate_particle(Gs, p);
      sf += f;
      sg += g;
      sfg += f * g;
    }
    return SimOut{sf * sg - sfg, run.truncated};
  });
  std::vector<double> sim_values;
  for (const auto& s : sims) {
    sim_values.push_back(s.value);
    rep.any_truncated = rep.any_truncated || s.truncated;
  }

  // Split time r ~ U[0, t] (weight t); spine 2 leaves spine 1 at r.
  const auto grid = time_grid(0.0, t, marks, options.mc_step);
  const rng::Stream st(options.seed, kSpineTag + 1);
  auto mc_values = par::map_indexed<double>(options.n_mc, [&](std::size_t j) {
    const double r = t * st.uniforms(j, 0, 2)[0];
    Normals z1(st, j, 0);
    std::vector<double> px, py;
    const auto spine1 = walk(grid, 0.0, 0.0, marks, params, z1, &px, &py);
    const double f = evaluate(Fs, spine1.xs, spine1.x, spine1.y);
    if (f == 0.0) return 0.0;
    // position of spine 1 at r by a bridge between the surrounding grid points
    const auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), r) - grid.begin());
    const std::size_t k1 = std::min(hi, grid.size() - 1);
    const std::size_t k0 = k1 - 1;
    const double span = grid[k1] - grid[k0];
    const double a = (r - grid[k0]) / span;
    const double sd = std::sqrt((r - grid[k0]) * (grid[k1] - r) / span);
    Normals z2(st, j, 1);
    const double xr = px[k0] + a * (px[k1] - px[k0]) + sd * z2.next();
    const double yr = py[k0] + a * (py[k1] - py[k0]) + sd * z2.next();
    // spine 2 after r: grid points beyond r, cylinder marks before r copied from spine 1
    std::vector<double> grid2{r};
    for (std::size_t i = k1; i < grid.size(); ++i) {
      if (grid[i] > r) grid2.push_back(grid[i]);
    }
    std::vector<double> marks_after;
    std::vector<double> xs2;
    for (std::size_t m = 0; m < marks.size(); ++m) {
      if (marks[m] < r) {
        xs2.push_back(spine1.xs[m]);
      } else {
        marks_after.push_back(marks[m]);
      }
    }
    const auto spine2 = grid2.size() > 1 ? walk(grid2, xr, yr, marks_after, params, z2)
                                         : PathSummary{0.0, xr, yr, {}};
    xs2.insert(xs2.end(), spine2.xs.begin(), spine2.xs.end());
    const double g = evaluate(Gs, xs2, spine2.x, spine2.y);
    if (g == 0.0) return 0.0;
    const double b_r = rate_at(xr, yr, params);
    return t * 2.0 * b_r * f * g * std::exp(spine1.integral + spine2.integral);
  });

  const auto a = summarize(sim_values);
  const auto b = summarize(mc_values);
  rep.simulator_mean = a.mean;
  rep.simulator_stderr = a.se;
  rep.formula_mean = b.mean;
  rep.formula_stderr = b.se;
  const double se = std::hypot(a.se, b.se);
  rep.z = se > 0.0 ? (a.mean - b.mean) / se : 0.0;
  return rep;
}

}  // namespace bbm::sim
