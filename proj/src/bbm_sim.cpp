#include "bbm/bbm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "bbm/errors.hpp"
#include "bbm/numerics.hpp"
#include "bbm/parallel.hpp"

namespace bbm::sim {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr std::uint64_t kLatticeTag = 0x4c415454;

rng::Stream lineage_stream(std::uint64_t seed, const Id128& id) {
  return rng::Stream(seed, rng::mix64(id.hi) ^ id.lo);
}

struct QueueEntry {
  double time;
  Id128 id;
  std::size_t index;

  // std::priority_queue is a max-heap; invert so the earliest proposal comes first
  // and equal times are broken by lineage id.
  bool operator<(const QueueEntry& o) const {
    if (time != o.time) return time > o.time;
    return id > o.id;
  }
};

class Simulator {
 public:
  Simulator(const model::ModelParams& params, std::uint64_t seed, bool track_history)
      : params_(params), seed_(seed), track_history_(track_history) {}

  std::vector<Particle> particles;
  std::vector<double> accept_u;  // acceptance uniform of each particle's pending proposal
  std::priority_queue<QueueEntry> queue;

  void add_root() {
    Particle p;
    p.id = rng::kRootId;
    add(std::move(p), 0.0);
  }

  void add(Particle p, double t0) {
    particles.push_back(std::move(p));
    accept_u.push_back(0.0);
    start_interval(particles.size() - 1, t0);
  }

  // Draws the pending proposal time, its acceptance uniform and the position at
  // that time from block (j, 0, 0) of the lineage stream.
  void start_interval(std::size_t i, double t0) {
    Particle& p = particles[i];
    const auto st = lineage_stream(seed_, p.id);
    const auto u = st.uniforms(p.event_index, 0, 0);
    const double wait = -std::log(u[0]);
    double z0, z1;
    rng::Stream::box_muller(u[2], u[3], z0, z1);
    p.time = t0;
    p.next_proposal = t0 + wait;
    p.end_x = p.x + std::sqrt(wait) * z0;
    p.end_y = p.y + std::sqrt(wait) * z1;
    p.bridge_count = 0;
    accept_u[i] = u[1];
    queue.push({p.next_proposal, p.id, i});
  }

  // Brownian bridge from (p.time, p.x, p.y) to (next_proposal, end_x, end_y) at time s.
  void advance_to(Particle& p, double s) {
    if (s <= p.time) return;
    const double span = p.next_proposal - p.time;
    const double a = (s - p.time) / span;
    const double sd = std::sqrt((s - p.time) * (p.next_proposal - s) / span);
    const auto st = lineage_stream(seed_, p.id);
    const auto z = st.normals(p.event_index, 1, p.bridge_count++);
    p.x += a * (p.end_x - p.x) + sd * z[0];
    p.y += a * (p.end_y - p.y) + sd * z[1];
    p.time = s;
  }

  const model::ModelParams& params_;
  std::uint64_t seed_;
  bool track_history_;
};

double theta_of(double x, double y) { return (x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x); }

}  // namespace

double rate_at(double x, double y, const model::ModelParams& params) {
  switch (params.rate_family) {
    case model::RateFamily::Homogeneous:
      return 1.0;
    case model::RateFamily::SinPow: {
      if (x == 0.0 && y == 0.0) return 1.0;
      // sin^2(theta/2) = (1 - cos theta)/2
      const double r = std::hypot(x, y);
      const double s2 = std::clamp(0.5 * (1.0 - x / r), 0.0, 1.0);
      return 1.0 - std::pow(s2, 0.5 * params.alpha);
    }
    default:
      return model::branching_rate_at(x, y, params);
  }
}

ExtremalStats extremal_stats(double t, const std::vector<Particle>& particles, const model::DerivedConstants& consts) {
  ExtremalStats s;
  s.t = t;
  s.population = particles.size();
  s.M = -std::numeric_limits<double>::infinity();
  s.max_X = -std::numeric_limits<double>::infinity();
  double best_r2 = -1.0;
  for (const auto& p : particles) {
    const double r2 = p.x * p.x + p.y * p.y;
    if (r2 > best_r2) {
      best_r2 = r2;
      s.argmax_Y = p.y;
    }
    s.max_X = std::max(s.max_X, p.x);
  }
  s.M = particles.empty() ? 0.0 : std::sqrt(best_r2);
  if (t > 0.0) {
    const double log_pref = -0.25 * consts.kappa * std::log(t) + consts.theta1 * std::pow(t, 1.0 - consts.kappa);
    double z = 0.0;
    for (const auto& p : particles) {
      const double gap = kSqrt2 * t - p.x;
      z += gap * std::exp(log_pref - kSqrt2 * gap);
    }
    s.Z = z;
  } else {
    s.Z = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

RunResult run_continuous(const model::ModelParams& params, const model::DerivedConstants& consts, double t_end,
                         std::uint64_t seed, const RunOptions& options) {
  params.validate();
  if (!(t_end > 0.0)) throw DomainError("t_end must be positive");
  if (options.cap < 1) throw DomainError("cap must be at least 1");
  std::vector<double> snaps = options.snapshot_times;
  for (double s : snaps) {
    if (!(s > 0.0 && s <= t_end)) throw DomainError("snapshot times must lie in (0, t_end]");
  }
  snaps.push_back(t_end);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

  RunResult result;
  Simulator sim(params, seed, options.track_history);
  sim.add_root();
  bool barrier = true;

  for (double snap : snaps) {
    while (!sim.queue.empty() && sim.queue.top().time <= snap) {
      const QueueEntry e = sim.queue.top();
      sim.queue.pop();
      Particle& p = sim.particles[e.index];
      p.x = p.end_x;
      p.y = p.end_y;
      p.time = e.time;
      ++result.proposals;
      const double b = rate_at(p.x, p.y, params);
      const std::uint64_t j = p.event_index;
      if (sim.accept_u[e.index] <= b) {
        if (sim.particles.size() + 1 > options.cap) {
          result.truncated = true;
          result.halt_time = e.time;
          break;
        }
        ++result.splits_count;
        if (options.record_splits) result.splits.push_back({p.id, e.time, theta_of(p.x, p.y)});
        Particle child;
        child.id = rng::child_id(p.id, j);
        child.parent = p.id;
        child.birth_time = e.time;
        child.x = p.x;
        child.y = p.y;
        child.history = p.history;
        sim.particles[e.index].event_index = j + 1;
        sim.start_interval(e.index, e.time);
        sim.add(std::move(child), e.time);  // may reallocate; p is not used afterwards
      } else {
        p.event_index = j + 1;
        sim.start_interval(e.index, e.time);
      }
    }
    if (result.truncated) break;
    for (auto& p : sim.particles) {
      sim.advance_to(p, snap);
      if (options.track_history) {
        p.history.push_back(p.x);
        p.history.push_back(p.y);
      }
    }
    ExtremalStats st = extremal_stats(snap, sim.particles, consts);
    if (snap >= options.s0 && st.max_X > kSqrt2 * snap - 1.0) barrier = false;
    st.barrier_ok = barrier;
    result.stats.push_back(st);
    if (options.record_positions) {
      Snapshot sn;
      sn.t = snap;
      sn.rows.reserve(sim.particles.size());
      for (const auto& p : sim.particles) sn.rows.push_back({p.id, p.x, p.y});
      std::sort(sn.rows.begin(), sn.rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
      result.snapshots.push_back(std::move(sn));
    }
  }
  if (!result.truncated) result.halt_time = t_end;
  result.final_particles = std::move(sim.particles);
  return result;
}

CoupledResult run_coupled(const std::vector<double>& alphas, const model::ModelParams& shared, double t_end,
                          std::uint64_t seed, std::vector<double> snapshot_times, bool include_homogeneous,
                          std::size_t cap) {
  if (shared.rate_family != model::RateFamily::SinPow)
    throw ConfigError("coupled runs need the SinPow family (rates monotone in alpha)");
  if (alphas.empty()) throw ConfigError("coupled run needs at least one alpha");
  if (!std::is_sorted(alphas.begin(), alphas.end())) throw ConfigError("alphas must be sorted ascending");
  RunOptions opts;
  opts.snapshot_times = std::move(snapshot_times);
  opts.record_positions = true;
  opts.cap = cap;

  CoupledResult out;
  for (double a : alphas) {
    model::ModelParams p = shared;
    p.alpha = a;
    model::DerivedConstants c;
    c.alpha = a;
    c.kappa = model::kappa(a);
    out.members.push_back({a, run_continuous(p, c, t_end, seed, opts)});
  }
  if (include_homogeneous) {
    model::ModelParams p = shared;
    p.rate_family = model::RateFamily::Homogeneous;
    model::DerivedConstants c;
    c.alpha = shared.alpha;
    c.kappa = model::kappa(shared.alpha);
    out.members.push_back({std::numeric_limits<double>::infinity(), run_continuous(p, c, t_end, seed, opts)});
  }
  // nested sets, checked on the snapshots every member reached
  std::size_t n_snaps = out.members.front().run.snapshots.size();
  for (const auto& m : out.members) n_snaps = std::min(n_snaps, m.run.snapshots.size());
  for (std::size_t k = 0; k < n_snaps; ++k) {
    for (std::size_t i = 0; i + 1 < out.members.size(); ++i) {
      const auto& small = out.members[i].run.snapshots[k].rows;
      const auto& large = out.members[i + 1].run.snapshots[k].rows;
      const bool nested = std::includes(large.begin(), large.end(), small.begin(), small.end(),
                                        [](const auto& a, const auto& b) { return a.id < b.id; });
      if (!nested) {
        out.inclusion_chain = false;
        out.violations.push_back(k);
        break;
      }
    }
  }
  return out;
}

DiscreteResult run_discrete(const model::ModelParams& params, std::size_t n_end, std::uint64_t seed, std::size_t cap,
                            std::size_t theta_bins) {
  params.validate();
  if (n_end < 1) throw DomainError("n_end must be at least 1");
  if (theta_bins < 1) throw DomainError("theta_bins must be at least 1");
  static constexpr std::array<std::array<int, 2>, 5> moves{{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

  DiscreteResult out;
  out.bins.resize(theta_bins);
  for (std::size_t k = 0; k < theta_bins; ++k) {
    out.bins[k].theta_lo = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(k) / theta_bins;
    out.bins[k].theta_hi = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(k + 1) / theta_bins;
  }
  std::vector<LatticeParticle> current{{rng::kRootId, 0, 0}};
  out.sizes.push_back(1);
  const rng::Stream base(seed, kLatticeTag);
  for (std::size_t n = 1; n <= n_end; ++n) {
    std::vector<LatticeParticle> next;
    next.reserve(current.size() * 2);
    for (const auto& p : current) {
      const double x = static_cast<double>(p.x), y = static_cast<double>(p.y);
      const double theta = theta_of(x, y);
      const double b = model::branching_rate(theta, params);
      const auto u = base.uniforms(rng::mix64(p.id.hi) ^ p.id.lo, 0, 0);
      const bool two = u[0] < b;
      auto bin_index = static_cast<std::size_t>((theta + std::numbers::pi) / (2.0 * std::numbers::pi) * theta_bins);
      bin_index = std::min(bin_index, theta_bins - 1);
      auto& bin = out.bins[bin_index];
      ++bin.trials;
      bin.doubles += two ? 1 : 0;
      bin.sum_b += b;
      bin.sum_b_var += b * (1.0 - b);
      const int kids = two ? 2 : 1;
      for (int k = 0; k < kids; ++k) {
        const auto m = std::min<std::size_t>(4, static_cast<std::size_t>(u[1 + k] * 5.0));
        next.push_back({rng::child_id(p.id, static_cast<std::uint64_t>(k)), p.x + moves[m][0], p.y + moves[m][1]});
      }
    }
    if (next.size() > cap) {
      out.truncated = true;
      out.halt_generation = n - 1;
      break;
    }
    current = std::move(next);
    out.sizes.push_back(current.size());
  }
  if (!out.truncated) out.halt_generation = n_end;
  out.particles = std::move(current);
  return out;
}

PorismReport porism_probe(const model::ModelParams& params, const model::DerivedConstants& consts,
                          const std::vector<double>& t_list, std::size_t replicates, std::uint64_t seed, double eps,
                          std::size_t cap) {
  if (t_list.empty()) throw DomainError("t_list must not be empty");
  if (replicates < 1) throw DomainError("replicates must be at least 1");
  std::vector<double> ts = t_list;
  std::sort(ts.begin(), ts.end());
  RunOptions opts;
  opts.snapshot_times = ts;
  opts.cap = cap;
  struct Rep {
    std::vector<ExtremalStats> stats;
    bool truncated = false;
  };
  auto reps = par::map_indexed<Rep>(replicates, [&](std::size_t i) {
    auto run = run_continuous(params, consts, ts.back(), rng::derive_seed(seed, i), opts);
    return Rep{std::move(run.stats), run.truncated};
  });

  PorismReport report;
  report.eps = eps;
  const std::vector<double> levels{0.1, 0.25, 0.5, 0.75, 0.9};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts[k];
    PorismRow row;
    row.t = t;
    std::vector<double> yr, gap, centered;
    std::size_t exceed = 0;
    const double scale = std::pow(t, 0.5 * consts.kappa);
    const double threshold = std::pow(t, 0.5 * consts.kappa + eps);
    double m_t = std::numeric_limits<double>::quiet_NaN();
    try {
      m_t = model::centering_m(t, consts);
    } catch (const DomainError&) {
    }
    row.min_gap = std::numeric_limits<double>::infinity();
    for (const auto& r : reps) {
      if (r.stats.size() <= k) {
        ++row.truncated;
        continue;
      }
      const auto& s = r.stats[k];
      yr.push_back(std::abs(s.argmax_Y) / scale);
      gap.push_back(s.M - s.max_X);
      centered.push_back(s.M - m_t);
      if (std::abs(s.argmax_Y) > threshold) ++exceed;
      row.min_gap = std::min(row.min_gap, s.M - s.max_X);
    }
    row.replicates = yr.size();
    if (!yr.empty()) {
      for (double q : levels) {
        row.y_ratio_quantiles.push_back(num::quantile(yr, q));
        row.gap_quantiles.push_back(num::quantile(gap, q));
      }
      row.exceedance = static_cast<double>(exceed) / static_cast<double>(yr.size());
      row.median_M_minus_m = num::median(centered);
    }
    report.rows.push_back(row);
  }
  for (auto& r : reps) report.replicate_stats.push_back(std::move(r.stats));
  return report;
}

}  // namespace bbm::sim
