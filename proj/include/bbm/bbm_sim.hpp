#pragma once

// Exact simulation of the planar BBM whose particles split at rate b(theta), by
// thinning a rate-1 proposal clock, plus the discrete-time lattice model.
//
// All randomness of a particle is a function of (seed, lineage id, event index):
// the parent keeps its id at a split and the new particle gets child_id(parent, j)
// for the parent's j-th proposal. A lineage present in two runs with the same seed
// therefore follows the same path and sees the same proposals, whatever the rates.

#include <cstdint>
#include <optional>
#include <vector>

#include "bbm/model_core.hpp"
#include "bbm/rng.hpp"

namespace bbm::sim {

using rng::Id128;

struct Particle {
  Id128 id;
  std::optional<Id128> parent;
  double birth_time = 0.0;
  double time = 0.0;  // time at which (x, y) is known
  double x = 0.0;
  double y = 0.0;
  double next_proposal = 0.0;
  double end_x = 0.0;  // position at next_proposal, drawn when the interval starts
  double end_y = 0.0;
  std::uint64_t event_index = 1;  // index j of the pending proposal
  std::uint32_t bridge_count = 0;  // snapshots taken inside the pending interval
  std::vector<double> history;     // (x, y) at earlier snapshot times, when tracked
};

struct ExtremalStats {
  double t = 0.0;
  double M = 0.0;         // largest radius
  double max_X = 0.0;
  double argmax_Y = 0.0;  // Y of the particle with the largest radius
  double Z = 0.0;         // pseudo-derivative martingale, log-space prefactor
  bool barrier_ok = true; // max X <= sqrt2 s - 1 at every snapshot s in [s0, t]
  std::size_t population = 0;
};

struct SnapshotRow {
  Id128 id;
  double x = 0.0;
  double y = 0.0;
};

struct Snapshot {
  double t = 0.0;
  std::vector<SnapshotRow> rows;  // sorted by id
};

struct SplitRecord {
  Id128 id;           // the particle that split (keeps its id)
  double time = 0.0;
  double theta = 0.0;
};

struct RunOptions {
  std::vector<double> snapshot_times;  // positive, increasing; t_end is always added
  std::size_t cap = 2'000'000;
  bool record_positions = false;  // keep every particle position at each snapshot
  bool record_splits = false;
  bool track_history = false;     // particles carry their ancestors' snapshot positions
  double s0 = 1.0;                // start of the barrier window for barrier_ok
};

struct RunResult {
  std::vector<ExtremalStats> stats;  // one per snapshot time
  std::vector<Snapshot> snapshots;   // when record_positions
  std::vector<SplitRecord> splits;   // when record_splits
  std::vector<Particle> final_particles;
  bool truncated = false;
  double halt_time = 0.0;  // t_end, or the time of the proposal that hit the cap
  std::size_t proposals = 0;
  std::size_t splits_count = 0;
};

/// theta1 used by Z_t; pass consts from model::make_constants.
RunResult run_continuous(const model::ModelParams& params, const model::DerivedConstants& consts, double t_end,
                         std::uint64_t seed, const RunOptions& options = {});

/// b at a planar point without forming the angle for the built-in families.
double rate_at(double x, double y, const model::ModelParams& params);

ExtremalStats extremal_stats(double t, const std::vector<Particle>& particles, const model::DerivedConstants& consts);

struct CoupledMember {
  double alpha = 0.0;  // +infinity for the homogeneous member
  RunResult run;
};

struct CoupledResult {
  std::vector<CoupledMember> members;
  bool inclusion_chain = true;     // lineage sets nested at every snapshot
  std::vector<std::size_t> violations;  // snapshot indices where nesting fails
};

/// Runs SinPow BBMs for ascending alphas with one seed, optionally followed by the
/// homogeneous process, and checks that lineage-id sets are nested at every snapshot.
CoupledResult run_coupled(const std::vector<double>& alphas, const model::ModelParams& shared, double t_end,
                          std::uint64_t seed, std::vector<double> snapshot_times, bool include_homogeneous = false,
                          std::size_t cap = 2'000'000);

// ---- discrete-time lattice model -------------------------------------------

struct LatticeParticle {
  Id128 id;
  std::int64_t x = 0;
  std::int64_t y = 0;
};

struct OffspringBin {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  std::size_t trials = 0;
  std::size_t doubles = 0;  // trials with two children
  double sum_b = 0.0;
  double sum_b_var = 0.0;   // sum of b (1 - b)
};

struct DiscreteResult {
  std::vector<std::size_t> sizes;  // |N(n)| for n = 0..n_end
  std::vector<LatticeParticle> particles;
  std::vector<OffspringBin> bins;
  bool truncated = false;
  std::size_t halt_generation = 0;
};

DiscreteResult run_discrete(const model::ModelParams& params, std::size_t n_end, std::uint64_t seed,
                            std::size_t cap = 2'000'000, std::size_t theta_bins = 16);

// ---- moment identities -----------------------------------------------------

enum class FunctionalKind { Zero, One, XAbove, RAbove, CylinderXAbove };

/// F(path): 1{X_t > level}, 1{R_t > level}, or 1{X_{t_k} > levels_k for all k}.
struct Functional {
  FunctionalKind kind = FunctionalKind::One;
  double level = 0.0;
  std::vector<double> times;   // cylinder times in (0, t)
  std::vector<double> levels;  // cylinder thresholds
};

struct MomentReport {
  double t = 0.0;
  double simulator_mean = 0.0;
  double simulator_stderr = 0.0;
  double formula_mean = 0.0;
  double formula_stderr = 0.0;
  double z = 0.0;
  std::size_t n_sim = 0;
  std::size_t n_mc = 0;
  double mc_step = 0.0;
  bool any_truncated = false;
};

struct MomentOptions {
  std::size_t n_sim = 2000;
  std::size_t n_mc = 100000;
  double mc_step = 2e-3;
  std::uint64_t seed = 0;
  std::size_t cap = 2'000'000;
};

MomentReport many_to_one_check(const model::ModelParams& params, double t, const Functional& F,
                               const MomentOptions& options);

MomentReport many_to_two_check(const model::ModelParams& params, double t, const Functional& F, const Functional& G,
                               const MomentOptions& options);

// ---- extremes ----------------------------------------------------------------

struct PorismRow {
  double t = 0.0;
  std::size_t replicates = 0;
  std::vector<double> y_ratio_quantiles;  // |Y_argmax| / t^(kappa/2) at 0.1, 0.25, 0.5, 0.75, 0.9
  std::vector<double> gap_quantiles;      // M_t - max_X at the same levels
  double exceedance = 0.0;                // fraction with |Y_argmax| > t^(kappa/2 + eps)
  double median_M_minus_m = 0.0;
  double min_gap = 0.0;
  std::size_t truncated = 0;
};

struct PorismReport {
  double eps = 0.25;
  std::vector<PorismRow> rows;
  /// Per replicate and t: M_t, max_X, argmax_Y, m(t).
  std::vector<std::vector<ExtremalStats>> replicate_stats;
};

/// One run per replicate up to max(t_list) with snapshots at t_list; replicate i
/// uses derive_seed(seed, i).
PorismReport porism_probe(const model::ModelParams& params, const model::DerivedConstants& consts,
                          const std::vector<double>& t_list, std::size_t replicates, std::uint64_t seed,
                          double eps = 0.25, std::size_t cap = 2'000'000);

}  // namespace bbm::sim
