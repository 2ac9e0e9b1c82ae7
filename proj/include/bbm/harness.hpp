#pragma once

// Operation registry, experiment runner and run reports. Every public operation of
// the library is reachable by name with string parameters, which is what both the
// command line and experiment specs use.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bbm::harness {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class ParamType { Real, Integer, RealList, String, Flag };

struct ParamInfo {
  std::string name;
  ParamType type = ParamType::Real;
  std::string default_value;  // empty: required (flags default to false)
  std::string help;
  std::optional<double> min;  // bounds apply to every number (list entries too)
  bool min_exclusive = false;
  std::optional<double> max;
  bool max_exclusive = false;
  std::vector<std::string> choices;  // String parameters only
};

class Params {
 public:
  Params() = default;
  explicit Params(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  double real(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  std::size_t count(const std::string& name) const;
  std::vector<double> reals(const std::string& name) const;
  const std::string& str(const std::string& name) const;
  bool flag(const std::string& name) const;
  bool has(const std::string& name) const { return values_.count(name) > 0; }

  std::map<std::string, std::string>& raw() { return values_; }
  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct Check {
  std::string name;
  double value = 0.0;
  std::string tolerance;  // human-readable bound, e.g. "<= 1e-6"
  bool pass = true;
};

struct OpResult {
  std::map<std::string, std::string> files;  // file name -> content
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Check> checks;
};

struct OperationInfo {
  std::string name;    // subcommand name
  std::string module;  // model_core, spectral, pde_kernel, mc_kernel, bbm_sim, harness
  std::string anchor;  // the mathematical object the operation evaluates
  std::string help;
  std::vector<std::string> functions;  // library functions exercised
  bool stochastic = false;
  std::vector<ParamInfo> params;
  std::function<OpResult(const Params&, std::optional<std::uint64_t> seed)> run;
};

const std::vector<OperationInfo>& operations();
const OperationInfo& find_operation(const std::string& name);

/// Fills defaults, rejects unknown names, parses every value and checks bounds.
/// Throws ConfigError naming the offending parameter.
Params resolve_params(const OperationInfo& op, const std::map<std::string, std::string>& given);

/// Runs an operation and returns its outputs plus a JSON summary (with checks).
OpResult run_operation(const std::string& name, const std::map<std::string, std::string>& params,
                       std::optional<std::uint64_t> seed);

/// Writes outputs atomically, then summary.json, then manifest.json (names + SHA-256).
void write_outputs(const std::filesystem::path& dir, const OpResult& result, const nlohmann::json& meta);

/// Default output root: $BBMLAB_OUTPUT_ROOT, else ./bbmlab_out.
std::filesystem::path default_output_root();

// ---- experiments -------------------------------------------------------------

struct ExperimentSpec {
  std::string name;
  std::string operation;
  std::map<std::string, std::string> params;
  std::map<std::string, std::vector<std::string>> ladders;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir;
  std::size_t replicates = 1;
};

/// Plain-text sections: [experiment] (name, operation, seed, output, replicates),
/// [params] and [ladder] (comma-separated values).
ExperimentSpec parse_experiment(const std::string& text);
ExperimentSpec load_experiment(const std::filesystem::path& path);

/// Canonical serialization: sorted keys, one "section.key=value" per line.
std::string canonical_spec(const ExperimentSpec& spec);
std::string spec_hash(const ExperimentSpec& spec);

/// Every cell of the ladder x replicate grid, validated before anything runs.
struct Cell {
  std::string id;
  std::map<std::string, std::string> params;
  std::optional<std::uint64_t> seed;
};
std::vector<Cell> expand_cells(const ExperimentSpec& spec);

struct RunRecord {
  std::string spec_hash;
  std::string started;
  std::string finished;
  std::string artifact_version = kArtifactVersion;
  std::map<std::string, std::string> digests;  // relative path -> SHA-256
  std::string status;                          // "complete" or "failed"
  std::size_t cells_run = 0;
  std::size_t cells_skipped = 0;
  std::vector<std::string> failures;
};

/// Idempotent: cells whose outputs already match this spec hash are skipped unless forced.
RunRecord run_experiment(const ExperimentSpec& spec, bool force = false);

struct ReportResult {
  std::string text;
  bool empty = false;
  bool all_pass = true;
  std::vector<std::string> problems;  // digest mismatches, missing files
};

/// Reads every manifest below `dir`, recomputes digests and tabulates checks.
ReportResult report(const std::filesystem::path& dir);

}  // namespace bbm::harness
