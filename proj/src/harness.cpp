#include "bbm/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <set>
#include <sstream>

#include "bbm/errors.hpp"
#include "bbm/io.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"

namespace bbm::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(std::string_view(text).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<bool> parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off" || t.empty()) return false;
  return std::nullopt;
}

std::int64_t parse_integer(const std::string& name, const std::string& text) {
  const double v = io::parse_double(text);
  if (std::floor(v) != v || std::abs(v) > 9.0e15)
    throw ConfigError("parameter '" + name + "' must be an integer, got '" + text + "'");
  return static_cast<std::int64_t>(v);
}

void check_bounds(const ParamInfo& p, double v) {
  if (!std::isfinite(v)) throw ConfigError("parameter '" + p.name + "' must be finite");
  if (p.min) {
    const bool bad = p.min_exclusive ? v <= *p.min : v < *p.min;
    if (bad)
      throw ConfigError("parameter '" + p.name + "' = " + io::format_double(v) + " violates " +
                        (p.min_exclusive ? "> " : ">= ") + io::format_double(*p.min));
  }
  if (p.max) {
    const bool bad = p.max_exclusive ? v >= *p.max : v > *p.max;
    if (bad)
      throw ConfigError("parameter '" + p.name + "' = " + io::format_double(v) + " violates " +
                        (p.max_exclusive ? "< " : "<= ") + io::format_double(*p.max));
  }
}

void validate_value(const ParamInfo& p, const std::string& value) {
  auto wrap = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.find("'" + p.name + "'") != std::string::npos) throw;
      throw ConfigError("parameter '" + p.name + "': " + msg);
    }
  };
  switch (p.type) {
    case ParamType::Real:
      wrap([&] { check_bounds(p, io::parse_double(value)); });
      break;
    case ParamType::Integer:
      wrap([&] { check_bounds(p, static_cast<double>(parse_integer(p.name, value))); });
      break;
    case ParamType::RealList:
      wrap([&] {
        for (const auto& item : split_list(value)) check_bounds(p, io::parse_double(item));
      });
      break;
    case ParamType::String:
      if (!p.choices.empty() && std::find(p.choices.begin(), p.choices.end(), value) == p.choices.end()) {
        std::string allowed;
        for (const auto& c : p.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        throw ConfigError("parameter '" + p.name + "' = '" + value + "' is not one of: " + allowed);
      }
      break;
    case ParamType::Flag:
      if (!parse_bool(value)) throw ConfigError("parameter '" + p.name + "' expects true/false, got '" + value + "'");
      break;
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  return arr;
}

}  // namespace

// ---- Params ---------------------------------------------------------------------

double Params::real(const std::string& name) const { return io::parse_double(str(name)); }

std::int64_t Params::integer(const std::string& name) const { return parse_integer(name, str(name)); }

std::size_t Params::count(const std::string& name) const {
  const auto v = integer(name);
  if (v < 0) throw ConfigError("parameter '" + name + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::vector<double> Params::reals(const std::string& name) const {
  std::vector<double> out;
  for (const auto& item : split_list(str(name))) out.push_back(io::parse_double(item));
  return out;
}

const std::string& Params::str(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

bool Params::flag(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) return false;
  const auto b = parse_bool(it->second);
  if (!b) throw ConfigError("parameter '" + name + "' expects true/false");
  return *b;
}

// ---- registry plumbing ----------------------------------------------------------

const OperationInfo& find_operation(const std::string& name) {
  for (const auto& op : operations())
    if (op.name == name) return op;
  throw ConfigError("unknown operation '" + name + "'");
}

Params resolve_params(const OperationInfo& op, const std::map<std::string, std::string>& given) {
  std::map<std::string, std::string> values;
  for (const auto& [name, value] : given) {
    const auto it = std::find_if(op.params.begin(), op.params.end(), [&](const ParamInfo& p) { return p.name == name; });
    if (it == op.params.end()) throw ConfigError("operation '" + op.name + "' has no parameter '" + name + "'");
    values[name] = trim(value);
  }
  for (const auto& p : op.params) {
    if (values.count(p.name)) continue;
    if (p.type == ParamType::Flag) {
      values[p.name] = p.default_value.empty() ? "false" : p.default_value;
    } else if (p.default_value.empty() && (p.type == ParamType::Real || p.type == ParamType::Integer)) {
      throw ConfigError("operation '" + op.name + "' requires parameter '" + p.name + "'");
    } else {
      values[p.name] = p.default_value;
    }
  }
  for (const auto& p : op.params) validate_value(p, values.at(p.name));
  return Params(std::move(values));
}

OpResult run_operation(const std::string& name, const std::map<std::string, std::string>& params,
                       std::optional<std::uint64_t> seed) {
  const auto& op = find_operation(name);
  if (op.stochastic && !seed) throw ConfigError("operation '" + name + "' is stochastic and needs a seed");
  const Params resolved = resolve_params(op, params);
  return op.run(resolved, seed);
}

void write_outputs(const fs::path& dir, const OpResult& result, const json& meta) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  json manifest = {{"artifact_version", kArtifactVersion}, {"files", json::object()}};
  for (const auto& [file, content] : result.files) {
    io::write_file_atomic(dir / file, content);
    manifest["files"][file] = io::sha256_hex(content);
  }
  json summary = meta;
  summary["summary"] = result.summary;
  summary["checks"] = checks_json(result.checks);
  const std::string summary_text = io::dump_json(summary);
  io::write_file_atomic(dir / "summary.json", summary_text);
  manifest["files"]["summary.json"] = io::sha256_hex(summary_text);
  if (meta.contains("spec_hash")) manifest["spec_hash"] = meta["spec_hash"];
  io::write_file_atomic(dir / "manifest.json", io::dump_json(manifest));
}

fs::path default_output_root() {
  if (const char* env = std::getenv("BBMLAB_OUTPUT_ROOT"); env && *env) return fs::path(env);
  return fs::path("bbmlab_out");
}

// ---- experiments ----------------------------------------------------------------

ExperimentSpec parse_experiment(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("experiment file: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentSpec spec;
  std::set<std::string> sections;
  for (const auto& [section, body] : tree) {
    sections.insert(section);
    if (section == "experiment") {
      for (const auto& [key, node] : body) {
        const std::string value = trim(node.get_value<std::string>());
        if (key == "name") {
          spec.name = value;
        } else if (key == "operation") {
          spec.operation = value;
        } else if (key == "seed") {
          const double s = io::parse_double(value);
          if (s < 0 || std::floor(s) != s || s > 9.0e15) throw ConfigError("seed must be a non-negative integer");
          spec.seed = static_cast<std::uint64_t>(s);
        } else if (key == "output") {
          spec.output_dir = value;
        } else if (key == "replicates") {
          const double r = io::parse_double(value);
          if (r < 1 || std::floor(r) != r) throw ConfigError("replicates must be a positive integer");
          spec.replicates = static_cast<std::size_t>(r);
        } else {
          throw ConfigError("unknown key '" + key + "' in [experiment]");
        }
      }
    } else if (section == "params") {
      for (const auto& [key, node] : body) spec.params[key] = trim(node.get_value<std::string>());
    } else if (section == "ladder") {
      for (const auto& [key, node] : body) {
        auto values = split_list(node.get_value<std::string>());
        if (values.empty()) throw ConfigError("ladder '" + key + "' is empty");
        spec.ladders[key] = std::move(values);
      }
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  if (!sections.count("experiment")) throw ConfigError("missing [experiment] section");
  if (spec.name.empty()) throw ConfigError("experiment name is required");
  if (spec.operation.empty()) throw ConfigError("experiment operation is required");
  if (!spec.seed) throw ConfigError("experiment seed is required");
  if (spec.output_dir.empty()) spec.output_dir = default_output_root() / spec.name;
  return spec;
}

ExperimentSpec load_experiment(const fs::path& path) {
  try {
    return parse_experiment(io::read_file(path));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("cannot read experiment file " + path.string() + ": " + e.what());
  }
}

std::string canonical_spec(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "experiment.name=" << spec.name << '\n';
  os << "experiment.operation=" << spec.operation << '\n';
  os << "experiment.replicates=" << spec.replicates << '\n';
  os << "experiment.seed=" << (spec.seed ? std::to_string(*spec.seed) : "") << '\n';
  os << "artifact_version=" << kArtifactVersion << '\n';
  for (const auto& [k, v] : spec.params) os << "params." << k << '=' << v << '\n';
  for (const auto& [k, values] : spec.ladders) {
    os << "ladder." << k << '=';
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
    os << '\n';
  }
  return os.str();
}

std::string spec_hash(const ExperimentSpec& spec) { return io::sha256_hex(canonical_spec(spec)); }

std::vector<Cell> expand_cells(const ExperimentSpec& spec) {
  const auto& op = find_operation(spec.operation);
  for (const auto& [k, v] : spec.params)
    if (spec.ladders.count(k)) throw ConfigError("parameter '" + k + "' is set in both [params] and [ladder]");

  std::vector<std::map<std::string, std::string>> grid{spec.params};
  for (const auto& [key, values] : spec.ladders) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& base : grid)
      for (const auto& v : values) {
        auto cell = base;
        cell[key] = v;
        next.push_back(std::move(cell));
      }
    grid = std::move(next);
  }

  std::vector<Cell> cells;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    resolve_params(op, grid[i]);  // validation first: any bad cell rejects the whole spec
    for (std::size_t r = 0; r < spec.replicates; ++r) {
      std::ostringstream id;
      id << "cell-" << std::setw(3) << std::setfill('0') << i;
      if (spec.replicates > 1) id << "-rep-" << std::setw(3) << std::setfill('0') << r;
      // Replicate r uses the same seed in every ladder cell (common random numbers).
      std::optional<std::uint64_t> seed = spec.seed;
      if (seed && spec.replicates > 1) seed = rng::derive_seed(*seed, r);
      cells.push_back({id.str(), grid[i], seed});
    }
  }
  return cells;
}

namespace {

bool cell_complete(const fs::path& dir, const std::string& hash) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) return false;
  try {
    const json manifest = json::parse(io::read_file(manifest_path));
    if (manifest.value("spec_hash", std::string()) != hash) return false;
    for (const auto& [file, digest] : manifest.at("files").items())
      if (!fs::exists(dir / file) || io::sha256_file(dir / file) != digest.get<std::string>()) return false;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

RunRecord run_experiment(const ExperimentSpec& spec, bool force) {
  const auto cells = expand_cells(spec);
  const auto& op = find_operation(spec.operation);
  RunRecord record;
  record.spec_hash = spec_hash(spec);
  record.started = utc_now();

  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec || !fs::is_directory(spec.output_dir))
    throw ConfigError("output directory not writable: " + spec.output_dir.string());
  {
    const auto probe = spec.output_dir / ".write-probe";
    try {
      io::write_file_atomic(probe, "");
      fs::remove(probe);
    } catch (const std::exception&) {
      throw ConfigError("output directory not writable: " + spec.output_dir.string());
    }
  }

  struct CellOutcome {
    bool skipped = false;
    std::string failure;
  };
  const auto outcomes = par::map_indexed<CellOutcome>(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    const fs::path dir = spec.output_dir / "cells" / cell.id;
    CellOutcome out;
    if (!force && cell_complete(dir, record.spec_hash)) {
      out.skipped = true;
      return out;
    }
    try {
      const OpResult result = run_operation(op.name, cell.params, cell.seed);
      json meta = {{"operation", op.name},
                   {"module", op.module},
                   {"anchor", op.anchor},
                   {"params", resolve_params(op, cell.params).raw()},
                   {"artifact_version", kArtifactVersion},
                   {"experiment", spec.name},
                   {"cell", cell.id},
                   {"spec_hash", record.spec_hash}};
      meta["seed"] = cell.seed ? json(*cell.seed) : json(nullptr);
      write_outputs(dir, result, meta);
    } catch (const std::exception& e) {
      out.failure = cell.id + ": " + e.what();
    }
    return out;
  });

  for (const auto& o : outcomes) {
    if (o.skipped) ++record.cells_skipped;
    else if (!o.failure.empty()) record.failures.push_back(o.failure);
    else ++record.cells_run;
  }
  for (const auto& cell : cells) {
    const fs::path dir = spec.output_dir / "cells" / cell.id;
    if (!fs::exists(dir / "manifest.json")) continue;
    const json manifest = json::parse(io::read_file(dir / "manifest.json"));
    for (const auto& [file, digest] : manifest.at("files").items())
      record.digests["cells/" + cell.id + "/" + file] = digest.get<std::string>();
  }
  record.status = record.failures.empty() ? "complete" : "failed";
  record.finished = utc_now();

  const json experiment = {{"kind", "experiment"},
                           {"name", spec.name},
                           {"operation", spec.operation},
                           {"spec_hash", record.spec_hash},
                           {"canonical_spec", canonical_spec(spec)},
                           {"started", record.started},
                           {"finished", record.finished},
                           {"artifact_version", record.artifact_version},
                           {"status", record.status},
                           {"cells_run", record.cells_run},
                           {"cells_skipped", record.cells_skipped},
                           {"failures", record.failures},
                           {"files", record.digests}};
  io::write_file_atomic(spec.output_dir / "experiment.json", io::dump_json(experiment));
  return record;
}

// ---- report -----------------------------------------------------------------------

ReportResult report(const fs::path& dir) {
  ReportResult out;
  std::ostringstream text;
  if (!fs::is_directory(dir)) {
    out.empty = true;
    out.all_pass = false;
    out.problems.push_back("not a directory: " + dir.string());
    out.text = "report: " + dir.string() + " is not a directory\n";
    return out;
  }

  std::vector<fs::path> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() &&
        (entry.path().filename() == "manifest.json" || entry.path().filename() == "experiment.json"))
      manifests.push_back(entry.path());
  std::sort(manifests.begin(), manifests.end());

  if (manifests.empty()) {
    out.empty = true;
    out.all_pass = false;
    out.text = "report: no results found under " + dir.string() + " (empty report)\n";
    return out;
  }

  // Group operation outputs by experiment name (or by directory for direct runs).
  struct Row {
    std::string where;
    std::string operation;
    std::string anchor;
    std::vector<Check> checks;
    bool intact = true;
  };
  std::map<std::string, std::vector<Row>> groups;
  for (const auto& path : manifests) {
    const fs::path base = path.parent_path();
    const std::string where = fs::relative(base, dir).generic_string();
    json manifest;
    try {
      manifest = json::parse(io::read_file(path));
    } catch (const std::exception& e) {
      out.problems.push_back(fs::relative(path, dir).generic_string() + ": corrupt manifest (" + e.what() + ")");
      continue;
    }
    bool intact = true;
    if (manifest.contains("files")) {
      for (const auto& [file, digest] : manifest["files"].items()) {
        const fs::path target = base / file;
        const std::string rel = fs::relative(target, dir).generic_string();
        if (!fs::exists(target)) {
          out.problems.push_back(rel + ": missing");
          intact = false;
        } else if (io::sha256_file(target) != digest.get<std::string>()) {
          out.problems.push_back(rel + ": digest mismatch");
          intact = false;
        }
      }
    }
    if (path.filename() == "experiment.json") {
      if (manifest.value("status", std::string()) != "complete")
        out.problems.push_back(where + ": experiment status " + manifest.value("status", std::string("?")));
      continue;
    }
    Row row;
    row.where = where == "." ? "" : where;
    row.intact = intact;
    std::string group = "(direct runs)";
    try {
      const json summary = json::parse(io::read_file(base / "summary.json"));
      row.operation = summary.value("operation", std::string("?"));
      row.anchor = summary.value("anchor", std::string());
      if (summary.contains("experiment")) group = summary["experiment"].get<std::string>();
      for (const auto& c : summary.value("checks", json::array()))
        row.checks.push_back({c.value("name", std::string()), c.value("value", 0.0), c.value("tolerance", std::string()),
                              c.value("pass", false)});
    } catch (const std::exception& e) {
      out.problems.push_back(fs::relative(base / "summary.json", dir).generic_string() + ": unreadable (" + e.what() +
                             ")");
      row.intact = false;
    }
    groups[group].push_back(std::move(row));
  }

  for (const auto& [group, rows] : groups) {
    text << "== " << group << " ==\n";
    for (const auto& row : rows) {
      text << "[" << (row.where.empty() ? "." : row.where) << "] " << row.operation;
      if (!row.anchor.empty()) text << "  (" << row.anchor << ")";
      if (!row.intact) text << "  ** OUTPUTS MODIFIED OR MISSING **";
      text << '\n';
      if (row.checks.empty()) text << "    (no checks recorded)\n";
      for (const auto& c : row.checks) {
        text << "    " << (c.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(40) << c.name << " "
             << std::setw(24) << io::format_double(c.value) << " " << c.tolerance << '\n';
        if (!c.pass) out.all_pass = false;
      }
      if (!row.intact) out.all_pass = false;
    }
  }
  std::sort(out.problems.begin(), out.problems.end());
  out.problems.erase(std::unique(out.problems.begin(), out.problems.end()), out.problems.end());
  if (!out.problems.empty()) {
    out.all_pass = false;
    text << "== problems ==\n";
    for (const auto& p : out.problems) text << "    " << p << '\n';
  }
  text << (out.all_pass ? "all checks pass\n" : "some checks FAILED or outputs are damaged\n");
  out.text = text.str();
  return out;
}

}  // namespace bbm::harness
