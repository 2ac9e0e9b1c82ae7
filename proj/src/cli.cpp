#include "bbm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>

#include "bbm/acceptance.hpp"
#include "bbm/errors.hpp"
#include "bbm/harness.hpp"
#include "bbm/io.hpp"

namespace bbm::cli {

namespace fs = std::filesystem;
using harness::OperationInfo;
using harness::ParamType;

namespace {

struct OpBinding {
  const OperationInfo* op = nullptr;
  CLI::App* sub = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool print = false;
};

std::string type_name(ParamType t) {
  switch (t) {
    case ParamType::Real: return "REAL";
    case ParamType::Integer: return "INT";
    case ParamType::RealList: return "LIST";
    case ParamType::String: return "TEXT";
    case ParamType::Flag: return "";
  }
  return "";
}

int run_op(OpBinding& b, std::ostream& out) {
  std::map<std::string, std::string> given;
  for (const auto& p : b.op->params) {
    if (p.type == ParamType::Flag) {
      if (b.flags[p.name]) given[p.name] = "true";
    } else if (b.sub->count("--" + p.name) > 0) {
      given[p.name] = b.values[p.name];
    }
  }
  std::optional<std::uint64_t> seed;
  if (b.op->stochastic) seed = b.seed;
  const auto resolved = harness::resolve_params(*b.op, given);
  const auto result = harness::run_operation(b.op->name, given, seed);
  const fs::path dir = b.out_dir.empty() ? harness::default_output_root() / b.op->name : fs::path(b.out_dir);
  nlohmann::json meta = {{"operation", b.op->name},
                         {"module", b.op->module},
                         {"anchor", b.op->anchor},
                         {"params", resolved.raw()},
                         {"artifact_version", harness::kArtifactVersion}};
  meta["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  harness::write_outputs(dir, result, meta);

  out << b.op->name << ": wrote " << dir.string() << '\n';
  if (b.print) out << io::dump_json(result.summary) << '\n';
  bool all = true;
  for (const auto& c : result.checks) {
    out << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << " = " << io::format_double(c.value) << " ("
        << c.tolerance << ")\n";
    all = all && c.pass;
  }
  return all ? kOk : kCheckFailed;
}

std::vector<int> parse_ids(const std::string& text) {
  std::vector<int> ids;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      const double v = io::parse_double(item);
      if (v < 1 || v > 16 || v != static_cast<int>(v)) throw ConfigError("criterion ids are 1..16, got " + item);
      ids.push_back(static_cast<int>(v));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ids;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bbmlab: numerical laboratory for planar branching Brownian motion with angle-dependent branching"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  std::vector<std::unique_ptr<OpBinding>> bindings;
  for (const auto& op : harness::operations()) {
    auto b = std::make_unique<OpBinding>();
    b->op = &op;
    b->sub = app.add_subcommand(op.name, op.help + " [" + op.anchor + "]");
    for (const auto& p : op.params) {
      if (p.type == ParamType::Flag) {
        b->sub->add_flag("--" + p.name, b->flags[p.name], p.help);
      } else {
        std::string help = p.help;
        if (!p.default_value.empty()) help += " (default " + p.default_value + ")";
        if (!p.choices.empty()) {
          help += " {";
          for (std::size_t i = 0; i < p.choices.size(); ++i) help += (i ? "," : "") + p.choices[i];
          help += "}";
        }
        b->sub->add_option("--" + p.name, b->values[p.name], help)->type_name(type_name(p.type));
      }
    }
    if (op.stochastic) b->sub->add_option("--seed", b->seed, "random seed (required)")->required();
    b->sub->add_option("--out", b->out_dir, "output directory (default $BBMLAB_OUTPUT_ROOT/<op>)");
    b->sub->add_flag("--print", b->print, "print the JSON summary");
    bindings.push_back(std::move(b));
  }

  auto* ops_cmd = app.add_subcommand("ops", "list every operation with its module, anchor and library functions");

  std::string spec_path;
  bool force = false;
  auto* run_cmd = app.add_subcommand("run", "run an experiment spec (ladder x replicate grid)");
  run_cmd->add_option("spec", spec_path, "experiment file")->required();
  run_cmd->add_flag("--force", force, "re-run cells that are already complete");

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "summarize every result below a directory");
  report_cmd->add_option("dir", report_dir, "results directory")->required();

  std::string only;
  std::string accept_dir;
  auto* accept_cmd = app.add_subcommand("accept", "run the acceptance suite (one line per criterion)");
  accept_cmd->add_option("--only", only, "comma-separated criterion ids (default: all)");
  accept_cmd->add_option("--out", accept_dir, "scratch directory (default $BBMLAB_OUTPUT_ROOT/accept)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    for (auto& b : bindings)
      if (b->sub->parsed()) return run_op(*b, out);

    if (ops_cmd->parsed()) {
      for (const auto& op : harness::operations()) {
        out << std::left << std::setw(14) << op.name << std::setw(12) << op.module
            << (op.stochastic ? "stochastic    " : "deterministic ") << op.anchor << "\n    functions:";
        for (const auto& f : op.functions) out << ' ' << f;
        out << '\n';
      }
      return kOk;
    }
    if (run_cmd->parsed()) {
      const auto spec = harness::load_experiment(spec_path);
      const auto rec = harness::run_experiment(spec, force);
      out << "experiment " << spec.name << " (" << spec.operation << ") spec " << rec.spec_hash.substr(0, 16)
          << ": " << rec.cells_run << " run, " << rec.cells_skipped << " skipped, " << rec.failures.size()
          << " failed -> " << spec.output_dir.string() << '\n';
      for (const auto& f : rec.failures) err << "  " << f << '\n';
      return rec.failures.empty() ? kOk : kNumerical;
    }
    if (report_cmd->parsed()) {
      const auto rep = harness::report(report_dir);
      out << rep.text;
      if (rep.empty) return kValidation;
      return rep.all_pass ? kOk : kCheckFailed;
    }
    if (accept_cmd->parsed()) {
      const fs::path dir = accept_dir.empty() ? harness::default_output_root() / "accept" : fs::path(accept_dir);
      const bool ok = acceptance::run_suite(parse_ids(only), dir, out);
      return ok ? kOk : kCheckFailed;
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kValidation;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kValidation;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << " (suggested value " << io::format_double(e.suggestion()) << ")\n";
    return kNumerical;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << " (last estimates " << io::format_double(e.previous_estimate())
        << ", " << io::format_double(e.last_estimate()) << ")\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kValidation;
}

}  // namespace bbm::cli
