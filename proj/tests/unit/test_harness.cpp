#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bbm/cli.hpp"
#include "bbm/errors.hpp"
#include "bbm/harness.hpp"
#include "bbm/io.hpp"

using namespace bbm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("bbm_harness_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("every subcommand is registered") {
  for (const char* cmd : {"rate", "constants", "centering", "spectrum", "rescale", "weyl", "pde", "barriers",
                          "galerkin", "c0-stability", "fundamental", "kernel-g", "mass", "gtilde", "localization",
                          "alpha2", "bridge", "envelope", "bessel", "simulate", "couple", "discrete", "mto1", "mto2",
                          "porism", "ops", "run", "report", "accept"}) {
    CAPTURE(cmd);
    CHECK(invoke({cmd, "--help"}).code == cli::kOk);
  }
  for (const auto& op : harness::operations()) {
    CHECK_FALSE(op.module.empty());
    CHECK_FALSE(op.anchor.empty());
    CHECK_FALSE(op.functions.empty());
  }
  CHECK(invoke({"no-such-command"}).code == cli::kValidation);
  CHECK(invoke({}).code == cli::kValidation);
}

TEST_CASE("parameter validation maps to exit code 1") {
  const auto dir = scratch("validation");
  CHECK(invoke({"spectrum", "--alpha", "-1", "--out", dir.string()}).code == cli::kValidation);
  CHECK(invoke({"spectrum", "--alpha", "abc", "--out", dir.string()}).code == cli::kValidation);
  CHECK(invoke({"simulate", "--t", "1", "--out", dir.string()}).code == cli::kValidation);  // seed missing
  CHECK(invoke({"rate", "--family", "cubic", "--out", dir.string()}).code == cli::kValidation);
  CHECK_FALSE(fs::exists(dir));
  CHECK_THROWS_AS(harness::resolve_params(harness::find_operation("spectrum"), {{"bogus", "1"}}), ConfigError);
  CHECK_THROWS_AS(harness::run_operation("simulate", {{"t", "1"}}, std::nullopt), ConfigError);
}

TEST_CASE("operation outputs carry a verifiable manifest") {
  const auto dir = scratch("op");
  const auto r = invoke({"spectrum", "--alpha", "2", "--levels", "3", "--out", dir.string()});
  CHECK(r.code == cli::kOk);
  REQUIRE(fs::exists(dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
  REQUIRE(manifest.contains("files"));
  for (const auto& [name, digest] : manifest["files"].items()) CHECK(io::sha256_file(dir / name) == digest);
  const auto summary = nlohmann::json::parse(io::read_file(dir / "summary.json"));
  CHECK(summary.contains("checks"));
  const auto rep = invoke({"report", dir.string()});
  CHECK(rep.code == cli::kOk);
  fs::remove_all(dir);
}

TEST_CASE("stochastic operations are reproducible byte for byte") {
  const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  const std::vector<std::string> args{"simulate", "--t", "3", "--replicates", "2", "--positions"};
  auto with = [&](const fs::path& d, const std::string& seed) {
    auto v = args;
    v.insert(v.end(), {"--seed", seed, "--out", d.string()});
    return invoke(v).code;
  };
  REQUIRE(with(a, "5") == cli::kOk);
  REQUIRE(with(b, "5") == cli::kOk);
  REQUIRE(with(c, "6") == cli::kOk);
  bool any_diff = false;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    CHECK(io::read_file(a / name) == io::read_file(b / name));
    if (name != "summary.json" && name != "manifest.json" && io::read_file(a / name) != io::read_file(c / name))
      any_diff = true;
  }
  CHECK(any_diff);
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("experiment specs") {
  const auto root = scratch("exp");
  fs::create_directories(root);
  const auto out = root / "out";
  const std::string text = "[experiment]\nname = ladder\noperation = constants\nseed = 3\noutput = " + out.string() +
                           "\n\n[params]\nbeta = 1\n\n[ladder]\nalpha = 0.8, 1, 1.5\n";
  io::write_file_atomic(root / "spec.ini", text);

  const auto spec = harness::parse_experiment(text);
  CHECK(harness::expand_cells(spec).size() == 3);
  auto moved = spec;
  moved.output_dir = root / "elsewhere";
  CHECK(harness::spec_hash(moved) == harness::spec_hash(spec));
  auto changed = spec;
  changed.params["beta"] = "2";
  CHECK(harness::spec_hash(changed) != harness::spec_hash(spec));

  auto first = invoke({"run", (root / "spec.ini").string()});
  CHECK(first.code == cli::kOk);
  CHECK(first.out.find("3 run, 0 skipped") != std::string::npos);
  auto second = invoke({"run", (root / "spec.ini").string()});
  CHECK(second.out.find("0 run, 3 skipped") != std::string::npos);
  auto forced = invoke({"run", (root / "spec.ini").string(), "--force"});
  CHECK(forced.out.find("3 run, 0 skipped") != std::string::npos);
  CHECK(fs::exists(out / "experiment.json"));
  CHECK(invoke({"report", out.string()}).code == cli::kOk);

  // tampering with an output is caught by the report and undoes the skip
  fs::path victim;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.path().filename() == "constants.json") victim = e.path();
  REQUIRE_FALSE(victim.empty());
  { std::ofstream(victim, std::ios::app) << "1\n"; }
  const auto rep = invoke({"report", out.string()});
  CHECK(rep.code == cli::kCheckFailed);
  CHECK(rep.out.find("mismatch") != std::string::npos);
  const auto rerun = invoke({"run", (root / "spec.ini").string()});
  CHECK(rerun.out.find("1 run, 2 skipped") != std::string::npos);
  CHECK(invoke({"report", out.string()}).code == cli::kOk);
  fs::remove_all(root);
}

TEST_CASE("invalid experiments are rejected before any output") {
  const auto root = scratch("bad");
  fs::create_directories(root);
  const auto out = root / "out";
  io::write_file_atomic(root / "spec.ini", "[experiment]\nname = bad\noperation = constants\nseed = 1\noutput = " +
                                               out.string() + "\n[ladder]\nalpha = 1, -1\n");
  CHECK(invoke({"run", (root / "spec.ini").string()}).code == cli::kValidation);
  CHECK_FALSE(fs::exists(out));
  CHECK_THROWS_AS(harness::parse_experiment("[experiment]\nname = x\noperation = rate\n"), ConfigError);
  CHECK_THROWS_AS(harness::parse_experiment("[experiment]\nname = x\noperation = rate\nseed = 1\n[extra]\na = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(harness::parse_experiment("[experiment]\nname = x\noperation = rate\nseed = 1\ncolour = red\n"),
                  ConfigError);
  CHECK(invoke({"run", (root / "missing.ini").string()}).code == cli::kValidation);
  fs::remove_all(root);
}

TEST_CASE("report on an empty directory") {
  const auto d = scratch("empty");
  fs::create_directories(d);
  const auto r = harness::report(d);
  CHECK(r.empty);
  CHECK_FALSE(r.all_pass);
  CHECK(invoke({"report", d.string()}).code == cli::kValidation);
  fs::remove_all(d);
}

TEST_CASE("acceptance subcommand rejects bad ids") {
  CHECK(invoke({"accept", "--only", "17"}).code == cli::kValidation);
  CHECK(invoke({"accept", "--only", "1.5"}).code == cli::kValidation);
}
