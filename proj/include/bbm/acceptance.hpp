#pragma once

// The acceptance suite: sixteen end-to-end criteria, each printing one line.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace bbm::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<int> criterion_ids();
std::string criterion_title(int id);

/// `scratch` receives any files the criterion writes (criterion 16 uses it).
CriterionResult run_criterion(int id, const std::filesystem::path& scratch);

/// "PASS  05  title: detail  (1.2 s)".
std::string format_line(const CriterionResult& r);

/// Runs the given criteria (all when empty), printing a line as each finishes.
/// Returns true when every criterion passed.
bool run_suite(const std::vector<int>& ids, const std::filesystem::path& scratch, std::ostream& out);

}  // namespace bbm::acceptance
