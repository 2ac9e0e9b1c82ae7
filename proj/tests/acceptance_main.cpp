// Acceptance suite driver: `acceptance [id ...]` runs the listed criteria (all when
// none are given) and prints one PASS/FAIL line per criterion.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bbm/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.empty() || arg.find_first_not_of("0123456789") != std::string::npos) {
      std::cerr << "usage: acceptance [criterion-id ...]\n";
      return arg == "-h" || arg == "--help" ? 0 : 1;
    }
    ids.push_back(std::stoi(arg));
  }
  const auto scratch = std::filesystem::temp_directory_path() / ("bbmlab-accept-" + std::to_string(::getpid()));
  const bool ok = bbm::acceptance::run_suite(ids, scratch, std::cout);
  std::filesystem::remove_all(scratch);
  return ok ? 0 : 3;
}
