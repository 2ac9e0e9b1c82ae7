#pragma once

// Locale-independent number formatting, CSV/JSON writers and file digests.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bbm::io {

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);

/// Strict decimal parse (no locale, no trailing garbage).
double parse_double(std::string_view text);

/// Comma separator, '.' decimal, LF line endings, mandatory header.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::span<const double> values);
  void add_row(const std::vector<std::string>& cells);
  std::string str() const;
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// JSON text with sorted keys and shortest round-trip doubles.
std::string dump_json(const nlohmann::json& value);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace bbm::io
