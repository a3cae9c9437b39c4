#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace npulse {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

/// Exact inverse of format_double; throws FormatError on trailing garbage.
double parse_double(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Numeric table with `# key: value` metadata lines ahead of the header row.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Metadata value for `key`, or empty.
  [[nodiscard]] std::string meta_value(std::string_view key) const;
  /// Index of a header column; throws FormatError when absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace npulse
