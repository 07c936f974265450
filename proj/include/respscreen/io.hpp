#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace respscreen {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& contents);

// Minimal RFC 4180 CSV support.
using CsvRow = std::vector<std::string>;

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;

  /// Index of a header column, or -1.
  int column(std::string_view name) const;
};

/// Parses CSV text. Throws `std::invalid_argument` on an unterminated quote or
/// a row whose width differs from the header.
CsvTable parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& fields);

/// printf("%.*g") with the given number of significant digits.
std::string format_double(double v, int significant_digits);

}  // namespace respscreen
