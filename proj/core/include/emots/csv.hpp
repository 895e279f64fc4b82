#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace emots {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Minimal RFC-4180 subset: comma-delimited, LF line endings, optional
// double-quoted fields with "" escapes. First line is the header.
CsvTable read_csv(const std::filesystem::path& path);

// Canonical numeric formatting for every CSV this project writes:
// shortest form at 9 significant digits ("%.9g").
std::string format_real(double v);

// Quotes the field only when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

double parse_real(std::string_view cell);  // throws IngestError(parse)
long parse_integer(std::string_view cell);  // throws IngestError(parse)

std::string lowercase_trim(std::string_view s);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace emots
