#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dampcert/linalg.hpp"

namespace dampcert {

// Shortest decimal string that parses back to the same double.
// Non-finite values print as nan, inf, -inf.
std::string format_double(double x);

// Throws ParseError mentioning `what` on malformed or partial input.
double parse_double(std::string_view text, std::string_view what = "number");
long long parse_int(std::string_view text, std::string_view what = "integer");

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Matrix format: "rows cols" header line, then whitespace-separated entries
// in row-major order, one row per line, newline-terminated.
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws ParseError if absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

std::string render_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

// MissingInput if the file does not exist, IoError on other failures.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace dampcert
