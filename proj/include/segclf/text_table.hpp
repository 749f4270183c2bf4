#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace segclf {

/// One comma-delimited record together with its 1-based line number in the source file.
struct TextRow {
    std::size_t line = 0;
    std::vector<std::string> cells;
};

/// Header plus body of a comma-delimited text file. Blank lines are skipped and
/// cells are trimmed of surrounding whitespace.
struct TextTable {
    std::filesystem::path source;
    std::vector<std::string> header;
    std::vector<TextRow> rows;
};

TextTable read_text_table(const std::filesystem::path& path);

std::vector<std::string> split_cells(std::string_view line);

/// Parses a decimal number (optionally in scientific notation). Throws DataError
/// mentioning `where` for anything that is not a finite real.
double parse_real(std::string_view cell, std::string_view where);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_real(double value);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

/// Writes the whole content to a sibling temporary file and renames it into place,
/// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace segclf
