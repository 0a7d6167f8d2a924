#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace adherence::csv {

using Row = std::vector<std::string>;

/// Splits one CSV record. Handles RFC 4180 quoting; embedded newlines are not
/// supported.
Row split_line(std::string_view line);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

/// Reads a header-first CSV file. Blank lines are skipped.
Table read_file(const std::filesystem::path& path);

}  // namespace adherence::csv
