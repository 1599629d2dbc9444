#pragma once

// Line-oriented text helpers shared by the file readers.

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace va::detail {

std::string_view trim(std::string_view s);

struct TableRow {
    std::size_t line = 0;  // 1-based source line
    std::vector<std::string> cells;
};

// Reads a comma- or tab-delimited table. The delimiter is a tab when the
// first non-blank line contains one, a comma otherwise. Blank lines are
// skipped, cells are trimmed, CR line endings are tolerated.
std::vector<TableRow> read_table(std::istream& in);

}  // namespace va::detail
