#include "text_io.hpp"

namespace va::detail {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<TableRow> read_table(std::istream& in) {
    std::vector<TableRow> rows;
    std::string line;
    std::size_t line_no = 0;
    char delim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (delim == 0) delim = line.find('\t') != std::string::npos ? '\t' : ',';
        TableRow row;
        row.line = line_no;
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find(delim, start);
            const auto cell = std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start);
            row.cells.emplace_back(trim(cell));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace va::detail
