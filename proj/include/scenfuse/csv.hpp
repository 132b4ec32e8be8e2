#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace scenfuse {

// Comma-separated UTF-8 tables with a header row. Cells containing commas,
// quotes, or newlines are double-quoted on write and unquoted on read.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column, or npos.
    static constexpr size_t npos = static_cast<size_t>(-1);
    size_t column(std::string_view name) const;
    // Throws MissingColumn if absent.
    size_t require_column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in, std::string_view source_name);
CsvTable read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

// One already-split row -> escaped line (no trailing newline).
std::string csv_join(const std::vector<std::string>& cells);

}  // namespace scenfuse
