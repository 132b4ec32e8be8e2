#include "scenfuse/csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "scenfuse/common.hpp"

namespace scenfuse {

namespace {

bool needs_quoting(std::string_view cell) {
    return cell.find_first_of(",\"\n\r") != std::string_view::npos;
}

std::string escape_cell(const std::string& cell) {
    if (!needs_quoting(cell)) return cell;
    std::string out;
    out.reserve(cell.size() + 2);
    out.push_back('"');
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Splits one logical record starting at `pos`; advances pos past the record
// terminator. Handles quoted cells spanning newlines.
std::vector<std::string> split_record(const std::string& text, size_t& pos, std::string_view source, size_t line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool in_quotes = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    cell.push_back('"');
                    pos += 2;
                } else {
                    in_quotes = false;
                    ++pos;
                }
            } else {
                cell.push_back(c);
                ++pos;
            }
            continue;
        }
        if (c == '"' && cell.empty()) {
            in_quotes = true;
            ++pos;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
            ++pos;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            cells.push_back(std::move(cell));
            return cells;
        } else {
            cell.push_back(c);
            ++pos;
        }
    }
    if (in_quotes) {
        fail_parse("UnterminatedQuote", std::string(source) + ": line " + std::to_string(line_no) + ": unterminated quoted cell");
    }
    cells.push_back(std::move(cell));
    return cells;
}

}  // namespace

size_t CsvTable::column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return npos;
}

size_t CsvTable::require_column(std::string_view name) const {
    size_t idx = column(name);
    if (idx == npos) {
        fail_parse("MissingColumn", "required column '" + std::string(name) + "' not found in header");
    }
    return idx;
}

CsvTable read_csv(std::istream& in, std::string_view source_name) {
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (in.bad()) fail_io("ReadFailed", "could not read " + std::string(source_name));

    CsvTable table;
    size_t pos = 0;
    size_t line_no = 1;
    bool have_header = false;
    while (pos < text.size()) {
        size_t record_line = line_no;
        auto cells = split_record(text, pos, source_name, record_line);
        ++line_no;
        if (cells.size() == 1 && cells[0].empty()) continue;  // blank line
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) {
        fail_parse("EmptyFile", std::string(source_name) + ": no header row");
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("FileNotFound", "cannot open " + path);
    return read_csv(in, path);
}

std::string csv_join(const std::vector<std::string>& cells) {
    std::string line;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) line.push_back(',');
        line += escape_cell(cells[i]);
    }
    return line;
}

void write_csv(std::ostream& out, const CsvTable& table) {
    out << csv_join(table.header) << '\n';
    for (const auto& row : table.rows) {
        out << csv_join(row) << '\n';
    }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("FileNotWritable", "cannot write " + path);
    write_csv(out, table);
    out.flush();
    if (!out) fail_io("WriteFailed", "error writing " + path);
}

}  // namespace scenfuse
