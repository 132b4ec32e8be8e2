#include "scenfuse/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "scenfuse/common.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

namespace {

std::string_view strip_comment(std::string_view line) {
    size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    return line;
}

}  // namespace

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= value.size()) {
        size_t comma = value.find(',', start);
        std::string_view item =
            comma == std::string_view::npos ? value.substr(start) : value.substr(start, comma - start);
        item = trim(item);
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

const Config::Entry* Config::Section::find(std::string_view key) const {
    for (const auto& e : entries) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

Config Config::parse(std::string_view text, std::string_view source_name) {
    Config cfg;
    cfg.source_ = std::string(source_name);
    cfg.sections_.push_back(Section{"", {}});
    Section* current = &cfg.sections_.back();

    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view raw =
            nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        std::string_view line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                fail_parse("BadSectionHeader",
                           std::string(source_name) + ":" + std::to_string(line_no) + ": expected ']'");
            }
            std::string name(trim(line.substr(1, line.size() - 2)));
            if (cfg.find_section(name)) {
                fail_parse("DuplicateSection",
                           std::string(source_name) + ":" + std::to_string(line_no) + ": section [" + name +
                               "] declared twice");
            }
            cfg.sections_.push_back(Section{name, {}});
            current = &cfg.sections_.back();
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            fail_parse("BadEntry",
                       std::string(source_name) + ":" + std::to_string(line_no) + ": expected key = value");
        }
        Entry entry;
        entry.key = std::string(trim(line.substr(0, eq)));
        entry.value = std::string(trim(line.substr(eq + 1)));
        entry.line = line_no;
        if (entry.key.empty()) {
            fail_parse("BadEntry", std::string(source_name) + ":" + std::to_string(line_no) + ": empty key");
        }
        if (current->find(entry.key)) {
            fail_parse("DuplicateKey",
                       std::string(source_name) + ":" + std::to_string(line_no) + ": key '" + entry.key +
                           "' declared twice in [" + current->name + "]");
        }
        current->entries.push_back(std::move(entry));
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("FileNotFound", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

Config::Section* Config::find_section(std::string_view name) {
    for (auto& s : sections_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

const Config::Section* Config::find_section(std::string_view name) const {
    for (const auto& s : sections_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

bool Config::has_section(std::string_view name) const { return find_section(name) != nullptr; }

const Config::Section& Config::section(std::string_view name) const {
    static const Section empty{};
    const Section* s = find_section(name);
    return s ? *s : empty;
}

bool Config::has(std::string_view section_name, std::string_view key) const {
    const Section* s = find_section(section_name);
    return s && s->find(key);
}

std::optional<std::string> Config::get(std::string_view section_name, std::string_view key) const {
    const Section* s = find_section(section_name);
    if (!s) return std::nullopt;
    const Entry* e = s->find(key);
    if (!e) return std::nullopt;
    return e->value;
}

std::string Config::get_or(std::string_view section_name, std::string_view key, std::string_view fallback) const {
    auto v = get(section_name, key);
    return v ? *v : std::string(fallback);
}

std::string Config::require(std::string_view section_name, std::string_view key) const {
    auto v = get(section_name, key);
    if (!v) {
        fail_validation("MissingKey", source_ + ": missing required key '" + std::string(key) + "' in [" +
                                          std::string(section_name) + "]");
    }
    return *v;
}

std::int64_t Config::get_int(std::string_view section_name, std::string_view key, std::int64_t fallback) const {
    auto v = get(section_name, key);
    if (!v) return fallback;
    return require_int(*v, std::string(section_name) + "." + std::string(key));
}

double Config::get_double(std::string_view section_name, std::string_view key, double fallback) const {
    auto v = get(section_name, key);
    if (!v) return fallback;
    return require_double(*v, std::string(section_name) + "." + std::string(key));
}

bool Config::get_bool(std::string_view section_name, std::string_view key, bool fallback) const {
    auto v = get(section_name, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    fail_parse("TypeMismatch", source_ + ": key '" + std::string(key) + "' is not a boolean: '" + *v + "'");
}

std::vector<std::string> Config::get_list(std::string_view section_name, std::string_view key) const {
    auto v = get(section_name, key);
    if (!v) return {};
    return split_list(*v);
}

void Config::check_keys(std::string_view section_name, const std::vector<std::string>& known) const {
    const Section* s = find_section(section_name);
    if (!s) return;
    for (const auto& e : s->entries) {
        if (std::find(known.begin(), known.end(), e.key) == known.end()) {
            fail_validation("UnknownKey", source_ + ":" + std::to_string(e.line) + ": unknown key '" + e.key +
                                              "' in [" + std::string(section_name) + "]");
        }
    }
}

void Config::check_sections(const std::vector<std::string>& known) const {
    for (const auto& s : sections_) {
        if (s.name.empty() && s.entries.empty()) continue;
        if (std::find(known.begin(), known.end(), s.name) == known.end()) {
            fail_validation("UnknownSection", source_ + ": unknown section [" + s.name + "]");
        }
    }
}

}  // namespace scenfuse
