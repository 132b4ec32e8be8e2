#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenfuse {

// Declarative key/value configuration:
//
//   # comment
//   top_level_key = value
//   [section]
//   key = a, b, c          # comma list
//
// Keys before the first [section] live in the "" section. Section and key
// order is preserved for deterministic round-trips; duplicate keys within a
// section are rejected.
class Config {
public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
    };
    struct Section {
        std::string name;
        std::vector<Entry> entries;

        const Entry* find(std::string_view key) const;
    };

    static Config parse(std::string_view text, std::string_view source_name);
    static Config load(const std::string& path);

    bool has_section(std::string_view name) const;
    // Empty result if section absent.
    const Section& section(std::string_view name) const;
    const std::vector<Section>& sections() const { return sections_; }

    bool has(std::string_view section, std::string_view key) const;
    std::optional<std::string> get(std::string_view section, std::string_view key) const;
    std::string get_or(std::string_view section, std::string_view key, std::string_view fallback) const;
    std::string require(std::string_view section, std::string_view key) const;

    std::int64_t get_int(std::string_view section, std::string_view key, std::int64_t fallback) const;
    double get_double(std::string_view section, std::string_view key, double fallback) const;
    bool get_bool(std::string_view section, std::string_view key, bool fallback) const;
    // Comma-separated list; empty value -> empty list.
    std::vector<std::string> get_list(std::string_view section, std::string_view key) const;

    // Rejects keys outside `known` in the given section (UnknownKey).
    void check_keys(std::string_view section, const std::vector<std::string>& known) const;
    // Rejects sections outside `known` (UnknownSection).
    void check_sections(const std::vector<std::string>& known) const;

    const std::string& source() const { return source_; }

private:
    std::vector<Section> sections_;
    std::string source_;

    Section* find_section(std::string_view name);
    const Section* find_section(std::string_view name) const;
};

std::vector<std::string> split_list(std::string_view value);

}  // namespace scenfuse
