#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scenfuse {

// Minimal XML subset shared by the scenario and road emitters: elements,
// ordered attributes, nested children, and leaf text. No namespaces, DTDs,
// CDATA, or processing instructions beyond the leading declaration.
// Serialization is deterministic byte-for-byte: two-space indent, attributes
// in insertion order, "\n" newlines.
struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<XmlNode> children;
    std::string text;  // only meaningful for childless elements

    XmlNode() = default;
    explicit XmlNode(std::string element_name) : name(std::move(element_name)) {}

    XmlNode& set(std::string key, std::string value);
    const std::string* attr(std::string_view key) const;
    // Attribute that must exist; throws MissingAttribute.
    const std::string& require_attr(std::string_view key) const;

    XmlNode& add_child(std::string element_name);
    const XmlNode* find(std::string_view element_name) const;
    const XmlNode& require(std::string_view element_name) const;  // throws MissingElement
    std::vector<const XmlNode*> find_all(std::string_view element_name) const;
};

// Document text with the XML declaration prepended.
std::string write_xml(const XmlNode& root);
void write_xml_file(const std::string& path, const XmlNode& root);

// Errors: BadXml on anything outside the subset.
XmlNode parse_xml(std::string_view text, std::string_view source_name);
XmlNode parse_xml_file(const std::string& path);

}  // namespace scenfuse
