#include "scenfuse/xmlmini.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "scenfuse/common.hpp"

namespace scenfuse {

XmlNode& XmlNode::set(std::string key, std::string value) {
    attributes.emplace_back(std::move(key), std::move(value));
    return *this;
}

const std::string* XmlNode::attr(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
        if (k == key) return &v;
    }
    return nullptr;
}

const std::string& XmlNode::require_attr(std::string_view key) const {
    const std::string* value = attr(key);
    if (!value) {
        fail_parse("MissingAttribute", "element <" + name + "> lacks attribute '" + std::string(key) + "'");
    }
    return *value;
}

XmlNode& XmlNode::add_child(std::string element_name) {
    children.emplace_back(std::move(element_name));
    return children.back();
}

const XmlNode* XmlNode::find(std::string_view element_name) const {
    for (const auto& child : children) {
        if (child.name == element_name) return &child;
    }
    return nullptr;
}

const XmlNode& XmlNode::require(std::string_view element_name) const {
    const XmlNode* child = find(element_name);
    if (!child) {
        fail_parse("MissingElement", "element <" + name + "> lacks child <" + std::string(element_name) + ">");
    }
    return *child;
}

std::vector<const XmlNode*> XmlNode::find_all(std::string_view element_name) const {
    std::vector<const XmlNode*> out;
    for (const auto& child : children) {
        if (child.name == element_name) out.push_back(&child);
    }
    return out;
}

namespace {

void escape_into(std::string& out, std::string_view text, bool attribute) {
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (attribute) {
                    out += "&quot;";
                } else {
                    out.push_back(c);
                }
                break;
            default: out.push_back(c);
        }
    }
}

void write_node(std::string& out, const XmlNode& node, int depth) {
    out.append(static_cast<size_t>(depth) * 2, ' ');
    out.push_back('<');
    out += node.name;
    for (const auto& [key, value] : node.attributes) {
        out.push_back(' ');
        out += key;
        out += "=\"";
        escape_into(out, value, true);
        out.push_back('"');
    }
    if (node.children.empty() && node.text.empty()) {
        out += "/>\n";
        return;
    }
    if (node.children.empty()) {
        out.push_back('>');
        escape_into(out, node.text, false);
        out += "</";
        out += node.name;
        out += ">\n";
        return;
    }
    out += ">\n";
    for (const auto& child : node.children) write_node(out, child, depth + 1);
    out.append(static_cast<size_t>(depth) * 2, ' ');
    out += "</";
    out += node.name;
    out += ">\n";
}

class XmlParser {
public:
    XmlParser(std::string_view text, std::string_view source) : text_(text), source_(source) {}

    XmlNode parse_document() {
        skip_space();
        if (starts_with("<?xml")) {
            size_t end = text_.find("?>", pos_);
            if (end == std::string_view::npos) fail("unterminated XML declaration");
            pos_ = end + 2;
        }
        skip_misc();
        if (pos_ >= text_.size() || text_[pos_] != '<') fail("expected a root element");
        XmlNode root = parse_element();
        skip_misc();
        if (pos_ != text_.size()) fail("trailing content after the root element");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) {
        fail_parse("BadXml", std::string(source_) + ": " + what + " at offset " + std::to_string(pos_));
    }

    bool starts_with(std::string_view prefix) const {
        return text_.substr(pos_, prefix.size()) == prefix;
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    // Whitespace and comments between elements.
    void skip_misc() {
        for (;;) {
            skip_space();
            if (starts_with("<!--")) {
                size_t end = text_.find("-->", pos_ + 4);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            return;
        }
    }

    std::string parse_name() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                text_[pos_] == '-' || text_[pos_] == '.' || text_[pos_] == ':')) {
            ++pos_;
        }
        if (pos_ == start) fail("expected a name");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string parse_entity() {
        size_t end = text_.find(';', pos_);
        if (end == std::string_view::npos) fail("unterminated entity");
        std::string_view entity = text_.substr(pos_, end - pos_);
        pos_ = end + 1;
        if (entity == "&amp") return "&";
        if (entity == "&lt") return "<";
        if (entity == "&gt") return ">";
        if (entity == "&quot") return "\"";
        if (entity == "&apos") return "'";
        fail("unknown entity '" + std::string(entity) + ";'");
    }

    std::string parse_attr_value() {
        char quote = text_[pos_];
        if (quote != '"' && quote != '\'') fail("expected a quoted attribute value");
        ++pos_;
        std::string value;
        while (pos_ < text_.size() && text_[pos_] != quote) {
            if (text_[pos_] == '&') {
                value += parse_entity();
            } else if (text_[pos_] == '<') {
                fail("raw '<' in attribute value");
            } else {
                value.push_back(text_[pos_]);
                ++pos_;
            }
        }
        if (pos_ >= text_.size()) fail("unterminated attribute value");
        ++pos_;
        return value;
    }

    XmlNode parse_element() {
        ++pos_;  // consume '<'
        XmlNode node(parse_name());
        for (;;) {
            skip_space();
            if (pos_ >= text_.size()) fail("unterminated element <" + node.name + ">");
            if (starts_with("/>")) {
                pos_ += 2;
                return node;
            }
            if (text_[pos_] == '>') {
                ++pos_;
                break;
            }
            std::string key = parse_name();
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != '=') fail("expected '=' after attribute name");
            ++pos_;
            skip_space();
            node.set(std::move(key), parse_attr_value());
        }
        // Content: children, text, or both interleaved with comments.
        std::string text_content;
        for (;;) {
            if (pos_ >= text_.size()) fail("unterminated element <" + node.name + ">");
            if (starts_with("<!--")) {
                size_t end = text_.find("-->", pos_ + 4);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            if (starts_with("</")) {
                pos_ += 2;
                std::string closing = parse_name();
                if (closing != node.name) {
                    fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
                }
                skip_space();
                if (pos_ >= text_.size() || text_[pos_] != '>') fail("malformed closing tag");
                ++pos_;
                break;
            }
            if (text_[pos_] == '<') {
                node.children.push_back(parse_element());
                continue;
            }
            if (text_[pos_] == '&') {
                text_content += parse_entity();
                continue;
            }
            text_content.push_back(text_[pos_]);
            ++pos_;
        }
        if (node.children.empty()) {
            node.text = std::move(text_content);
        }
        return node;
    }

    std::string_view text_;
    std::string_view source_;
    size_t pos_ = 0;
};

}  // namespace

std::string write_xml(const XmlNode& root) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    write_node(out, root, 0);
    return out;
}

void write_xml_file(const std::string& path, const XmlNode& root) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("FileNotWritable", "cannot write " + path);
    out << write_xml(root);
    if (!out) fail_io("FileNotWritable", "error writing " + path);
}

XmlNode parse_xml(std::string_view text, std::string_view source_name) {
    return XmlParser(text, source_name).parse_document();
}

XmlNode parse_xml_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("FileNotFound", "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_xml(buffer.str(), path);
}

}  // namespace scenfuse
