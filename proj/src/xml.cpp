#include "stylebalance/xml.hpp"

#include <charconv>

#include "stylebalance/error.hpp"

namespace stylebalance::xml {

const Element* Element::child(std::string_view child_name) const noexcept {
    for (const auto& c : children) {
        if (c.name == child_name) return &c;
    }
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
        if (c.name == child_name) out.push_back(&c);
    }
    return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.' || c == ':' || static_cast<unsigned char>(c) >= 0x80;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

class Parser {
public:
    explicit Parser(std::string_view doc) : doc_(doc) {}

    Element parse_document() {
        skip_prolog();
        if (at_end() || peek() != '<') fail("expected root element");
        Element root = parse_element();
        skip_misc();
        if (!at_end()) fail("content after root element");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError("malformed XML: " + what, pos_); }

    bool at_end() const { return pos_ >= doc_.size(); }
    char peek() const { return doc_[pos_]; }
    bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

    void skip_space() {
        while (!at_end() && is_space(peek())) ++pos_;
    }

    void skip_until(std::string_view terminator, const char* what) {
        const auto end = doc_.find(terminator, pos_);
        if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
        pos_ = end + terminator.size();
    }

    // Comments, processing instructions and whitespace outside the root.
    void skip_misc() {
        for (;;) {
            skip_space();
            if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else {
                return;
            }
        }
    }

    void skip_prolog() {
        if (starts_with("\xEF\xBB\xBF")) pos_ += 3;
        skip_misc();
        if (starts_with("<!DOCTYPE")) {
            skip_until(">", "doctype");
            skip_misc();
        }
    }

    std::string parse_name() {
        const auto start = pos_;
        while (!at_end() && is_name_char(peek())) ++pos_;
        if (pos_ == start) fail("expected a name");
        return std::string(doc_.substr(start, pos_ - start));
    }

    void decode_entity(std::string& out) {
        const auto start = pos_;
        const auto semi = doc_.find(';', pos_);
        if (semi == std::string_view::npos || semi - pos_ > 12) fail("unterminated entity reference");
        const auto ref = doc_.substr(pos_ + 1, semi - pos_ - 1);
        pos_ = semi + 1;
        if (ref == "amp") out += '&';
        else if (ref == "lt") out += '<';
        else if (ref == "gt") out += '>';
        else if (ref == "quot") out += '"';
        else if (ref == "apos") out += '\'';
        else if (!ref.empty() && ref.front() == '#') {
            std::uint32_t cp = 0;
            const bool hex = ref.size() > 1 && (ref[1] == 'x' || ref[1] == 'X');
            const auto digits = ref.substr(hex ? 2 : 1);
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
            if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty() || cp > 0x10FFFF) {
                pos_ = start;
                fail("bad character reference");
            }
            append_utf8(out, cp);
        } else {
            pos_ = start;
            fail("unknown entity '&" + std::string(ref) + ";'");
        }
    }

    std::string parse_attribute_value() {
        if (at_end() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        const char quote = peek();
        ++pos_;
        std::string value;
        while (!at_end() && peek() != quote) {
            if (peek() == '<') fail("'<' in attribute value");
            if (peek() == '&') {
                decode_entity(value);
            } else {
                value += peek();
                ++pos_;
            }
        }
        if (at_end()) fail("unterminated attribute value");
        ++pos_;
        return value;
    }

    Element parse_element() {
        Element element;
        element.offset = pos_;
        ++pos_;  // '<'
        element.name = parse_name();
        for (;;) {
            const bool had_space = !at_end() && is_space(peek());
            skip_space();
            if (at_end()) fail("unterminated start tag <" + element.name + ">");
            if (starts_with("/>")) {
                pos_ += 2;
                return element;
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            if (!had_space) fail("expected whitespace before attribute");
            std::string key = parse_name();
            skip_space();
            if (at_end() || peek() != '=') fail("expected '=' after attribute name");
            ++pos_;
            skip_space();
            element.attributes.emplace_back(std::move(key), parse_attribute_value());
        }
        parse_content(element);
        return element;
    }

    void parse_content(Element& element) {
        for (;;) {
            if (at_end()) {
                pos_ = element.offset;
                fail("element <" + element.name + "> is never closed");
            }
            const char c = peek();
            if (c == '<') {
                if (starts_with("</")) {
                    const auto close_at = pos_;
                    pos_ += 2;
                    const auto name = parse_name();
                    if (name != element.name) {
                        pos_ = close_at;
                        fail("closing tag </" + name + "> does not match <" + element.name + ">");
                    }
                    skip_space();
                    if (at_end() || peek() != '>') fail("expected '>'");
                    ++pos_;
                    return;
                }
                if (starts_with("<!--")) {
                    skip_until("-->", "comment");
                } else if (starts_with("<![CDATA[")) {
                    pos_ += 9;
                    const auto end = doc_.find("]]>", pos_);
                    if (end == std::string_view::npos) fail("unterminated CDATA section");
                    element.text.append(doc_.substr(pos_, end - pos_));
                    pos_ = end + 3;
                } else if (starts_with("<?")) {
                    skip_until("?>", "processing instruction");
                } else {
                    element.children.push_back(parse_element());
                }
            } else if (c == '&') {
                decode_entity(element.text);
            } else {
                element.text += c;
                ++pos_;
            }
        }
    }

    std::string_view doc_;
    std::size_t pos_ = 0;
};

}  // namespace

Element parse(std::string_view document) { return Parser(document).parse_document(); }

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace stylebalance::xml
