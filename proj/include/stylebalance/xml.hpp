#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stylebalance::xml {

// Element tree for the subset of XML that annotation files use: elements,
// attributes, character data, comments, CDATA, processing instructions and the
// five predefined entities plus numeric references. No DTDs, no namespaces.
struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    std::string text;  // concatenated character data directly under this element
    std::size_t offset = 0;  // byte offset of the opening '<'

    const Element* child(std::string_view child_name) const noexcept;
    std::vector<const Element*> children_named(std::string_view child_name) const;
};

/// Parses a complete document and returns its root element.
/// Throws ParseError carrying the byte offset of the first problem.
Element parse(std::string_view document);

std::string escape(std::string_view text);

}  // namespace stylebalance::xml
