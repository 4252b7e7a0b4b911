#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace usagelog::xml {

struct Attribute {
  std::string ns;  // namespace URI, empty when unqualified
  std::string name;
  std::string value;
};

/// Namespace-resolved DOM node. Text nodes carry `text`; element nodes carry
/// the rest. Prefixes are not retained: identity is (namespace URI, local name).
struct Node {
  enum class Kind { Element, Text };

  Kind kind = Kind::Element;
  std::string ns;
  std::string name;
  std::vector<Attribute> attributes;
  std::vector<Node> children;
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;

  bool is_element() const { return kind == Kind::Element; }
  bool is(std::string_view ns_uri, std::string_view local) const {
    return is_element() && ns == ns_uri && name == local;
  }
  const Node* child(std::string_view ns_uri, std::string_view local) const;
  const std::string* attribute(std::string_view local, std::string_view ns_uri = {}) const;
  /// Concatenated direct text children.
  std::string text_content() const;
  bool has_element_children() const;
  std::vector<const Node*> elements() const;
};

/// Throws Error(XmlMalformed) with the line and column of the failure.
Node parse(std::string_view document);

void append_escaped_text(std::string& out, std::string_view s);
void append_escaped_attr(std::string& out, std::string_view s);
std::string escape_text(std::string_view s);

/// Self-contained single-line serialization of an element subtree. Namespaces
/// are declared inline as default namespaces where they change; namespaced
/// attributes get generated `a<N>` prefixes. No insignificant whitespace.
std::string serialize_fragment(const Node& element);

std::string_view trim(std::string_view s);

}  // namespace usagelog::xml
