#include "usagelog/xml.hpp"

#include <expat.h>

#include <memory>

#include "usagelog/error.hpp"

namespace usagelog::xml {
namespace {

constexpr char kSep = '\x1F';

void split_name(const char* qname, std::string& ns, std::string& local) {
  std::string_view q(qname);
  const auto pos = q.find(kSep);
  if (pos == std::string_view::npos) {
    ns.clear();
    local.assign(q);
  } else {
    ns.assign(q.substr(0, pos));
    local.assign(q.substr(pos + 1));
  }
}

struct Builder {
  XML_Parser parser = nullptr;
  Node root;
  bool have_root = false;
  std::vector<Node*> stack;

  static void on_start(void* ud, const XML_Char* name, const XML_Char** atts) {
    auto* b = static_cast<Builder*>(ud);
    Node n;
    split_name(name, n.ns, n.name);
    n.line = XML_GetCurrentLineNumber(b->parser);
    n.column = XML_GetCurrentColumnNumber(b->parser) + 1;
    for (std::size_t i = 0; atts[i]; i += 2) {
      Attribute a;
      split_name(atts[i], a.ns, a.name);
      a.value = atts[i + 1];
      n.attributes.push_back(std::move(a));
    }
    if (b->stack.empty()) {
      b->root = std::move(n);
      b->have_root = true;
      b->stack.push_back(&b->root);
    } else {
      auto& kids = b->stack.back()->children;
      kids.push_back(std::move(n));
      b->stack.push_back(&kids.back());
    }
  }

  static void on_end(void* ud, const XML_Char*) { static_cast<Builder*>(ud)->stack.pop_back(); }

  static void on_text(void* ud, const XML_Char* s, int len) {
    auto* b = static_cast<Builder*>(ud);
    if (b->stack.empty()) return;
    auto& kids = b->stack.back()->children;
    if (!kids.empty() && kids.back().kind == Node::Kind::Text) {
      kids.back().text.append(s, static_cast<std::size_t>(len));
    } else {
      Node t;
      t.kind = Node::Kind::Text;
      t.text.assign(s, static_cast<std::size_t>(len));
      kids.push_back(std::move(t));
    }
  }
};

struct ParserDeleter {
  void operator()(XML_Parser p) const { XML_ParserFree(p); }
};

}  // namespace

const Node* Node::child(std::string_view ns_uri, std::string_view local) const {
  for (const auto& c : children)
    if (c.is(ns_uri, local)) return &c;
  return nullptr;
}

const std::string* Node::attribute(std::string_view local, std::string_view ns_uri) const {
  for (const auto& a : attributes)
    if (a.name == local && a.ns == ns_uri) return &a.value;
  return nullptr;
}

std::string Node::text_content() const {
  std::string out;
  for (const auto& c : children)
    if (c.kind == Kind::Text) out += c.text;
  return out;
}

bool Node::has_element_children() const {
  for (const auto& c : children)
    if (c.is_element()) return true;
  return false;
}

std::vector<const Node*> Node::elements() const {
  std::vector<const Node*> out;
  for (const auto& c : children)
    if (c.is_element()) out.push_back(&c);
  return out;
}

Node parse(std::string_view document) {
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, ParserDeleter> parser(
      XML_ParserCreateNS("UTF-8", kSep));
  if (!parser) throw Error(ErrorCode::XmlMalformed, "cannot allocate XML parser");
  Builder b;
  b.parser = parser.get();
  XML_SetUserData(parser.get(), &b);
  XML_SetElementHandler(parser.get(), &Builder::on_start, &Builder::on_end);
  XML_SetCharacterDataHandler(parser.get(), &Builder::on_text);
  // Nodes are addressed through `stack`, so children vectors must not be
  // reallocated under a live pointer: every push happens on the innermost
  // element, whose ancestors are not modified until it closes.
  if (XML_Parse(parser.get(), document.data(), static_cast<int>(document.size()), 1) ==
      XML_STATUS_ERROR) {
    throw Error(ErrorCode::XmlMalformed,
                "line " + std::to_string(XML_GetCurrentLineNumber(parser.get())) + ", column " +
                    std::to_string(XML_GetCurrentColumnNumber(parser.get()) + 1) + ": " +
                    XML_ErrorString(XML_GetErrorCode(parser.get())));
  }
  if (!b.have_root) throw Error(ErrorCode::XmlMalformed, "line 1, column 1: no root element");
  return std::move(b.root);
}

void append_escaped_text(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '\r': out += "&#13;"; break;
      case '\n': out += "&#10;"; break;
      case '\t': out += "&#9;"; break;
      default: out.push_back(c);
    }
  }
}

void append_escaped_attr(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '"': out += "&quot;"; break;
      default: {
        char one[1] = {c};
        append_escaped_text(out, std::string_view(one, 1));
      }
    }
  }
}

std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  append_escaped_text(out, s);
  return out;
}

namespace {

void write_fragment(std::string& out, const Node& n, const std::string& parent_default_ns) {
  if (n.kind == Node::Kind::Text) {
    append_escaped_text(out, n.text);
    return;
  }
  out += '<';
  out += n.name;
  if (n.ns != parent_default_ns) {
    out += " xmlns=\"";
    append_escaped_attr(out, n.ns);
    out += '"';
  }
  int prefix_no = 0;
  for (const auto& a : n.attributes) {
    if (a.ns.empty()) {
      out += ' ' + a.name + "=\"";
    } else {
      const std::string p = "a" + std::to_string(prefix_no++);
      out += " xmlns:" + p + "=\"";
      append_escaped_attr(out, a.ns);
      out += "\" " + p + ':' + a.name + "=\"";
    }
    append_escaped_attr(out, a.value);
    out += '"';
  }
  if (n.children.empty()) {
    out += "/>";
    return;
  }
  out += '>';
  for (const auto& c : n.children) write_fragment(out, c, n.ns);
  out += "</" + n.name + '>';
}

}  // namespace

std::string serialize_fragment(const Node& element) {
  std::string out;
  // Sentinel parent namespace forces a declaration on the fragment root.
  write_fragment(out, element, element.ns.empty() ? std::string("\x01") : std::string());
  return out;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace usagelog::xml
