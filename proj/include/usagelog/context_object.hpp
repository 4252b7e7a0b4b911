#pragma once

#include <string>
#include <string_view>

#include "usagelog/model.hpp"
#include "usagelog/xml.hpp"

namespace usagelog {

namespace ns {
inline constexpr std::string_view kCtx = "info:ofi/fmt:xml:xsd:ctx";
inline constexpr std::string_view kJournal = "info:ofi/fmt:xml:xsd:journal";
inline constexpr std::string_view kSchSvc = "info:ofi/fmt:xml:xsd:sch_svc";
inline constexpr std::string_view kXsi = "http://www.w3.org/2001/XMLSchema-instance";
inline constexpr std::string_view kCtxSchema =
    "http://www.openurl.info/registry/docs/xsd/info:ofi/fmt:xml:xsd:ctx";
}  // namespace ns

/// Canonical XML ContextObject document: XML declaration followed by a single
/// `ctx:context-object` element on one line. Fixed prefixes (ctx, jou, sv),
/// fixed attribute and element order, no whitespace between elements, and
/// CR/LF/TAB in character data written as character references, so the
/// output never contains a raw newline.
std::string serialize_context_object(const UsageEvent& event);

/// The `ctx:context-object` element alone, for embedding (OAI-PMH metadata).
std::string serialize_context_object_element(const UsageEvent& event);
void append_context_object_element(std::string& out, const UsageEvent& event);

/// Throws XmlMalformed, MissingIdentifierAttribute or BadTimestamp, each with
/// the line/column of the offending node.
UsageEvent parse_context_object(std::string_view document);
UsageEvent context_object_from_node(const xml::Node& root);

}  // namespace usagelog
