#include "usagelog/context_object.hpp"

#include <array>
#include <utility>

#include "usagelog/error.hpp"

namespace usagelog {
namespace {

constexpr std::string_view kXmlDecl = R"(<?xml version="1.0" encoding="UTF-8"?>)";

using Field = std::optional<std::string> ReferentMetadata::*;

// Element order inside jou:journal.
constexpr std::array<std::pair<std::string_view, Field>, 10> kJournalFields{{
    {"atitle", &ReferentMetadata::atitle},
    {"jtitle", &ReferentMetadata::jtitle},
    {"date", &ReferentMetadata::date},
    {"volume", &ReferentMetadata::volume},
    {"issue", &ReferentMetadata::issue},
    {"spage", &ReferentMetadata::spage},
    {"epage", &ReferentMetadata::epage},
    {"issn", &ReferentMetadata::issn},
    {"genre", &ReferentMetadata::genre},
    {"doi", &ReferentMetadata::doi},
}};

constexpr std::array<std::pair<std::string_view, ServiceKind>, 4> kServiceNames{{
    {"full-text", ServiceKind::FullText},
    {"abstract", ServiceKind::Abstract},
    {"citation", ServiceKind::Citation},
    {"holding", ServiceKind::Holding},
}};

void leaf(std::string& out, std::string_view qname, std::string_view text) {
  out += '<';
  out += qname;
  out += '>';
  xml::append_escaped_text(out, text);
  out += "</";
  out += qname;
  out += '>';
}

void write_entity(std::string& out, std::string_view tag, const EntityDescriptor& e) {
  out += "<ctx:";
  out += tag;
  if (e.empty()) {
    out += "/>";
    return;
  }
  out += '>';
  for (const auto& id : e.identifiers) leaf(out, "ctx:identifier", id);
  if (e.metadata) {
    out += "<ctx:metadata-by-val><ctx:format>";
    out += ns::kJournal;
    out += "</ctx:format><ctx:metadata>";
    const auto& m = *e.metadata;
    if (m.empty()) {
      out += "<jou:journal/>";
    } else {
      out += "<jou:journal>";
      for (const auto& [name, field] : kJournalFields) {
        if (const auto& v = m.*field) {
          out += "<jou:";
          out += name;
          out += '>';
          xml::append_escaped_text(out, *v);
          out += "</jou:";
          out += name;
          out += '>';
        }
      }
      out += "</jou:journal>";
    }
    out += "</ctx:metadata></ctx:metadata-by-val>";
  }
  if (e.private_data) leaf(out, "ctx:private-data", *e.private_data);
  out += "</ctx:";
  out += tag;
  out += '>';
}

void write_service_type(std::string& out, const ServiceTypeFlags& s) {
  out += "<ctx:service-type><ctx:metadata-by-val><ctx:format>";
  out += ns::kSchSvc;
  out += "</ctx:format><ctx:metadata>";
  for (const auto& [name, kind] : kServiceNames) {
    if (s.kinds.count(kind)) {
      out += "<sv:";
      out += name;
      out += ">yes</sv:";
      out += name;
      out += '>';
    }
  }
  for (const auto& o : s.other) leaf(out, "sv:other", o);
  out += "</ctx:metadata></ctx:metadata-by-val></ctx:service-type>";
}

[[noreturn]] void fail(ErrorCode code, const xml::Node& at, const std::string& what) {
  throw Error(code, "line " + std::to_string(at.line) + ", column " + std::to_string(at.column) +
                        ": " + what);
}

void append_private(EntityDescriptor& e, std::string piece) {
  if (e.private_data)
    *e.private_data += piece;
  else
    e.private_data = std::move(piece);
}

std::string inner_xml(const xml::Node& n) {
  if (!n.has_element_children()) return n.text_content();
  std::string out;
  for (const auto& c : n.children) {
    if (c.is_element())
      out += xml::serialize_fragment(c);
    else
      xml::append_escaped_text(out, c.text);
  }
  return out;
}

void read_journal(const xml::Node& journal, EntityDescriptor& e) {
  ReferentMetadata m;
  for (const auto* c : journal.elements()) {
    bool known = false;
    if (c->ns == ns::kJournal && !c->has_element_children()) {
      for (const auto& [name, field] : kJournalFields) {
        if (c->name == name && !(m.*field)) {
          m.*field = c->text_content();
          known = true;
          break;
        }
      }
    }
    if (!known) append_private(e, xml::serialize_fragment(*c));
  }
  e.metadata = std::move(m);
}

void read_metadata_by_val(const xml::Node& mbv, EntityDescriptor& e) {
  const auto* fmt = mbv.child(ns::kCtx, "format");
  const auto* md = mbv.child(ns::kCtx, "metadata");
  const xml::Node* journal = md ? md->child(ns::kJournal, "journal") : nullptr;
  if (fmt && xml::trim(fmt->text_content()) == ns::kJournal && journal && !e.metadata &&
      md->elements().size() == 1) {
    read_journal(*journal, e);
    return;
  }
  append_private(e, xml::serialize_fragment(mbv));
}

EntityDescriptor read_entity(const xml::Node& node) {
  EntityDescriptor e;
  for (const auto* c : node.elements()) {
    if (c->is(ns::kCtx, "identifier") && !c->has_element_children()) {
      e.identifiers.emplace_back(xml::trim(c->text_content()));
    } else if (c->is(ns::kCtx, "metadata-by-val")) {
      read_metadata_by_val(*c, e);
    } else if (c->is(ns::kCtx, "private-data")) {
      append_private(e, inner_xml(*c));
    } else {
      append_private(e, xml::serialize_fragment(*c));
    }
  }
  return e;
}

// Descriptions outside the sch_svc format are kept verbatim as `other` values.
ServiceTypeFlags read_service_type(const xml::Node& node) {
  ServiceTypeFlags s;
  for (const auto* c : node.elements()) {
    const auto* fmt = c->is(ns::kCtx, "metadata-by-val") ? c->child(ns::kCtx, "format") : nullptr;
    const auto* md = c->is(ns::kCtx, "metadata-by-val") ? c->child(ns::kCtx, "metadata") : nullptr;
    if (!fmt || !md || xml::trim(fmt->text_content()) != ns::kSchSvc) {
      s.other.insert(xml::serialize_fragment(*c));
      continue;
    }
    for (const auto* svc : md->elements()) {
      const std::string value = std::string(xml::trim(svc->text_content()));
      if (svc->ns != ns::kSchSvc && !svc->ns.empty()) {
        s.other.insert(xml::serialize_fragment(*svc));
        continue;
      }
      if (svc->name == "other") {
        s.other.insert(svc->text_content());
        continue;
      }
      bool known = false;
      for (const auto& [name, kind] : kServiceNames) {
        if (svc->name == name) {
          if (value == "yes") s.kinds.insert(kind);
          known = true;
        }
      }
      if (!known && value == "yes") s.other.insert(svc->name);
    }
  }
  return s;
}

}  // namespace

void append_context_object_element(std::string& out, const UsageEvent& e) {
  out += "<ctx:context-object xmlns:ctx=\"";
  out += ns::kCtx;
  out += "\" xmlns:jou=\"";
  out += ns::kJournal;
  out += "\" xmlns:sv=\"";
  out += ns::kSchSvc;
  out += "\" xmlns:xsi=\"";
  out += ns::kXsi;
  out += "\" xsi:schemaLocation=\"";
  out += ns::kCtx;
  out += ' ';
  out += ns::kCtxSchema;
  out += "\" timestamp=\"";
  out += format_utc(e.event_timestamp);
  out += "\" identifier=\"";
  out += e.event_id.urn();
  out += "\">";
  write_entity(out, "referent", e.referent);
  if (e.referring_entity) write_entity(out, "referring-entity", *e.referring_entity);
  if (!e.requester.empty()) write_entity(out, "requester", e.requester);
  if (!e.service_type.empty()) write_service_type(out, e.service_type);
  if (!e.resolver.empty()) write_entity(out, "resolver", e.resolver);
  if (!e.referrer.empty()) write_entity(out, "referrer", e.referrer);
  out += "</ctx:context-object>";
}

std::string serialize_context_object_element(const UsageEvent& event) {
  std::string out;
  out.reserve(1536);
  append_context_object_element(out, event);
  return out;
}

std::string serialize_context_object(const UsageEvent& event) {
  std::string out;
  out.reserve(1600);
  out += kXmlDecl;
  append_context_object_element(out, event);
  return out;
}

UsageEvent context_object_from_node(const xml::Node& root) {
  if (!root.is(ns::kCtx, "context-object"))
    fail(ErrorCode::XmlMalformed, root,
         "root element is {" + root.ns + "}" + root.name + ", expected ctx:context-object");
  UsageEvent e;
  const auto* id = root.attribute("identifier");
  if (!id) fail(ErrorCode::MissingIdentifierAttribute, root, "context-object has no identifier");
  const auto uuid = Uuid::from_urn(xml::trim(*id));
  if (!uuid)
    fail(ErrorCode::MissingIdentifierAttribute, root,
         "identifier '" + *id + "' is not a urn:UUID URN");
  e.event_id = *uuid;
  const auto* ts = root.attribute("timestamp");
  if (!ts) fail(ErrorCode::BadTimestamp, root, "context-object has no timestamp");
  const auto t = parse_utc(xml::trim(*ts));
  if (!t) fail(ErrorCode::BadTimestamp, root, "timestamp '" + *ts + "' is not YYYY-MM-DDThh:mm:ssZ");
  e.event_timestamp = *t;

  for (const auto* c : root.elements()) {
    if (c->ns != ns::kCtx) continue;
    if (c->name == "referent") {
      e.referent = read_entity(*c);
    } else if (c->name == "referring-entity") {
      e.referring_entity = read_entity(*c);
    } else if (c->name == "requester") {
      e.requester = read_entity(*c);
    } else if (c->name == "service-type") {
      e.service_type = read_service_type(*c);
    } else if (c->name == "resolver") {
      e.resolver = read_entity(*c);
    } else if (c->name == "referrer") {
      e.referrer = read_entity(*c);
    }
  }
  return e;
}

UsageEvent parse_context_object(std::string_view document) {
  return context_object_from_node(xml::parse(document));
}

}  // namespace usagelog
