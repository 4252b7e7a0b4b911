#include "usagelog/oai_provider.hpp"

#include <set>

#include "usagelog/context_object.hpp"
#include "usagelog/error.hpp"
#include "usagelog/xml.hpp"

namespace usagelog {

void RepositoryConfig::validate() const {
  if (page_size < 1) throw Error(ErrorCode::InvalidConfig, "page_size must be at least 1");
  const bool http = base_url.rfind("http://", 0) == 0 && base_url.size() > 7;
  const bool https = base_url.rfind("https://", 0) == 0 && base_url.size() > 8;
  if (!http && !https)
    throw Error(ErrorCode::InvalidConfig, "base_url '" + base_url + "' is not an absolute http(s) URL");
}

namespace {

struct OaiError {
  std::string code;
  std::string message;
};

void open_envelope(std::string& out, UtcTime now) {
  out += R"(<?xml version="1.0" encoding="UTF-8"?>)";
  out += "<OAI-PMH xmlns=\"";
  out += oai::kNamespace;
  out += R"(" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation=")";
  out += oai::kSchemaLocation;
  out += "\"><responseDate>";
  out += format_utc(now);
  out += "</responseDate>";
}

void leaf(std::string& out, std::string_view tag, std::string_view text) {
  out += '<';
  out += tag;
  out += '>';
  xml::append_escaped_text(out, text);
  out += "</";
  out += tag;
  out += '>';
}

}  // namespace

struct OaiProvider::Request {
  std::string verb;
  std::map<std::string, std::string> args;  // excluding verb

  const std::string* get(const std::string& k) const {
    auto it = args.find(k);
    return it == args.end() ? nullptr : &it->second;
  }
};

OaiProvider::OaiProvider(const EventStore& store, RepositoryConfig config, std::string token_key,
                         Clock clock)
    : store_(store), config_(std::move(config)), token_key_(std::move(token_key)),
      clock_(std::move(clock)) {
  config_.validate();
  if (token_key_.empty()) throw Error(ErrorCode::InvalidConfig, "resumption token key is empty");
}

ProvenanceFilter OaiProvider::exposed() const {
  return config_.expose_harvested ? ProvenanceFilter::Any : ProvenanceFilter::LocalOnly;
}

OaiResponse OaiProvider::handle(std::string_view verb, const OaiParams& params) const {
  OaiParams all = params;
  all.erase("verb");
  all.emplace("verb", std::string(verb));
  return handle(all);
}

OaiResponse OaiProvider::handle(const OaiParams& params) const {
  const UtcTime now = clock_();
  std::string out;
  out.reserve(4096);
  open_envelope(out, now);

  auto error_response = [&](const OaiError& e, const Request* echo) {
    out += "<request";
    if (echo) {
      out += " verb=\"" + echo->verb + "\"";
      for (const auto& [k, v] : echo->args) {
        out += ' ' + k + "=\"";
        xml::append_escaped_attr(out, v);
        out += '"';
      }
    }
    out += '>';
    xml::append_escaped_text(out, config_.base_url);
    out += "</request><error code=\"" + e.code + "\">";
    xml::append_escaped_text(out, e.message);
    out += "</error></OAI-PMH>";
    return OaiResponse{200, std::move(out)};
  };

  Request r;
  {
    const auto n = params.count("verb");
    if (n != 1)
      return error_response({"badVerb", n == 0 ? "missing verb argument" : "verb argument repeated"},
                            nullptr);
    r.verb = params.find("verb")->second;
  }
  static const std::map<std::string, std::set<std::string>, std::less<>> allowed{
      {"Identify", {}},
      {"ListMetadataFormats", {"identifier"}},
      {"ListSets", {"resumptionToken"}},
      {"GetRecord", {"identifier", "metadataPrefix"}},
      {"ListIdentifiers", {"from", "until", "metadataPrefix", "set", "resumptionToken"}},
      {"ListRecords", {"from", "until", "metadataPrefix", "set", "resumptionToken"}},
  };
  auto verb_it = allowed.find(r.verb);
  if (verb_it == allowed.end())
    return error_response({"badVerb", "illegal OAI verb '" + r.verb + "'"}, nullptr);
  for (const auto& [k, v] : params) {
    if (k == "verb") continue;
    if (!verb_it->second.count(k))
      return error_response({"badArgument", "illegal argument '" + k + "' for " + r.verb}, nullptr);
    if (params.count(k) > 1)
      return error_response({"badArgument", "argument '" + k + "' repeated"}, nullptr);
    r.args[k] = v;
  }

  try {
    std::string body;
    if (r.verb == "Identify") {
      identify(r, body);
    } else if (r.verb == "ListMetadataFormats") {
      list_metadata_formats(r, body);
    } else if (r.verb == "ListSets") {
      throw OaiError{"noSetHierarchy", "this repository does not support sets"};
    } else if (r.verb == "GetRecord") {
      get_record(r, body);
    } else {
      list(r, r.verb == "ListRecords", body);
    }
    out += "<request verb=\"" + r.verb + "\"";
    for (const auto& [k, v] : r.args) {
      out += ' ' + k + "=\"";
      xml::append_escaped_attr(out, v);
      out += '"';
    }
    out += '>';
    xml::append_escaped_text(out, config_.base_url);
    out += "</request>";
    out += body;
    out += "</OAI-PMH>";
    return OaiResponse{200, std::move(out)};
  } catch (const OaiError& e) {
    const bool bare = e.code == "badVerb" || e.code == "badArgument";
    return error_response(e, bare ? nullptr : &r);
  }
}

void OaiProvider::identify(const Request&, std::string& out) const {
  out += "<Identify>";
  leaf(out, "repositoryName", config_.repository_name);
  leaf(out, "baseURL", config_.base_url);
  leaf(out, "protocolVersion", "2.0");
  leaf(out, "adminEmail", config_.admin_email);
  const auto earliest = store_.earliest_datestamp(exposed()).value_or(UtcTime{});
  leaf(out, "earliestDatestamp", format_datestamp(earliest, config_.granularity));
  leaf(out, "deletedRecord", "no");
  leaf(out, "granularity",
       config_.granularity == Granularity::Day ? "YYYY-MM-DD" : "YYYY-MM-DDThh:mm:ssZ");
  out += "</Identify>";
}

namespace {

void metadata_format(std::string& out) {
  out += "<metadataFormat>";
  leaf(out, "metadataPrefix", oai::kMetadataPrefix);
  leaf(out, "schema", ns::kCtxSchema);
  leaf(out, "metadataNamespace", ns::kCtx);
  out += "</metadataFormat>";
}

std::optional<Uuid> parse_oai_identifier(const std::string& text) { return Uuid::from_urn(text); }

}  // namespace

void OaiProvider::list_metadata_formats(const Request& r, std::string& out) const {
  if (const auto* id = r.get("identifier")) {
    const auto uuid = parse_oai_identifier(*id);
    const auto rec = uuid ? store_.get_by_uuid(*uuid) : std::nullopt;
    if (!rec || (!config_.expose_harvested && !rec->provenance.is_local()))
      throw OaiError{"idDoesNotExist", "no record with identifier '" + *id + "'"};
  }
  out += "<ListMetadataFormats>";
  metadata_format(out);
  out += "</ListMetadataFormats>";
}

namespace {

void write_record(std::string& out, const StoredRecord& rec, Granularity g, bool with_metadata) {
  if (with_metadata) out += "<record>";
  out += "<header><identifier>";
  out += rec.event.event_id.urn();
  out += "</identifier><datestamp>";
  out += format_datestamp(rec.upload_datestamp, g);
  out += "</datestamp></header>";
  if (with_metadata) {
    out += "<metadata>";
    append_context_object_element(out, rec.event);
    out += "</metadata></record>";
  }
}

}  // namespace

void OaiProvider::get_record(const Request& r, std::string& out) const {
  const auto* id = r.get("identifier");
  const auto* prefix = r.get("metadataPrefix");
  if (!id || !prefix)
    throw OaiError{"badArgument", "GetRecord requires identifier and metadataPrefix"};
  if (*prefix != oai::kMetadataPrefix)
    throw OaiError{"cannotDisseminateFormat", "unsupported metadataPrefix '" + *prefix + "'"};
  const auto uuid = parse_oai_identifier(*id);
  const auto rec = uuid ? store_.get_by_uuid(*uuid) : std::nullopt;
  if (!rec || (!config_.expose_harvested && !rec->provenance.is_local()))
    throw OaiError{"idDoesNotExist", "no record with identifier '" + *id + "'"};
  out += "<GetRecord>";
  write_record(out, *rec, config_.granularity, true);
  out += "</GetRecord>";
}

void OaiProvider::list(const Request& r, bool with_metadata, std::string& out) const {
  const UtcTime now = clock_();
  ResumptionToken state;
  if (const auto* token = r.get("resumptionToken")) {
    if (r.args.size() != 1)
      throw OaiError{"badArgument", "resumptionToken is an exclusive argument"};
    try {
      state = decode_resumption_token(*token, token_key_, now);
    } catch (const Error& e) {
      throw OaiError{"badResumptionToken", e.what()};
    }
    if (state.verb != r.verb)
      throw OaiError{"badResumptionToken", "token was issued for " + state.verb};
  } else {
    const auto* prefix = r.get("metadataPrefix");
    if (!prefix) throw OaiError{"badArgument", r.verb + " requires metadataPrefix"};
    std::optional<Datestamp> from, until;
    for (auto [name, slot] : {std::pair{"from", &from}, std::pair{"until", &until}}) {
      if (const auto* v = r.get(name)) {
        *slot = parse_datestamp(*v);
        if (!*slot) throw OaiError{"badArgument", std::string(name) + " '" + *v + "' is not a datestamp"};
        if (config_.granularity == Granularity::Day && (*slot)->granularity == Granularity::Seconds)
          throw OaiError{"badArgument", std::string(name) + " is finer than the repository granularity"};
      }
    }
    if (from && until && from->granularity != until->granularity)
      throw OaiError{"badArgument", "from and until have different granularities"};
    if (*prefix != oai::kMetadataPrefix)
      throw OaiError{"cannotDisseminateFormat", "unsupported metadataPrefix '" + *prefix + "'"};
    if (r.get("set")) throw OaiError{"noSetHierarchy", "this repository does not support sets"};
    if (from) state.from = from->time;
    if (until)
      state.until = until->granularity == Granularity::Day ? day_ceil(until->time) : until->time;
    if (state.from && state.until && *state.from > *state.until)
      throw OaiError{"badArgument", "from is later than until"};
    state.verb = r.verb;
    state.metadata_prefix = *prefix;
  }

  std::optional<std::string> cursor;
  if (!state.cursor.empty()) cursor = state.cursor;
  DatestampPage page;
  try {
    page = store_.range_by_datestamp(state.from, state.until, exposed(), cursor, config_.page_size);
  } catch (const Error& e) {
    throw OaiError{"badResumptionToken", e.what()};
  }
  if (page.records.empty()) throw OaiError{"noRecordsMatch", "no records in the requested range"};

  out += with_metadata ? "<ListRecords>" : "<ListIdentifiers>";
  for (const auto& rec : page.records) write_record(out, rec, config_.granularity, with_metadata);
  const bool resumed = !state.cursor.empty();
  const std::size_t list_size = resumed ? state.complete_list_size : page.complete_size;
  if (page.next_cursor) {
    ResumptionToken next = state;
    next.cursor = *page.next_cursor;
    next.issued_at = now;
    next.expiry = now + config_.token_lifetime;
    next.complete_list_size = list_size;
    next.position = state.position + page.records.size();
    out += "<resumptionToken expirationDate=\"" + format_utc(next.expiry) +
           "\" completeListSize=\"" + std::to_string(list_size) + "\" cursor=\"" +
           std::to_string(state.position) + "\">";
    out += encode_resumption_token(next, token_key_);
    out += "</resumptionToken>";
  } else if (resumed) {
    out += "<resumptionToken completeListSize=\"" + std::to_string(list_size) + "\" cursor=\"" +
           std::to_string(state.position) + "\"/>";
  }
  out += with_metadata ? "</ListRecords>" : "</ListIdentifiers>";
}

}  // namespace usagelog
