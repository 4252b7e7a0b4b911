#pragma once

#include <chrono>
#include <map>
#include <string>
#include <string_view>

#include "usagelog/event_store.hpp"
#include "usagelog/resumption_token.hpp"

namespace usagelog {

namespace oai {
inline constexpr std::string_view kNamespace = "http://www.openarchives.org/OAI/2.0/";
inline constexpr std::string_view kSchemaLocation =
    "http://www.openarchives.org/OAI/2.0/ http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd";
inline constexpr std::string_view kMetadataPrefix = "resolver_logs";
}  // namespace oai

struct RepositoryConfig {
  std::string repository_name = "Linking server usage log repository";
  std::string base_url = "http://localhost:8080/oai";
  std::string admin_email = "admin@example.org";
  Granularity granularity = Granularity::Seconds;
  std::size_t page_size = 500;
  bool expose_harvested = false;
  std::chrono::seconds token_lifetime = std::chrono::hours(24);

  /// InvalidConfig on page_size 0 or a base_url that is not absolute http(s).
  void validate() const;
};

/// Request arguments as received; a multimap so repeated arguments can be
/// rejected as the protocol requires.
using OaiParams = std::multimap<std::string, std::string>;

struct OaiResponse {
  int status = 200;
  std::string body;
};

/// OAI-PMH 2.0 data provider over an EventStore. Exposes only Local records
/// unless expose_harvested is set. Stateless per request.
class OaiProvider {
 public:
  OaiProvider(const EventStore& store, RepositoryConfig config, std::string token_key,
              Clock clock = system_clock());

  /// `params` includes the `verb` argument.
  OaiResponse handle(const OaiParams& params) const;
  OaiResponse handle(std::string_view verb, const OaiParams& params) const;

  const RepositoryConfig& config() const { return config_; }

 private:
  struct Request;

  ProvenanceFilter exposed() const;
  void identify(const Request& r, std::string& out) const;
  void list_metadata_formats(const Request& r, std::string& out) const;
  void get_record(const Request& r, std::string& out) const;
  void list(const Request& r, bool with_metadata, std::string& out) const;

  const EventStore& store_;
  RepositoryConfig config_;
  std::string token_key_;
  Clock clock_;
};

}  // namespace usagelog
