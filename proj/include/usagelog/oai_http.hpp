#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "usagelog/oai_provider.hpp"

namespace usagelog {

/// Splits `a=b&c=d` into decoded pairs, keeping repeats (the protocol must see
/// them to answer badArgument).
OaiParams parse_query_string(std::string_view query);

/// Encodes params as a query string; values are percent-encoded.
std::string format_query_string(const OaiParams& params);

/// HTTP front end for an OaiProvider, answering GET and POST at the path of
/// the repository's base URL.
class OaiHttpServer {
 public:
  explicit OaiHttpServer(const OaiProvider& provider);
  ~OaiHttpServer();
  OaiHttpServer(const OaiHttpServer&) = delete;
  OaiHttpServer& operator=(const OaiHttpServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();
  /// The path requests are served on, taken from the base URL.
  const std::string& path() const { return path_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
};

/// Path component of an absolute http URL ("/" when absent).
std::string url_path(std::string_view url);

}  // namespace usagelog
