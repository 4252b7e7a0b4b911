#include "usagelog/oai_http.hpp"

#include <httplib.h>

#include <thread>

#include "usagelog/error.hpp"

namespace usagelog {

OaiParams parse_query_string(std::string_view query) {
  OaiParams out;
  std::size_t pos = 0;
  while (pos <= query.size()) {
    std::size_t amp = query.find('&', pos);
    if (amp == std::string_view::npos) amp = query.size();
    std::string_view pair = query.substr(pos, amp - pos);
    if (!pair.empty()) {
      const auto eq = pair.find('=');
      std::string key(pair.substr(0, eq));
      std::string value(eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1));
      out.emplace(httplib::detail::decode_url(key, true), httplib::detail::decode_url(value, true));
    }
    pos = amp + 1;
  }
  return out;
}

std::string format_query_string(const OaiParams& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += '&';
    out += httplib::detail::encode_query_param(k);
    out += '=';
    out += httplib::detail::encode_query_param(v);
  }
  return out;
}

std::string url_path(std::string_view url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string_view::npos) return "/";
  auto path = url.substr(slash);
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  return std::string(path);
}

struct OaiHttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

OaiHttpServer::OaiHttpServer(const OaiProvider& provider)
    : impl_(std::make_unique<Impl>()), path_(url_path(provider.config().base_url)) {
  auto respond = [&provider](const OaiParams& params, httplib::Response& res) {
    const auto reply = provider.handle(params);
    res.status = reply.status;
    res.set_content(reply.body, "text/xml; charset=utf-8");
  };
  impl_->server.Get(path_, [respond](const httplib::Request& req, httplib::Response& res) {
    const auto q = req.target.find('?');
    respond(parse_query_string(q == std::string::npos ? std::string_view{}
                                                      : std::string_view(req.target).substr(q + 1)),
            res);
  });
  impl_->server.Post(path_, [respond](const httplib::Request& req, httplib::Response& res) {
    respond(parse_query_string(req.body), res);
  });
}

OaiHttpServer::~OaiHttpServer() { stop(); }

int OaiHttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0)
    throw Error(ErrorCode::TransportError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void OaiHttpServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port))
    throw Error(ErrorCode::TransportError, "cannot listen on " + host + ":" + std::to_string(port));
}

void OaiHttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace usagelog
