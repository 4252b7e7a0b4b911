#include "usagelog/api.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <charconv>
#include <set>
#include <thread>

#include "usagelog/artifacts.hpp"
#include "usagelog/error.hpp"
#include "usagelog/oai_http.hpp"
#include "usagelog/recommender.hpp"
#include "usagelog/relation_graph.hpp"

namespace usagelog {

namespace fs = std::filesystem;
using nlohmann::json;

struct ApiService::Snapshot {
  ClusterIndex index;
  RelationGraph articles;
  std::vector<ComparisonRow> rankings;
  PcaResult map;
  artifact::AgentsReport agents;
  json report;
  json timings;
};

namespace {

struct ApiError {
  int status;
  std::string reason;
  std::string message;
  json extra = json::object();
};

ApiResponse error_response(const ApiError& e) {
  json body = e.extra;
  body["error"] = e.reason;
  body["message"] = e.message;
  return {e.status, body.dump()};
}

std::optional<std::string> param(const ApiParams& p, const char* name) {
  const auto [lo, hi] = p.equal_range(name);
  if (lo == hi) return std::nullopt;
  if (std::next(lo) != hi) throw ApiError{400, "badArgument", std::string("repeated parameter ") + name};
  return lo->second;
}

std::size_t count_param(const ApiParams& p, const char* name, std::size_t fallback, std::size_t max) {
  const auto text = param(p, name);
  if (!text) return fallback;
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
  if (ec != std::errc{} || ptr != text->data() + text->size() || v == 0 || v > max)
    throw ApiError{400, "badArgument", std::string(name) + " must be an integer in 1.." + std::to_string(max)};
  return v;
}

void allow_only(const ApiParams& p, std::initializer_list<std::string_view> names) {
  for (const auto& [k, v] : p)
    if (std::find(names.begin(), names.end(), k) == names.end())
      throw ApiError{400, "badArgument", "unknown parameter " + k};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json rankings_json(const std::vector<ComparisonRow>& rows, std::size_t limit) {
  json out = json::array();
  for (std::size_t i = 0; i < rows.size() && i < limit; ++i) {
    const auto& r = rows[i];
    out.push_back({{"rank", r.rank},
                   {"prw", r.prw},
                   {"if03", optional_json(r.if_value)},
                   {"title", r.title},
                   {"flag", r.deviation_flag},
                   {"key", r.key},
                   {"if_rank", r.if_rank ? json(*r.if_rank) : json(nullptr)}});
  }
  return out;
}

ApiResponse recommend_response(const ApiService::Snapshot& s, const ApiParams& p) {
  allow_only(p, {"doi", "title", "issn", "year", "cluster", "k"});
  const std::size_t k = count_param(p, "k", 10, 1000);
  std::uint32_t cluster = 0;
  if (const auto c = param(p, "cluster")) {
    if (p.count("doi") || p.count("title") || p.count("issn"))
      throw ApiError{400, "badArgument", "cluster excludes doi/title/issn"};
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(c->data(), c->data() + c->size(), v);
    if (ec != std::errc{} || ptr != c->data() + c->size())
      throw ApiError{400, "badArgument", "cluster must be an integer"};
    if (v >= s.index.size()) throw ApiError{404, "NotFound", "no cluster " + *c};
    cluster = v;
  } else {
    Query q;
    q.identifier = param(p, "doi");
    q.metadata.atitle = param(p, "title");
    q.metadata.issn = param(p, "issn");
    q.metadata.date = param(p, "year");
    if (q.identifier && q.identifier->find(':') == std::string::npos)
      q.identifier = "info:doi/" + *q.identifier;
    if (!q.identifier && !q.metadata.atitle)
      throw ApiError{400, "badArgument", "one of doi, title or cluster is required"};
    cluster = s.index.resolve(q);
  }
  const auto result = recommend(cluster, s.articles, k);
  json items = json::array();
  for (const auto& r : result.items)
    items.push_back({{"rank", r.rank}, {"cluster", r.cluster}, {"label", r.label}, {"score", r.score}});
  json body{{"query", {{"cluster", cluster}, {"label", s.index.label(cluster)}}},
            {"k", k},
            {"not_in_graph", result.not_in_graph},
            {"items", std::move(items)}};
  return {200, body.dump()};
}

ApiResponse map_response(const ApiService::Snapshot& s, const ApiParams& p) {
  allow_only(p, {});
  json points = json::array();
  for (const auto& pt : s.map.points)
    points.push_back({{"node", pt.node}, {"label", pt.label}, {"x", pt.x}, {"y", pt.y}});
  json body{{"explained", s.map.explained}, {"degenerate", s.map.degenerate}, {"points", std::move(points)}};
  return {200, body.dump()};
}

ApiResponse agents_response(const ApiService::Snapshot& s, const ApiParams& p) {
  allow_only(p, {"limit"});
  const auto& a = s.agents;
  const std::size_t limit = count_param(p, "limit", 20, a.ranked.size() + 1);
  json flagged = json::array(), top = json::array();
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    const auto& r = a.ranked[i];
    json row{{"rank", i + 1}, {"requester", r.requester}, {"count", r.count}, {"flagged", r.flagged}};
    if (r.flagged) flagged.push_back(row);
    if (i < limit) top.push_back(std::move(row));
  }
  json body{{"fitted", a.fitted},
            {"fit",
             {{"slope", a.fit.slope},
              {"r2", a.fit.r2},
              {"cutoff_k", a.fit.cutoff_k},
              {"threshold_met", a.fit.threshold_met}}},
            {"median_count", a.median_count},
            {"total_events", a.total_events},
            {"requesters", a.ranked.size()},
            {"heavy_hitters", std::move(flagged)},
            {"top", std::move(top)}};
  return {200, body.dump()};
}

}  // namespace

ApiService::ApiService(fs::path artifacts_dir) : dir_(std::move(artifacts_dir)) { reload(); }
ApiService::~ApiService() = default;

bool ApiService::reload() {
  try {
    auto s = std::make_shared<Snapshot>();
    s->report = json::parse(artifact::read_text(dir_ / artifact::kReport));
    if (fs::exists(dir_ / artifact::kTimings))
      s->timings = json::parse(artifact::read_text(dir_ / artifact::kTimings));
    auto clusters = artifact::read_cluster_meta(dir_ / artifact::kClusterMeta);
    s->index = ClusterIndex(std::move(clusters.canonical), std::move(clusters.identifiers));
    s->articles = read_graph(dir_ / artifact::kArticleEdges, dir_ / artifact::kArticleNodes);
    s->rankings = artifact::read_rankings(dir_ / artifact::kRankings);
    s->map = artifact::read_map(dir_ / artifact::kMap);
    s->agents = artifact::read_agents(dir_ / artifact::kAgents);
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(s);
    return true;
  } catch (const std::exception& e) {
    spdlog::warn("api: artifacts in {} not loaded: {}", dir_.string(), e.what());
    return false;
  }
}

bool ApiService::ready() const { return current() != nullptr; }

std::shared_ptr<const ApiService::Snapshot> ApiService::current() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

ApiResponse ApiService::handle(std::string_view path, const ApiParams& params) const {
  static const std::set<std::string_view> routes{"/api/recommend", "/api/rankings", "/api/map",
                                                 "/api/agents", "/api/stats"};
  if (!routes.count(path)) return error_response({404, "NoSuchEndpoint", std::string(path)});
  const auto snap = current();
  if (!snap) return error_response({503, "ArtifactsMissing", "no pipeline artifacts in " + dir_.string()});
  const auto& s = *snap;
  try {
    if (path == "/api/recommend") return recommend_response(s, params);
    if (path == "/api/map") return map_response(s, params);
    if (path == "/api/agents") return agents_response(s, params);
    if (path == "/api/rankings") {
      allow_only(params, {"limit"});
      const std::size_t limit = count_param(params, "limit", s.rankings.size() + 1, 1000000);
      json body{{"columns", {"rank", "prw", "if03", "title", "flag"}},
                {"total", s.rankings.size()},
                {"rows", rankings_json(s.rankings, limit)}};
      return {200, body.dump()};
    }
    allow_only(params, {});
    json body = s.report;
    body["timings_seconds"] = s.timings.is_null() ? json::object() : s.timings;
    return {200, body.dump()};
  } catch (const ApiError& e) {
    return error_response(e);
  } catch (const AmbiguousQueryError& e) {
    json candidates = json::array();
    for (auto c : e.candidates()) candidates.push_back({{"cluster", c}, {"label", snap->index.label(c)}});
    return error_response({409, "AmbiguousQuery", e.what(), {{"candidates", std::move(candidates)}}});
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::NotFound:
        return error_response({404, "NotFound", e.what()});
      case ErrorCode::InvalidArgument:
      case ErrorCode::EmptyQuery:
        return error_response({400, "badArgument", e.what()});
      default:
        return error_response({500, std::string(to_string(e.code())), e.what()});
    }
  }
}

struct ApiHttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

ApiHttpServer::ApiHttpServer(ApiService& service) : impl_(std::make_unique<Impl>()) {
  impl_->server.Get(R"(/api/.*)", [&service](const httplib::Request& req, httplib::Response& res) {
    const auto q = req.target.find('?');
    const auto query = q == std::string::npos ? std::string_view{} : std::string_view(req.target).substr(q + 1);
    const auto reply = service.handle(req.path, parse_query_string(query));
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
}

ApiHttpServer::~ApiHttpServer() { stop(); }

int ApiHttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) bound = impl_->server.bind_to_any_port(host);
  else if (!impl_->server.bind_to_port(host, port)) bound = -1;
  if (bound < 0) throw Error(ErrorCode::TransportError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiHttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace usagelog
