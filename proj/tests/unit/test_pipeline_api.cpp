#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "usagelog/api.hpp"
#include "usagelog/artifacts.hpp"
#include "usagelog/dedup.hpp"
#include "usagelog/event_store.hpp"
#include "usagelog/pipeline.hpp"
#include "usagelog/recommender.hpp"
#include "usagelog/relation_graph.hpp"
#include "usagelog/synth.hpp"

namespace fs = std::filesystem;
using namespace usagelog;
using json = nlohmann::json;
using testing_support::TempDir;

namespace {

const UtcTime kUpload = parse_utc("2006-01-01T00:00:00Z").value();

GroundTruth fill_store(const fs::path& dir, const SynthConfig& c) {
  EventStore store(dir);
  const auto clock = stepping_clock(kUpload, std::chrono::seconds(1));
  auto truth = generate_synthetic(c, [&](const UsageEvent& e) { store.append(e, Provenance{}, clock); });
  store.flush();
  return truth;
}

SynthConfig small_config() {
  SynthConfig c;
  c.n_events = 6000;
  c.n_requesters = 300;
  c.n_referents = 1500;
  c.n_journals = 40;
  return c;
}

PipelineConfig config_for(const TempDir& dir, const SynthConfig& c) {
  PipelineConfig cfg;
  cfg.store = dir / "store";
  cfg.artifacts = dir / "artifacts";
  std::string text;
  for (const auto& [issn, v] : synthetic_impact_factors(c)) text += issn + '\t' + format_double(v) + '\n';
  artifact::write_text(dir / "if.tsv", text);
  cfg.impact_factors = dir / "if.tsv";
  return cfg;
}

std::map<std::string, std::string> hash_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != artifact::kTimings)
      out[e.path().filename().string()] = testing_support::sha256_file(e.path());
  return out;
}

std::pair<int, std::string> run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WEXITSTATUS(status), out};
}

struct Built {
  TempDir dir;
  SynthConfig synth = small_config();
  GroundTruth truth;
  PipelineConfig cfg;
  PipelineReport report;
  Built() {
    truth = fill_store(dir / "store", synth);
    cfg = config_for(dir, synth);
    report = run_pipeline(cfg);
  }
};

}  // namespace

TEST(Pipeline, SyntheticCorpusMatchesGroundTruth) {
  TempDir dir;
  SynthConfig c;  // 10^5 events
  const auto truth = fill_store(dir / "store", c);
  const auto cfg = config_for(dir, c);
  const auto report = run_pipeline(cfg);
  EXPECT_EQ(report.events, c.n_events);
  std::set<std::uint32_t> works;
  for (const auto& [key, w] : truth.true_clusters) works.insert(w);
  EXPECT_EQ(report.referent_instances, truth.true_clusters.size());
  EXPECT_NEAR(static_cast<double>(report.unique_referents), static_cast<double>(works.size()), 0.01 * works.size());
  EXPECT_EQ(report.sessions, std::set<std::uint32_t>([&] {
              std::set<std::uint32_t> s;
              for (const auto& [id, v] : truth.true_sessions) s.insert(v);
              return s;
            }()).size());
  EXPECT_EQ(report.heavy_hitters, truth.true_heavy_hitters.size());
  EXPECT_GT(report.article_edges, 0u);
  EXPECT_GT(report.journal_nodes, 0u);
  EXPECT_GT(report.ranking_rows, 0u);
  EXPECT_EQ(report_from_json(report_to_json(report)).events, report.events);

  const auto first = hash_tree(cfg.artifacts);
  EXPECT_TRUE(first.count(artifact::kReport));
  run_pipeline(cfg, {false, {}});
  EXPECT_EQ(hash_tree(cfg.artifacts), first);
}

TEST(Pipeline, EmptyStoreGivesZeroReport) {
  TempDir dir;
  { EventStore store(dir / "store"); }
  PipelineConfig cfg;
  cfg.store = dir / "store";
  const auto r = run_pipeline(cfg);
  EXPECT_EQ(r.events, 0u);
  EXPECT_EQ(r.unique_referents, 0u);
  EXPECT_EQ(r.unique_requesters, 0u);
  EXPECT_EQ(r.journal_nodes, 0u);
  EXPECT_EQ(r.ranking_rows, 0u);
  EXPECT_TRUE(fs::exists(cfg.artifacts_dir() / artifact::kReport));
  ApiService api(cfg.artifacts_dir());
  EXPECT_EQ(api.handle("/api/stats", {}).status, 200);
}

TEST(Pipeline, ResumesAfterInterruption) {
  TempDir dir;
  const auto c = small_config();
  fill_store(dir / "store", c);
  auto cfg = config_for(dir, c);
  const auto clean = run_pipeline(cfg, {false, {}});
  const auto want = hash_tree(cfg.artifacts);
  fs::remove_all(cfg.artifacts);

  for (const auto& stop_at : {std::string("sessionize"), std::string("graph"), std::string("pca")}) {
    PipelineOptions interrupt;
    interrupt.after_stage = [&](const std::string& s) {
      if (s == stop_at) throw std::runtime_error("interrupted");
    };
    EXPECT_THROW(run_pipeline(cfg, interrupt), std::exception);
    EXPECT_FALSE(fs::exists(cfg.artifacts / artifact::kReport));
    std::vector<std::string> ran;
    PipelineOptions resume;
    resume.after_stage = [&](const std::string& s) { ran.push_back(s); };
    run_pipeline(cfg, resume);
    EXPECT_EQ(std::find(ran.begin(), ran.end(), stop_at), ran.end()) << stop_at;
    EXPECT_EQ(hash_tree(cfg.artifacts), want) << stop_at;
    fs::remove_all(cfg.artifacts);
  }
  (void)clean;
}

TEST(Pipeline, StageErrorsNameStage) {
  TempDir dir;
  { EventStore store(dir / "store"); }
  PipelineConfig cfg;
  cfg.store = dir / "store";
  cfg.impact_factors = dir / "missing.tsv";
  fill_store(dir / "store", small_config());
  try {
    run_pipeline(cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "compare");
    EXPECT_EQ(e.code(), ErrorCode::FileUnreadable);
  }
}

TEST(Pipeline, ConcurrentRunIsLockedOut) {
  TempDir dir;
  const auto c = small_config();
  fill_store(dir / "store", c);
  auto cfg = config_for(dir, c);
  std::atomic<bool> saw_lock{false};
  PipelineOptions inner;
  inner.after_stage = [&](const std::string& s) {
    if (s != "sessionize") return;
    try {
      run_pipeline(cfg);
    } catch (const Error& e) {
      saw_lock = std::string(e.what()).find("lock") != std::string::npos;
    }
  };
  run_pipeline(cfg, inner);
  EXPECT_TRUE(saw_lock);
}

TEST(Api, ArtifactsMissingIs503) {
  TempDir dir;
  ApiService api(dir / "nothing");
  EXPECT_FALSE(api.ready());
  for (const auto* path : {"/api/stats", "/api/rankings", "/api/map", "/api/agents", "/api/recommend"}) {
    const auto r = api.handle(path, {{"cluster", "0"}});
    EXPECT_EQ(r.status, 503) << path;
    EXPECT_EQ(json::parse(r.body)["error"], "ArtifactsMissing");
  }
  fs::create_directories(dir / "empty");
  EXPECT_EQ(ApiService(dir / "empty").handle("/api/stats", {}).status, 503);
}

TEST(Api, EndpointsMatchLibraryAndNeverMutate) {
  Built b;
  const auto before = hash_tree(b.cfg.artifacts);
  ApiService api(b.cfg.artifacts);
  ASSERT_TRUE(api.ready());

  const auto rankings = api.handle("/api/rankings", {{"limit", "10"}});
  ASSERT_EQ(rankings.status, 200);
  const auto rj = json::parse(rankings.body);
  EXPECT_EQ(rj["columns"], json({"rank", "prw", "if03", "title", "flag"}));
  const auto rows = artifact::read_rankings(b.cfg.artifacts / artifact::kRankings);
  ASSERT_EQ(rj["rows"].size(), std::min<std::size_t>(10, rows.size()));
  EXPECT_EQ(rj["total"], rows.size());
  for (std::size_t i = 0; i < rj["rows"].size(); ++i) {
    EXPECT_EQ(rj["rows"][i]["rank"], i + 1);
    EXPECT_EQ(rj["rows"][i]["title"], rows[i].title);
    EXPECT_DOUBLE_EQ(rj["rows"][i]["prw"].get<double>(), rows[i].prw);
    EXPECT_EQ(rj["rows"][i]["flag"], rows[i].deviation_flag);
  }

  const auto graph = read_graph(b.cfg.artifacts / artifact::kArticleEdges, b.cfg.artifacts / artifact::kArticleNodes);
  const auto meta = artifact::read_cluster_meta(b.cfg.artifacts / artifact::kClusterMeta);
  ClusterIndex index(meta.canonical, meta.identifiers);
  std::size_t tried = 0;
  for (std::uint32_t c = 0; c < index.size() && tried < 50; ++c) {
    const auto& ids = index.identifiers(c);
    auto doi = std::find_if(ids.begin(), ids.end(), [](const auto& s) { return s.rfind("info:doi/", 0) == 0; });
    if (doi == ids.end()) continue;
    Query q;
    q.identifier = *doi;
    std::uint32_t resolved;
    try {
      resolved = index.resolve(q);
    } catch (const Error&) {
      continue;
    }
    ++tried;
    const auto reply = api.handle("/api/recommend", {{"doi", *doi}, {"k", "10"}});
    ASSERT_EQ(reply.status, 200) << reply.body;
    const auto j = json::parse(reply.body);
    const auto want = recommend(resolved, graph, 10);
    EXPECT_EQ(j["query"]["cluster"], resolved);
    ASSERT_EQ(j["items"].size(), want.items.size());
    EXPECT_LE(j["items"].size(), 10u);
    for (std::size_t i = 0; i < want.items.size(); ++i) {
      EXPECT_EQ(j["items"][i]["cluster"], want.items[i].cluster);
      EXPECT_DOUBLE_EQ(j["items"][i]["score"].get<double>(), want.items[i].score);
      if (i) EXPECT_GE(j["items"][i - 1]["score"].get<double>(), j["items"][i]["score"].get<double>());
    }
  }
  EXPECT_GT(tried, 10u);

  EXPECT_EQ(api.handle("/api/recommend", {{"doi", "10.9999/none"}}).status, 404);
  EXPECT_EQ(api.handle("/api/recommend", {}).status, 400);
  EXPECT_EQ(api.handle("/api/recommend", {{"cluster", "0"}, {"bogus", "1"}}).status, 400);
  EXPECT_EQ(api.handle("/api/nope", {}).status, 404);
  const auto stats = json::parse(api.handle("/api/stats", {}).body);
  EXPECT_EQ(stats["events"], b.report.events);
  EXPECT_TRUE(stats.contains("timings_seconds"));
  const auto agents = json::parse(api.handle("/api/agents", {}).body);
  EXPECT_EQ(agents["heavy_hitters"].size(), b.report.heavy_hitters);
  const auto map = json::parse(api.handle("/api/map", {}).body);
  EXPECT_EQ(map["points"].size(), b.report.map_points);

  EXPECT_EQ(hash_tree(b.cfg.artifacts), before);
}

TEST(Api, AmbiguousQueryIs409WithCandidates) {
  TempDir dir;
  fs::create_directories(dir / "a");
  ReferentMetadata m1, m2;
  m1.atitle = m2.atitle = "Shared title";
  m1.issn = "1111-1111";
  m2.issn = "2222-2222";
  artifact::write_text(dir / "a" / artifact::kClusterMeta, artifact::format_cluster_meta({{m1, m2}, {{}, {}}}));
  write_graph(RelationGraph({"x", "y"}, {{0, 1, 1.0}}, true), dir / "a" / artifact::kArticleEdges,
              dir / "a" / artifact::kArticleNodes);
  Built b;
  for (const auto* f : {artifact::kRankings, artifact::kMap, artifact::kAgents, artifact::kReport})
    fs::copy_file(b.cfg.artifacts / f, dir / "a" / f);
  ApiService api(dir / "a");
  ASSERT_TRUE(api.ready());
  const auto r = api.handle("/api/recommend", {{"title", "Shared title"}});
  EXPECT_EQ(r.status, 409);
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["error"], "AmbiguousQuery");
  ASSERT_EQ(j["candidates"].size(), 2u);
  EXPECT_EQ(j["candidates"][0]["cluster"], 0);
  EXPECT_EQ(j["candidates"][1]["cluster"], 1);
  EXPECT_EQ(api.handle("/api/recommend", {{"title", "Shared title"}, {"issn", "2222-2222"}}).status, 200);
}

TEST(Api, HttpServesSameBodies) {
  Built b;
  ApiService api(b.cfg.artifacts);
  ApiHttpServer server(api);
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);
  for (const std::string path : {"/api/stats", "/api/rankings?limit=3", "/api/map", "/api/agents"}) {
    auto res = client.Get(path);
    ASSERT_TRUE(res) << path;
    EXPECT_EQ(res->status, 200);
    const auto q = path.find('?');
    ApiParams params;
    if (q != std::string::npos) params.emplace("limit", "3");
    EXPECT_EQ(res->body, api.handle(path.substr(0, q), params).body);
    EXPECT_NE(res->get_header_value("Content-Type").find("application/json"), std::string::npos);
  }
  auto post = client.Post("/api/stats", "", "text/plain");
  ASSERT_TRUE(post);
  EXPECT_NE(post->status, 200);
  server.stop();
}

TEST(Cli, JsonParityWithApi) {
  Built b;
  ApiService api(b.cfg.artifacts);
  const std::string art = "--artifacts " + b.cfg.artifacts.string();
  auto same = [&](const std::string& args, const std::string& path, const ApiParams& params) {
    const auto [code, out] = run_cli(art + " " + args);
    const auto want = api.handle(path, params);
    EXPECT_EQ(out, want.body + "\n") << args;
    EXPECT_EQ(code, want.status == 200 ? 0 : want.status / 100) << args;
  };
  same("rank --json --limit 10", "/api/rankings", {{"limit", "10"}});
  same("map --json", "/api/map", {});
  same("agents --json --limit 5", "/api/agents", {{"limit", "5"}});
  same("stats --json", "/api/stats", {});
  same("recommend --json --cluster 3 -k 4", "/api/recommend", {{"cluster", "3"}, {"k", "4"}});
  same("recommend --json --doi 10.9999/none", "/api/recommend", {{"doi", "10.9999/none"}, {"k", "10"}});
}

TEST(Cli, DedupMatchesPipelineClusters) {
  Built b;
  const auto [code, out] = run_cli("--store " + b.cfg.store.string() + " dedup");
  EXPECT_EQ(code, 0);
  EXPECT_EQ(out, testing_support::read_file(b.cfg.artifacts / artifact::kInstanceClusters));
}

TEST(Cli, AgentsModeAddsWeights) {
  Built b;
  const auto [code, out] = run_cli("--artifacts " + b.cfg.artifacts.string() + " agents --mode filter --limit 4");
  ASSERT_EQ(code, 0);
  std::istringstream in(out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# fitted=", 0), 0u);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto cols = artifact::split_tabs(line);
    ASSERT_EQ(cols.size(), 5u);
    EXPECT_EQ(cols[4], cols[2] == "*" ? "0" : "1");
    ++rows;
  }
  EXPECT_EQ(rows, 4u);
  EXPECT_NE(run_cli("--artifacts " + b.cfg.artifacts.string() + " agents --mode bogus").first, 0);
}

TEST(Cli, PseudonymizeRewritesRequesters) {
  TempDir dir;
  artifact::write_text(dir / "key", "secret\n");
  artifact::write_text(dir / "log",
                       "2005-11-11T17:45:08Z\t63.236.2.100\tfulltext\thttp://r\trft.issn=1234-5678\n"
                       "bad line\n"
                       "2005-11-11T17:45:09Z\turn:ip:63.236.2.100\tabstract\thttp://r\trft.issn=1234-5678\n");
  const auto [code, out] = run_cli("pseudonymize --key-file " + (dir / "key").string() + " " + (dir / "log").string());
  ASSERT_EQ(code, 0);
  const std::string p = pseudonymize("urn:ip:63.236.2.100", "secret");
  std::istringstream in(out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(artifact::split_tabs(line).at(1), p);
    ++n;
  }
  EXPECT_EQ(n, 2u);
}
