#include "usagelog/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <unordered_map>

#include "usagelog/artifacts.hpp"
#include "usagelog/dedup.hpp"
#include "usagelog/event_store.hpp"
#include "usagelog/pagerank.hpp"
#include "usagelog/pca_map.hpp"
#include "usagelog/rankings.hpp"
#include "usagelog/relation_graph.hpp"
#include "usagelog/sessions.hpp"

namespace usagelog {

namespace fs = std::filesystem;
using nlohmann::json;

std::string report_to_json(const PipelineReport& r) {
  json j;
  j["events"] = r.events;
  j["referent_instances"] = r.referent_instances;
  j["unique_referents"] = r.unique_referents;
  j["unique_requesters"] = r.unique_requesters;
  j["sessions"] = r.sessions;
  j["genre_shares"] = r.genre_shares;
  j["heavy_hitters"] = r.heavy_hitters;
  j["requester_fit"] = {{"fitted", r.requester_fit},
                        {"slope", r.fit.slope},
                        {"r2", r.fit.r2},
                        {"cutoff_k", r.fit.cutoff_k},
                        {"threshold_met", r.fit.threshold_met}};
  j["weight_mode"] = r.weight_mode;
  j["graph_mode"] = r.graph_mode;
  j["article_graph"] = {{"nodes", r.article_nodes}, {"edges", r.article_edges},
                        {"weight", r.article_weight}};
  j["journal_graph"] = {{"nodes", r.journal_nodes},
                        {"edges", r.journal_edges},
                        {"weight", r.journal_weight},
                        {"intra_journal_weight", r.intra_journal_weight},
                        {"unassigned_weight", r.unassigned_weight},
                        {"unassigned_clusters", r.unassigned_clusters}};
  j["pagerank"] = {{"iterations", r.pagerank_iterations}, {"converged", r.pagerank_converged}};
  j["map"] = {{"points", r.map_points},
              {"explained", r.map_explained},
              {"degenerate", r.map_degenerate}};
  j["rankings"] = {{"rows", r.ranking_rows}, {"flagged", r.flagged_rows}};
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

PipelineReport report_from_json(const std::string& text) {
  PipelineReport r;
  try {
    const json j = json::parse(text);
    r.events = j.at("events");
    r.referent_instances = j.at("referent_instances");
    r.unique_referents = j.at("unique_referents");
    r.unique_requesters = j.at("unique_requesters");
    r.sessions = j.at("sessions");
    r.genre_shares = j.at("genre_shares").get<std::map<std::string, double>>();
    r.heavy_hitters = j.at("heavy_hitters");
    const auto& fit = j.at("requester_fit");
    r.requester_fit = fit.at("fitted");
    r.fit.slope = fit.at("slope");
    r.fit.r2 = fit.at("r2");
    r.fit.cutoff_k = fit.at("cutoff_k");
    r.fit.threshold_met = fit.at("threshold_met");
    r.weight_mode = j.at("weight_mode");
    r.graph_mode = j.at("graph_mode");
    const auto& ag = j.at("article_graph");
    r.article_nodes = ag.at("nodes");
    r.article_edges = ag.at("edges");
    r.article_weight = ag.at("weight");
    const auto& jg = j.at("journal_graph");
    r.journal_nodes = jg.at("nodes");
    r.journal_edges = jg.at("edges");
    r.journal_weight = jg.at("weight");
    r.intra_journal_weight = jg.at("intra_journal_weight");
    r.unassigned_weight = jg.at("unassigned_weight");
    r.unassigned_clusters = jg.at("unassigned_clusters");
    r.pagerank_iterations = j.at("pagerank").at("iterations");
    r.pagerank_converged = j.at("pagerank").at("converged");
    r.map_points = j.at("map").at("points");
    r.map_explained = j.at("map").at("explained").get<std::array<double, 2>>();
    r.map_degenerate = j.at("map").at("degenerate");
    r.ranking_rows = j.at("rankings").at("rows");
    r.flagged_rows = j.at("rankings").at("flagged");
    r.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report.json: ") + e.what());
  }
  return r;
}

const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> stages{"sessionize", "cluster",  "analyze",
                                               "weights",    "graph",    "journals",
                                               "pagerank",   "pca",      "compare"};
  return stages;
}

namespace {

class LockFile {
 public:
  explicit LockFile(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::StorageFailure, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::InvalidArgument, "another pipeline run holds " + path.string());
    }
  }
  ~LockFile() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  int fd_ = -1;
};

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}
constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ull;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Record {
  std::uint32_t instance;
  std::uint32_t requester;
  std::uint32_t session;
  UtcTime time;
  Uuid event_id;
};

struct Corpus {
  std::vector<EntityDescriptor> instances;  // sorted by instance key
  std::vector<std::string> instance_keys;
  std::vector<std::string> requesters;  // sorted
  std::vector<Record> records;  // store order
  std::uint64_t fingerprint = kFnvBasis;
};

Corpus load_corpus(const EventStore& store, ProvenanceFilter filter) {
  Corpus c;
  std::unordered_map<std::string, std::uint32_t> inst_index, req_index;
  std::vector<std::string> keys, names;
  std::vector<EntityDescriptor> instances;
  store.scan(filter, [&](const StoredRecord& rec) {
    const auto& e = rec.event;
    c.fingerprint = fnv1a(c.fingerprint, e.event_id.bytes.data(), e.event_id.bytes.size());
    const auto ds = rec.upload_datestamp.time_since_epoch().count();
    c.fingerprint = fnv1a(c.fingerprint, &ds, sizeof ds);
    auto key = referent_instance_key(e.referent);
    auto [it, fresh] = inst_index.emplace(key, static_cast<std::uint32_t>(keys.size()));
    if (fresh) {
      keys.push_back(std::move(key));
      instances.push_back(e.referent);
    }
    auto name = requester_of(e);
    auto [rit, rfresh] = req_index.emplace(name, static_cast<std::uint32_t>(names.size()));
    if (rfresh) names.push_back(std::move(name));
    c.records.push_back({it->second, rit->second, 0, e.event_timestamp, e.event_id});
  });

  std::vector<std::uint32_t> order(keys.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
  std::vector<std::uint32_t> inst_rank(keys.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    inst_rank[order[r]] = r;
    c.instance_keys.push_back(keys[order[r]]);
    c.instances.push_back(std::move(instances[order[r]]));
  }
  std::vector<std::uint32_t> rorder(names.size());
  for (std::uint32_t i = 0; i < rorder.size(); ++i) rorder[i] = i;
  std::sort(rorder.begin(), rorder.end(), [&](auto a, auto b) { return names[a] < names[b]; });
  std::vector<std::uint32_t> req_rank(names.size());
  for (std::uint32_t r = 0; r < rorder.size(); ++r) {
    req_rank[rorder[r]] = r;
    c.requesters.push_back(names[rorder[r]]);
  }
  for (auto& rec : c.records) {
    rec.instance = inst_rank[rec.instance];
    rec.requester = req_rank[rec.requester];
  }
  return c;
}

class StreamWriter {
 public:
  explicit StreamWriter(fs::path file) : file_(std::move(file)), tmp_(file_.string() + ".tmp") {
    out_.open(tmp_, std::ios::trunc | std::ios::binary);
    if (!out_) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp_.string());
  }
  std::ofstream& out() { return out_; }
  void commit() {
    if (!out_.flush()) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp_.string());
    out_.close();
    fs::rename(tmp_, file_);
  }

 private:
  fs::path file_, tmp_;
  std::ofstream out_;
};

struct Manifest {
  std::string fingerprint;
  std::string config;
  std::set<std::string> completed;
};

std::optional<Manifest> read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto f = artifact::split_tabs(line);
    if (f.size() != 2) continue;
    if (f[0] == "fingerprint") m.fingerprint = f[1];
    else if (f[0] == "config") m.config = f[1];
    else if (f[0] == "stage") m.completed.insert(f[1]);
  }
  return m;
}

void write_manifest(const fs::path& file, const Manifest& m) {
  std::string text = "fingerprint\t" + m.fingerprint + "\nconfig\t" + m.config + "\n";
  for (const auto& s : pipeline_stages())
    if (m.completed.count(s)) text += "stage\t" + s + "\n";
  artifact::write_text(file, text);
}

std::string config_hash(const PipelineConfig& cfg, const std::string& key_material) {
  auto kv = cfg.to_key_values();
  kv.erase("api_bind");
  kv.erase("artifacts");
  std::uint64_t h = kFnvBasis;
  for (const auto& [k, v] : kv) {
    h = fnv1a(h, k.data(), k.size());
    h = fnv1a(h, "=", 1);
    h = fnv1a(h, v.data(), v.size());
    h = fnv1a(h, "\n", 1);
  }
  h = fnv1a(h, key_material.data(), key_material.size());
  if (cfg.impact_factors && fs::exists(*cfg.impact_factors)) {
    const auto text = artifact::read_text(*cfg.impact_factors);
    h = fnv1a(h, text.data(), text.size());
  }
  return hex64(h);
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& cfg, const PipelineOptions& options) {
  cfg.validate();
  const fs::path final_dir = cfg.artifacts_dir();
  const fs::path work = final_dir.string() + ".work";
  if (final_dir.has_parent_path()) fs::create_directories(final_dir.parent_path());
  LockFile lock(final_dir.string() + ".lock");

  std::string secret;
  if (cfg.secret_key_file) {
    secret = artifact::read_text(*cfg.secret_key_file);
    while (!secret.empty() && (secret.back() == '\n' || secret.back() == '\r')) secret.pop_back();
    if (secret.empty()) throw Error(ErrorCode::EmptyKey, "secret key file is empty");
  }

  using Clock = std::chrono::steady_clock;
  PipelineReport report;
  report.weight_mode = to_string(cfg.weight_mode);
  report.graph_mode = to_string(cfg.graph_mode);

  auto t0 = Clock::now();
  EventStore store(cfg.store);
  Corpus corpus = load_corpus(store, cfg.include_harvested ? ProvenanceFilter::Any
                                                           : ProvenanceFilter::LocalOnly);
  report.timings_seconds["load"] = std::chrono::duration<double>(Clock::now() - t0).count();
  spdlog::info("pipeline: {} events, {} referent instances, {} requesters", corpus.records.size(),
               corpus.instances.size(), corpus.requesters.size());

  Manifest manifest{hex64(corpus.fingerprint), config_hash(cfg, secret), {}};
  if (options.resume) {
    if (auto prev = read_manifest(work / artifact::kManifest);
        prev && prev->fingerprint == manifest.fingerprint && prev->config == manifest.config)
      manifest.completed = prev->completed;
  }
  if (manifest.completed.empty()) {
    fs::remove_all(work);
    fs::create_directories(work);
  } else {
    spdlog::info("pipeline: resuming after {} completed stages", manifest.completed.size());
  }

  auto stage = [&](const std::string& name, const std::function<void()>& compute,
                   const std::function<void()>& load) {
    const auto start = Clock::now();
    const bool replay = manifest.completed.count(name) > 0;
    try {
      if (replay) {
        load();
      } else {
        compute();
        manifest.completed.insert(name);
        write_manifest(work / artifact::kManifest, manifest);
      }
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(name, e);
    } catch (const std::exception& e) {
      throw StageError(name, Error(ErrorCode::StorageFailure, e.what()));
    }
    report.timings_seconds[name] = std::chrono::duration<double>(Clock::now() - start).count();
    spdlog::info("pipeline: stage {} done", name);
    if (options.after_stage && !replay) options.after_stage(name);
  };

  auto& records = corpus.records;
  std::vector<std::string> display(corpus.requesters);
  if (!secret.empty())
    for (auto& d : display) d = pseudonymize(d, secret);

  // sessionize
  stage(
      "sessionize",
      [&] {
        std::vector<SessionRecord> in;
        in.reserve(records.size());
        for (const auto& r : records) in.push_back({corpus.requesters[r.requester], r.time, r.event_id});
        const auto ids = sessionize(in, cfg.session_gap_minutes);
        StreamWriter w(work / artifact::kSessions);
        for (std::size_t i = 0; i < records.size(); ++i) {
          records[i].session = ids[i];
          w.out() << records[i].event_id.urn() << '\t' << ids[i] << '\n';
        }
        w.commit();
      },
      [&] {
        std::ifstream in(work / artifact::kSessions);
        std::unordered_map<Uuid, std::uint32_t, UuidHash> by_id;
        std::string line;
        while (std::getline(in, line)) {
          const auto f = artifact::split_tabs(line);
          auto id = f.size() == 2 ? Uuid::from_urn(f[0]) : std::nullopt;
          if (!id) throw Error(ErrorCode::ParseError, "bad sessions row");
          by_id[*id] = static_cast<std::uint32_t>(std::stoul(f[1]));
        }
        for (auto& r : records) r.session = by_id.at(r.event_id);
      });
  for (const auto& r : records) report.sessions = std::max<std::size_t>(report.sessions, r.session + 1);

  // cluster
  std::vector<std::uint32_t> instance_cluster;
  artifact::ClusterTable clusters;
  stage(
      "cluster",
      [&] {
        auto a = cluster_referents(corpus.instances, cfg.title_distance);
        instance_cluster = std::move(a.instance_cluster);
        clusters.canonical = std::move(a.canonical);
        clusters.identifiers = std::move(a.identifiers);
        StreamWriter w(work / artifact::kInstanceClusters);
        for (std::size_t i = 0; i < instance_cluster.size(); ++i)
          w.out() << corpus.instance_keys[i] << '\t' << instance_cluster[i] << '\n';
        w.commit();
        artifact::write_text(work / artifact::kClusterMeta, artifact::format_cluster_meta(clusters));
      },
      [&] {
        std::ifstream in(work / artifact::kInstanceClusters);
        std::unordered_map<std::string, std::uint32_t> by_key;
        std::string line;
        while (std::getline(in, line)) {
          const auto f = artifact::split_tabs(line);
          if (f.size() != 2) throw Error(ErrorCode::ParseError, "bad clusters row");
          by_key[f[0]] = static_cast<std::uint32_t>(std::stoul(f[1]));
        }
        for (const auto& k : corpus.instance_keys) instance_cluster.push_back(by_key.at(k));
        clusters = artifact::read_cluster_meta(work / artifact::kClusterMeta);
      });

  // analyze
  artifact::AgentsReport agents;
  RequesterStats stats;
  stage(
      "analyze",
      [&] {
        std::map<std::string, std::size_t> histogram;
        std::vector<std::size_t> counts(corpus.requesters.size(), 0);
        for (const auto& r : records) ++counts[r.requester];
        for (std::size_t i = 0; i < counts.size(); ++i) histogram[display[i]] += counts[i];
        try {
          stats = analyze_requesters(histogram, {cfg.k_max, cfg.r2_threshold});
          agents.fitted = true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::TooFewRequesters) throw;
          stats = RequesterStats{};
          stats.histogram = histogram;
          for (const auto& [r, c] : histogram) {
            stats.ranked.push_back({r, c, false});
            stats.total_events += c;
          }
          std::stable_sort(stats.ranked.begin(), stats.ranked.end(),
                           [](const auto& a, const auto& b) { return a.count > b.count; });
          if (!histogram.empty()) {
            std::vector<std::size_t> sorted;
            for (const auto& [r, c] : histogram) sorted.push_back(c);
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            stats.median_count = n % 2 ? static_cast<double>(sorted[n / 2])
                                       : (static_cast<double>(sorted[n / 2 - 1]) + sorted[n / 2]) / 2.0;
          }
        }
        agents.ranked = stats.ranked;
        agents.fit = stats.fit;
        agents.median_count = stats.median_count;
        agents.total_events = stats.total_events;
        artifact::write_text(work / artifact::kAgents, artifact::format_agents(agents));
      },
      [&] {
        agents = artifact::read_agents(work / artifact::kAgents);
        stats.ranked = agents.ranked;
        stats.fit = agents.fit;
        stats.median_count = agents.median_count;
        stats.total_events = agents.total_events;
        for (const auto& r : agents.ranked) {
          stats.histogram[r.requester] = r.count;
          if (r.flagged) stats.flagged.insert(r.requester);
        }
      });
  if (!agents.fitted)
    report.notes.push_back("fewer than 10 distinct requesters: no heavy-hitter fit, nothing flagged");

  // weights
  std::vector<double> weights(corpus.requesters.size(), 1.0);
  stage(
      "weights",
      [&] {
        const auto by_name = requester_weights(stats, cfg.weight_mode);
        std::string text;
        for (const auto& [name, w] : by_name) text += artifact::escape(name) + '\t' + format_double(w) + '\n';
        artifact::write_text(work / artifact::kWeights, text);
        for (std::size_t i = 0; i < display.size(); ++i) weights[i] = by_name.at(display[i]);
      },
      [&] {
        std::map<std::string, double> by_name;
        std::ifstream in(work / artifact::kWeights);
        std::string line;
        while (std::getline(in, line)) {
          const auto f = artifact::split_tabs(line);
          if (f.size() != 2) throw Error(ErrorCode::ParseError, "bad weights row");
          by_name[artifact::unescape(f[0])] = std::stod(f[1]);
        }
        for (std::size_t i = 0; i < display.size(); ++i) weights[i] = by_name.at(display[i]);
      });

  // graph
  RelationGraph articles;
  stage(
      "graph",
      [&] {
        std::vector<UsageRecord> usage;
        usage.reserve(records.size());
        for (const auto& r : records)
          usage.push_back({instance_cluster[r.instance], r.requester, r.session, r.time, r.event_id});
        std::vector<std::string> labels;
        labels.reserve(clusters.canonical.size());
        for (std::size_t c = 0; c < clusters.canonical.size(); ++c)
          labels.push_back(citation_label(clusters.canonical[c], clusters.identifiers[c]));
        articles = build_relation_graph(usage, weights, std::move(labels), cfg.graph_mode);
        write_graph(articles, work / artifact::kArticleEdges, work / artifact::kArticleNodes);
      },
      [&] { articles = read_graph(work / artifact::kArticleEdges, work / artifact::kArticleNodes); });

  // journals
  JournalAggregation journals;
  stage(
      "journals",
      [&] {
        std::vector<std::optional<std::string>> keys, titles;
        for (const auto& m : clusters.canonical) {
          keys.push_back(journal_key(m));
          titles.push_back(m.jtitle);
        }
        journals = aggregate_to_journals(articles, keys, titles);
        write_graph(journals.graph, work / artifact::kJournalEdges, work / artifact::kJournalNodes);
        std::string text = "# id\tkey\ttitle\tarticle_weight\tintra_journal_weight\tunassigned_weight\tunassigned_clusters\n";
        text += "# totals\t\t\t" + format_double(journals.article_weight) + '\t' +
                format_double(journals.intra_journal_weight) + '\t' +
                format_double(journals.unassigned_weight) + '\t' +
                std::to_string(journals.unassigned_clusters) + '\n';
        for (std::uint32_t j = 0; j < journals.graph.node_count(); ++j)
          text += std::to_string(j) + '\t' + artifact::escape(journals.graph.label(j)) + '\t' +
                  artifact::escape(journals.titles[j]) + '\n';
        artifact::write_text(work / artifact::kJournals, text);
      },
      [&] {
        journals.graph = read_graph(work / artifact::kJournalEdges, work / artifact::kJournalNodes);
        std::ifstream in(work / artifact::kJournals);
        std::string line;
        while (std::getline(in, line)) {
          const auto f = artifact::split_tabs(line);
          if (line.rfind("# totals", 0) == 0 && f.size() == 7) {
            journals.article_weight = std::stod(f[3]);
            journals.intra_journal_weight = std::stod(f[4]);
            journals.unassigned_weight = std::stod(f[5]);
            journals.unassigned_clusters = std::stoul(f[6]);
            continue;
          }
          if (line.empty() || line[0] == '#') continue;
          if (f.size() != 3) throw Error(ErrorCode::ParseError, "bad journals row");
          journals.titles.push_back(artifact::unescape(f[2]));
        }
      });

  // pagerank
  RankVector ranks;
  stage(
      "pagerank",
      [&] {
        if (journals.graph.node_count() > 0)
          ranks = pagerank(journals.graph, {cfg.damping, cfg.tolerance, cfg.max_iterations});
        else
          ranks.damping = cfg.damping;
        artifact::write_text(work / artifact::kPageRank,
                             artifact::format_pagerank(ranks, journals.titles));
      },
      [&] { ranks = artifact::read_pagerank(work / artifact::kPageRank); });
  if (journals.graph.node_count() == 0) report.notes.push_back("journal graph is empty: no ranking");
  else if (!ranks.converged) report.notes.push_back("pagerank stopped at max_iterations");

  // pca
  PcaResult map;
  stage(
      "pca",
      [&] {
        if (journals.graph.node_count() >= 3) {
          map = pca_map(journals.graph, cfg.pca_top_n);
          for (auto& p : map.points) p.label = journals.titles[p.node];
        }
        artifact::write_text(work / artifact::kMap, artifact::format_map(map));
      },
      [&] { map = artifact::read_map(work / artifact::kMap); });
  if (journals.graph.node_count() < 3) report.notes.push_back("fewer than 3 journals: no map");

  // compare
  std::vector<ComparisonRow> rows;
  stage(
      "compare",
      [&] {
        rows.clear();
        bool compared = false;
        if (cfg.impact_factors && !ranks.scores.empty()) {
          const auto impact = load_impact_factors(*cfg.impact_factors);
          try {
            rows = compare_rankings(ranks, journals.graph, journals.titles, impact, cfg.flag_fraction);
            compared = true;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyIntersection) throw;
          }
        }
        if (!compared && !ranks.scores.empty()) {
          const double scale = static_cast<double>(journals.graph.node_count());
          for (std::uint32_t j = 0; j < journals.graph.node_count(); ++j) {
            ComparisonRow r;
            r.key = journals.graph.label(j);
            r.title = journals.titles[j];
            r.prw = ranks.scores[j] * scale;
            rows.push_back(std::move(r));
          }
          std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            if (a.prw != b.prw) return a.prw > b.prw;
            if (a.title != b.title) return a.title < b.title;
            return a.key < b.key;
          });
          for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
        }
        artifact::write_text(work / artifact::kRankings, artifact::format_rankings(rows));
      },
      [&] { rows = artifact::read_rankings(work / artifact::kRankings); });
  if (!rows.empty() && !rows.front().if_value)
    report.notes.push_back("no impact factors matched: rankings carry PRw only");

  report.events = records.size();
  report.referent_instances = corpus.instances.size();
  report.unique_referents = clusters.canonical.size();
  report.unique_requesters = corpus.requesters.size();
  for (const auto& m : clusters.canonical) report.genre_shares[m.genre.value_or("unknown")] += 1.0;
  for (auto& [g, share] : report.genre_shares) share /= static_cast<double>(clusters.canonical.size());
  report.heavy_hitters = stats.flagged.size();
  report.requester_fit = agents.fitted;
  report.fit = agents.fit;
  report.article_nodes = articles.node_count();
  report.article_edges = articles.edge_count();
  report.article_weight = articles.total_weight();
  report.journal_nodes = journals.graph.node_count();
  report.journal_edges = journals.graph.edge_count();
  report.journal_weight = journals.graph.total_weight();
  report.intra_journal_weight = journals.intra_journal_weight;
  report.unassigned_weight = journals.unassigned_weight;
  report.unassigned_clusters = journals.unassigned_clusters;
  report.pagerank_iterations = ranks.iterations;
  report.pagerank_converged = ranks.converged;
  report.map_points = map.points.size();
  report.map_explained = map.explained;
  report.map_degenerate = map.degenerate;
  report.ranking_rows = rows.size();
  report.flagged_rows = static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.deviation_flag; }));

  artifact::write_text(work / artifact::kReport, report_to_json(report));
  fs::remove(work / artifact::kManifest);

  const fs::path old = final_dir.string() + ".old";
  fs::remove_all(old);
  if (fs::exists(final_dir)) fs::rename(final_dir, old);
  fs::rename(work, final_dir);
  fs::remove_all(old);

  report.timings_seconds["total"] = std::chrono::duration<double>(Clock::now() - t0).count();
  artifact::write_text(final_dir / artifact::kTimings,
                       json(report.timings_seconds).dump(2) + "\n");
  return report;
}

}  // namespace usagelog
