#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <thread>

#include "usagelog/api.hpp"
#include "usagelog/artifacts.hpp"
#include "usagelog/config.hpp"
#include "usagelog/crypto.hpp"
#include "usagelog/dedup.hpp"
#include "usagelog/event_store.hpp"
#include "usagelog/log_line.hpp"
#include "usagelog/oai_harvester.hpp"
#include "usagelog/oai_http.hpp"
#include "usagelog/oai_provider.hpp"
#include "usagelog/pipeline.hpp"
#include "usagelog/requesters.hpp"
#include "usagelog/synth.hpp"

namespace fs = std::filesystem;
using namespace usagelog;

namespace {

std::atomic<bool> g_stop{false};

void wait_for_signal() {
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "bind address needs host:port");
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string first_line_of(const fs::path& file) {
  auto text = artifact::read_text(file);
  if (const auto nl = text.find_first_of("\r\n"); nl != std::string::npos) text.resize(nl);
  return text;
}

// Prints an API response body and maps its status to the exit code.
int emit_api(const ApiService& service, const std::string& path, const ApiParams& params) {
  const auto reply = service.handle(path, params);
  std::cout << reply.body << '\n';
  if (reply.status != 200) spdlog::error("{} -> {}", path, reply.status);
  return reply.status == 200 ? 0 : reply.status / 100;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("usagelog");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l %v");

  CLI::App app{"Usage-log recording, exchange and analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, log_level = "info";
  app.add_option("--config", config_file, "key = value configuration file");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error");
  std::map<std::string, std::string> overrides;
  for (const auto& key : PipelineConfig::keys())
    app.add_option("--" + dashed(key), overrides[key], "config key " + key)->group("Config");

  auto load_config = [&] {
    PipelineConfig cfg;
    if (!config_file.empty()) cfg.apply(read_key_values(config_file));
    KeyValues set;
    for (const auto& [k, v] : overrides)
      if (!v.empty()) set[k] = v;
    cfg.apply(set);
    return cfg;
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic raw usage log with ground truth");
  SynthConfig sc;
  std::string synth_out, synth_truth, synth_if, synth_store;
  synth->add_option("--out", synth_out, "raw log output file")->required();
  synth->add_option("--truth", synth_truth, "ground-truth file prefix");
  synth->add_option("--impact-out", synth_if, "write synthetic impact factors here");
  synth->add_option("--events", sc.n_events);
  synth->add_option("--requesters", sc.n_requesters);
  synth->add_option("--referents", sc.n_referents);
  synth->add_option("--journals", sc.n_journals);
  synth->add_option("--variant-rate", sc.duplicate_variant_rate);
  synth->add_option("--heavy-hitters", sc.n_heavy_hitters);
  synth->add_option("--multiplier", sc.heavy_hitter_multiplier);
  synth->add_option("--multiplier-basis", sc.heavy_hitter_basis, "top or median ordinary requester")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, HeavyHitterBasis>{{"top", HeavyHitterBasis::Top}, {"median", HeavyHitterBasis::Median}}));
  synth->add_option("--referent-zipf", sc.referent_zipf_s);
  synth->add_option("--requester-zipf", sc.requester_zipf_s);
  synth->add_option("--gap-minutes", sc.session_gap_minutes);
  synth->add_option("--seed", sc.seed);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse a raw log into the event store");
  std::string ingest_input, resolver = "http://resolver.example.org/";
  std::optional<std::uint64_t> id_seed;
  ingest->add_option("input,--input", ingest_input, "raw log file")->required();
  ingest->add_option("--resolver", resolver, "resolver URI for lines without one");
  ingest->add_option("--id-seed", id_seed, "reproducible event UUIDs (matches synth --seed)");

  // serve-oai
  auto* serve_oai = app.add_subcommand("serve-oai", "Serve the store as an OAI-PMH repository");
  RepositoryConfig repo;
  std::string oai_bind = "127.0.0.1:8080", granularity = "seconds", token_key_file;
  serve_oai->add_option("--bind", oai_bind);
  serve_oai->add_option("--base-url", repo.base_url);
  serve_oai->add_option("--name", repo.repository_name);
  serve_oai->add_option("--admin-email", repo.admin_email);
  serve_oai->add_option("--granularity", granularity)->check(CLI::IsMember({"day", "seconds"}));
  serve_oai->add_option("--page-size", repo.page_size);
  serve_oai->add_flag("--expose-harvested", repo.expose_harvested);
  serve_oai->add_option("--token-key-file", token_key_file, "resumption token key (random when absent)");

  // harvest
  auto* harvest = app.add_subcommand("harvest", "Pull records from OAI-PMH repositories");
  std::string sources_file, single_source;
  HarvestOptions hopts;
  harvest->add_option("--sources", sources_file, "file of base URLs");
  harvest->add_option("--source", single_source, "harvest only this base URL");
  harvest->add_flag("--full", hopts.full, "ignore the stored watermark");
  harvest->add_option("--max-attempts", hopts.max_attempts);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run the analysis stages and publish artifacts");
  bool no_resume = false;
  pipeline->add_flag("--no-resume", no_resume, "start from the first stage");

  // read-only views
  bool json_out = false;
  auto* rank = app.add_subcommand("rank", "Show the journal ranking table");
  std::size_t rank_limit = 0;
  rank->add_option("--limit", rank_limit);
  rank->add_flag("--json", json_out);
  auto* map = app.add_subcommand("map", "Show the journal map points");
  map->add_flag("--json", json_out);
  auto* agents = app.add_subcommand("agents", "Show the requester frequency report");
  std::size_t agents_limit = 20;
  std::string agents_mode;
  agents->add_option("--limit", agents_limit);
  agents->add_option("--mode", agents_mode, "add a weight column")->check(CLI::IsMember({"none", "filter", "invfreq"}));
  agents->add_flag("--json", json_out);
  auto* stats = app.add_subcommand("stats", "Show the pipeline report");
  stats->add_flag("--json", json_out);
  auto* rec = app.add_subcommand("recommend", "Recommend articles related to a query");
  std::string q_doi, q_title, q_issn, q_year, q_cluster;
  std::size_t k = 10;
  rec->add_option("--doi", q_doi);
  rec->add_option("--title", q_title);
  rec->add_option("--issn", q_issn);
  rec->add_option("--year", q_year);
  rec->add_option("--cluster", q_cluster);
  rec->add_option("-k", k);
  rec->add_flag("--json", json_out);

  auto* serve_api = app.add_subcommand("serve-api", "Serve artifacts over the read-only HTTP API");

  auto* exporter = app.add_subcommand("export", "Write stored records as ContextObject documents");
  std::string export_out;
  bool local_only = false;
  exporter->add_option("--out", export_out)->required();
  exporter->add_flag("--local-only", local_only);

  auto* dedup = app.add_subcommand("dedup", "Cluster stored referents and print instance-to-cluster assignments");
  std::string dedup_out;
  dedup->add_option("--out", dedup_out, "write here instead of standard output");

  auto* pseudo = app.add_subcommand("pseudonymize", "Replace requester fields of a raw log with keyed pseudonyms");
  std::string pseudo_key_file, pseudo_input, pseudo_out;
  pseudo->add_option("--key-file", pseudo_key_file, "secret key (first line)")->required();
  pseudo->add_option("input,--input", pseudo_input, "raw log file")->required();
  pseudo->add_option("--out", pseudo_out, "write here instead of standard output");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (synth->parsed()) {
      sc.validate();
      std::ofstream out(synth_out, std::ios::trunc);
      if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + synth_out);
      std::size_t n = 0;
      const auto truth = generate_synthetic(sc, [&](const UsageEvent& e) {
        out << format_raw_line(event_to_raw_line(e)) << '\n';
        ++n;
      });
      if (!out.flush()) throw Error(ErrorCode::StorageFailure, "cannot write " + synth_out);
      if (!synth_truth.empty()) write_ground_truth(truth, synth_truth);
      if (!synth_if.empty()) {
        std::string text = "# issn\timpact\n";
        for (const auto& [issn, v] : synthetic_impact_factors(sc)) text += issn + '\t' + format_double(v) + '\n';
        artifact::write_text(synth_if, text);
      }
      spdlog::info("synth: wrote {} events to {}", n, synth_out);
      return 0;
    }

    if (pseudo->parsed()) {
      const std::string key = first_line_of(pseudo_key_file);
      std::ifstream in(pseudo_input, std::ios::binary);
      if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read " + pseudo_input);
      std::ofstream file;
      if (!pseudo_out.empty()) file.open(pseudo_out, std::ios::trunc | std::ios::binary);
      std::ostream& out = pseudo_out.empty() ? std::cout : file;
      std::string line;
      std::size_t n = 0, skipped = 0;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
          auto raw = parse_raw_line(line);
          raw.requester = pseudonymize(requester_uri(raw.requester), key);
          out << format_raw_line(raw) << '\n';
          ++n;
        } catch (const Error& e) {
          ++skipped;
          spdlog::warn("pseudonymize: skipped line: {}", e.what());
        }
      }
      if (!out.flush()) throw Error(ErrorCode::StorageFailure, "cannot write output");
      spdlog::info("pseudonymize: wrote {} lines, skipped {}", n, skipped);
      return 0;
    }

    const PipelineConfig cfg = load_config();
    auto need_store = [&] {
      if (cfg.store.empty()) throw Error(ErrorCode::InvalidConfig, "--store is required");
    };

    if (ingest->parsed()) {
      need_store();
      EventStore store(cfg.store);
      const IdSource ids = id_seed ? seeded_id_source(*id_seed) : random_id_source();
      const auto r = ingest_file(ingest_input, store, resolver, ids, system_clock());
      store.flush();
      spdlog::info("ingest: accepted={} rejected={} duplicates={}", r.accepted, r.rejected, r.duplicates);
      return r.accepted == 0 && r.rejected > 0 ? 1 : 0;
    }

    if (serve_oai->parsed()) {
      need_store();
      repo.granularity = granularity == "day" ? Granularity::Day : Granularity::Seconds;
      repo.validate();
      EventStore store(cfg.store);
      const std::string key = token_key_file.empty() ? crypto::random_key() : first_line_of(token_key_file);
      if (key.empty()) throw Error(ErrorCode::EmptyKey, "token key file is empty");
      OaiProvider provider(store, repo, key);
      OaiHttpServer server(provider);
      const auto [host, port] = split_bind(oai_bind);
      const int bound = server.start(host, port);
      spdlog::info("serve-oai: {} on {}:{}{}", repo.base_url, host, bound, server.path());
      wait_for_signal();
      server.stop();
      return 0;
    }

    if (harvest->parsed()) {
      need_store();
      EventStore store(cfg.store);
      std::vector<HarvestSource> sources;
      if (!sources_file.empty()) sources = load_source_list(sources_file);
      if (!single_source.empty() &&
          std::none_of(sources.begin(), sources.end(), [&](const auto& s) { return s.base_url == single_source; }))
        sources.push_back({single_source, std::nullopt, true, {}});
      if (sources.empty()) throw Error(ErrorCode::InvalidConfig, "no harvest sources given");
      const fs::path state_file = cfg.store / "harvest_state.tsv";
      if (fs::exists(state_file)) load_harvest_state(state_file, sources);
      hopts.reject_file = cfg.store / "harvest_rejects.log";
      HttpTransport transport;
      int failures = 0;
      for (auto& source : sources) {
        if (!source.enabled || (!single_source.empty() && source.base_url != single_source)) continue;
        const auto r = harvest_source(source, store, transport, system_clock(), hopts);
        spdlog::info("harvest: source={} fetched={} new={} duplicates={} overlap={} quarantined={} complete={}",
                     r.source, r.fetched, r.new_records, r.duplicates, r.overlap_skipped, r.quarantined,
                     r.complete);
        for (const auto& e : r.errors) spdlog::warn("harvest: source={} page={} {}", r.source, e.page, e.reason);
        if (!r.complete) ++failures;
      }
      store.flush();
      save_harvest_state(state_file, sources);
      return failures == 0 ? 0 : 1;
    }

    if (pipeline->parsed()) {
      need_store();
      PipelineOptions opts;
      opts.resume = !no_resume;
      const auto report = run_pipeline(cfg, opts);
      std::cout << report_to_json(report);
      return 0;
    }

    if (cfg.store.empty() && cfg.artifacts.empty())
      throw Error(ErrorCode::InvalidConfig, "--store or --artifacts is required");

    if (serve_api->parsed()) {
      ApiService service(cfg.artifacts_dir());
      ApiHttpServer server(service);
      const auto [host, port] = split_bind(cfg.api_bind);
      const int bound = server.start(host, port);
      spdlog::info("serve-api: {} on {}:{}", cfg.artifacts_dir().string(), host, bound);
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      const auto report = cfg.artifacts_dir() / artifact::kReport;
      std::error_code ec;
      auto seen = fs::last_write_time(report, ec);
      while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(500));
        const auto now = fs::last_write_time(report, ec);
        if (!ec && now != seen && service.reload()) {
          seen = now;
          spdlog::info("serve-api: reloaded artifacts");
        }
      }
      server.stop();
      return 0;
    }

    if (dedup->parsed()) {
      need_store();
      EventStore store(cfg.store);
      std::map<std::string, EntityDescriptor> instances;
      store.scan(cfg.include_harvested ? ProvenanceFilter::Any : ProvenanceFilter::LocalOnly,
                 [&](const StoredRecord& r) {
                   instances.try_emplace(referent_instance_key(r.event.referent), r.event.referent);
                 });
      std::vector<EntityDescriptor> list;
      list.reserve(instances.size());
      for (const auto& [key, d] : instances) list.push_back(d);
      const auto clusters = cluster_referents(list, cfg.title_distance);
      std::string text;
      std::size_t i = 0;
      for (const auto& [key, d] : instances) text += key + '\t' + std::to_string(clusters.instance_cluster[i++]) + '\n';
      if (dedup_out.empty())
        std::cout << text;
      else
        artifact::write_text(dedup_out, text);
      spdlog::info("dedup: {} instances in {} clusters", list.size(), clusters.cluster_count());
      return 0;
    }

    if (exporter->parsed()) {
      need_store();
      EventStore store(cfg.store);
      std::ofstream out(export_out, std::ios::trunc);
      store.export_documents(out, local_only ? ProvenanceFilter::LocalOnly : ProvenanceFilter::Any);
      return out.flush() ? 0 : 1;
    }

    const fs::path dir = cfg.artifacts_dir();
    ApiService service(dir);
    ApiParams params;

    if (rank->parsed()) {
      if (rank_limit) params.emplace("limit", std::to_string(rank_limit));
      if (json_out) return emit_api(service, "/api/rankings", params);
      const auto rows = artifact::read_rankings(dir / artifact::kRankings);
      std::vector<ComparisonRow> shown(rows.begin(),
                                       rows.begin() + static_cast<std::ptrdiff_t>(
                                                          rank_limit ? std::min(rank_limit, rows.size()) : rows.size()));
      std::cout << artifact::format_rankings(shown);
      return 0;
    }
    if (map->parsed()) {
      if (json_out) return emit_api(service, "/api/map", params);
      std::cout << artifact::read_text(dir / artifact::kMap);
      return 0;
    }
    if (agents->parsed()) {
      params.emplace("limit", std::to_string(agents_limit));
      if (json_out) return emit_api(service, "/api/agents", params);
      const auto a = artifact::read_agents(dir / artifact::kAgents);
      std::cout << "# fitted=" << (a.fitted ? "true" : "false") << " slope=" << a.fit.slope << " r2=" << a.fit.r2
                << " cutoff_k=" << a.fit.cutoff_k << " median=" << a.median_count << '\n';
      std::map<std::string, double> weights;
      if (!agents_mode.empty()) {
        RequesterStats st;
        st.ranked = a.ranked;
        st.median_count = a.median_count;
        for (const auto& r : a.ranked) {
          st.histogram[r.requester] = r.count;
          if (r.flagged) st.flagged.insert(r.requester);
        }
        weights = requester_weights(st, parse_weight_mode(agents_mode));
      }
      for (std::size_t i = 0; i < a.ranked.size() && i < agents_limit; ++i) {
        std::cout << i + 1 << '\t' << a.ranked[i].count << '\t' << (a.ranked[i].flagged ? "*" : "") << '\t'
                  << a.ranked[i].requester;
        if (!agents_mode.empty()) std::cout << '\t' << format_double(weights.at(a.ranked[i].requester));
        std::cout << '\n';
      }
      return 0;
    }
    if (stats->parsed()) {
      if (json_out) return emit_api(service, "/api/stats", params);
      std::cout << artifact::read_text(dir / artifact::kReport);
      return 0;
    }
    if (rec->parsed()) {
      if (!q_doi.empty()) params.emplace("doi", q_doi);
      if (!q_title.empty()) params.emplace("title", q_title);
      if (!q_issn.empty()) params.emplace("issn", q_issn);
      if (!q_year.empty()) params.emplace("year", q_year);
      if (!q_cluster.empty()) params.emplace("cluster", q_cluster);
      params.emplace("k", std::to_string(k));
      if (json_out) return emit_api(service, "/api/recommend", params);
      const auto reply = service.handle("/api/recommend", params);
      const auto body = nlohmann::json::parse(reply.body);
      if (reply.status != 200) {
        std::cerr << body.dump(2) << '\n';
        return reply.status / 100;
      }
      std::cout << "# query cluster " << body["query"]["cluster"] << ": "
                << body["query"]["label"].get<std::string>() << '\n';
      if (body["not_in_graph"].get<bool>()) std::cout << "# no usage relations recorded for this item\n";
      for (const auto& item : body["items"])
        std::cout << item["rank"] << '\t' << format_double(item["score"].get<double>()) << '\t' << item["cluster"]
                  << '\t' << item["label"].get<std::string>() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
