#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "usagelog/model.hpp"
#include "usagelog/pagerank.hpp"
#include "usagelog/pca_map.hpp"
#include "usagelog/rankings.hpp"
#include "usagelog/requesters.hpp"

namespace usagelog::artifact {

inline constexpr const char* kSessions = "sessions.tsv";
inline constexpr const char* kInstanceClusters = "clusters.tsv";
inline constexpr const char* kClusterMeta = "cluster_meta.tsv";
inline constexpr const char* kAgents = "agents.tsv";
inline constexpr const char* kWeights = "weights.tsv";
inline constexpr const char* kArticleEdges = "article_edges.tsv";
inline constexpr const char* kArticleNodes = "article_nodes.tsv";
inline constexpr const char* kJournalEdges = "journal_edges.tsv";
inline constexpr const char* kJournalNodes = "journal_nodes.tsv";
inline constexpr const char* kJournals = "journals.tsv";
inline constexpr const char* kPageRank = "pagerank.tsv";
inline constexpr const char* kMap = "map.tsv";
inline constexpr const char* kRankings = "rankings.tsv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kTimings = "timings.json";
inline constexpr const char* kManifest = "manifest.tsv";

/// Backslash escapes for tab, newline, carriage return and backslash.
std::string escape(std::string_view s);
std::string unescape(std::string_view s);
std::vector<std::string> split_tabs(std::string_view line);

/// Writes through a temporary file renamed into place.
void write_text(const std::filesystem::path& file, std::string_view content);
std::string read_text(const std::filesystem::path& file);

struct ClusterTable {
  std::vector<ReferentMetadata> canonical;
  std::vector<std::vector<std::string>> identifiers;
};

std::string format_cluster_meta(const ClusterTable& t);
ClusterTable read_cluster_meta(const std::filesystem::path& file);

struct AgentsReport {
  std::vector<RequesterCount> ranked;
  PowerLawFit fit;
  double median_count = 0.0;
  std::size_t total_events = 0;
  bool fitted = false;  // false when there were too few requesters
};

std::string format_agents(const AgentsReport& a);
AgentsReport read_agents(const std::filesystem::path& file);

std::string format_pagerank(const RankVector& r, const std::vector<std::string>& labels);
RankVector read_pagerank(const std::filesystem::path& file);

std::string format_map(const PcaResult& p);
PcaResult read_map(const std::filesystem::path& file);

/// Columns: rank, prw, if03, title, flag, key.
std::string format_rankings(const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> read_rankings(const std::filesystem::path& file);

}  // namespace usagelog::artifact
