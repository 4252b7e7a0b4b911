#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "usagelog/dedup.hpp"
#include "usagelog/error.hpp"
#include "usagelog/relation_graph.hpp"

namespace usagelog {

struct Query {
  std::optional<std::string> identifier;
  ReferentMetadata metadata;
  bool empty() const { return !identifier && metadata.empty(); }
};

/// Raised when a query resolves equally well to several clusters.
class AmbiguousQueryError : public Error {
 public:
  AmbiguousQueryError(std::string message, std::vector<std::uint32_t> candidates)
      : Error(ErrorCode::AmbiguousQuery, std::move(message)), candidates_(std::move(candidates)) {}
  const std::vector<std::uint32_t>& candidates() const { return candidates_; }

 private:
  std::vector<std::uint32_t> candidates_;
};

/// Lookup structures over canonical cluster metadata and identifiers.
class ClusterIndex {
 public:
  ClusterIndex() = default;
  ClusterIndex(std::vector<ReferentMetadata> canonical, std::vector<std::vector<std::string>> identifiers);

  /// Exact identifier, then exact dedup key, then the closest title prefix
  /// (edit distance at most `max_fuzzy_distance`) among clusters with the
  /// query's ISSN (and year, when given). Throws NotFound, AmbiguousQuery or
  /// InvalidArgument for an empty query.
  std::uint32_t resolve(const Query& q) const;

  std::size_t size() const { return canonical_.size(); }
  const ReferentMetadata& metadata(std::uint32_t c) const { return canonical_.at(c); }
  const std::vector<std::string>& identifiers(std::uint32_t c) const { return identifiers_.at(c); }
  std::string label(std::uint32_t c) const;

  std::size_t max_fuzzy_distance = 5;

 private:
  std::vector<ReferentMetadata> canonical_;
  std::vector<std::vector<std::string>> identifiers_;
  std::map<std::string, std::vector<std::uint32_t>> by_identifier_;
  std::map<DedupKey, std::vector<std::uint32_t>> by_key_;
  std::map<std::string, std::vector<std::uint32_t>> by_issn_;
  std::map<std::string, std::vector<std::uint32_t>> by_title_prefix_;
};

std::uint32_t resolve_query(const Query& q, const ClusterIndex& index);

struct Recommendation {
  std::uint32_t cluster;
  std::string label;
  double score;
  std::size_t rank;
};

struct RecommendResult {
  std::vector<Recommendation> items;
  bool not_in_graph = false;  // the cluster has no incident edges
};

/// Score of j is w(q->j) + w(j->q); best k, ties by label then id. Throws
/// NotFound when `cluster` is not a node of the graph.
RecommendResult recommend(std::uint32_t cluster, const RelationGraph& graph, std::size_t k = 10);

}  // namespace usagelog
