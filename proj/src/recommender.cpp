#include "usagelog/recommender.hpp"

#include <algorithm>
#include <unordered_map>

namespace usagelog {

namespace {

std::string candidates_text(const std::vector<std::uint32_t>& c) {
  std::string s;
  for (auto id : c) s += (s.empty() ? "" : ", ") + std::to_string(id);
  return s;
}

std::uint32_t unique_or_throw(const std::vector<std::uint32_t>& hits, const char* what) {
  if (hits.size() == 1) return hits.front();
  throw AmbiguousQueryError(std::string(what) + " matches clusters " + candidates_text(hits), hits);
}

}  // namespace

ClusterIndex::ClusterIndex(std::vector<ReferentMetadata> canonical,
                           std::vector<std::vector<std::string>> identifiers)
    : canonical_(std::move(canonical)), identifiers_(std::move(identifiers)) {
  identifiers_.resize(canonical_.size());
  for (std::uint32_t c = 0; c < canonical_.size(); ++c) {
    for (const auto& id : identifiers_[c]) by_identifier_[id].push_back(c);
    const auto& m = canonical_[c];
    if (m.doi) by_identifier_["info:doi/" + *m.doi].push_back(c);
    if (auto key = build_dedup_key(m)) by_key_[*key].push_back(c);
    if (m.issn) by_issn_[normalize_issn(*m.issn)].push_back(c);
    if (m.atitle) by_title_prefix_[title_prefix(*m.atitle)].push_back(c);
  }
  for (auto* index : {&by_identifier_, &by_issn_, &by_title_prefix_})
    for (auto& [k, v] : *index) v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::string ClusterIndex::label(std::uint32_t c) const {
  return citation_label(canonical_.at(c), identifiers_.at(c));
}

std::uint32_t ClusterIndex::resolve(const Query& q) const {
  if (q.empty()) throw Error(ErrorCode::InvalidArgument, "query has neither identifier nor metadata");
  if (q.identifier) {
    for (const auto& candidate : {*q.identifier, "info:doi/" + *q.identifier}) {
      auto it = by_identifier_.find(candidate);
      if (it != by_identifier_.end()) return unique_or_throw(it->second, "identifier");
    }
  }
  const auto& m = q.metadata;
  if (auto key = build_dedup_key(m)) {
    auto it = by_key_.find(*key);
    if (it != by_key_.end()) return unique_or_throw(it->second, "dedup key");
  }
  if (m.atitle) {
    const std::string prefix = title_prefix(*m.atitle);
    const std::vector<std::uint32_t>* pool = nullptr;
    if (m.issn) {
      auto it = by_issn_.find(normalize_issn(*m.issn));
      if (it != by_issn_.end()) pool = &it->second;
    } else {
      auto it = by_title_prefix_.find(prefix);
      if (it != by_title_prefix_.end()) return unique_or_throw(it->second, "title");
    }
    if (pool) {
      const std::string year = m.date && m.date->size() >= 4 ? m.date->substr(0, 4) : "";
      std::size_t best = max_fuzzy_distance + 1;
      std::vector<std::uint32_t> hits;
      for (auto c : *pool) {
        const auto& cm = canonical_[c];
        if (!year.empty() && (!cm.date || cm.date->substr(0, 4) != year)) continue;
        if (!cm.atitle) continue;
        const auto d = levenshtein(prefix, title_prefix(*cm.atitle));
        if (d < best) {
          best = d;
          hits.assign(1, c);
        } else if (d == best) {
          hits.push_back(c);
        }
      }
      if (!hits.empty()) return unique_or_throw(hits, "title");
    }
  }
  throw Error(ErrorCode::NotFound, "no cluster matches the query");
}

std::uint32_t resolve_query(const Query& q, const ClusterIndex& index) { return index.resolve(q); }

RecommendResult recommend(std::uint32_t cluster, const RelationGraph& graph, std::size_t k) {
  if (cluster >= graph.node_count())
    throw Error(ErrorCode::NotFound, "cluster " + std::to_string(cluster) + " is not in the graph");
  std::unordered_map<std::uint32_t, double> score;
  for (const auto& nb : graph.out(cluster)) score[nb.node] += nb.weight;
  for (const auto& nb : graph.in(cluster)) score[nb.node] += nb.weight;
  score.erase(cluster);
  RecommendResult out;
  out.not_in_graph = score.empty();
  std::vector<Recommendation> all;
  all.reserve(score.size());
  for (const auto& [node, s] : score) all.push_back({node, graph.label(node), s, 0});
  auto better = [](const Recommendation& a, const Recommendation& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.label != b.label) return a.label < b.label;
    return a.cluster < b.cluster;
  };
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);
  all.resize(take);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = i + 1;
  out.items = std::move(all);
  return out;
}

}  // namespace usagelog
