#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "usagelog/model.hpp"

namespace usagelog {

struct Neighbor {
  std::uint32_t node;
  double weight;
};

/// Immutable sparse weighted graph in compressed adjacency form. Undirected
/// graphs store each edge in both adjacency lists but count it once.
class RelationGraph {
 public:
  struct Edge {
    std::uint32_t src;
    std::uint32_t dst;
    double weight;
  };

  RelationGraph() = default;
  /// Sums parallel edges; drops self-loops and non-positive weights. For
  /// undirected graphs (a, b) and (b, a) are the same edge.
  RelationGraph(std::vector<std::string> labels, const std::vector<Edge>& edges, bool directed);

  std::size_t node_count() const { return labels_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  bool directed() const { return directed_; }
  const std::string& label(std::uint32_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  /// Nodes sorted ascending.
  std::span<const Neighbor> out(std::uint32_t i) const;
  std::span<const Neighbor> in(std::uint32_t i) const;
  double weight(std::uint32_t from, std::uint32_t to) const;
  double out_weight(std::uint32_t i) const { return out_weight_[i]; }
  /// Sum over edges, each undirected edge once.
  double total_weight() const { return total_weight_; }
  /// (src, dst) ascending; undirected edges listed once with src < dst.
  std::vector<Edge> edges() const;
  std::optional<std::uint32_t> find(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::size_t> out_offsets_, in_offsets_;
  std::vector<Neighbor> out_, in_;
  std::vector<double> out_weight_;
  std::vector<std::pair<std::string_view, std::uint32_t>> by_label_;
  std::size_t edge_count_ = 0;
  double total_weight_ = 0.0;
  bool directed_ = true;
};

enum class GraphMode { Transition, CoAccess };
std::string to_string(GraphMode m);
GraphMode parse_graph_mode(std::string_view text);

/// One usage event reduced to what mining needs.
struct UsageRecord {
  std::uint32_t cluster;
  std::uint32_t requester;
  std::uint32_t session;
  UtcTime time;
  Uuid event_id;
};

/// Transition: within each session ordered by (time, event_id), every
/// consecutive pair of distinct clusters adds the requester's weight to the
/// directed edge. CoAccess: every unordered pair of distinct clusters a
/// requester touched adds min(weight, 1) once. Nodes are all clusters.
RelationGraph build_relation_graph(const std::vector<UsageRecord>& records,
                                   const std::vector<double>& requester_weight,
                                   std::vector<std::string> cluster_labels, GraphMode mode);

struct JournalAggregation {
  RelationGraph graph;  // labels are journal keys
  std::vector<std::string> titles;  // display title per journal node
  double article_weight = 0.0;
  double intra_journal_weight = 0.0;  // discarded same-journal edges
  double unassigned_weight = 0.0;  // edges touching clusters without a journal
  std::size_t unassigned_clusters = 0;
};

/// `cluster_journal[c]` is the journal key of cluster c (nullopt drops it);
/// `cluster_jtitle[c]` its journal title, used for display.
JournalAggregation aggregate_to_journals(const RelationGraph& articles,
                                         const std::vector<std::optional<std::string>>& cluster_journal,
                                         const std::vector<std::optional<std::string>>& cluster_jtitle);

/// Edges as `src \t dst \t weight` after a `# directed=...` header; nodes as
/// `id \t label`.
void write_graph(const RelationGraph& g, const std::filesystem::path& edges_file,
                 const std::filesystem::path& nodes_file);
RelationGraph read_graph(const std::filesystem::path& edges_file,
                         const std::filesystem::path& nodes_file);

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

}  // namespace usagelog
