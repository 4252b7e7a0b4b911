#include "usagelog/relation_graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "usagelog/artifacts.hpp"
#include "usagelog/error.hpp"

namespace usagelog {

namespace {

void build_csr(std::size_t n, const std::vector<RelationGraph::Edge>& edges, bool reverse,
               std::vector<std::size_t>& offsets, std::vector<Neighbor>& adj) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) ++offsets[(reverse ? e.dst : e.src) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  adj.resize(edges.size());
  std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
  for (const auto& e : edges) {
    const auto from = reverse ? e.dst : e.src;
    const auto to = reverse ? e.src : e.dst;
    adj[fill[from]++] = {to, e.weight};
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(adj.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              adj.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
}

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

RelationGraph::RelationGraph(std::vector<std::string> labels, const std::vector<Edge>& edges,
                             bool directed)
    : labels_(std::move(labels)), directed_(directed) {
  const std::size_t n = labels_.size();
  std::vector<Edge> merged;
  merged.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n)
      throw Error(ErrorCode::InvalidArgument, "edge endpoint outside node range");
    if (e.src == e.dst || !(e.weight > 0)) continue;
    if (directed || e.src < e.dst) merged.push_back(e);
    else merged.push_back({e.dst, e.src, e.weight});
  }
  std::stable_sort(merged.begin(), merged.end(), [](const Edge& a, const Edge& b) {
    return pair_key(a.src, a.dst) < pair_key(b.src, b.dst);
  });
  std::size_t w = 0;
  for (std::size_t r = 0; r < merged.size(); ++r) {
    if (w > 0 && merged[w - 1].src == merged[r].src && merged[w - 1].dst == merged[r].dst)
      merged[w - 1].weight += merged[r].weight;
    else
      merged[w++] = merged[r];
  }
  merged.resize(w);
  edge_count_ = merged.size();
  for (const auto& e : merged) total_weight_ += e.weight;

  if (directed) {
    build_csr(n, merged, false, out_offsets_, out_);
    build_csr(n, merged, true, in_offsets_, in_);
  } else {
    std::vector<Edge> both = merged;
    both.reserve(merged.size() * 2);
    for (const auto& e : merged) both.push_back({e.dst, e.src, e.weight});
    build_csr(n, both, false, out_offsets_, out_);
    in_offsets_ = out_offsets_;
    in_ = out_;
  }
  out_weight_.assign(n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i)
    for (const auto& nb : out(i)) out_weight_[i] += nb.weight;

  by_label_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) by_label_.emplace_back(labels_[i], i);
  std::sort(by_label_.begin(), by_label_.end());
}

std::span<const Neighbor> RelationGraph::out(std::uint32_t i) const {
  if (out_offsets_.empty()) return {};
  return {out_.data() + out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]};
}

std::span<const Neighbor> RelationGraph::in(std::uint32_t i) const {
  if (in_offsets_.empty()) return {};
  return {in_.data() + in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]};
}

double RelationGraph::weight(std::uint32_t from, std::uint32_t to) const {
  const auto adj = out(from);
  auto it = std::lower_bound(adj.begin(), adj.end(), to,
                             [](const Neighbor& nb, std::uint32_t v) { return nb.node < v; });
  return it != adj.end() && it->node == to ? it->weight : 0.0;
}

std::vector<RelationGraph::Edge> RelationGraph::edges() const {
  std::vector<Edge> out_edges;
  out_edges.reserve(edge_count_);
  for (std::uint32_t i = 0; i < node_count(); ++i)
    for (const auto& nb : out(i))
      if (directed_ || i < nb.node) out_edges.push_back({i, nb.node, nb.weight});
  return out_edges;
}

std::optional<std::uint32_t> RelationGraph::find(std::string_view label) const {
  auto it = std::lower_bound(by_label_.begin(), by_label_.end(), label,
                             [](const auto& p, std::string_view l) { return p.first < l; });
  if (it == by_label_.end() || it->first != label) return std::nullopt;
  return it->second;
}

std::string to_string(GraphMode m) { return m == GraphMode::Transition ? "transition" : "coaccess"; }

GraphMode parse_graph_mode(std::string_view text) {
  if (text == "transition") return GraphMode::Transition;
  if (text == "coaccess" || text == "co-access") return GraphMode::CoAccess;
  throw Error(ErrorCode::InvalidArgument, "unknown graph mode '" + std::string(text) + "'");
}

RelationGraph build_relation_graph(const std::vector<UsageRecord>& records,
                                   const std::vector<double>& requester_weight,
                                   std::vector<std::string> cluster_labels, GraphMode mode) {
  const std::size_t n_nodes = cluster_labels.size();
  auto weight_of = [&](std::uint32_t r) {
    return r < requester_weight.size() ? requester_weight[r] : 1.0;
  };
  std::vector<std::uint32_t> order(records.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::unordered_map<std::uint64_t, double> acc;
  std::vector<std::uint64_t> first_seen;  // deterministic output order

  auto add = [&](std::uint32_t a, std::uint32_t b, double w) {
    auto [it, inserted] = acc.emplace(pair_key(a, b), 0.0);
    if (inserted) first_seen.push_back(it->first);
    it->second += w;
  };

  if (mode == GraphMode::Transition) {
    std::sort(order.begin(), order.end(), [&](auto x, auto y) {
      const auto& a = records[x];
      const auto& b = records[y];
      if (a.session != b.session) return a.session < b.session;
      if (a.time != b.time) return a.time < b.time;
      return a.event_id < b.event_id;
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
      const auto& prev = records[order[i - 1]];
      const auto& cur = records[order[i]];
      if (prev.session != cur.session || prev.cluster == cur.cluster) continue;
      const double w = weight_of(cur.requester);
      if (w > 0) add(prev.cluster, cur.cluster, w);
    }
  } else {
    std::sort(order.begin(), order.end(), [&](auto x, auto y) {
      const auto& a = records[x];
      const auto& b = records[y];
      if (a.requester != b.requester) return a.requester < b.requester;
      return a.cluster < b.cluster;
    });
    std::vector<std::uint32_t> items;
    for (std::size_t i = 0; i < order.size();) {
      const auto r = records[order[i]].requester;
      items.clear();
      std::size_t j = i;
      for (; j < order.size() && records[order[j]].requester == r; ++j)
        if (items.empty() || items.back() != records[order[j]].cluster)
          items.push_back(records[order[j]].cluster);
      i = j;
      const double w = std::min(weight_of(r), 1.0);
      if (!(w > 0)) continue;
      for (std::size_t a = 0; a < items.size(); ++a)
        for (std::size_t b = a + 1; b < items.size(); ++b) add(items[a], items[b], w);
    }
  }

  std::vector<RelationGraph::Edge> edges;
  edges.reserve(first_seen.size());
  for (auto key : first_seen) {
    const auto a = static_cast<std::uint32_t>(key >> 32);
    const auto b = static_cast<std::uint32_t>(key & 0xffffffffu);
    if (a >= n_nodes || b >= n_nodes)
      throw Error(ErrorCode::InvalidArgument, "record cluster outside label range");
    edges.push_back({a, b, acc[key]});
  }
  return RelationGraph(std::move(cluster_labels), edges, mode == GraphMode::Transition);
}

JournalAggregation aggregate_to_journals(const RelationGraph& articles,
                                         const std::vector<std::optional<std::string>>& cluster_journal,
                                         const std::vector<std::optional<std::string>>& cluster_jtitle) {
  JournalAggregation out;
  const std::size_t n = articles.node_count();
  for (std::size_t c = 0; c < n; ++c)
    if (c >= cluster_journal.size() || !cluster_journal[c]) ++out.unassigned_clusters;

  auto journal_of = [&](std::uint32_t c) -> const std::optional<std::string>* {
    if (c >= cluster_journal.size() || !cluster_journal[c]) return nullptr;
    return &cluster_journal[c];
  };

  std::map<std::string, std::uint32_t> journal_index;
  struct Pending {
    const std::string* a;
    const std::string* b;
    double w;
  };
  std::vector<Pending> pending;
  for (const auto& e : articles.edges()) {
    out.article_weight += e.weight;
    const auto* ja = journal_of(e.src);
    const auto* jb = journal_of(e.dst);
    if (!ja || !jb) {
      out.unassigned_weight += e.weight;
      continue;
    }
    if (**ja == **jb) {
      out.intra_journal_weight += e.weight;
      continue;
    }
    journal_index.emplace(**ja, 0);
    journal_index.emplace(**jb, 0);
    pending.push_back({&**ja, &**jb, e.weight});
  }
  std::vector<std::string> labels;
  for (auto& [key, idx] : journal_index) {
    idx = static_cast<std::uint32_t>(labels.size());
    labels.push_back(key);
  }
  // Most frequent title among member clusters, ties to the smallest.
  std::vector<std::map<std::string, std::size_t>> title_counts(labels.size());
  for (std::size_t c = 0; c < n; ++c) {
    if (c >= cluster_journal.size() || !cluster_journal[c]) continue;
    auto it = journal_index.find(*cluster_journal[c]);
    if (it == journal_index.end()) continue;
    const auto& t = c < cluster_jtitle.size() && cluster_jtitle[c] ? *cluster_jtitle[c] : it->first;
    ++title_counts[it->second][t];
  }
  for (std::size_t j = 0; j < labels.size(); ++j) {
    std::string best = labels[j];
    std::size_t best_count = 0;
    for (const auto& [t, cnt] : title_counts[j])
      if (cnt > best_count) {
        best = t;
        best_count = cnt;
      }
    out.titles.push_back(best);
  }
  std::vector<RelationGraph::Edge> edges;
  edges.reserve(pending.size());
  for (const auto& p : pending) edges.push_back({journal_index[*p.a], journal_index[*p.b], p.w});
  out.graph = RelationGraph(std::move(labels), edges, articles.directed());
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_graph(const RelationGraph& g, const std::filesystem::path& edges_file,
                 const std::filesystem::path& nodes_file) {
  std::ofstream e(edges_file, std::ios::trunc | std::ios::binary);
  std::ofstream n(nodes_file, std::ios::trunc | std::ios::binary);
  if (!e || !n) throw Error(ErrorCode::StorageFailure, "cannot write graph files");
  e << "# directed=" << (g.directed() ? "true" : "false") << '\n';
  for (const auto& edge : g.edges())
    e << edge.src << '\t' << edge.dst << '\t' << format_double(edge.weight) << '\n';
  for (std::uint32_t i = 0; i < g.node_count(); ++i) n << i << '\t' << artifact::escape(g.label(i)) << '\n';
  if (!e.flush() || !n.flush()) throw Error(ErrorCode::StorageFailure, "cannot write graph files");
}

RelationGraph read_graph(const std::filesystem::path& edges_file,
                         const std::filesystem::path& nodes_file) {
  std::ifstream e(edges_file), n(nodes_file);
  if (!e || !n) throw Error(ErrorCode::FileUnreadable, "cannot read graph files");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(n, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::ParseError, "bad node line: " + line);
    labels.push_back(artifact::unescape(line.substr(tab + 1)));
  }
  bool directed = true;
  std::vector<RelationGraph::Edge> edges;
  while (std::getline(e, line)) {
    if (line.rfind("# directed=", 0) == 0) {
      directed = line.substr(11) == "true";
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    RelationGraph::Edge edge{};
    if (!(fields >> edge.src >> edge.dst >> edge.weight))
      throw Error(ErrorCode::ParseError, "bad edge line: " + line);
    edges.push_back(edge);
  }
  return RelationGraph(std::move(labels), edges, directed);
}

}  // namespace usagelog
