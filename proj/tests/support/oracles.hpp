#pragma once

// Independent reference implementations used to check the library. They
// favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "usagelog/dedup.hpp"
#include "usagelog/relation_graph.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

/// Stationary vector of the damped walk, solved directly:
/// x = d (P^T x + (dangling . x) / n) + (1 - d) / n.
inline std::vector<double> dense_pagerank(const Matrix& w, double d) {
  const std::size_t n = w.size();
  Matrix a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double out = std::accumulate(w[i].begin(), w[i].end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double p = out > 0 ? w[i][j] / out : 1.0 / static_cast<double>(n);
      a[j][i] -= d * p;  // column i of P^T
    }
  }
  for (std::size_t i = 0; i < n; ++i) a[i][i] += 1.0;
  return solve(a, std::vector<double>(n, (1.0 - d) / static_cast<double>(n)));
}

struct Eigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // vectors[k] is the k-th eigenvector
};

/// Cyclic Jacobi rotations for a symmetric matrix.
inline Eigen jacobi_eigen(Matrix a) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  Eigen out;
  for (auto k : order) {
    out.values.push_back(a[k][k]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

/// Flips `v` so its first largest-magnitude entry is positive.
inline void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0)
    for (auto& x : v) x = -x;
}

/// Transition weights: for every pair of records (a, b) in the same
/// session, b is the direct successor of a when no other record of the
/// session lies strictly between them in (time, id) order.
inline std::map<std::pair<std::uint32_t, std::uint32_t>, double> brute_transition(
    const std::vector<usagelog::UsageRecord>& rs, const std::vector<double>& weight) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> out;
  auto before = [](const usagelog::UsageRecord& x, const usagelog::UsageRecord& y) {
    return std::tie(x.time, x.event_id) < std::tie(y.time, y.event_id);
  };
  for (std::size_t a = 0; a < rs.size(); ++a)
    for (std::size_t b = 0; b < rs.size(); ++b) {
      if (a == b || rs[a].session != rs[b].session || !before(rs[a], rs[b])) continue;
      bool direct = true;
      for (std::size_t c = 0; c < rs.size() && direct; ++c)
        if (c != a && c != b && rs[c].session == rs[a].session && before(rs[a], rs[c]) && before(rs[c], rs[b]))
          direct = false;
      if (!direct || rs[a].cluster == rs[b].cluster) continue;
      const double w = weight[rs[b].requester];
      if (w > 0) out[{rs[a].cluster, rs[b].cluster}] += w;
    }
  return out;
}

/// CoAccess weights: each unordered pair of distinct clusters a requester
/// touched gains min(weight, 1) once per requester.
inline std::map<std::pair<std::uint32_t, std::uint32_t>, double> brute_coaccess(
    const std::vector<usagelog::UsageRecord>& rs, const std::vector<double>& weight) {
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;  // requester, lo, hi
  for (std::size_t a = 0; a < rs.size(); ++a)
    for (std::size_t b = 0; b < rs.size(); ++b)
      if (rs[a].requester == rs[b].requester && rs[a].cluster < rs[b].cluster)
        seen.insert({rs[a].requester, rs[a].cluster, rs[b].cluster});
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> out;
  for (const auto& [r, lo, hi] : seen) {
    const double w = std::min(weight[r], 1.0);
    if (w > 0) out[{lo, hi}] += w;
  }
  return out;
}

/// Journal edges by summing every article edge whose endpoints map to two
/// different journals. Keys are journal keys.
inline std::map<std::pair<std::string, std::string>, double> brute_journal_sum(
    const usagelog::RelationGraph& g, const std::vector<std::optional<std::string>>& journal) {
  std::map<std::pair<std::string, std::string>, double> out;
  for (std::uint32_t i = 0; i < g.node_count(); ++i)
    for (std::uint32_t j = 0; j < g.node_count(); ++j) {
      if (!g.directed() && j <= i) continue;
      const double w = g.weight(i, j);
      if (w <= 0 || !journal[i] || !journal[j] || *journal[i] == *journal[j]) continue;
      auto a = *journal[i], b = *journal[j];
      if (!g.directed() && b < a) std::swap(a, b);
      out[{a, b}] += w;
    }
  return out;
}

inline std::vector<char32_t> decode_utf8(const std::string& s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    const int len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline std::size_t edit_distance(const std::string& x, const std::string& y) {
  const auto a = decode_utf8(x), b = decode_utf8(y);
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

/// All-pairs union-find: instances sharing an identifier, or with equal
/// (issn, spage, year) and title prefixes within `max_distance`, merge.
/// Cluster ids are dense in order of each cluster's first instance.
inline std::vector<std::uint32_t> brute_clusters(const std::vector<usagelog::EntityDescriptor>& xs,
                                                 std::size_t max_distance) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  std::vector<std::optional<usagelog::DedupKey>> keys(n);
  for (std::size_t i = 0; i < n; ++i)
    if (xs[i].metadata) keys[i] = usagelog::build_dedup_key(*xs[i].metadata);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      bool same = false;
      for (const auto& a : xs[i].identifiers)
        for (const auto& b : xs[j].identifiers) same = same || a == b;
      if (!same && keys[i] && keys[j] && keys[i]->issn == keys[j]->issn &&
          keys[i]->start_page == keys[j]->start_page && keys[i]->publication_year == keys[j]->publication_year)
        same = edit_distance(keys[i]->title_prefix, keys[j]->title_prefix) <= max_distance;
      if (same) {
        const auto ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  std::map<std::size_t, std::uint32_t> dense;
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    auto it = dense.find(r);
    if (it == dense.end()) it = dense.emplace(r, static_cast<std::uint32_t>(dense.size())).first;
    out[i] = it->second;
  }
  return out;
}

/// Recommendation order by direct scoring of every other node.
struct Scored {
  std::uint32_t node;
  double score;
};

/// `w` is the dense adjacency (symmetric for undirected graphs).
inline std::vector<Scored> brute_recommend(const Matrix& w, const std::vector<std::string>& labels,
                                           std::uint32_t q, std::size_t k) {
  std::vector<Scored> all;
  for (std::uint32_t j = 0; j < w.size(); ++j) {
    if (j == q) continue;
    const double s = w[q][j] + w[j][q];
    if (s > 0) all.push_back({j, s});
  }
  std::sort(all.begin(), all.end(), [&](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (labels[a.node] != labels[b.node]) return labels[a.node] < labels[b.node];
    return a.node < b.node;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace oracle
