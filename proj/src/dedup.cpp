#include "usagelog/dedup.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

#include "usagelog/crypto.hpp"

namespace usagelog {

namespace {

bool is_ascii_punct(unsigned char c) {
  return c < 128 && ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
                     (c >= 123 && c <= 126));
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 6 ? 2 : (c >> 4) == 14 ? 3 : (c >> 3) == 30 ? 4 : 1;
    if (i + len > s.size()) len = 1;
    char32_t cp = len == 1 ? c : c & (0x7F >> len);
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::size_t utf8_length(unsigned char lead) {
  return lead < 0x80 ? 1 : (lead >> 5) == 6 ? 2 : (lead >> 4) == 14 ? 3 : (lead >> 3) == 30 ? 4 : 1;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

std::size_t bounded_levenshtein(const std::vector<char32_t>& a, const std::vector<char32_t>& b,
                                std::size_t bound) {
  const std::size_t n = a.size(), m = b.size();
  if ((n > m ? n - m : m - n) > bound) return bound + 1;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    std::size_t row_min = cur[0];
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > bound) return bound + 1;
    std::swap(prev, cur);
  }
  return prev[m];
}

void put_field(std::string& out, char tag, const std::optional<std::string>& v) {
  if (!v) return;
  out += tag;
  out += *v;
  out += '\x1e';
}

}  // namespace

std::string normalize_title(std::string_view title) {
  std::string out;
  out.reserve(title.size());
  bool pending_space = false;
  for (unsigned char c : title) {
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (is_ascii_punct(c)) continue;
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  }
  return out;
}

std::string title_prefix(std::string_view title, std::size_t n) {
  std::string norm = normalize_title(title);
  std::size_t pos = 0, count = 0;
  while (pos < norm.size() && count < n) {
    pos += utf8_length(static_cast<unsigned char>(norm[pos]));
    ++count;
  }
  norm.resize(std::min(pos, norm.size()));
  while (!norm.empty() && norm.back() == ' ') norm.pop_back();
  return norm;
}

std::string normalize_issn(std::string_view issn) {
  std::string d;
  for (char c : issn) {
    if (c == '-' || c == ' ') continue;
    d += c == 'x' ? 'X' : c;
  }
  if (d.size() == 8) return d.substr(0, 4) + "-" + d.substr(4);
  return d;
}

std::string normalize_page(std::string_view page) {
  std::size_t i = 0;
  while (i + 1 < page.size() && page[i] == '0') ++i;
  return std::string(page.substr(i));
}

std::optional<DedupKey> build_dedup_key(const ReferentMetadata& m) {
  if (!m.issn || !m.spage || !m.date) return std::nullopt;
  const std::string& date = *m.date;
  if (date.size() < 4 || !std::all_of(date.begin(), date.begin() + 4, [](char c) {
        return c >= '0' && c <= '9';
      }))
    return std::nullopt;
  DedupKey key{normalize_issn(*m.issn), normalize_page(*m.spage), date.substr(0, 4),
               m.atitle ? title_prefix(*m.atitle) : std::string()};
  if (key.issn.empty() || key.start_page.empty()) return std::nullopt;
  return key;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto ca = code_points(a), cb = code_points(b);
  return bounded_levenshtein(ca, cb, std::max(ca.size(), cb.size()));
}

std::string referent_instance_key(const EntityDescriptor& r) {
  std::string canon;
  for (const auto& id : r.identifiers) {
    canon += 'I';
    canon += id;
    canon += '\x1e';
  }
  if (r.metadata) {
    const auto& m = *r.metadata;
    canon += 'M';
    put_field(canon, 'g', m.genre);
    put_field(canon, 'a', m.atitle);
    put_field(canon, 'j', m.jtitle);
    put_field(canon, 's', m.issn);
    put_field(canon, 'v', m.volume);
    put_field(canon, 'i', m.issue);
    put_field(canon, 'p', m.spage);
    put_field(canon, 'e', m.epage);
    put_field(canon, 'd', m.date);
    put_field(canon, 'o', m.doi);
  }
  put_field(canon, 'P', r.private_data);
  const auto digest = crypto::sha256(canon);
  return crypto::hex(digest.data(), 16);
}

ClusterAssignment cluster_referents(const std::vector<EntityDescriptor>& instances,
                                    std::size_t max_title_distance) {
  const std::size_t n = instances.size();
  UnionFind uf(n);

  std::unordered_map<std::string, std::uint32_t> by_identifier;
  for (std::uint32_t i = 0; i < n; ++i)
    for (const auto& id : instances[i].identifiers) {
      auto [it, inserted] = by_identifier.emplace(id, i);
      if (!inserted) uf.unite(it->second, i);
    }

  std::vector<std::pair<DedupKey, std::uint32_t>> keyed;
  for (std::uint32_t i = 0; i < n; ++i)
    if (instances[i].metadata)
      if (auto k = build_dedup_key(*instances[i].metadata)) keyed.emplace_back(std::move(*k), i);
  std::sort(keyed.begin(), keyed.end());

  for (std::size_t b = 0; b < keyed.size();) {
    const auto& head = keyed[b].first;
    std::size_t e = b;
    while (e < keyed.size() && keyed[e].first.issn == head.issn &&
           keyed[e].first.start_page == head.start_page &&
           keyed[e].first.publication_year == head.publication_year)
      ++e;
    // Distinct prefixes in the block with one representative each.
    std::vector<std::pair<std::vector<char32_t>, std::uint32_t>> reps;
    for (std::size_t i = b; i < e;) {
      std::size_t j = i + 1;
      while (j < e && keyed[j].first.title_prefix == keyed[i].first.title_prefix) {
        uf.unite(keyed[i].second, keyed[j].second);
        ++j;
      }
      reps.emplace_back(code_points(keyed[i].first.title_prefix), keyed[i].second);
      i = j;
    }
    for (std::size_t x = 0; x < reps.size(); ++x)
      for (std::size_t y = x + 1; y < reps.size(); ++y)
        if (bounded_levenshtein(reps[x].first, reps[y].first, max_title_distance) <=
            max_title_distance)
          uf.unite(reps[x].second, reps[y].second);
    b = e;
  }

  ClusterAssignment out;
  out.instance_cluster.resize(n);
  std::unordered_map<std::uint32_t, std::uint32_t> dense;
  std::vector<std::vector<std::uint32_t>> members;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto root = uf.find(i);
    auto [it, inserted] = dense.emplace(root, static_cast<std::uint32_t>(members.size()));
    if (inserted) members.emplace_back();
    out.instance_cluster[i] = it->second;
    members[it->second].push_back(i);
  }

  using Field = std::optional<std::string> ReferentMetadata::*;
  static constexpr Field kFields[] = {
      &ReferentMetadata::genre,  &ReferentMetadata::atitle, &ReferentMetadata::jtitle,
      &ReferentMetadata::issn,   &ReferentMetadata::volume, &ReferentMetadata::issue,
      &ReferentMetadata::spage,  &ReferentMetadata::epage,  &ReferentMetadata::date,
      &ReferentMetadata::doi,
  };
  out.canonical.resize(members.size());
  out.identifiers.resize(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& ids = out.identifiers[c];
    for (auto i : members[c])
      ids.insert(ids.end(), instances[i].identifiers.begin(), instances[i].identifiers.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (Field f : kFields) {
      std::map<std::string, std::size_t> counts;
      for (auto i : members[c])
        if (const auto& m = instances[i].metadata; m && (*m).*f) ++counts[*((*m).*f)];
      const std::string* best = nullptr;
      std::size_t best_count = 0;
      for (const auto& [value, count] : counts)
        if (count > best_count) {
          best = &value;
          best_count = count;
        }
      if (best) out.canonical[c].*f = *best;
    }
  }
  return out;
}

std::string citation_label(const ReferentMetadata& m, const std::vector<std::string>& identifiers) {
  std::string out;
  if (m.atitle) out += *m.atitle;
  if (m.jtitle) {
    if (!out.empty()) out += ". ";
    out += *m.jtitle;
  }
  if (m.volume) {
    out += ' ';
    out += *m.volume;
    if (m.issue) out += "(" + *m.issue + ")";
  }
  if (m.spage) out += ":" + *m.spage;
  if (m.date) out += " (" + m.date->substr(0, 4) + ")";
  if (out.empty() && m.issn) out = "ISSN " + *m.issn;
  if (out.empty() && !identifiers.empty()) out = identifiers.front();
  return out.empty() ? std::string("(untitled)") : out;
}

std::optional<std::string> journal_key(const ReferentMetadata& m) {
  if (m.issn) {
    auto k = normalize_issn(*m.issn);
    if (!k.empty()) return k;
  }
  if (m.jtitle) {
    auto k = normalize_title(*m.jtitle);
    if (!k.empty()) return k;
  }
  return std::nullopt;
}

}  // namespace usagelog
