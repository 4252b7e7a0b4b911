#include "usagelog/artifacts.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "usagelog/error.hpp"
#include "usagelog/relation_graph.hpp"

namespace usagelog::artifact {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += s[i];
    }
  }
  return out;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    out.emplace_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

void write_text(const std::filesystem::path& file, std::string_view content) {
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, file);
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::ArtifactsMissing, "missing artifact " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& file,
                                                std::map<std::string, std::string>* header = nullptr) {
  const std::string text = read_text(file);
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (header)
        for (const auto& field : split_tabs(line.substr(1))) {
          auto f = field;
          while (!f.empty() && f.front() == ' ') f.erase(0, 1);
          const auto eq = f.find('=');
          if (eq != std::string::npos) (*header)[f.substr(0, eq)] = f.substr(eq + 1);
        }
      continue;
    }
    rows.push_back(split_tabs(line));
  }
  return rows;
}

double parse_double(const std::string& s) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "bad number '" + s + "' in artifact");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::ParseError, "bad integer '" + s + "' in artifact");
  return v;
}

void expect_columns(const std::vector<std::string>& row, std::size_t n, const char* what) {
  if (row.size() != n)
    throw Error(ErrorCode::ParseError, std::string("malformed row in ") + what);
}

using Field = std::optional<std::string> ReferentMetadata::*;
constexpr Field kMetaFields[] = {
    &ReferentMetadata::genre,  &ReferentMetadata::atitle, &ReferentMetadata::jtitle,
    &ReferentMetadata::issn,   &ReferentMetadata::volume, &ReferentMetadata::issue,
    &ReferentMetadata::spage,  &ReferentMetadata::epage,  &ReferentMetadata::date,
    &ReferentMetadata::doi,
};

// Absent fields are written as a lone "\0" marker so they differ from empty strings.
constexpr std::string_view kAbsent = "\\0";

}  // namespace

std::string format_cluster_meta(const ClusterTable& t) {
  std::string out =
      "# cluster\tidentifiers\tgenre\tatitle\tjtitle\tissn\tvolume\tissue\tspage\tepage\tdate\tdoi\n";
  for (std::size_t c = 0; c < t.canonical.size(); ++c) {
    out += std::to_string(c);
    out += '\t';
    std::string ids;
    for (const auto& id : t.identifiers[c]) {
      if (!ids.empty()) ids += ' ';
      ids += escape(id);
    }
    out += ids;
    for (Field f : kMetaFields) {
      out += '\t';
      const auto& v = t.canonical[c].*f;
      if (v) out += escape(*v);
      else out += kAbsent;
    }
    out += '\n';
  }
  return out;
}

ClusterTable read_cluster_meta(const std::filesystem::path& file) {
  ClusterTable t;
  for (const auto& row : read_rows(file)) {
    expect_columns(row, 2 + std::size(kMetaFields), "cluster metadata");
    std::vector<std::string> ids;
    std::istringstream list(row[1]);
    std::string id;
    while (list >> id) ids.push_back(unescape(id));
    ReferentMetadata m;
    for (std::size_t i = 0; i < std::size(kMetaFields); ++i)
      if (row[2 + i] != kAbsent) m.*kMetaFields[i] = unescape(row[2 + i]);
    t.canonical.push_back(std::move(m));
    t.identifiers.push_back(std::move(ids));
  }
  return t;
}

std::string format_agents(const AgentsReport& a) {
  std::string out = "# fitted=" + std::string(a.fitted ? "true" : "false") +
                    "\tslope=" + format_double(a.fit.slope) + "\tr2=" + format_double(a.fit.r2) +
                    "\tcutoff_k=" + std::to_string(a.fit.cutoff_k) +
                    "\tthreshold_met=" + (a.fit.threshold_met ? "true" : "false") +
                    "\tmedian=" + format_double(a.median_count) +
                    "\ttotal=" + std::to_string(a.total_events) + "\n";
  out += "# rank\trequester\tcount\tflagged\n";
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    const auto& r = a.ranked[i];
    out += std::to_string(i + 1) + '\t' + escape(r.requester) + '\t' + std::to_string(r.count) +
           '\t' + (r.flagged ? "1" : "0") + '\n';
  }
  return out;
}

AgentsReport read_agents(const std::filesystem::path& file) {
  std::map<std::string, std::string> h;
  AgentsReport a;
  for (const auto& row : read_rows(file, &h)) {
    expect_columns(row, 4, "agents");
    a.ranked.push_back({unescape(row[1]), parse_size(row[2]), row[3] == "1"});
  }
  a.fitted = h["fitted"] == "true";
  a.fit.slope = parse_double(h.at("slope"));
  a.fit.r2 = parse_double(h.at("r2"));
  a.fit.cutoff_k = parse_size(h.at("cutoff_k"));
  a.fit.threshold_met = h["threshold_met"] == "true";
  a.median_count = parse_double(h.at("median"));
  a.total_events = parse_size(h.at("total"));
  return a;
}

std::string format_pagerank(const RankVector& r, const std::vector<std::string>& labels) {
  std::string out = "# damping=" + format_double(r.damping) +
                    "\titerations=" + std::to_string(r.iterations) +
                    "\tresidual=" + format_double(r.residual) +
                    "\tconverged=" + (r.converged ? "true" : "false") + "\n";
  for (std::size_t i = 0; i < r.scores.size(); ++i)
    out += std::to_string(i) + '\t' + escape(i < labels.size() ? labels[i] : "") + '\t' +
           format_double(r.scores[i]) + '\n';
  return out;
}

RankVector read_pagerank(const std::filesystem::path& file) {
  std::map<std::string, std::string> h;
  RankVector r;
  for (const auto& row : read_rows(file, &h)) {
    expect_columns(row, 3, "pagerank");
    r.scores.push_back(parse_double(row[2]));
  }
  r.damping = parse_double(h.at("damping"));
  r.iterations = parse_size(h.at("iterations"));
  r.residual = parse_double(h.at("residual"));
  r.converged = h["converged"] == "true";
  return r;
}

std::string format_map(const PcaResult& p) {
  std::string out = "# explained1=" + format_double(p.explained[0]) +
                    "\texplained2=" + format_double(p.explained[1]) +
                    "\tdegenerate=" + (p.degenerate ? "true" : "false") + "\n";
  out += "# label\tx\ty\tnode\n";
  for (const auto& pt : p.points)
    out += escape(pt.label) + '\t' + format_double(pt.x) + '\t' + format_double(pt.y) + '\t' +
           std::to_string(pt.node) + '\n';
  return out;
}

PcaResult read_map(const std::filesystem::path& file) {
  std::map<std::string, std::string> h;
  PcaResult p;
  for (const auto& row : read_rows(file, &h)) {
    expect_columns(row, 4, "map");
    p.points.push_back({static_cast<std::uint32_t>(parse_size(row[3])), unescape(row[0]),
                        parse_double(row[1]), parse_double(row[2])});
  }
  p.explained = {parse_double(h.at("explained1")), parse_double(h.at("explained2"))};
  p.degenerate = h["degenerate"] == "true";
  return p;
}

std::string format_rankings(const std::vector<ComparisonRow>& rows) {
  std::string out = "# rank\tprw\tif03\ttitle\tflag\tkey\tif_rank\n";
  for (const auto& r : rows)
    out += std::to_string(r.rank) + '\t' + format_double(r.prw) + '\t' +
           (r.if_value ? format_double(*r.if_value) : "-") + '\t' + escape(r.title) + '\t' +
           (r.deviation_flag ? "*" : "") + '\t' + escape(r.key) + '\t' +
           (r.if_rank ? std::to_string(*r.if_rank) : "-") + '\n';
  return out;
}

std::vector<ComparisonRow> read_rankings(const std::filesystem::path& file) {
  std::vector<ComparisonRow> rows;
  for (const auto& row : read_rows(file)) {
    expect_columns(row, 7, "rankings");
    ComparisonRow r;
    r.rank = parse_size(row[0]);
    r.prw = parse_double(row[1]);
    if (row[2] != "-") r.if_value = parse_double(row[2]);
    r.title = unescape(row[3]);
    r.deviation_flag = row[4] == "*";
    r.key = unescape(row[5]);
    if (row[6] != "-") r.if_rank = parse_size(row[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace usagelog::artifact
