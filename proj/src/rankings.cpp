#include "usagelog/rankings.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "usagelog/dedup.hpp"
#include "usagelog/error.hpp"
#include "usagelog/xml.hpp"

namespace usagelog {

std::string normalize_journal_key(std::string_view key) {
  std::string compact;
  for (char c : key)
    if (c != '-' && c != ' ') compact += c;
  const bool issn_like =
      compact.size() == 8 && std::all_of(compact.begin(), compact.begin() + 7,
                                         [](char c) { return c >= '0' && c <= '9'; }) &&
      ((compact[7] >= '0' && compact[7] <= '9') || compact[7] == 'X' || compact[7] == 'x');
  return issn_like ? normalize_issn(key) : normalize_title(key);
}

std::vector<ComparisonRow> compare_rankings(const RankVector& ranks, const RelationGraph& graph,
                                            const std::vector<std::string>& titles,
                                            const std::map<std::string, double>& impact_factors,
                                            double flag_fraction) {
  std::map<std::string, double> impact;
  for (const auto& [k, v] : impact_factors) impact[normalize_journal_key(k)] = v;
  std::vector<ComparisonRow> rows;
  std::vector<double> scores;
  const double scale = static_cast<double>(graph.node_count());
  for (std::uint32_t i = 0; i < graph.node_count(); ++i) {
    auto it = impact.find(normalize_journal_key(graph.label(i)));
    if (it == impact.end()) continue;
    ComparisonRow row;
    row.key = graph.label(i);
    row.title = i < titles.size() ? titles[i] : graph.label(i);
    row.prw = ranks.scores.at(i) * scale;
    row.if_value = it->second;
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw Error(ErrorCode::EmptyIntersection, "no graph node has an impact factor");
  auto by = [](auto value) {
    return [value](const ComparisonRow& a, const ComparisonRow& b) {
      if (value(a) != value(b)) return value(a) > value(b);
      if (a.title != b.title) return a.title < b.title;
      return a.key < b.key;
    };
  };
  std::sort(rows.begin(), rows.end(), by([](const ComparisonRow& r) { return *r.if_value; }));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].if_rank = i + 1;
  std::sort(rows.begin(), rows.end(), by([](const ComparisonRow& r) { return r.prw; }));
  const double n = static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].rank = i + 1;
    const double diff =
        std::abs(static_cast<double>(rows[i].rank) - static_cast<double>(*rows[i].if_rank));
    rows[i].deviation_flag = diff / n > flag_fraction;
  }
  return rows;
}

std::map<std::string, double> load_impact_factors(const std::filesystem::path& file,
                                                  std::vector<std::string>* warnings) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read " + file.string());
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = xml::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = line.find('\t');
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::BadNumber, "line " + std::to_string(line_no) + ": " + why);
    };
    if (tab == std::string::npos) throw bad("expected key<TAB>value");
    const std::string key(xml::trim(std::string_view(line).substr(0, tab)));
    const auto text = xml::trim(std::string_view(line).substr(tab + 1));
    double value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty() || !std::isfinite(value))
      throw bad("'" + std::string(text) + "' is not a number");
    if (key.empty()) throw bad("empty key");
    if (out.count(key)) {
      const std::string msg = "line " + std::to_string(line_no) + ": duplicate key '" + key +
                              "', keeping the later value";
      spdlog::warn("{}: {}", file.string(), msg);
      if (warnings) warnings->push_back(msg);
    }
    out[key] = value;
  }
  return out;
}

}  // namespace usagelog
