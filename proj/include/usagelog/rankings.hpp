#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "usagelog/pagerank.hpp"
#include "usagelog/relation_graph.hpp"

namespace usagelog {

struct ComparisonRow {
  std::size_t rank = 0;  // position under PRw, 1-based
  std::string key;       // journal key
  std::string title;
  double prw = 0.0;      // score x graph node count
  std::optional<double> if_value;  // absent when no impact factor is known
  std::optional<std::size_t> if_rank;
  bool deviation_flag = false;
};

/// ISSN-looking keys normalize as ISSNs, everything else as titles.
std::string normalize_journal_key(std::string_view key);

/// Rows for nodes present in both the graph and `impact_factors`, sorted by
/// PRw descending (ties by title then key). A row is flagged when its rank
/// difference exceeds `flag_fraction` of the intersection size. Throws
/// EmptyIntersection. `titles` may be empty, in which case labels are used.
std::vector<ComparisonRow> compare_rankings(const RankVector& ranks, const RelationGraph& graph,
                                            const std::vector<std::string>& titles,
                                            const std::map<std::string, double>& impact_factors,
                                            double flag_fraction = 0.25);

/// Two-column `key \t value` file; `#` comments and blank lines skipped;
/// a repeated key keeps the last value. Throws FileUnreadable or
/// BadNumber naming the line.
std::map<std::string, double> load_impact_factors(const std::filesystem::path& file,
                                                  std::vector<std::string>* warnings = nullptr);

}  // namespace usagelog
