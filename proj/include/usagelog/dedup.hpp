#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "usagelog/model.hpp"

namespace usagelog {

/// ASCII lowercase, punctuation removed, whitespace runs collapsed, trimmed.
/// Non-ASCII code points pass through unchanged.
std::string normalize_title(std::string_view title);
/// First `n` code points of the normalized title, trailing space trimmed.
std::string title_prefix(std::string_view title, std::size_t n = 25);
/// `NNNN-NNNC` with uppercase check character; input spacing/hyphen optional.
std::string normalize_issn(std::string_view issn);
std::string normalize_page(std::string_view page);

struct DedupKey {
  std::string issn;
  std::string start_page;
  std::string publication_year;
  std::string title_prefix;
  friend auto operator<=>(const DedupKey&, const DedupKey&) = default;
};

/// Absent unless issn, spage and a 4-digit year are all present.
std::optional<DedupKey> build_dedup_key(const ReferentMetadata& metadata);

/// Edit distance over UTF-8 code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Stable identity of a referent instance: hex digest of its canonical form.
std::string referent_instance_key(const EntityDescriptor& referent);

struct ClusterAssignment {
  /// Cluster of each input instance, dense ids in order of first member.
  std::vector<std::uint32_t> instance_cluster;
  std::vector<ReferentMetadata> canonical;
  std::vector<std::vector<std::string>> identifiers;  // sorted, unique
  std::size_t cluster_count() const { return canonical.size(); }
};

/// Identifier pass then blocked fuzzy-title pass; see README for the rules.
ClusterAssignment cluster_referents(const std::vector<EntityDescriptor>& instances,
                                    std::size_t max_title_distance = 2);

/// One-line human citation, e.g. `Title. Journal 12(3):45 (2004)`.
std::string citation_label(const ReferentMetadata& m, const std::vector<std::string>& identifiers);

/// Journal identity for aggregation: ISSN when present, else normalized
/// journal title; nullopt when neither is available.
std::optional<std::string> journal_key(const ReferentMetadata& m);

}  // namespace usagelog
