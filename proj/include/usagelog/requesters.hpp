#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "usagelog/model.hpp"

namespace usagelog {

struct PowerLawFit {
  double slope = 0.0;
  double r2 = 1.0;
  std::size_t cutoff_k = 0;
  bool threshold_met = true;  // false when the best-R² fallback was used
};

struct FitOptions {
  std::size_t k_max = 100;
  double r2_threshold = 0.98;
};

/// Least-squares fit of log(count) on log(rank) over the ranks after the
/// first k, tail re-indexed from 1 and sampled at ranks 1, 2, 4, 8, ... so
/// each scale weighs equally. Picks the smallest k in [0, k_max] reaching
/// the threshold; if none does, the k with the highest R².
/// `counts` must be sorted descending.
PowerLawFit fit_power_law(const std::vector<std::size_t>& counts, const FitOptions& options = {});

/// R² and slope for a single cut k (same sampling as fit_power_law).
PowerLawFit fit_tail(const std::vector<std::size_t>& counts, std::size_t k);

struct RequesterCount {
  std::string requester;
  std::size_t count = 0;
  bool flagged = false;
};

struct RequesterStats {
  std::map<std::string, std::size_t> histogram;
  std::vector<RequesterCount> ranked;  // count descending, then requester ascending
  PowerLawFit fit;
  std::set<std::string> flagged;
  std::size_t total_events = 0;
  double median_count = 0.0;
};

/// Throws TooFewRequesters below 10 distinct requesters.
RequesterStats analyze_requesters(std::map<std::string, std::size_t> histogram,
                                  const FitOptions& options = {});

/// Requester key of an event: its first requester identifier, or empty.
std::string requester_of(const UsageEvent& event);
std::map<std::string, std::size_t> requester_histogram(const std::vector<UsageEvent>& events);

enum class WeightMode { None, Filter, InverseFrequency };
std::string to_string(WeightMode m);
/// "none", "filter", "invfreq"; InvalidArgument otherwise.
WeightMode parse_weight_mode(std::string_view text);

/// None: 1 for all. Filter: 0 for flagged, 1 otherwise. InverseFrequency:
/// min(1, median / count).
std::map<std::string, double> requester_weights(const RequesterStats& stats, WeightMode mode);

/// `urn:x-session:` + first 28 hex digits of HMAC-SHA256(key, id). Throws
/// EmptyKey.
std::string pseudonymize(std::string_view requester_id, std::string_view secret_key);

}  // namespace usagelog
