#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "usagelog/model.hpp"

namespace usagelog {

enum class HeavyHitterBasis { Top, Median };

struct SynthConfig {
  std::size_t n_requesters = 10'000;
  std::size_t n_referents = 50'000;  // referent instances in the catalog
  std::size_t n_journals = 1'000;
  std::size_t n_events = 100'000;
  double referent_zipf_s = 1.0;
  double requester_zipf_s = 1.2;
  double duplicate_variant_rate = 0.1;
  std::size_t n_heavy_hitters = 3;
  /// Heavy-hitter weight as a multiple of the most active (Top) or the
  /// median (Median) ordinary requester's weight.
  double heavy_hitter_multiplier = 20.0;
  HeavyHitterBasis heavy_hitter_basis = HeavyHitterBasis::Top;
  double session_gap_minutes = 30.0;
  std::uint64_t seed = 42;
  /// Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct SyntheticJournal {
  std::string issn;
  std::string title;
};

/// Referent instances (distinct descriptors) and the works they denote.
struct SyntheticCatalog {
  std::vector<SyntheticJournal> journals;
  std::vector<EntityDescriptor> instances;
  std::vector<std::uint32_t> instance_work;
  std::vector<std::uint32_t> work_journal;
  std::vector<std::vector<std::uint32_t>> work_instances;
};

struct GroundTruth {
  /// Instance key (referent_instance_key) of every emitted instance -> work.
  std::map<std::string, std::uint32_t> true_clusters;
  std::set<std::string> true_heavy_hitters;  // requester URIs
  /// Dense per (requester sorted by URI, time) order, matching sessionize.
  std::unordered_map<Uuid, std::uint32_t, UuidHash> true_sessions;
};

SyntheticCatalog generate_catalog(const SynthConfig& config);

/// Emits events in ascending timestamp order. Deterministic in the seed.
GroundTruth generate_synthetic(const SynthConfig& config,
                               const std::function<void(const UsageEvent&)>& sink);
std::vector<UsageEvent> generate_events(const SynthConfig& config, GroundTruth* truth = nullptr);

/// `<prefix>.clusters.tsv`, `<prefix>.heavy_hitters.tsv`, `<prefix>.sessions.tsv`.
void write_ground_truth(const GroundTruth& truth, const std::string& prefix);

/// Per-ISSN impact values loosely tracking journal popularity, for exercising
/// ranking comparison. Written as `issn \t value`.
std::map<std::string, double> synthetic_impact_factors(const SynthConfig& config);

/// Request address of ordinary requester `i` (10.x.y.z).
std::string synthetic_requester_address(std::size_t i);

}  // namespace usagelog
