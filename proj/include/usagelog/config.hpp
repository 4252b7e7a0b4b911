#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "usagelog/relation_graph.hpp"
#include "usagelog/requesters.hpp"

namespace usagelog {

using KeyValues = std::map<std::string, std::string>;

/// Flat `key = value` file; `#` starts a comment line. InvalidConfig on a
/// line without `=`; FileUnreadable when missing.
KeyValues read_key_values(const std::filesystem::path& file);

struct PipelineConfig {
  std::filesystem::path store;
  std::filesystem::path artifacts;  // defaults to <store>/artifacts
  bool include_harvested = true;
  double session_gap_minutes = 30.0;
  std::size_t title_distance = 2;
  std::size_t k_max = 100;
  double r2_threshold = 0.98;
  WeightMode weight_mode = WeightMode::Filter;
  GraphMode graph_mode = GraphMode::Transition;
  double damping = 0.85;
  double tolerance = 1e-8;
  std::size_t max_iterations = 1000;
  std::size_t pca_top_n = 500;
  double flag_fraction = 0.25;
  std::optional<std::filesystem::path> impact_factors;
  std::string api_bind = "127.0.0.1:8081";
  std::optional<std::filesystem::path> secret_key_file;

  /// Recognized keys, in documentation order.
  static const std::vector<std::string>& keys();
  /// Applies values over the current settings; InvalidConfig on unknown keys
  /// or unparsable values.
  void apply(const KeyValues& values);
  KeyValues to_key_values() const;
  /// InvalidConfig when a parameter is out of range or the store is unset.
  void validate() const;
  std::filesystem::path artifacts_dir() const;
};

}  // namespace usagelog
