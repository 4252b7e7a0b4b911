#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "usagelog/relation_graph.hpp"

namespace usagelog {

struct MapPoint {
  std::uint32_t node;
  std::string label;
  double x;
  double y;
};

struct PcaResult {
  std::vector<MapPoint> points;
  std::array<double, 2> explained{0.0, 0.0};  // fractions of total variance
  /// Unit principal directions in feature space.
  std::array<std::vector<double>, 2> directions;
  bool degenerate = false;  // rank < 2; second coordinate zeroed
};

/// Principal-component projection of the rows of a dense row-major
/// `rows x cols` matrix after column centering. Each direction's
/// largest-magnitude loading is made positive.
PcaResult pca_project(const std::vector<double>& features, std::size_t rows, std::size_t cols);

/// Top-n nodes by incident weight; features are rows of the symmetrized,
/// row-normalized adjacency restricted to them. Throws InvalidArgument below
/// three nodes.
PcaResult pca_map(const RelationGraph& graph, std::size_t top_n = 500);

/// The node subset and dense feature matrix pca_map uses.
std::vector<std::uint32_t> pca_select(const RelationGraph& graph, std::size_t top_n);
std::vector<double> pca_features(const RelationGraph& graph, const std::vector<std::uint32_t>& nodes);

}  // namespace usagelog
