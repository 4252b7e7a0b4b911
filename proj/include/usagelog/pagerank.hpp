#pragma once

#include <cstddef>
#include <vector>

#include "usagelog/relation_graph.hpp"

namespace usagelog {

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-8;
  std::size_t max_iter = 1000;
};

struct RankVector {
  std::vector<double> scores;  // by node id, sums to 1
  double damping = 0.85;
  std::size_t iterations = 0;
  double residual = 0.0;  // L1 change of the last iteration
  bool converged = false;
};

/// Weighted power iteration: i -> j with probability w(i,j) / out_weight(i),
/// dangling mass spread uniformly, uniform teleport. Throws EmptyGraph
/// and InvalidArgument (damping outside (0,1)). When max_iter is reached the
/// last iterate is returned with converged == false.
RankVector pagerank(const RelationGraph& graph, const PageRankOptions& options = {});

}  // namespace usagelog
