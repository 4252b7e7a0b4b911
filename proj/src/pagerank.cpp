#include "usagelog/pagerank.hpp"

#include <cmath>

#include "usagelog/error.hpp"

namespace usagelog {

RankVector pagerank(const RelationGraph& g, const PageRankOptions& opt) {
  const std::size_t n = g.node_count();
  if (n == 0) throw Error(ErrorCode::EmptyGraph, "PageRank over an empty graph");
  if (!(opt.damping > 0 && opt.damping < 1))
    throw Error(ErrorCode::InvalidArgument, "damping must be in (0, 1)");
  const double d = opt.damping;
  const double inv_n = 1.0 / static_cast<double>(n);
  RankVector rv;
  rv.damping = d;
  std::vector<double> x(n, inv_n), next(n);
  // Contribution factor per source: x[i] / out_weight(i).
  std::vector<double> share(n);
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    double dangling = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      const double ow = g.out_weight(i);
      if (ow > 0) {
        share[i] = x[i] / ow;
      } else {
        share[i] = 0.0;
        dangling += x[i];
      }
    }
    const double base = (1.0 - d) * inv_n + d * dangling * inv_n;
    double total = 0.0;
    for (std::uint32_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (const auto& nb : g.in(j)) s += share[nb.node] * nb.weight;
      next[j] = base + d * s;
      total += next[j];
    }
    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] /= total;
      residual += std::abs(next[j] - x[j]);
    }
    x.swap(next);
    rv.iterations = it;
    rv.residual = residual;
    if (residual < opt.tol) {
      rv.converged = true;
      break;
    }
  }
  rv.scores = std::move(x);
  return rv;
}

}  // namespace usagelog
