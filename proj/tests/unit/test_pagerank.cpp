#include <gtest/gtest.h>

#include "oracles.hpp"
#include "usagelog/error.hpp"
#include "usagelog/pagerank.hpp"

using namespace usagelog;

namespace {

struct Sample {
  RelationGraph graph;
  oracle::Matrix dense;
};

Sample random_digraph(std::mt19937_64& rng, double scale = 1.0) {
  const std::uint32_t n = 1 + rng() % 50;
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  oracle::Matrix w(n, std::vector<double>(n, 0.0));
  std::vector<RelationGraph::Edge> edges;
  const std::size_t m = rng() % (3 * n + 1);
  for (std::size_t e = 0; e < m; ++e) {
    const auto a = static_cast<std::uint32_t>(rng() % n), b = static_cast<std::uint32_t>(rng() % n);
    if (a == b) continue;
    const double x = static_cast<double>(1 + rng() % 100) / 10.0;
    edges.push_back({a, b, x * scale});
    w[a][b] += x * scale;
  }
  return {RelationGraph(labels, edges, true), w};
}

}  // namespace

TEST(PageRank, MatchesDenseOracle) {
  std::mt19937_64 rng(91);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_digraph(rng);
    const auto r = pagerank(s.graph, {0.85, 1e-12, 10000});
    EXPECT_TRUE(r.converged);
    const auto want = oracle::dense_pagerank(s.dense, 0.85);
    double sum = 0;
    for (std::size_t k = 0; k < want.size(); ++k) {
      EXPECT_NEAR(r.scores[k], want[k], 1e-9);
      sum += r.scores[k];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(PageRank, ScaleInvariant) {
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    std::mt19937_64 a(92), b(92);
    for (int i = 0; i < 30; ++i) {
      const auto x = random_digraph(a), y = random_digraph(b, c);
      const auto rx = pagerank(x.graph), ry = pagerank(y.graph);
      for (std::size_t k = 0; k < rx.scores.size(); ++k) EXPECT_NEAR(rx.scores[k], ry.scores[k], 1e-9);
    }
  }
}

TEST(PageRank, UndirectedTreatsEdgesBothWays) {
  RelationGraph u({"a", "b", "c"}, {{0, 1, 1.0}, {1, 2, 3.0}}, false);
  RelationGraph d({"a", "b", "c"}, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 3.0}, {2, 1, 3.0}}, true);
  const auto ru = pagerank(u), rd = pagerank(d);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(ru.scores[k], rd.scores[k], 1e-12);
}

TEST(PageRank, EdgelessIsUniformAndDeterministic) {
  RelationGraph g({"a", "b", "c", "d"}, {}, true);
  const auto r = pagerank(g);
  for (double s : r.scores) EXPECT_NEAR(s, 0.25, 1e-15);
  std::mt19937_64 rng(93);
  const auto s = random_digraph(rng);
  EXPECT_EQ(pagerank(s.graph).scores, pagerank(s.graph).scores);
}

TEST(PageRank, Errors) {
  EXPECT_THROW(pagerank(RelationGraph({}, {}, true)), Error);
  RelationGraph g({"a", "b"}, {{0, 1, 1.0}}, true);
  for (double d : {0.0, 1.0, -0.1, 1.5}) {
    try {
      pagerank(g, {d, 1e-8, 100});
      FAIL() << d;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
  }
}

TEST(PageRank, IterationCapReported) {
  std::mt19937_64 rng(94);
  Sample s = random_digraph(rng);
  while (s.graph.edge_count() < 10) s = random_digraph(rng);
  const auto r = pagerank(s.graph, {0.85, 1e-30, 3});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3u);
  double sum = 0;
  for (double x : r.scores) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}
