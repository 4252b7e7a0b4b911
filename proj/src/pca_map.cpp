#include "usagelog/pca_map.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "usagelog/error.hpp"

namespace usagelog {

PcaResult pca_project(const std::vector<double>& features, std::size_t rows, std::size_t cols) {
  if (features.size() != rows * cols || rows == 0 || cols == 0)
    throw Error(ErrorCode::InvalidArgument, "feature matrix shape mismatch");
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::MatrixXd x = Eigen::Map<const Mat>(features.data(), static_cast<Eigen::Index>(rows),
                                            static_cast<Eigen::Index>(cols));
  x.rowwise() -= x.colwise().mean();
  const double denom = rows > 1 ? static_cast<double>(rows - 1) : 1.0;
  const Eigen::MatrixXd cov = (x.transpose() * x) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const Eigen::Index m = values.size();
  const double trace = std::max(cov.trace(), 0.0);

  PcaResult out;
  const double lead = m > 0 ? std::max(values(m - 1), 0.0) : 0.0;
  std::array<Eigen::VectorXd, 2> dirs;
  for (int c = 0; c < 2; ++c) {
    const Eigen::Index idx = m - 1 - c;
    if (idx < 0) {
      dirs[c] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));
      out.degenerate = true;
      continue;
    }
    const double lambda = std::max(values(idx), 0.0);
    const bool negligible = lambda <= 1e-12 * std::max(lead, 1e-300) || lead <= 1e-300;
    if (c == 1 && negligible) out.degenerate = true;
    if (c == 0 && lead <= 1e-300) out.degenerate = true;
    Eigen::VectorXd v = vectors.col(idx);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0) v = -v;
    dirs[c] = v;
    out.explained[c] = trace > 0 ? lambda / trace : 0.0;
  }
  if (out.degenerate) out.explained[1] = 0.0;
  const Eigen::VectorXd px = x * dirs[0];
  const Eigen::VectorXd py = x * dirs[1];
  for (int c = 0; c < 2; ++c) out.directions[c].assign(dirs[c].data(), dirs[c].data() + dirs[c].size());
  out.points.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r)
    out.points.push_back({static_cast<std::uint32_t>(r), std::string(),
                          px(static_cast<Eigen::Index>(r)),
                          out.degenerate ? 0.0 : py(static_cast<Eigen::Index>(r))});
  return out;
}

std::vector<std::uint32_t> pca_select(const RelationGraph& g, std::size_t top_n) {
  const std::size_t n = g.node_count();
  std::vector<double> incident(n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (const auto& nb : g.out(i)) incident[i] += nb.weight;
    if (g.directed())
      for (const auto& nb : g.in(i)) incident[i] += nb.weight;
  }
  std::vector<std::uint32_t> nodes(n);
  std::iota(nodes.begin(), nodes.end(), 0u);
  std::stable_sort(nodes.begin(), nodes.end(),
                   [&](auto a, auto b) { return incident[a] > incident[b]; });
  nodes.resize(std::min(top_n, n));
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

std::vector<double> pca_features(const RelationGraph& g, const std::vector<std::uint32_t>& nodes) {
  const std::size_t k = nodes.size();
  std::vector<std::int64_t> pos(g.node_count(), -1);
  for (std::size_t i = 0; i < k; ++i) pos[nodes[i]] = static_cast<std::int64_t>(i);
  std::vector<double> f(k * k, 0.0);
  const double half = g.directed() ? 0.5 : 1.0;
  for (std::size_t r = 0; r < k; ++r) {
    for (const auto& nb : g.out(nodes[r]))
      if (pos[nb.node] >= 0) f[r * k + static_cast<std::size_t>(pos[nb.node])] += half * nb.weight;
    if (g.directed())
      for (const auto& nb : g.in(nodes[r]))
        if (pos[nb.node] >= 0) f[r * k + static_cast<std::size_t>(pos[nb.node])] += half * nb.weight;
  }
  for (std::size_t r = 0; r < k; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += f[r * k + c];
    if (sum > 0)
      for (std::size_t c = 0; c < k; ++c) f[r * k + c] /= sum;
  }
  return f;
}

PcaResult pca_map(const RelationGraph& g, std::size_t top_n) {
  if (g.node_count() < 3) throw Error(ErrorCode::InvalidArgument, "PCA map needs at least 3 nodes");
  if (top_n < 3) throw Error(ErrorCode::InvalidArgument, "top_n must be at least 3");
  const auto nodes = pca_select(g, top_n);
  auto result = pca_project(pca_features(g, nodes), nodes.size(), nodes.size());
  for (auto& p : result.points) {
    p.node = nodes[p.node];
    p.label = g.label(p.node);
  }
  return result;
}

}  // namespace usagelog
