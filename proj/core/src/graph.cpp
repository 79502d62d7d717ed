#include "pslp/graph.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace pslp::graph {

Matrix pairwise_sq_dist(const Matrix& X) {
  const auto T = X.rows();
  Matrix D = Matrix::Zero(T, T);
  for (Eigen::Index i = 0; i < T; ++i) {
    for (Eigen::Index j = i + 1; j < T; ++j) {
      const double d2 = std::max(0.0, (X.row(i) - X.row(j)).squaredNorm());
      D(i, j) = d2;
      D(j, i) = d2;
    }
  }
  return D;
}

Matrix gaussian_affinity(const Matrix& X, double gamma) {
  return (-gamma * pairwise_sq_dist(X).array()).exp().matrix();
}

Matrix knn_sparsify(const Matrix& A, int B) {
  const auto T = A.rows();
  if (B < 1 || B >= T) {
    throw Error(ErrorCode::kBadNeighborCount,
                "B = " + std::to_string(B) + " must lie in [1, " + std::to_string(T - 1) + "]");
  }
  Matrix out = Matrix::Zero(T, T);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(T - 1));
  for (Eigen::Index i = 0; i < T; ++i) {
    order.clear();
    for (Eigen::Index j = 0; j < T; ++j)
      if (j != i) order.push_back(j);
    std::partial_sort(order.begin(), order.begin() + B, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (A(i, a) != A(i, b)) return A(i, a) > A(i, b);
                        return a < b;
                      });
    for (int r = 0; r < B; ++r) out(i, order[static_cast<std::size_t>(r)]) = A(i, order[static_cast<std::size_t>(r)]);
  }
  return out;
}

Matrix symmetrize_max(const Matrix& A) { return A.cwiseMax(A.transpose()); }

NormalizedAdjacency normalized_adjacency(const Matrix& A) {
  NormalizedAdjacency result;
  result.degrees = A.rowwise().sum().cwiseMax(kDegreeFloor);
  const Vector inv_sqrt = result.degrees.cwiseSqrt().cwiseInverse();
  result.normalized = inv_sqrt.asDiagonal() * A * inv_sqrt.asDiagonal();
  // Keep L exactly symmetric.
  result.normalized = 0.5 * (result.normalized + result.normalized.transpose()).eval();
  return result;
}

QSGraph build_graph(const Matrix& X, double gamma, int B) {
  QSGraph g;
  g.affinity = symmetrize_max(knn_sparsify(gaussian_affinity(X, gamma), B));
  auto [normalized, degrees] = normalized_adjacency(g.affinity);
  g.normalized = std::move(normalized);
  g.degrees = std::move(degrees);
  return g;
}

}  // namespace pslp::graph
