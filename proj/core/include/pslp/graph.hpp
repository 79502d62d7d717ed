#pragma once

#include "pslp/types.hpp"

namespace pslp::graph {

/// Degree floor applied in normalized_adjacency so isolated nodes stay inert.
inline constexpr double kDegreeFloor = 1e-12;

/// Query-support graph over all T = NK + M samples of an episode.
struct QSGraph {
  Matrix affinity;    // symmetric, non-negative, zero diagonal
  Matrix normalized;  // D^-1/2 A D^-1/2
  Vector degrees;     // row sums of affinity, floored at kDegreeFloor

  Eigen::Index size() const noexcept { return affinity.rows(); }
};

/// Squared Euclidean distances between rows, clamped below at zero.
Matrix pairwise_sq_dist(const Matrix& X);

/// exp(-gamma * ||x_i - x_j||^2). The diagonal is 1 here; knn_sparsify removes it.
Matrix gaussian_affinity(const Matrix& X, double gamma);

/// Zeroes the diagonal, then keeps the B largest off-diagonal entries of every row.
/// Ties at the B-th value go to the lowest column index.
/// Throws Error{kBadNeighborCount} unless 1 <= B < T.
Matrix knn_sparsify(const Matrix& A, int B);

/// Entrywise max(A, A^T).
Matrix symmetrize_max(const Matrix& A);

struct NormalizedAdjacency {
  Matrix normalized;
  Vector degrees;
};

NormalizedAdjacency normalized_adjacency(const Matrix& A);

/// symmetrize_max(knn_sparsify(gaussian_affinity(X, gamma), B)), then normalized.
QSGraph build_graph(const Matrix& X, double gamma, int B);

}  // namespace pslp::graph
