#pragma once

#include "pslp/types.hpp"

namespace pslp::propagation {

/// T x N soft-label matrix: NK support rows followed by M query rows.
struct LabelMatrix {
  Matrix values;
  Eigen::Index nk = 0;
  Eigen::Index m = 0;

  LabelMatrix() = default;
  LabelMatrix(Matrix v, Eigen::Index support_rows);

  Eigen::Index num_classes() const noexcept { return values.cols(); }
  auto support() { return values.topRows(nk); }
  auto support() const { return values.topRows(nk); }
  auto query() { return values.bottomRows(m); }
  auto query() const { return values.bottomRows(m); }
};

/// (I - alpha L)^-1 for one episode graph. Immutable once built.
class PropagationMatrix {
 public:
  PropagationMatrix(Matrix values, double alpha) : values_(std::move(values)), alpha_(alpha) {}

  const Matrix& values() const noexcept { return values_; }
  double alpha() const noexcept { return alpha_; }

 private:
  Matrix values_;
  double alpha_;
};

/// Pivots smaller than this in the LU factor raise kSingularSystem.
inline constexpr double kPivotTolerance = 1e-12;

/// Inverts I - alpha L by LU with partial pivoting.
/// Throws kBadAlpha unless 0 <= alpha < 1, kSingularSystem on a vanishing pivot.
PropagationMatrix propagation_matrix(const Matrix& L, double alpha);

/// P * Z with negative round-off clamped to zero.
LabelMatrix propagate(const PropagationMatrix& P, const LabelMatrix& Z);

/// Fixed-point iteration Y <- alpha L Y + Z starting at Y = Z. Stops when the
/// Frobenius norm of successive differences drops below tol; throws
/// kNoConvergence after max_iter iterations.
Matrix iterative_oracle(const Matrix& L, double alpha, const Matrix& Z, double tol, int max_iter);

/// Divides each query row by its sum. Zero rows become uniform 1/N.
LabelMatrix row_normalize_queries(LabelMatrix Z);

/// Overwrites support rows with one-hot encodings of y_s.
LabelMatrix clamp_support(LabelMatrix Z, const LabelVector& y_s);

struct SinkhornOptions {
  int max_iter = 30;
  double tol = 1e-6;
  double floor = 1e-30;
};

struct SinkhornResult {
  Matrix values;
  bool converged = false;
  int iterations = 0;
  double max_violation = 0.0;  // worst marginal error of the returned iterate
};

/// Alternating row/column rescaling onto the given marginals. Each sweep scales
/// rows then columns; stops once every marginal is within tol. On
/// non-convergence the best iterate is returned with converged = false.
SinkhornResult sinkhorn_normalize(const Matrix& Zq, const Vector& row_marginals,
                                  const Vector& col_marginals, SinkhornOptions options = {});

/// Rows to 1, columns to M/N.
SinkhornResult sinkhorn_balanced(const Matrix& Zq, SinkhornOptions options = {});

namespace hooks {
/// Test hook for the self-test negative control: when set, the alpha range
/// check in propagation_matrix accepts exactly the values it should reject.
void set_invert_alpha_guard(bool inverted);
bool invert_alpha_guard();
}  // namespace hooks

}  // namespace pslp::propagation
