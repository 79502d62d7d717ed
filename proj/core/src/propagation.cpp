#include "pslp/propagation.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace pslp::propagation {

namespace {

std::atomic<bool> g_invert_alpha_guard{false};

double marginal_violation(const Matrix& Z, const Vector& rows, const Vector& cols) {
  const double row_err = (Z.rowwise().sum() - rows).cwiseAbs().maxCoeff();
  const double col_err = (Z.colwise().sum().transpose() - cols).cwiseAbs().maxCoeff();
  return std::max(row_err, col_err);
}

}  // namespace

namespace hooks {
void set_invert_alpha_guard(bool inverted) { g_invert_alpha_guard.store(inverted); }
bool invert_alpha_guard() { return g_invert_alpha_guard.load(); }
}  // namespace hooks

LabelMatrix::LabelMatrix(Matrix v, Eigen::Index support_rows)
    : values(std::move(v)), nk(support_rows), m(values.rows() - support_rows) {
  if (support_rows < 0 || support_rows > values.rows())
    throw Error(ErrorCode::kDimensionMismatch, "support row count exceeds label matrix rows");
}

PropagationMatrix propagation_matrix(const Matrix& L, double alpha) {
  bool valid = alpha >= 0.0 && alpha < 1.0;
  if (hooks::invert_alpha_guard()) valid = !valid;
  if (!valid) throw Error(ErrorCode::kBadAlpha, "alpha = " + std::to_string(alpha) + " outside [0, 1)");
  if (L.rows() != L.cols()) throw Error(ErrorCode::kDimensionMismatch, "L must be square");

  const auto T = L.rows();
  const Matrix system = Matrix::Identity(T, T) - alpha * L;
  Eigen::PartialPivLU<Matrix> lu(system);
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (T > 0 && pivots.minCoeff() < kPivotTolerance)
    throw Error(ErrorCode::kSingularSystem, "pivot below tolerance in I - alpha L");

  Matrix P = lu.inverse();
  P = 0.5 * (P + P.transpose()).eval();
  return PropagationMatrix(std::move(P), alpha);
}

LabelMatrix propagate(const PropagationMatrix& P, const LabelMatrix& Z) {
  if (P.values().cols() != Z.values.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "propagation matrix is " + std::to_string(P.values().rows()) + "x" +
                    std::to_string(P.values().cols()) + ", labels have " +
                    std::to_string(Z.values.rows()) + " rows");
  }
  LabelMatrix out = Z;
  out.values = (P.values() * Z.values).cwiseMax(0.0);
  return out;
}

Matrix iterative_oracle(const Matrix& L, double alpha, const Matrix& Z, double tol, int max_iter) {
  if (!(alpha < 1.0)) throw Error(ErrorCode::kBadAlpha, "oracle requires alpha < 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::kConfig, "oracle tolerance must be positive");
  Matrix Y = Z;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    Matrix next = alpha * (L * Y) + Z;
    residual = (next - Y).norm();
    Y = std::move(next);
    if (residual < tol) return Y;
  }
  throw Error(ErrorCode::kNoConvergence, "Neumann iteration residual " + std::to_string(residual) +
                                             " after " + std::to_string(max_iter) + " iterations");
}

LabelMatrix row_normalize_queries(LabelMatrix Z) {
  const auto N = Z.num_classes();
  auto q = Z.query();
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double sum = q.row(i).sum();
    if (sum > 0.0) {
      q.row(i) /= sum;
    } else {
      q.row(i).setConstant(1.0 / static_cast<double>(N));
    }
  }
  return Z;
}

LabelMatrix clamp_support(LabelMatrix Z, const LabelVector& y_s) {
  if (static_cast<Eigen::Index>(y_s.size()) != Z.nk) {
    throw Error(ErrorCode::kDimensionMismatch, std::to_string(y_s.size()) + " support labels for " +
                                                   std::to_string(Z.nk) + " support rows");
  }
  const auto N = Z.num_classes();
  for (Eigen::Index i = 0; i < Z.nk; ++i) {
    const ClassIndex y = y_s[static_cast<std::size_t>(i)];
    if (y < 0 || y >= N)
      throw Error(ErrorCode::kLabelOutOfRange, "support label " + std::to_string(y) + " not in [0, " +
                                                   std::to_string(N) + ")");
    Z.values.row(i).setZero();
    Z.values(i, y) = 1.0;
  }
  return Z;
}

SinkhornResult sinkhorn_normalize(const Matrix& Zq, const Vector& row_marginals,
                                  const Vector& col_marginals, SinkhornOptions options) {
  if (row_marginals.size() != Zq.rows() || col_marginals.size() != Zq.cols())
    throw Error(ErrorCode::kDimensionMismatch, "marginal vector sizes do not match the matrix");
  if (std::abs(row_marginals.sum() - col_marginals.sum()) > 1e-9 * std::max(1.0, row_marginals.sum()))
    throw Error(ErrorCode::kDimensionMismatch, "row and column marginals have different totals");

  SinkhornResult result;
  if (Zq.size() == 0) {
    result.values = Zq;
    result.converged = true;
    return result;
  }

  Matrix Z = Zq.cwiseMax(options.floor);
  result.values = Z;
  result.max_violation = marginal_violation(Z, row_marginals, col_marginals);
  if (result.max_violation < options.tol) {
    result.converged = true;
    return result;
  }

  for (int it = 1; it <= options.max_iter; ++it) {
    const Vector row_scale = row_marginals.array() / Z.rowwise().sum().array();
    Z = row_scale.asDiagonal() * Z;
    const Vector col_scale = col_marginals.array() / Z.colwise().sum().transpose().array();
    Z = Z * col_scale.asDiagonal();
    const double violation = marginal_violation(Z, row_marginals, col_marginals);
    result.iterations = it;
    if (violation <= result.max_violation) {
      result.values = Z;
      result.max_violation = violation;
    }
    if (violation < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

SinkhornResult sinkhorn_balanced(const Matrix& Zq, SinkhornOptions options) {
  const auto M = Zq.rows();
  const auto N = Zq.cols();
  const Vector rows = Vector::Ones(M);
  const Vector cols = Vector::Constant(N, static_cast<double>(M) / static_cast<double>(N));
  return sinkhorn_normalize(Zq, rows, cols, options);
}

}  // namespace pslp::propagation
