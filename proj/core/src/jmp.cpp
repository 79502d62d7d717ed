#include "pslp/jmp.hpp"

#include <string>

namespace pslp::jmp {

void JmpConfig::validate() const {
  if (k < 0) throw Error(ErrorCode::kConfig, "jmp.k must be >= 0");
  if (B < 1) throw Error(ErrorCode::kConfig, "jmp.b must be >= 1");
  if (!(gamma > 0.0)) throw Error(ErrorCode::kConfig, "jmp.gamma must be > 0");
  if (t_jmp < 1) throw Error(ErrorCode::kConfig, "jmp.t_jmp must be >= 1");
}

Matrix concat_features(const Matrix& support, const Matrix& query) {
  if (query.rows() == 0) return support;
  if (support.cols() != query.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "support has " + std::to_string(support.cols()) + " columns, query has " +
                    std::to_string(query.cols()));
  }
  Matrix X(support.rows() + query.rows(), support.cols());
  X.topRows(support.rows()) = support;
  X.bottomRows(query.rows()) = query;
  return X;
}

Matrix filter_power(const Matrix& L, int k, const Matrix& X) {
  Matrix out = X;
  for (int step = 0; step < k; ++step) out = 0.5 * (out + L * out);
  return out;
}

RefineResult jmp_refine(const Matrix& X0, const JmpConfig& cfg) {
  cfg.validate();
  const auto T = static_cast<int>(X0.rows());
  if (T < 2) throw Error(ErrorCode::kDimensionError, "joint message passing needs at least 2 samples");

  Matrix X = X0;
  graph::QSGraph g = graph::build_graph(X, cfg.gamma, cfg.dense_first_graph ? T - 1 : cfg.B);
  for (int t = 1; t <= cfg.t_jmp; ++t) {
    if (cfg.k > 0) X = filter_power(g.normalized, cfg.k, X);
    g = graph::build_graph(X, cfg.gamma, cfg.B);
  }
  return {std::move(X), std::move(g)};
}

}  // namespace pslp::jmp
