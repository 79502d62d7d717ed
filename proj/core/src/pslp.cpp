#include "pslp/pslp.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "pslp/graph.hpp"

namespace pslp {

PslpConfig PslpConfig::balanced_defaults() { return PslpConfig{}; }

PslpConfig PslpConfig::imbalanced_defaults() {
  PslpConfig cfg;
  cfg.alpha = 0.9;
  cfg.beta = 0.2;
  cfg.k = 1;
  cfg.balanced = false;
  return cfg;
}

jmp::JmpConfig PslpConfig::jmp_config() const {
  return jmp::JmpConfig{k, B, gamma, t_jmp, dense_first_graph};
}

void PslpConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorCode::kBadAlpha, "pslp.alpha must lie in [0, 1)");
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::kConfig, "pslp.beta must lie in [0, 1]");
  if (t_pslp < 1) throw Error(ErrorCode::kConfig, "pslp.t_pslp must be >= 1");
  if (sinkhorn.max_iter < 1 || !(sinkhorn.tol > 0.0))
    throw Error(ErrorCode::kConfig, "sinkhorn iterations and tolerance must be positive");
  jmp_config().validate();
}

int infer_num_classes(const LabelVector& y_s) {
  if (y_s.empty()) throw Error(ErrorCode::kEmptyClass, "episode has no support samples");
  const auto [lo, hi] = std::minmax_element(y_s.begin(), y_s.end());
  if (*lo < 0) throw Error(ErrorCode::kLabelOutOfRange, "negative support label");
  return *hi + 1;
}

Prototypes init_prototypes(const Matrix& X, const LabelVector& y_s, int num_classes) {
  if (static_cast<Eigen::Index>(y_s.size()) > X.rows())
    throw Error(ErrorCode::kDimensionMismatch, "more support labels than feature rows");
  Prototypes C{Matrix::Zero(num_classes, X.cols()), 0};
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < y_s.size(); ++i) {
    const ClassIndex y = y_s[i];
    if (y < 0 || y >= num_classes)
      throw Error(ErrorCode::kLabelOutOfRange, "support label " + std::to_string(y) + " out of range");
    C.centers.row(y) += X.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int n = 0; n < num_classes; ++n) {
    if (counts[static_cast<std::size_t>(n)] == 0)
      throw Error(ErrorCode::kEmptyClass, "class " + std::to_string(n) + " has no support samples");
    C.centers.row(n) /= static_cast<double>(counts[static_cast<std::size_t>(n)]);
  }
  return C;
}

Matrix soft_labels(const Matrix& Xq, const Prototypes& C, double gamma) {
  if (Xq.cols() != C.centers.cols() && Xq.rows() > 0)
    throw Error(ErrorCode::kDimensionMismatch, "query and prototype dimensions differ");
  const auto M = Xq.rows();
  const auto N = C.centers.rows();
  Matrix logits(M, N);
  for (Eigen::Index q = 0; q < M; ++q)
    for (Eigen::Index n = 0; n < N; ++n)
      logits(q, n) = -gamma * (Xq.row(q) - C.centers.row(n)).squaredNorm();
  for (Eigen::Index q = 0; q < M; ++q) {
    const double shift = logits.row(q).maxCoeff();
    logits.row(q) = (logits.row(q).array() - shift).exp().matrix();
    logits.row(q) /= logits.row(q).sum();
  }
  return logits;
}

Prototypes rectify_prototypes(const Prototypes& C, const propagation::LabelMatrix& Z, const Matrix& X,
                              double beta, bool raw_target) {
  if (Z.values.rows() != X.rows() || Z.num_classes() != C.centers.rows())
    throw Error(ErrorCode::kDimensionMismatch, "label matrix does not match features or prototypes");
  Matrix target = Z.values.transpose() * X;
  if (!raw_target) {
    const Vector mass = Z.values.colwise().sum().transpose();
    for (Eigen::Index n = 0; n < target.rows(); ++n) {
      if (mass(n) > 0.0) {
        target.row(n) /= mass(n);
      } else {
        target.row(n) = C.centers.row(n);
      }
    }
  }
  return Prototypes{(1.0 - beta) * C.centers + beta * target, C.iteration + 1};
}

LabelVector predict(const Matrix& Zq) {
  LabelVector out(static_cast<std::size_t>(Zq.rows()), 0);
  for (Eigen::Index q = 0; q < Zq.rows(); ++q) {
    Eigen::Index best = 0;
    for (Eigen::Index n = 1; n < Zq.cols(); ++n)
      if (Zq(q, n) > Zq(q, best)) best = n;
    out[static_cast<std::size_t>(q)] = static_cast<ClassIndex>(best);
  }
  return out;
}

Matrix preprocess_episode(const Matrix& support_X, const Matrix& query_X,
                          const features::PreprocessPipeline& pipeline, std::vector<std::string>* warnings) {
  return features::apply_pipeline(jmp::concat_features(support_X, query_X), pipeline,
                                  features::PipelineOptions{.clamp_pca = true}, warnings);
}

EpisodeResult pslp_infer(const Matrix& support_X, const LabelVector& y_s, const Matrix& query_X,
                         const PslpConfig& cfg, const IterationObserver& observer) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  if (static_cast<Eigen::Index>(y_s.size()) != support_X.rows())
    throw Error(ErrorCode::kDimensionMismatch, "support labels and support rows differ in count");
  if (!support_X.allFinite() || !query_X.allFinite())
    throw Error(ErrorCode::kDimensionError, "episode features must be finite");

  EpisodeResult result;
  const int N = infer_num_classes(y_s);
  const auto nk = support_X.rows();

  const Matrix X0 = preprocess_episode(support_X, query_X, cfg.preprocess, &result.warnings);
  const auto T = static_cast<int>(X0.rows());

  jmp::JmpConfig jcfg = cfg.jmp_config();
  if (jcfg.B >= T) {
    result.warnings.push_back("B = " + std::to_string(jcfg.B) + " clamped to " + std::to_string(T - 1));
    jcfg.B = T - 1;
  }
  const auto refined = jmp::jmp_refine(X0, jcfg);
  const Matrix& X = refined.features;

  Prototypes C = init_prototypes(X, y_s, N);
  result.prototype_trace.push_back(C);

  const auto P = propagation::propagation_matrix(refined.graph.normalized, cfg.alpha);
  const Matrix Xq = X.bottomRows(X.rows() - nk);

  propagation::LabelMatrix Z(Matrix::Zero(T, N), nk);
  for (int t = 1; t <= cfg.t_pslp; ++t) {
    Z.query() = soft_labels(Xq, C, cfg.gamma);
    Z = propagation::clamp_support(std::move(Z), y_s);
    Z = propagation::propagate(P, Z);
    Z = propagation::clamp_support(std::move(Z), y_s);
    if (cfg.balanced) {
      auto sk = propagation::sinkhorn_balanced(Z.query(), cfg.sinkhorn);
      if (!sk.converged) ++result.sinkhorn_unconverged;
      Z.query() = sk.values;
    } else {
      Z = propagation::row_normalize_queries(std::move(Z));
    }
    Prototypes next = rectify_prototypes(C, Z, X, cfg.beta, cfg.raw_target);
    result.center_shift.push_back((next.centers - C.centers).norm());
    if (observer) observer(t, Z, next);
    C = std::move(next);
    result.prototype_trace.push_back(C);
  }

  result.soft_labels = Z.query();
  result.predictions = predict(result.soft_labels);
  result.labels = std::move(Z);
  result.wall_time_us =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace pslp
