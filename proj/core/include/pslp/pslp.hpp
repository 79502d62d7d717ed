#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pslp/features.hpp"
#include "pslp/jmp.hpp"
#include "pslp/propagation.hpp"
#include "pslp/types.hpp"

namespace pslp {

/// Class centres in the refined feature space.
struct Prototypes {
  Matrix centers;  // N x d
  int iteration = 0;
};

/// Hyperparameters for one transductive inference run.
///
/// The two published operating points are balanced_defaults() (Sinkhorn on,
/// strong smoothing) and imbalanced_defaults() (Sinkhorn off, k = 1). The
/// preprocessing pipeline and the numerical knobs below alpha..raw_target are
/// engineering settings and are echoed in every report.
struct PslpConfig {
  double alpha = 0.7;   // propagation strength, [0, 1)
  double beta = 0.6;    // prototype step size, [0, 1]
  double gamma = 10.0;  // Gaussian kernel scale
  int k = 4;            // low-pass filter power
  int B = 8;            // neighbours per node
  int t_pslp = 10;      // label/prototype alternations
  bool balanced = true; // Sinkhorn normalisation of query rows
  bool raw_target = false;  // use the unnormalised Z^T X prototype target

  int t_jmp = 1;
  bool dense_first_graph = false;
  propagation::SinkhornOptions sinkhorn;
  features::PreprocessPipeline preprocess = features::PreprocessPipeline::default_pipeline();

  static PslpConfig balanced_defaults();
  static PslpConfig imbalanced_defaults();

  jmp::JmpConfig jmp_config() const;
  void validate() const;
};

struct EpisodeResult {
  LabelVector predictions;          // M
  Matrix soft_labels;               // M x N, final query rows of Z
  propagation::LabelMatrix labels;  // full T x N matrix after the last normalisation
  std::vector<Prototypes> prototype_trace;  // C_0 .. C_{t_pslp}
  std::vector<double> center_shift;         // ||C_t - C_{t-1}||_F per iteration
  double wall_time_us = 0.0;
  int sinkhorn_unconverged = 0;
  std::vector<std::string> warnings;
};

/// Called after every normalisation inside the main loop (iteration is 1-based).
using IterationObserver =
    std::function<void(int iteration, const propagation::LabelMatrix& normalized, const Prototypes& next)>;

/// Mean of the support rows (first y_s.size() rows of X) of each class.
/// Throws kEmptyClass when some class in 0..num_classes has no support row.
Prototypes init_prototypes(const Matrix& X, const LabelVector& y_s, int num_classes);

/// Row-wise softmax of -gamma * squared distance to each centre.
Matrix soft_labels(const Matrix& Xq, const Prototypes& C, double gamma);

/// Blends each centre towards the Z-weighted mean of all samples:
/// c_n <- (1 - beta) c_n + beta * sum_i Z(i,n) x_i / sum_i Z(i,n).
/// With raw_target the division by column mass is skipped. Zero-mass classes keep their centre.
Prototypes rectify_prototypes(const Prototypes& C, const propagation::LabelMatrix& Z, const Matrix& X,
                              double beta, bool raw_target = false);

/// Per-row argmax, lowest index on exact ties.
LabelVector predict(const Matrix& Zq);

/// Number of classes implied by support labels (max label + 1).
int infer_num_classes(const LabelVector& y_s);

/// Applies the preprocessing pipeline to the concatenated episode, clamping PCA
/// to the episode size. Shared by every method so they see identical features.
Matrix preprocess_episode(const Matrix& support_X, const Matrix& query_X,
                          const features::PreprocessPipeline& pipeline,
                          std::vector<std::string>* warnings = nullptr);

/// Full transductive inference for one episode.
EpisodeResult pslp_infer(const Matrix& support_X, const LabelVector& y_s, const Matrix& query_X,
                         const PslpConfig& cfg, const IterationObserver& observer = {});

}  // namespace pslp
