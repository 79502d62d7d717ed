#pragma once

#include "pslp/graph.hpp"
#include "pslp/types.hpp"

namespace pslp::jmp {

/// Joint message passing settings.
struct JmpConfig {
  int k = 4;             // filter power (receptive field)
  int B = 8;             // neighbours kept per node
  double gamma = 10.0;   // Gaussian kernel scale
  int t_jmp = 1;         // outer smoothing/refinement rounds
  bool dense_first_graph = false;  // first-round graph keeps every edge instead of the B-NN subset

  void validate() const;
};

/// Support rows first, then query rows.
Matrix concat_features(const Matrix& support, const Matrix& query);

/// ((I + L) / 2)^k X, applied as k successive X <- (X + L X) / 2 steps.
Matrix filter_power(const Matrix& L, int k, const Matrix& X);

struct RefineResult {
  Matrix features;
  graph::QSGraph graph;
};

/// Alternates graph construction and low-pass smoothing for cfg.t_jmp rounds and
/// returns the smoothed features together with the B-NN graph rebuilt from them.
RefineResult jmp_refine(const Matrix& X0, const JmpConfig& cfg);

}  // namespace pslp::jmp
