#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pslp/episodes.hpp"
#include "pslp/pslp.hpp"

namespace pslp::eval {

/// Maps an episode to query predictions. Must not read truth_y unless it is an oracle.
using Predictor = std::function<LabelVector(const episodes::Episode&)>;

struct Method {
  std::string name;
  Predictor predict;
};

struct LatencySummary {
  std::size_t n = 0;
  double total_seconds = 0.0;
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p95_us = 0.0;
};

struct MethodReport {
  std::string name;
  std::size_t n_tasks = 0;
  double mean_accuracy = 0.0;
  double ci95 = 0.0;  // 1.96 * population std / sqrt(n)
  LatencySummary latency;
  std::vector<double> per_task_accuracy;  // indexed like BenchReport::task_seeds
  std::vector<double> per_task_micros;
};

struct BenchReport {
  std::size_t n_tasks = 0;        // tasks that contributed
  std::size_t n_failed = 0;       // tasks skipped under skip_errors
  std::string primary;            // first method; mirrored in mean_accuracy / ci95
  double mean_accuracy = 0.0;
  double ci95 = 0.0;
  LatencySummary per_task_micros;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::uint64_t> task_seeds;
  std::vector<std::uint64_t> task_indices;
  std::map<std::string, MethodReport> per_method;
};

struct EvalOptions {
  int workers = 1;
  bool skip_errors = false;
};

/// Fraction of positions where prediction equals truth. Empty input scores 1.
double accuracy(const LabelVector& predictions, const LabelVector& truth);

struct AccuracyStats {
  double mean = 0.0;
  double ci95 = 0.0;
};

/// Mean and 1.96 * population-std / sqrt(n). Summation runs in index order.
AccuracyStats summarize(std::span<const double> accuracies);

LatencySummary summarize_latency(std::span<const double> micros);

/// Nearest class mean under the Gaussian softmax, after the shared preprocessing.
LabelVector baseline_nearest_prototype(const episodes::Episode& episode, double gamma,
                                       const features::PreprocessPipeline& preprocess);

/// Single closed-form propagation seeded by one-hot support labels and zero query rows.
LabelVector baseline_vanilla_lp(const episodes::Episode& episode, const PslpConfig& cfg);

Method pslp_method(const PslpConfig& cfg, std::string name = "pslp");
Method pslp_without_jmp_method(const PslpConfig& cfg);
Method nearest_prototype_method(const PslpConfig& cfg);
Method vanilla_lp_method(const PslpConfig& cfg);
/// Returns the hidden truth; for harness checks.
Method oracle_method();

/// Runs n_tasks seeded episodes through every method. Results are independent
/// of worker count and scheduling. Any task error aborts the run (rethrown with
/// its seed, lowest failing task first) unless options.skip_errors is set.
BenchReport evaluate(const features::FeatureBank& bank, const episodes::EpisodeSpec& spec,
                     const std::vector<Method>& methods, std::size_t n_tasks, EvalOptions options = {});

struct LatencyRun {
  LatencySummary summary;
  std::vector<double> accuracies;
};

/// Times pslp_infer alone on pre-sampled episodes, single-threaded.
LatencyRun bench_latency(const features::FeatureBank& bank, const episodes::EpisodeSpec& spec,
                         const PslpConfig& cfg, std::size_t n_tasks);

}  // namespace pslp::eval
