#pragma once

#include <string>
#include <vector>

#include "pslp/episodes.hpp"
#include "pslp/eval.hpp"
#include "pslp/pslp.hpp"

namespace pslp::report {

/// JSON document, schema "pslp.bench_report/1":
///
///   schema, generator, ci_convention       strings
///   n_tasks, n_failed                      integers
///   primary, mean_accuracy, ci95           primary method summary
///   per_task_micros                        {n, total_seconds, mean, p50, p95}
///   config_echo                            {key: value} in canonical order
///   per_method                             {name: {n_tasks, mean_accuracy, ci95, per_task_micros}}
std::string bench_report_json(const eval::BenchReport& report);

/// Aligned text table, one row per method.
std::string bench_report_table(const eval::BenchReport& report);

/// task_index,seed,accuracy,micros for the primary method, then one
/// <method>_accuracy column per additional method.
std::string per_task_csv(const eval::BenchReport& report);

/// JSON dump of one episode run, schema "pslp.episode_dump/1".
std::string episode_dump_json(const episodes::Episode& episode, const EpisodeResult& result,
                              const std::vector<std::pair<std::string, std::string>>& config_echo,
                              bool include_trace);

/// Latency summary as JSON, schema "pslp.latency/1".
std::string latency_json(const eval::LatencyRun& run,
                         const std::vector<std::pair<std::string, std::string>>& config_echo);

}  // namespace pslp::report
