#include "pslp/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace pslp::report {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kCiConvention = "1.96 * population_std(per-task accuracy) / sqrt(n_tasks)";

Json latency_object(const eval::LatencySummary& s) {
  return Json{{"n", s.n},
              {"total_seconds", s.total_seconds},
              {"mean", s.mean_us},
              {"p50", s.p50_us},
              {"p95", s.p95_us}};
}

Json echo_object(const std::vector<std::pair<std::string, std::string>>& echo) {
  Json out = Json::object();
  for (const auto& [k, v] : echo) out[k] = v;
  return out;
}

Json matrix_rows(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string bench_report_json(const eval::BenchReport& report) {
  Json doc;
  doc["schema"] = "pslp.bench_report/1";
  doc["generator"] = episodes::kGeneratorName;
  doc["ci_convention"] = kCiConvention;
  doc["n_tasks"] = report.n_tasks;
  doc["n_failed"] = report.n_failed;
  doc["primary"] = report.primary;
  doc["mean_accuracy"] = report.mean_accuracy;
  doc["ci95"] = report.ci95;
  doc["per_task_micros"] = latency_object(report.per_task_micros);
  doc["config_echo"] = echo_object(report.config_echo);
  Json methods = Json::object();
  for (const auto& [name, m] : report.per_method) {
    methods[name] = Json{{"n_tasks", m.n_tasks},
                         {"mean_accuracy", m.mean_accuracy},
                         {"ci95", m.ci95},
                         {"per_task_micros", latency_object(m.latency)}};
  }
  doc["per_method"] = std::move(methods);
  return doc.dump(2) + "\n";
}

std::string bench_report_table(const eval::BenchReport& report) {
  std::ostringstream out;
  char line[256];
  out << "tasks: " << report.n_tasks;
  if (report.n_failed > 0) out << " (" << report.n_failed << " failed, skipped)";
  out << "\nci95 = " << kCiConvention << "\n\n";
  std::snprintf(line, sizeof line, "%-20s %10s %10s %12s %12s\n", "method", "acc(%)", "+-ci95", "mean(us)",
                "p95(us)");
  out << line;
  auto row = [&](const eval::MethodReport& m) {
    std::snprintf(line, sizeof line, "%-20s %10.2f %10.2f %12.1f %12.1f\n", m.name.c_str(),
                  100.0 * m.mean_accuracy, 100.0 * m.ci95, m.latency.mean_us, m.latency.p95_us);
    out << line;
  };
  row(report.per_method.at(report.primary));
  for (const auto& [name, m] : report.per_method)
    if (name != report.primary) row(m);
  return out.str();
}

std::string per_task_csv(const eval::BenchReport& report) {
  std::ostringstream out;
  out.precision(17);
  const auto& primary = report.per_method.at(report.primary);
  out << "task_index,seed,accuracy,micros";
  for (const auto& [name, m] : report.per_method)
    if (name != report.primary) out << ',' << name << "_accuracy";
  out << '\n';
  for (std::size_t i = 0; i < report.task_indices.size(); ++i) {
    out << report.task_indices[i] << ',' << report.task_seeds[i] << ',' << primary.per_task_accuracy[i] << ','
        << primary.per_task_micros[i];
    for (const auto& [name, m] : report.per_method)
      if (name != report.primary) out << ',' << m.per_task_accuracy[i];
    out << '\n';
  }
  return out.str();
}

std::string episode_dump_json(const episodes::Episode& episode, const EpisodeResult& result,
                              const std::vector<std::pair<std::string, std::string>>& config_echo,
                              bool include_trace) {
  Json doc;
  doc["schema"] = "pslp.episode_dump/1";
  doc["seed"] = episode.meta.seed;
  doc["mode"] = episodes::to_string(episode.meta.mode);
  doc["n_way"] = episode.meta.n_way;
  doc["k_shot"] = episode.meta.k_shot;
  doc["m_query"] = episode.meta.m_query;
  doc["query_counts"] = episode.meta.query_counts;
  doc["support_rows"] = episode.support_rows;
  doc["query_rows"] = episode.query_rows;
  doc["predictions"] = result.predictions;
  doc["truth"] = episode.truth_y;
  doc["accuracy"] = eval::accuracy(result.predictions, episode.truth_y);
  doc["soft_labels"] = matrix_rows(result.soft_labels);
  Json sums = Json::array();
  for (Eigen::Index q = 0; q < result.soft_labels.rows(); ++q) sums.push_back(result.soft_labels.row(q).sum());
  doc["query_row_sums"] = std::move(sums);
  doc["center_shift"] = result.center_shift;
  doc["sinkhorn_unconverged"] = result.sinkhorn_unconverged;
  doc["warnings"] = result.warnings;
  if (include_trace) {
    Json trace = Json::array();
    for (const auto& C : result.prototype_trace)
      trace.push_back(Json{{"iteration", C.iteration}, {"centers", matrix_rows(C.centers)}});
    doc["prototype_trace"] = std::move(trace);
  }
  doc["config_echo"] = echo_object(config_echo);
  return doc.dump(2) + "\n";
}

std::string latency_json(const eval::LatencyRun& run,
                         const std::vector<std::pair<std::string, std::string>>& config_echo) {
  Json doc;
  doc["schema"] = "pslp.latency/1";
  doc["generator"] = episodes::kGeneratorName;
  doc["latency_us"] = latency_object(run.summary);
  const auto stats = eval::summarize(run.accuracies);
  doc["mean_accuracy"] = stats.mean;
  doc["ci95"] = stats.ci95;
  doc["config_echo"] = echo_object(config_echo);
  return doc.dump(2) + "\n";
}

}  // namespace pslp::report
