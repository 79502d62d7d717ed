#include "pslp/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "pslp/config.hpp"
#include "pslp/episodes.hpp"
#include "pslp/eval.hpp"
#include "pslp/features.hpp"
#include "pslp/report.hpp"
#include "pslp/selftest.hpp"

namespace pslp::cli {

namespace {

/// Flags that map one-to-one onto RunConfig keys.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;  // --set key=value
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app.add_option(flag, values[key], help));
  }

  void attach(CLI::App& app, bool episode_flags) {
    app.add_option("--config", config_path, "Config file of key = value lines");
    app.add_option("--set", overrides, "Override any config key, e.g. --set pslp.alpha=0.5");
    if (episode_flags) {
      add(app, "--n-way", "ep.n_way", "Classes per episode (N)");
      add(app, "--k-shot", "ep.k_shot", "Support samples per class (K)");
      add(app, "--m-query", "ep.m_query", "Query samples per episode (M)");
      add(app, "--mode", "ep.mode", "Query sampling: balanced | dirichlet");
      add(app, "--alpha-dir", "ep.alpha_dir", "Dirichlet concentration for --mode dirichlet");
      add(app, "--seed", "ep.seed", "Base seed");
    }
    add(app, "--alpha", "pslp.alpha", "Propagation strength in [0, 1)");
    add(app, "--beta", "pslp.beta", "Prototype step size in [0, 1]");
    add(app, "--gamma", "pslp.gamma", "Gaussian kernel scale");
    add(app, "--k", "pslp.k", "Low-pass filter power");
    add(app, "--b", "pslp.b", "Neighbours per node");
    add(app, "--t-pslp", "pslp.t_pslp", "Label/prototype iterations");
    add(app, "--t-jmp", "jmp.t_jmp", "Joint message passing rounds");
    add(app, "--sinkhorn", "pslp.balanced", "Sinkhorn query normalisation (true/false)");
    add(app, "--raw-target", "pslp.raw_target", "Unnormalised prototype target (true/false)");
    add(app, "--pipeline", "pre.pipeline", "Preprocessing, e.g. center,l2,pca:40,l2");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (const char* env = std::getenv("PSLP_CONFIG"); env != nullptr && *env != '\0') cfg.load_file(env);
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kConfig, "--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, values.at(key));
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

features::FeatureBank load_bank(const std::string& path, const std::string& format) {
  features::BankFormat fmt = features::format_from_path(path);
  if (format == "csv") fmt = features::BankFormat::kCsv;
  if (format == "fbnk") fmt = features::BankFormat::kFbnk;
  return features::load_feature_bank(path, fmt);
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  std::set<std::string> seen;
  for (const auto& w : warnings)
    if (seen.insert(w).second) err << "warning: " << w << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prototype-based soft-label propagation for transductive few-shot classification", "pslp"};
  app.require_subcommand(1);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate over many seeded episodes");
  std::string eval_bank, eval_format, eval_report, eval_csv;
  std::size_t eval_tasks = 0;
  int eval_workers = 0;
  bool eval_baselines = false, eval_skip = false, eval_json = false;
  ConfigFlags eval_flags;
  eval_cmd->add_option("--bank", eval_bank, "Feature bank (.fbnk or .csv)")->required();
  eval_cmd->add_option("--format", eval_format, "Bank format override: fbnk | csv");
  auto* eval_tasks_opt = eval_cmd->add_option("--tasks", eval_tasks, "Number of episodes");
  auto* eval_workers_opt = eval_cmd->add_option("--workers", eval_workers, "Worker threads");
  eval_cmd->add_flag("--baselines", eval_baselines, "Also run nearest-prototype, vanilla LP and JMP-off PSLP");
  eval_cmd->add_flag("--skip-errors", eval_skip, "Drop failing tasks instead of aborting");
  eval_cmd->add_option("--report", eval_report, "Write the JSON report to this path");
  eval_cmd->add_option("--csv", eval_csv, "Write per-task CSV to this path");
  eval_cmd->add_flag("--json", eval_json, "Print the JSON report instead of the table");
  eval_flags.attach(*eval_cmd, true);

  // run
  auto* run_cmd = app.add_subcommand("run", "Run one episode and dump its internals");
  std::string run_bank, run_format, run_output;
  std::uint64_t run_task = 0;
  bool run_trace = false;
  ConfigFlags run_flags;
  run_cmd->add_option("--bank", run_bank, "Feature bank (.fbnk or .csv)")->required();
  run_cmd->add_option("--format", run_format, "Bank format override: fbnk | csv");
  run_cmd->add_option("--task", run_task, "Task index within the seeded run");
  run_cmd->add_flag("--trace", run_trace, "Include the prototype trace");
  run_cmd->add_option("-o,--output", run_output, "Write the dump to this path instead of stdout");
  run_flags.attach(*run_cmd, true);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic Gaussian-mixture bank");
  int synth_classes = 20, synth_per_class = 50, synth_dim = 64;
  double synth_sep = 10.0, synth_noise = 1.0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth_cmd->add_option("--classes", synth_classes, "Number of classes")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--per-class", synth_per_class, "Samples per class")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", synth_dim, "Feature dimension")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--sep", synth_sep, "Radius of the class-centre sphere")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--noise", synth_noise, "Per-coordinate noise std")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth_seed, "Seed");
  synth_cmd->add_option("-o,--output", synth_out, "Output path (.fbnk or .csv)")->required();

  // convert
  auto* convert_cmd = app.add_subcommand("convert", "Convert a bank between fbnk and csv");
  std::string convert_in, convert_out, convert_from, convert_to;
  convert_cmd->add_option("--in", convert_in, "Input bank")->required();
  convert_cmd->add_option("--out", convert_out, "Output bank")->required();
  convert_cmd->add_option("--from", convert_from, "Input format override: fbnk | csv");
  convert_cmd->add_option("--to", convert_to, "Output format override: fbnk | csv");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Time single-threaded inference over pre-built episodes");
  std::string bench_bank, bench_format, bench_report;
  std::size_t bench_tasks = 0;
  ConfigFlags bench_flags;
  bench_cmd->add_option("--bank", bench_bank, "Feature bank (.fbnk or .csv)")->required();
  bench_cmd->add_option("--format", bench_format, "Bank format override: fbnk | csv");
  auto* bench_tasks_opt = bench_cmd->add_option("--tasks", bench_tasks, "Number of episodes");
  bench_cmd->add_option("--report", bench_report, "Write the JSON summary to this path");
  bench_flags.attach(*bench_cmd, true);

  // selftest
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the built-in oracle and invariant suites");
  bool selftest_quick = false;
  std::string selftest_fault;
  std::uint64_t selftest_seed = selftest::Options{}.seed;
  selftest_cmd->add_flag("--quick", selftest_quick, "Small instances only");
  selftest_cmd->add_option("--inject-fault", selftest_fault, "Negative control: alpha-guard")
      ->check(CLI::IsMember({"alpha-guard"}));
  selftest_cmd->add_option("--seed", selftest_seed, "Seed for generated instances");

  std::vector<const char*> argv{"pslp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (eval_cmd->parsed()) {
      RunConfig cfg = eval_flags.resolve();
      if (eval_tasks_opt->count() > 0) cfg.tasks = eval_tasks;
      if (eval_workers_opt->count() > 0) cfg.workers = eval_workers;
      const auto pslp_cfg = cfg.pslp();
      pslp_cfg.validate();
      const auto bank = load_bank(eval_bank, eval_format);

      std::vector<eval::Method> methods{eval::pslp_method(pslp_cfg)};
      if (eval_baselines) {
        methods.push_back(eval::pslp_without_jmp_method(pslp_cfg));
        methods.push_back(eval::vanilla_lp_method(pslp_cfg));
        methods.push_back(eval::nearest_prototype_method(pslp_cfg));
      }
      auto report = eval::evaluate(bank, cfg.episode, methods, cfg.tasks,
                                   {.workers = cfg.workers, .skip_errors = eval_skip});
      report.config_echo = cfg.echo();
      const auto json = report::bench_report_json(report);
      if (!eval_report.empty()) write_text(eval_report, json);
      if (!eval_csv.empty()) write_text(eval_csv, report::per_task_csv(report));
      if (eval_json) {
        out << json;
      } else {
        out << "mode: " << episodes::to_string(cfg.episode.mode)
            << (pslp_cfg.balanced ? " (sinkhorn on)" : " (sinkhorn off)") << "\n";
        out << report::bench_report_table(report);
      }
      return kExitOk;
    }

    if (run_cmd->parsed()) {
      const RunConfig cfg = run_flags.resolve();
      const auto pslp_cfg = cfg.pslp();
      const auto bank = load_bank(run_bank, run_format);
      const auto episode = episodes::sample_task(bank, cfg.episode, run_task);
      EpisodeResult result;
      try {
        result = pslp_infer(episode.support_X, episode.support_y, episode.query_X, pslp_cfg);
      } catch (const Error& e) {
        throw e.with_seed(episode.meta.seed);
      }
      print_warnings(err, result.warnings);
      const auto dump = report::episode_dump_json(episode, result, cfg.echo(), run_trace);
      if (run_output.empty()) {
        out << dump;
      } else {
        write_text(run_output, dump);
      }
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      const auto bank = episodes::synthetic_gaussian_bank(synth_classes, synth_per_class, synth_dim, synth_sep,
                                                          synth_noise, synth_seed);
      features::save_feature_bank(bank, synth_out, features::format_from_path(synth_out));
      out << "wrote " << bank.size() << " x " << bank.dim() << " bank (" << bank.num_classes() << " classes) to "
          << synth_out << "\n";
      return kExitOk;
    }

    if (convert_cmd->parsed()) {
      const auto bank = load_bank(convert_in, convert_from);
      auto to = features::format_from_path(convert_out);
      if (convert_to == "csv") to = features::BankFormat::kCsv;
      if (convert_to == "fbnk") to = features::BankFormat::kFbnk;
      features::save_feature_bank(bank, convert_out, to);
      out << "converted " << bank.size() << " rows to " << convert_out << "\n";
      return kExitOk;
    }

    if (bench_cmd->parsed()) {
      RunConfig cfg = bench_flags.resolve();
      if (bench_tasks_opt->count() > 0) cfg.tasks = bench_tasks;
      cfg.workers = 1;
      const auto pslp_cfg = cfg.pslp();
      pslp_cfg.validate();
      const auto bank = load_bank(bench_bank, bench_format);
      const auto run = eval::bench_latency(bank, cfg.episode, pslp_cfg, cfg.tasks);
      const auto stats = eval::summarize(run.accuracies);
      out << "tasks: " << run.summary.n << " (single worker, inference only)\n"
          << "total: " << run.summary.total_seconds << " s\n"
          << "per task: mean " << run.summary.mean_us << " us, p50 " << run.summary.p50_us << " us, p95 "
          << run.summary.p95_us << " us\n"
          << "accuracy: " << 100.0 * stats.mean << " +- " << 100.0 * stats.ci95 << " %\n";
      if (!bench_report.empty()) write_text(bench_report, report::latency_json(run, cfg.echo()));
      return kExitOk;
    }

    if (selftest_cmd->parsed()) {
      const auto result = selftest::run(
          {.quick = selftest_quick, .inject_alpha_fault = selftest_fault == "alpha-guard", .seed = selftest_seed});
      for (const auto& suite : result.suites) {
        out << (suite.passed ? "PASS " : "FAIL ") << suite.name << " (" << suite.cases << " cases)";
        if (!suite.detail.empty()) out << ": " << suite.detail;
        out << "\n";
      }
      out << (result.passed() ? "selftest passed\n" : "selftest FAILED\n");
      return result.passed() ? kExitOk : kExitFailure;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace pslp::cli
