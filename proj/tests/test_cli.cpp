#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pslp/commands.hpp"
#include "pslp/features.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = pslp::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path tmp(const std::string& name) {
  const fs::path dir = PSLP_TEST_TMPDIR;
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& small_bank() {
  static const fs::path p = [] {
    const auto path = tmp("small.fbnk");
    const auto r = invoke({"synth", "--classes", "8", "--per-class", "30", "--dim", "16", "--sep", "6", "--seed", "1",
                           "-o", path.string()});
    REQUIRE(r.code == 0);
    return path;
  }();
  return p;
}

struct EnvGuard {
  explicit EnvGuard(const std::string& value) { setenv("PSLP_CONFIG", value.c_str(), 1); }
  ~EnvGuard() { unsetenv("PSLP_CONFIG"); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2 with help text") {
    auto r = invoke({"eval", "--tasks", "3"});
    CHECK(r.code == pslp::cli::kExitUsage);
    CHECK(r.err.find("--bank") != std::string::npos);
    CHECK(invoke({}).code == pslp::cli::kExitUsage);
    CHECK(invoke({"frobnicate"}).code == pslp::cli::kExitUsage);
    CHECK(invoke({"selftest", "--inject-fault", "other"}).code == pslp::cli::kExitUsage);
  }

  TEST_CASE("help exits 0") {
    const auto r = invoke({"eval", "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--mode") != std::string::npos);
  }

  TEST_CASE("synth writes a loadable, reproducible bank") {
    const auto a = tmp("synth_a.fbnk"), b = tmp("synth_b.fbnk");
    const std::vector<std::string> flags = {"synth", "--classes", "20", "--per-class", "50", "--dim", "64",
                                            "--sep", "10", "--noise", "1", "--seed", "3", "-o"};
    auto args = flags;
    args.push_back(a.string());
    REQUIRE(invoke(args).code == 0);
    args.back() = b.string();
    REQUIRE(invoke(args).code == 0);
    CHECK(slurp(a) == slurp(b));
    const auto bank = pslp::features::load_feature_bank(a, pslp::features::BankFormat::kFbnk);
    CHECK(bank.size() == 1000);
    CHECK(bank.dim() == 64);
    CHECK(bank.num_classes() == 20);
  }

  TEST_CASE("synth with zero noise collapses each class") {
    const auto p = tmp("noiseless.fbnk");
    REQUIRE(invoke({"synth", "--classes", "4", "--per-class", "10", "--dim", "8", "--noise", "0", "-o", p.string()})
                .code == 0);
    const auto bank = pslp::features::load_feature_bank(p, pslp::features::BankFormat::kFbnk);
    for (std::size_t i = 0; i < bank.size(); ++i)
      for (std::size_t j = 0; j < bank.size(); ++j)
        if (bank.labels()[i] == bank.labels()[j]) CHECK((bank.features().row(i) - bank.features().row(j)).norm() == 0.0);
  }

  TEST_CASE("convert round trip") {
    const auto csv = tmp("rt.csv"), back = tmp("rt.fbnk");
    REQUIRE(invoke({"convert", "--in", small_bank().string(), "--out", csv.string()}).code == 0);
    REQUIRE(invoke({"convert", "--in", csv.string(), "--out", back.string()}).code == 0);
    CHECK(slurp(back) == slurp(small_bank()));
    const auto odd = tmp("rt.data");
    REQUIRE(invoke({"convert", "--in", small_bank().string(), "--out", odd.string(), "--to", "csv"}).code == 0);
    CHECK(slurp(odd) == slurp(csv));
    CHECK(invoke({"convert", "--in", tmp("missing.fbnk").string(), "--out", csv.string()}).code ==
          pslp::cli::kExitFailure);
  }

  TEST_CASE("eval end to end") {
    const auto bank = tmp("eval.fbnk");
    REQUIRE(invoke({"synth", "--classes", "20", "--per-class", "100", "--dim", "32", "--seed", "2", "-o",
                    bank.string()})
                .code == 0);
    const auto report = tmp("eval.json"), csv = tmp("eval.csv");
    const auto r = invoke({"eval", "--bank", bank.string(), "--n-way", "5", "--k-shot", "1", "--m-query", "75",
                           "--mode", "balanced", "--tasks", "1000", "--seed", "7", "--report", report.string(),
                           "--csv", csv.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("sinkhorn on") != std::string::npos);
    const auto doc = Json::parse(slurp(report));
    CHECK(doc["n_tasks"] == 1000);
    CHECK(doc["n_failed"] == 0);
    CHECK(doc["config_echo"]["ep.seed"] == "7");
    CHECK(doc["config_echo"]["ep.mode"] == "balanced");
    CHECK(doc["mean_accuracy"].get<double>() > 0.9);
    std::istringstream lines(slurp(csv));
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) ++n;
    CHECK(n == 1001);
  }

  TEST_CASE("eval reproduces from its own echo") {
    const auto first = invoke({"eval", "--bank", small_bank().string(), "--tasks", "20", "--seed", "5", "--alpha",
                               "0.6", "--json"});
    REQUIRE(first.code == 0);
    const auto doc = Json::parse(first.out);
    std::string text;
    for (const auto& [k, v] : doc["config_echo"].items()) text += k + " = " + v.get<std::string>() + "\n";
    const auto cfg = tmp("echo.cfg");
    std::ofstream(cfg) << text;
    const auto second = invoke({"eval", "--bank", small_bank().string(), "--config", cfg.string(), "--json"});
    REQUIRE(second.code == 0);
    const auto doc2 = Json::parse(second.out);
    CHECK(doc2["mean_accuracy"] == doc["mean_accuracy"]);
    CHECK(doc2["ci95"] == doc["ci95"]);
    CHECK(doc2["config_echo"] == doc["config_echo"]);
  }

  TEST_CASE("dirichlet mode applies the imbalanced defaults") {
    const auto r = invoke({"eval", "--bank", small_bank().string(), "--mode", "dirichlet", "--alpha-dir", "2",
                           "--tasks", "5", "--json"});
    REQUIRE(r.code == 0);
    const auto echo = Json::parse(r.out)["config_echo"];
    CHECK(echo["ep.mode"] == "dirichlet");
    CHECK(echo["ep.alpha_dir"] == "2");
    CHECK(echo["pslp.alpha"] == "0.9");
    CHECK(echo["pslp.beta"] == "0.2");
    CHECK(echo["pslp.k"] == "1");
    CHECK(echo["pslp.balanced"] == "false");

    const auto over = invoke({"eval", "--bank", small_bank().string(), "--mode", "dirichlet", "--beta", "0.4",
                              "--tasks", "5", "--json"});
    CHECK(Json::parse(over.out)["config_echo"]["pslp.beta"] == "0.4");
    CHECK(Json::parse(over.out)["config_echo"]["pslp.alpha"] == "0.9");
  }

  TEST_CASE("config precedence: defaults, env file, --config, flags") {
    const auto env_cfg = tmp("env.cfg"), file_cfg = tmp("file.cfg");
    std::ofstream(env_cfg) << "pslp.alpha = 0.5\npslp.beta = 0.3\npslp.gamma = 7\n";
    std::ofstream(file_cfg) << "pslp.beta = 0.35\npslp.gamma = 8\n";
    EnvGuard env(env_cfg.string());
    const auto r = invoke({"eval", "--bank", small_bank().string(), "--tasks", "2", "--config", file_cfg.string(),
                           "--gamma", "9", "--json"});
    REQUIRE(r.code == 0);
    const auto echo = Json::parse(r.out)["config_echo"];
    CHECK(echo["pslp.alpha"] == "0.5");
    CHECK(echo["pslp.beta"] == "0.35");
    CHECK(echo["pslp.gamma"] == "9");
  }

  TEST_CASE("--set overrides any key and rejects unknown ones") {
    auto r = invoke({"eval", "--bank", small_bank().string(), "--tasks", "2", "--set", "jmp.t_jmp=2", "--set",
                     "prop.sinkhorn_iters=12", "--json"});
    REQUIRE(r.code == 0);
    const auto echo = Json::parse(r.out)["config_echo"];
    CHECK(echo["jmp.t_jmp"] == "2");
    CHECK(echo["prop.sinkhorn_iters"] == "12");
    r = invoke({"eval", "--bank", small_bank().string(), "--set", "nope.key=1"});
    CHECK(r.code == pslp::cli::kExitFailure);
    CHECK(r.err.find("nope.key") != std::string::npos);
    r = invoke({"eval", "--bank", small_bank().string(), "--alpha", "1"});
    CHECK(r.code == pslp::cli::kExitFailure);
  }

  TEST_CASE("errors during evaluation report the failing seed") {
    const auto r = invoke({"eval", "--bank", small_bank().string(), "--n-way", "9", "--tasks", "2"});
    CHECK(r.code == pslp::cli::kExitFailure);
    CHECK(r.err.find("error:") == 0);
  }

  TEST_CASE("run dumps one episode deterministically") {
    const std::vector<std::string> args = {"run", "--bank", small_bank().string(), "--seed", "11", "--task", "4"};
    const auto a = invoke(args), b = invoke(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto doc = Json::parse(a.out);
    CHECK(doc["seed"].get<std::uint64_t>() != 0);
    CHECK_FALSE(doc.contains("prototype_trace"));
    // Sinkhorn ends on the column step; rows meet the tolerance unless the run is flagged.
    std::vector<double> cols(5, 0.0);
    for (const auto& row : doc["soft_labels"])
      for (std::size_t n = 0; n < cols.size(); ++n) cols[n] += row[n].get<double>();
    for (double c : cols) CHECK(std::abs(c - 15.0) <= 1e-9);
    double row_err = 0.0;
    for (const auto& s : doc["query_row_sums"]) row_err = std::max(row_err, std::abs(s.get<double>() - 1.0));
    CHECK((row_err < 1e-6 || doc["sinkhorn_unconverged"].get<int>() > 0));
  }

  TEST_CASE("run --trace records every prototype update") {
    auto r = invoke({"run", "--bank", small_bank().string(), "--trace", "--t-pslp", "6", "--mode", "dirichlet"});
    REQUIRE(r.code == 0);
    auto doc = Json::parse(r.out);
    CHECK(doc["prototype_trace"].size() == 7);
    for (const auto& s : doc["query_row_sums"]) CHECK(std::abs(s.get<double>() - 1.0) <= 1e-9);
    r = invoke({"run", "--bank", small_bank().string(), "--trace", "--sinkhorn", "false"});
    doc = Json::parse(r.out);
    CHECK(doc["prototype_trace"].size() == 11);
    for (const auto& s : doc["query_row_sums"]) CHECK(std::abs(s.get<double>() - 1.0) <= 1e-9);
  }

  TEST_CASE("run writes only to the requested path") {
    const auto out = tmp("dump.json");
    fs::remove(out);
    const auto r = invoke({"run", "--bank", small_bank().string(), "-o", out.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    CHECK(fs::exists(out));
  }

  TEST_CASE("bench prints timing and writes a summary") {
    const auto rep = tmp("bench.json");
    const auto r = invoke({"bench", "--bank", small_bank().string(), "--tasks", "5", "--report", rep.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("per task") != std::string::npos);
    CHECK(Json::parse(slurp(rep))["latency_us"]["n"] == 5);
  }

  TEST_CASE("selftest quick passes and the injected fault fails") {
    const auto ok = invoke({"selftest", "--quick"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("selftest passed") != std::string::npos);
    const auto bad = invoke({"selftest", "--quick", "--inject-fault", "alpha-guard"});
    CHECK(bad.code != 0);
    CHECK(bad.out.find("FAIL") != std::string::npos);
  }
}
