#include "pslp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pslp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kConfig, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T parse_as(std::string_view key, std::string_view value) {
  value = trim(value);
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  value = trim(value);
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "ep.n_way",       "ep.k_shot",        "ep.m_query",       "ep.mode",          "ep.alpha_dir",
      "ep.seed",        "run.tasks",        "run.workers",      "pslp.alpha",       "prop.alpha",
      "pslp.beta",      "pslp.gamma",       "jmp.gamma",        "pslp.k",           "jmp.k",
      "pslp.b",         "jmp.b",            "pslp.t_pslp",      "pslp.balanced",    "prop.sinkhorn",
      "pslp.raw_target",  "jmp.t_jmp",        "jmp.dense_first_graph", "prop.sinkhorn_iters",
      "prop.sinkhorn_tol", "pre.pipeline"};
  return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "ep.n_way") {
    episode.n_way = parse_as<int>(key, value);
  } else if (key == "ep.k_shot") {
    episode.k_shot = parse_as<int>(key, value);
  } else if (key == "ep.m_query") {
    episode.m_query = parse_as<int>(key, value);
  } else if (key == "ep.mode") {
    episode.mode = episodes::parse_sampling_mode(std::string(value));
  } else if (key == "ep.alpha_dir") {
    episode.alpha_dir = parse_as<double>(key, value);
  } else if (key == "ep.seed") {
    episode.base_seed = parse_as<std::uint64_t>(key, value);
  } else if (key == "run.tasks") {
    tasks = parse_as<std::size_t>(key, value);
  } else if (key == "run.workers") {
    workers = parse_as<int>(key, value);
  } else if (key == "pslp.alpha" || key == "prop.alpha") {
    alpha = parse_as<double>(key, value);
  } else if (key == "pslp.beta") {
    beta = parse_as<double>(key, value);
  } else if (key == "pslp.gamma" || key == "jmp.gamma") {
    gamma = parse_as<double>(key, value);
  } else if (key == "pslp.k" || key == "jmp.k") {
    k = parse_as<int>(key, value);
  } else if (key == "pslp.b" || key == "jmp.b") {
    B = parse_as<int>(key, value);
  } else if (key == "pslp.t_pslp") {
    t_pslp = parse_as<int>(key, value);
  } else if (key == "pslp.balanced" || key == "prop.sinkhorn") {
    balanced = parse_bool(key, value);
  } else if (key == "pslp.raw_target") {
    raw_target = parse_bool(key, value);
  } else if (key == "jmp.t_jmp") {
    t_jmp = parse_as<int>(key, value);
  } else if (key == "jmp.dense_first_graph") {
    dense_first_graph = parse_bool(key, value);
  } else if (key == "prop.sinkhorn_iters") {
    sinkhorn_iters = parse_as<int>(key, value);
  } else if (key == "prop.sinkhorn_tol") {
    sinkhorn_tol = parse_as<double>(key, value);
  } else if (key == "pre.pipeline") {
    pipeline = features::PreprocessPipeline::parse(value);
  } else {
    throw Error(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
  }
}

void RunConfig::load_text(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::kConfig, "config line " + std::to_string(line_no) + " has no '='");
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  load_text(buffer.str());
}

PslpConfig RunConfig::pslp() const {
  PslpConfig cfg = episode.mode == episodes::SamplingMode::kBalanced ? PslpConfig::balanced_defaults()
                                                                     : PslpConfig::imbalanced_defaults();
  if (alpha) cfg.alpha = *alpha;
  if (beta) cfg.beta = *beta;
  if (k) cfg.k = *k;
  if (balanced) cfg.balanced = *balanced;
  cfg.gamma = gamma;
  cfg.B = B;
  cfg.t_pslp = t_pslp;
  cfg.raw_target = raw_target;
  cfg.t_jmp = t_jmp;
  cfg.dense_first_graph = dense_first_graph;
  cfg.sinkhorn.max_iter = sinkhorn_iters;
  cfg.sinkhorn.tol = sinkhorn_tol;
  cfg.preprocess = pipeline;
  return cfg;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  const PslpConfig cfg = pslp();
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"ep.n_way", std::to_string(episode.n_way)},
      {"ep.k_shot", std::to_string(episode.k_shot)},
      {"ep.m_query", std::to_string(episode.m_query)},
      {"ep.mode", episodes::to_string(episode.mode)},
      {"ep.alpha_dir", format_double(episode.alpha_dir)},
      {"ep.seed", std::to_string(episode.base_seed)},
      {"run.tasks", std::to_string(tasks)},
      {"run.workers", std::to_string(workers)},
      {"pslp.alpha", format_double(cfg.alpha)},
      {"pslp.beta", format_double(cfg.beta)},
      {"pslp.gamma", format_double(cfg.gamma)},
      {"pslp.k", std::to_string(cfg.k)},
      {"pslp.b", std::to_string(cfg.B)},
      {"pslp.t_pslp", std::to_string(cfg.t_pslp)},
      {"pslp.balanced", b(cfg.balanced)},
      {"pslp.raw_target", b(cfg.raw_target)},
      {"jmp.t_jmp", std::to_string(cfg.t_jmp)},
      {"jmp.dense_first_graph", b(cfg.dense_first_graph)},
      {"prop.sinkhorn_iters", std::to_string(cfg.sinkhorn.max_iter)},
      {"prop.sinkhorn_tol", format_double(cfg.sinkhorn.tol)},
      {"pre.pipeline", cfg.preprocess.to_string()},
  };
}

}  // namespace pslp
