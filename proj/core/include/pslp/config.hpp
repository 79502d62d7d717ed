#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pslp/episodes.hpp"
#include "pslp/features.hpp"
#include "pslp/pslp.hpp"

namespace pslp {

/// Merged configuration for a CLI run.
///
/// Resolution order is defaults, then config files (PSLP_CONFIG, then
/// --config), then command-line flags; each layer calls set(). Keys are flat
/// `section.name = value` pairs. Several keys are aliases for one setting:
///
///   pslp.alpha | prop.alpha        pslp.gamma | jmp.gamma
///   pslp.k     | jmp.k             pslp.b     | jmp.b
///   pslp.balanced | prop.sinkhorn
///
/// alpha, beta, k and balanced follow the sampling mode (balanced or
/// dirichlet) unless set explicitly.
struct RunConfig {
  episodes::EpisodeSpec episode;
  std::size_t tasks = 1000;
  int workers = 1;

  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> k;
  std::optional<bool> balanced;
  double gamma = 10.0;
  int B = 8;
  int t_pslp = 10;
  bool raw_target = false;
  int t_jmp = 1;
  bool dense_first_graph = false;
  int sinkhorn_iters = 30;
  double sinkhorn_tol = 1e-6;
  features::PreprocessPipeline pipeline = features::PreprocessPipeline::default_pipeline();

  /// Throws Error{kConfig} on unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);

  /// Parses `key = value` lines; '#' starts a comment.
  void load_text(std::string_view text);
  void load_file(const std::filesystem::path& path);

  /// Fully resolved inference settings for the current mode.
  PslpConfig pslp() const;

  /// Canonical resolved key/value pairs; loading them back reproduces this run.
  std::vector<std::pair<std::string, std::string>> echo() const;

  static const std::vector<std::string>& known_keys();
};

/// Shortest round-trip text for a double.
std::string format_double(double value);

}  // namespace pslp
