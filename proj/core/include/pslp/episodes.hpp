#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pslp/features.hpp"
#include "pslp/types.hpp"

namespace pslp::episodes {

/// Every sampler draws from this engine, seeded by task_seed().
using Engine = std::mt19937_64;

/// Recorded in report metadata so runs can be reproduced.
inline constexpr const char* kGeneratorName = "mt19937_64 seeded by splitmix64(base_seed, task_index)";

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for task `task_index` of a run. Independent of worker scheduling.
std::uint64_t task_seed(std::uint64_t base_seed, std::uint64_t task_index);

enum class SamplingMode { kBalanced, kDirichlet };

std::string to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& text);

/// Shape and sampling settings shared by every task of a run.
struct EpisodeSpec {
  int n_way = 5;
  int k_shot = 1;
  int m_query = 75;
  SamplingMode mode = SamplingMode::kBalanced;
  double alpha_dir = 2.0;
  std::uint64_t base_seed = 0;
};

struct EpisodeMeta {
  int n_way = 0;
  int k_shot = 0;
  int m_query = 0;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::kBalanced;
  double alpha_dir = 0.0;
  std::vector<int> query_counts;  // per episode-local class
  std::vector<features::FeatureBank::ClassId> classes;  // bank class id of each local class
};

/// One N-way K-shot task. truth_y is for scoring only.
struct Episode {
  Matrix support_X;
  LabelVector support_y;
  Matrix query_X;
  LabelVector truth_y;
  std::vector<std::size_t> support_rows;  // source rows in the bank
  std::vector<std::size_t> query_rows;
  EpisodeMeta meta;
};

/// Largest-remainder rounding of total * proportions. Sums to total exactly;
/// remainder ties go to the lower class index.
std::vector<int> largest_remainder_counts(const std::vector<double>& proportions, int total);

/// Symmetric Dirichlet(alpha_dir) draw of dimension n.
std::vector<double> sample_dirichlet(int n, double alpha_dir, Engine& rng);

/// Episode with exactly M/N queries per class.
Episode sample_balanced_episode(const features::FeatureBank& bank, int n_way, int k_shot, int m_query,
                                std::uint64_t seed);

/// Episode whose per-class query counts follow Dirichlet(alpha_dir) proportions.
/// Proportions are redrawn up to 10 times when a class lacks samples.
Episode sample_dirichlet_episode(const features::FeatureBank& bank, int n_way, int k_shot, int m_query,
                                 double alpha_dir, std::uint64_t seed);

Episode sample_episode(const features::FeatureBank& bank, SamplingMode mode, int n_way, int k_shot,
                       int m_query, double alpha_dir, std::uint64_t seed);

/// Task `task_index` of a run described by `spec`.
Episode sample_task(const features::FeatureBank& bank, const EpisodeSpec& spec, std::uint64_t task_index);

/// Gaussian-mixture bank: class centres uniform on the sphere of radius
/// `separation`, isotropic noise of standard deviation `noise`.
features::FeatureBank synthetic_gaussian_bank(int n_classes, int per_class, int dim, double separation,
                                              double noise, std::uint64_t seed);

}  // namespace pslp::episodes
