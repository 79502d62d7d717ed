#include "pslp/episodes.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace pslp::episodes {

namespace {

constexpr int kDirichletAttempts = 10;

/// First `count` entries of `items` become a uniform sample without replacement.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, Engine& rng) {
  for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

void validate_shape(int n_way, int k_shot, int m_query) {
  if (n_way < 1 || k_shot < 1 || m_query < 0)
    throw Error(ErrorCode::kConfig, "episode needs n_way >= 1, k_shot >= 1, m_query >= 0");
}

std::vector<features::FeatureBank::ClassId> draw_classes(const features::FeatureBank& bank, int n_way,
                                                         std::size_t min_samples, Engine& rng) {
  if (bank.num_classes() < static_cast<std::size_t>(n_way)) {
    throw Error(ErrorCode::kInsufficientClasses, "bank has " + std::to_string(bank.num_classes()) +
                                                     " classes, episode needs " + std::to_string(n_way));
  }
  std::vector<features::FeatureBank::ClassId> eligible;
  for (const auto& [id, rows] : bank.class_index())
    if (rows.size() >= min_samples) eligible.push_back(id);
  if (eligible.size() < static_cast<std::size_t>(n_way)) {
    throw Error(ErrorCode::kInsufficientSamples,
                "only " + std::to_string(eligible.size()) + " classes have " + std::to_string(min_samples) +
                    " samples, episode needs " + std::to_string(n_way));
  }
  partial_shuffle(eligible, static_cast<std::size_t>(n_way), rng);
  eligible.resize(static_cast<std::size_t>(n_way));
  return eligible;
}

Episode assemble(const features::FeatureBank& bank, const std::vector<features::FeatureBank::ClassId>& classes,
                 int k_shot, const std::vector<int>& query_counts, Engine& rng) {
  Episode ep;
  std::vector<std::pair<std::size_t, ClassIndex>> queries;
  for (std::size_t local = 0; local < classes.size(); ++local) {
    std::vector<std::size_t> rows = bank.class_index().at(classes[local]);
    const auto need = static_cast<std::size_t>(k_shot + query_counts[local]);
    assert(rows.size() >= need);
    partial_shuffle(rows, need, rng);
    for (int s = 0; s < k_shot; ++s) {
      ep.support_rows.push_back(rows[static_cast<std::size_t>(s)]);
      ep.support_y.push_back(static_cast<ClassIndex>(local));
    }
    for (std::size_t q = static_cast<std::size_t>(k_shot); q < need; ++q)
      queries.emplace_back(rows[q], static_cast<ClassIndex>(local));
  }
  std::shuffle(queries.begin(), queries.end(), rng);
  for (const auto& [row, label] : queries) {
    ep.query_rows.push_back(row);
    ep.truth_y.push_back(label);
  }

  const Matrix& F = bank.features();
  ep.support_X.resize(static_cast<Eigen::Index>(ep.support_rows.size()), F.cols());
  for (std::size_t i = 0; i < ep.support_rows.size(); ++i)
    ep.support_X.row(static_cast<Eigen::Index>(i)) = F.row(static_cast<Eigen::Index>(ep.support_rows[i]));
  ep.query_X.resize(static_cast<Eigen::Index>(ep.query_rows.size()), F.cols());
  for (std::size_t i = 0; i < ep.query_rows.size(); ++i)
    ep.query_X.row(static_cast<Eigen::Index>(i)) = F.row(static_cast<Eigen::Index>(ep.query_rows[i]));

  std::unordered_set<std::size_t> seen(ep.support_rows.begin(), ep.support_rows.end());
  for (auto row : ep.query_rows)
    if (!seen.insert(row).second) throw std::logic_error("episode support and query rows overlap");

  ep.meta.n_way = static_cast<int>(classes.size());
  ep.meta.k_shot = k_shot;
  ep.meta.m_query = static_cast<int>(ep.query_rows.size());
  ep.meta.query_counts = query_counts;
  ep.meta.classes = classes;
  return ep;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t task_seed(std::uint64_t base_seed, std::uint64_t task_index) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(task_index + 0x632be59bd9b4e019ULL));
}

std::string to_string(SamplingMode mode) { return mode == SamplingMode::kBalanced ? "balanced" : "dirichlet"; }

SamplingMode parse_sampling_mode(const std::string& text) {
  if (text == "balanced") return SamplingMode::kBalanced;
  if (text == "dirichlet" || text == "imbalanced") return SamplingMode::kDirichlet;
  throw Error(ErrorCode::kConfig, "unknown sampling mode '" + text + "'");
}

std::vector<int> largest_remainder_counts(const std::vector<double>& proportions, int total) {
  const std::size_t n = proportions.size();
  std::vector<int> counts(n, 0);
  std::vector<double> remainders(n, 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = static_cast<double>(total) * proportions[i];
    counts[i] = static_cast<int>(std::floor(exact));
    remainders[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  // The floors never exceed total; hand out the shortfall by remainder.
  for (std::size_t r = 0; assigned < total; r = (r + 1) % n, ++assigned) ++counts[order[r]];
  return counts;
}

std::vector<double> sample_dirichlet(int n, double alpha_dir, Engine& rng) {
  std::gamma_distribution<double> gamma(alpha_dir, 1.0);
  std::vector<double> p(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (auto& v : p) {
    v = gamma(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    // Tiny alpha can underflow every draw; fall back to a uniform simplex point.
    std::fill(p.begin(), p.end(), 1.0 / n);
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

Episode sample_balanced_episode(const features::FeatureBank& bank, int n_way, int k_shot, int m_query,
                                std::uint64_t seed) {
  validate_shape(n_way, k_shot, m_query);
  if (m_query % n_way != 0) {
    throw Error(ErrorCode::kIndivisibleQueryCount,
                "M = " + std::to_string(m_query) + " is not divisible by N = " + std::to_string(n_way));
  }
  Engine rng(seed);
  const int per_class = m_query / n_way;
  const auto classes = draw_classes(bank, n_way, static_cast<std::size_t>(k_shot + per_class), rng);
  Episode ep = assemble(bank, classes, k_shot, std::vector<int>(static_cast<std::size_t>(n_way), per_class), rng);
  ep.meta.seed = seed;
  ep.meta.mode = SamplingMode::kBalanced;
  return ep;
}

Episode sample_dirichlet_episode(const features::FeatureBank& bank, int n_way, int k_shot, int m_query,
                                 double alpha_dir, std::uint64_t seed) {
  validate_shape(n_way, k_shot, m_query);
  if (!(alpha_dir > 0.0)) throw Error(ErrorCode::kConfig, "alpha_dir must be positive");
  Engine rng(seed);
  const auto classes = draw_classes(bank, n_way, static_cast<std::size_t>(k_shot), rng);
  for (int attempt = 0; attempt < kDirichletAttempts; ++attempt) {
    const auto counts = largest_remainder_counts(sample_dirichlet(n_way, alpha_dir, rng), m_query);
    bool fits = true;
    for (std::size_t c = 0; c < classes.size(); ++c)
      fits = fits && bank.class_index().at(classes[c]).size() >= static_cast<std::size_t>(k_shot + counts[c]);
    if (!fits) continue;
    Episode ep = assemble(bank, classes, k_shot, counts, rng);
    ep.meta.seed = seed;
    ep.meta.mode = SamplingMode::kDirichlet;
    ep.meta.alpha_dir = alpha_dir;
    return ep;
  }
  throw Error(ErrorCode::kInsufficientSamples,
              "no Dirichlet query allocation fit the drawn classes after " + std::to_string(kDirichletAttempts) +
                  " attempts");
}

Episode sample_episode(const features::FeatureBank& bank, SamplingMode mode, int n_way, int k_shot, int m_query,
                       double alpha_dir, std::uint64_t seed) {
  if (mode == SamplingMode::kBalanced) return sample_balanced_episode(bank, n_way, k_shot, m_query, seed);
  return sample_dirichlet_episode(bank, n_way, k_shot, m_query, alpha_dir, seed);
}

Episode sample_task(const features::FeatureBank& bank, const EpisodeSpec& spec, std::uint64_t task_index) {
  return sample_episode(bank, spec.mode, spec.n_way, spec.k_shot, spec.m_query, spec.alpha_dir,
                        task_seed(spec.base_seed, task_index));
}

features::FeatureBank synthetic_gaussian_bank(int n_classes, int per_class, int dim, double separation,
                                              double noise, std::uint64_t seed) {
  if (n_classes < 1 || per_class < 1 || dim < 1)
    throw Error(ErrorCode::kConfig, "synthetic bank needs positive class count, size and dimension");
  if (!(separation >= 0.0) || !(noise >= 0.0))
    throw Error(ErrorCode::kConfig, "separation and noise must be non-negative");
  Engine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centers(n_classes, dim);
  for (int c = 0; c < n_classes; ++c) {
    Vector v(dim);
    do {
      for (int j = 0; j < dim; ++j) v(j) = normal(rng);
    } while (v.norm() == 0.0);
    centers.row(c) = separation * v.normalized().transpose();
  }

  Matrix X(static_cast<Eigen::Index>(n_classes) * per_class, dim);
  std::vector<features::FeatureBank::ClassId> labels;
  labels.reserve(static_cast<std::size_t>(X.rows()));
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (int j = 0; j < dim; ++j) X(row, j) = centers(c, j) + noise * normal(rng);
      labels.push_back(static_cast<features::FeatureBank::ClassId>(c));
    }
  }
  return features::FeatureBank(std::move(X), std::move(labels));
}

}  // namespace pslp::episodes
