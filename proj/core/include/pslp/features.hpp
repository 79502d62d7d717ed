#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pslp/types.hpp"

namespace pslp::features {

/// Pool of labelled feature vectors that episodes are drawn from.
///
/// Immutable after construction; safe to share between episode workers.
class FeatureBank {
 public:
  using ClassId = std::uint32_t;

  /// Validates shape and finiteness and builds the class index.
  /// Throws Error{kEmptyBank} for n = 0, kDimensionMismatch when labels and rows disagree.
  FeatureBank(Matrix features, std::vector<ClassId> labels);

  const Matrix& features() const noexcept { return features_; }
  const std::vector<ClassId>& labels() const noexcept { return labels_; }
  /// Class id -> row indices in ascending order. Partitions 0..n.
  const std::map<ClassId, std::vector<std::size_t>>& class_index() const noexcept {
    return class_index_;
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  std::size_t num_classes() const noexcept { return class_index_.size(); }

 private:
  Matrix features_;
  std::vector<ClassId> labels_;
  std::map<ClassId, std::vector<std::size_t>> class_index_;
};

enum class BankFormat { kFbnk, kCsv };

/// Guesses the format from the file extension (".csv" is CSV, anything else fbnk).
BankFormat format_from_path(const std::filesystem::path& path);

FeatureBank load_feature_bank(const std::filesystem::path& path, BankFormat format);
void save_feature_bank(const FeatureBank& bank, const std::filesystem::path& path,
                       BankFormat format);

// In-memory codecs used by the file functions above.
std::vector<std::uint8_t> encode_fbnk(const FeatureBank& bank);
FeatureBank decode_fbnk(const std::vector<std::uint8_t>& bytes);
std::string encode_csv(const FeatureBank& bank);
FeatureBank decode_csv(std::string_view text);

struct PreprocessStep {
  enum class Kind { kCenter, kL2Normalize, kPca };
  Kind kind = Kind::kCenter;
  int target_dim = 0;  // only meaningful for kPca

  static PreprocessStep center() { return {Kind::kCenter, 0}; }
  static PreprocessStep l2_normalize() { return {Kind::kL2Normalize, 0}; }
  static PreprocessStep pca(int dim) { return {Kind::kPca, dim}; }

  friend bool operator==(const PreprocessStep&, const PreprocessStep&) = default;
};

struct PreprocessPipeline {
  std::vector<PreprocessStep> steps;

  /// [center, l2_normalize, pca(40), l2_normalize]
  static PreprocessPipeline default_pipeline();

  /// Parses "center,l2,pca:40,l2". An empty string (or "none") is the empty pipeline.
  static PreprocessPipeline parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const PreprocessPipeline&, const PreprocessPipeline&) = default;
};

/// Projects mean-centred X onto its top `target_dim` principal directions.
///
/// Directions are eigenvectors of the sample covariance in descending eigenvalue
/// order; each is sign-fixed so that its largest-magnitude entry is positive.
/// Throws Error{kDimensionError} if target_dim is outside [1, min(m, d)].
Matrix pca_reduce(const Matrix& X, int target_dim);

/// Principal directions (d x target_dim) used by pca_reduce, with the same sign rule.
Matrix principal_directions(const Matrix& X, int target_dim);

struct PipelineOptions {
  /// Clamp PCA target_dim to min(requested, m, d) instead of failing.
  bool clamp_pca = false;
};

/// Applies the steps in order. `warnings` (optional) collects PCA clamp notices.
Matrix apply_pipeline(const Matrix& X, const PreprocessPipeline& pipeline,
                      PipelineOptions options = {},
                      std::vector<std::string>* warnings = nullptr);

}  // namespace pslp::features
