#include "pslp/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pslp::features {

namespace {

constexpr char kMagic[4] = {'F', 'B', 'N', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
bool parse_number(std::string_view field, T& value) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size();
}

void center_columns(Matrix& X) {
  if (X.rows() == 0) return;
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;
}

void l2_normalize_rows(Matrix& X) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double norm = X.row(i).norm();
    if (norm > 0.0) X.row(i) /= norm;
  }
}

}  // namespace

FeatureBank::FeatureBank(Matrix features, std::vector<ClassId> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (labels_.empty() || features_.rows() == 0) throw Error(ErrorCode::kEmptyBank, "feature bank has no rows");
  if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(features_.rows()) + " feature rows but " +
                    std::to_string(labels_.size()) + " labels");
  }
  if (features_.cols() < 1) throw Error(ErrorCode::kDimensionMismatch, "feature dimension must be >= 1");
  if (!features_.allFinite()) throw Error(ErrorCode::kParseError, "non-finite feature value");
  for (std::size_t i = 0; i < labels_.size(); ++i) class_index_[labels_[i]].push_back(i);
}

BankFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? BankFormat::kCsv : BankFormat::kFbnk;
}

std::vector<std::uint8_t> encode_fbnk(const FeatureBank& bank) {
  const auto n = static_cast<std::uint32_t>(bank.size());
  const auto d = static_cast<std::uint32_t>(bank.dim());
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * (static_cast<std::size_t>(n) * d + n));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le(out, kVersion);
  put_le(out, n);
  put_le(out, d);
  const Matrix& X = bank.features();
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) put_le(out, static_cast<float>(X(i, j)));
  for (auto label : bank.labels()) put_le(out, static_cast<std::uint32_t>(label));
  return out;
}

FeatureBank decode_fbnk(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::kMalformedHeader, "missing FBNK magic");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kVersion)
    throw Error(ErrorCode::kMalformedHeader, "unsupported fbnk version " + std::to_string(version));
  const std::uint64_t n = get_le<std::uint32_t>(bytes.data() + 8);
  const std::uint64_t d = get_le<std::uint32_t>(bytes.data() + 12);
  if (n == 0) throw Error(ErrorCode::kEmptyBank, "fbnk header declares n = 0");
  const std::uint64_t expected = kHeaderBytes + 4 * (n * d + n);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch,
                "payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                    std::to_string(expected));
  }
  Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < d; ++j, p += 4) X(i, j) = get_le<float>(p);
  std::vector<FeatureBank::ClassId> labels(n);
  for (auto& label : labels) {
    label = get_le<std::uint32_t>(p);
    p += 4;
  }
  return FeatureBank(std::move(X), std::move(labels));
}

std::string encode_csv(const FeatureBank& bank) {
  std::string out;
  char buf[64];
  const Matrix& X = bank.features();
  for (std::size_t i = 0; i < bank.size(); ++i) {
    out += std::to_string(bank.labels()[i]);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, X(static_cast<Eigen::Index>(i), j));
      out += ',';
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

FeatureBank decode_csv(std::string_view text) {
  std::vector<FeatureBank::ClassId> labels;
  std::vector<double> values;
  std::size_t d = 0;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() < 2)
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": expected label and features");
    if (d == 0) {
      d = fields.size() - 1;
    } else if (fields.size() - 1 != d) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "line " + std::to_string(line_no) + " has " + std::to_string(fields.size() - 1) +
                      " features, expected " + std::to_string(d));
    }
    FeatureBank::ClassId label = 0;
    if (!parse_number(fields[0], label))
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad label '" +
                                              std::string(fields[0]) + "'");
    labels.push_back(label);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_number(fields[j], v))
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad value '" +
                                                std::string(fields[j]) + "'");
      values.push_back(v);
    }
  }
  if (labels.empty()) throw Error(ErrorCode::kEmptyBank, "CSV contains no rows");
  Matrix X(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = values[static_cast<std::size_t>(i) * d + j];
  return FeatureBank(std::move(X), std::move(labels));
}

FeatureBank load_feature_bank(const std::filesystem::path& path, BankFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (format == BankFormat::kFbnk) return decode_fbnk(bytes);
  return decode_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void save_feature_bank(const FeatureBank& bank, const std::filesystem::path& path, BankFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  if (format == BankFormat::kFbnk) {
    auto bytes = encode_fbnk(bank);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  } else {
    out << encode_csv(bank);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

PreprocessPipeline PreprocessPipeline::default_pipeline() {
  return {{PreprocessStep::center(), PreprocessStep::l2_normalize(), PreprocessStep::pca(40),
           PreprocessStep::l2_normalize()}};
}

PreprocessPipeline PreprocessPipeline::parse(std::string_view text) {
  PreprocessPipeline pipeline;
  text = trim(text);
  if (text.empty() || text == "none") return pipeline;
  for (auto token : split(text, ',')) {
    token = trim(token);
    if (token == "center") {
      pipeline.steps.push_back(PreprocessStep::center());
    } else if (token == "l2" || token == "l2_normalize") {
      pipeline.steps.push_back(PreprocessStep::l2_normalize());
    } else if (token.starts_with("pca:") || token.starts_with("pca(")) {
      auto arg = token.substr(4);
      if (!arg.empty() && arg.back() == ')') arg.remove_suffix(1);
      int dim = 0;
      if (!parse_number(arg, dim) || dim < 1)
        throw Error(ErrorCode::kConfig, "bad PCA dimension in pipeline step '" + std::string(token) + "'");
      pipeline.steps.push_back(PreprocessStep::pca(dim));
    } else {
      throw Error(ErrorCode::kConfig, "unknown pipeline step '" + std::string(token) + "'");
    }
  }
  return pipeline;
}

std::string PreprocessPipeline::to_string() const {
  if (steps.empty()) return "none";
  std::string out;
  for (const auto& step : steps) {
    if (!out.empty()) out += ',';
    switch (step.kind) {
      case PreprocessStep::Kind::kCenter: out += "center"; break;
      case PreprocessStep::Kind::kL2Normalize: out += "l2"; break;
      case PreprocessStep::Kind::kPca: out += "pca:" + std::to_string(step.target_dim); break;
    }
  }
  return out;
}

Matrix principal_directions(const Matrix& X, int target_dim) {
  const auto m = X.rows();
  const auto d = X.cols();
  if (target_dim < 1 || target_dim > std::min(m, d)) {
    throw Error(ErrorCode::kDimensionError,
                "PCA target_dim " + std::to_string(target_dim) + " outside [1, " +
                    std::to_string(std::min(m, d)) + "]");
  }
  Matrix centered = X;
  center_columns(centered);
  const Matrix covariance =
      (centered.transpose() * centered) / static_cast<double>(std::max<Eigen::Index>(m - 1, 1));

  // Eigenvalues come back ascending; take the last target_dim columns in reverse.
  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
  Matrix directions(d, target_dim);
  for (int c = 0; c < target_dim; ++c) {
    Vector v = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    directions.col(c) = v;
  }
  return directions;
}

Matrix pca_reduce(const Matrix& X, int target_dim) {
  const Matrix directions = principal_directions(X, target_dim);
  Matrix centered = X;
  center_columns(centered);
  return centered * directions;
}

Matrix apply_pipeline(const Matrix& X, const PreprocessPipeline& pipeline, PipelineOptions options,
                      std::vector<std::string>* warnings) {
  Matrix out = X;
  for (const auto& step : pipeline.steps) {
    switch (step.kind) {
      case PreprocessStep::Kind::kCenter:
        center_columns(out);
        break;
      case PreprocessStep::Kind::kL2Normalize:
        l2_normalize_rows(out);
        break;
      case PreprocessStep::Kind::kPca: {
        int dim = step.target_dim;
        if (options.clamp_pca) {
          const int limit = static_cast<int>(std::min(out.rows(), out.cols()));
          if (dim > limit) {
            if (warnings) {
              warnings->push_back("pca target_dim " + std::to_string(dim) + " clamped to " +
                                  std::to_string(limit));
            }
            dim = limit;
          }
        }
        out = pca_reduce(out, dim);
        break;
      }
    }
  }
  return out;
}

}  // namespace pslp::features
