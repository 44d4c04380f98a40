#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "liwuda/matrix.hpp"
#include "liwuda/settings.hpp"

namespace liwuda::data {

inline constexpr int kUnknownLabel = -1;

/// Class budget: common classes are indices [0, n_common), source-private
/// classes follow, then target-private classes.
struct LabelSplit {
  std::size_t n_common = 4;
  std::size_t n_source_private = 2;
  std::size_t n_target_private = 2;

  std::size_t source_classes() const { return n_common + n_source_private; }
  std::size_t total_classes() const { return n_common + n_source_private + n_target_private; }

  friend bool operator==(const LabelSplit&, const LabelSplit&) = default;
};

/// Throws ConfigError when the split is inconsistent with the setting's label
/// relation (e.g. target-private classes under PDA).
void check_split(UdaSetting setting, const LabelSplit& split);

/// Target = rotate(source-space sample) + translation + noise.
struct ShiftSpec {
  double rotation = 0.0;            // radians, applied in the plane of axes 0 and 1
  std::vector<double> translation;  // zero-padded to the data dimension
  double noise_std = 0.0;           // extra isotropic noise on target samples
  double spread = 1.0;              // per-class cluster standard deviation
};

enum class DomainRole { kSource, kTarget };
std::string_view to_string(DomainRole role);

struct DomainDataset {
  Matrix features;          // n x dim
  std::vector<int> labels;  // class index, or kUnknownLabel for target-private samples
  LabelSplit split;
  DomainRole role = DomainRole::kSource;
  std::uint64_t seed = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }

  friend bool operator==(const DomainDataset&, const DomainDataset&) = default;
};

/// Label-free view of the target domain; the only form training accepts.
class UnlabeledView {
 public:
  explicit UnlabeledView(const DomainDataset& target) : features_(&target.features) {}
  const Matrix& features() const { return *features_; }
  std::size_t size() const { return features_->rows(); }

 private:
  const Matrix* features_;
};

struct DatasetPair {
  DomainDataset source;
  DomainDataset target;
};

/// Isotropic Gaussian class clusters with well separated means; target samples
/// come from the common and target-private classes and are shifted by `shift`.
/// Deterministic in `seed`.
DatasetPair generate_pair(const LabelSplit& split, const ShiftSpec& shift, std::size_t n_source,
                          std::size_t n_target, std::size_t dim, std::uint64_t seed);

/// Dataset text format, version 1 (byte-exact; '\n' line ends):
///
///   liwuda-dataset 1
///   role source|target
///   dim <d>
///   split <n_common> <n_source_private> <n_target_private>
///   seed <u64>
///   samples <n>
///   <label>\t<x_1>\t...\t<x_d>          (n lines)
///
/// Reals are written with "%.17g". Labels are class indices below the split's
/// total class count, or -1 for evaluation-only unknown samples (target only).
void write_dataset(std::ostream& out, const DomainDataset& dataset);
DomainDataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const DomainDataset& dataset);
DomainDataset load_dataset(const std::filesystem::path& path);

}  // namespace liwuda::data
