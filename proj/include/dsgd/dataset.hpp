#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dsgd {

struct Sample {
  Eigen::VectorXd features;
  double label = 0.0;

  bool operator==(const Sample& other) const {
    return label == other.label && features.size() == other.features.size() && features == other.features;
  }
};

using Dataset = std::vector<Sample>;

enum class SyntheticTask { Linear, Logistic, Mlp };

std::string_view to_string(SyntheticTask task);
SyntheticTask parse_synthetic_task(std::string_view name);

/// Seeded Gaussian features with labels from a planted model.
struct SyntheticSpec {
  int n = 200;
  int dim = 14;
  SyntheticTask task = SyntheticTask::Linear;
  double noise = 0.1;
  /// Per-coordinate feature standard deviation; <= 0 means 1/sqrt(dim).
  double feature_scale = 0.0;
  std::uint64_t seed = 1;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

/// CSV rows of numbers, last column is the label. A first row that does not
/// parse as numbers is treated as a header.
Dataset read_csv_dataset(std::istream& in);
Dataset load_csv_dataset(const std::string& path);

/// libsvm sparse lines `label idx:value ...` with 1-based indices. A
/// dimension of 0 means "largest index seen".
Dataset read_libsvm_dataset(std::istream& in, int dim = 0);
Dataset load_libsvm_dataset(const std::string& path, int dim = 0);

void write_csv_dataset(std::ostream& out, const Dataset& data);

struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

/// Per-feature mean 0 / variance 1 in place; constant columns are centred only.
Standardization standardize(Dataset& data);
/// Applies previously computed statistics (e.g. training stats to a held-out set).
void apply_standardization(Dataset& data, const Standardization& stats);

/// Throws DataError when the dataset is empty, has dimension 0, or is ragged.
int checked_feature_dim(const Dataset& data);

}  // namespace dsgd
