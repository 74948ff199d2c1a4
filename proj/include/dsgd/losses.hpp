#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

#include "dsgd/dataset.hpp"

namespace dsgd {

enum class LossKind { LeastSquares, LogisticL2, SmallMlp };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Gradient bound B and smoothness L over the ball V, plus the strong
/// convexity modulus. `certified` is false for sampled estimates.
struct Constants {
  double B = 0.0;
  double L = 0.0;
  double nu = 0.0;
  bool certified = true;
};

/// Euclidean projection onto the closed ball of radius r centred at 0.
Eigen::VectorXd project_ball(const Eigen::VectorXd& x, double r);
/// In-place variant; returns true when the point was moved.
bool project_ball_inplace(Eigen::Ref<Eigen::VectorXd> x, double r);

/// Finite-sum objective f(x) = (1/N) sum_i f(x; xi_i) with per-sample
/// losses:
///   LeastSquares  (xi^T x - y)^2
///   LogisticL2    log(1 + exp(-y a^T x)) + reg/2 |x|^2,   y in {-1, +1}
///   SmallMlp      (w2^T tanh(W1 xi + b1) + b2 - y)^2
/// SmallMlp parameters are packed as [W1 (row-major, hidden x d) | b1 | w2 | b2].
class LossModel {
 public:
  static LossModel least_squares(Dataset data, double radius);
  static LossModel logistic(Dataset data, double reg, double radius);
  static LossModel small_mlp(Dataset data, int hidden, double radius);

  /// Same loss family and hyperparameters on a different sample list.
  LossModel with_samples(Dataset data) const;

  LossKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  int feature_dim() const noexcept { return feature_dim_; }
  std::size_t size() const noexcept { return data_.size(); }
  double radius() const noexcept { return radius_; }
  double reg() const noexcept { return reg_; }
  int hidden() const noexcept { return hidden_; }
  const Dataset& samples() const noexcept { return data_; }

  double value(const Eigen::VectorXd& x, std::size_t index) const;
  /// Loss of an arbitrary sample (e.g. from a held-out evaluation set).
  double value_on(const Eigen::VectorXd& x, const Sample& sample) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, std::size_t index) const;
  void gradient_into(const Eigen::VectorXd& x, const Sample& sample, Eigen::Ref<Eigen::VectorXd> out) const;

  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd full_gradient(const Eigen::VectorXd& x) const;
  /// Mean per-sample loss over another sample list.
  double mean_value(const Eigen::VectorXd& x, const Dataset& eval) const;

  /// Closed forms for the convex models; sampled estimates (x2 safety
  /// factor) for SmallMlp. Deterministic.
  Constants constants() const;

 private:
  LossModel(LossKind kind, Dataset data, double radius, double reg, int hidden);

  const Sample& at(std::size_t index) const;
  void check_dim(const Eigen::VectorXd& x) const;

  LossKind kind_;
  Dataset data_;
  double radius_;
  double reg_ = 0.0;
  int hidden_ = 0;
  int feature_dim_ = 0;
  int dim_ = 0;
};

/// Copy of `data` with position `position` replaced. Throws DataError on a
/// dimension mismatch and ValidationError on an out-of-range position.
std::pair<Dataset, Dataset> make_paired_datasets(const Dataset& data, std::size_t position, const Sample& replacement);

/// Indices where two equally sized datasets differ.
std::vector<std::size_t> differing_positions(const Dataset& a, const Dataset& b);

/// Uniform point in the ball of radius r.
Eigen::VectorXd sample_in_ball(int dim, double r, std::mt19937_64& rng);

}  // namespace dsgd
