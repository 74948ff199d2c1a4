#include "dsgd/losses.hpp"

#include <algorithm>
#include <cmath>

#include "dsgd/error.hpp"

namespace dsgd {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

constexpr std::uint64_t kConstantsSeed = 0x6c6f73735f636f6eULL;
constexpr int kConstantsDraws = 2000;
constexpr double kSafetyFactor = 2.0;

struct MlpView {
  int hidden;
  int in;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const Eigen::VectorXd> w2;
  double b2;

  MlpView(const Eigen::VectorXd& x, int h, int d)
      : hidden(h),
        in(d),
        w1(x.data(), h, d),
        b1(x.data() + static_cast<Eigen::Index>(h) * d, h),
        w2(x.data() + static_cast<Eigen::Index>(h) * d + h, h),
        b2(x(static_cast<Eigen::Index>(h) * d + 2 * h)) {}
};

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::LeastSquares: return "least-squares";
    case LossKind::LogisticL2: return "logistic";
    case LossKind::SmallMlp: return "mlp";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "least-squares" || name == "linear") return LossKind::LeastSquares;
  if (name == "logistic" || name == "logistic-l2") return LossKind::LogisticL2;
  if (name == "mlp" || name == "small-mlp") return LossKind::SmallMlp;
  throw ValidationError("unknown loss model '" + std::string(name) + "'");
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& x, double r) {
  Eigen::VectorXd out = x;
  project_ball_inplace(out, r);
  return out;
}

bool project_ball_inplace(Eigen::Ref<Eigen::VectorXd> x, double r) {
  if (!(r > 0.0)) throw ValidationError("ball radius must be positive");
  const double norm = x.norm();
  if (std::isinf(norm) && x.allFinite()) {
    // |x|^2 overflowed; rescale before normalizing
    x /= x.lpNorm<Eigen::Infinity>();
    x *= r / x.norm();
    return true;
  }
  if (norm <= r) return false;
  x *= r / norm;
  return true;
}

LossModel::LossModel(LossKind kind, Dataset data, double radius, double reg, int hidden)
    : kind_(kind), data_(std::move(data)), radius_(radius), reg_(reg), hidden_(hidden) {
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw ValidationError("ball radius must be positive and finite");
  feature_dim_ = checked_feature_dim(data_);
  switch (kind_) {
    case LossKind::LeastSquares:
      dim_ = feature_dim_;
      break;
    case LossKind::LogisticL2:
      if (reg_ < 0.0) throw ValidationError("logistic regularization must be nonnegative");
      for (const auto& s : data_) {
        if (s.label != 1.0 && s.label != -1.0) throw DataError("logistic labels must be -1 or +1");
      }
      dim_ = feature_dim_;
      break;
    case LossKind::SmallMlp:
      if (hidden_ < 1) throw ValidationError("mlp hidden width must be positive");
      dim_ = hidden_ * feature_dim_ + 2 * hidden_ + 1;
      break;
  }
}

LossModel LossModel::least_squares(Dataset data, double radius) {
  return LossModel(LossKind::LeastSquares, std::move(data), radius, 0.0, 0);
}

LossModel LossModel::logistic(Dataset data, double reg, double radius) {
  return LossModel(LossKind::LogisticL2, std::move(data), radius, reg, 0);
}

LossModel LossModel::small_mlp(Dataset data, int hidden, double radius) {
  return LossModel(LossKind::SmallMlp, std::move(data), radius, 0.0, hidden);
}

LossModel LossModel::with_samples(Dataset data) const {
  LossModel out(kind_, std::move(data), radius_, reg_, hidden_);
  if (out.feature_dim_ != feature_dim_) throw DataError("replacement samples have a different feature dimension");
  return out;
}

const Sample& LossModel::at(std::size_t index) const {
  if (index >= data_.size()) {
    throw ValidationError("sample index " + std::to_string(index) + " out of range (" + std::to_string(data_.size()) + ")");
  }
  return data_[index];
}

void LossModel::check_dim(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw ValidationError("parameter has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(dim_));
}

double LossModel::value(const Eigen::VectorXd& x, std::size_t index) const { return value_on(x, at(index)); }

double LossModel::value_on(const Eigen::VectorXd& x, const Sample& s) const {
  check_dim(x);
  if (s.features.size() != feature_dim_) throw DataError("sample has the wrong feature dimension");
  switch (kind_) {
    case LossKind::LeastSquares: {
      const double e = s.features.dot(x) - s.label;
      return e * e;
    }
    case LossKind::LogisticL2:
      return softplus(-s.label * s.features.dot(x)) + 0.5 * reg_ * x.squaredNorm();
    case LossKind::SmallMlp: {
      MlpView p(x, hidden_, feature_dim_);
      Eigen::VectorXd a = (p.w1 * s.features + p.b1).array().tanh();
      const double e = p.w2.dot(a) + p.b2 - s.label;
      return e * e;
    }
  }
  return 0.0;
}

void LossModel::gradient_into(const Eigen::VectorXd& x, const Sample& s, Eigen::Ref<Eigen::VectorXd> out) const {
  switch (kind_) {
    case LossKind::LeastSquares:
      out = (2.0 * (s.features.dot(x) - s.label)) * s.features;
      return;
    case LossKind::LogisticL2: {
      const double coeff = -s.label * sigmoid(-s.label * s.features.dot(x));
      out = coeff * s.features + reg_ * x;
      return;
    }
    case LossKind::SmallMlp: {
      const int h = hidden_;
      const int d = feature_dim_;
      MlpView p(x, h, d);
      Eigen::VectorXd a = (p.w1 * s.features + p.b1).array().tanh();
      const double e2 = 2.0 * (p.w2.dot(a) + p.b2 - s.label);
      Eigen::VectorXd dz = (e2 * p.w2.array() * (1.0 - a.array().square())).matrix();
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dw1(out.data(), h, d);
      dw1.noalias() = dz * s.features.transpose();
      const Eigen::Index off = static_cast<Eigen::Index>(h) * d;
      out.segment(off, h) = dz;
      out.segment(off + h, h) = e2 * a;
      out(off + 2 * h) = e2;
      return;
    }
  }
}

Eigen::VectorXd LossModel::gradient(const Eigen::VectorXd& x, std::size_t index) const {
  check_dim(x);
  Eigen::VectorXd g(dim_);
  gradient_into(x, at(index), g);
  return g;
}

double LossModel::objective(const Eigen::VectorXd& x) const { return mean_value(x, data_); }

Eigen::VectorXd LossModel::full_gradient(const Eigen::VectorXd& x) const {
  check_dim(x);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim_);
  Eigen::VectorXd g(dim_);
  for (const auto& s : data_) {
    gradient_into(x, s, g);
    total += g;
  }
  return total / static_cast<double>(data_.size());
}

double LossModel::mean_value(const Eigen::VectorXd& x, const Dataset& eval) const {
  if (eval.empty()) throw ValidationError("evaluation set is empty");
  double total = 0.0;
  for (const auto& s : eval) total += value_on(x, s);
  return total / static_cast<double>(eval.size());
}

Constants LossModel::constants() const {
  Constants c;
  const double r = radius_;
  switch (kind_) {
    case LossKind::LeastSquares:
      for (const auto& s : data_) {
        const double norm = s.features.norm();
        c.B = std::max(c.B, 2.0 * norm * (norm * r + std::abs(s.label)));
        c.L = std::max(c.L, 2.0 * norm * norm);
      }
      c.nu = 0.0;
      c.certified = true;
      return c;
    case LossKind::LogisticL2: {
      double max_norm = 0.0;
      for (const auto& s : data_) max_norm = std::max(max_norm, std::abs(s.label) * s.features.norm());
      c.B = max_norm + reg_ * r;
      c.L = max_norm * max_norm / 4.0 + reg_;
      c.nu = reg_;
      c.certified = true;
      return c;
    }
    case LossKind::SmallMlp: {
      std::mt19937_64 rng(kConstantsSeed);
      std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Eigen::VectorXd gx(dim_);
      Eigen::VectorXd gy(dim_);
      double max_grad = 0.0;
      double max_ratio = 0.0;
      for (int draw = 0; draw < kConstantsDraws; ++draw) {
        const Sample& s = data_[pick(rng)];
        Eigen::VectorXd x = sample_in_ball(dim_, r, rng);
        Eigen::VectorXd y;
        if (draw % 2 == 0) {
          y = sample_in_ball(dim_, r, rng);
        } else {
          Eigen::VectorXd dir(dim_);
          for (int j = 0; j < dim_; ++j) dir(j) = gauss(rng);
          y = project_ball(x + (1e-3 * r / dir.norm()) * dir, r);
        }
        gradient_into(x, s, gx);
        gradient_into(y, s, gy);
        max_grad = std::max({max_grad, gx.norm(), gy.norm()});
        const double dist = (x - y).norm();
        if (dist > 0.0) max_ratio = std::max(max_ratio, (gx - gy).norm() / dist);
      }
      c.B = kSafetyFactor * max_grad;
      c.L = kSafetyFactor * max_ratio;
      c.nu = 0.0;
      c.certified = false;
      return c;
    }
  }
  return c;
}

std::pair<Dataset, Dataset> make_paired_datasets(const Dataset& data, std::size_t position, const Sample& replacement) {
  if (position >= data.size()) throw ValidationError("perturbed position out of range");
  if (replacement.features.size() != data[position].features.size()) {
    throw DataError("replacement sample has a different feature dimension");
  }
  Dataset perturbed = data;
  perturbed[position] = replacement;
  return {data, std::move(perturbed)};
}

std::vector<std::size_t> differing_positions(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) throw ValidationError("datasets have different sizes");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i])) out.push_back(i);
  return out;
}

Eigen::VectorXd sample_in_ball(int dim, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int j = 0; j < dim; ++j) v(j) = gauss(rng);
    norm = v.norm();
  } while (norm == 0.0);
  const double radius = r * std::pow(unit(rng), 1.0 / dim);
  return v * (radius / norm);
}

}  // namespace dsgd
