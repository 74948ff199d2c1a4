#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsgd/losses.hpp"
#include "dsgd/mixing.hpp"

namespace dsgd {

using NodeState = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ScheduleKind { Constant, InverseT, InverseNuT, InverseTwoNuT };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

/// Step sizes alpha_t for t = 0, 1, ...:
///   Constant(a)       a
///   InverseT(c)       c / (t + 1)
///   InverseNuT(nu)    1 / (nu (t + 1))
///   InverseTwoNuT(nu) 1 / (2 nu (t + 1))
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double param = 0.0;

  static StepSchedule constant(double alpha) { return {ScheduleKind::Constant, alpha}; }
  static StepSchedule inverse_t(double c) { return {ScheduleKind::InverseT, c}; }
  static StepSchedule inverse_nu_t(double nu) { return {ScheduleKind::InverseNuT, nu}; }
  static StepSchedule inverse_two_nu_t(double nu) { return {ScheduleKind::InverseTwoNuT, nu}; }

  double alpha(std::int64_t t) const;
  /// Largest step over t in [0, steps); the first step for decaying schedules.
  double max_alpha(std::int64_t steps) const;
  std::string describe() const;
};

struct RunConfig {
  StepSchedule schedule = StepSchedule::constant(0.01);
  std::int64_t steps = 1000;
  std::uint64_t seed = 0;
  std::int64_t record_every = 1;
  /// Keep per-node iterates at every recorded step.
  bool track_nodes = false;
  /// Evaluate f(x_bar) over the training set at recorded steps.
  bool record_loss = true;
  /// Keep the global sample index drawn by every node at every step.
  bool keep_index_log = false;
  /// Shared starting point; zero when unset.
  std::optional<Eigen::VectorXd> x0;

  void validate() const;
};

/// Passed to the per-step observer after every step.
struct StepView {
  std::int64_t step;  // iterates now hold x^{step}
  const NodeState& nodes;
  const Eigen::VectorXd& average;
  double consensus_dev;
  double alpha_used;  // alpha_{step-1}
};

using StepObserver = std::function<void(const StepView&)>;

struct Trajectory {
  std::vector<std::int64_t> steps;
  std::vector<double> loss;
  std::vector<double> consensus_dev;
  std::vector<Eigen::VectorXd> averaged;         // x_bar^t
  std::vector<Eigen::VectorXd> running_average;  // ave(x^t)
  std::vector<std::int64_t> projection_events;   // cumulative
  std::vector<NodeState> node_states;            // when track_nodes
  /// index_log[t][i] = global sample index used by node i at step t.
  std::vector<std::vector<std::size_t>> index_log;

  Eigen::VectorXd final_average;
  Eigen::VectorXd final_running_average;
  std::int64_t total_projection_events = 0;
};

/// Node i owns samples [i*n, (i+1)*n) where n = N / m.
std::size_t local_sample_count(const LossModel& model, int nodes);

/// Global sample index used by `node` at `step`; depends only on the seed,
/// step, node and shard size.
std::size_t drawn_sample(std::uint64_t seed, std::int64_t step, int node, std::size_t local_n);

/// x_tilde = W X (row i is node i's neighbourhood average).
NodeState mix(const MixingMatrix& mm, const NodeState& nodes);

/// One iteration: mix, then x^{t+1}(i) = Proj_V(x_tilde(i) - alpha grad f(x^t(i); xi_{j_t(i)})).
/// The gradient is taken at the pre-mixing iterate. Returns the number of
/// nodes whose update hit the projection.
int dsgd_step(const NodeState& nodes, const MixingMatrix& mm, const LossModel& model, double alpha, std::int64_t step,
              std::uint64_t seed, NodeState& next, std::vector<std::size_t>* drawn = nullptr);

/// [sum_i |x(i) - x_bar|^2]^{1/2}
double consensus_deviation(const NodeState& nodes);

/// Incremental sum_t alpha_t x^t / sum_t alpha_t. With zero total weight the
/// most recent point is returned.
class WeightedAverage {
 public:
  explicit WeightedAverage(int dim) : sum_(Eigen::VectorXd::Zero(dim)), last_(Eigen::VectorXd::Zero(dim)) {}
  void add(double weight, const Eigen::VectorXd& x);
  Eigen::VectorXd value() const;
  double total_weight() const noexcept { return weight_; }
  std::int64_t count() const noexcept { return count_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd last_;
  double weight_ = 0.0;
  std::int64_t count_ = 0;
};

/// Runs T steps from x^0(i) = x0 for all i.
Trajectory run(const LossModel& model, const MixingMatrix& mm, const RunConfig& config,
               const StepObserver& observer = {});

/// ave(x^T) from a trajectory recorded at every step (record_every = 1):
/// sum_{t=1}^{T-1} alpha_t x_bar^t / sum_{t=1}^{T-1} alpha_t. Needs T >= 2.
Eigen::VectorXd average_iterate(const Trajectory& trajectory, const StepSchedule& schedule);

/// sum_{j=0}^{t-1} alpha_j lambda^{t-1-j}, the consensus-bound weight at step t.
double geometric_step_sum(const StepSchedule& schedule, double lambda, std::int64_t t);

}  // namespace dsgd
