#include "dsgd/engine.hpp"

#include <cmath>

#include "dsgd/error.hpp"
#include "dsgd/format.hpp"
#include "dsgd/rng.hpp"

namespace dsgd {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::InverseT: return "inverse-t";
    case ScheduleKind::InverseNuT: return "inverse-nu-t";
    case ScheduleKind::InverseTwoNuT: return "inverse-two-nu-t";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  for (auto kind : {ScheduleKind::Constant, ScheduleKind::InverseT, ScheduleKind::InverseNuT, ScheduleKind::InverseTwoNuT}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown step schedule '" + std::string(name) + "'");
}

double StepSchedule::alpha(std::int64_t t) const {
  const double tp1 = static_cast<double>(t) + 1.0;
  switch (kind) {
    case ScheduleKind::Constant: return param;
    case ScheduleKind::InverseT: return param / tp1;
    case ScheduleKind::InverseNuT: return 1.0 / (param * tp1);
    case ScheduleKind::InverseTwoNuT: return 1.0 / (2.0 * param * tp1);
  }
  return 0.0;
}

double StepSchedule::max_alpha(std::int64_t) const { return alpha(0); }

std::string StepSchedule::describe() const { return std::string(to_string(kind)) + "(" + format_double(param) + ")"; }

void RunConfig::validate() const {
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  if (!std::isfinite(schedule.param)) throw ValidationError("schedule parameter must be finite");
  switch (schedule.kind) {
    case ScheduleKind::Constant:
      if (schedule.param < 0.0) throw ValidationError("constant step must be nonnegative");
      break;
    case ScheduleKind::InverseT:
      if (schedule.param < 0.0) throw ValidationError("inverse-t constant must be nonnegative");
      break;
    case ScheduleKind::InverseNuT:
    case ScheduleKind::InverseTwoNuT:
      if (!(schedule.param > 0.0)) throw ValidationError("nu-based schedules need nu > 0");
      break;
  }
}

std::size_t local_sample_count(const LossModel& model, int nodes) {
  if (nodes < 1) throw ValidationError("need at least one node");
  if (model.size() % static_cast<std::size_t>(nodes) != 0) {
    throw ValidationError("dataset size " + std::to_string(model.size()) + " is not divisible by m=" + std::to_string(nodes));
  }
  return model.size() / static_cast<std::size_t>(nodes);
}

std::size_t drawn_sample(std::uint64_t seed, std::int64_t step, int node, std::size_t local_n) {
  return static_cast<std::size_t>(node) * local_n +
         sample_index(seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(node), local_n);
}

NodeState mix(const MixingMatrix& mm, const NodeState& nodes) {
  NodeState out(nodes.rows(), nodes.cols());
  out.noalias() = mm.weights() * nodes;
  return out;
}

int dsgd_step(const NodeState& nodes, const MixingMatrix& mm, const LossModel& model, double alpha, std::int64_t step,
              std::uint64_t seed, NodeState& next, std::vector<std::size_t>* drawn) {
  const int m = static_cast<int>(nodes.rows());
  if (mm.size() != m) throw ValidationError("mixing matrix size does not match node count");
  if (nodes.cols() != model.dim()) throw ValidationError("node state dimension does not match the model");
  const std::size_t local_n = local_sample_count(model, m);

  next.resize(m, nodes.cols());
  next.noalias() = mm.weights() * nodes;

  Eigen::VectorXd x(model.dim());
  Eigen::VectorXd grad(model.dim());
  if (drawn) drawn->resize(static_cast<std::size_t>(m));
  int projected = 0;
  for (int i = 0; i < m; ++i) {
    const std::size_t index = drawn_sample(seed, step, i, local_n);
    if (drawn) (*drawn)[static_cast<std::size_t>(i)] = index;
    x = nodes.row(i).transpose();
    model.gradient_into(x, model.samples()[index], grad);
    x = next.row(i).transpose() - alpha * grad;
    if (project_ball_inplace(x, model.radius())) ++projected;
    next.row(i) = x.transpose();
  }
  return projected;
}

double consensus_deviation(const NodeState& nodes) {
  if (nodes.rows() == 0) return 0.0;
  const Eigen::RowVectorXd mean = nodes.colwise().mean();
  return std::sqrt((nodes.rowwise() - mean).squaredNorm());
}

void WeightedAverage::add(double weight, const Eigen::VectorXd& x) {
  sum_ += weight * x;
  weight_ += weight;
  last_ = x;
  ++count_;
}

Eigen::VectorXd WeightedAverage::value() const {
  if (weight_ > 0.0) return sum_ / weight_;
  return last_;
}

Trajectory run(const LossModel& model, const MixingMatrix& mm, const RunConfig& config, const StepObserver& observer) {
  config.validate();
  const int m = mm.size();
  const int d = model.dim();
  local_sample_count(model, m);

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
  if (config.x0) {
    if (config.x0->size() != d) throw ValidationError("x0 has the wrong dimension");
    x0 = *config.x0;
  }

  NodeState nodes(m, d);
  for (int i = 0; i < m; ++i) nodes.row(i) = x0.transpose();
  NodeState next(m, d);

  Trajectory traj;
  const auto records = static_cast<std::size_t>(config.steps / config.record_every);
  traj.steps.reserve(records);
  WeightedAverage running(d);
  std::vector<std::size_t> drawn;
  Eigen::VectorXd average(d);

  for (std::int64_t t = 0; t < config.steps; ++t) {
    const double alpha = config.schedule.alpha(t);
    traj.total_projection_events +=
        dsgd_step(nodes, mm, model, alpha, t, config.seed, next, config.keep_index_log ? &drawn : nullptr);
    nodes.swap(next);
    if (config.keep_index_log) traj.index_log.push_back(drawn);

    const std::int64_t k = t + 1;
    if (!nodes.allFinite()) throw NumericError("non-finite iterate", k);
    average = nodes.colwise().mean().transpose();
    const double dev = consensus_deviation(nodes);

    if (observer) observer(StepView{k, nodes, average, dev, alpha});

    if (k % config.record_every == 0) {
      traj.steps.push_back(k);
      traj.consensus_dev.push_back(dev);
      traj.averaged.push_back(average);
      traj.running_average.push_back(running.count() > 0 ? running.value() : average);
      traj.projection_events.push_back(traj.total_projection_events);
      if (config.record_loss) {
        const double loss = model.objective(average);
        if (!std::isfinite(loss)) throw NumericError("non-finite loss", k);
        traj.loss.push_back(loss);
      }
      if (config.track_nodes) traj.node_states.push_back(nodes);
    }
    // ave(x^T) weights x^t by alpha_t for t = 1..T-1.
    if (k < config.steps) running.add(config.schedule.alpha(k), average);
  }
  traj.final_average = average;
  traj.final_running_average = running.count() > 0 ? running.value() : average;
  return traj;
}

Eigen::VectorXd average_iterate(const Trajectory& trajectory, const StepSchedule& schedule) {
  const auto T = static_cast<std::int64_t>(trajectory.averaged.size());
  if (T < 2) throw ValidationError("average_iterate needs T >= 2");
  for (std::int64_t t = 0; t < T; ++t) {
    if (trajectory.steps[static_cast<std::size_t>(t)] != t + 1) {
      throw ValidationError("average_iterate needs a trajectory recorded at every step");
    }
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(trajectory.averaged.front().size());
  double weight = 0.0;
  for (std::int64_t t = 1; t <= T - 1; ++t) {
    const double a = schedule.alpha(t);
    sum += a * trajectory.averaged[static_cast<std::size_t>(t - 1)];
    weight += a;
  }
  if (weight == 0.0) return trajectory.averaged[static_cast<std::size_t>(T - 2)];
  return sum / weight;
}

double geometric_step_sum(const StepSchedule& schedule, double lambda, std::int64_t t) {
  double s = 0.0;
  for (std::int64_t j = 0; j < t; ++j) s = lambda * s + schedule.alpha(j);
  return s;
}

}  // namespace dsgd
