#include "dsgd/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "dsgd/error.hpp"
#include "dsgd/format.hpp"
#include "dsgd/parallel.hpp"
#include "dsgd/rng.hpp"

namespace dsgd {

namespace {

constexpr std::uint64_t kReplacementStream = 0x7265706c61636521ULL;
constexpr std::uint64_t kSubsetStream = 0x7375627365747321ULL;

double pointwise_gap(const LossModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Dataset& eval) {
  double total = 0.0;
  for (const auto& s : eval) total += std::abs(model.value_on(x, s) - model.value_on(y, s));
  return total / static_cast<double>(eval.size());
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

std::string_view to_string(PairingMode mode) { return mode == PairingMode::Strict ? "strict" : "subsets"; }

PairingMode parse_pairing_mode(std::string_view name) {
  if (name == "strict") return PairingMode::Strict;
  if (name == "subsets") return PairingMode::Subsets;
  throw ValidationError("unknown pairing mode '" + std::string(name) + "'");
}

StabilityCurve paired_run(const LossModel& model_s, const LossModel& model_s_prime, const MixingMatrix& mm,
                          const RunConfig& config, PairingMode mode, const Dataset* eval) {
  if (model_s.size() != model_s_prime.size()) throw ValidationError("paired datasets must have equal size");
  if (mode == PairingMode::Strict) {
    const auto diff = differing_positions(model_s.samples(), model_s_prime.samples());
    if (diff.size() > 1) {
      throw ValidationError("strict pairing needs datasets differing in at most one sample, got " +
                            std::to_string(diff.size()));
    }
  }
  const Dataset& eval_set = eval ? *eval : model_s.samples();
  if (eval_set.empty()) throw ValidationError("evaluation set is empty");

  RunConfig cfg = config;
  cfg.record_loss = false;
  cfg.keep_index_log = false;
  cfg.track_nodes = false;
  const Trajectory a = run(model_s, mm, cfg);
  const Trajectory b = run(model_s_prime, mm, cfg);

  StabilityCurve curve;
  curve.steps = a.steps;
  const std::size_t records = a.steps.size();
  curve.abs_loss_diff.reserve(records);
  curve.abs_avg_loss_diff.reserve(records);
  curve.param_dist.reserve(records);
  for (std::size_t k = 0; k < records; ++k) {
    const double fa = model_s.mean_value(a.averaged[k], eval_set);
    const double fb = model_s.mean_value(b.averaged[k], eval_set);
    const double ga = model_s.mean_value(a.running_average[k], eval_set);
    const double gb = model_s.mean_value(b.running_average[k], eval_set);
    curve.abs_loss_diff.push_back(std::abs(fa - fb));
    curve.abs_avg_loss_diff.push_back(std::abs(ga - gb));
    curve.param_dist.push_back((a.averaged[k] - b.averaged[k]).norm());
  }
  curve.final_pointwise_gap = pointwise_gap(model_s, a.final_average, b.final_average, eval_set);
  curve.final_avg_pointwise_gap = pointwise_gap(model_s, a.final_running_average, b.final_running_average, eval_set);
  return curve;
}

MixingMatrix NetworkSpec::build() const { return build_mixing(build_graph(kind, m, params, seed), scheme); }

Convexity convexity_of(const LossModel& model) {
  switch (model.kind()) {
    case LossKind::LeastSquares: return Convexity::Convex;
    case LossKind::LogisticL2: return model.reg() > 0.0 ? Convexity::StronglyConvex : Convexity::Convex;
    case LossKind::SmallMlp: return Convexity::Nonconvex;
  }
  return Convexity::Nonconvex;
}

BoundInputs bound_inputs_for(const LossModel& model, const MixingMatrix& mm, const StepSchedule& schedule,
                             std::int64_t T, const Constants& constants) {
  BoundInputs in;
  in.B = constants.B;
  in.L = constants.L;
  in.nu = constants.nu;
  in.certified = constants.certified;
  in.lambda = mm.lambda();
  in.m = mm.size();
  in.n = static_cast<std::int64_t>(local_sample_count(model, mm.size()));
  in.T = T;
  in.r = model.radius();
  in.schedule = schedule;
  in.convexity = convexity_of(model);
  // Smallest c with alpha_t <= c/(t+1) over the horizon.
  switch (schedule.kind) {
    case ScheduleKind::Constant: in.c = schedule.param * static_cast<double>(T); break;
    case ScheduleKind::InverseT: in.c = schedule.param; break;
    case ScheduleKind::InverseNuT: in.c = 1.0 / schedule.param; break;
    case ScheduleKind::InverseTwoNuT: in.c = 1.0 / (2.0 * schedule.param); break;
  }
  if (!(in.c > 0.0)) in.c = 1e-12;
  return in;
}

void StabilityReport::recompute_aggregates() {
  recorded_steps.clear();
  mean_abs_loss_diff.clear();
  max_abs_loss_diff.clear();
  mean_abs_avg_loss_diff.clear();
  mean_param_dist.clear();
  epsilon_by_position.clear();
  epsilon = 0.0;
  if (trials.empty()) return;

  recorded_steps = trials.front().curve.steps;
  const std::size_t records = recorded_steps.size();
  mean_abs_loss_diff.assign(records, 0.0);
  max_abs_loss_diff.assign(records, 0.0);
  mean_abs_avg_loss_diff.assign(records, 0.0);
  mean_param_dist.assign(records, 0.0);
  for (const auto& t : trials) {
    for (std::size_t k = 0; k < records; ++k) {
      mean_abs_loss_diff[k] += t.curve.abs_loss_diff[k];
      max_abs_loss_diff[k] = std::max(max_abs_loss_diff[k], t.curve.abs_loss_diff[k]);
      mean_abs_avg_loss_diff[k] += t.curve.abs_avg_loss_diff[k];
      mean_param_dist[k] += t.curve.param_dist[k];
    }
  }
  const double count = static_cast<double>(trials.size());
  for (std::size_t k = 0; k < records; ++k) {
    mean_abs_loss_diff[k] /= count;
    mean_abs_avg_loss_diff[k] /= count;
    mean_param_dist[k] /= count;
  }

  std::vector<std::size_t> order = positions;
  if (order.empty()) order.push_back(0);
  for (std::size_t p : order) {
    double sum = 0.0;
    int n_trials = 0;
    for (const auto& t : trials) {
      if (t.position == p) {
        sum += t.curve.final_pointwise_gap;
        ++n_trials;
      }
    }
    epsilon_by_position.push_back(n_trials > 0 ? sum / n_trials : 0.0);
  }
  epsilon = *std::max_element(epsilon_by_position.begin(), epsilon_by_position.end());
}

StabilityReport empirical_stability(const StabilitySetup& setup) {
  if (setup.trials < 1) throw ValidationError("trials must be >= 1");
  if (setup.mode == PairingMode::Strict && setup.positions.empty()) throw ValidationError("positions must be nonempty");
  setup.run.validate();

  const MixingMatrix mm = setup.mixing ? *setup.mixing : setup.network.build();
  const LossModel& model = setup.model;
  const Dataset& train = model.samples();
  const std::size_t n_local = local_sample_count(model, mm.size());
  for (std::size_t p : setup.positions) {
    if (p >= train.size()) throw ValidationError("perturbed position " + std::to_string(p) + " out of range");
  }
  if (setup.mode == PairingMode::Subsets) {
    if (setup.subset_differ < 1 || setup.subset_differ > train.size()) throw ValidationError("subset_differ out of range");
    if (setup.held_out.size() < setup.subset_differ) {
      throw ValidationError("subsets mode needs at least subset_differ held-out samples");
    }
  }

  const bool held_out_eval = !setup.held_out.empty() && !setup.eval_on_training;
  const Dataset& eval = !setup.eval_set.empty() ? setup.eval_set : held_out_eval ? setup.held_out : train;

  StabilityReport report;
  report.topology = setup.mixing ? "custom" : std::string(to_string(setup.network.kind));
  report.schedule = setup.run.schedule.describe();
  report.mode = setup.mode;
  report.lambda = mm.lambda();
  report.eval_set = !setup.eval_set.empty() ? "custom" : held_out_eval ? "held-out" : "training";
  report.steps = setup.run.steps;
  report.m = mm.size();
  report.n = static_cast<std::int64_t>(n_local);
  report.positions = setup.mode == PairingMode::Strict ? setup.positions : std::vector<std::size_t>{0};
  for (int k = 0; k < setup.trials; ++k) report.seeds.push_back(derive_seed(setup.run.seed, static_cast<std::uint64_t>(k)));
  // Constants over every sample either run or the evaluation can touch.
  Dataset reach = concat(train, setup.held_out);
  if (!setup.eval_set.empty()) reach = concat(reach, setup.eval_set);
  report.constants = reach.size() == train.size() ? model.constants() : model.with_samples(std::move(reach)).constants();

  const std::size_t jobs = report.positions.size() * static_cast<std::size_t>(setup.trials);
  report.trials.resize(jobs);
  parallel_for(jobs, setup.threads, [&](std::size_t job) {
    const std::size_t pi = job / static_cast<std::size_t>(setup.trials);
    const int k = static_cast<int>(job % static_cast<std::size_t>(setup.trials));
    TrialResult& result = report.trials[job];
    result.position = report.positions[pi];
    result.trial = k;
    result.seed = report.seeds[static_cast<std::size_t>(k)];

    Dataset perturbed;
    if (setup.mode == PairingMode::Strict) {
      if (setup.held_out.empty()) {
        perturbed = train;
      } else {
        result.replacement = static_cast<std::size_t>(
            derive_seed(setup.run.seed ^ kReplacementStream, job) % setup.held_out.size());
        perturbed = make_paired_datasets(train, result.position, setup.held_out[result.replacement]).second;
      }
    } else {
      std::mt19937_64 rng(derive_seed(result.seed, kSubsetStream));
      std::vector<std::size_t> slots(train.size());
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      std::shuffle(slots.begin(), slots.end(), rng);
      std::vector<std::size_t> donors(setup.held_out.size());
      std::iota(donors.begin(), donors.end(), std::size_t{0});
      std::shuffle(donors.begin(), donors.end(), rng);
      perturbed = train;
      for (std::size_t j = 0; j < setup.subset_differ; ++j) perturbed[slots[j]] = setup.held_out[donors[j]];
    }

    RunConfig cfg = setup.run;
    cfg.seed = result.seed;
    result.curve = paired_run(model, model.with_samples(std::move(perturbed)), mm, cfg, setup.mode, &eval);
  });

  report.recompute_aggregates();
  // k recorded updates from x^0 are the T - 1 = k updates the theorems count.
  report.bound_inputs = bound_inputs_for(model, mm, setup.run.schedule, setup.run.steps + 1, report.constants);
  report.bound = matched_stability_bound(report.bound_inputs);
  std::vector<std::int64_t> horizons = report.recorded_steps;
  for (auto& h : horizons) ++h;
  report.bound_by_step = matched_stability_series(report.bound_inputs, horizons);
  return report;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::LearningRate: return "learning-rate";
    case SweepAxis::Topology: return "topology";
    case SweepAxis::Schedule: return "schedule";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto axis : {SweepAxis::LearningRate, SweepAxis::Topology, SweepAxis::Schedule})
    if (to_string(axis) == name) return axis;
  throw ValidationError("unknown sweep axis '" + std::string(name) + "'");
}

std::string describe(const SweepValue& value) {
  if (const auto* v = std::get_if<double>(&value)) return format_double(*v);
  if (const auto* v = std::get_if<TopologyKind>(&value)) return std::string(to_string(*v));
  return std::get<StepSchedule>(value).describe();
}

std::vector<StabilityReport> stability_sweep(SweepAxis axis, const std::vector<SweepValue>& values,
                                             const StabilitySetup& base) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  std::vector<StabilityReport> reports;
  reports.reserve(values.size());
  for (const auto& value : values) {
    StabilitySetup setup = base;
    switch (axis) {
      case SweepAxis::LearningRate:
        setup.run.schedule.param = std::get<double>(value);
        break;
      case SweepAxis::Topology:
        setup.network.kind = std::get<TopologyKind>(value);
        setup.mixing.reset();
        break;
      case SweepAxis::Schedule:
        setup.run.schedule = std::get<StepSchedule>(value);
        break;
    }
    reports.push_back(empirical_stability(setup));
    reports.back().label = describe(value);
  }
  return reports;
}

void write_stability_csv(std::ostream& out, const std::vector<StabilityReport>& reports,
                         const std::vector<std::string>& key_names,
                         const std::vector<std::vector<std::string>>& key_values) {
  if (!key_names.empty() && key_values.size() != reports.size()) throw ValidationError("one key row per report");
  for (const auto& row : key_values)
    if (row.size() != key_names.size()) throw ValidationError("key row width does not match key columns");
  for (const auto& name : key_names) out << name << ',';
  out << "position,trial,step,abs_loss_diff,abs_avg_loss_diff,param_dist,bound\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& report = reports[r];
    std::string prefix;
    if (!key_names.empty())
      for (const auto& v : key_values[r]) prefix += v + ',';
    for (const auto& t : report.trials) {
      for (std::size_t k = 0; k < t.curve.steps.size(); ++k) {
        out << prefix << t.position << ',' << t.trial << ',' << t.curve.steps[k] << ','
            << format_double(t.curve.abs_loss_diff[k]) << ',' << format_double(t.curve.abs_avg_loss_diff[k]) << ','
            << format_double(t.curve.param_dist[k]) << ',' << format_double(report.bound_by_step[k]) << '\n';
      }
    }
  }
}

}  // namespace dsgd
