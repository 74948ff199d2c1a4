#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dsgd/bounds.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/mixing.hpp"
#include "dsgd/topology.hpp"

namespace dsgd {

/// Strict: S and S' differ in at most one sample (the uniform-stability
/// protocol). Subsets: S' swaps a block of samples for held-out ones, as in
/// the "two overlapping subsets" experiments.
enum class PairingMode { Strict, Subsets };

std::string_view to_string(PairingMode mode);
PairingMode parse_pairing_mode(std::string_view name);

struct StabilityCurve {
  std::vector<std::int64_t> steps;
  std::vector<double> abs_loss_diff;      // |Phi(x^k) - Phi(x_hat^k)|
  std::vector<double> abs_avg_loss_diff;  // same for ave(x^k)
  std::vector<double> param_dist;         // |x^k - x_hat^k|
  /// mean over the evaluation set of |f(x^T; xi) - f(x_hat^T; xi)|.
  double final_pointwise_gap = 0.0;
  double final_avg_pointwise_gap = 0.0;
};

/// Two coupled runs sharing the seed (hence every index draw). Phi is the mean
/// loss over `eval` (the training set of `model_s` when null). In Strict mode
/// the sample lists must differ in at most one position.
StabilityCurve paired_run(const LossModel& model_s, const LossModel& model_s_prime, const MixingMatrix& mm,
                          const RunConfig& config, PairingMode mode = PairingMode::Strict,
                          const Dataset* eval = nullptr);

/// Builds the communication graph and its mixing matrix.
struct NetworkSpec {
  TopologyKind kind = TopologyKind::Complete;
  int m = 10;
  TopologyParams params;
  std::uint64_t seed = 0;
  MixingScheme scheme = MixingScheme::MetropolisHastings;

  MixingMatrix build() const;
};

struct StabilitySetup {
  explicit StabilitySetup(LossModel m) : model(std::move(m)) {}

  /// Model trained on S; its sample list is partitioned across the nodes.
  LossModel model;
  NetworkSpec network;
  /// Replaces `network` when set (custom matrices).
  std::optional<MixingMatrix> mixing;
  /// `run.seed` is the base seed; trial k uses derive_seed(run.seed, k).
  RunConfig run;
  int trials = 1;
  /// Perturbed positions (Strict mode).
  std::vector<std::size_t> positions{0};
  /// Replacement samples for S' and, unless `eval_on_training`, the
  /// evaluation set. Empty means replacements are the original samples.
  Dataset held_out;
  bool eval_on_training = false;
  /// Explicit evaluation set; overrides the held-out/training choice when nonempty.
  Dataset eval_set;
  PairingMode mode = PairingMode::Strict;
  /// Samples swapped per trial in Subsets mode.
  std::size_t subset_differ = 1;
  int threads = 1;
};

struct TrialResult {
  std::size_t position = 0;  // perturbed index (Strict) or 0 (Subsets)
  int trial = 0;
  std::uint64_t seed = 0;
  std::size_t replacement = 0;  // index into held_out, when used
  StabilityCurve curve;
};

struct StabilityReport {
  std::string label;
  std::string topology;
  std::string schedule;
  PairingMode mode = PairingMode::Strict;
  double lambda = 0.0;
  Constants constants;
  std::string eval_set;  // "held-out" or "training"
  std::int64_t steps = 0;
  int m = 0;
  std::int64_t n = 0;
  std::vector<std::size_t> positions;
  std::vector<std::uint64_t> seeds;
  /// Ordered by (position, trial).
  std::vector<TrialResult> trials;

  // Aggregates over all trials and positions, per recorded step.
  std::vector<std::int64_t> recorded_steps;
  std::vector<double> mean_abs_loss_diff;
  std::vector<double> max_abs_loss_diff;
  std::vector<double> mean_abs_avg_loss_diff;
  std::vector<double> mean_param_dist;
  /// Per position: mean over trials of the final pointwise gap.
  std::vector<double> epsilon_by_position;
  /// max over positions of epsilon_by_position; an underestimate of the sup.
  double epsilon = 0.0;

  BoundInputs bound_inputs;
  /// Matched stability bound after each recorded step k (horizon k + 1) and at the end.
  std::vector<double> bound_by_step;
  BoundValue bound;

  /// Rebuilds every aggregate from `trials`.
  void recompute_aggregates();
};

/// Convexity implied by a model (logistic with reg > 0 is strongly convex).
Convexity convexity_of(const LossModel& model);

/// Bound inputs for a run of `model` on `mm` for T steps; B, L from `constants`.
BoundInputs bound_inputs_for(const LossModel& model, const MixingMatrix& mm, const StepSchedule& schedule,
                             std::int64_t T, const Constants& constants);

StabilityReport empirical_stability(const StabilitySetup& setup);

enum class SweepAxis { LearningRate, Topology, Schedule };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

using SweepValue = std::variant<double, TopologyKind, StepSchedule>;

std::string describe(const SweepValue& value);

/// One report per value; every value reuses the same trial seeds. For the
/// learning-rate axis the value replaces the schedule parameter.
std::vector<StabilityReport> stability_sweep(SweepAxis axis, const std::vector<SweepValue>& values,
                                             const StabilitySetup& base);

/// Long format: [key columns,]position,trial,step,abs_loss_diff,abs_avg_loss_diff,param_dist,bound.
/// key_values[r] holds one entry per key column for report r.
void write_stability_csv(std::ostream& out, const std::vector<StabilityReport>& reports,
                         const std::vector<std::string>& key_names = {},
                         const std::vector<std::vector<std::string>>& key_values = {});

}  // namespace dsgd
