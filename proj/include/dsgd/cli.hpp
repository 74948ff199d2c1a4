#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dsgd/dataset.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/mixing.hpp"
#include "dsgd/stability.hpp"
#include "dsgd/topology.hpp"

namespace dsgd::cli {

enum class ExperimentKind { Run, Stability, Sweep, Bounds, ValidateMixing, GenData };

struct TopologySection {
  TopologyKind kind = TopologyKind::Complete;
  int m = 10;
  TopologyParams params;
  std::string edge_list;  // custom graphs
  std::uint64_t seed = 0;
};

struct MixingSection {
  MixingScheme scheme = MixingScheme::MetropolisHastings;
  std::string matrix_csv;  // custom matrices
};

struct DataSection {
  std::string source = "synthetic";  // synthetic | csv | libsvm
  std::string path;
  int dim = 14;  // synthetic dimension; libsvm dimension (0 = auto)
  int n = 200;   // synthetic training samples
  std::string task;  // synthetic label model; defaults from the model kind
  double noise = 0.1;
  double feature_scale = 0.0;
  std::uint64_t seed = 1;
  bool standardize = false;
  /// Samples reserved for replacement/evaluation. Synthetic data generates
  /// them on top of `n`; file data takes them from the end.
  int holdout = 0;
  bool shuffle = false;
  std::uint64_t shuffle_seed = 0;
  /// Drop trailing training samples so every node holds the same count.
  bool drop_remainder = true;
};

struct ModelSection {
  LossKind kind = LossKind::LeastSquares;
  double reg = 1e-4;
  int hidden = 8;
  double radius = 10.0;
  std::string init = "zero";  // zero | random
  std::uint64_t init_seed = 0;
};

struct StabilitySection {
  int trials = 1;
  /// Empty: num_positions evenly spaced indices inside node 0's shard.
  std::vector<std::size_t> positions;
  int num_positions = 5;
  PairingMode mode = PairingMode::Strict;
  std::size_t subset_differ = 1;
  /// held-out | training | full (training plus held-out)
  std::string eval = "held-out";
};

struct SweepSection {
  std::vector<double> learning_rates;
  std::vector<TopologyKind> topologies;
  std::vector<StepSchedule> schedules;
  bool empty() const { return learning_rates.empty() && topologies.empty() && schedules.empty(); }
};

struct ExperimentConfig {
  TopologySection topology;
  MixingSection mixing;
  DataSection data;
  ModelSection model;
  StepSchedule schedule = StepSchedule::constant(0.01);
  RunConfig run;
  StabilitySection stability;
  SweepSection sweep;
  /// Directory relative paths in the file are resolved against.
  std::string base_dir = ".";
};

/// Parses and validates a TOML config. Unknown keys, wrong types and
/// out-of-range values throw ValidationError. Paths become absolute.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
/// TOML with every field (defaults included) spelled out; parse_config of
/// the result yields the same config.
std::string resolved_config_toml(const ExperimentConfig& config);

/// "constant(0.01)", "inverse-t(2)", ...; the inverse of StepSchedule::describe.
StepSchedule parse_schedule(const std::string& text);

struct LoadedData {
  Dataset train;
  Dataset held_out;
  std::optional<Standardization> standardization;
  std::size_t source_size = 0;
  std::size_t dropped = 0;
};

/// Reads or generates the data and splits off the held-out block. With
/// drop_remainder the training set is truncated to a multiple of `nodes`.
LoadedData load_dataset(const ExperimentConfig& config, int nodes);
LossModel build_model(const ExperimentConfig& config, Dataset train);
MixingMatrix build_network(const ExperimentConfig& config);

/// Full command line (argv[0] first). Returns the process exit code:
/// 0 success, 2 config error, 3 data error, 4 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsgd::cli
