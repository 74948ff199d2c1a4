#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "dsgd/bounds.hpp"
#include "dsgd/cli.hpp"
#include "dsgd/error.hpp"
#include "dsgd/format.hpp"

namespace dsgd::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct GlobalOptions {
  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> record_every;
  int threads = 1;
};

struct Network {
  std::optional<Graph> graph;
  MixingMatrix mixing;
};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json bound_json(const BoundValue& b) {
  json j;
  j["bound_name"] = b.name;
  j["variant"] = b.variant;
  j["value"] = number(b.value);
  json terms = json::object();
  for (const auto& t : b.terms) terms[t.name] = number(t.value);
  j["terms"] = terms;
  if (!b.extras.empty()) {
    json extras = json::object();
    for (const auto& t : b.extras) extras[t.name] = number(t.value);
    j["extras"] = extras;
  }
  j["applicable"] = b.applicable;
  j["warnings"] = b.warnings;
  return j;
}

json inputs_json(const BoundInputs& in) {
  json j;
  j["B"] = number(in.B);
  j["L"] = number(in.L);
  j["nu"] = number(in.nu);
  j["lambda"] = number(in.lambda);
  j["m"] = in.m;
  j["n"] = in.n;
  j["T"] = in.T;
  j["r"] = number(in.r);
  j["schedule"] = in.schedule.describe();
  j["c"] = number(in.c);
  j["x0_dist"] = number(in.initial_distance());
  j["loss_sup"] = in.loss_sup ? number(*in.loss_sup) : json(nullptr);
  j["convexity"] = std::string(to_string(in.convexity));
  j["certified"] = in.certified;
  return j;
}

json constants_json(const Constants& c) {
  return json{{"B", number(c.B)}, {"L", number(c.L)}, {"nu", number(c.nu)}, {"certified", c.certified}};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

fs::path prepare_out_dir(const GlobalOptions& g) {
  fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + g.out_dir + "': " + ec.message());
  return dir;
}

ExperimentConfig config_from(const GlobalOptions& g) {
  ExperimentConfig c = g.config.empty() ? parse_config("") : load_config(g.config);
  if (g.seed) c.run.seed = *g.seed;
  if (g.record_every) {
    c.run.record_every = *g.record_every;
    c.run.validate();
  }
  return c;
}

Network make_network(const ExperimentConfig& c) {
  if (c.mixing.scheme == MixingScheme::Custom) return {std::nullopt, load_mixing_csv(c.mixing.matrix_csv)};
  Graph g = c.topology.kind == TopologyKind::Custom ? load_edge_list(c.topology.edge_list)
                                                    : build_graph(c.topology.kind, c.topology.m, c.topology.params, c.topology.seed);
  if (g.size() != c.topology.m) {
    throw ValidationError("edge list has " + std::to_string(g.size()) + " nodes but [topology] m = " +
                          std::to_string(c.topology.m));
  }
  MixingMatrix mm = build_mixing(g, c.mixing.scheme);
  return {std::move(g), std::move(mm)};
}

json network_json(const ExperimentConfig& c, const Network& net) {
  json j;
  j["kind"] = net.graph ? std::string(to_string(net.graph->kind())) : "custom-matrix";
  j["m"] = net.mixing.size();
  j["edges"] = net.mixing.support().size();
  j["scheme"] = std::string(to_string(net.mixing.scheme()));
  j["lambda"] = number(net.mixing.lambda());
  if (net.graph && net.graph->kind() == TopologyKind::Random) {
    j["seed"] = c.topology.seed;
    j["attempts"] = net.graph->attempts();
  }
  return j;
}

json data_json(const LoadedData& d) {
  json j;
  j["source_samples"] = d.source_size;
  j["train_samples"] = d.train.size();
  j["held_out_samples"] = d.held_out.size();
  j["dropped_samples"] = d.dropped;
  j["feature_dim"] = d.train.empty() ? 0 : d.train.front().features.size();
  if (d.standardization) {
    j["standardization"] = json{{"mean", vector_json(d.standardization->mean)},
                                {"stddev", vector_json(d.standardization->stddev)}};
  } else {
    j["standardization"] = nullptr;
  }
  return j;
}

std::optional<Eigen::VectorXd> initial_point(const ExperimentConfig& c, const LossModel& model) {
  if (c.model.init == "zero") return std::nullopt;
  std::mt19937_64 rng(c.model.init_seed);
  return sample_in_ball(model.dim(), model.radius(), rng);
}

int cmd_run(const GlobalOptions& g) {
  ExperimentConfig c = config_from(g);
  const Network net = make_network(c);
  LoadedData data = load_dataset(c, net.mixing.size());
  const LossModel model = build_model(c, data.train);
  const Constants constants = model.constants();

  RunConfig cfg = c.run;
  cfg.schedule = c.schedule;
  cfg.record_loss = true;
  cfg.x0 = initial_point(c, model);
  const Trajectory traj = run(model, net.mixing, cfg);

  std::ostringstream csv;
  csv << "step,loss,consensus_dev,avg_iterate_norm,projection_events\n";
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    csv << traj.steps[k] << ',' << format_double(traj.loss[k]) << ',' << format_double(traj.consensus_dev[k]) << ','
        << format_double(traj.averaged[k].norm()) << ',' << traj.projection_events[k] << '\n';
  }

  json meta;
  meta["command"] = "run";
  meta["lambda"] = number(net.mixing.lambda());
  meta["constants"] = constants_json(constants);
  meta["projection_events"] = traj.total_projection_events;
  meta["steps"] = cfg.steps;
  meta["seed"] = cfg.seed;
  meta["schedule"] = cfg.schedule.describe();
  meta["model"] = std::string(to_string(model.kind()));
  meta["dim"] = model.dim();
  meta["n_per_node"] = local_sample_count(model, net.mixing.size());
  meta["final_loss"] = number(model.objective(traj.final_average));
  meta["final_consensus_dev"] = traj.consensus_dev.empty() ? json(nullptr) : number(traj.consensus_dev.back());
  meta["network"] = network_json(c, net);
  meta["data"] = data_json(data);

  const fs::path dir = prepare_out_dir(g);
  write_file(dir / "trajectory.csv", csv.str());
  write_file(dir / "resolved_config.toml", resolved_config_toml(c));
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
  return 0;
}

std::vector<std::size_t> resolve_positions(const ExperimentConfig& c, std::size_t shard_size) {
  if (!c.stability.positions.empty()) return c.stability.positions;
  const auto k = static_cast<std::size_t>(c.stability.num_positions);
  if (k > shard_size) throw ValidationError("[stability] num_positions exceeds the samples held by node 0");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < k; ++j) out.push_back(j * shard_size / k);
  return out;
}

int cmd_stability(const GlobalOptions& g, bool require_sweep) {
  ExperimentConfig c = config_from(g);
  if (require_sweep && c.sweep.empty()) throw ValidationError("sweep needs a nonempty [sweep] section");
  const Network net = make_network(c);
  LoadedData data = load_dataset(c, net.mixing.size());

  StabilitySetup setup(build_model(c, data.train));
  setup.network.kind = c.topology.kind;
  setup.network.m = c.topology.m;
  setup.network.params = c.topology.params;
  setup.network.seed = c.topology.seed;
  setup.network.scheme = c.mixing.scheme;
  if (c.mixing.scheme == MixingScheme::Custom || c.topology.kind == TopologyKind::Custom) setup.mixing = net.mixing;
  setup.run = c.run;
  setup.run.schedule = c.schedule;
  setup.run.x0 = initial_point(c, setup.model);
  setup.trials = c.stability.trials;
  setup.positions = resolve_positions(c, local_sample_count(setup.model, net.mixing.size()));
  setup.held_out = data.held_out;
  setup.eval_on_training = c.stability.eval == "training";
  if (c.stability.eval == "full") {
    setup.eval_set = data.train;
    setup.eval_set.insert(setup.eval_set.end(), data.held_out.begin(), data.held_out.end());
  }
  setup.mode = c.stability.mode;
  setup.subset_differ = c.stability.subset_differ;
  setup.threads = g.threads;
  if (!c.sweep.topologies.empty() && c.mixing.scheme == MixingScheme::Custom) {
    throw ValidationError("a topology sweep cannot use a custom mixing matrix");
  }

  std::vector<std::string> key_names;
  if (!c.sweep.topologies.empty()) key_names.push_back("topology");
  if (!c.sweep.learning_rates.empty()) key_names.push_back("learning_rate");
  if (!c.sweep.schedules.empty()) key_names.push_back("schedule");

  std::vector<std::optional<TopologyKind>> outer;
  if (c.sweep.topologies.empty()) outer.push_back(std::nullopt);
  for (auto kind : c.sweep.topologies) outer.emplace_back(kind);

  std::vector<StabilityReport> reports;
  std::vector<std::vector<std::string>> key_values;
  for (const auto& topo : outer) {
    StabilitySetup base = setup;
    std::vector<std::string> prefix;
    if (topo) {
      base.network.kind = *topo;
      base.mixing.reset();
      prefix.emplace_back(to_string(*topo));
    }
    std::vector<StabilityReport> batch;
    if (!c.sweep.learning_rates.empty()) {
      std::vector<SweepValue> values(c.sweep.learning_rates.begin(), c.sweep.learning_rates.end());
      batch = stability_sweep(SweepAxis::LearningRate, values, base);
    } else if (!c.sweep.schedules.empty()) {
      std::vector<SweepValue> values(c.sweep.schedules.begin(), c.sweep.schedules.end());
      batch = stability_sweep(SweepAxis::Schedule, values, base);
    } else {
      batch.push_back(empirical_stability(base));
      if (topo) batch.back().label = prefix.front();
    }
    for (auto& report : batch) {
      std::vector<std::string> keys = prefix;
      if (!c.sweep.learning_rates.empty() || !c.sweep.schedules.empty()) keys.push_back(report.label);
      key_values.push_back(std::move(keys));
      reports.push_back(std::move(report));
    }
  }

  std::ostringstream csv;
  write_stability_csv(csv, reports, key_names, key_values);

  json summary;
  summary["command"] = require_sweep ? "sweep" : "stability";
  summary["model"] = std::string(to_string(setup.model.kind()));
  summary["mode"] = std::string(to_string(setup.mode));
  summary["trials"] = setup.trials;
  summary["steps"] = setup.run.steps;
  summary["base_seed"] = setup.run.seed;
  summary["data"] = data_json(data);
  summary["key_columns"] = key_names;
  json items = json::array();
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& rep = reports[r];
    json j;
    json keys = json::object();
    for (std::size_t k = 0; k < key_names.size(); ++k) keys[key_names[k]] = key_values[r][k];
    j["keys"] = keys;
    j["topology"] = rep.topology;
    j["schedule"] = rep.schedule;
    j["lambda"] = number(rep.lambda);
    j["eval_set"] = c.stability.eval == "full" ? std::string("full") : rep.eval_set;
    j["m"] = rep.m;
    j["n_per_node"] = rep.n;
    j["positions"] = rep.positions;
    j["seeds"] = rep.seeds;
    j["constants"] = constants_json(rep.constants);
    j["epsilon"] = number(rep.epsilon);
    json eps = json::array();
    for (double e : rep.epsilon_by_position) eps.push_back(number(e));
    j["epsilon_by_position"] = eps;
    if (!rep.recorded_steps.empty()) {
      j["final"] = json{{"step", rep.recorded_steps.back()},
                        {"mean_abs_loss_diff", number(rep.mean_abs_loss_diff.back())},
                        {"max_abs_loss_diff", number(rep.max_abs_loss_diff.back())},
                        {"mean_abs_avg_loss_diff", number(rep.mean_abs_avg_loss_diff.back())},
                        {"mean_param_dist", number(rep.mean_param_dist.back())}};
    }
    j["bound_inputs"] = inputs_json(rep.bound_inputs);
    j["bound"] = bound_json(rep.bound);
    items.push_back(std::move(j));
  }
  summary["reports"] = items;

  const fs::path dir = prepare_out_dir(g);
  write_file(dir / "stability.csv", csv.str());
  write_file(dir / "stability_summary.json", summary.dump(2) + "\n");
  write_file(dir / "resolved_config.toml", resolved_config_toml(c));
  return 0;
}

template <class T>
T json_get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("bounds parameter '") + key + "' has the wrong type");
  }
}

BoundInputs bound_inputs_from_json(const json& j) {
  static const std::set<std::string> allowed{"B", "L", "nu", "lambda", "lambda_grid", "m", "n", "T", "r", "schedule",
                                             "c", "x0_dist", "loss_sup", "convexity", "certified"};
  if (!j.is_object()) throw ValidationError("bounds parameters must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ValidationError("unknown bounds parameter '" + key + "'");
  BoundInputs in;
  in.B = json_get(j, "B", in.B);
  in.L = json_get(j, "L", in.L);
  in.nu = json_get(j, "nu", in.nu);
  in.lambda = json_get(j, "lambda", in.lambda);
  in.m = json_get(j, "m", in.m);
  in.n = json_get(j, "n", in.n);
  in.T = json_get(j, "T", in.T);
  in.r = json_get(j, "r", in.r);
  in.c = json_get(j, "c", in.c);
  in.certified = json_get(j, "certified", in.certified);
  if (j.contains("x0_dist")) in.x0_dist = json_get(j, "x0_dist", 0.0);
  if (j.contains("loss_sup")) in.loss_sup = json_get(j, "loss_sup", 0.0);
  if (j.contains("convexity")) in.convexity = parse_convexity(json_get<std::string>(j, "convexity", ""));
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    if (s.is_string()) {
      in.schedule = parse_schedule(s.get<std::string>());
    } else if (s.is_object()) {
      in.schedule.kind = parse_schedule_kind(json_get<std::string>(s, "kind", "constant"));
      in.schedule.param = json_get(s, "param", in.schedule.param);
    } else {
      throw ValidationError("bounds parameter 'schedule' must be a string or an object");
    }
  }
  return in;
}

json report_json(const BoundReport& report) {
  json a = json::array();
  for (const auto& b : report.bounds) a.push_back(bound_json(b));
  return a;
}

int cmd_bounds(const GlobalOptions& g, const std::string& params_path, std::ostream& out) {
  const std::string path = params_path.empty() ? g.config : params_path;
  if (path.empty()) throw ValidationError("bounds needs a parameter file (positional or --config)");
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open bounds parameters '" + path + "'");
  json params;
  try {
    params = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed bounds parameters: ") + e.what());
  }
  const BoundInputs base = bound_inputs_from_json(params);

  json result;
  result["inputs"] = inputs_json(base);
  if (params.contains("lambda_grid")) {
    std::vector<double> grid;
    try {
      grid = params.at("lambda_grid").get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ValidationError("lambda_grid must be an array of numbers");
    }
    json rows = json::array();
    for (double lam : grid) {
      BoundInputs at = base;
      at.lambda = lam;
      rows.push_back(json{{"lambda", lam}, {"bounds", report_json(evaluate_all(at))}});
    }
    result["grid"] = rows;
  } else {
    result["bounds"] = report_json(evaluate_all(base));
  }
  const std::string text = result.dump(2) + "\n";
  out << text;
  if (!g.out_dir.empty()) write_file(prepare_out_dir(g) / "bounds.json", text);
  return 0;
}

json validation_json(const MixingMatrix& mm, const ValidationReport& report, const std::string& label) {
  json j;
  j["label"] = label;
  j["m"] = mm.size();
  j["scheme"] = std::string(to_string(mm.scheme()));
  j["lambda"] = number(mm.lambda());
  j["ok"] = report.ok();
  json clauses = json::array();
  for (const auto& c : report.clauses) clauses.push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["clauses"] = clauses;
  double worst = -std::numeric_limits<double>::infinity();
  int worst_k = 0;
  for (const auto& d : report.decay) {
    if (d.norm - d.bound > worst) {
      worst = d.norm - d.bound;
      worst_k = d.k;
    }
  }
  j["decay"] = json{{"max_power", report.decay.size()},
                    {"pass", report.decay_pass},
                    {"worst_k", worst_k},
                    {"worst_excess", report.decay.empty() ? json(nullptr) : number(worst)}};
  return j;
}

int cmd_validate_mixing(const GlobalOptions& g, const std::string& matrix, bool all_builtin, int max_power,
                        std::ostream& out) {
  ExperimentConfig c = config_from(g);
  std::vector<std::pair<std::string, MixingMatrix>> items;
  if (!matrix.empty()) {
    items.emplace_back(matrix, MixingMatrix::unchecked(
                                   [&] {
                                     std::ifstream in(matrix);
                                     if (!in) throw DataError("cannot open matrix '" + matrix + "'");
                                     return read_matrix_csv(in);
                                   }()));
  } else if (all_builtin) {
    for (auto kind : kBuiltinTopologies) {
      for (auto scheme : {MixingScheme::MetropolisHastings, MixingScheme::MaxDegree}) {
        Graph graph = build_graph(kind, c.topology.m, c.topology.params, c.topology.seed);
        items.emplace_back(std::string(to_string(kind)) + "/" + std::string(to_string(scheme)), build_mixing(graph, scheme));
      }
    }
  } else if (c.mixing.scheme == MixingScheme::Custom) {
    std::ifstream in(c.mixing.matrix_csv);
    if (!in) throw DataError("cannot open matrix '" + c.mixing.matrix_csv + "'");
    items.emplace_back(c.mixing.matrix_csv, MixingMatrix::unchecked(read_matrix_csv(in)));
  } else {
    Network net = make_network(c);
    items.emplace_back(std::string(to_string(c.topology.kind)) + "/" + std::string(to_string(c.mixing.scheme)),
                       std::move(net.mixing));
  }

  json reports = json::array();
  bool ok = true;
  for (const auto& [label, mm] : items) {
    const ValidationReport report = validate_mixing(mm, max_power);
    ok = ok && report.ok();
    out << (report.ok() ? "ok   " : "FAIL ") << label << " m=" << mm.size() << " lambda=" << format_double(mm.lambda());
    for (const auto& clause : report.clauses)
      if (!clause.pass) out << " [" << clause.name << ": " << clause.detail << "]";
    if (!report.decay_pass) out << " [decay]";
    out << '\n';
    reports.push_back(validation_json(mm, report, label));
  }
  json result{{"ok", ok}, {"reports", reports}};
  write_file(prepare_out_dir(g) / "mixing_report.json", result.dump(2) + "\n");
  return ok ? 0 : 2;
}

int cmd_gen_data(const GlobalOptions& g) {
  ExperimentConfig c = config_from(g);
  LoadedData data = load_dataset(c, 1);
  const fs::path dir = prepare_out_dir(g);
  std::ostringstream train;
  write_csv_dataset(train, data.train);
  write_file(dir / "data.csv", train.str());
  if (!data.held_out.empty()) {
    std::ostringstream held;
    write_csv_dataset(held, data.held_out);
    write_file(dir / "heldout.csv", held.str());
  }
  write_file(dir / "resolved_config.toml", resolved_config_toml(c));
  return 0;
}

}  // namespace

LoadedData load_dataset(const ExperimentConfig& config, int nodes) {
  const DataSection& d = config.data;
  if (nodes < 1) throw ValidationError("node count must be positive");
  Dataset all;
  if (d.source == "synthetic") {
    SyntheticSpec spec;
    spec.n = d.n + d.holdout;
    spec.dim = d.dim;
    spec.task = parse_synthetic_task(d.task);
    spec.noise = d.noise;
    spec.feature_scale = d.feature_scale;
    spec.seed = d.seed;
    all = generate_synthetic(spec);
  } else if (d.source == "csv") {
    all = load_csv_dataset(d.path);
  } else {
    all = load_libsvm_dataset(d.path, d.dim);
  }
  LoadedData out;
  out.source_size = all.size();
  if (d.shuffle) {
    std::mt19937_64 rng(d.shuffle_seed);
    std::shuffle(all.begin(), all.end(), rng);
  }
  const auto holdout = static_cast<std::size_t>(d.holdout);
  if (holdout >= all.size()) throw DataError("holdout leaves no training samples");
  out.held_out.assign(all.end() - static_cast<std::ptrdiff_t>(holdout), all.end());
  all.resize(all.size() - holdout);
  const std::size_t remainder = all.size() % static_cast<std::size_t>(nodes);
  if (remainder != 0) {
    if (!d.drop_remainder) {
      throw ValidationError(std::to_string(all.size()) + " training samples do not split evenly over " +
                            std::to_string(nodes) + " nodes");
    }
    out.dropped = remainder;
    all.resize(all.size() - remainder);
    if (all.empty()) throw DataError("fewer training samples than nodes");
  }
  out.train = std::move(all);
  if (d.standardize) {
    out.standardization = standardize(out.train);
    if (!out.held_out.empty()) apply_standardization(out.held_out, *out.standardization);
  }
  return out;
}

LossModel build_model(const ExperimentConfig& config, Dataset train) {
  switch (config.model.kind) {
    case LossKind::LeastSquares: return LossModel::least_squares(std::move(train), config.model.radius);
    case LossKind::LogisticL2: return LossModel::logistic(std::move(train), config.model.reg, config.model.radius);
    case LossKind::SmallMlp: return LossModel::small_mlp(std::move(train), config.model.hidden, config.model.radius);
  }
  throw ValidationError("unknown model kind");
}

MixingMatrix build_network(const ExperimentConfig& config) { return make_network(config).mixing; }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized SGD simulator and stability experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "TOML experiment config (JSON parameters for bounds)");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Override [run] seed");
  app.add_option("--threads", g.threads, "Worker threads for independent trials")->check(CLI::PositiveNumber);
  app.add_option("--record-every", g.record_every, "Override [run] record_every");

  auto* run_cmd = app.add_subcommand("run", "Run D-SGD and write the trajectory");
  auto* stab_cmd = app.add_subcommand("stability", "Paired-run stability experiment (sweeps if [sweep] is set)");
  auto* sweep_cmd = app.add_subcommand("sweep", "Stability sweep over the [sweep] grid");
  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate every closed-form bound from JSON parameters");
  std::string params_path;
  bounds_cmd->add_option("params", params_path, "JSON parameter file");
  auto* mix_cmd = app.add_subcommand("validate-mixing", "Check a mixing matrix against every clause");
  std::string matrix;
  bool all_builtin = false;
  int max_power = 50;
  mix_cmd->add_option("--matrix", matrix, "CSV matrix to check instead of the configured network");
  mix_cmd->add_flag("--all", all_builtin, "Check every built-in topology with both schemes");
  mix_cmd->add_option("--max-power", max_power, "Largest k in the decay check")->capture_default_str();
  auto* gen_cmd = app.add_subcommand("gen-data", "Write the configured dataset as CSV");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) {
      app.name(rev.back());
      rev.pop_back();
    }
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return cmd_run(g);
    if (*stab_cmd) return cmd_stability(g, false);
    if (*sweep_cmd) return cmd_stability(g, true);
    if (*bounds_cmd) return cmd_bounds(g, params_path, out);
    if (*mix_cmd) return cmd_validate_mixing(g, matrix, all_builtin, max_power, out);
    if (*gen_cmd) return cmd_gen_data(g);
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ConstructionError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dsgd::cli
