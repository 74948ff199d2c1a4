#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "dsgd/cli.hpp"
#include "dsgd/error.hpp"
#include "dsgd/format.hpp"

namespace dsgd::cli {

namespace {

namespace fs = std::filesystem;

class Section {
 public:
  Section(const toml::table* table, std::string name, std::set<std::string> allowed)
      : table_(table), name_(std::move(name)) {
    if (!table_) return;
    for (const auto& [key, node] : *table_) {
      if (!allowed.count(std::string(key.str()))) {
        throw ValidationError("unknown key '" + std::string(key.str()) + "' in [" + name_ + "]");
      }
    }
  }

  const toml::node* node(const std::string& key) const { return table_ ? table_->get(key) : nullptr; }
  bool has(const std::string& key) const { return node(key) != nullptr; }

  void get(const std::string& key, double& out) const {
    if (const auto* n = node(key)) {
      if (n->is_floating_point()) out = n->as_floating_point()->get();
      else if (n->is_integer()) out = static_cast<double>(n->as_integer()->get());
      else fail(key, "a number");
    }
  }
  void get(const std::string& key, std::int64_t& out) const {
    if (const auto* n = node(key)) {
      if (!n->is_integer()) fail(key, "an integer");
      out = n->as_integer()->get();
    }
  }
  void get(const std::string& key, int& out) const {
    std::int64_t v = out;
    get(key, v);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(key, "a 32-bit integer");
    out = static_cast<int>(v);
  }
  void get(const std::string& key, std::uint64_t& out) const {
    if (const auto* n = node(key)) {
      if (!n->is_integer() || n->as_integer()->get() < 0) fail(key, "a nonnegative integer");
      out = static_cast<std::uint64_t>(n->as_integer()->get());
    }
  }
  void get(const std::string& key, bool& out) const {
    if (const auto* n = node(key)) {
      if (!n->is_boolean()) fail(key, "a boolean");
      out = n->as_boolean()->get();
    }
  }
  void get(const std::string& key, std::string& out) const {
    if (const auto* n = node(key)) {
      if (!n->is_string()) fail(key, "a string");
      out = n->as_string()->get();
    }
  }
  const toml::array* array(const std::string& key) const {
    const auto* n = node(key);
    if (!n) return nullptr;
    if (!n->is_array()) fail(key, "an array");
    return n->as_array();
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError("[" + name_ + "] " + key + " must be " + what);
  }

 private:
  const toml::table* table_;
  std::string name_;
};

const toml::table* subtable(const toml::table& root, const std::string& name) {
  const auto* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ValidationError("'" + name + "' must be a table");
  return n->as_table();
}

std::string absolute_path(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  return fs::absolute(p).lexically_normal().string();
}

std::string schedule_key(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Constant: return "alpha";
    case ScheduleKind::InverseT: return "c";
    case ScheduleKind::InverseNuT:
    case ScheduleKind::InverseTwoNuT: return "nu";
  }
  return "param";
}

std::string default_task(LossKind kind) {
  switch (kind) {
    case LossKind::LeastSquares: return "linear";
    case LossKind::LogisticL2: return "logistic";
    case LossKind::SmallMlp: return "mlp";
  }
  return "linear";
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

void validate(ExperimentConfig& c) {
  auto& t = c.topology;
  require(t.m >= 1, "[topology] m must be positive");
  if (t.kind == TopologyKind::Custom) require(!t.edge_list.empty(), "[topology] kind = \"custom\" needs edge_list");
  if (t.kind == TopologyKind::KNng) require(t.params.k >= 1 && t.params.k < t.m, "[topology] k must be in [1, m)");
  if (t.kind == TopologyKind::Random) {
    require(t.params.p > 0.0 && t.params.p <= 1.0, "[topology] p must be in (0, 1]");
    require(t.params.max_retries >= 1, "[topology] max_retries must be positive");
  }
  if (c.mixing.scheme == MixingScheme::Custom) require(!c.mixing.matrix_csv.empty(), "[mixing] scheme = \"custom\" needs matrix_csv");

  auto& d = c.data;
  require(d.source == "synthetic" || d.source == "csv" || d.source == "libsvm",
          "[data] source must be synthetic, csv or libsvm");
  if (d.source != "synthetic") require(!d.path.empty(), "[data] path is required for file sources");
  if (d.task.empty()) d.task = default_task(c.model.kind);
  parse_synthetic_task(d.task);
  if (d.source == "synthetic") {
    require(d.n >= 1 && d.dim >= 1, "[data] n and dim must be positive");
    if (!(d.feature_scale > 0.0)) d.feature_scale = 1.0 / std::sqrt(static_cast<double>(d.dim));
  } else {
    require(d.dim >= 0, "[data] dim must be nonnegative");
  }
  require(d.noise >= 0.0, "[data] noise must be nonnegative");
  require(d.holdout >= 0, "[data] holdout must be nonnegative");

  auto& md = c.model;
  require(md.radius > 0.0 && std::isfinite(md.radius), "[model] radius must be positive");
  require(md.reg >= 0.0, "[model] reg must be nonnegative");
  require(md.hidden >= 1, "[model] hidden must be positive");
  require(md.init == "zero" || md.init == "random", "[model] init must be zero or random");

  c.run.schedule = c.schedule;
  c.run.validate();

  auto& s = c.stability;
  require(s.trials >= 1, "[stability] trials must be positive");
  require(s.num_positions >= 1, "[stability] num_positions must be positive");
  require(s.subset_differ >= 1, "[stability] subset_differ must be positive");
  require(s.eval == "held-out" || s.eval == "training" || s.eval == "full",
          "[stability] eval must be held-out, training or full");

  require(c.sweep.learning_rates.empty() || c.sweep.schedules.empty(),
          "[sweep] learning_rates and schedules cannot both be set");
  for (double lr : c.sweep.learning_rates) require(lr >= 0.0 && std::isfinite(lr), "[sweep] learning rates must be nonnegative");
  for (auto kind : c.sweep.topologies) require(kind != TopologyKind::Custom, "[sweep] custom topologies cannot be swept");
  for (const auto& sch : c.sweep.schedules) {
    RunConfig probe = c.run;
    probe.schedule = sch;
    probe.validate();
  }
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += ch;
    }
  }
  return out + "\"";
}

std::string toml_double(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

StepSchedule parse_schedule(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') {
    throw ValidationError("schedule '" + text + "' must look like kind(param)");
  }
  StepSchedule s;
  s.kind = parse_schedule_kind(text.substr(0, open));
  const std::string arg = text.substr(open + 1, text.size() - open - 2);
  std::size_t used = 0;
  try {
    s.param = std::stod(arg, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != arg.size()) throw ValidationError("bad schedule parameter in '" + text + "'");
  return s;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error: " << e.description() << " at line " << e.source().begin.line;
    throw ValidationError(msg.str());
  }
  for (const auto& [key, node] : root) {
    static const std::set<std::string> sections{"topology", "mixing", "data", "model", "schedule", "run", "stability", "sweep"};
    if (!sections.count(std::string(key.str()))) throw ValidationError("unknown section '" + std::string(key.str()) + "'");
  }

  ExperimentConfig c;
  c.base_dir = base_dir;
  std::string s;

  Section topo(subtable(root, "topology"), "topology", {"kind", "m", "k", "p", "partition", "edge_list", "seed", "max_retries"});
  if (s.clear(), topo.get("kind", s), !s.empty()) c.topology.kind = parse_topology_kind(s);
  topo.get("m", c.topology.m);
  topo.get("k", c.topology.params.k);
  topo.get("p", c.topology.params.p);
  topo.get("max_retries", c.topology.params.max_retries);
  topo.get("seed", c.topology.seed);
  topo.get("edge_list", c.topology.edge_list);
  if (const auto* arr = topo.array("partition")) {
    for (const auto& v : *arr) {
      if (!v.is_integer()) topo.fail("partition", "an array of integers");
      c.topology.params.partition.push_back(static_cast<int>(v.as_integer()->get()));
    }
  }

  Section mix(subtable(root, "mixing"), "mixing", {"scheme", "matrix_csv"});
  if (s.clear(), mix.get("scheme", s), !s.empty()) c.mixing.scheme = parse_mixing_scheme(s);
  mix.get("matrix_csv", c.mixing.matrix_csv);

  Section data(subtable(root, "data"), "data",
               {"source", "path", "dim", "n", "task", "noise", "feature_scale", "seed", "standardize", "holdout", "shuffle",
                "shuffle_seed", "drop_remainder"});
  data.get("source", c.data.source);
  data.get("path", c.data.path);
  data.get("dim", c.data.dim);
  data.get("n", c.data.n);
  data.get("task", c.data.task);
  data.get("noise", c.data.noise);
  data.get("feature_scale", c.data.feature_scale);
  data.get("seed", c.data.seed);
  data.get("standardize", c.data.standardize);
  data.get("holdout", c.data.holdout);
  data.get("shuffle", c.data.shuffle);
  c.data.shuffle_seed = c.data.seed;
  data.get("shuffle_seed", c.data.shuffle_seed);
  data.get("drop_remainder", c.data.drop_remainder);
  if (c.data.source != "synthetic" && !data.has("dim")) c.data.dim = 0;

  Section model(subtable(root, "model"), "model", {"kind", "reg", "hidden", "radius", "init", "init_seed"});
  if (s.clear(), model.get("kind", s), !s.empty()) c.model.kind = parse_loss_kind(s);
  model.get("reg", c.model.reg);
  model.get("hidden", c.model.hidden);
  model.get("radius", c.model.radius);
  model.get("init", c.model.init);
  model.get("init_seed", c.model.init_seed);
  if (c.model.kind != LossKind::LogisticL2) c.model.reg = 0.0;

  Section sched(subtable(root, "schedule"), "schedule", {"kind", "alpha", "c", "nu"});
  if (s.clear(), sched.get("kind", s), !s.empty()) c.schedule.kind = parse_schedule_kind(s);
  const std::string param_key = schedule_key(c.schedule.kind);
  for (const char* key : {"alpha", "c", "nu"}) {
    if (key != param_key && sched.has(key)) {
      throw ValidationError(std::string("[schedule] '") + key + "' does not apply to " + std::string(to_string(c.schedule.kind)));
    }
  }
  switch (c.schedule.kind) {
    case ScheduleKind::Constant: c.schedule.param = 0.01; break;
    case ScheduleKind::InverseT: c.schedule.param = 1.0; break;
    default: c.schedule.param = c.model.reg; break;
  }
  sched.get(param_key, c.schedule.param);
  if (param_key == "nu" && !(c.schedule.param > 0.0)) {
    throw ValidationError("[schedule] nu must be positive (defaults to [model] reg)");
  }

  Section run(subtable(root, "run"), "run", {"steps", "seed", "record_every"});
  run.get("steps", c.run.steps);
  run.get("seed", c.run.seed);
  run.get("record_every", c.run.record_every);

  Section stab(subtable(root, "stability"), "stability",
               {"trials", "positions", "num_positions", "mode", "subset_differ", "eval"});
  stab.get("trials", c.stability.trials);
  stab.get("num_positions", c.stability.num_positions);
  if (const auto* arr = stab.array("positions")) {
    for (const auto& v : *arr) {
      if (!v.is_integer() || v.as_integer()->get() < 0) stab.fail("positions", "an array of nonnegative integers");
      c.stability.positions.push_back(static_cast<std::size_t>(v.as_integer()->get()));
    }
    if (c.stability.positions.empty()) stab.fail("positions", "nonempty");
  }
  if (s.clear(), stab.get("mode", s), !s.empty()) c.stability.mode = parse_pairing_mode(s);
  stab.get("subset_differ", c.stability.subset_differ);
  stab.get("eval", c.stability.eval);

  Section sweep(subtable(root, "sweep"), "sweep", {"learning_rates", "topologies", "schedules"});
  if (const auto* arr = sweep.array("learning_rates")) {
    for (const auto& v : *arr) {
      if (v.is_floating_point()) c.sweep.learning_rates.push_back(v.as_floating_point()->get());
      else if (v.is_integer()) c.sweep.learning_rates.push_back(static_cast<double>(v.as_integer()->get()));
      else sweep.fail("learning_rates", "an array of numbers");
    }
  }
  if (const auto* arr = sweep.array("topologies")) {
    for (const auto& v : *arr) {
      if (!v.is_string()) sweep.fail("topologies", "an array of strings");
      c.sweep.topologies.push_back(parse_topology_kind(v.as_string()->get()));
    }
  }
  if (const auto* arr = sweep.array("schedules")) {
    for (const auto& v : *arr) {
      if (!v.is_string()) sweep.fail("schedules", "an array of strings like \"constant(0.01)\"");
      c.sweep.schedules.push_back(parse_schedule(v.as_string()->get()));
    }
  }

  c.topology.edge_list = absolute_path(c.topology.edge_list, base_dir);
  c.mixing.matrix_csv = absolute_path(c.mixing.matrix_csv, base_dir);
  c.data.path = absolute_path(c.data.path, base_dir);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const fs::path parent = fs::absolute(fs::path(path)).parent_path();
  return parse_config(text.str(), parent.string());
}

std::string resolved_config_toml(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[topology]\n";
  o << "kind = " << quote(std::string(to_string(c.topology.kind))) << "\n";
  o << "m = " << c.topology.m << "\n";
  o << "k = " << c.topology.params.k << "\n";
  o << "p = " << toml_double(c.topology.params.p) << "\n";
  o << "partition = [";
  for (std::size_t i = 0; i < c.topology.params.partition.size(); ++i) o << (i ? ", " : "") << c.topology.params.partition[i];
  o << "]\n";
  o << "edge_list = " << quote(c.topology.edge_list) << "\n";
  o << "seed = " << c.topology.seed << "\n";
  o << "max_retries = " << c.topology.params.max_retries << "\n";

  o << "\n[mixing]\n";
  o << "scheme = " << quote(std::string(to_string(c.mixing.scheme))) << "\n";
  o << "matrix_csv = " << quote(c.mixing.matrix_csv) << "\n";

  o << "\n[data]\n";
  o << "source = " << quote(c.data.source) << "\n";
  o << "path = " << quote(c.data.path) << "\n";
  o << "dim = " << c.data.dim << "\n";
  o << "n = " << c.data.n << "\n";
  o << "task = " << quote(c.data.task) << "\n";
  o << "noise = " << toml_double(c.data.noise) << "\n";
  o << "feature_scale = " << toml_double(c.data.feature_scale) << "\n";
  o << "seed = " << c.data.seed << "\n";
  o << "standardize = " << (c.data.standardize ? "true" : "false") << "\n";
  o << "holdout = " << c.data.holdout << "\n";
  o << "shuffle = " << (c.data.shuffle ? "true" : "false") << "\n";
  o << "shuffle_seed = " << c.data.shuffle_seed << "\n";
  o << "drop_remainder = " << (c.data.drop_remainder ? "true" : "false") << "\n";

  o << "\n[model]\n";
  o << "kind = " << quote(std::string(to_string(c.model.kind))) << "\n";
  o << "reg = " << toml_double(c.model.reg) << "\n";
  o << "hidden = " << c.model.hidden << "\n";
  o << "radius = " << toml_double(c.model.radius) << "\n";
  o << "init = " << quote(c.model.init) << "\n";
  o << "init_seed = " << c.model.init_seed << "\n";

  o << "\n[schedule]\n";
  o << "kind = " << quote(std::string(to_string(c.schedule.kind))) << "\n";
  o << schedule_key(c.schedule.kind) << " = " << toml_double(c.schedule.param) << "\n";

  o << "\n[run]\n";
  o << "steps = " << c.run.steps << "\n";
  o << "seed = " << c.run.seed << "\n";
  o << "record_every = " << c.run.record_every << "\n";

  o << "\n[stability]\n";
  o << "trials = " << c.stability.trials << "\n";
  if (!c.stability.positions.empty()) {
    o << "positions = [";
    for (std::size_t i = 0; i < c.stability.positions.size(); ++i) o << (i ? ", " : "") << c.stability.positions[i];
    o << "]\n";
  }
  o << "num_positions = " << c.stability.num_positions << "\n";
  o << "mode = " << quote(std::string(to_string(c.stability.mode))) << "\n";
  o << "subset_differ = " << c.stability.subset_differ << "\n";
  o << "eval = " << quote(c.stability.eval) << "\n";

  o << "\n[sweep]\n";
  o << "learning_rates = [";
  for (std::size_t i = 0; i < c.sweep.learning_rates.size(); ++i) o << (i ? ", " : "") << toml_double(c.sweep.learning_rates[i]);
  o << "]\n";
  o << "topologies = [";
  for (std::size_t i = 0; i < c.sweep.topologies.size(); ++i) o << (i ? ", " : "") << quote(std::string(to_string(c.sweep.topologies[i])));
  o << "]\n";
  o << "schedules = [";
  for (std::size_t i = 0; i < c.sweep.schedules.size(); ++i) o << (i ? ", " : "") << quote(c.sweep.schedules[i].describe());
  o << "]\n";
  return o.str();
}

}  // namespace dsgd::cli
