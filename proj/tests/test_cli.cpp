#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "dsgd/bounds.hpp"
#include "dsgd/cli.hpp"
#include "dsgd/error.hpp"

using namespace dsgd;
using namespace dsgd::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Sandbox {
  fs::path root;
  Sandbox() {
    root = fs::temp_directory_path() / ("dsgd_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }
  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = root / name;
    std::ofstream(p) << text;
    return p;
  }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "dsgd");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

const char* kRunConfig = R"(
[topology]
kind = "cycle"
m = 4

[data]
n = 40
dim = 3
seed = 5

[model]
kind = "least-squares"
radius = 5.0

[schedule]
kind = "constant"
alpha = 0.05

[run]
steps = 100
seed = 3
record_every = 10
)";

const char* kStabilityConfig = R"(
[topology]
kind = "complete"
m = 4

[data]
n = 40
dim = 3
seed = 5
holdout = 8

[model]
kind = "logistic"
reg = 0.01
radius = 5.0

[schedule]
kind = "constant"
alpha = 0.1

[run]
steps = 50
seed = 2
record_every = 5

[stability]
trials = 3
positions = [0, 4]

[sweep]
learning_rates = [0.05, 0.1]
topologies = ["cycle", "star"]
)";

}  // namespace

TEST_CASE("run writes a trajectory at the recording cadence") {
  Sandbox box;
  const auto cfg = box.write("run.toml", kRunConfig);
  const auto out = box.root / "out";
  const Result r = invoke({"--config", cfg.string(), "--out-dir", out.string(), "run"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = lines(slurp(out / "trajectory.csv"));
  REQUIRE(rows.size() == 11);
  CHECK(rows[0] == "step,loss,consensus_dev,avg_iterate_norm,projection_events");
  CHECK(rows[1].rfind("10,", 0) == 0);
  CHECK(rows[10].rfind("100,", 0) == 0);

  const json meta = json::parse(slurp(out / "metadata.json"));
  CHECK(meta["steps"] == 100);
  CHECK(meta["network"]["kind"] == "cycle");
  CHECK(meta["lambda"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(meta["data"]["train_samples"] == 40);
  CHECK(meta["n_per_node"] == 10);

  const Result again = invoke({"--config", cfg.string(), "--out-dir", (box.root / "again").string(), "run"});
  REQUIRE(again.code == 0);
  CHECK(slurp(out / "trajectory.csv") == slurp(box.root / "again" / "trajectory.csv"));
  CHECK(slurp(out / "metadata.json") == slurp(box.root / "again" / "metadata.json"));

  const Result every = invoke({"--config", cfg.string(), "--out-dir", (box.root / "e").string(), "--record-every", "25", "run"});
  REQUIRE(every.code == 0);
  CHECK(lines(slurp(box.root / "e" / "trajectory.csv")).size() == 5);
}

TEST_CASE("the resolved config reproduces the run") {
  Sandbox box;
  const auto cfg = box.write("run.toml", kRunConfig);
  REQUIRE(invoke({"--config", cfg.string(), "--out-dir", (box.root / "a").string(), "--seed", "11", "run"}).code == 0);
  const fs::path resolved = box.root / "a" / "resolved_config.toml";
  REQUIRE(invoke({"--config", resolved.string(), "--out-dir", (box.root / "b").string(), "run"}).code == 0);
  CHECK(slurp(box.root / "a" / "trajectory.csv") == slurp(box.root / "b" / "trajectory.csv"));
  CHECK(slurp(resolved) == slurp(box.root / "b" / "resolved_config.toml"));

  const ExperimentConfig c = load_config(resolved.string());
  CHECK(c.run.seed == 11);
  CHECK(c.topology.kind == TopologyKind::Cycle);
  CHECK(c.schedule.param == 0.05);
  CHECK(resolved_config_toml(parse_config(resolved_config_toml(c))) == resolved_config_toml(c));
}

TEST_CASE("config errors exit with 2") {
  Sandbox box;
  const auto unknown = box.write("bad.toml", "[run]\nsteps = 10\nspeed = 3\n");
  Result r = invoke({"--config", unknown.string(), "--out-dir", (box.root / "o").string(), "run"});
  CHECK(r.code == 2);
  CHECK(r.err.find("speed") != std::string::npos);

  const auto typed = box.write("typed.toml", "[run]\nsteps = \"many\"\n");
  CHECK(invoke({"--config", typed.string(), "run"}).code == 2);
  const auto section = box.write("section.toml", "[optimizer]\nlr = 1\n");
  CHECK(invoke({"--config", section.string(), "run"}).code == 2);
  const auto negative = box.write("neg.toml", "[stability]\ntrials = 0\n");
  CHECK(invoke({"--config", negative.string(), "stability"}).code == 2);
  const auto wrong_param = box.write("wp.toml", "[schedule]\nkind = \"constant\"\nnu = 0.1\n");
  CHECK(invoke({"--config", wrong_param.string(), "run"}).code == 2);
  CHECK(invoke({"--config", (box.root / "missing.toml").string(), "run"}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({}).code == 2);
  const auto no_sweep = box.write("ns.toml", kRunConfig);
  CHECK(invoke({"--config", no_sweep.string(), "--out-dir", (box.root / "ns").string(), "sweep"}).code == 2);

  CHECK_THROWS_AS(parse_config("[topology]\nkind = \"torus\"\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[sweep]\nlearning_rates = [0.1]\nschedules = [\"constant(0.1)\"]\n"), ValidationError);
  CHECK_THROWS_AS(parse_schedule("constant"), ValidationError);
  CHECK_THROWS_AS(parse_schedule("constant(x)"), ValidationError);
  CHECK(parse_schedule("inverse-t(2)").param == 2.0);
}

TEST_CASE("data errors exit with 3") {
  Sandbox box;
  const auto ragged = box.write("ragged.csv", "x0,x1,y\n1,2,3\n4,5\n");
  const auto cfg = box.write("c.toml", "[topology]\nm = 2\n[data]\nsource = \"csv\"\npath = \"ragged.csv\"\n");
  Result r = invoke({"--config", cfg.string(), "--out-dir", (box.root / "o").string(), "run"});
  CHECK(r.code == 3);
  CHECK(r.err.find("data error") != std::string::npos);
  const auto missing = box.write("m.toml", "[data]\nsource = \"csv\"\npath = \"nowhere.csv\"\n");
  CHECK(invoke({"--config", missing.string(), "run"}).code == 3);
  const auto too_few = box.write("few.toml", "[topology]\nm = 4\n[data]\nn = 3\n");
  CHECK(invoke({"--config", too_few.string(), "run"}).code == 3);
}

TEST_CASE("numeric blow-up exits with 4") {
  Sandbox box;
  const auto cfg = box.write("blow.toml",
                             "[topology]\nm = 2\n[data]\nn = 10\ndim = 2\n[model]\nradius = 1e300\n"
                             "[schedule]\nalpha = 1e100\n[run]\nsteps = 50\n");
  const Result r = invoke({"--config", cfg.string(), "--out-dir", (box.root / "o").string(), "run"});
  CHECK(r.code == 4);
  CHECK(r.err.find("numeric") != std::string::npos);
}

TEST_CASE("csv and libsvm loading") {
  Sandbox box;
  box.write("d.csv", "a,b,y\n1,0,1\n0,1,-1\n1,1,1\n0,0,-1\n2,1,1\n1,2,-1\n");
  box.write("d.svm", "1 1:1\n-1 2:1\n1 1:1 2:1\n-1\n1 1:2 2:1\n-1 1:1 2:2 3:0.5\n");
  const auto csv_cfg = box.write("csv.toml",
                                 "[topology]\nm = 2\n[data]\nsource = \"csv\"\npath = \"d.csv\"\nholdout = 1\n"
                                 "[model]\nkind = \"logistic\"\n");
  LoadedData d = load_dataset(load_config(csv_cfg.string()), 2);
  CHECK(d.source_size == 6);
  CHECK(d.held_out.size() == 1);
  CHECK(d.train.size() == 4);
  CHECK(d.dropped == 1);
  CHECK(d.held_out[0].label == -1.0);

  const auto svm_cfg = box.write("svm.toml",
                                 "[topology]\nm = 3\n[data]\nsource = \"libsvm\"\npath = \"d.svm\"\nstandardize = true\n");
  d = load_dataset(load_config(svm_cfg.string()), 3);
  CHECK(d.train.size() == 6);
  CHECK(d.train[0].features.size() == 3);
  REQUIRE(d.standardization);
  double mean0 = 0.0;
  for (const auto& s : d.train) mean0 += s.features(0);
  CHECK(std::abs(mean0) < 1e-12);

  const auto strict = box.write("strict.toml",
                                "[topology]\nm = 4\n[data]\nsource = \"csv\"\npath = \"d.csv\"\ndrop_remainder = false\n");
  CHECK_THROWS_AS(load_dataset(load_config(strict.string()), 4), ValidationError);
  CHECK(invoke({"--config", svm_cfg.string(), "--out-dir", (box.root / "o").string(), "run"}).code == 0);
}

TEST_CASE("stability with identical datasets reports zeros") {
  Sandbox box;
  const auto cfg = box.write("s.toml",
                             "[topology]\nkind = \"cycle\"\nm = 4\n[data]\nn = 40\ndim = 3\n"
                             "[run]\nsteps = 30\nrecord_every = 10\n[stability]\ntrials = 2\npositions = [1]\n");
  REQUIRE(invoke({"--config", cfg.string(), "--out-dir", (box.root / "o").string(), "stability"}).code == 0);
  const auto rows = lines(slurp(box.root / "o" / "stability.csv"));
  REQUIRE(rows.size() == 1 + 2 * 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> cells;
    std::stringstream ss(rows[i]);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    CHECK(cells[3] == "0");
    CHECK(cells[4] == "0");
    CHECK(cells[5] == "0");
  }
}

TEST_CASE("sweep output and its bound column") {
  Sandbox box;
  const auto cfg = box.write("sweep.toml", kStabilityConfig);
  const fs::path out = box.root / "o";
  const Result r = invoke({"--config", cfg.string(), "--out-dir", out.string(), "sweep"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = lines(slurp(out / "stability.csv"));
  CHECK(rows[0] == "topology,learning_rate,position,trial,step,abs_loss_diff,abs_avg_loss_diff,param_dist,bound");
  CHECK(rows.size() == 1 + 2 * 2 * 2 * 3 * 10);
  CHECK(rows[1].rfind("cycle,0.05,0,0,5,", 0) == 0);

  const json summary = json::parse(slurp(out / "stability_summary.json"));
  REQUIRE(summary["reports"].size() == 4);
  for (const auto& rep : summary["reports"]) {
    const auto& in_json = rep["bound_inputs"];
    BoundInputs in;
    in.B = in_json["B"];
    in.L = in_json["L"];
    in.nu = in_json["nu"];
    in.lambda = in_json["lambda"];
    in.m = in_json["m"];
    in.n = in_json["n"];
    in.T = in_json["T"];
    in.r = in_json["r"];
    in.schedule = parse_schedule(in_json["schedule"].get<std::string>());
    in.convexity = parse_convexity(in_json["convexity"].get<std::string>());
    CHECK(in.T == 51);
    CHECK(rep["bound"]["value"].get<double>() == thm2_stability(in, StrongVariant::ConstantAlpha).value);
    CHECK(rep["bound"]["bound_name"] == "thm2_stability");
    CHECK(rep["epsilon"].get<double>() <= rep["bound"]["value"].get<double>());
  }
  const std::string last = rows.back();
  CHECK(last.substr(last.rfind(',') + 1) == summary["reports"][3]["bound"]["value"].dump());

  // the stability command runs the same grid
  REQUIRE(invoke({"--config", cfg.string(), "--out-dir", (box.root / "p").string(), "stability"}).code == 0);
  CHECK(slurp(out / "stability.csv") == slurp(box.root / "p" / "stability.csv"));
}

TEST_CASE("sweep output is independent of the thread count") {
  Sandbox box;
  const auto cfg = box.write("sweep.toml", kStabilityConfig);
  REQUIRE(invoke({"--config", cfg.string(), "--out-dir", (box.root / "t1").string(), "--threads", "1", "sweep"}).code == 0);
  REQUIRE(invoke({"--config", cfg.string(), "--out-dir", (box.root / "t5").string(), "--threads", "5", "sweep"}).code == 0);
  for (const char* f : {"stability.csv", "stability_summary.json", "resolved_config.toml"})
    CHECK(slurp(box.root / "t1" / f) == slurp(box.root / "t5" / f));
}

TEST_CASE("bounds command") {
  Sandbox box;
  const auto params = box.write("p.json",
                                R"json({"B": 1, "L": 1, "nu": 0.1, "lambda": 0, "m": 10, "n": 100, "T": 1000,
                                    "r": 1, "schedule": "constant(0.01)", "convexity": "strongly-convex"})json");
  const fs::path out = box.root / "o";
  const Result r = invoke({"--out-dir", out.string(), "bounds", params.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json j = json::parse(r.out);
  CHECK(j == json::parse(slurp(out / "bounds.json")));
  bool found = false;
  for (const auto& b : j["bounds"]) {
    if (b["bound_name"] == "thm2_stability" && b["variant"] == "constant") {
      CHECK(b["value"].get<double>() == doctest::Approx(0.02).epsilon(1e-15));
      CHECK(b["applicable"] == true);
      found = true;
    }
  }
  CHECK(found);

  const auto zero = box.write("z.json", R"json({"B": 0, "lambda": 0.5, "T": 100, "schedule": {"kind": "constant", "param": 0.1}})json");
  const json z = json::parse(invoke({"--out-dir", out.string(), "bounds", zero.string()}).out);
  for (const auto& b : z["bounds"])
    if (b["bound_name"] == "thm1_stability" || b["bound_name"] == "prop1_ave_stability") CHECK(b["value"] == 0.0);

  const auto grid = box.write("g.json", R"json({"lambda_grid": [0, 0.5, 0.9], "T": 50})json");
  const json g = json::parse(invoke({"--out-dir", out.string(), "bounds", grid.string()}).out);
  REQUIRE(g["grid"].size() == 3);
  CHECK(g["grid"][1]["lambda"] == 0.5);

  CHECK(invoke({"bounds", box.write("u.json", R"json({"B": 1, "beta": 2})json").string()}).code == 2);
  CHECK(invoke({"bounds", box.write("l.json", R"json({"lambda": 1.0})json").string()}).code == 2);
  CHECK(invoke({"bounds", box.write("m.json", "{not json").string()}).code == 2);
  CHECK(invoke({"bounds"}).code == 2);
}

TEST_CASE("validate-mixing") {
  Sandbox box;
  const fs::path out = box.root / "o";
  Result r = invoke({"--out-dir", out.string(), "validate-mixing", "--all"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(fs::exists(out / "mixing_report.json"));

  const auto good = box.write("w.csv", "0.5,0.5,0\n0.5,0.25,0.25\n0,0.25,0.75\n");
  CHECK(invoke({"--out-dir", out.string(), "validate-mixing", "--matrix", good.string()}).code == 0);
  const auto bad = box.write("bad.csv", "0.5,0.6\n0.5,0.4\n");
  r = invoke({"--out-dir", out.string(), "validate-mixing", "--matrix", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("gen-data") {
  Sandbox box;
  const auto cfg = box.write("g.toml", "[data]\nn = 20\ndim = 2\nholdout = 5\n[topology]\nm = 4\n");
  const fs::path out = box.root / "o";
  REQUIRE(invoke({"--config", cfg.string(), "--out-dir", out.string(), "gen-data"}).code == 0);
  CHECK(lines(slurp(out / "data.csv")).size() == 21);
  CHECK(lines(slurp(out / "heldout.csv")).size() == 6);
  CHECK(lines(slurp(out / "data.csv"))[0] == "x0,x1,y");

  // the written data loads back to the same training set
  const auto back = box.write("b.toml", "[data]\nsource = \"csv\"\npath = \"o/data.csv\"\n[topology]\nm = 4\n");
  const LoadedData again = load_dataset(load_config(back.string()), 4);
  const LoadedData first = load_dataset(load_config(cfg.string()), 4);
  REQUIRE(again.train.size() == first.train.size());
  for (std::size_t i = 0; i < first.train.size(); ++i) {
    CHECK(again.train[i].label == first.train[i].label);
    CHECK(again.train[i].features == first.train[i].features);
  }
}
