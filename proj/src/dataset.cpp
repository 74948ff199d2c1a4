#include "dsgd/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "dsgd/error.hpp"
#include "dsgd/format.hpp"

namespace dsgd {

namespace {

bool parse_double(std::string_view text, double& out) {
  std::string s(text);
  size_t first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return false;
  try {
    size_t used = 0;
    out = std::stod(s.substr(first), &used);
    return s.find_first_not_of(" \t", first + used) == std::string::npos;
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

}  // namespace

std::string_view to_string(SyntheticTask task) {
  switch (task) {
    case SyntheticTask::Linear: return "linear";
    case SyntheticTask::Logistic: return "logistic";
    case SyntheticTask::Mlp: return "mlp";
  }
  return "unknown";
}

SyntheticTask parse_synthetic_task(std::string_view name) {
  if (name == "linear") return SyntheticTask::Linear;
  if (name == "logistic") return SyntheticTask::Logistic;
  if (name == "mlp") return SyntheticTask::Mlp;
  throw ValidationError("unknown synthetic task '" + std::string(name) + "'");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.dim < 1) throw ValidationError("synthetic data needs n >= 1 and dim >= 1");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = spec.feature_scale > 0.0 ? spec.feature_scale : 1.0 / std::sqrt(spec.dim);

  Eigen::VectorXd planted(spec.dim);
  for (int j = 0; j < spec.dim; ++j) planted(j) = gauss(rng);

  Dataset data;
  data.reserve(static_cast<size_t>(spec.n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < spec.n; ++i) {
    Sample s;
    s.features.resize(spec.dim);
    for (int j = 0; j < spec.dim; ++j) s.features(j) = scale * gauss(rng);
    const double margin = s.features.dot(planted);
    switch (spec.task) {
      case SyntheticTask::Linear:
        s.label = margin + spec.noise * gauss(rng);
        break;
      case SyntheticTask::Logistic: {
        const double prob = 1.0 / (1.0 + std::exp(-margin / std::max(spec.noise, 1e-12)));
        s.label = unit(rng) < prob ? 1.0 : -1.0;
        break;
      }
      case SyntheticTask::Mlp:
        s.label = std::tanh(margin) + spec.noise * gauss(rng);
        break;
    }
    data.push_back(std::move(s));
  }
  return data;
}

int checked_feature_dim(const Dataset& data) {
  if (data.empty()) throw DataError("dataset is empty");
  const auto d = data.front().features.size();
  if (d == 0) throw DataError("dataset has feature dimension 0");
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].features.size() != d) throw DataError("ragged dataset at row " + std::to_string(i));
  }
  return static_cast<int>(d);
}

Dataset read_csv_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  size_t line_no = 0;
  long expected_cols = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split(line, ',');
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (size_t c = 0; c < cells.size(); ++c) numeric = numeric && parse_double(cells[c], values[c]);
    if (!numeric) {
      if (data.empty() && expected_cols < 0) {
        expected_cols = static_cast<long>(cells.size());  // header
        continue;
      }
      throw DataError("csv line " + std::to_string(line_no) + ": unparseable value");
    }
    if (expected_cols >= 0 && static_cast<long>(cells.size()) != expected_cols) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(expected_cols) +
                      " columns, got " + std::to_string(cells.size()));
    }
    expected_cols = static_cast<long>(cells.size());
    if (cells.size() < 2) throw DataError("csv line " + std::to_string(line_no) + ": need features and a label");
    Sample s;
    s.features = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size() - 1));
    s.label = values.back();
    data.push_back(std::move(s));
  }
  checked_feature_dim(data);
  return data;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_csv_dataset(in);
}

Dataset read_libsvm_dataset(std::istream& in, int dim) {
  struct Row {
    double label;
    std::vector<std::pair<int, double>> entries;
  };
  std::vector<Row> rows;
  int max_index = 0;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    Row row{};
    if (!parse_double(token, row.label)) throw DataError("libsvm line " + std::to_string(line_no) + ": bad label");
    while (ss >> token) {
      auto colon = token.find(':');
      double index = 0.0;
      double value = 0.0;
      if (colon == std::string::npos || !parse_double(token.substr(0, colon), index) ||
          !parse_double(token.substr(colon + 1), value) || index < 1 || index != std::floor(index)) {
        throw DataError("libsvm line " + std::to_string(line_no) + ": bad entry '" + token + "'");
      }
      row.entries.emplace_back(static_cast<int>(index), value);
      max_index = std::max(max_index, static_cast<int>(index));
    }
    rows.push_back(std::move(row));
  }
  if (dim <= 0) dim = max_index;
  if (dim <= 0) throw DataError("libsvm dataset has dimension 0");
  if (max_index > dim) throw DataError("libsvm index " + std::to_string(max_index) + " exceeds dim " + std::to_string(dim));
  Dataset data;
  data.reserve(rows.size());
  for (const auto& row : rows) {
    Sample s;
    s.features = Eigen::VectorXd::Zero(dim);
    for (const auto& [index, value] : row.entries) s.features(index - 1) = value;
    s.label = row.label;
    data.push_back(std::move(s));
  }
  checked_feature_dim(data);
  return data;
}

Dataset load_libsvm_dataset(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_libsvm_dataset(in, dim);
}

void write_csv_dataset(std::ostream& out, const Dataset& data) {
  const int d = checked_feature_dim(data);
  for (int j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "y\n";
  for (const auto& s : data) {
    for (int j = 0; j < d; ++j) out << format_double(s.features(j)) << ',';
    out << format_double(s.label) << '\n';
  }
}

Standardization standardize(Dataset& data) {
  const int d = checked_feature_dim(data);
  const double count = static_cast<double>(data.size());
  Standardization stats{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  for (const auto& s : data) stats.mean += s.features;
  stats.mean /= count;
  for (const auto& s : data) stats.stddev.array() += (s.features - stats.mean).array().square();
  stats.stddev = (stats.stddev / count).array().sqrt();
  apply_standardization(data, stats);
  return stats;
}

void apply_standardization(Dataset& data, const Standardization& stats) {
  for (auto& s : data) {
    if (s.features.size() != stats.mean.size()) throw DataError("feature dimension does not match the standardization");
    s.features -= stats.mean;
    for (int j = 0; j < s.features.size(); ++j)
      if (stats.stddev(j) > 0.0) s.features(j) /= stats.stddev(j);
  }
}

}  // namespace dsgd
