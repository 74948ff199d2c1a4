#include "dsgd/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "dsgd/error.hpp"

namespace dsgd {

namespace {

bool exactly_symmetric(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols()) return false;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j)
      if (w(i, j) != w(j, i)) return false;
  return true;
}

// All entries bit-identical: the matrix is a scalar multiple of the all-ones
// matrix, whose spectrum is {m * w, 0, ..., 0}.
bool all_entries_equal(const Eigen::MatrixXd& w) {
  const double first = w(0, 0);
  return (w.array() == first).all();
}

std::vector<Edge> support_of(const Eigen::MatrixXd& w) {
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j)
      if (w(i, j) != 0.0 || w(j, i) != 0.0) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return edges;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed", 0);
  return solver.eigenvalues();  // ascending
}

double symmetric_norm(const Eigen::MatrixXd& a) {
  Eigen::VectorXd ev = symmetric_eigenvalues(a);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

std::string_view to_string(MixingScheme scheme) {
  switch (scheme) {
    case MixingScheme::MetropolisHastings: return "metropolis";
    case MixingScheme::MaxDegree: return "max-degree";
    case MixingScheme::Custom: return "custom";
  }
  return "unknown";
}

MixingScheme parse_mixing_scheme(std::string_view name) {
  if (name == "metropolis" || name == "metropolis-hastings") return MixingScheme::MetropolisHastings;
  if (name == "max-degree" || name == "maxdegree") return MixingScheme::MaxDegree;
  if (name == "custom") return MixingScheme::Custom;
  throw ValidationError("unknown mixing scheme '" + std::string(name) + "'");
}

Eigen::MatrixXd uniform_matrix(int m) {
  return Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
}

double spectral_lambda(const Eigen::MatrixXd& w) {
  if (w.rows() == 0 || !exactly_symmetric(w)) throw ValidationError("spectral_lambda needs a square symmetric matrix");
  if (w.rows() == 1) return 0.0;
  if (all_entries_equal(w)) {
    // {m*w, 0, ..., 0}; drop the top eigenvalue.
    return 0.0;
  }
  Eigen::VectorXd ev = symmetric_eigenvalues(w);
  // Remove one copy of the eigenvalue nearest 1 (the largest for valid W).
  Eigen::Index drop = 0;
  double best = std::abs(ev(0) - 1.0);
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    double gap = std::abs(ev(i) - 1.0);
    if (gap <= best) {
      best = gap;
      drop = i;
    }
  }
  double lam = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (i != drop) lam = std::max(lam, std::abs(ev(i)));
  return lam;
}

double operator_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

MixingMatrix::MixingMatrix(Eigen::MatrixXd w, MixingScheme scheme, std::vector<Edge> support)
    : w_(std::move(w)), scheme_(scheme), support_(std::move(support)) {
  lambda_ = exactly_symmetric(w_) ? spectral_lambda(w_) : std::nan("");
}

MixingMatrix MixingMatrix::unchecked(Eigen::MatrixXd w, MixingScheme scheme) {
  if (w.rows() != w.cols() || w.rows() == 0) throw ValidationError("mixing matrix must be square and nonempty");
  auto support = support_of(w);
  return MixingMatrix(std::move(w), scheme, std::move(support));
}

MixingMatrix MixingMatrix::from_matrix(Eigen::MatrixXd w) {
  MixingMatrix mm = unchecked(std::move(w), MixingScheme::Custom);
  ValidationReport report = validate_mixing(mm, 0);
  for (const auto& clause : report.clauses) {
    if (!clause.pass) throw ValidationError("mixing matrix fails '" + clause.name + "': " + clause.detail);
  }
  return mm;
}

MixingMatrix build_mixing(const Graph& g, MixingScheme scheme) {
  const int m = g.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  const int dmax = g.max_degree();
  switch (scheme) {
    case MixingScheme::MetropolisHastings:
      for (const auto& [i, l] : g.edges()) {
        double v = 1.0 / (1.0 + std::max(g.degree(i), g.degree(l)));
        w(i, l) = v;
        w(l, i) = v;
      }
      // 1 - sum_j 1/(1+max(d_i,d_j)) rewritten as a sum of nonnegative terms
      // so regular graphs get a diagonal bit-identical to their edge weights.
      for (int i = 0; i < m; ++i) {
        const double own = 1.0 / (1.0 + g.degree(i));
        double diag = own;
        for (int l : g.adjacency()[i]) diag += own - w(i, l);
        w(i, i) = diag;
      }
      break;
    case MixingScheme::MaxDegree: {
      const double v = 1.0 / (1.0 + dmax);
      for (const auto& [i, l] : g.edges()) {
        w(i, l) = v;
        w(l, i) = v;
      }
      for (int i = 0; i < m; ++i) w(i, i) = v + static_cast<double>(dmax - g.degree(i)) * v;
      break;
    }
    case MixingScheme::Custom:
      throw ValidationError("custom mixing matrices are loaded from CSV, not built from a graph");
  }
  return MixingMatrix(std::move(w), scheme, g.edges());
}

bool ValidationReport::ok() const {
  return decay_pass && std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.pass; });
}

const ClauseResult* ValidationReport::find(std::string_view name) const {
  for (const auto& c : clauses)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate_mixing(const MixingMatrix& mm, int max_power) {
  const Eigen::MatrixXd& w = mm.weights();
  const int m = mm.size();
  ValidationReport report;
  auto add = [&](std::string name, bool pass, std::string detail) {
    report.clauses.push_back({std::move(name), pass, std::move(detail)});
  };

  const bool symmetric = exactly_symmetric(w);
  add("symmetric", symmetric, symmetric ? "" : "w(i,j) != w(j,i) for some pair");

  double min_entry = w.minCoeff();
  add("nonnegative", min_entry >= 0.0, "min entry " + std::to_string(min_entry));

  // Support: zero off the edge set, strictly positive on it.
  bool support_ok = true;
  std::string support_detail;
  std::vector<std::vector<char>> on_edge(static_cast<size_t>(m), std::vector<char>(static_cast<size_t>(m), 0));
  for (const auto& [i, l] : mm.support()) on_edge[i][l] = on_edge[l][i] = 1;
  for (int i = 0; i < m && support_ok; ++i) {
    for (int l = 0; l < m; ++l) {
      if (i == l) continue;
      if (on_edge[i][l] ? !(w(i, l) > 0.0) : w(i, l) != 0.0) {
        support_ok = false;
        support_detail = "entry (" + std::to_string(i) + "," + std::to_string(l) + ") violates the support pattern";
        break;
      }
    }
  }
  add("support", support_ok, support_detail);
  add("connected", is_connected(m, mm.support()), "");

  double worst_row = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  double worst_col = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  double worst = std::max(worst_row, worst_col);
  add("doubly_stochastic", worst <= kStochasticTol, "max |row/col sum - 1| = " + std::to_string(worst));

  if (symmetric) {
    Eigen::VectorXd ev = symmetric_eigenvalues(w);
    const double top = ev(m - 1);
    const double second = m >= 2 ? ev(m - 2) : -1.0;
    add("simple_unit_eigenvalue", std::abs(top - 1.0) <= kStochasticTol && second < 1.0 - kStochasticTol,
        "top " + std::to_string(top) + ", second " + std::to_string(second));
    add("upper_identity", top <= 1.0 + kStochasticTol, "max eigenvalue " + std::to_string(top));
    add("lower_identity", ev(0) > -1.0 + kStochasticTol, "min eigenvalue " + std::to_string(ev(0)));
  } else {
    add("simple_unit_eigenvalue", false, "requires symmetry");
    add("upper_identity", false, "requires symmetry");
    add("lower_identity", false, "requires symmetry");
  }

  if (max_power > 0 && symmetric) {
    const Eigen::MatrixXd p = uniform_matrix(m);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m, m);
    for (int k = 1; k <= max_power; ++k) {
      power = power * w;
      DecayCheck check;
      check.k = k;
      check.norm = symmetric_norm(power - p);
      check.bound = std::pow(mm.lambda(), k);
      if (!(check.norm <= check.bound + kDecaySlack)) report.decay_pass = false;
      report.decay.push_back(check);
    }
  } else if (max_power > 0) {
    report.decay_pass = false;
  }
  return report;
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError("matrix csv: unparseable value '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (m == 0) throw DataError("matrix csv: empty");
  Eigen::MatrixXd w(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != m) throw DataError("matrix csv: expected a square matrix");
    for (Eigen::Index j = 0; j < m; ++j) w(i, j) = rows[i][j];
  }
  return w;
}

MixingMatrix load_mixing_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mixing matrix '" + path + "'");
  return MixingMatrix::from_matrix(read_matrix_csv(in));
}

}  // namespace dsgd
