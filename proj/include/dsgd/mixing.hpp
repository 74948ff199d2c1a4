#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dsgd/topology.hpp"

namespace dsgd {

enum class MixingScheme { MetropolisHastings, MaxDegree, Custom };

std::string_view to_string(MixingScheme scheme);
MixingScheme parse_mixing_scheme(std::string_view name);

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kDecaySlack = 1e-10;

/// Symmetric doubly stochastic gossip matrix supported on a graph, with the
/// second-largest eigenvalue modulus cached as `lambda()`.
class MixingMatrix {
 public:
  /// Validated custom matrix. The support graph is read off the nonzero
  /// off-diagonal pattern. Throws ValidationError on any failed clause.
  static MixingMatrix from_matrix(Eigen::MatrixXd w);

  /// No validation beyond shape; for inspecting broken matrices.
  static MixingMatrix unchecked(Eigen::MatrixXd w, MixingScheme scheme = MixingScheme::Custom);

  const Eigen::MatrixXd& weights() const noexcept { return w_; }
  double lambda() const noexcept { return lambda_; }
  int size() const noexcept { return static_cast<int>(w_.rows()); }
  MixingScheme scheme() const noexcept { return scheme_; }
  /// Off-diagonal support pattern as undirected edges (i < l).
  const std::vector<Edge>& support() const noexcept { return support_; }

 private:
  friend MixingMatrix build_mixing(const Graph&, MixingScheme);

  MixingMatrix(Eigen::MatrixXd w, MixingScheme scheme, std::vector<Edge> support);

  Eigen::MatrixXd w_;
  double lambda_ = 0.0;
  MixingScheme scheme_ = MixingScheme::Custom;
  std::vector<Edge> support_;
};

MixingMatrix build_mixing(const Graph& g, MixingScheme scheme = MixingScheme::MetropolisHastings);

/// The m x m averaging matrix with every entry 1/m.
Eigen::MatrixXd uniform_matrix(int m);

/// max |eigenvalue| over the spectrum with one copy of the eigenvalue
/// closest to 1 removed. Throws ValidationError on non-symmetric input.
double spectral_lambda(const Eigen::MatrixXd& w);

/// Largest singular value.
double operator_norm(const Eigen::MatrixXd& a);

struct ClauseResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct DecayCheck {
  int k = 0;
  double norm = 0.0;   // ||W^k - P||_op
  double bound = 0.0;  // lambda^k
  double slack() const { return bound - norm; }
};

struct ValidationReport {
  std::vector<ClauseResult> clauses;
  std::vector<DecayCheck> decay;
  bool decay_pass = true;
  bool ok() const;
  const ClauseResult* find(std::string_view name) const;
};

/// Checks every structural clause (support, symmetry, stochasticity,
/// simple unit eigenvalue, -I < W <= I) plus ||W^k - P|| <= lambda^k.
ValidationReport validate_mixing(const MixingMatrix& mm, int max_power = 50);

Eigen::MatrixXd read_matrix_csv(std::istream& in);
MixingMatrix load_mixing_csv(const std::string& path);

}  // namespace dsgd
