#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsgd/engine.hpp"

namespace dsgd {

enum class Convexity { Convex, StronglyConvex, Nonconvex };

std::string_view to_string(Convexity c);
Convexity parse_convexity(std::string_view name);

/// Every symbol the closed-form bounds depend on.
struct BoundInputs {
  double B = 1.0;
  double L = 1.0;
  double nu = 0.0;
  double lambda = 0.0;
  int m = 1;
  std::int64_t n = 1;  // samples per node
  std::int64_t T = 2;
  double r = 1.0;      // radius of V
  StepSchedule schedule = StepSchedule::constant(0.01);
  double c = 0.01;     // nonconvex step constant, alpha_t <= c/(t+1)
  /// |x^1 - x*|; defaults to the diameter 2r.
  std::optional<double> x0_dist;
  /// sup_{x in V, xi} f(x; xi), when known.
  std::optional<double> loss_sup;
  Convexity convexity = Convexity::Convex;
  /// false when B, L are sampled estimates.
  bool certified = true;

  double initial_distance() const { return x0_dist.value_or(2.0 * r); }
  double mn() const { return static_cast<double>(m) * static_cast<double>(n); }
  /// Throws ValidationError on non-positive sizes or lambda outside [0, 1).
  void validate() const;
};

struct BoundTerm {
  std::string name;
  double value = 0.0;
};

struct BoundValue {
  std::string name;
  std::string variant;
  double value = 0.0;
  /// Additive pieces; `value` is their sum in order.
  std::vector<BoundTerm> terms;
  /// Non-additive by-products (e.g. the growth exponent).
  std::vector<BoundTerm> extras;
  bool applicable = true;
  std::vector<std::string> warnings;

  double term(std::string_view term_name) const;
};

struct BoundReport {
  BoundInputs inputs;
  std::vector<BoundValue> bounds;
  const BoundValue* find(std::string_view name, std::string_view variant = {}) const;
};

enum class AveVariant { ConstantAlpha, InverseT };
enum class StrongVariant { ConstantAlpha, InverseNuT };
enum class OptVariant { ConstantAlpha, InverseTwoNuT };

/// ln(1/l) l^{ln(1/l)} / l + ln^2(1/l) l^{ln(1/l)/8} / (16 l) + 2 / (l ln(1/l)); 0 at l = 0.
double c_lambda(double lambda);
/// B^2/(2 nu^2) + lambda^2 B^2 C^2 / (2 nu^2 m) + 2 L r B C / nu^2.
double d_lambda(double B, double nu, double lambda, int m, double L, double r);
/// max_{1 <= t <= T-1} sum_{j<t} alpha_j lambda^{t-1-j}.
double m_of_t(const StepSchedule& schedule, double lambda, std::int64_t T);

/// Last-iterate stability, convex losses.
BoundValue thm1_stability(const BoundInputs& in);
/// Stability of the step-weighted average iterate, convex losses.
BoundValue prop1_ave_stability(const BoundInputs& in, AveVariant variant);
/// Strongly convex stability; independent of T.
BoundValue thm2_stability(const BoundInputs& in, StrongVariant variant);
/// Nonconvex stability with alpha_t <= c/(t+1).
BoundValue thm3_stability(const BoundInputs& in);
/// Convex optimization error of ave(x^T).
BoundValue lemma3_opt_error(const BoundInputs& in);
/// Strongly convex E|x^T - x*|^2.
BoundValue lemma4_opt_error(const BoundInputs& in, OptVariant variant);
/// Convex excess generalization of ave(x^T).
BoundValue thm4_excess_gen(const BoundInputs& in, AveVariant variant);
/// Strongly convex excess generalization.
BoundValue thm5_excess_gen(const BoundInputs& in, StrongVariant variant);

/// Every bound and variant, applicable or not.
BoundReport evaluate_all(const BoundInputs& in);

/// The stability bound matching a model's regime at horizon T: thm1 for
/// convex, thm2 (variant by schedule) for strongly convex, thm3 otherwise.
BoundValue matched_stability_bound(const BoundInputs& in);

/// matched_stability_bound(in with T = h).value for each ascending horizon h,
/// bit-identical to the individual calls but linear in max(h).
std::vector<double> matched_stability_series(const BoundInputs& in, const std::vector<std::int64_t>& horizons);

}  // namespace dsgd
