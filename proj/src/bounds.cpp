#include "dsgd/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "dsgd/error.hpp"
#include "dsgd/format.hpp"

namespace dsgd {

namespace {

constexpr double kNearSingular = 1e-6;

double indicator(bool cond) { return cond ? 1.0 : 0.0; }

struct StepSums {
  double alpha = 0.0;     // sum_{t=1}^{T-1} alpha_t
  double alpha_sq = 0.0;  // sum_{t=1}^{T-1} alpha_t^2
};

StepSums step_sums(const StepSchedule& s, std::int64_t T) {
  StepSums out;
  for (std::int64_t t = 1; t <= T - 1; ++t) {
    const double a = s.alpha(t);
    out.alpha += a;
    out.alpha_sq += a * a;
  }
  return out;
}

BoundValue make(std::string name, std::string variant) {
  BoundValue v;
  v.name = std::move(name);
  v.variant = std::move(variant);
  return v;
}

void add_term(BoundValue& v, std::string name, double value) {
  v.terms.push_back({std::move(name), value});
  v.value += value;
}

void flag(BoundValue& v, std::string why) {
  v.applicable = false;
  v.warnings.push_back(std::move(why));
}

void common_warnings(const BoundInputs& in, BoundValue& v) {
  if (!in.certified) v.warnings.push_back("heuristic: B and L are sampled estimates, not certified constants");
}

void require_convex(const BoundInputs& in, BoundValue& v) {
  if (in.convexity == Convexity::Nonconvex) flag(v, "requires a convex loss");
}

void require_strongly_convex(const BoundInputs& in, BoundValue& v) {
  if (in.convexity != Convexity::StronglyConvex) flag(v, "requires a strongly convex loss");
  if (!(in.nu > 0.0)) throw ValidationError(v.name + " needs nu > 0");
}

// Constant-step variants read alpha from the schedule.
double constant_alpha(const BoundInputs& in, BoundValue& v) {
  if (in.schedule.kind != ScheduleKind::Constant) flag(v, "constant-step variant evaluated with schedule " + in.schedule.describe());
  return in.schedule.alpha(0);
}

void require_step_at_most(const BoundInputs& in, BoundValue& v, double limit, const char* label) {
  const double a = in.schedule.max_alpha(in.T);
  if (!(a <= limit)) flag(v, std::string("step size ") + format_double(a) + " exceeds " + label + " = " + format_double(limit));
}

void require_schedule(const BoundInputs& in, BoundValue& v, ScheduleKind kind, double param) {
  if (in.schedule.kind != kind || in.schedule.param != param) {
    flag(v, "variant expects schedule " + StepSchedule{kind, param}.describe() + ", got " + in.schedule.describe());
  }
}

void require_T(const BoundInputs& in, const std::string& name) {
  if (in.T < 2) throw ValidationError(name + " needs T >= 2");
}

}  // namespace

std::string_view to_string(Convexity c) {
  switch (c) {
    case Convexity::Convex: return "convex";
    case Convexity::StronglyConvex: return "strongly-convex";
    case Convexity::Nonconvex: return "nonconvex";
  }
  return "unknown";
}

Convexity parse_convexity(std::string_view name) {
  for (auto c : {Convexity::Convex, Convexity::StronglyConvex, Convexity::Nonconvex})
    if (to_string(c) == name) return c;
  throw ValidationError("unknown convexity '" + std::string(name) + "'");
}

void BoundInputs::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("lambda must lie in [0, 1)");
  if (m < 1 || n < 1) throw ValidationError("m and n must be positive");
  if (T < 1) throw ValidationError("T must be positive");
  if (!(B >= 0.0) || !(L > 0.0) || !(r > 0.0) || !(nu >= 0.0)) throw ValidationError("need B >= 0, L > 0, r > 0, nu >= 0");
  if (x0_dist && !(*x0_dist >= 0.0)) throw ValidationError("x0_dist must be nonnegative");
}

double BoundValue::term(std::string_view term_name) const {
  for (const auto& t : terms)
    if (t.name == term_name) return t.value;
  throw std::out_of_range("no term '" + std::string(term_name) + "' in " + name);
}

const BoundValue* BoundReport::find(std::string_view name, std::string_view variant) const {
  for (const auto& b : bounds)
    if (b.name == name && (variant.empty() || b.variant == variant)) return &b;
  return nullptr;
}

double c_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("c_lambda needs 0 <= lambda < 1");
  if (lambda == 0.0) return 0.0;
  const double u = std::log(1.0 / lambda);
  return u * std::pow(lambda, u) / lambda + (u * u / (16.0 * lambda)) * std::pow(lambda, u / 8.0) +
         2.0 / (lambda * u);
}

double d_lambda(double B, double nu, double lambda, int m, double L, double r) {
  if (!(nu > 0.0)) throw ValidationError("d_lambda needs nu > 0");
  const double C = c_lambda(lambda);
  const double nu2 = nu * nu;
  return B * B / (2.0 * nu2) + lambda * lambda * B * B * C * C / (2.0 * nu2 * m) + 2.0 * L * r * B * C / nu2;
}

double m_of_t(const StepSchedule& schedule, double lambda, std::int64_t T) {
  if (T < 2) throw ValidationError("M(T) needs T >= 2");
  double s = 0.0;
  double best = 0.0;
  for (std::int64_t t = 1; t <= T - 1; ++t) {
    s = lambda * s + schedule.alpha(t - 1);
    best = std::max(best, s);
  }
  return best;
}

BoundValue thm1_stability(const BoundInputs& in) {
  in.validate();
  BoundValue v = make("thm1_stability", "general");
  require_convex(in, v);
  require_step_at_most(in, v, 2.0 / in.L, "2/L");
  const double B2 = in.B * in.B;
  double alpha_sum = 0.0;
  double network = 0.0;
  double s = 0.0;  // sum_{j<t} alpha_j lambda^{t-1-j}
  for (std::int64_t t = 1; t <= in.T - 1; ++t) {
    s = in.lambda * s + in.schedule.alpha(t - 1);
    const double a = in.schedule.alpha(t);
    alpha_sum += a;
    network += (1.0 + a * in.B) * s;
  }
  add_term(v, "sgd", 2.0 * B2 * alpha_sum / in.mn());
  // the centralized bound at lambda = 0
  add_term(v, "network", 4.0 * B2 * network * indicator(in.lambda != 0.0));
  common_warnings(in, v);
  return v;
}

BoundValue prop1_ave_stability(const BoundInputs& in, AveVariant variant) {
  in.validate();
  const double B = in.B;
  const double B2 = B * B;
  const double T = static_cast<double>(in.T);
  const double ind = indicator(in.lambda != 1.0);
  if (variant == AveVariant::ConstantAlpha) {
    BoundValue v = make("prop1_ave_stability", "constant");
    require_convex(in, v);
    const double a = constant_alpha(in, v);
    require_step_at_most(in, v, 2.0 / in.L, "2/L");
    add_term(v, "sgd", 2.0 * B2 * a * (T - 1.0) / in.mn());
    add_term(v, "network", 4.0 * a * B2 * (1.0 + a * B) * (T - 1.0) / (1.0 - in.lambda) * ind);
    common_warnings(in, v);
    return v;
  }
  BoundValue v = make("prop1_ave_stability", "inverse-t");
  require_convex(in, v);
  require_schedule(in, v, ScheduleKind::InverseT, 1.0);
  require_step_at_most(in, v, 2.0 / in.L, "2/L");
  add_term(v, "sgd", B2 * std::log(T) / in.mn());
  add_term(v, "network", 4.0 * B2 * (1.0 + B) / std::log(T + 1.0) * ind);
  common_warnings(in, v);
  return v;
}

BoundValue thm2_stability(const BoundInputs& in, StrongVariant variant) {
  in.validate();
  const double B = in.B;
  const double B2 = B * B;
  const double nu = in.nu;
  const double net = indicator(in.lambda != 0.0) / (1.0 - in.lambda);
  BoundValue v = make("thm2_stability", variant == StrongVariant::ConstantAlpha ? "constant" : "inverse-nu-t");
  require_strongly_convex(in, v);
  if (variant == StrongVariant::ConstantAlpha) {
    const double a = constant_alpha(in, v);
    require_step_at_most(in, v, 1.0 / in.L, "1/L");
    add_term(v, "sgd", 2.0 * B2 / (in.mn() * nu));
    add_term(v, "network", 4.0 * (1.0 + a * B) * B2 / nu * net);
  } else {
    require_schedule(in, v, ScheduleKind::InverseNuT, nu);
    add_term(v, "sgd", 2.0 * B2 / (in.mn() * nu));
    add_term(v, "network", 4.0 * (1.0 + B / nu) * (B2 / nu) * net);
  }
  if (in.lambda >= 1.0 - kNearSingular) v.warnings.push_back("near-singular: lambda >= 1 - 1e-6");
  common_warnings(in, v);
  return v;
}

BoundValue thm3_stability(const BoundInputs& in) {
  in.validate();
  if (!(in.c > 0.0)) throw ValidationError("thm3 needs c > 0");
  BoundValue v = make("thm3_stability", "inverse-t");
  const double c = in.c;
  const double L = in.L;
  const double B = in.B;
  const double B2 = B * B;
  const double T = static_cast<double>(in.T);
  const double q = c * L / (1.0 + c * L);
  const double lead = std::pow(c, 1.0 / (1.0 + c * L));
  const double growth = std::pow(T, q);
  const double C = c_lambda(in.lambda);

  // alpha_t (t+1) <= c for every t < T.
  double worst = 0.0;
  switch (in.schedule.kind) {
    case ScheduleKind::Constant: worst = in.schedule.param * T; break;
    case ScheduleKind::InverseT: worst = in.schedule.param; break;
    case ScheduleKind::InverseNuT: worst = 1.0 / in.schedule.param; break;
    case ScheduleKind::InverseTwoNuT: worst = 1.0 / (2.0 * in.schedule.param); break;
  }
  if (!(worst <= c)) flag(v, "schedule violates alpha_t <= c/(t+1)");
  const double t0 = lead * growth;
  if (!(t0 <= static_cast<double>(in.n))) flag(v, "c too large: t0 = " + format_double(t0) + " exceeds n");
  if (!in.loss_sup) {
    v.warnings.push_back("loss supremum unknown; bound assumes sup f <= 1");
  } else if (*in.loss_sup > 1.0) {
    v.warnings.push_back("loss supremum " + format_double(*in.loss_sup) + " exceeds 1");
  }

  add_term(v, "sgd", lead * growth / in.mn());
  add_term(v, "network", lead * (2.0 * B2 * c * L / in.mn() + 4.0 * (1.0 + c * B) * B2 * L * C) * growth);
  v.extras.push_back({"exponent", q});
  common_warnings(in, v);
  return v;
}

BoundValue lemma3_opt_error(const BoundInputs& in) {
  in.validate();
  require_T(in, "lemma3");
  BoundValue v = make("lemma3_opt_error", "general");
  require_convex(in, v);
  const StepSums sums = step_sums(in.schedule, in.T);
  if (!(sums.alpha > 0.0)) throw ValidationError("lemma3 needs a positive step-size sum");
  const double M = m_of_t(in.schedule, in.lambda, in.T);
  const double dist = in.initial_distance();
  const double B = in.B;
  add_term(v, "initial", dist * dist / sums.alpha);
  add_term(v, "variance", 2.0 * B * B * sums.alpha_sq / (in.m * sums.alpha));
  add_term(v, "projection", 8.0 * in.L * in.r * B * M);
  add_term(v, "consensus", 2.0 * in.lambda * in.lambda * B * B * M * M);
  common_warnings(in, v);
  return v;
}

BoundValue lemma4_opt_error(const BoundInputs& in, OptVariant variant) {
  in.validate();
  require_T(in, "lemma4");
  BoundValue v = make("lemma4_opt_error", variant == OptVariant::ConstantAlpha ? "constant" : "inverse-two-nu-t");
  require_strongly_convex(in, v);
  const double nu = in.nu;
  const double B = in.B;
  const double lam = in.lambda;
  const double dist2 = in.initial_distance() * in.initial_distance();
  const double T = static_cast<double>(in.T);
  if (variant == OptVariant::ConstantAlpha) {
    const double a = constant_alpha(in, v);
    if (!(2.0 * a * nu < 1.0)) flag(v, "no contraction: 2 alpha nu >= 1");
    add_term(v, "initial", std::pow(1.0 - 2.0 * a * nu, T - 1.0) * dist2);
    const double net = (4.0 * a * in.L * in.r * B / ((1.0 - lam) * nu) +
                        lam * lam * B * B * a / (in.m * (1.0 - lam) * (1.0 - lam) * nu)) *
                       indicator(lam != 0.0);
    add_term(v, "network", net);
  } else {
    require_schedule(in, v, ScheduleKind::InverseTwoNuT, nu);
    const double D = d_lambda(B, nu, lam, in.m, in.L, in.r);
    add_term(v, "initial", dist2 / (T - 1.0));
    add_term(v, "noise", D * std::log(T) / (T - 1.0));
    v.extras.push_back({"d_lambda", D});
  }
  common_warnings(in, v);
  return v;
}

BoundValue thm4_excess_gen(const BoundInputs& in, AveVariant variant) {
  in.validate();
  BoundValue v = make("thm4_excess_gen", variant == AveVariant::ConstantAlpha ? "constant" : "inverse-t");
  const BoundValue stab = prop1_ave_stability(in, variant);
  v.applicable = stab.applicable;
  v.warnings = stab.warnings;
  for (const auto& t : stab.terms) add_term(v, "stability_" + t.name, t.value);

  const double B = in.B;
  const double B2 = B * B;
  const double L = in.L;
  const double r = in.r;
  const double lam = in.lambda;
  const double ind = indicator(lam != 1.0);
  const double T = static_cast<double>(in.T);
  if (variant == AveVariant::ConstantAlpha) {
    require_T(in, "thm4");
    const double a = in.schedule.alpha(0);
    add_term(v, "opt_initial", 4.0 * r * r / ((T - 1.0) * a));
    add_term(v, "opt_variance", 2.0 * B2 * a / in.m);
    add_term(v, "opt_projection", 8.0 * L * r * B * a / (1.0 - lam) * ind);
    add_term(v, "opt_consensus", 2.0 * lam * lam * B2 * a * a / ((1.0 - lam) * (1.0 - lam)));
  } else {
    const double C = c_lambda(lam);
    const double logT1 = std::log(T + 1.0);
    add_term(v, "opt_consensus", 2.0 * lam * lam * B2 * C * C);
    add_term(v, "opt_initial", 4.0 * r * r / logT1);
    add_term(v, "opt_variance", 4.0 * B2 / (in.m * logT1));
    add_term(v, "opt_projection", 8.0 * L * r * B * C * ind);
  }
  return v;
}

BoundValue thm5_excess_gen(const BoundInputs& in, StrongVariant variant) {
  in.validate();
  require_T(in, "thm5");
  BoundValue v = make("thm5_excess_gen", variant == StrongVariant::ConstantAlpha ? "constant" : "inverse-nu-t");
  const BoundValue stab = thm2_stability(in, variant);
  v.applicable = stab.applicable;
  v.warnings = stab.warnings;

  const double B = in.B;
  const double B2 = B * B;
  const double nu = in.nu;
  const double lam = in.lambda;
  const double r = in.r;
  const double T = static_cast<double>(in.T);
  const double net = indicator(lam != 0.0) / (1.0 - lam);
  if (variant == StrongVariant::ConstantAlpha) {
    const double a = in.schedule.alpha(0);
    add_term(v, "stability_sgd", 2.0 * B2 / (in.mn() * nu));
    add_term(v, "stability_network", 4.0 * (1.0 + a * B) * B2 / nu * net);
    const double inner = std::pow(1.0 - 2.0 * a * nu, T - 1.0) * 4.0 * r * r +
                         (4.0 * a * in.L * r * B / ((1.0 - lam) * nu) +
                          lam * lam * B2 * a / (in.m * (1.0 - lam) * (1.0 - lam) * nu)) *
                             indicator(lam != 0.0);
    add_term(v, "optimization", B * std::sqrt(inner));
  } else {
    const double D = d_lambda(B, nu, lam, in.m, in.L, r);
    add_term(v, "stability_sgd", 2.0 * B2 / (in.mn() * nu));
    add_term(v, "stability_network", 4.0 * (nu + B) * B2 / (nu * nu) * net);
    add_term(v, "optimization", B * std::sqrt(4.0 * r * r / (T - 1.0) + D * std::log(T) / (T - 1.0)));
  }
  return v;
}

BoundReport evaluate_all(const BoundInputs& in) {
  in.validate();
  BoundReport report;
  report.inputs = in;
  auto& out = report.bounds;
  out.push_back(thm1_stability(in));
  out.push_back(prop1_ave_stability(in, AveVariant::ConstantAlpha));
  out.push_back(prop1_ave_stability(in, AveVariant::InverseT));
  if (in.nu > 0.0) {
    out.push_back(thm2_stability(in, StrongVariant::ConstantAlpha));
    out.push_back(thm2_stability(in, StrongVariant::InverseNuT));
  }
  out.push_back(thm3_stability(in));
  if (in.T >= 2) {
    out.push_back(lemma3_opt_error(in));
    if (in.nu > 0.0) {
      out.push_back(lemma4_opt_error(in, OptVariant::ConstantAlpha));
      out.push_back(lemma4_opt_error(in, OptVariant::InverseTwoNuT));
    }
    out.push_back(thm4_excess_gen(in, AveVariant::ConstantAlpha));
    out.push_back(thm4_excess_gen(in, AveVariant::InverseT));
    if (in.nu > 0.0) {
      out.push_back(thm5_excess_gen(in, StrongVariant::ConstantAlpha));
      out.push_back(thm5_excess_gen(in, StrongVariant::InverseNuT));
    }
  }
  return report;
}

BoundValue matched_stability_bound(const BoundInputs& in) {
  switch (in.convexity) {
    case Convexity::Convex:
      return thm1_stability(in);
    case Convexity::StronglyConvex:
      return thm2_stability(in, in.schedule.kind == ScheduleKind::InverseNuT ? StrongVariant::InverseNuT
                                                                               : StrongVariant::ConstantAlpha);
    case Convexity::Nonconvex:
      return thm3_stability(in);
  }
  return thm1_stability(in);
}

std::vector<double> matched_stability_series(const BoundInputs& in, const std::vector<std::int64_t>& horizons) {
  std::vector<double> out;
  out.reserve(horizons.size());
  if (!std::is_sorted(horizons.begin(), horizons.end())) throw ValidationError("horizons must be ascending");
  if (in.convexity != Convexity::Convex) {
    BoundInputs at = in;
    for (auto h : horizons) {
      at.T = h;
      out.push_back(matched_stability_bound(at).value);
    }
    return out;
  }
  // Same accumulation order as thm1_stability.
  in.validate();
  const double B2 = in.B * in.B;
  double alpha_sum = 0.0;
  double network = 0.0;
  double s = 0.0;
  std::int64_t t = 1;
  for (auto h : horizons) {
    if (h < 1) throw ValidationError("horizon must be positive");
    for (; t <= h - 1; ++t) {
      s = in.lambda * s + in.schedule.alpha(t - 1);
      const double a = in.schedule.alpha(t);
      alpha_sum += a;
      network += (1.0 + a * in.B) * s;
    }
    double value = 0.0;
    value += 2.0 * B2 * alpha_sum / in.mn();
    value += 4.0 * B2 * network * indicator(in.lambda != 0.0);
    out.push_back(value);
  }
  return out;
}

}  // namespace dsgd
