#include <doctest.h>

#include <cmath>
#include <random>

#include "bound_check.hpp"
#include "dsgd/bounds.hpp"
#include "dsgd/error.hpp"

using namespace dsgd;

namespace {

BoundInputs base_inputs() {
  BoundInputs in;
  in.B = 1.0;
  in.L = 1.0;
  in.nu = 0.1;
  in.lambda = 0.5;
  in.m = 10;
  in.n = 100;
  in.T = 1000;
  in.r = 1.0;
  in.schedule = StepSchedule::constant(0.01);
  in.c = 0.01;
  return in;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

bool has_warning(const BoundValue& v, const std::string& fragment) {
  for (const auto& w : v.warnings)
    if (w.find(fragment) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("every bound matches the high-precision oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& o : bound_check::run(seed, 10)) {
      CAPTURE(o.name);
      CHECK(o.worst_rel <= 1e-10);
    }
  }
}

TEST_CASE("c_lambda") {
  CHECK(c_lambda(0.0) == 0.0);
  const double e = std::exp(1.0);
  CHECK(c_lambda(1.0 / e) == doctest::Approx(1.0 + e / 16.0 * std::exp(-0.125) + 2.0 * e).epsilon(1e-13));
  CHECK(c_lambda(1.0 / e) == doctest::Approx(6.5865).epsilon(1e-4));
  for (double lam : {0.01, 0.2, 0.5, 0.77, 0.99}) {
    CHECK(rel(c_lambda(lam), static_cast<double>(oracle::c_lambda(oracle::Real(lam)))) < 1e-13);
  }
  CHECK_THROWS_AS(c_lambda(1.0), ValidationError);
  CHECK_THROWS_AS(c_lambda(-0.1), ValidationError);
}

TEST_CASE("c_lambda is not monotone in lambda") {
  CHECK(c_lambda(0.1) > c_lambda(0.5));
  CHECK(c_lambda(0.0) < c_lambda(0.5));
}

TEST_CASE("partial sums stay below c_lambda / t") {
  for (int k = 1; k <= 9; ++k) {
    const double lam = 0.1 * k;
    const double C = c_lambda(lam);
    double s = 0.0;  // sum_{j<t} lambda^{t-1-j} / (j+1)
    for (int t = 1; t <= 10000; ++t) {
      s = lam * s + 1.0 / t;
      if (s > C / t) FAIL("lambda " << lam << " t " << t);
    }
  }
}

TEST_CASE("m_of_t") {
  CHECK(m_of_t(StepSchedule::constant(0.1), 0.5, 4) == doctest::Approx(0.175).epsilon(1e-15));
  CHECK(m_of_t(StepSchedule::inverse_t(1.0), 0.0, 50) == 1.0);
  CHECK(m_of_t(StepSchedule::constant(0.3), 0.0, 50) == 0.3);
  for (double lam : {0.05, 0.3, 0.6, 0.95}) {
    CHECK(m_of_t(StepSchedule::inverse_t(1.0), lam, 2000) <= c_lambda(lam));
    CHECK(m_of_t(StepSchedule::constant(0.1), lam, 30) ==
          doctest::Approx(0.1 * (1 - std::pow(lam, 29)) / (1 - lam)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(m_of_t(StepSchedule::constant(0.1), 0.5, 1), ValidationError);
}

TEST_CASE("d_lambda") {
  CHECK(d_lambda(1.0, 0.1, 0.0, 10, 1.0, 1.0) == doctest::Approx(1.0 / (2 * 0.01)).epsilon(1e-15));
  oracle::BoundCase k;
  k.B = 1.0;
  k.nu = 0.1;
  k.lambda = 0.5;
  k.m = 10;
  k.L = 1.0;
  k.r = 1.0;
  CHECK(rel(d_lambda(1.0, 0.1, 0.5, 10, 1.0, 1.0), static_cast<double>(oracle::d_lambda(k))) < 1e-13);
  CHECK_THROWS_AS(d_lambda(1.0, 0.0, 0.5, 10, 1.0, 1.0), ValidationError);
}

TEST_CASE("theorem 1 hand values") {
  BoundInputs in = base_inputs();
  in.schedule = StepSchedule::constant(0.1);
  in.T = 4;
  in.m = 10;
  in.n = 10;
  in.L = 1.0;
  // inner sums 0.1, 0.15, 0.175
  const BoundValue v = thm1_stability(in);
  CHECK(v.term("sgd") == doctest::Approx(0.006).epsilon(1e-14));
  CHECK(v.term("network") == doctest::Approx(4.0 * 1.1 * 0.425).epsilon(1e-14));
  CHECK(v.value == doctest::Approx(1.876).epsilon(1e-14));
  CHECK(v.applicable);
}

TEST_CASE("lambda = 0 gives the centralized forms") {
  BoundInputs in = base_inputs();
  in.lambda = 0.0;
  in.schedule = StepSchedule::constant(0.25);
  in.T = 9;
  in.x0_dist = 0.5;
  const double B = in.B = 1.5;
  const double mn = in.mn();

  const BoundValue t1 = thm1_stability(in);
  CHECK(t1.value == 2 * B * B * 0.25 * 8 / mn);
  CHECK(t1.term("network") == 0.0);
  in.schedule = StepSchedule::inverse_t(1.0);
  double sum = 0.0;
  for (int t = 1; t <= 8; ++t) sum += 1.0 / (t + 1);
  CHECK(thm1_stability(in).value == doctest::Approx(2 * B * B * sum / mn).epsilon(1e-15));
  CHECK(thm1_stability(in).term("network") == 0.0);
  in.schedule = StepSchedule::constant(0.25);

  CHECK(thm2_stability(in, StrongVariant::ConstantAlpha).value == 2 * B * B / (mn * in.nu));
  in.schedule = StepSchedule::inverse_nu_t(in.nu);
  CHECK(thm2_stability(in, StrongVariant::InverseNuT).value == 2 * B * B / (mn * in.nu));

  in.schedule = StepSchedule::constant(0.25);
  const BoundValue l3 = lemma3_opt_error(in);
  CHECK(l3.value == doctest::Approx(0.25 / (0.25 * 8) + 2 * B * B * 0.25 / in.m + 8 * in.L * in.r * B * 0.25).epsilon(1e-15));
  CHECK(l3.term("consensus") == 0.0);

  CHECK(d_lambda(B, in.nu, 0.0, in.m, in.L, in.r) == B * B / (2 * in.nu * in.nu));
  CHECK(lemma4_opt_error(in, OptVariant::ConstantAlpha).term("network") == 0.0);

  // C_lambda = 0 leaves only the sgd-scale part of theorem 3
  in.n = 100000000000;
  in.m = 10;
  in.schedule = StepSchedule::inverse_t(0.01);
  CHECK(thm3_stability(in).value < 1e-9);
}

TEST_CASE("proposition 1 keeps its network term at lambda = 0") {
  BoundInputs in = base_inputs();
  in.lambda = 0.0;
  const BoundValue v = prop1_ave_stability(in, AveVariant::ConstantAlpha);
  CHECK(v.term("network") == doctest::Approx(4 * 0.01 * 1.01 * 999).epsilon(1e-14));

  in.schedule = StepSchedule::inverse_t(1.0);
  in.n = 100000000;
  const double limit = 4.0 * 2.0 / std::log(1001.0);
  CHECK(prop1_ave_stability(in, AveVariant::InverseT).value == doctest::Approx(limit).epsilon(1e-6));
}

TEST_CASE("theorem 2 plug-in value") {
  BoundInputs in = base_inputs();
  in.lambda = 0.0;
  in.m = 10;
  in.n = 100;
  in.nu = 0.1;
  CHECK(thm2_stability(in, StrongVariant::ConstantAlpha).value == doctest::Approx(0.02).epsilon(1e-15));
}

TEST_CASE("B = 0 kills the stability bounds") {
  BoundInputs in = base_inputs();
  in.B = 0.0;
  CHECK(thm1_stability(in).value == 0.0);
  CHECK(prop1_ave_stability(in, AveVariant::ConstantAlpha).value == 0.0);
  CHECK(thm2_stability(in, StrongVariant::ConstantAlpha).value == 0.0);
  in.schedule = StepSchedule::inverse_t(1.0);
  CHECK(prop1_ave_stability(in, AveVariant::InverseT).value == 0.0);

  in.schedule = StepSchedule::constant(0.01);
  const BoundValue t4 = thm4_excess_gen(in, AveVariant::ConstantAlpha);
  CHECK(t4.value == doctest::Approx(4.0 / (999 * 0.01)).epsilon(1e-15));
  in.schedule = StepSchedule::inverse_t(1.0);
  CHECK(thm4_excess_gen(in, AveVariant::InverseT).value == doctest::Approx(4.0 / std::log(1001.0)).epsilon(1e-15));

  in.x0_dist = 0.0;
  in.schedule = StepSchedule::constant(0.01);
  CHECK(lemma3_opt_error(in).value == 0.0);
}

TEST_CASE("excess bounds decompose into their cited pieces") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    oracle::BoundCase k = bound_check::random_case(rng);
    k.step = oracle::Step::Constant;
    BoundInputs in = bound_check::inputs_of(k);

    const BoundValue p1 = prop1_ave_stability(in, AveVariant::ConstantAlpha);
    const BoundValue t4 = thm4_excess_gen(in, AveVariant::ConstantAlpha);
    CHECK(t4.term("stability_sgd") == p1.term("sgd"));
    CHECK(t4.term("stability_network") == p1.term("network"));
    double sum = 0.0;
    for (const auto& t : t4.terms) sum += t.value;
    CHECK(t4.value == sum);

    in.x0_dist = 2.0 * in.r;
    const BoundValue t2 = thm2_stability(in, StrongVariant::ConstantAlpha);
    const BoundValue l4 = lemma4_opt_error(in, OptVariant::ConstantAlpha);
    const BoundValue t5 = thm5_excess_gen(in, StrongVariant::ConstantAlpha);
    CHECK(std::abs(t5.value - (t2.value + in.B * std::sqrt(l4.value))) <= 1e-12 * t5.value);

    in.schedule = StepSchedule::inverse_nu_t(in.nu);
    const BoundValue t2i = thm2_stability(in, StrongVariant::InverseNuT);
    const BoundValue t5i = thm5_excess_gen(in, StrongVariant::InverseNuT);
    CHECK(std::abs(t5i.term("stability_sgd") + t5i.term("stability_network") - t2i.value) <= 1e-12 * t2i.value);
    // the printed 2-nu schedule bound of lemma 4 with x0 = 2r
    BoundInputs l4in = in;
    l4in.schedule = StepSchedule::inverse_two_nu_t(in.nu);
    const BoundValue l4i = lemma4_opt_error(l4in, OptVariant::InverseTwoNuT);
    CHECK(std::abs(t5i.term("optimization") - in.B * std::sqrt(l4i.value)) <= 1e-12 * t5i.value);

    in.schedule = StepSchedule::inverse_t(1.0);
    const BoundValue p1i = prop1_ave_stability(in, AveVariant::InverseT);
    const BoundValue t4i = thm4_excess_gen(in, AveVariant::InverseT);
    CHECK(t4i.term("stability_sgd") == p1i.term("sgd"));
    CHECK(t4i.term("stability_network") == p1i.term("network"));
  }
}

TEST_CASE("bounds without C_lambda are nondecreasing in lambda") {
  BoundInputs in = base_inputs();
  in.T = 200;
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back((1.0 - 1e-6) * i / 100.0);
  auto scan = [&](const char* name, auto eval) {
    double prev = -1.0;
    for (double lam : grid) {
      in.lambda = lam;
      const double v = eval(in);
      CAPTURE(name);
      CAPTURE(lam);
      CHECK(v >= prev);
      prev = v;
    }
  };
  scan("thm1", [](const BoundInputs& x) { return thm1_stability(x).value; });
  scan("prop1", [](const BoundInputs& x) { return prop1_ave_stability(x, AveVariant::ConstantAlpha).value; });
  scan("thm2", [](const BoundInputs& x) { return thm2_stability(x, StrongVariant::ConstantAlpha).value; });
  scan("lemma3", [](const BoundInputs& x) { return lemma3_opt_error(x).value; });
  scan("lemma4", [](const BoundInputs& x) { return lemma4_opt_error(x, OptVariant::ConstantAlpha).value; });
  scan("thm4", [](const BoundInputs& x) { return thm4_excess_gen(x, AveVariant::ConstantAlpha).value; });
  scan("thm5", [](const BoundInputs& x) { return thm5_excess_gen(x, StrongVariant::ConstantAlpha).value; });
  in.schedule = StepSchedule::inverse_nu_t(in.nu);
  scan("thm2 inverse", [](const BoundInputs& x) { return thm2_stability(x, StrongVariant::InverseNuT).value; });
  in.schedule = StepSchedule::inverse_t(1.0);
  scan("thm1 inverse", [](const BoundInputs& x) { return thm1_stability(x).value; });
  scan("prop1 inverse", [](const BoundInputs& x) { return prop1_ave_stability(x, AveVariant::InverseT).value; });
}

TEST_CASE("behaviour in T") {
  BoundInputs in = base_inputs();
  double prev = -1.0;
  const double t2 = thm2_stability(in, StrongVariant::ConstantAlpha).value;
  for (std::int64_t T : {1, 2, 5, 50, 500, 5000}) {
    in.T = T;
    const double v = thm1_stability(in).value;
    CHECK(v >= prev);
    prev = v;
    CHECK(thm2_stability(in, StrongVariant::ConstantAlpha).value == t2);
  }
  in.schedule = StepSchedule::inverse_two_nu_t(in.nu);
  in.T = 100000000;
  CHECK(lemma4_opt_error(in, OptVariant::InverseTwoNuT).value < 1e-2);
}

TEST_CASE("theorem 3 reports its exponent and oracle value") {
  BoundInputs in = base_inputs();
  in.c = 0.01;
  in.L = 1.0;
  in.T = 10000;
  in.m = 10;
  in.n = 100;
  in.schedule = StepSchedule::inverse_t(0.01);
  const BoundValue v = thm3_stability(in);
  CHECK(v.extras.at(0).value == doctest::Approx(0.01 / 1.01).epsilon(1e-15));
  oracle::BoundCase k;
  k.c = 0.01;
  k.L = 1.0;
  k.B = 1.0;
  k.T = 10000;
  k.m = 10;
  k.n = 100;
  k.lambda = 0.5;
  CHECK(rel(v.value, static_cast<double>(oracle::thm3(k))) < 1e-12);
  CHECK(has_warning(v, "loss supremum unknown"));
  CHECK(v.applicable);

  in.schedule = StepSchedule::constant(0.01);
  CHECK_FALSE(thm3_stability(in).applicable);
  in.c = 0.0;
  CHECK_THROWS_AS(thm3_stability(in), ValidationError);
}

TEST_CASE("applicability flags and warnings") {
  BoundInputs in = base_inputs();
  in.schedule = StepSchedule::constant(3.0);
  CHECK_FALSE(thm1_stability(in).applicable);
  in.schedule = StepSchedule::constant(1.5);
  CHECK(thm1_stability(in).applicable);
  CHECK_FALSE(thm2_stability(in, StrongVariant::ConstantAlpha).applicable);

  in.schedule = StepSchedule::constant(0.01);
  in.convexity = Convexity::Nonconvex;
  CHECK_FALSE(thm1_stability(in).applicable);
  CHECK_FALSE(thm2_stability(in, StrongVariant::ConstantAlpha).applicable);
  in.convexity = Convexity::Convex;
  CHECK_FALSE(thm2_stability(in, StrongVariant::ConstantAlpha).applicable);
  in.convexity = Convexity::StronglyConvex;
  CHECK(thm2_stability(in, StrongVariant::ConstantAlpha).applicable);

  // lemma 4 contracts only when 2 alpha nu < 1
  in.lambda = 0.0;
  in.nu = 0.5;
  in.schedule = StepSchedule::constant(0.9);
  CHECK(lemma4_opt_error(in, OptVariant::ConstantAlpha).applicable);
  in.schedule = StepSchedule::constant(1.0);
  CHECK_FALSE(lemma4_opt_error(in, OptVariant::ConstantAlpha).applicable);

  in = base_inputs();
  in.lambda = 1.0 - 1e-7;
  CHECK(has_warning(thm2_stability(in, StrongVariant::ConstantAlpha), "near-singular"));
  in.certified = false;
  CHECK(has_warning(thm1_stability(in), "heuristic"));
  in.schedule = StepSchedule::inverse_t(2.0);
  CHECK_FALSE(prop1_ave_stability(in, AveVariant::InverseT).applicable);
  CHECK_FALSE(prop1_ave_stability(in, AveVariant::ConstantAlpha).applicable);

  in = base_inputs();
  in.lambda = 1.0;
  CHECK_THROWS_AS(thm1_stability(in), ValidationError);
  in = base_inputs();
  in.nu = 0.0;
  CHECK_THROWS_AS(thm2_stability(in, StrongVariant::ConstantAlpha), ValidationError);
  in = base_inputs();
  in.T = 1;
  CHECK_THROWS_AS(lemma3_opt_error(in), ValidationError);
  in.m = 0;
  CHECK_THROWS_AS(thm1_stability(in), ValidationError);
}

TEST_CASE("evaluate_all skips what the inputs cannot support") {
  BoundInputs in = base_inputs();
  CHECK(evaluate_all(in).bounds.size() == 13);
  in.nu = 0.0;
  const BoundReport r = evaluate_all(in);
  CHECK(r.bounds.size() == 7);
  CHECK(r.find("thm2_stability") == nullptr);
  CHECK(r.find("prop1_ave_stability", "inverse-t") != nullptr);
  in.T = 1;
  CHECK(evaluate_all(in).bounds.size() == 4);
  for (const auto& b : evaluate_all(base_inputs()).bounds) {
    CHECK(std::isfinite(b.value));
    CHECK(b.value >= 0.0);
  }
}

TEST_CASE("matched series equals individual calls") {
  const std::vector<std::int64_t> horizons{1, 2, 3, 10, 11, 250, 1000};
  for (auto conv : {Convexity::Convex, Convexity::StronglyConvex, Convexity::Nonconvex}) {
    for (auto sched : {StepSchedule::constant(0.05), StepSchedule::inverse_t(0.5), StepSchedule::inverse_nu_t(0.1)}) {
      BoundInputs in = base_inputs();
      in.convexity = conv;
      in.schedule = sched;
      const auto series = matched_stability_series(in, horizons);
      REQUIRE(series.size() == horizons.size());
      for (size_t i = 0; i < horizons.size(); ++i) {
        BoundInputs at = in;
        at.T = horizons[i];
        CHECK(series[i] == matched_stability_bound(at).value);
      }
    }
  }
  BoundInputs in = base_inputs();
  CHECK(matched_stability_bound(in).name == "thm1_stability");
  in.convexity = Convexity::StronglyConvex;
  CHECK(matched_stability_bound(in).variant == "constant");
  in.schedule = StepSchedule::inverse_nu_t(0.1);
  CHECK(matched_stability_bound(in).variant == "inverse-nu-t");
  in.convexity = Convexity::Nonconvex;
  CHECK(matched_stability_bound(in).name == "thm3_stability");
  CHECK_THROWS_AS(matched_stability_series(in, {5, 3}), ValidationError);
}
