#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "resmc/estimators.hpp"
#include "resmc/model.hpp"
#include "resmc/parse.hpp"
#include "resmc/property.hpp"
#include "resmc/rng.hpp"
#include "resmc/simulate.hpp"
#include "test_helpers.hpp"

using namespace resmc;

namespace {

ParamVector random_lambda(SplitMix64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = std::exp(-2.0 + 4.0 * rng.uniform01());
  return ParamVector(std::move(v));
}

}  // namespace

TEST_CASE("crude Monte Carlo on the two-command model", "[estimators]") {
  Model m = testutil::load_model("tiny-t1.gcm");
  PropPtr p = parse_property("F x = 2", m);
  EstimateResult r = mc_estimate(m, p, 100000, 20240817);
  CHECK(r.n == 100000);
  CHECK(r.gamma_hat == static_cast<double>(r.hits) / 100000.0);
  CHECK(r.gamma_hat == Catch::Approx(0.75).margin(0.005));
  CHECK(r.undecided == 0);
  // The variance comes from the closed form, not a second pass.
  const double n = 100000.0;
  CHECK(r.sample_variance ==
        r.gamma_hat * (1.0 - r.gamma_hat) * n / (n - 1.0));
  CHECK(r.relative_error_proxy ==
        Catch::Approx(std::sqrt(r.sample_variance / n) / r.gamma_hat));
}

TEST_CASE("degenerate properties give exact endpoints", "[estimators]") {
  Model m = testutil::load_model("tiny-t1.gcm");

  EstimateResult sure = mc_estimate(m, parse_property("F x >= 0", m), 500, 7);
  CHECK(sure.gamma_hat == 1.0);
  CHECK(sure.hits == 500);
  CHECK(sure.sample_variance == 0.0);
  CHECK(sure.relative_error_proxy == 0.0);

  EstimateResult never =
      mc_estimate(m, parse_property("F (x = 1 & x = 2)", m), 500, 7);
  CHECK(never.gamma_hat == 0.0);
  CHECK(never.hits == 0);
  CHECK(never.relative_error_proxy ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("importance sampling stays unbiased under tilting", "[estimators]") {
  Model m = testutil::load_model("tiny-t1.gcm");
  PropPtr p = parse_property("F x = 2", m);
  EstimateResult r =
      is_estimate(m, ParamVector({3.0, 1.0}), p, 100000, 31337);
  CHECK(r.gamma_hat == Catch::Approx(0.75).margin(0.01));
  CHECK(r.n == 100000);
  // Hits land with probability 1/2 and weight 3/2 under this tilting.
  CHECK(static_cast<double>(r.hits) ==
        Catch::Approx(50000.0).margin(1000.0));
}

TEST_CASE("sampling at the untilted parameters reduces to Monte Carlo",
          "[estimators]") {
  Model m = testutil::load_model("tiny-t1.gcm");
  PropPtr p = parse_property("F x = 2", m);
  const std::uint64_t n = 100000;
  EstimateResult r =
      is_estimate(m, ParamVector::ones(2), p, n, 555);
  // Every weight is exactly one, so the sample variance must match the
  // Bernoulli identity at gamma_hat and sit near the true value 3/16.
  const double nn = static_cast<double>(n);
  CHECK(r.sample_variance ==
        Catch::Approx(r.gamma_hat * (1.0 - r.gamma_hat) * nn / (nn - 1.0))
            .epsilon(1e-12));
  CHECK(r.sample_variance == Catch::Approx(0.75 * 0.25).epsilon(0.05));
}

TEST_CASE("weighted estimates are exact over enumerated paths", "[estimators]") {
  SplitMix64 rng(0xb1a5u);
  Model t1 = testutil::load_model("tiny-t1.gcm");
  PropPtr t1_prop = parse_property("F x = 2", t1);

  std::vector<std::pair<Model, PropPtr>> cases;
  cases.emplace_back(t1, t1_prop);
  for (int i = 0; i < 2; ++i) {
    Model m = testutil::random_terminating_model(rng);
    PropPtr p = testutil::random_reach_property(rng, m);
    cases.emplace_back(std::move(m), std::move(p));
  }

  for (const auto& [model, property] : cases) {
    const ParamVector mu = ParamVector::ones(model.num_commands());
    std::vector<int> cmds;
    testutil::PathTotals base;
    testutil::enumerate_paths(model, mu, mu, property, model.initial_state(),
                              cmds, base);
    REQUIRE(base.tilted_mass == Catch::Approx(1.0).margin(1e-10));

    for (int round = 0; round < 20; ++round) {
      ParamVector lambda = random_lambda(rng, model.num_commands());
      testutil::PathTotals tilted;
      testutil::enumerate_paths(model, lambda, mu, property,
                                model.initial_state(), cmds, tilted);
      REQUIRE(tilted.tilted_mass == Catch::Approx(1.0).margin(1e-10));
      // E_lambda[L z] recovers the untilted probability exactly.
      REQUIRE(tilted.weighted == Catch::Approx(base.gamma).margin(1e-9));
    }
  }
}

TEST_CASE("crude and weighted confidence intervals overlap on a rare event",
          "[estimators]") {
  Model m = testutil::load_model("repair-small.gcm");
  PropPtr p = parse_property("X ((!init) U failure)", m);

  EstimateResult mc = mc_estimate(m, p, 200000, 2024);
  EstimateResult is =
      is_estimate(m, ParamVector({20.0, 0.05}), p, 20000, 2024);

  REQUIRE(mc.hits > 0);
  REQUIRE(is.hits > 0);
  const double half_mc =
      1.96 * std::sqrt(mc.sample_variance / static_cast<double>(mc.n));
  const double half_is =
      1.96 * std::sqrt(is.sample_variance / static_cast<double>(is.n));
  CHECK(std::abs(mc.gamma_hat - is.gamma_hat) <= half_mc + half_is);

  // Both straddle the exact value 1/411.
  const double exact = 1.0 / 411.0;
  CHECK(std::abs(mc.gamma_hat - exact) <= half_mc);
  CHECK(std::abs(is.gamma_hat - exact) <= half_is);
}

TEST_CASE("summary reuse matches the partial accumulator", "[estimators]") {
  Model m = testutil::load_model("tiny-t1.gcm");
  PropPtr p = parse_property("F x = 2", m);
  ParamVector lambda(std::vector<double>{2.0, 0.5});
  auto summaries = simulate_batch_collect(
      m, lambda, p, 33, stream_id(RngPhase::kFinalEstimate, 0), 4000, 100, 1);
  EstimateResult from_summaries = estimate_from_summaries(summaries);
  EstimateResult direct = is_estimate(m, lambda, p, 4000, 33, 100);
  CHECK(from_summaries.hits == direct.hits);
  CHECK(from_summaries.undecided == direct.undecided);
  // Chunked reduction may round differently in the last bits, nothing more.
  CHECK(from_summaries.gamma_hat ==
        Catch::Approx(direct.gamma_hat).epsilon(1e-14));
  CHECK(from_summaries.sample_variance ==
        Catch::Approx(direct.sample_variance).epsilon(1e-12));
}

TEST_CASE("step-capped traces are counted, not hidden", "[estimators]") {
  Model m = testutil::load_model("repair-small.gcm");
  PropPtr p = parse_property("X ((!init) U failure)", m);
  EstimateResult r = is_estimate(m, ParamVector::ones(2), p, 200, 11, 1);
  // A one-step budget leaves every trace open at the cap.
  CHECK(r.undecided == 200);
  CHECK(r.gamma_hat == 0.0);
}

TEST_CASE("huge likelihood ratios fall back to extended precision",
          "[estimators]") {
  std::vector<TraceSummary> summaries(3);
  summaries[0].z = 1;
  summaries[0].log_l = 705.0;  // exp() overflows double, not long double
  summaries[1].z = 1;
  summaries[1].log_l = 0.0;
  summaries[2].z = 0;
  EstimateResult r = estimate_from_summaries(summaries);
  CHECK(std::isfinite(r.gamma_hat));
  CHECK(r.gamma_hat > 1.0);
  REQUIRE(r.warnings.size() >= 2);
  bool precision_note = false;
  bool poor_fit_note = false;
  for (const auto& w : r.warnings) {
    if (w.find("extended precision") != std::string::npos) {
      precision_note = true;
    }
    if (w.find("exceeds 1") != std::string::npos) poor_fit_note = true;
  }
  CHECK(precision_note);
  CHECK(poor_fit_note);

  // Past the double range entirely, the mean degrades to inf with a warning.
  summaries[0].log_l = 800.0;
  EstimateResult inf_r = estimate_from_summaries(summaries);
  CHECK(std::isinf(inf_r.gamma_hat));
  bool degraded_note = false;
  for (const auto& w : inf_r.warnings) {
    if (w.find("even extended precision") != std::string::npos) {
      degraded_note = true;
    }
  }
  CHECK(degraded_note);
}

TEST_CASE("worst-case sample sizes match the closed form", "[estimators]") {
  CHECK(chernoff_sample_size(0.01, 0.05) == 18445);
  CHECK(chernoff_sample_size(0.1, 0.1) == 150);
  // ceil(ln(2/0.99) / (2 * 0.81)) = 1: the clamp keeps n positive.
  CHECK(chernoff_sample_size(0.9, 0.99) == 1);

  CHECK_THROWS_AS(chernoff_sample_size(0.0, 0.05), std::domain_error);
  CHECK_THROWS_AS(chernoff_sample_size(1.0, 0.05), std::domain_error);
  CHECK_THROWS_AS(chernoff_sample_size(0.1, 0.0), std::domain_error);
  CHECK_THROWS_AS(chernoff_sample_size(0.1, 1.0), std::domain_error);
}

TEST_CASE("variance reduction reports and degenerate cases", "[estimators]") {
  EstimateResult is;
  is.gamma_hat = 1e-3;
  is.sample_variance = 1e-10;
  VarianceReduction vr = variance_reduction_report(1e-3, is);
  CHECK(vr.ratio == Catch::Approx(1e-3 * (1.0 - 1e-3) / 1e-10));
  CHECK(vr.warnings.empty());

  EstimateResult zero;
  zero.gamma_hat = 0.5;
  zero.sample_variance = 0.0;
  VarianceReduction degenerate = variance_reduction_report(0.5, zero);
  CHECK(degenerate.ratio == std::numeric_limits<double>::infinity());
  REQUIRE_FALSE(degenerate.warnings.empty());

  EstimateResult mc;
  mc.gamma_hat = 1e-3;
  VarianceReduction from_mc = variance_reduction_report(mc, is);
  CHECK(from_mc.ratio == vr.ratio);
}

TEST_CASE("estimators validate their sample counts", "[estimators]") {
  Model m = testutil::load_model("tiny-t1.gcm");
  PropPtr p = parse_property("F x = 2", m);
  CHECK_THROWS_AS(mc_estimate(m, p, 0, 1), std::domain_error);
  CHECK_THROWS_AS(is_estimate(m, ParamVector::ones(2), p, 0, 1),
                  std::domain_error);
}
