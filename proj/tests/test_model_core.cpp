#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "resmc/model.hpp"
#include "resmc/parse.hpp"
#include "resmc/rng.hpp"
#include "test_helpers.hpp"

using namespace resmc;

namespace {

Model load(const std::string& name) {
  return parse_model(testutil::read_model(name));
}

}  // namespace

TEST_CASE("rate evaluation on the two-command model", "[model]") {
  Model m = load("tiny-t1.gcm");
  REQUIRE(m.num_commands() == 2);

  State s0 = m.initial_state();
  REQUIRE(s0.values == std::vector<std::int64_t>{0});
  CHECK(evaluate_rates(m, s0) == std::vector<double>{1.0, 3.0});

  CHECK(evaluate_rates(m, State{{1}}) == std::vector<double>{0.0, 0.0});
  CHECK(evaluate_rates(m, State{{2}}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("mass-action rates in the chemical model's initial state", "[model]") {
  Model m = load("chemical.gcm");
  State s0 = m.initial_state();
  auto rates = evaluate_rates(m, s0);
  REQUIRE(rates.size() == 3);
  // r1 fires at A*B; the recompute below keeps the value honest.
  const double a = static_cast<double>(s0.values[0]);
  const double b = static_cast<double>(s0.values[1]);
  CHECK(rates[0] == a * b);
  CHECK(rates[0] == 1000000.0);
  CHECK(rates[1] == 0.0);
  CHECK(rates[2] == 0.0);
}

TEST_CASE("transition distribution matches hand arithmetic", "[model]") {
  std::vector<double> rates{1.0, 3.0};

  auto p1 = transition_distribution(rates, ParamVector::ones(2));
  REQUIRE(p1.has_value());
  CHECK((*p1)[0] == Catch::Approx(0.25).margin(1e-15));
  CHECK((*p1)[1] == Catch::Approx(0.75).margin(1e-15));

  auto p2 = transition_distribution(rates, ParamVector({3.0, 1.0}));
  REQUIRE(p2.has_value());
  CHECK((*p2)[0] == Catch::Approx(0.5).margin(1e-15));
  CHECK((*p2)[1] == Catch::Approx(0.5).margin(1e-15));

  auto p3 = transition_distribution(rates, ParamVector({2.0, 2.0}));
  REQUIRE(p3.has_value());
  CHECK((*p3)[0] == Catch::Approx(0.25).margin(1e-15));
  CHECK((*p3)[1] == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("transition distribution signals deadlock as empty", "[model]") {
  const std::vector<double> dead{0.0, 0.0};
  CHECK_FALSE(transition_distribution(dead, ParamVector::ones(2)));
  // A positive rate with zero multiplier still counts as disabled mass.
  const std::vector<double> masked{5.0, 0.0};
  CHECK_FALSE(transition_distribution(masked, ParamVector({0.0, 1.0})));
}

TEST_CASE("transition distribution sums to one and ignores scaling", "[model]") {
  SplitMix64 rng(0x5eedu);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.next() % 6);
    std::vector<double> rates(n);
    ParamVector lambda(std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
      rates[k] = rng.next() % 4 == 0 ? 0.0 : 10.0 * rng.uniform01();
      lambda[k] = 0.01 + 10.0 * rng.uniform01();
    }
    auto base = transition_distribution(rates, lambda);
    double total = 0.0;
    for (double r : rates) total += r;
    if (total == 0.0) {
      CHECK_FALSE(base);
      continue;
    }
    REQUIRE(base.has_value());

    double sum = 0.0;
    for (double p : *base) sum += p;
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));

    const double c = 0.001 + 100.0 * rng.uniform01();
    ParamVector scaled = lambda;
    for (std::size_t k = 0; k < n; ++k) scaled[k] *= c;
    auto rescaled = transition_distribution(rates, scaled);
    REQUIRE(rescaled.has_value());
    for (std::size_t k = 0; k < n; ++k) {
      CHECK((*rescaled)[k] == Catch::Approx((*base)[k]).margin(1e-12));
      if (rates[k] == 0.0) CHECK((*base)[k] == 0.0);
    }
  }
}

TEST_CASE("command application uses pre-state values", "[model]") {
  Model m = load("tiny-t1.gcm");
  State next = apply_command(m, m.initial_state(), 1);
  CHECK(next.values == std::vector<std::int64_t>{2});

  Model chem = load("chemical.gcm");
  State after = apply_command(chem, chem.initial_state(), 0);
  CHECK(after.values == std::vector<std::int64_t>{999, 999, 1, 0, 0});

  // Swap uses both right-hand sides against the old state.
  Model swap = parse_model(
      "var a : [0..9] init 2;\n"
      "var b : [0..9] init 7;\n"
      "[sw] a >= 0 -> 1 : a' = b, b' = a;\n");
  State swapped = apply_command(swap, swap.initial_state(), 0);
  CHECK(swapped.values == std::vector<std::int64_t>{7, 2});
}

TEST_CASE("failure and repair commands move one unit of a component type",
          "[model]") {
  Model m = load("repair.gcm");
  const int fail3 = [&] {
    for (std::size_t k = 0; k < m.num_commands(); ++k)
      if (m.commands[k].name == "fail3") return static_cast<int>(k);
    return -1;
  }();
  REQUIRE(fail3 >= 0);

  State all_working = m.initial_state();
  State one_down = apply_command(m, all_working, fail3);
  // f3 counts failed units, so a failure raises it; every other count holds.
  CHECK(one_down.values[2] == all_working.values[2] + 1);
  for (std::size_t i = 0; i < one_down.values.size(); ++i) {
    if (i != 2) CHECK(one_down.values[i] == all_working.values[i]);
  }
}

TEST_CASE("rate and update errors carry command and state context", "[model]") {
  Model bad_rate = parse_model(
      "var y : [0..3] init 0;\n"
      "[neg] y >= 0 -> y - 1 : y' = y + 1;\n");
  CHECK_THROWS_AS(evaluate_rates(bad_rate, State{{0}}), ModelError);
  CHECK_THROWS_WITH(evaluate_rates(bad_rate, State{{0}}),
                    Catch::Matchers::ContainsSubstring("neg") &&
                        Catch::Matchers::ContainsSubstring("y=0"));
  // Guard masks the negative rate, so later states evaluate fine.
  CHECK(evaluate_rates(bad_rate, State{{1}}) == std::vector<double>{0.0});

  Model div = parse_model(
      "var y : [0..3] init 0;\n"
      "[d] y >= 0 -> 1 / y : y' = y + 1;\n");
  CHECK_THROWS_AS(evaluate_rates(div, State{{0}}), ModelError);
  CHECK(evaluate_rates(div, State{{2}}) == std::vector<double>{0.5});

  Model bounded = parse_model(
      "var y : [0..1] init 0;\n"
      "[inc] y >= 0 -> 1 : y' = y + 1;\n");
  State mid = apply_command(bounded, bounded.initial_state(), 0);
  CHECK(mid.values == std::vector<std::int64_t>{1});
  CHECK_THROWS_AS(apply_command(bounded, mid, 0), ModelError);
  CHECK_THROWS_WITH(apply_command(bounded, mid, 0),
                    Catch::Matchers::ContainsSubstring("inc") &&
                        Catch::Matchers::ContainsSubstring("[0, 1]"));

  Model frac = parse_model(
      "var y : [0..4] init 1;\n"
      "[half] y >= 0 -> 1 : y' = y / 2;\n");
  CHECK_THROWS_AS(apply_command(frac, frac.initial_state(), 0), ModelError);
  CHECK(apply_command(frac, State{{4}}, 0).values ==
        std::vector<std::int64_t>{2});
}

TEST_CASE("parameter vector helpers", "[model]") {
  ParamVector mu = ParamVector::ones(4);
  CHECK(mu.size() == 4);
  CHECK(mu.sum() == 4.0);
  mu[2] = 0.5;
  CHECK(mu.sum() == 3.5);
  CHECK(mu[2] == 0.5);
}
