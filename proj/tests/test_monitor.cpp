#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "resmc/model.hpp"
#include "resmc/monitor.hpp"
#include "resmc/parse.hpp"
#include "resmc/property.hpp"
#include "resmc/rng.hpp"
#include "test_helpers.hpp"

using namespace resmc;

namespace {

// Whole-trace reference semantics. Position tr.size() is the empty suffix:
// atoms, X and U are false there, negation and the connectives compose.
bool naive_holds(const PropPtr& p, const Model& m,
                 const std::vector<State>& tr, std::size_t i) {
  switch (p->kind) {
    case PropKind::kTrue:
      return true;
    case PropKind::kFalse:
      return false;
    case PropKind::kVarAtom:
    case PropKind::kLabelAtom:
      return i < tr.size() && eval_state_pred(p, m, tr[i]);
    case PropKind::kNot:
      return !naive_holds(p->left, m, tr, i);
    case PropKind::kAnd:
      return naive_holds(p->left, m, tr, i) && naive_holds(p->right, m, tr, i);
    case PropKind::kOr:
      return naive_holds(p->left, m, tr, i) || naive_holds(p->right, m, tr, i);
    case PropKind::kNext:
      return i < tr.size() && naive_holds(p->left, m, tr, i + 1);
    case PropKind::kUntil:
      if (i >= tr.size()) return false;
      return naive_holds(p->right, m, tr, i) ||
             (naive_holds(p->left, m, tr, i) &&
              naive_holds(p, m, tr, i + 1));
  }
  return false;
}

// Runs the monitor over the whole trace and finalizes at the end.
Verdict run_monitor(const PropPtr& p, const Model& m,
                    const std::vector<State>& tr) {
  Monitor mon(p, m);
  for (const auto& s : tr) mon.step(s);
  return mon.finalize();
}

Model walk_model() {
  // One counter walking 0..4; rich enough for every atom shape below.
  return parse_model(
      "var x : [0..4] init 0;\n"
      "label low = x < 2;\n"
      "label top = x = 4;\n"
      "[up] x < 4 -> 1 : x' = x + 1;\n"
      "[down] x > 0 -> 1 : x' = x - 1;\n");
}

std::vector<State> to_trace(std::initializer_list<std::int64_t> xs) {
  std::vector<State> tr;
  for (auto v : xs) tr.push_back(State{{v}});
  return tr;
}

// Random property over the walk model, depth-bounded.
PropPtr random_prop(SplitMix64& rng, int depth) {
  const std::uint64_t pick = rng.next() % (depth > 0 ? 8 : 3);
  switch (pick) {
    case 0: {
      static const CmpOp ops[] = {CmpOp::kLt, CmpOp::kLe, CmpOp::kEq,
                                  CmpOp::kGe, CmpOp::kGt, CmpOp::kNe};
      return prop::var_atom(0, ops[rng.next() % 6],
                            static_cast<std::int64_t>(rng.next() % 5));
    }
    case 1:
      return prop::label_atom(static_cast<int>(rng.next() % 2));
    case 2:
      return rng.next() % 2 ? prop::constant(true) : prop::constant(false);
    case 3:
      return prop::negation(random_prop(rng, depth - 1));
    case 4:
      return prop::conjunction(random_prop(rng, depth - 1),
                               random_prop(rng, depth - 1));
    case 5:
      return prop::disjunction(random_prop(rng, depth - 1),
                               random_prop(rng, depth - 1));
    case 6:
      return prop::next(random_prop(rng, depth - 1));
    default:
      return prop::until(random_prop(rng, depth - 1),
                         random_prop(rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("initial step can already decide", "[monitor]") {
  Model m = testutil::load_model("tiny-t1.gcm");

  Monitor hit(parse_property("F x >= 0", m), m);
  hit.step(m.initial_state());
  CHECK(hit.verdict() == Verdict::kTrue);
  CHECK(hit.decided());

  Monitor open(parse_property("F x = 2", m), m);
  open.step(m.initial_state());
  CHECK(open.verdict() == Verdict::kUndecided);
  CHECK_FALSE(open.decided());
}

TEST_CASE("next defers one step on the repair shape", "[monitor]") {
  Model m = testutil::load_model("repair.gcm");
  PropPtr p = parse_property("X ((!init) U failure)", m);
  Monitor mon(p, m);
  mon.step(m.initial_state());
  CHECK(mon.verdict() == Verdict::kUndecided);
}

TEST_CASE("eventually decides exactly when the atom first holds", "[monitor]") {
  Model m = testutil::load_model("tiny-t1.gcm");
  PropPtr p = parse_property("F x = 2", m);

  Monitor hit(p, m);
  hit.step(State{{0}});
  REQUIRE(hit.verdict() == Verdict::kUndecided);
  hit.step(State{{2}});
  CHECK(hit.verdict() == Verdict::kTrue);

  // Absorbing miss stays open until finalized; the closure decides False.
  Monitor miss(p, m);
  miss.step(State{{0}});
  miss.step(State{{1}});
  CHECK(miss.verdict() == Verdict::kUndecided);
  CHECK(miss.finalize() == Verdict::kFalse);
  CHECK(miss.verdict() == Verdict::kFalse);
}

TEST_CASE("until fails when the left operand breaks first", "[monitor]") {
  Model m = testutil::load_model("repair-1x2.gcm");
  PropPtr p = parse_property("X ((!init) U failure)", m);

  // fail, repair: back to the init region before failure, hence False.
  Monitor mon(p, m);
  mon.step(State{{0}});
  mon.step(State{{1}});
  REQUIRE(mon.verdict() == Verdict::kUndecided);
  mon.step(State{{0}});
  CHECK(mon.verdict() == Verdict::kFalse);

  // fail, fail: reaches the failure level, hence True.
  Monitor ok(p, m);
  ok.step(State{{0}});
  ok.step(State{{1}});
  ok.step(State{{2}});
  CHECK(ok.verdict() == Verdict::kTrue);
}

TEST_CASE("finalize coerces open verdicts and is idempotent", "[monitor]") {
  Model m = walk_model();

  Monitor mon(parse_property("F top", m), m);
  mon.step(State{{0}});
  mon.step(State{{1}});
  REQUIRE(mon.verdict() == Verdict::kUndecided);
  CHECK(mon.finalize() == Verdict::kFalse);
  CHECK(mon.decided());
  CHECK(mon.finalize() == Verdict::kFalse);

  // A negated atom under X is satisfied by the empty continuation.
  Monitor neg(parse_property("X (!(x = 0))", m), m);
  neg.step(State{{0}});
  REQUIRE(neg.verdict() == Verdict::kUndecided);
  CHECK(neg.finalize() == Verdict::kTrue);
}

TEST_CASE("decided monitors ignore further steps", "[monitor]") {
  Model m = walk_model();
  Monitor mon(parse_property("F x = 2", m), m);
  for (auto v : {0, 1, 2}) mon.step(State{{v}});
  REQUIRE(mon.verdict() == Verdict::kTrue);
  for (auto v : {3, 4, 3, 0}) mon.step(State{{v}});
  CHECK(mon.verdict() == Verdict::kTrue);
  CHECK(mon.finalize() == Verdict::kTrue);
}

TEST_CASE("hand-picked traces agree with the reference semantics", "[monitor]") {
  Model m = walk_model();
  struct Case {
    const char* prop;
    std::vector<State> trace;
    bool expected;
  };
  const Case cases[] = {
      {"low U top", to_trace({0, 1, 2}), false},
      {"low U (x = 2)", to_trace({0, 1, 2}), true},
      {"X X (x = 2)", to_trace({0, 1, 2}), true},
      {"X X (x = 2)", to_trace({0, 1}), false},
      {"!(X x = 1)", to_trace({0, 1}), false},
      {"!(X x = 1)", to_trace({0}), true},
      {"(x < 3) U ((x = 3) U top)", to_trace({0, 1, 2, 3, 4}), true},
      {"(x < 3) U ((x = 3) U top)", to_trace({0, 1, 2, 3, 2}), false},
      {"F (top & X low)", to_trace({0, 4, 1}), true},
      {"F (top & X low)", to_trace({0, 4}), false},
  };
  for (const auto& c : cases) {
    INFO("property: " << c.prop);
    PropPtr p = parse_property(c.prop, m);
    CHECK(naive_holds(p, m, c.trace, 0) == c.expected);
    CHECK(run_monitor(p, m, c.trace) ==
          (c.expected ? Verdict::kTrue : Verdict::kFalse));
  }
}

TEST_CASE("incremental evaluation agrees with the reference on random traces",
          "[monitor]") {
  Model m = walk_model();
  SplitMix64 rng(0x6d6f6e6974u);
  for (int round = 0; round < 3000; ++round) {
    PropPtr p = random_prop(rng, 3);
    const std::size_t len = 1 + rng.next() % 20;
    std::vector<State> tr;
    std::int64_t x = static_cast<std::int64_t>(rng.next() % 5);
    for (std::size_t i = 0; i < len; ++i) {
      tr.push_back(State{{x}});
      if (x == 0) {
        ++x;
      } else if (x == 4) {
        --x;
      } else {
        x += rng.next() % 2 ? 1 : -1;
      }
    }

    const bool expected = naive_holds(p, m, tr, 0);
    Monitor mon(p, m);
    Verdict before = Verdict::kUndecided;
    for (const auto& s : tr) {
      mon.step(s);
      // Monotone: once decided the verdict must not flip.
      if (before != Verdict::kUndecided) REQUIRE(mon.verdict() == before);
      before = mon.verdict();
    }
    const Verdict got = mon.finalize();
    INFO("property: " << property_to_string(p, m) << ", len " << len);
    REQUIRE(got == (expected ? Verdict::kTrue : Verdict::kFalse));
  }
}

TEST_CASE("early decisions match every extension of the trace", "[monitor]") {
  Model m = walk_model();
  SplitMix64 rng(0xdec1dedu);
  int decided_early = 0;
  for (int round = 0; round < 800; ++round) {
    PropPtr p = random_prop(rng, 2);
    std::vector<State> prefix;
    std::int64_t x = 0;
    Monitor mon(p, m);
    for (int i = 0; i < 6; ++i) {
      prefix.push_back(State{{x}});
      mon.step(prefix.back());
      if (mon.decided()) break;
      x = (x + 1 + static_cast<std::int64_t>(rng.next() % 3)) % 5;
    }
    if (!mon.decided()) continue;
    ++decided_early;
    const bool verdict = mon.verdict() == Verdict::kTrue;
    // Extend the decided prefix three different ways; all must agree.
    for (std::int64_t tail : {0, 2, 4}) {
      std::vector<State> full = prefix;
      full.push_back(State{{tail}});
      full.push_back(State{{(tail + 1) % 5}});
      CHECK(naive_holds(p, m, full, 0) == verdict);
    }
  }
  // The generator must actually exercise the early-decision path.
  CHECK(decided_early > 200);
}
