#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resmc/errors.hpp"
#include "resmc/expr.hpp"

namespace resmc {

// Declared integer variable with inclusive bounds.
struct VariableDecl {
  std::string name;
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  std::int64_t init = 0;
};

// Guarded command: enabled when the guard holds, competes with a propensity
// given by its rate expression, and applies its updates atomically.
struct Command {
  std::string name;
  Expr guard;
  Expr rate;
  std::vector<std::pair<int, Expr>> updates;  // (variable index, new value)

  CompiledExpr compiled_guard;
  CompiledExpr compiled_rate;
  std::vector<std::pair<int, CompiledExpr>> compiled_updates;
};

struct LabelDecl {
  std::string name;
  Expr expr;
  CompiledExpr compiled;
};

// Variable valuation, indexed by the model's declaration order.
struct State {
  std::vector<std::int64_t> values;

  friend bool operator==(const State&, const State&) = default;
};

// Strictly positive per-command rate multipliers. The untilted model
// corresponds to the all-ones vector.
struct ParamVector {
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(std::vector<double> v) : values(std::move(v)) {}

  static ParamVector ones(std::size_t n) {
    return ParamVector(std::vector<double>(n, 1.0));
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

class Model {
 public:
  std::vector<VariableDecl> variables;
  std::vector<Command> commands;
  std::vector<LabelDecl> labels;

  std::size_t num_variables() const { return variables.size(); }
  std::size_t num_commands() const { return commands.size(); }

  int variable_index(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
      if (variables[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  int label_index(std::string_view name) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  std::vector<std::string> variable_names() const {
    std::vector<std::string> names;
    names.reserve(variables.size());
    for (const auto& v : variables) names.push_back(v.name);
    return names;
  }

  State initial_state() const {
    State s;
    s.values.reserve(variables.size());
    for (const auto& v : variables) s.values.push_back(v.init);
    return s;
  }

  // Recompiles expression programs; call after structural edits.
  void compile() {
    for (auto& c : commands) {
      c.compiled_guard = CompiledExpr(c.guard);
      c.compiled_rate = CompiledExpr(c.rate);
      c.compiled_updates.clear();
      for (const auto& [var, e] : c.updates) {
        c.compiled_updates.emplace_back(var, CompiledExpr(e));
      }
    }
    for (auto& l : labels) l.compiled = CompiledExpr(l.expr);
  }
};

namespace detail {

inline std::string describe_state(const Model& model, const State& state) {
  std::string out = "{";
  for (std::size_t i = 0; i < model.variables.size(); ++i) {
    if (i) out += ", ";
    out += model.variables[i].name;
    out += '=';
    out += std::to_string(state.values[i]);
  }
  out += '}';
  return out;
}

}  // namespace detail

// Per-command propensities in `state`: the rate expression where the guard
// holds, 0 where it does not. Negative or non-finite rates are model errors.
inline void evaluate_rates(const Model& model, const State& state,
                           std::vector<double>& rates) {
  rates.resize(model.commands.size());
  for (std::size_t k = 0; k < model.commands.size(); ++k) {
    const Command& cmd = model.commands[k];
    double r = 0.0;
    try {
      if (cmd.compiled_guard.eval_bool(state.values)) {
        r = cmd.compiled_rate.eval(state.values);
      }
    } catch (const EvalError& e) {
      throw ModelError("command '" + cmd.name + "' in state " +
                       detail::describe_state(model, state) + ": " + e.what());
    }
    if (!std::isfinite(r) || r < 0.0) {
      throw ModelError("command '" + cmd.name + "' evaluated to rate " +
                       format_number(r) + " in state " +
                       detail::describe_state(model, state));
    }
    rates[k] = r;
  }
}

inline std::vector<double> evaluate_rates(const Model& model,
                                          const State& state) {
  std::vector<double> rates;
  evaluate_rates(model, state, rates);
  return rates;
}

// Probability that each command fires under tilting `lambda`:
// entry k is lambda_k * K_k / <K, lambda>. Empty when the tilted total rate
// is zero (deadlock); the caller decides how to finish the trace.
inline std::optional<std::vector<double>> transition_distribution(
    std::span<const double> rates, const ParamVector& lambda) {
  double total = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) total += lambda[k] * rates[k];
  if (total == 0.0) return std::nullopt;
  std::vector<double> probs(rates.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    probs[k] = lambda[k] * rates[k] / total;
  }
  return probs;
}

// Applies command k with simultaneous-assignment semantics: every right-hand
// side is evaluated in `state` before any variable changes.
inline State apply_command(const Model& model, const State& state,
                           std::size_t k) {
  const Command& cmd = model.commands[k];
  State next = state;
  for (const auto& [var, expr] : cmd.compiled_updates) {
    double raw;
    try {
      raw = expr.eval(state.values);
    } catch (const EvalError& e) {
      throw ModelError("update of '" + model.variables[var].name +
                       "' in command '" + cmd.name + "': " + e.what());
    }
    const double rounded = std::nearbyint(raw);
    if (!std::isfinite(raw) || raw != rounded) {
      throw ModelError("update of '" + model.variables[var].name +
                       "' in command '" + cmd.name +
                       "' is not an integer: " + format_number(raw));
    }
    const auto value = static_cast<std::int64_t>(rounded);
    const VariableDecl& decl = model.variables[var];
    if (value < decl.lower || value > decl.upper) {
      throw ModelError("command '" + cmd.name + "' drives '" + decl.name +
                       "' to " + std::to_string(value) + ", outside [" +
                       std::to_string(decl.lower) + ", " +
                       std::to_string(decl.upper) + "] in state " +
                       detail::describe_state(model, state));
    }
    next.values[var] = value;
  }
  return next;
}

}  // namespace resmc
