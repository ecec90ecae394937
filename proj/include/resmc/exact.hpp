#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "resmc/cross_entropy.hpp"
#include "resmc/errors.hpp"
#include "resmc/expr.hpp"
#include "resmc/model.hpp"
#include "resmc/monitor.hpp"
#include "resmc/property.hpp"

namespace resmc {

// Explicit reachable state space of the embedded chain under the untilted
// parameters. States live in a flat arena; transitions in CSR form keep one
// entry per (state, enabled command).
struct ExplicitChain {
  Model model;
  std::size_t num_vars = 0;
  std::vector<std::int64_t> arena;  // num_states * num_vars values
  std::vector<std::uint32_t> row_offset;
  std::vector<std::uint32_t> target;
  std::vector<std::uint16_t> command;
  std::vector<double> prob;  // transition probability under the untilted chain

  std::size_t num_states() const { return row_offset.size() - 1; }

  std::span<const std::int64_t> state_span(std::size_t i) const {
    return {arena.data() + i * num_vars, num_vars};
  }

  State state(std::size_t i) const {
    auto s = state_span(i);
    return State{std::vector<std::int64_t>(s.begin(), s.end())};
  }

  bool absorbing(std::size_t i) const {
    return row_offset[i] == row_offset[i + 1];
  }
};

namespace detail {

struct StateKeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::uint64_t h = 0x548c9decbce65297ULL;
    for (std::int64_t x : v) {
      h = mix64(h ^ static_cast<std::uint64_t>(x));
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

inline ExplicitChain build_state_space(const Model& model,
                                       std::uint64_t cap = 1000000) {
  if (cap < 1) throw std::domain_error("build_state_space: cap must be >= 1");
  const std::size_t n = model.num_commands();
  const std::size_t nv = model.num_variables();

  ExplicitChain chain;
  chain.model = model;
  chain.num_vars = nv;

  std::unordered_map<std::vector<std::int64_t>, std::uint32_t,
                     detail::StateKeyHash>
      index;
  std::vector<std::vector<std::uint32_t>> adj_target;
  std::vector<std::vector<std::uint16_t>> adj_command;
  std::vector<std::vector<double>> adj_prob;

  auto intern = [&](const State& s) {
    auto [it, inserted] = index.try_emplace(
        s.values, static_cast<std::uint32_t>(index.size()));
    if (inserted) {
      if (index.size() > cap) throw StateSpaceTooLargeError(cap);
      chain.arena.insert(chain.arena.end(), s.values.begin(), s.values.end());
      adj_target.emplace_back();
      adj_command.emplace_back();
      adj_prob.emplace_back();
    }
    return it->second;
  };

  std::queue<std::uint32_t> frontier;
  frontier.push(intern(model.initial_state()));

  std::vector<double> rates(n);
  std::uint32_t explored = 0;
  while (!frontier.empty()) {
    const std::uint32_t i = frontier.front();
    frontier.pop();
    if (i != explored++) {
      throw InternalError("build_state_space: BFS order violated");
    }
    const State s = State{std::vector<std::int64_t>(
        chain.arena.begin() + static_cast<std::ptrdiff_t>(i * nv),
        chain.arena.begin() + static_cast<std::ptrdiff_t>((i + 1) * nv))};
    evaluate_rates(chain.model, s, rates);
    double total = 0.0;
    for (double r : rates) total += r;
    if (total == 0.0) continue;  // absorbing
    for (std::size_t k = 0; k < n; ++k) {
      if (rates[k] == 0.0) continue;
      const std::uint32_t before = static_cast<std::uint32_t>(index.size());
      const std::uint32_t j = intern(apply_command(chain.model, s, static_cast<int>(k)));
      if (j >= before) frontier.push(j);
      adj_target[i].push_back(j);
      adj_command[i].push_back(static_cast<std::uint16_t>(k));
      adj_prob[i].push_back(rates[k] / total);
    }
  }

  const std::size_t ns = index.size();
  chain.row_offset.resize(ns + 1, 0);
  for (std::size_t i = 0; i < ns; ++i) {
    chain.row_offset[i + 1] =
        chain.row_offset[i] + static_cast<std::uint32_t>(adj_target[i].size());
  }
  chain.target.reserve(chain.row_offset[ns]);
  chain.command.reserve(chain.row_offset[ns]);
  chain.prob.reserve(chain.row_offset[ns]);
  for (std::size_t i = 0; i < ns; ++i) {
    chain.target.insert(chain.target.end(), adj_target[i].begin(),
                        adj_target[i].end());
    chain.command.insert(chain.command.end(), adj_command[i].begin(),
                         adj_command[i].end());
    chain.prob.insert(chain.prob.end(), adj_prob[i].begin(),
                      adj_prob[i].end());
  }
  return chain;
}

// Plain-text sparse transition matrix: one "row col prob" line per state
// pair, parallel command transitions merged, rows in index order.
inline void export_matrix(const ExplicitChain& chain, std::ostream& out) {
  for (std::size_t i = 0; i < chain.num_states(); ++i) {
    std::unordered_map<std::uint32_t, double> row;
    std::vector<std::uint32_t> order;
    for (std::uint32_t t = chain.row_offset[i]; t < chain.row_offset[i + 1];
         ++t) {
      auto [it, inserted] = row.try_emplace(chain.target[t], 0.0);
      if (inserted) order.push_back(chain.target[t]);
      it->second += chain.prob[t];
    }
    std::sort(order.begin(), order.end());
    for (std::uint32_t col : order) {
      out << i << ' ' << col << ' ' << format_number(row[col]) << '\n';
    }
  }
}

namespace detail {

inline std::vector<double> indicator_of(const ExplicitChain& chain,
                                        const PropPtr& p) {
  std::vector<double> v(chain.num_states());
  for (std::size_t i = 0; i < chain.num_states(); ++i) {
    v[i] = eval_state_pred(p, chain.model, chain.state(i)) ? 1.0 : 0.0;
  }
  return v;
}

// One Jacobi sweep target for "a U b": value 1 on b, one-step average on
// continuing a-states, 0 elsewhere (including absorbing a-states).
inline double until_residual_sweep(const ExplicitChain& chain,
                                   const std::vector<double>& a,
                                   const std::vector<double>& b,
                                   const std::vector<double>& cur,
                                   std::vector<double>& next) {
  double residual = 0.0;
  for (std::size_t i = 0; i < chain.num_states(); ++i) {
    double v;
    if (b[i] == 1.0) {
      v = 1.0;
    } else if (a[i] == 1.0 && !chain.absorbing(i)) {
      double acc = 0.0;
      for (std::uint32_t t = chain.row_offset[i]; t < chain.row_offset[i + 1];
           ++t) {
        acc += chain.prob[t] * cur[chain.target[t]];
      }
      v = acc;
    } else {
      v = 0.0;
    }
    residual = std::max(residual, std::abs(v - cur[i]));
    next[i] = v;
  }
  return residual;
}

inline std::vector<double> solve_until_iterative(const ExplicitChain& chain,
                                                 const std::vector<double>& a,
                                                 const std::vector<double>& b,
                                                 double tol,
                                                 std::uint64_t max_sweeps) {
  std::vector<double> cur(chain.num_states(), 0.0);
  std::vector<double> next(chain.num_states(), 0.0);
  for (std::uint64_t sweep = 0; sweep < max_sweeps; ++sweep) {
    const double residual = until_residual_sweep(chain, a, b, cur, next);
    cur.swap(next);
    if (residual < tol) return cur;
  }
  throw ConvergenceError(
      "until value iteration did not reach tolerance " + format_number(tol) +
      " within " + std::to_string(max_sweeps) + " sweeps");
}

// Independent route: the same least-fixed-point equations as a sparse linear
// system over the continuing states, solved by LU factorization.
inline std::vector<double> solve_until_linear(const ExplicitChain& chain,
                                              const std::vector<double>& a,
                                              const std::vector<double>& b) {
  const std::size_t ns = chain.num_states();
  std::vector<std::int64_t> unknown_index(ns, -1);
  std::vector<std::uint32_t> unknowns;
  for (std::size_t i = 0; i < ns; ++i) {
    if (b[i] != 1.0 && a[i] == 1.0 && !chain.absorbing(i)) {
      unknown_index[i] = static_cast<std::int64_t>(unknowns.size());
      unknowns.push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::vector<double> v(ns, 0.0);
  for (std::size_t i = 0; i < ns; ++i) v[i] = b[i] == 1.0 ? 1.0 : 0.0;
  if (unknowns.empty()) return v;

  const auto m = static_cast<Eigen::Index>(unknowns.size());
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Eigen::Index row = 0; row < m; ++row) {
    const std::uint32_t i = unknowns[static_cast<std::size_t>(row)];
    triplets.emplace_back(row, row, 1.0);
    for (std::uint32_t t = chain.row_offset[i]; t < chain.row_offset[i + 1];
         ++t) {
      const std::uint32_t j = chain.target[t];
      if (unknown_index[j] >= 0) {
        triplets.emplace_back(row,
                              static_cast<Eigen::Index>(unknown_index[j]),
                              -chain.prob[t]);
      } else if (b[j] == 1.0) {
        rhs[row] += chain.prob[t];
      }
    }
  }
  Eigen::SparseMatrix<double> mat(m, m);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(mat);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sparse factorization of the until system failed");
  }
  const Eigen::VectorXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sparse solve of the until system failed");
  }
  for (Eigen::Index row = 0; row < m; ++row) {
    v[unknowns[static_cast<std::size_t>(row)]] = x[row];
  }
  return v;
}

enum class UntilMethod { kIterative, kLinear };

inline std::vector<double> state_probabilities(const ExplicitChain& chain,
                                               const PropPtr& p, double tol,
                                               std::uint64_t max_sweeps,
                                               UntilMethod method) {
  if (is_state_pred(p)) return indicator_of(chain, p);
  const std::size_t ns = chain.num_states();
  switch (p->kind) {
    case PropKind::kNot: {
      std::vector<double> v =
          state_probabilities(chain, p->left, tol, max_sweeps, method);
      for (double& x : v) x = 1.0 - x;
      return v;
    }
    case PropKind::kAnd:
    case PropKind::kOr: {
      const bool left_pred = is_state_pred(p->left);
      const bool right_pred = is_state_pred(p->right);
      if (!left_pred && !right_pred) {
        throw UnsupportedPropertyError(
            "exact evaluation supports boolean combinations with at most one "
            "temporal operand");
      }
      const PropPtr& pred = left_pred ? p->left : p->right;
      const PropPtr& path = left_pred ? p->right : p->left;
      std::vector<double> mask = indicator_of(chain, pred);
      std::vector<double> v =
          state_probabilities(chain, path, tol, max_sweeps, method);
      if (p->kind == PropKind::kAnd) {
        for (std::size_t i = 0; i < ns; ++i) v[i] *= mask[i];
      } else {
        for (std::size_t i = 0; i < ns; ++i) {
          v[i] = mask[i] + (1.0 - mask[i]) * v[i];
        }
      }
      return v;
    }
    case PropKind::kNext: {
      std::vector<double> inner =
          state_probabilities(chain, p->left, tol, max_sweeps, method);
      std::vector<double> v(ns, 0.0);
      for (std::size_t i = 0; i < ns; ++i) {
        double acc = 0.0;
        for (std::uint32_t t = chain.row_offset[i];
             t < chain.row_offset[i + 1]; ++t) {
          acc += chain.prob[t] * inner[chain.target[t]];
        }
        v[i] = acc;  // absorbing states have no next state, value 0
      }
      return v;
    }
    case PropKind::kUntil: {
      if (!is_state_pred(p->left) || !is_state_pred(p->right)) {
        throw UnsupportedPropertyError(
            "exact evaluation requires state-predicate operands of U");
      }
      std::vector<double> a = indicator_of(chain, p->left);
      std::vector<double> b = indicator_of(chain, p->right);
      return method == UntilMethod::kIterative
                 ? solve_until_iterative(chain, a, b, tol, max_sweeps)
                 : solve_until_linear(chain, a, b);
    }
    default:
      throw UnsupportedPropertyError("exact evaluation: unsupported operator");
  }
}

}  // namespace detail

// Probability that the property holds on a trace of the untilted embedded
// chain from the initial state. Until operators are solved by least-fixed-
// point value iteration.
inline double exact_probability(const ExplicitChain& chain, const PropPtr& p,
                                double tol = 1e-12,
                                std::uint64_t max_sweeps = 10000000) {
  return detail::state_probabilities(chain, p, tol, max_sweeps,
                                     detail::UntilMethod::kIterative)[0];
}

// Same quantity with until operators solved as sparse linear systems;
// an algorithmically independent cross-check of exact_probability.
inline double exact_probability_linear(const ExplicitChain& chain,
                                       const PropPtr& p) {
  return detail::state_probabilities(chain, p, 1e-12, 1,
                                     detail::UntilMethod::kLinear)[0];
}

// Exact expectations behind the parameter update on a small chain:
//   numerator_k   = E[z * (firings of command k)]        (tilt-independent)
//   denominator_k = E[z * sum_steps rate_k / <rates, lambda>]
// both under the untilted measure, where z is the property verdict. The
// tilt-independent parts are cached: per-command numerators plus, for every
// model state, the accepted-visit weight E[z * visits].
struct CEReferenceCache {
  std::vector<double> num;     // per command
  std::vector<double> weight;  // per model state: expected accepted visits
                               // from which a step is taken
  double gamma = 0.0;          // acceptance probability from the initial state
  std::size_t product_states = 0;
};

namespace detail {

struct ProductChain {
  // Product of the model chain with the monitor residual. Terminal nodes
  // (decided residuals) are not materialized; transitions carry the verdict.
  struct Transition {
    std::uint32_t node;  // meaningful when !terminal
    std::uint16_t command;
    double prob;
    bool terminal;
    bool accept;
  };
  std::vector<std::uint32_t> model_state;
  std::vector<std::uint32_t> row_offset;
  std::vector<Transition> transitions;
  std::vector<char> node_absorbing;  // model state absorbing: verdict by
                                     // empty-suffix value of the residual
  std::vector<char> absorbing_accept;
  bool start_terminal = false;
  bool start_accept = false;
  std::uint32_t start_node = 0;
};

inline ProductChain build_product(const ExplicitChain& chain,
                                  const PropPtr& property) {
  ProductChain pc;
  std::vector<PropPtr> residuals;
  // key: model state * #residuals + residual id, discovered lazily
  std::unordered_map<std::uint64_t, std::uint32_t> nodes;

  auto residual_id = [&](const PropPtr& r) {
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      if (prop::equal(residuals[i], r)) return i;
    }
    if (residuals.size() >= 4096) {
      throw UnsupportedPropertyError(
          "monitor residual set exceeded the product-chain bound");
    }
    residuals.push_back(r);
    return residuals.size() - 1;
  };

  std::vector<std::vector<ProductChain::Transition>> adj;
  std::queue<std::uint32_t> frontier;

  auto intern = [&](std::uint32_t state, const PropPtr& r) {
    const std::uint64_t key =
        static_cast<std::uint64_t>(state) * 4096 + residual_id(r);
    auto [it, inserted] =
        nodes.try_emplace(key, static_cast<std::uint32_t>(nodes.size()));
    if (inserted) {
      pc.model_state.push_back(state);
      const bool abs = chain.absorbing(state);
      pc.node_absorbing.push_back(abs ? 1 : 0);
      pc.absorbing_accept.push_back(abs && empty_suffix_value(r) ? 1 : 0);
      adj.emplace_back();
      frontier.push(it->second);
    }
    return it->second;
  };

  const PropPtr r0 = progress(property, chain.model, chain.state(0));
  if (prop::is_const(r0)) {
    pc.start_terminal = true;
    pc.start_accept = prop::const_value(r0);
    pc.row_offset.push_back(0);
    return pc;
  }
  pc.start_node = intern(0, r0);

  std::vector<PropPtr> node_residual;
  node_residual.push_back(r0);

  while (!frontier.empty()) {
    const std::uint32_t x = frontier.front();
    frontier.pop();
    const std::uint32_t i = pc.model_state[x];
    const PropPtr r = node_residual[x];
    if (pc.node_absorbing[x]) continue;
    for (std::uint32_t t = chain.row_offset[i]; t < chain.row_offset[i + 1];
         ++t) {
      const std::uint32_t j = chain.target[t];
      const PropPtr rj = progress(r, chain.model, chain.state(j));
      ProductChain::Transition tr;
      tr.command = chain.command[t];
      tr.prob = chain.prob[t];
      if (prop::is_const(rj)) {
        tr.terminal = true;
        tr.accept = prop::const_value(rj);
        tr.node = 0;
      } else {
        tr.terminal = false;
        tr.accept = false;
        const std::size_t before = nodes.size();
        tr.node = intern(j, rj);
        if (nodes.size() > before) node_residual.push_back(rj);
      }
      adj[x].push_back(tr);
    }
  }

  const std::size_t nn = nodes.size();
  pc.row_offset.assign(nn + 1, 0);
  for (std::size_t x = 0; x < nn; ++x) {
    pc.row_offset[x + 1] =
        pc.row_offset[x] + static_cast<std::uint32_t>(adj[x].size());
  }
  pc.transitions.reserve(pc.row_offset[nn]);
  for (std::size_t x = 0; x < nn; ++x) {
    pc.transitions.insert(pc.transitions.end(), adj[x].begin(), adj[x].end());
  }
  return pc;
}

// Acceptance probability per product node, least fixed point from below.
inline std::vector<double> product_acceptance(const ProductChain& pc,
                                              double tol,
                                              std::uint64_t max_sweeps) {
  const std::size_t nn = pc.model_state.size();
  std::vector<double> cur(nn, 0.0), next(nn, 0.0);
  for (std::uint64_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double residual = 0.0;
    for (std::size_t x = 0; x < nn; ++x) {
      double v;
      if (pc.node_absorbing[x]) {
        v = pc.absorbing_accept[x] ? 1.0 : 0.0;
      } else {
        v = 0.0;
        for (std::uint32_t t = pc.row_offset[x]; t < pc.row_offset[x + 1];
             ++t) {
          const auto& tr = pc.transitions[t];
          v += tr.prob * (tr.terminal ? (tr.accept ? 1.0 : 0.0)
                                      : cur[tr.node]);
        }
      }
      residual = std::max(residual, std::abs(v - cur[x]));
      next[x] = v;
    }
    cur.swap(next);
    if (residual < tol) return cur;
  }
  throw ConvergenceError("product acceptance iteration did not converge");
}

// Expected visit counts from the start node; diverges (error) if the chain
// can dwell forever without deciding.
inline std::vector<double> product_visits(const ProductChain& pc, double tol,
                                          std::uint64_t max_sweeps) {
  const std::size_t nn = pc.model_state.size();
  std::vector<double> cur(nn, 0.0), next(nn, 0.0);
  for (std::uint64_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t x = 0; x < nn; ++x) {
      next[x] = x == pc.start_node ? 1.0 : 0.0;
    }
    for (std::size_t x = 0; x < nn; ++x) {
      if (pc.node_absorbing[x] || cur[x] == 0.0) continue;
      for (std::uint32_t t = pc.row_offset[x]; t < pc.row_offset[x + 1]; ++t) {
        const auto& tr = pc.transitions[t];
        if (!tr.terminal) next[tr.node] += cur[x] * tr.prob;
      }
    }
    double residual = 0.0, scale = 1.0;
    for (std::size_t x = 0; x < nn; ++x) {
      residual = std::max(residual, std::abs(next[x] - cur[x]));
      scale = std::max(scale, std::abs(next[x]));
    }
    cur.swap(next);
    if (scale > 1e15) {
      throw ConvergenceError(
          "expected path length diverges on the product chain");
    }
    if (residual < tol * scale) return cur;
  }
  throw ConvergenceError("expected-visits iteration did not converge");
}

}  // namespace detail

inline CEReferenceCache exact_ce_cache(const ExplicitChain& chain,
                                       const PropPtr& property,
                                       double tol = 1e-14,
                                       std::uint64_t max_sweeps = 10000000) {
  const std::size_t n = chain.model.num_commands();
  CEReferenceCache cache;
  cache.num.assign(n, 0.0);
  cache.weight.assign(chain.num_states(), 0.0);

  const detail::ProductChain pc = detail::build_product(chain, property);
  cache.product_states = pc.model_state.size();
  if (pc.start_terminal) {
    cache.gamma = pc.start_accept ? 1.0 : 0.0;
    return cache;
  }

  const std::vector<double> accept =
      detail::product_acceptance(pc, tol, max_sweeps);
  const std::vector<double> visits =
      detail::product_visits(pc, tol, max_sweeps);
  cache.gamma = accept[pc.start_node];

  for (std::size_t x = 0; x < pc.model_state.size(); ++x) {
    if (pc.node_absorbing[x] || visits[x] == 0.0) continue;
    cache.weight[pc.model_state[x]] += visits[x] * accept[x];
    for (std::uint32_t t = pc.row_offset[x]; t < pc.row_offset[x + 1]; ++t) {
      const auto& tr = pc.transitions[t];
      const double a_next =
          tr.terminal ? (tr.accept ? 1.0 : 0.0) : accept[tr.node];
      cache.num[tr.command] += visits[x] * tr.prob * a_next;
    }
  }
  return cache;
}

inline std::vector<double> exact_ce_denominator(const ExplicitChain& chain,
                                                const CEReferenceCache& cache,
                                                const ParamVector& lambda) {
  const std::size_t n = chain.model.num_commands();
  std::vector<double> den(n, 0.0);
  for (std::size_t i = 0; i < chain.num_states(); ++i) {
    const double w = cache.weight[i];
    if (w == 0.0) continue;
    double dot = 0.0;
    for (std::uint32_t t = chain.row_offset[i]; t < chain.row_offset[i + 1];
         ++t) {
      dot += lambda[chain.command[t]] * chain.prob[t];
    }
    for (std::uint32_t t = chain.row_offset[i]; t < chain.row_offset[i + 1];
         ++t) {
      den[chain.command[t]] += w * chain.prob[t] / dot;
    }
  }
  return den;
}

struct CEReference {
  std::vector<double> num;
  std::vector<double> den;
  double gamma = 0.0;
};

inline CEReference exact_ce_reference(const ExplicitChain& chain,
                                      const PropPtr& property,
                                      const ParamVector& lambda) {
  const CEReferenceCache cache = exact_ce_cache(chain, property);
  CEReference out;
  out.num = cache.num;
  out.den = exact_ce_denominator(chain, cache, lambda);
  out.gamma = cache.gamma;
  return out;
}

// Exact-expectation version of the optimization loop (same smoothing and
// normalization), used as an oracle for the sampled optimizer.
inline ParamVector exact_ce_fixed_point(
    const ExplicitChain& chain, const PropPtr& property,
    const ParamVector& initial, double norm_const,
    Smoothing smoothing = Smoothing::kHalving, double fraction = 0.01,
    std::uint64_t max_iterations = 100000, double tol = 1e-13) {
  const std::size_t n = chain.model.num_commands();
  const CEReferenceCache cache = exact_ce_cache(chain, property);
  if (cache.gamma <= 0.0) {
    throw NoHitsError("property has probability zero; no fixed point");
  }
  std::vector<char> seen(n, 0);
  for (std::size_t k = 0; k < n; ++k) seen[k] = cache.num[k] > 0.0 ? 1 : 0;

  ParamVector lambda = normalize(initial, norm_const);
  for (std::uint64_t it = 0; it < max_iterations; ++it) {
    const std::vector<double> den =
        exact_ce_denominator(chain, cache, lambda);
    std::vector<double> raw(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (seen[k]) raw[k] = cache.num[k] / den[k];
    }
    std::vector<double> next =
        apply_smoothing(raw, seen, lambda, smoothing, fraction);
    detail::rescale_seen(next, seen, norm_const);

    double max_prev = 0.0, max_delta = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      max_prev = std::max(max_prev, std::abs(lambda[k]));
      max_delta = std::max(max_delta, std::abs(next[k] - lambda[k]));
    }
    lambda.values = std::move(next);
    if (max_delta <= tol * max_prev) return lambda;
  }
  throw ConvergenceError("exact fixed-point iteration did not converge");
}

}  // namespace resmc
