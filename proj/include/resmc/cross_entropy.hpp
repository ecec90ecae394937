#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "resmc/errors.hpp"
#include "resmc/estimators.hpp"
#include "resmc/model.hpp"
#include "resmc/property.hpp"
#include "resmc/rng.hpp"
#include "resmc/simulate.hpp"

namespace resmc {

enum class Smoothing { kHalving, kAdditive };

struct CEConfig {
  std::uint64_t n_per_iteration = 1000;  // N_j, constant across iterations
  std::uint64_t max_iterations = 20;
  Smoothing smoothing = Smoothing::kHalving;
  double smoothing_fraction = 0.01;  // additive strategy only
  double normalization_constant = 0.0;  // 0 means "number of commands"
  double convergence_tol = 0.02;
  std::uint64_t convergence_window = 3;
  std::uint64_t min_hits = 1;
  std::uint64_t master_seed = 1;
  std::uint64_t max_steps = 1000000;
  int workers = 1;
  std::uint64_t n0 = 1000;      // traces per initial-search candidate
  std::uint64_t max_restarts = 20;
};

struct CEUpdate {
  std::vector<double> raw;  // quotient of the two weighted sums; 0 if unseen
  std::vector<char> seen;   // command fired in at least one accepted trace
};

namespace detail {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

// One parameter update from a batch of weighted traces:
//   lambda_k = sum_i w_i z_i counts_i[k] / sum_i w_i z_i denom_i[k].
// Weights are shifted by the max log-likelihood-ratio among accepted traces
// before exponentiation; the quotient is invariant to that shift.
inline CEUpdate ce_update(const std::vector<TraceSummary>& summaries,
                          const ParamVector& lambda_prev) {
  const std::size_t n = lambda_prev.size();
  double max_log = -std::numeric_limits<double>::infinity();
  bool any_hit = false;
  for (const TraceSummary& s : summaries) {
    if (s.z == 1) {
      any_hit = true;
      max_log = std::max(max_log, s.log_l);
    }
  }
  if (!any_hit) throw NoHitsError("no accepted trace in the batch");

  std::vector<detail::KahanSum> num(n), den(n);
  for (const TraceSummary& s : summaries) {
    if (s.z != 1) continue;
    if (s.counts.size() != n || s.denom.size() != n) {
      throw InternalError("ce_update: summary size mismatch");
    }
    const double w = std::exp(s.log_l - max_log);
    for (std::size_t k = 0; k < n; ++k) {
      if (s.counts[k] != 0) {
        num[k].add(w * static_cast<double>(s.counts[k]));
      }
      if (s.denom[k] != 0.0) den[k].add(w * s.denom[k]);
    }
  }

  CEUpdate out;
  out.raw.assign(n, 0.0);
  out.seen.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (num[k].sum > 0.0) {
      if (den[k].sum <= 0.0) {
        throw InternalError(
            "ce_update: command fired in an accepted trace but its "
            "denominator is zero");
      }
      out.raw[k] = num[k].sum / den[k].sum;
      out.seen[k] = 1;
    }
  }
  return out;
}

// Unseen commands keep a memory of their previous value instead of dropping
// to zero: halved, or bumped by a fraction of the previous value.
inline std::vector<double> apply_smoothing(const std::vector<double>& raw,
                                           const std::vector<char>& seen,
                                           const ParamVector& lambda_prev,
                                           Smoothing strategy,
                                           double fraction = 0.01) {
  const std::size_t n = raw.size();
  if (seen.size() != n || lambda_prev.size() != n) {
    throw InternalError("apply_smoothing: size mismatch");
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (seen[k]) {
      out[k] = raw[k];
    } else if (strategy == Smoothing::kHalving) {
      out[k] = lambda_prev[k] / 2.0;
    } else {
      out[k] = raw[k] + fraction * lambda_prev[k];
    }
  }
  return out;
}

inline ParamVector normalize(const ParamVector& lambda, double constant) {
  if (!(constant > 0.0)) {
    throw std::domain_error("normalize: constant must be positive");
  }
  const double sum = lambda.sum();
  if (!(sum > 0.0)) {
    throw std::domain_error("normalize: parameter sum must be positive");
  }
  ParamVector out = lambda;
  const double factor = constant / sum;
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] *= factor;
  return out;
}

namespace detail {

// In-loop normalization: unseen entries were just set by smoothing and must
// keep that exact value (their decay is part of the published behavior), so
// only seen entries absorb the rescaling.
inline void rescale_seen(std::vector<double>& values,
                         const std::vector<char>& seen, double constant) {
  double sum_seen = 0.0, sum_frozen = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    (seen[k] ? sum_seen : sum_frozen) += values[k];
  }
  if (!(sum_seen > 0.0) || !(constant - sum_frozen > 0.0)) {
    throw InternalError("rescale_seen: degenerate parameter mass");
  }
  const double factor = (constant - sum_frozen) / sum_seen;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (seen[k]) values[k] *= factor;
  }
}

inline std::uint64_t initial_candidate_salt() { return 1ULL << 63; }

}  // namespace detail

struct InitialSearchResult {
  ParamVector lambda;
  std::uint64_t hits = 0;
  std::uint64_t restarts = 0;  // random candidates tried; 0 if mu sufficed
};

namespace detail {

inline void collect_atoms(const PropPtr& p, std::vector<PropPtr>& atoms) {
  if (!p) return;
  switch (p->kind) {
    case PropKind::kVarAtom:
    case PropKind::kLabelAtom:
      for (const PropPtr& a : atoms) {
        if (prop::equal(a, p)) return;
      }
      atoms.push_back(p);
      return;
    default:
      collect_atoms(p->left, atoms);
      collect_atoms(p->right, atoms);
  }
}

// Fraction of untilted traces on which each atom holds at least once;
// reported when the initial search exhausts its restarts, so the user can
// see which atom makes the property unreachable.
inline std::string atom_rarity_report(const Model& model,
                                      const PropPtr& property,
                                      std::uint64_t master_seed,
                                      std::uint64_t n, std::uint64_t max_steps) {
  std::vector<PropPtr> atoms;
  collect_atoms(property, atoms);
  if (atoms.empty()) return "property has no atoms";

  std::vector<std::uint64_t> seen(atoms.size(), 0);
  const ParamVector mu = ParamVector::ones(model.num_commands());
  const PropPtr always_open = prop::until(prop::constant(true),
                                          prop::constant(false));
  for (std::uint64_t i = 0; i < n; ++i) {
    TraceRecorder rec;
    simulate(model, mu, always_open,
             derive_seed(master_seed, stream_id(RngPhase::kTraceDebug, 0), i),
             max_steps, &rec);
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      for (const State& s : rec.states) {
        if (eval_state_pred(atoms[a], model, s)) {
          ++seen[a];
          break;
        }
      }
    }
  }

  std::vector<std::size_t> order(atoms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return seen[a] < seen[b]; });
  std::ostringstream os;
  os << "atom satisfaction over " << n << " untilted traces:";
  for (std::size_t i : order) {
    os << " [" << property_to_string(atoms[i], model) << ": " << seen[i]
       << "/" << n << "]";
  }
  return os.str();
}

}  // namespace detail

// Searches for tilting parameters under which the property is hit at least
// min_hits times in n0 traces. The untilted vector is tried first; each
// restart draws entries log-uniformly from [1e-2, 1e2].
inline InitialSearchResult find_initial(const Model& model,
                                        const PropPtr& property,
                                        std::uint64_t n0, std::uint64_t seed,
                                        std::uint64_t max_restarts,
                                      std::uint64_t min_hits = 1,
                                        std::uint64_t max_steps = 1000000,
                                        int workers = 1) {
  if (n0 < 1) throw std::domain_error("find_initial: n0 must be >= 1");
  const std::size_t n = model.num_commands();

  struct HitPartial {
    std::uint64_t hits = 0;
    void add(const TraceSummary& s) { hits += s.z; }
    void merge(const HitPartial& o) { hits += o.hits; }
  };

  for (std::uint64_t attempt = 0; attempt <= max_restarts; ++attempt) {
    ParamVector candidate;
    if (attempt == 0) {
      candidate = ParamVector::ones(n);
    } else {
      SplitMix64 draw(derive_seed(seed,
                                  stream_id(RngPhase::kInitialSearch, attempt),
                                  detail::initial_candidate_salt()));
      candidate.values.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        candidate.values[k] = std::pow(10.0, -2.0 + 4.0 * draw.uniform01());
      }
    }
    const auto partial = simulate_batch_reduce<HitPartial>(
        model, candidate, property, seed,
        stream_id(RngPhase::kInitialSearch, attempt), n0, max_steps, workers);
    if (partial.hits >= min_hits) {
      return InitialSearchResult{std::move(candidate), partial.hits, attempt};
    }
  }

  throw InitialSearchError(
      "no tilting candidate reached " + std::to_string(min_hits) +
      " hit(s) in " + std::to_string(n0) + " traces after " +
      std::to_string(max_restarts) + " restarts; " +
      detail::atom_rarity_report(model, property, seed, n0, max_steps));
}

struct CEIterationRecord {
  std::vector<double> lambda;  // normalized parameters used for this batch
  std::uint64_t n = 0;
  std::uint64_t hits = 0;
  std::uint64_t undecided = 0;
  double gamma_hat = 0.0;
  double sample_variance = 0.0;
  bool retried = false;  // batch was doubled after an all-miss first attempt
};

enum class CEStatus { kConverged, kMaxIterations, kAbortedNoHits };

struct CERunResult {
  std::vector<CEIterationRecord> history;
  ParamVector final_lambda;
  std::vector<char> final_seen;
  CEStatus status = CEStatus::kMaxIterations;
  std::uint64_t iterations = 0;
  InitialSearchResult initial;  // hits == 0 when an explicit start was given
  std::vector<TraceSummary> last_summaries;  // batch behind the last record
};

// Full optimization loop: batch simulation under the current parameters,
// update, smoothing of unseen commands, normalization, convergence test on
// the L-infinity relative change over a sliding window.
inline CERunResult ce_optimize(const Model& model, const PropPtr& property,
                               const CEConfig& config,
                               std::optional<ParamVector> initial = {}) {
  if (config.n_per_iteration < 1) {
    throw std::domain_error("ce_optimize: n_per_iteration must be >= 1");
  }
  if (!(config.convergence_tol > 0.0)) {
    throw std::domain_error("ce_optimize: convergence_tol must be positive");
  }
  const std::size_t n = model.num_commands();
  const double norm_const = config.normalization_constant > 0.0
                                ? config.normalization_constant
                                : static_cast<double>(n);

  CERunResult result;
  if (initial.has_value()) {
    result.initial.lambda = *initial;
  } else {
    result.initial =
        find_initial(model, property, config.n0, config.master_seed,
                     config.max_restarts, config.min_hits, config.max_steps,
                     config.workers);
  }
  ParamVector lambda = normalize(result.initial.lambda, norm_const);

  std::uint64_t streak = 0;
  for (std::uint64_t j = 0; j < config.max_iterations; ++j) {
    CEIterationRecord record;
    record.lambda = lambda.values;

    std::vector<TraceSummary> batch = simulate_batch_collect(
        model, lambda, property, config.master_seed,
        stream_id(RngPhase::kCeIteration, j), config.n_per_iteration,
        config.max_steps, config.workers);
    std::uint64_t hits = 0;
    for (const TraceSummary& s : batch) hits += s.z;

    if (hits < config.min_hits) {
      if (j == 0) {
        throw NoHitsError(
            "no accepted traces in the first optimization iteration");
      }
      // One retry with a doubled batch; its first half replays the same
      // per-trace seeds, the second half is fresh.
      batch = simulate_batch_collect(
          model, lambda, property, config.master_seed,
          stream_id(RngPhase::kCeIteration, j), 2 * config.n_per_iteration,
          config.max_steps, config.workers);
      record.retried = true;
      hits = 0;
      for (const TraceSummary& s : batch) hits += s.z;
    }

    EstimateResult est = estimate_from_summaries(batch);
    record.n = est.n;
    record.hits = hits;
    record.undecided = est.undecided;
    record.gamma_hat = est.gamma_hat;
    record.sample_variance = est.sample_variance;
    result.history.push_back(record);
    result.iterations = j + 1;

    if (hits < config.min_hits) {
      result.final_lambda = lambda;
      result.status = CEStatus::kAbortedNoHits;
      result.last_summaries = std::move(batch);
      return result;
    }

    CEUpdate update = ce_update(batch, lambda);
    std::vector<double> next =
        apply_smoothing(update.raw, update.seen, lambda, config.smoothing,
                        config.smoothing_fraction);
    detail::rescale_seen(next, update.seen, norm_const);

    double max_prev = 0.0, max_delta = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      max_prev = std::max(max_prev, std::abs(lambda[k]));
      max_delta = std::max(max_delta, std::abs(next[k] - lambda[k]));
    }
    if (max_delta <= config.convergence_tol * max_prev) {
      ++streak;
    } else {
      streak = 0;
    }

    lambda.values = std::move(next);
    result.final_seen = std::move(update.seen);
    result.last_summaries = std::move(batch);

    if (streak >= config.convergence_window) {
      result.final_lambda = lambda;
      result.status = CEStatus::kConverged;
      return result;
    }
  }

  result.final_lambda = lambda;
  result.status = CEStatus::kMaxIterations;
  return result;
}

}  // namespace resmc
