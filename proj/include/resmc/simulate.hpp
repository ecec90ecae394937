#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "resmc/errors.hpp"
#include "resmc/model.hpp"
#include "resmc/monitor.hpp"
#include "resmc/property.hpp"
#include "resmc/rng.hpp"

namespace resmc {

enum class StopReason { kDecided, kDeadlock, kStepCap };

// Everything the optimizer and the estimators need from one trace. `counts`
// holds the number of firings per command; `denom` holds, per command k, the
// sum over trace steps of rate_k / <rates, lambda> evaluated in the step's
// source state (accumulated for all k, fired or not).
struct TraceSummary {
  int z = 0;
  std::uint64_t steps = 0;
  std::vector<std::uint64_t> counts;
  double log_l = 0.0;  // ln of likelihood ratio vs the untilted chain
  std::vector<double> denom;
  bool undecided = false;
  StopReason reason = StopReason::kDecided;
};

struct TraceRecorder {
  std::vector<State> states;  // states[0] is the initial state
  std::vector<int> commands;  // commands[i] produced states[i+1]
};

namespace detail {

// Walks the cumulative weights; a draw landing exactly on a boundary goes to
// the lower index. Zero-weight commands are never chosen.
inline int pick_command(double u, std::span<const double> weights,
                        double total) {
  const double target = u * total;
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) {
      cum += weights[k];
      last_positive = static_cast<int>(k);
      if (target <= cum) return last_positive;
    }
  }
  return last_positive;  // rounding pushed the target past the final sum
}

// Core loop shared by random sampling and forced replay. `choose` receives
// (step index, per-command weights lambda_k * rate_k, their sum) and returns
// the command to fire.
template <class Chooser>
TraceSummary simulate_core(const Model& model, const ParamVector& lambda,
                           const PropPtr& property, std::uint64_t max_steps,
                           Chooser&& choose, TraceRecorder* recorder) {
  const std::size_t n = model.num_commands();
  if (lambda.size() != n) {
    throw ModelError("parameter vector has " + std::to_string(lambda.size()) +
                     " entries but the model has " + std::to_string(n) +
                     " commands");
  }
  if (max_steps < 1) throw InternalError("simulate: max_steps must be >= 1");

  TraceSummary out;
  out.counts.assign(n, 0);
  out.denom.assign(n, 0.0);

  State state = model.initial_state();
  Monitor monitor(property, model);
  monitor.step(state);
  if (recorder) recorder->states.push_back(state);

  std::vector<double> rates(n), weights(n);
  out.reason = StopReason::kDecided;
  while (!monitor.decided()) {
    if (out.steps >= max_steps) {
      out.reason = StopReason::kStepCap;
      break;
    }
    evaluate_rates(model, state, rates);

    double total_l = 0.0, total_u = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      weights[k] = lambda[k] * rates[k];
      total_l += weights[k];
      total_u += rates[k];
    }
    if (total_l == 0.0) {
      out.reason = StopReason::kDeadlock;
      break;
    }

    const int k = choose(out.steps, std::span<const double>(weights), total_l);
    for (std::size_t j = 0; j < n; ++j) out.denom[j] += rates[j] / total_l;
    // Both ratios are exactly 1 when lambda is the untilted vector, making
    // log_l identically zero rather than a rounding residue.
    out.log_l += std::log(1.0 / lambda[static_cast<std::size_t>(k)]) +
                 std::log(total_l / total_u);
    ++out.counts[static_cast<std::size_t>(k)];
    ++out.steps;

    state = apply_command(model, state, k);
    monitor.step(state);
    if (recorder) {
      recorder->commands.push_back(k);
      recorder->states.push_back(state);
    }
  }

  const bool open_at_end = !monitor.decided();
  out.z = monitor.finalize() == Verdict::kTrue ? 1 : 0;
  out.undecided = open_at_end && out.reason == StopReason::kStepCap;
  return out;
}

}  // namespace detail

// Samples one trace of the embedded chain with per-step command probability
// lambda_k * rate_k / <rates, lambda>, stopping at the first decided verdict,
// deadlock, or max_steps. Pure function of its arguments.
inline TraceSummary simulate(const Model& model, const ParamVector& lambda,
                             const PropPtr& property, std::uint64_t seed,
                             std::uint64_t max_steps = 1000000,
                             TraceRecorder* recorder = nullptr) {
  SplitMix64 rng(seed);
  return detail::simulate_core(
      model, lambda, property, max_steps,
      [&rng](std::uint64_t, std::span<const double> weights, double total) {
        return detail::pick_command(rng.uniform01(), weights, total);
      },
      recorder);
}

// Replays a fixed command sequence through the same bookkeeping as
// simulate(). Stops early if the property decides or the sequence ends.
inline TraceSummary simulate_forced(const Model& model,
                                    const ParamVector& lambda,
                                    const PropPtr& property,
                                    std::span<const int> commands,
                                    std::uint64_t max_steps = 1000000) {
  return detail::simulate_core(
      model, lambda, property, max_steps,
      [&](std::uint64_t step, std::span<const double> weights, double) {
        if (step >= commands.size()) {
          throw ModelError("forced command sequence exhausted at step " +
                           std::to_string(step));
        }
        const int k = commands[step];
        if (k < 0 || static_cast<std::size_t>(k) >= weights.size() ||
            weights[static_cast<std::size_t>(k)] <= 0.0) {
          throw ModelError("forced command " + std::to_string(k) +
                           " is not enabled at step " + std::to_string(step));
        }
        return k;
      },
      nullptr);
}

struct PathStats {
  double log_density = 0.0;  // ln f(path, lambda)
  std::vector<double> denom;
  std::vector<std::uint64_t> counts;
  State final_state;
};

// Exact log-density (and per-command statistics) of a fixed path under
// parameters lambda, replayed from the initial state.
inline PathStats path_statistics(const Model& model, const ParamVector& lambda,
                                 std::span<const int> commands) {
  const std::size_t n = model.num_commands();
  if (lambda.size() != n) {
    throw ModelError("parameter vector size mismatch");
  }
  PathStats out;
  out.denom.assign(n, 0.0);
  out.counts.assign(n, 0);

  State state = model.initial_state();
  std::vector<double> rates(n);
  for (std::size_t s = 0; s < commands.size(); ++s) {
    const int k = commands[s];
    if (k < 0 || static_cast<std::size_t>(k) >= n) {
      throw ModelError("path step " + std::to_string(s) +
                       " names a nonexistent command");
    }
    evaluate_rates(model, state, rates);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += lambda[j] * rates[j];
    const double w = lambda[static_cast<std::size_t>(k)] *
                     rates[static_cast<std::size_t>(k)];
    if (w <= 0.0) {
      throw ModelError("command '" +
                       model.commands[static_cast<std::size_t>(k)].name +
                       "' is not enabled at path step " + std::to_string(s));
    }
    out.log_density += std::log(w / total);
    for (std::size_t j = 0; j < n; ++j) out.denom[j] += rates[j] / total;
    ++out.counts[static_cast<std::size_t>(k)];
    state = apply_command(model, state, k);
  }
  out.final_state = std::move(state);
  return out;
}

inline double log_path_density(const Model& model, const ParamVector& lambda,
                               std::span<const int> commands) {
  return path_statistics(model, lambda, commands).log_density;
}

namespace detail {

// Traces are processed in fixed-size chunks with chunk-local accumulation
// and an ordered merge, so results are identical for any worker count.
inline constexpr std::uint64_t kBatchChunk = 512;

template <class ChunkFn>
void run_chunks(std::uint64_t num_chunks, int workers, ChunkFn&& fn) {
  if (workers < 1) workers = 1;
  if (workers == 1 || num_chunks <= 1) {
    for (std::uint64_t c = 0; c < num_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto body = [&] {
    try {
      while (true) {
        const std::uint64_t c = next.fetch_add(1);
        if (c >= num_chunks) break;
        fn(c);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  const auto count = static_cast<std::uint64_t>(workers);
  for (std::uint64_t t = 1; t < count && t < num_chunks; ++t) {
    pool.emplace_back(body);
  }
  body();
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Runs `count` independent traces with per-trace seeds derived from
// (master_seed, stream, trace index) and returns the summaries in trace
// order. Deterministic for any worker count.
inline std::vector<TraceSummary> simulate_batch_collect(
    const Model& model, const ParamVector& lambda, const PropPtr& property,
    std::uint64_t master_seed, std::uint64_t stream, std::uint64_t count,
    std::uint64_t max_steps, int workers) {
  std::vector<TraceSummary> out(count);
  const std::uint64_t chunks =
      (count + detail::kBatchChunk - 1) / detail::kBatchChunk;
  detail::run_chunks(chunks, workers, [&](std::uint64_t c) {
    const std::uint64_t lo = c * detail::kBatchChunk;
    const std::uint64_t hi = std::min(count, lo + detail::kBatchChunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      out[i] = simulate(model, lambda, property,
                        derive_seed(master_seed, stream, i), max_steps);
    }
  });
  return out;
}

// Reduction variant for large batches: Partial must be default-constructible
// with add(const TraceSummary&) and merge(const Partial&). Chunk partials
// are merged in chunk order, so sums do not depend on the worker count.
template <class Partial>
Partial simulate_batch_reduce(const Model& model, const ParamVector& lambda,
                              const PropPtr& property,
                              std::uint64_t master_seed, std::uint64_t stream,
                              std::uint64_t count, std::uint64_t max_steps,
                              int workers) {
  const std::uint64_t chunks =
      (count + detail::kBatchChunk - 1) / detail::kBatchChunk;
  std::vector<Partial> partials(chunks);
  detail::run_chunks(chunks, workers, [&](std::uint64_t c) {
    const std::uint64_t lo = c * detail::kBatchChunk;
    const std::uint64_t hi = std::min(count, lo + detail::kBatchChunk);
    Partial part;
    for (std::uint64_t i = lo; i < hi; ++i) {
      part.add(simulate(model, lambda, property,
                        derive_seed(master_seed, stream, i), max_steps));
    }
    partials[c] = std::move(part);
  });
  Partial total;
  for (Partial& p : partials) total.merge(p);
  return total;
}

}  // namespace resmc
