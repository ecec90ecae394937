#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "resmc/model.hpp"
#include "resmc/property.hpp"
#include "resmc/rng.hpp"
#include "resmc/simulate.hpp"

namespace resmc {

struct EstimateResult {
  double gamma_hat = 0.0;
  double sample_variance = 0.0;  // n-1 divisor over per-trace terms z_i * L_i
  std::uint64_t n = 0;
  std::uint64_t hits = 0;
  std::uint64_t undecided = 0;
  double relative_error_proxy = 0.0;  // sqrt(variance/n) / gamma_hat
  std::vector<std::string> warnings;
};

namespace detail {

// Per-chunk accumulator for z_i * L_i terms. Extended precision keeps sums
// of huge likelihood ratios (log_l beyond double's exp range) meaningful.
struct WeightedPartial {
  std::uint64_t n = 0;
  std::uint64_t hits = 0;
  std::uint64_t undecided = 0;
  long double sum_t = 0.0L;
  long double sum_t2 = 0.0L;
  bool overflow = false;

  void add(const TraceSummary& s) {
    ++n;
    if (s.undecided) ++undecided;
    if (s.z == 1) {
      ++hits;
      if (s.log_l > 700.0) overflow = true;
      const long double t = expl(static_cast<long double>(s.log_l));
      sum_t += t;
      sum_t2 += t * t;
    }
  }

  void merge(const WeightedPartial& o) {
    n += o.n;
    hits += o.hits;
    undecided += o.undecided;
    sum_t += o.sum_t;
    sum_t2 += o.sum_t2;
    overflow = overflow || o.overflow;
  }
};

inline EstimateResult finish_weighted(const WeightedPartial& p,
                                      bool is_tilted) {
  EstimateResult r;
  r.n = p.n;
  r.hits = p.hits;
  r.undecided = p.undecided;
  const auto n = static_cast<long double>(p.n);
  const long double mean = p.n > 0 ? p.sum_t / n : 0.0L;
  r.gamma_hat = static_cast<double>(mean);
  if (p.n > 1) {
    long double var = (p.sum_t2 - p.sum_t * p.sum_t / n) / (n - 1.0L);
    if (var < 0.0L) var = 0.0L;  // rounding can drive an exact zero negative
    r.sample_variance = static_cast<double>(var);
  }
  r.relative_error_proxy =
      r.gamma_hat > 0.0
          ? std::sqrt(r.sample_variance / static_cast<double>(p.n)) /
                r.gamma_hat
          : std::numeric_limits<double>::infinity();
  if (p.overflow) {
    r.warnings.push_back(
        "likelihood ratios exceeded double range; terms were accumulated in "
        "extended precision");
  }
  if (!std::isfinite(r.gamma_hat) || !std::isfinite(r.sample_variance)) {
    r.warnings.push_back("estimate overflowed even extended precision");
  }
  if (is_tilted && r.gamma_hat > 1.0) {
    r.warnings.push_back(
        "importance-sampling estimate exceeds 1; the tilting parameters are "
        "a poor fit for this property");
  }
  return r;
}

}  // namespace detail

// Crude Monte Carlo: mean of the 0/1 verdicts under the untilted chain. The
// sample variance follows the Bernoulli identity rather than a second pass.
inline EstimateResult mc_estimate(const Model& model, const PropPtr& property,
                                  std::uint64_t n, std::uint64_t seed,
                                  std::uint64_t max_steps = 1000000,
                                  int workers = 1) {
  if (n < 1) throw std::domain_error("mc_estimate: n must be >= 1");
  const ParamVector mu = ParamVector::ones(model.num_commands());
  auto p = simulate_batch_reduce<detail::WeightedPartial>(
      model, mu, property, seed, stream_id(RngPhase::kMonteCarlo, 0), n,
      max_steps, workers);
  EstimateResult r;
  r.n = p.n;
  r.hits = p.hits;
  r.undecided = p.undecided;
  r.gamma_hat = static_cast<double>(p.hits) / static_cast<double>(p.n);
  if (p.n > 1) {
    r.sample_variance = r.gamma_hat * (1.0 - r.gamma_hat) *
                        static_cast<double>(p.n) /
                        static_cast<double>(p.n - 1);
  }
  r.relative_error_proxy =
      r.gamma_hat > 0.0
          ? std::sqrt(r.sample_variance / static_cast<double>(p.n)) /
                r.gamma_hat
          : std::numeric_limits<double>::infinity();
  return r;
}

// Importance sampling under tilting lambda: mean and sample variance of the
// per-trace terms z_i * L_i.
inline EstimateResult is_estimate(const Model& model, const ParamVector& lambda,
                                  const PropPtr& property, std::uint64_t n,
                                  std::uint64_t seed,
                                  std::uint64_t max_steps = 1000000,
                                  int workers = 1,
                                  std::uint64_t stream = stream_id(
                                      RngPhase::kFinalEstimate, 0)) {
  if (n < 1) throw std::domain_error("is_estimate: n must be >= 1");
  auto p = simulate_batch_reduce<detail::WeightedPartial>(
      model, lambda, property, seed, stream, n, max_steps, workers);
  return detail::finish_weighted(p, true);
}

// Importance-sampling estimate over already-generated summaries (used when
// reusing the optimizer's final-iteration traces).
inline EstimateResult estimate_from_summaries(
    const std::vector<TraceSummary>& summaries, bool tilted = true) {
  detail::WeightedPartial p;
  for (const TraceSummary& s : summaries) p.add(s);
  return detail::finish_weighted(p, tilted);
}

// Okamoto/Hoeffding sample size: the smallest n with
// P(|gamma_hat - gamma| >= epsilon) <= delta for Bernoulli means.
inline std::uint64_t chernoff_sample_size(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw std::domain_error("chernoff_sample_size: epsilon must be in (0,1)");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::domain_error("chernoff_sample_size: delta must be in (0,1)");
  }
  const double raw = std::ceil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon));
  if (raw < 1.0) return 1;
  return static_cast<std::uint64_t>(raw);
}

struct VarianceReduction {
  double ratio = 0.0;  // Bernoulli variance of MC over IS sample variance
  std::vector<std::string> warnings;
};

inline VarianceReduction variance_reduction_report(
    double gamma, const EstimateResult& is_result) {
  VarianceReduction out;
  const double bernoulli = gamma * (1.0 - gamma);
  if (is_result.sample_variance > 0.0) {
    out.ratio = bernoulli / is_result.sample_variance;
    return out;
  }
  out.ratio = std::numeric_limits<double>::infinity();
  out.warnings.push_back(
      "importance-sampling variance is exactly zero (all weighted terms "
      "identical); the reduction factor is unbounded and likely an artifact "
      "of a degenerate path distribution");
  return out;
}

inline VarianceReduction variance_reduction_report(
    const EstimateResult& mc_result, const EstimateResult& is_result) {
  return variance_reduction_report(mc_result.gamma_hat, is_result);
}

}  // namespace resmc
