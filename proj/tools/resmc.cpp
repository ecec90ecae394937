// Command-line front end: crude Monte Carlo, cross-entropy optimization,
// importance-sampling estimation, exact chain analysis, and single-trace
// inspection over guarded-command models.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "resmc/cross_entropy.hpp"
#include "resmc/errors.hpp"
#include "resmc/estimators.hpp"
#include "resmc/exact.hpp"
#include "resmc/io.hpp"
#include "resmc/model.hpp"
#include "resmc/parse.hpp"
#include "resmc/property.hpp"
#include "resmc/simulate.hpp"
#include "resmc/version.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string model_path;
  std::string property;
  std::uint64_t seed = 1;
  std::uint64_t max_steps = 1000000;
  int workers = 1;
  std::string json_path;
  std::string manifest_path;
};

int default_workers() {
  if (const char* env = std::getenv("RESMC_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 1;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("-m,--model", o.model_path, "model file (.gcm)")
      ->required();
  cmd->add_option("-p,--property", o.property, "temporal property")
      ->required();
  cmd->add_option("-s,--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--max-steps", o.max_steps, "per-trace step cap")
      ->capture_default_str();
  cmd->add_option("-w,--workers", o.workers,
                  "simulation threads (default: RESMC_WORKERS or 1)");
  cmd->add_option("--json", o.json_path, "write result JSON here");
  cmd->add_option("--manifest", o.manifest_path, "write manifest JSON here");
}

resmc::Model load_model(const std::string& path) {
  return resmc::parse_model(resmc::read_file(path));
}

resmc::ParamVector parse_lambda_list(const std::string& text, std::size_t n) {
  resmc::ParamVector out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(
                                       item[used]))) {
        ++used;
      }
      if (used != item.size()) throw std::invalid_argument(item);
      out.values.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("cannot parse '" + item +
                               "' in the parameter list");
    }
  }
  if (out.size() != n) {
    throw std::runtime_error("parameter list has " +
                             std::to_string(out.size()) + " entries; model needs " +
                             std::to_string(n));
  }
  for (double v : out.values) {
    if (!(v > 0.0)) {
      throw std::runtime_error("tilting parameters must be positive");
    }
  }
  return out;
}

// Experiment identity only: no output paths, no worker count, so equal
// manifests imply byte-identical result artifacts.
json base_manifest(const char* mode, const CommonOpts& o) {
  return json{{"version", resmc::kVersion},
              {"mode", mode},
              {"model", o.model_path},
              {"property", o.property},
              {"seed", o.seed},
              {"max_steps", o.max_steps}};
}

void emit(const CommonOpts& o, const json& manifest, const json& result,
          const std::string& csv_path = "") {
  json document{{"manifest", manifest}, {"result", result}};
  const std::string text = document.dump(2) + "\n";
  std::cout << text;
  if (!o.json_path.empty()) resmc::write_file(o.json_path, text);
  if (!o.manifest_path.empty()) {
    resmc::write_file(o.manifest_path, manifest.dump(2) + "\n");
  }
  if (!csv_path.empty()) {
    resmc::write_file(csv_path + ".manifest.json", manifest.dump(2) + "\n");
  }
}

int run_mc(const CommonOpts& o, std::uint64_t n, double epsilon, double delta,
           bool have_n) {
  const resmc::Model model = load_model(o.model_path);
  const resmc::PropPtr prop = resmc::parse_property(o.property, model);
  if (!have_n) n = resmc::chernoff_sample_size(epsilon, delta);
  const resmc::EstimateResult r =
      resmc::mc_estimate(model, prop, n, o.seed, o.max_steps, o.workers);

  json manifest = base_manifest("mc", o);
  manifest["n"] = n;
  if (!have_n) {
    manifest["epsilon"] = epsilon;
    manifest["delta"] = delta;
  }
  emit(o, manifest, resmc::to_json(r));
  return 0;
}

int run_is(const CommonOpts& o, std::uint64_t n, const std::string& lambda_text,
           double oracle_gamma) {
  const resmc::Model model = load_model(o.model_path);
  const resmc::PropPtr prop = resmc::parse_property(o.property, model);
  const resmc::ParamVector lambda =
      parse_lambda_list(lambda_text, model.num_commands());
  const resmc::EstimateResult r = resmc::is_estimate(
      model, lambda, prop, n, o.seed, o.max_steps, o.workers);

  json manifest = base_manifest("is", o);
  manifest["n"] = n;
  manifest["lambda"] = lambda.values;
  json result = resmc::to_json(r);
  if (oracle_gamma > 0.0) {
    const resmc::VarianceReduction vr =
        resmc::variance_reduction_report(oracle_gamma, r);
    result["variance_reduction"] = vr.ratio;
    for (const std::string& w : vr.warnings) result["warnings"].push_back(w);
  }
  emit(o, manifest, result);
  return 0;
}

struct CeOpts {
  resmc::CEConfig config;
  std::string smoothing = "halving";
  std::string lambda_text;
  std::string csv_path;
  std::uint64_t n_is = 0;
  bool reuse_traces = false;
  double oracle_gamma = 0.0;
};

int run_ce(const CommonOpts& o, CeOpts& c) {
  const resmc::Model model = load_model(o.model_path);
  const resmc::PropPtr prop = resmc::parse_property(o.property, model);

  c.config.master_seed = o.seed;
  c.config.max_steps = o.max_steps;
  c.config.workers = o.workers;
  c.config.smoothing = c.smoothing == "additive" ? resmc::Smoothing::kAdditive
                                                 : resmc::Smoothing::kHalving;
  std::optional<resmc::ParamVector> initial;
  if (!c.lambda_text.empty()) {
    initial = parse_lambda_list(c.lambda_text, model.num_commands());
  }

  json manifest = base_manifest("ce", o);
  manifest["n_j"] = c.config.n_per_iteration;
  manifest["iterations"] = c.config.max_iterations;
  manifest["smoothing"] = c.smoothing;
  if (c.smoothing == "additive") {
    manifest["smoothing_fraction"] = c.config.smoothing_fraction;
  }
  manifest["normalization_constant"] = c.config.normalization_constant;
  manifest["convergence_tol"] = c.config.convergence_tol;
  manifest["convergence_window"] = c.config.convergence_window;
  manifest["min_hits"] = c.config.min_hits;
  manifest["n_0"] = c.config.n0;
  manifest["max_restarts"] = c.config.max_restarts;
  if (initial) manifest["initial_lambda"] = initial->values;
  if (c.n_is > 0) {
    manifest["n_is"] = c.n_is;
    manifest["reuse_traces"] = c.reuse_traces;
  }

  const resmc::CERunResult run =
      resmc::ce_optimize(model, prop, c.config, initial);
  json result = resmc::to_json(run);

  if (c.n_is > 0 && run.status != resmc::CEStatus::kAbortedNoHits) {
    resmc::EstimateResult fin =
        c.reuse_traces
            ? resmc::estimate_from_summaries(run.last_summaries)
            : resmc::is_estimate(model, run.final_lambda, prop, c.n_is, o.seed,
                                 o.max_steps, o.workers);
    result["final_estimate"] = resmc::to_json(fin);
    if (c.oracle_gamma > 0.0) {
      const resmc::VarianceReduction vr =
          resmc::variance_reduction_report(c.oracle_gamma, fin);
      result["variance_reduction"] = vr.ratio;
    }
  }

  if (!c.csv_path.empty()) {
    std::ostringstream csv;
    resmc::write_convergence_csv(csv, run.history);
    resmc::write_file(c.csv_path, csv.str());
  }
  emit(o, manifest, result, c.csv_path);
  return run.status == resmc::CEStatus::kAbortedNoHits ? 4 : 0;
}

int run_exact(const CommonOpts& o, std::uint64_t cap, double vi_tol,
              const std::string& matrix_path) {
  const resmc::Model model = load_model(o.model_path);
  const resmc::PropPtr prop = resmc::parse_property(o.property, model);
  const resmc::ExplicitChain chain = resmc::build_state_space(model, cap);
  const double p_iter = resmc::exact_probability(chain, prop, vi_tol);
  const double p_linear = resmc::exact_probability_linear(chain, prop);

  if (!matrix_path.empty()) {
    std::ostringstream out;
    resmc::export_matrix(chain, out);
    resmc::write_file(matrix_path, out.str());
  }

  json manifest = base_manifest("exact", o);
  manifest["cap"] = cap;
  manifest["vi_tol"] = vi_tol;
  json result{{"states", chain.num_states()},
              {"probability", p_iter},
              {"probability_linear", p_linear},
              {"residual", std::abs(p_iter - p_linear)}};
  emit(o, manifest, result);
  return 0;
}

int run_trace(const CommonOpts& o, const std::string& lambda_text,
              std::uint64_t index, const std::string& dump_path) {
  const resmc::Model model = load_model(o.model_path);
  const resmc::PropPtr prop = resmc::parse_property(o.property, model);
  const resmc::ParamVector lambda =
      lambda_text.empty() ? resmc::ParamVector::ones(model.num_commands())
                          : parse_lambda_list(lambda_text, model.num_commands());

  resmc::TraceRecorder rec;
  const resmc::TraceSummary s = resmc::simulate(
      model, lambda, prop,
      resmc::derive_seed(o.seed,
                         resmc::stream_id(resmc::RngPhase::kTraceDebug, 0),
                         index),
      o.max_steps, &rec);

  std::ostringstream csv;
  resmc::write_trace_csv(csv, model, rec);
  if (!dump_path.empty()) {
    resmc::write_file(dump_path, csv.str());
  } else {
    std::cout << csv.str();
  }

  json manifest = base_manifest("trace", o);
  manifest["lambda"] = lambda.values;
  manifest["trace_index"] = index;
  const char* reason = s.reason == resmc::StopReason::kDecided ? "decided"
                       : s.reason == resmc::StopReason::kDeadlock
                           ? "deadlock"
                           : "step-cap";
  json result{{"z", s.z},           {"steps", s.steps},
              {"log_l", s.log_l},   {"undecided", s.undecided},
              {"reason", reason},   {"counts", s.counts},
              {"denominators", s.denom}};
  if (!o.json_path.empty()) {
    json document{{"manifest", manifest}, {"result", result}};
    resmc::write_file(o.json_path, document.dump(2) + "\n");
  }
  if (!o.manifest_path.empty()) {
    resmc::write_file(o.manifest_path, manifest.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rare-event statistical model checking via cross-entropy "
               "importance sampling"};
  app.set_version_flag("--version", resmc::kVersion);
  app.require_subcommand(1);

  CommonOpts common;
  common.workers = default_workers();

  auto* mc = app.add_subcommand("mc", "crude Monte Carlo estimate");
  std::uint64_t mc_n = 0;
  double epsilon = 0.0, delta = 0.0;
  add_common(mc, common);
  auto* mc_n_opt = mc->add_option("-n,--n", mc_n, "number of traces");
  auto* eps_opt = mc->add_option("--epsilon", epsilon,
                                 "absolute error for automatic sample size");
  auto* delta_opt =
      mc->add_option("--delta", delta, "1 - confidence for automatic size");
  eps_opt->needs(delta_opt);
  delta_opt->needs(eps_opt);

  auto* ce = app.add_subcommand("ce", "cross-entropy parameter optimization");
  CeOpts ce_opts;
  add_common(ce, common);
  ce->add_option("--nj", ce_opts.config.n_per_iteration,
                 "traces per iteration")
      ->capture_default_str();
  ce->add_option("--iterations", ce_opts.config.max_iterations,
                 "maximum iterations")
      ->capture_default_str();
  ce->add_option("--smoothing", ce_opts.smoothing, "halving | additive")
      ->check(CLI::IsMember({"halving", "additive"}))
      ->capture_default_str();
  ce->add_option("--smoothing-fraction", ce_opts.config.smoothing_fraction,
                 "fraction for additive smoothing")
      ->capture_default_str();
  ce->add_option("--norm-const", ce_opts.config.normalization_constant,
                 "parameter-sum constant (0 = number of commands)")
      ->capture_default_str();
  ce->add_option("--tol", ce_opts.config.convergence_tol,
                 "relative convergence tolerance")
      ->capture_default_str();
  ce->add_option("--window", ce_opts.config.convergence_window,
                 "consecutive converged iterations required")
      ->capture_default_str();
  ce->add_option("--min-hits", ce_opts.config.min_hits,
                 "accepted traces required per iteration")
      ->capture_default_str();
  ce->add_option("--n0", ce_opts.config.n0, "traces per initial-search candidate")
      ->capture_default_str();
  ce->add_option("--max-restarts", ce_opts.config.max_restarts,
                 "initial-search random candidates")
      ->capture_default_str();
  ce->add_option("--lambda", ce_opts.lambda_text,
                 "comma-separated start parameters (skips initial search)");
  ce->add_option("--csv", ce_opts.csv_path, "write per-iteration CSV here");
  ce->add_option("--nis", ce_opts.n_is,
                 "traces for a final estimate at the converged parameters");
  ce->add_flag("--reuse-traces", ce_opts.reuse_traces,
               "final estimate from the last iteration's traces");
  ce->add_option("--oracle-gamma", ce_opts.oracle_gamma,
                 "known probability for variance-reduction reporting");

  auto* is = app.add_subcommand("is", "importance-sampling estimate");
  std::uint64_t is_n = 0;
  std::string is_lambda;
  double is_oracle_gamma = 0.0;
  add_common(is, common);
  is->add_option("-n,--n", is_n, "number of traces")->required();
  is->add_option("--lambda", is_lambda, "comma-separated tilting parameters")
      ->required();
  is->add_option("--oracle-gamma", is_oracle_gamma,
                 "known probability for variance-reduction reporting");

  auto* exact = app.add_subcommand("exact", "explicit-state probability");
  std::uint64_t cap = 1000000;
  double vi_tol = 1e-12;
  std::string matrix_path;
  add_common(exact, common);
  exact->add_option("--cap", cap, "state-count cap")->capture_default_str();
  exact->add_option("--vi-tol", vi_tol, "value-iteration tolerance")
      ->capture_default_str();
  exact->add_option("--export-matrix", matrix_path,
                    "write transition matrix (row col prob) here");

  auto* trace = app.add_subcommand("trace", "generate and dump one trace");
  std::string trace_lambda, dump_path;
  std::uint64_t trace_index = 0;
  add_common(trace, common);
  trace->add_option("--lambda", trace_lambda,
                    "comma-separated tilting parameters (default untilted)");
  trace->add_option("--index", trace_index, "trace index within the seed")
      ->capture_default_str();
  trace->add_option("--dump", dump_path, "write step CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (mc->parsed()) {
      if (mc_n_opt->count() == 0 && eps_opt->count() == 0) {
        std::cerr << "error: mc needs either --n or --epsilon/--delta\n";
        return 1;
      }
      return run_mc(common, mc_n, epsilon, delta, mc_n_opt->count() > 0);
    }
    if (ce->parsed()) return run_ce(common, ce_opts);
    if (is->parsed()) return run_is(common, is_n, is_lambda, is_oracle_gamma);
    if (exact->parsed()) return run_exact(common, cap, vi_tol, matrix_path);
    if (trace->parsed()) {
      return run_trace(common, trace_lambda, trace_index, dump_path);
    }
    return 1;
  } catch (const resmc::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const resmc::InitialSearchError& e) {
    std::cerr << "initial search failed: " << e.what() << "\n";
    return 3;
  } catch (const resmc::NoHitsError& e) {
    std::cerr << "no hits: " << e.what() << "\n";
    return 4;
  } catch (const resmc::StateSpaceTooLargeError& e) {
    std::cerr << "state space too large: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
