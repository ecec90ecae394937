#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "resmc/cross_entropy.hpp"
#include "resmc/estimators.hpp"
#include "resmc/model.hpp"
#include "resmc/simulate.hpp"

namespace resmc {

// 17 significant digits: enough to round-trip any double from text.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_convergence_csv(std::ostream& out,
                                  const std::vector<CEIterationRecord>& rows) {
  const std::size_t n = rows.empty() ? 0 : rows.front().lambda.size();
  out << "iteration";
  for (std::size_t k = 1; k <= n; ++k) out << ",lambda_" << k;
  out << ",hits,undecided,gamma_hat,sample_variance\n";
  for (std::size_t j = 0; j < rows.size(); ++j) {
    out << j;
    for (double v : rows[j].lambda) out << ',' << csv_double(v);
    out << ',' << rows[j].hits << ',' << rows[j].undecided << ','
        << csv_double(rows[j].gamma_hat) << ','
        << csv_double(rows[j].sample_variance) << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const Model& model,
                            const TraceRecorder& rec) {
  out << "step,command";
  for (const VariableDecl& v : model.variables) out << ',' << v.name;
  out << '\n';
  for (std::size_t i = 0; i < rec.states.size(); ++i) {
    out << i << ',';
    if (i > 0) out << model.commands[static_cast<std::size_t>(rec.commands[i - 1])].name;
    for (std::int64_t v : rec.states[i].values) out << ',' << v;
    out << '\n';
  }
}

inline nlohmann::json to_json(const EstimateResult& r) {
  return nlohmann::json{{"gamma_hat", r.gamma_hat},
                        {"sample_variance", r.sample_variance},
                        {"n", r.n},
                        {"hits", r.hits},
                        {"undecided", r.undecided},
                        {"relative_error_proxy", r.relative_error_proxy},
                        {"warnings", r.warnings}};
}

inline nlohmann::json to_json(const InitialSearchResult& r) {
  return nlohmann::json{{"lambda", r.lambda.values},
                        {"hits", r.hits},
                        {"restarts", r.restarts}};
}

inline const char* ce_status_name(CEStatus s) {
  switch (s) {
    case CEStatus::kConverged:
      return "converged";
    case CEStatus::kMaxIterations:
      return "max-iterations";
    case CEStatus::kAbortedNoHits:
      return "aborted-no-hits";
  }
  return "unknown";
}

inline nlohmann::json to_json(const CERunResult& r) {
  nlohmann::json history = nlohmann::json::array();
  for (const CEIterationRecord& row : r.history) {
    history.push_back(nlohmann::json{{"lambda", row.lambda},
                                     {"n", row.n},
                                     {"hits", row.hits},
                                     {"undecided", row.undecided},
                                     {"gamma_hat", row.gamma_hat},
                                     {"sample_variance", row.sample_variance},
                                     {"retried", row.retried}});
  }
  std::vector<int> seen(r.final_seen.begin(), r.final_seen.end());
  return nlohmann::json{{"status", ce_status_name(r.status)},
                        {"iterations", r.iterations},
                        {"initial", to_json(r.initial)},
                        {"final_lambda", r.final_lambda.values},
                        {"final_seen", seen},
                        {"history", history}};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

}  // namespace resmc
