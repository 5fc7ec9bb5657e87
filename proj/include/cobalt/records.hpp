// Persistence and aggregation: versioned JSON run records (with timings in
// a sidecar file so core records stay byte-deterministic), replicate
// aggregation with the all-replicates-feasible masking rule, CSV emission,
// and a deterministic SVG plotter for regret curves.

#pragma once

#include <string>
#include <vector>

#include "cobalt/loop.hpp"

namespace cobalt {

inline constexpr int kRecordSchemaVersion = 1;

// git-style content hash (SHA-1 of "blob <len>\0<content>"), hex encoded
std::string content_hash(const std::string& content);

// full surrogate snapshot (hyperparameters, normalization constants,
// training data, cached factorization); exact round-trip
std::string gp_model_to_json(const GPModel& model);
GPModel gp_model_from_json(const std::string& json_text);

// deterministic record JSON (timings excluded)
std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& json_text);

// timing sidecar JSON: per-iteration t_gp entries, t_opt, t_eval
std::string timings_to_json(const RunRecord& record);
void timings_from_json(const std::string& json_text, RunRecord& record);

// writes <path> and the <path>.timings.json sidecar
void write_record(const std::string& path, const RunRecord& record);
// reads a record and, when present, its sidecar
RunRecord read_record(const std::string& path);

struct AggregateRow {
  std::string problem;
  std::string variant;
  int iteration = 0;
  bool masked = false;       // some replicate had no feasible incumbent yet
  double mean_log10_regret = 0.0;
  bool has_ci = false;       // false for a single replicate
  double ci_halfwidth = 0.0;
  int n_feasible = 0;
};

// Per-iteration mean log10-regret and 1.96 sd/sqrt(R) halfwidth over
// replicates; throws on mixed problem/variant/budget cells. Order of the
// input records does not affect the result.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records);

// CSV with header problem,variant,iteration,mean_log10_regret,
// ci_halfwidth,n_feasible; masked means and absent halfwidths are "null".
// A leading comment line carries the schema version and input hash.
std::string aggregate_to_csv(const std::vector<AggregateRow>& rows,
                             const std::string& inputs_hash = "");
std::vector<AggregateRow> aggregate_from_csv(const std::string& csv_text);

// One polyline plus error bars per variant; byte-identical for equal input.
std::string regret_curves_svg(const std::vector<AggregateRow>& rows);

}  // namespace cobalt
