#pragma once

#include <string>
#include <vector>

#include "fxlab/config.hpp"
#include "fxlab/features.hpp"
#include "fxlab/models.hpp"

namespace fxlab {

// Raw inputs plus the engineered feature table, loaded once per run.
struct ExperimentInputs {
  SeriesFrame aligned;
  std::vector<DocumentRecord> docs;
  FeatureBundle bundle;
};

ExperimentInputs load_inputs(const ExperimentConfig& cfg);

// What a harness wrote and how its model rows fared. `artifacts` holds the
// file names created under the output directory; the two bodies are kept
// so callers can assert on exact bytes without re-reading the files.
struct HarnessOutcome {
  int ok_rows = 0;
  int failed_rows = 0;
  int external_rows = 0;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
  std::string metrics_csv;
  std::string report_json;
};

// Full model comparison on the combined feature set: ranked metric table,
// per-model predictions, optimizer logs, sentiment / topic plot series.
HarnessOutcome run_compare(const ExperimentConfig& cfg,
                           const std::string& out_dir);

// Feature-set ablation: every ablation model evaluated on the text-only,
// financial-only and combined sets, plus financial-vs-combined
// improvement rates.
HarnessOutcome run_text_ablation(const ExperimentConfig& cfg,
                                 const std::string& out_dir);

// Textual-kind ablation: the first ablation model evaluated under kind
// combinations (default: {1,2,3}, the three pairs, the three singletons).
HarnessOutcome run_kind_ablation(const ExperimentConfig& cfg,
                                 const std::string& out_dir);

// All-pairs Diebold-Mariano matrix over forecast errors plus a ranking by
// pairwise wins. `predictions_from` names a prior report directory whose
// predictions.csv should be reused; empty means run the models afresh.
HarnessOutcome run_dm(const ExperimentConfig& cfg, const std::string& out_dir,
                      const std::string& predictions_from = "");

// Re-emits one of a report's plot series as a long-format CSV
// (series, date-or-index, value). `what` must be one of
// forecast_vs_actual, topic_trend, si_series, convergence.
std::string emit_plot_data(const std::string& report_dir,
                           const std::string& what,
                           const std::string& out_path = "");

}  // namespace fxlab
