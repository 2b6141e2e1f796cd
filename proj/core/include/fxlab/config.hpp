#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxlab/baselines.hpp"
#include "fxlab/ingest.hpp"
#include "fxlab/metaheuristics.hpp"
#include "fxlab/rnn.hpp"
#include "fxlab/textmine.hpp"

namespace fxlab {

// Everything a harness run needs, loaded from one JSON file. Every knob
// has an explicit value after loading; the materialized form (defaults
// included) is what gets hashed into report provenance.
struct DataConfig {
  std::string prices;
  std::vector<std::string> indicators;
  std::string documents;
  std::string stopwords;  // empty -> bundled default list
  std::string date_column = "date";
  std::string target_column = "close";
  FillPolicy fill_policy = FillPolicy::forward_fill;
};

struct SegmentationConfig {
  std::string train_start;
  std::string train_end;
  int context_days = 30;
  std::string forecast_start;
  std::string forecast_end;
};

struct FeatureConfig {
  std::vector<std::string> recipe = {"lagged_indicators", "si_news", "si_analysis",
                                     "class_news", "class_analysis", "topic_scores"};
  double sentiment_decay = 7.0;
  int sentiment_window = 0;  // 0 -> full-history recurrence
  int topics = 4;
  double lda_alpha = 0.0;  // <= 0 -> 50/K
  double lda_beta = 0.01;
  int lda_iterations = 400;
  int lda_burn_in = 100;
  int token_min_len = 2;
  int token_min_doc_freq = 2;
};

struct TrainingConfig {
  CellKind cell = CellKind::lstm;
  int hidden_units = 32;
  int timesteps = 8;
  double learning_rate = 1e-3;
  int epochs = 120;
  int batch_size = 32;
  int patience = 20;
  double clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double valid_fraction = 0.15;
};

struct OptimizerConfig {
  Algo algo = Algo::pso;
  int population = 8;
  int iterations = 6;
  double w = 0.729;
  double c1 = 1.49445;
  double c2 = 1.49445;
  int tune_epochs = 30;
  // box bounds of the hyperparameter space
  int hidden_min = 8, hidden_max = 64;
  int timesteps_min = 2, timesteps_max = 12;
  double lr_min = 1e-4, lr_max = 1e-1;
  int log2_batch_min = 3, log2_batch_max = 6;  // batch in {8,16,32,64}
  OptimizeOptions variant_options;             // GA/CS/WOA/BAT knobs
};

struct BaselineConfig {
  int var_max_lag = 6;
  LagCriterion lag_criterion = LagCriterion::aic;
  int ar_p = 2;
  int ar_d = 1;
  int linear_lags = 5;
  int forest_trees = 50;
  int forest_depth = 5;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  DataConfig data;
  SegmentationConfig segmentation;
  FeatureConfig features;
  TrainingConfig training;
  OptimizerConfig optimizer;
  BaselineConfig baselines;
  std::vector<std::string> models = {"pso-lstm", "pso-gru", "lstm", "gru",
                                     "var",      "linear",  "ar",   "garch"};
  std::vector<std::string> ablation_models = {"pso-lstm", "lstm", "var", "linear"};
  std::vector<std::vector<int>> kind_combos;  // empty -> the standard 7 rows
  std::string dm_loss = "squared";
  int dm_horizon = 1;

  // Canonical JSON with every default filled in, and its FNV-1a hash.
  std::string materialize() const;
  std::string config_hash() const;
};

// Parses the JSON config; unknown keys are an error. Throws ConfigError.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& origin);

}  // namespace fxlab
