#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "fxlab/config.hpp"
#include "fxlab/features.hpp"
#include "fxlab/rnn.hpp"

namespace fxlab {

// One fitted model's forecast-segment output. `status` is "ok", "failed"
// (detail carries the error) or "external" (model family acknowledged but
// out of scope, e.g. the SVM/SVR/ECM comparison rows).
struct ModelRun {
  std::string name;
  std::string status = "ok";
  std::string detail;
  Eigen::VectorXd predictions;  // raw target units, one per forecast row
  std::vector<Date> dates;
  std::vector<double> convergence;  // tuned models: incumbent fitness/iter
  std::string search_log_csv;
  std::vector<std::pair<std::string, double>> hyperparameters;
};

bool model_is_external(const std::string& name);
// Models whose inputs are the engineered feature columns (as opposed to
// the univariate target-only families ar/garch).
bool model_uses_features(const std::string& name);
bool model_is_known(const std::string& name);

// Fits/trains `name` on the given feature columns (must include the
// target) and forecasts the config's forecast segment one step ahead.
// Throws on failure; the harness downgrades that to a failed row.
ModelRun run_model(const std::string& name, const ExperimentConfig& cfg,
                   const FeatureBundle& bundle,
                   const std::vector<std::string>& columns);

// Actual raw target over the forecast segment (shared by every model row).
struct ForecastFrame {
  std::vector<Date> dates;
  Eigen::VectorXd actual;
};

// The default-architecture network trained per the training config,
// returned whole so callers can checkpoint it alongside its forecasts.
struct TrainArtifacts {
  TrainedModel model;
  Eigen::VectorXd predictions;  // raw target units, forecast segment
  std::vector<Date> dates;
};

TrainArtifacts train_default_network(const ExperimentConfig& cfg,
                                     const FeatureBundle& bundle,
                                     const std::vector<std::string>& columns);

ForecastFrame forecast_actuals(const ExperimentConfig& cfg,
                               const FeatureBundle& bundle);

}  // namespace fxlab
