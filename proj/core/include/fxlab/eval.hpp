#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "fxlab/series.hpp"

namespace fxlab {

struct RegressionMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  std::optional<double> r2;  // absent when the actuals are constant
};

RegressionMetrics regression_metrics(const Eigen::VectorXd& actual,
                                     const Eigen::VectorXd& predicted);

// Binary precision/recall/F1 with each class treated as positive in turn.
// A zero denominator yields 0 and sets the flag.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
  bool zero_division = false;
};

struct ClassificationReport {
  ClassMetrics cls[2];
  ClassMetrics macro_avg;
  ClassMetrics weighted_avg;
};

ClassificationReport classification_metrics(const std::vector<int>& actual,
                                            const std::vector<int>& predicted);

// (financial - combined) / financial; positive means text features helped.
double improvement_rate(double metric_financial, double metric_combined);

// Recomputes a rate from raw cells and compares against a reported figure.
struct RateCheck {
  double recomputed = 0.0;
  double reported = 0.0;
  double delta = 0.0;
  bool flagged = false;  // recomputation disagrees beyond tolerance
};

RateCheck check_reported_rate(double metric_financial, double metric_combined,
                              double reported_rate, double tolerance = 5e-4);

enum class DmLoss { squared, absolute };

// Diebold-Mariano with Bartlett long-run variance (truncation horizon-1)
// and the Harvey small-sample correction; two-sided p from t(T-1).
// Identical error sequences return (0, 1) by convention.
struct DmResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

DmResult dm_test(const Eigen::VectorXd& errors_a,
                 const Eigen::VectorXd& errors_b,
                 DmLoss loss = DmLoss::squared, int horizon = 1);

// Lower metric = better. Ties share the mean rank. A model missing a
// metric is excluded from that ranking and flagged.
struct MetricTable {
  std::vector<std::string> models;
  std::vector<std::string> metrics;
  // values[model][metric]
  std::vector<std::vector<std::optional<double>>> values;
};

struct RankResult {
  // ranks[model][metric]; absent when the model was excluded
  std::vector<std::vector<std::optional<double>>> ranks;
  std::vector<std::optional<double>> weighted;  // mean of available ranks
  std::vector<std::string> flags;
};

RankResult rank_models(const MetricTable& table);

// Pearson correlations. Zero-variance columns are reported absent
// (valid=false, NaN row/column) rather than fabricated.
struct CorrelationResult {
  std::vector<std::string> names;
  Eigen::MatrixXd matrix;
  std::vector<bool> valid;
};

CorrelationResult correlation_matrix(const SeriesFrame& frame);

}  // namespace fxlab
