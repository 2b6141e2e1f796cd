#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fxlab/series.hpp"

namespace fxlab {

// Vector autoregression with intercept, coefficient blocks [A1 ... Ap].
struct VarModel {
  int p = 0;
  Eigen::VectorXd intercept;  // m
  Eigen::MatrixXd coeffs;     // m x (m*p)
  Eigen::MatrixXd resid_cov;  // m x m, MLE (divisor = effective sample)
};

// Per-equation least squares on rows p..T-1. Throws on a singular
// regressor matrix.
VarModel fit_var(const Eigen::MatrixXd& data, int p);

// Iterated multi-step forecast from the last p rows of history.
Eigen::MatrixXd forecast_var(const VarModel& model, const Eigen::MatrixXd& history,
                             int steps);

enum class LagCriterion { aic, bic };

std::string to_string(LagCriterion c);
LagCriterion lag_criterion_from_string(const std::string& s);

struct LagSelection {
  int p_best = 0;
  std::vector<double> criterion;  // index p-1 holds the value for lag p
};

// Bivariate (target, indicator) VAR over a common sample of rows
// max_lag..T-1. AIC = ln det(Sigma) + 2k/T, BIC = ln det(Sigma) +
// k ln(T)/T, k = m(mp+1). Ties take the smaller lag.
LagSelection select_lag(const Eigen::VectorXd& target,
                        const Eigen::VectorXd& indicator, int max_lag,
                        LagCriterion criterion = LagCriterion::aic);

// One (variable, lag, AIC) row per non-target column.
std::string lag_selection_report(const SeriesFrame& frame,
                                 const std::string& target_column, int max_lag,
                                 LagCriterion criterion = LagCriterion::aic);

struct LinearModel {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  bool ridge_fallback = false;
};

// OLS with intercept; rank-deficient systems fall back to ridge with
// lambda = 1e-8.
LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& x);

// AR(p) on the d-times differenced series (d in {0,1}).
struct ArModel {
  int p = 0;
  int d = 0;
  Eigen::VectorXd coef;
  double intercept = 0.0;
};

ArModel fit_ar(const Eigen::VectorXd& series, int p, int d);
Eigen::VectorXd forecast_ar(const ArModel& model, const Eigen::VectorXd& history,
                            int steps);

// AR(1) mean model with GARCH(1,1) innovations, fitted by penalized
// Gaussian maximum likelihood (Nelder-Mead).
struct Garch11 {
  double mean_c = 0.0;
  double mean_phi = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double log_likelihood = 0.0;
  int evaluations = 0;
};

Garch11 fit_garch11(const Eigen::VectorXd& returns, int max_evaluations = 20000);

struct GarchForecast {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

GarchForecast forecast_garch(const Garch11& model, const Eigen::VectorXd& history,
                             int steps);

// Bagged variance-reduction regression forest; importance is the total
// split variance reduction per feature, normalized to sum 1. Constant
// targets yield uniform importances.
Eigen::VectorXd forest_importance(const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, int n_trees,
                                  int max_depth, std::uint64_t seed);

// Recursive feature elimination: drop the `step` least important features
// per round until n_keep remain. Importance ties drop the
// lexicographically larger name so column order cannot matter.
std::vector<std::string> rfe(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names, int n_keep,
                             int n_trees, int max_depth, std::uint64_t seed,
                             int step = 1);

}  // namespace fxlab
