#include "fxlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fxlab/error.hpp"
#include "fxlab/numeric.hpp"

namespace fxlab {

RegressionMetrics regression_metrics(const Eigen::VectorXd& actual,
                                     const Eigen::VectorXd& predicted) {
  if (actual.size() != predicted.size()) {
    throw Error("regression_metrics: length mismatch (" +
                std::to_string(actual.size()) + " vs " +
                std::to_string(predicted.size()) + ")");
  }
  if (actual.size() == 0) throw Error("regression_metrics: empty input");

  const Eigen::ArrayXd err = (actual - predicted).array();
  RegressionMetrics m;
  m.mae = err.abs().mean();
  m.mse = err.square().mean();
  m.rmse = std::sqrt(m.mse);

  const double mean = actual.mean();
  const double ss_tot = (actual.array() - mean).square().sum();
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - err.square().sum() / ss_tot;
  }
  return m;
}

ClassificationReport classification_metrics(
    const std::vector<int>& actual, const std::vector<int>& predicted) {
  if (actual.size() != predicted.size()) {
    throw Error("classification_metrics: length mismatch");
  }
  if (actual.empty()) throw Error("classification_metrics: empty input");
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if ((actual[i] != 0 && actual[i] != 1) ||
        (predicted[i] != 0 && predicted[i] != 1)) {
      throw Error("classification_metrics: labels must be 0 or 1");
    }
  }

  ClassificationReport rep;
  for (int cls = 0; cls <= 1; ++cls) {
    int tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      if (actual[i] == cls) ++support;
      if (predicted[i] == cls && actual[i] == cls) ++tp;
      if (predicted[i] == cls && actual[i] != cls) ++fp;
      if (predicted[i] != cls && actual[i] == cls) ++fn;
    }
    ClassMetrics& m = rep.cls[cls];
    m.support = support;
    if (tp + fp > 0) {
      m.precision = double(tp) / double(tp + fp);
    } else {
      m.zero_division = true;
    }
    if (tp + fn > 0) {
      m.recall = double(tp) / double(tp + fn);
    } else {
      m.zero_division = true;
    }
    if (m.precision + m.recall > 0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      m.zero_division = true;
    }
  }

  rep.macro_avg.precision = (rep.cls[0].precision + rep.cls[1].precision) / 2.0;
  rep.macro_avg.recall = (rep.cls[0].recall + rep.cls[1].recall) / 2.0;
  rep.macro_avg.f1 = (rep.cls[0].f1 + rep.cls[1].f1) / 2.0;
  rep.macro_avg.support = rep.cls[0].support + rep.cls[1].support;
  rep.macro_avg.zero_division =
      rep.cls[0].zero_division || rep.cls[1].zero_division;

  const double total = double(rep.macro_avg.support);
  const double w0 = rep.cls[0].support / total;
  const double w1 = rep.cls[1].support / total;
  rep.weighted_avg.precision =
      w0 * rep.cls[0].precision + w1 * rep.cls[1].precision;
  rep.weighted_avg.recall = w0 * rep.cls[0].recall + w1 * rep.cls[1].recall;
  rep.weighted_avg.f1 = w0 * rep.cls[0].f1 + w1 * rep.cls[1].f1;
  rep.weighted_avg.support = rep.macro_avg.support;
  rep.weighted_avg.zero_division = rep.macro_avg.zero_division;
  return rep;
}

double improvement_rate(double metric_financial, double metric_combined) {
  if (!(metric_financial > 0.0)) {
    throw Error("improvement_rate: financial metric must be positive");
  }
  return (metric_financial - metric_combined) / metric_financial;
}

RateCheck check_reported_rate(double metric_financial, double metric_combined,
                              double reported_rate, double tolerance) {
  RateCheck c;
  c.recomputed = improvement_rate(metric_financial, metric_combined);
  c.reported = reported_rate;
  c.delta = c.recomputed - reported_rate;
  c.flagged = std::abs(c.delta) > tolerance;
  return c;
}

DmResult dm_test(const Eigen::VectorXd& errors_a,
                 const Eigen::VectorXd& errors_b, DmLoss loss, int horizon) {
  if (errors_a.size() != errors_b.size()) {
    throw Error("dm_test: error sequences differ in length");
  }
  const Eigen::Index T = errors_a.size();
  if (T < 10) throw Error("dm_test: need at least 10 observations");
  if (horizon < 1) throw Error("dm_test: horizon must be >= 1");

  Eigen::VectorXd d(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (loss == DmLoss::squared) {
      d(t) = errors_a(t) * errors_a(t) - errors_b(t) * errors_b(t);
    } else {
      d(t) = std::abs(errors_a(t)) - std::abs(errors_b(t));
    }
  }

  if ((d.array() == 0.0).all()) return {0.0, 1.0};

  const double dbar = d.mean();
  auto gamma = [&](int j) {
    double acc = 0.0;
    for (Eigen::Index t = j; t < T; ++t) {
      acc += (d(t) - dbar) * (d(t - j) - dbar);
    }
    return acc / double(T);
  };

  double long_run = gamma(0);
  for (int j = 1; j < horizon; ++j) {
    long_run += 2.0 * (1.0 - double(j) / double(horizon)) * gamma(j);
  }

  DmResult res;
  if (long_run <= 0.0) {
    // Degenerate: nonzero mean differential with zero spread.
    res.statistic = dbar > 0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
    res.p_value = 0.0;
    return res;
  }

  double stat = dbar / std::sqrt(long_run / double(T));
  const double h = double(horizon);
  const double n = double(T);
  stat *= std::sqrt((n + 1.0 - 2.0 * h + h * (h - 1.0) / n) / n);

  res.statistic = stat;
  res.p_value = 2.0 * (1.0 - student_t_cdf(std::abs(stat), n - 1.0));
  return res;
}

RankResult rank_models(const MetricTable& table) {
  const std::size_t n_models = table.models.size();
  const std::size_t n_metrics = table.metrics.size();
  if (n_models == 0) throw Error("rank_models: empty table");
  if (table.values.size() != n_models) {
    throw Error("rank_models: values shape mismatch");
  }

  RankResult out;
  out.ranks.assign(n_models,
                   std::vector<std::optional<double>>(n_metrics, std::nullopt));

  for (std::size_t m = 0; m < n_metrics; ++m) {
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < n_models; ++i) {
      if (table.values[i].size() != n_metrics) {
        throw Error("rank_models: values shape mismatch");
      }
      if (table.values[i][m]) {
        present.push_back(i);
      } else {
        out.flags.push_back("model '" + table.models[i] +
                            "' excluded from '" + table.metrics[m] +
                            "' ranking (missing value)");
      }
    }
    std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
      return *table.values[a][m] < *table.values[b][m];
    });
    // Shared mean rank across ties.
    std::size_t i = 0;
    while (i < present.size()) {
      std::size_t j = i;
      while (j + 1 < present.size() &&
             *table.values[present[j + 1]][m] == *table.values[present[i]][m]) {
        ++j;
      }
      const double shared = (double(i + 1) + double(j + 1)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) out.ranks[present[k]][m] = shared;
      i = j + 1;
    }
  }

  out.weighted.assign(n_models, std::nullopt);
  for (std::size_t i = 0; i < n_models; ++i) {
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t m = 0; m < n_metrics; ++m) {
      if (out.ranks[i][m]) {
        acc += *out.ranks[i][m];
        ++cnt;
      }
    }
    if (cnt > 0) out.weighted[i] = acc / double(cnt);
  }
  return out;
}

CorrelationResult correlation_matrix(const SeriesFrame& frame) {
  const Eigen::Index n = frame.rows();
  const Eigen::Index p = frame.cols();
  if (n < 2) throw Error("correlation_matrix: need at least 2 observations");

  CorrelationResult res;
  res.names = frame.names();
  res.valid.assign(std::size_t(p), true);
  res.matrix = Eigen::MatrixXd::Constant(
      p, p, std::numeric_limits<double>::quiet_NaN());

  Eigen::MatrixXd centered = frame.values();
  Eigen::VectorXd sd(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    centered.col(c).array() -= centered.col(c).mean();
    sd(c) = std::sqrt(centered.col(c).squaredNorm());
    if (sd(c) == 0.0) res.valid[std::size_t(c)] = false;
  }

  for (Eigen::Index a = 0; a < p; ++a) {
    if (!res.valid[std::size_t(a)]) continue;
    res.matrix(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < p; ++b) {
      if (!res.valid[std::size_t(b)]) continue;
      double r = centered.col(a).dot(centered.col(b)) / (sd(a) * sd(b));
      r = std::clamp(r, -1.0, 1.0);
      res.matrix(a, b) = r;
      res.matrix(b, a) = r;
    }
  }
  return res;
}

}  // namespace fxlab
