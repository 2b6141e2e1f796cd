#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fxlab/documents.hpp"
#include "fxlab/series.hpp"

namespace fxlab {

// Daily sentiment value: mean of the `sentiment` scores of category
// documents on each trading day of `dates`. Off-calendar document dates
// snap to the next trading day; days with no documents get 0.
Eigen::VectorXd daily_sentiment_value(const std::vector<DocumentRecord>& docs,
                                      DocCategory category,
                                      const std::vector<Date>& dates);

// Exponentially decaying sentiment index over all history:
//   SI_1 = SV_1,   SI_t = sum_{i<t} e^{-(t-i)/decay_scale} SV_i + SV_t
// computed via the equivalent recurrence SI_t = e^{-1/scale} SI_{t-1} + SV_t.
// window > 0 truncates the sum to the last `window` days (sensitivity runs).
Eigen::VectorXd sentiment_index(const Eigen::VectorXd& sv,
                                double decay_scale = 7.0, int window = 0);

// SV and SI per category on a shared trading calendar.
struct SentimentSeries {
  std::vector<Date> dates;
  Eigen::VectorXd sv_news;
  Eigen::VectorXd si_news;
  Eigen::VectorXd sv_analysis;
  Eigen::VectorXd si_analysis;
  double decay_scale = 7.0;
};

SentimentSeries build_sentiment_series(const std::vector<DocumentRecord>& docs,
                                       const std::vector<Date>& dates,
                                       double decay_scale = 7.0,
                                       int window = 0);

// Columns sv_news, si_news, sv_analysis, si_analysis appended to `frame`.
void append_sentiment_columns(SeriesFrame& frame, const SentimentSeries& s);

}  // namespace fxlab
