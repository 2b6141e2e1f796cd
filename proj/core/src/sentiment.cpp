#include "fxlab/sentiment.hpp"

#include <algorithm>
#include <cmath>

#include "fxlab/error.hpp"

namespace fxlab {

namespace {

// First calendar index >= d, or -1 past the end.
int snap_to(const std::vector<Date>& dates, Date d) {
  auto it = std::lower_bound(dates.begin(), dates.end(), d);
  return it == dates.end() ? -1 : int(it - dates.begin());
}

}  // namespace

Eigen::VectorXd daily_sentiment_value(const std::vector<DocumentRecord>& docs,
                                      DocCategory category,
                                      const std::vector<Date>& dates) {
  if (dates.empty()) throw Error("daily_sentiment_value: empty calendar");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(Eigen::Index(dates.size()));
  Eigen::VectorXd count = Eigen::VectorXd::Zero(Eigen::Index(dates.size()));
  bool any_scored = false;
  for (const auto& doc : docs) {
    if (doc.category != category || !doc.sentiment) continue;
    any_scored = true;
    int idx = snap_to(dates, doc.date);
    if (idx < 0) continue;  // after the last trading day; nothing to label
    sum(idx) += *doc.sentiment;
    count(idx) += 1.0;
  }
  if (!any_scored) {
    throw Error("daily_sentiment_value: no documents of category '" +
                to_string(category) + "' carry a sentiment score");
  }
  Eigen::VectorXd sv(sum.size());
  for (Eigen::Index i = 0; i < sum.size(); ++i) {
    sv(i) = count(i) > 0 ? sum(i) / count(i) : 0.0;
  }
  return sv;
}

Eigen::VectorXd sentiment_index(const Eigen::VectorXd& sv, double decay_scale,
                                int window) {
  if (!(decay_scale > 0)) throw Error("sentiment_index: decay_scale <= 0");
  Eigen::VectorXd si(sv.size());
  if (sv.size() == 0) return si;
  if (window <= 0) {
    const double decay = std::exp(-1.0 / decay_scale);
    si(0) = sv(0);
    for (Eigen::Index t = 1; t < sv.size(); ++t) {
      si(t) = decay * si(t - 1) + sv(t);
    }
  } else {
    for (Eigen::Index t = 0; t < sv.size(); ++t) {
      double acc = sv(t);
      for (Eigen::Index i = std::max<Eigen::Index>(0, t - window); i < t; ++i) {
        acc += std::exp(-double(t - i) / decay_scale) * sv(i);
      }
      si(t) = acc;
    }
  }
  return si;
}

SentimentSeries build_sentiment_series(const std::vector<DocumentRecord>& docs,
                                       const std::vector<Date>& dates,
                                       double decay_scale, int window) {
  SentimentSeries s;
  s.dates = dates;
  s.decay_scale = decay_scale;
  s.sv_news = daily_sentiment_value(docs, DocCategory::news, dates);
  s.si_news = sentiment_index(s.sv_news, decay_scale, window);
  s.sv_analysis = daily_sentiment_value(docs, DocCategory::analysis, dates);
  s.si_analysis = sentiment_index(s.sv_analysis, decay_scale, window);
  return s;
}

void append_sentiment_columns(SeriesFrame& frame, const SentimentSeries& s) {
  if (frame.dates() != s.dates) {
    throw Error("append_sentiment_columns: calendar mismatch");
  }
  frame.add_column("sv_news", s.sv_news);
  frame.add_column("si_news", s.si_news);
  frame.add_column("sv_analysis", s.sv_analysis);
  frame.add_column("si_analysis", s.si_analysis);
}

}  // namespace fxlab
