#pragma once

#include <string>
#include <vector>

#include "fxlab/config.hpp"
#include "fxlab/documents.hpp"
#include "fxlab/sentiment.hpp"
#include "fxlab/series.hpp"
#include "fxlab/textmine.hpp"

namespace fxlab {

// The engineered feature table plus the bookkeeping the ablation harnesses
// need: which columns are financial, and which belong to each textual kind
// (1 = sentiment indices, 2 = classification-score means, 3 = per-topic
// score series).
struct FeatureBundle {
  SeriesFrame frame;  // target + all engineered columns, unnormalized
  std::string target_column;
  std::vector<std::string> financial_columns;  // includes the target
  std::vector<std::string> kind1, kind2, kind3;
  SentimentSeries sentiment;     // filled when si_* requested
  TopicModel topic_model;        // filled when topic_scores requested
  TokenizedCorpus corpus;        // idem
  TopicDayScores topic_scores;   // idem

  std::vector<std::string> text_columns() const;
  // financial + requested kinds (deduplicated, frame order)
  std::vector<std::string> columns_for(bool financial, bool k1, bool k2,
                                       bool k3) const;
};

// Daily mean of a per-document score ("sentiment" | "class_prob" |
// "polarity" | "subjectivity") over one category, snapped to the trading
// calendar; empty days forward-fill, starting from `initial`.
Eigen::VectorXd daily_mean_score(const std::vector<DocumentRecord>& docs,
                                 DocCategory category,
                                 const std::vector<Date>& dates,
                                 const std::string& field, double initial);

FeatureBundle build_features(const ExperimentConfig& cfg,
                             const SeriesFrame& aligned,
                             const std::vector<DocumentRecord>& docs);

}  // namespace fxlab
