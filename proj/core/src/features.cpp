#include "fxlab/features.hpp"

#include <algorithm>
#include <set>

#include "fxlab/error.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

std::vector<std::string> FeatureBundle::text_columns() const {
  std::vector<std::string> out = kind1;
  out.insert(out.end(), kind2.begin(), kind2.end());
  out.insert(out.end(), kind3.begin(), kind3.end());
  return out;
}

std::vector<std::string> FeatureBundle::columns_for(bool financial, bool k1,
                                                    bool k2, bool k3) const {
  std::set<std::string> wanted;
  auto add = [&](const std::vector<std::string>& cols) {
    wanted.insert(cols.begin(), cols.end());
  };
  if (financial) add(financial_columns);
  if (k1) add(kind1);
  if (k2) add(kind2);
  if (k3) add(kind3);
  std::vector<std::string> out;  // frame order keeps reports stable
  for (const auto& name : frame.names())
    if (wanted.count(name)) out.push_back(name);
  return out;
}

Eigen::VectorXd daily_mean_score(const std::vector<DocumentRecord>& docs,
                                 DocCategory category,
                                 const std::vector<Date>& dates,
                                 const std::string& field, double initial) {
  if (dates.empty()) throw Error("daily_mean_score: empty date grid");
  auto pick = [&](const DocumentRecord& d) -> const std::optional<double>& {
    if (field == "sentiment") return d.sentiment;
    if (field == "class_prob") return d.class_prob;
    if (field == "polarity") return d.polarity;
    if (field == "subjectivity") return d.subjectivity;
    throw Error("daily_mean_score: unknown field '" + field + "'");
  };
  const auto n = static_cast<Eigen::Index>(dates.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(n);
  bool any = false;
  for (const auto& doc : docs) {
    if (doc.category != category) continue;
    const auto& score = pick(doc);
    if (!score) continue;
    auto it = std::lower_bound(dates.begin(), dates.end(), doc.date);
    if (it == dates.end()) continue;  // past the calendar
    const auto t = static_cast<Eigen::Index>(it - dates.begin());
    sum(t) += *score;
    count(t) += 1;
    any = true;
  }
  if (!any)
    throw Error("daily_mean_score: no " + to_string(category) +
                " document carries a '" + field + "' score");
  Eigen::VectorXd out(n);
  double prev = initial;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (count(t) > 0) prev = sum(t) / count(t);
    out(t) = prev;
  }
  return out;
}

FeatureBundle build_features(const ExperimentConfig& cfg,
                             const SeriesFrame& aligned,
                             const std::vector<DocumentRecord>& docs) {
  FeatureBundle fb;
  fb.frame = aligned;
  fb.target_column = cfg.data.target_column;
  if (fb.frame.find_column(fb.target_column) < 0)
    throw Error("build_features: target column '" + fb.target_column +
                "' not in the aligned frame");
  fb.financial_columns = aligned.names();

  const auto& dates = aligned.dates();
  std::set<std::string> recipe(cfg.features.recipe.begin(),
                               cfg.features.recipe.end());
  // lagged_indicators = the aligned financial panel itself; the model layer
  // does the windowing, so the recipe entry only asserts the family exists.

  const bool want_si =
      recipe.count("si_news") || recipe.count("si_analysis");
  if (want_si) {
    fb.sentiment =
        build_sentiment_series(docs, dates, cfg.features.sentiment_decay,
                               cfg.features.sentiment_window);
    if (recipe.count("si_news")) {
      fb.frame.add_column("si_news", fb.sentiment.si_news);
      fb.kind1.push_back("si_news");
    }
    if (recipe.count("si_analysis")) {
      fb.frame.add_column("si_analysis", fb.sentiment.si_analysis);
      fb.kind1.push_back("si_analysis");
    }
  }

  if (recipe.count("class_news")) {
    fb.frame.add_column(
        "class_news",
        daily_mean_score(docs, DocCategory::news, dates, "class_prob", 0.5));
    fb.kind2.push_back("class_news");
  }
  if (recipe.count("class_analysis")) {
    fb.frame.add_column("class_analysis",
                        daily_mean_score(docs, DocCategory::analysis, dates,
                                         "class_prob", 0.5));
    fb.kind2.push_back("class_analysis");
  }

  if (recipe.count("topic_scores")) {
    const auto stopwords = cfg.data.stopwords.empty()
                               ? default_stopwords()
                               : load_stopwords(cfg.data.stopwords);
    fb.corpus = tokenize(docs, stopwords, cfg.features.token_min_len,
                         cfg.features.token_min_doc_freq);
    fb.topic_model = fit_lda_gibbs(
        fb.corpus, cfg.features.topics, cfg.features.lda_alpha,
        cfg.features.lda_beta, cfg.features.lda_iterations,
        cfg.features.lda_burn_in, mix_seed(cfg.seed, 0x1da));
    fb.topic_scores = topic_day_scores(fb.topic_model, docs, dates);
    for (int k = 0; k < fb.topic_scores.K; ++k) {
      const std::string pol = TopicDayScores::column_name("polarity", k);
      const std::string sub = TopicDayScores::column_name("subjectivity", k);
      const std::string cls = TopicDayScores::column_name("class", k);
      fb.frame.add_column(pol, fb.topic_scores.polarity.col(k));
      fb.frame.add_column(sub, fb.topic_scores.subjectivity.col(k));
      fb.frame.add_column(cls, fb.topic_scores.model_score.col(k));
      fb.kind3.push_back(pol);
      fb.kind3.push_back(sub);
      fb.kind3.push_back(cls);
    }
  }
  return fb;
}

}  // namespace fxlab
