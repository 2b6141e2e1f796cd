#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fxlab/date.hpp"
#include "fxlab/documents.hpp"

namespace fxlab {

// Lowercase alphabetic runs of length >= min_len, stopwords removed.
std::vector<std::string> tokenize_text(const std::string& text,
                                       const std::unordered_set<std::string>& stopwords,
                                       int min_len = 2);

const std::unordered_set<std::string>& default_stopwords();
std::unordered_set<std::string> load_stopwords(const std::string& path);

struct TokenizedCorpus {
  std::vector<std::string> vocab;                    // id -> token
  std::unordered_map<std::string, int> token_ids;    // token -> id
  std::vector<std::vector<int>> docs;                // per-document token ids
  std::vector<Date> doc_dates;
  std::vector<DocCategory> doc_categories;

  std::size_t total_tokens() const;
};

// Documents that end up empty keep their (empty) slot so indices stay
// aligned with the input records. Tokens in fewer than min_doc_freq
// documents are dropped from the vocabulary.
TokenizedCorpus tokenize(const std::vector<DocumentRecord>& records,
                         const std::unordered_set<std::string>& stopwords,
                         int min_len = 2, int min_doc_freq = 2);

struct TopicModel {
  int K = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd phi;    // K x V, rows sum to 1
  Eigen::MatrixXd theta;  // D x K, rows sum to 1
  std::vector<std::vector<int>> assignments;  // final-sweep token topics
};

// Collapsed Gibbs sampler; phi/theta are posterior means over the
// post-burn-in sweeps. alpha <= 0 selects the 50/K default.
TopicModel fit_lda_gibbs(const TokenizedCorpus& corpus, int K, double alpha,
                         double beta, int iterations, int burn_in,
                         std::uint64_t seed);

struct LdaFitParams {
  double alpha = 0.0;  // <= 0 -> 50/K
  double beta = 0.01;
  int iterations = 1000;
  int burn_in = 200;
};

// Mean over topics of the UMass score of each topic's top words.
double umass_coherence(const TokenizedCorpus& corpus, const TopicModel& model,
                       int top_words = 10);

struct TopicCountChoice {
  int k_best = 0;
  std::vector<std::pair<int, double>> coherence;  // (K, score) in scan order
};

// Fits every K in k_range and keeps the coherence maximizer; exact ties
// resolve to the smallest K.
TopicCountChoice select_topic_count(const TokenizedCorpus& corpus,
                                    const std::vector<int>& k_range,
                                    const LdaFitParams& fit, std::uint64_t seed,
                                    int top_words = 10);

enum class TopicAssignRule { argmax_theta };

struct TopicDayScores {
  int K = 0;
  std::vector<Date> dates;
  Eigen::MatrixXd polarity;      // dates x K
  Eigen::MatrixXd subjectivity;  // dates x K
  Eigen::MatrixXd model_score;   // dates x K (classification probability)
  Eigen::MatrixXi doc_count;     // dates x K

  static std::string column_name(const char* field, int topic);
};

// Per-(topic, day) means of the documents' polarity / subjectivity /
// classification scores, each document assigned to its argmax-theta topic
// and snapped to the next trading day in `dates`. Days without documents
// forward-fill from the prior day (polarity/subjectivity start at 0,
// model_score at the neutral 0.5).
TopicDayScores topic_day_scores(const TopicModel& model,
                                const std::vector<DocumentRecord>& records,
                                const std::vector<Date>& dates,
                                TopicAssignRule rule = TopicAssignRule::argmax_theta);

struct TopicTrend {
  std::vector<Date> slice_start;
  std::vector<Date> slice_end;
  Eigen::MatrixXd prevalence;      // slices x K; absent rows are NaN
  std::vector<bool> has_documents;  // false -> row marked absent
};

// Mean theta over the documents whose dates fall in each of n_slices
// equal spans of the corpus date range.
TopicTrend topic_trend(const TopicModel& model, const TokenizedCorpus& corpus,
                       int n_slices);

// Additive lexicon fallback: mean valence of the matched words, clamped
// to [-1, 1]; 0 when nothing matches.
double lexicon_polarity(const std::string& text,
                        const std::map<std::string, double>& lexicon);

void save_topic_model(const std::string& path, const TopicModel& model,
                      const std::vector<std::string>& vocab);

struct LoadedTopicModel {
  TopicModel model;
  std::vector<std::string> vocab;
};

LoadedTopicModel load_topic_model(const std::string& path);

}  // namespace fxlab
