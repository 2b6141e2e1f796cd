#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fxlab/documents.hpp"
#include "fxlab/series.hpp"

namespace fxlab {

// Synthetic desk-scale dataset: a daily close whose next-day return
// partially loads on a latent AR(1) sentiment factor, a small indicator
// panel, and planted-topic documents whose scores observe that factor.
struct SynthConfig {
  std::uint64_t seed = 42;
  int days = 560;
  double start_price = 1.10;

  int topics = 4;
  int words_per_topic = 50;
  int shared_words = 20;
  double shared_fraction = 0.10;  // common-word contamination per token
  int min_doc_tokens = 18;
  int max_doc_tokens = 40;
  int min_docs_per_day = 1;  // per category
  int max_docs_per_day = 3;

  double sent_rho = 0.9;      // latent sentiment AR(1)
  double sent_noise = 0.35;
  double signal_strength = 0.004;  // return loading on tanh(latent)
  double indicator_coupling = 0.0015;
  double level_reversion = 0.0;    // PPP-style daily pull toward start_price
  double noise_scale = 0.0035;     // return noise sd
  double score_noise = 0.15;       // per-document score jitter
};

struct SynthData {
  SeriesFrame prices;                  // date, close
  SeriesFrame indicators;              // date, 4 indicator columns
  std::vector<DocumentRecord> docs;    // date-ordered
  std::vector<double> latent;          // latent sentiment per day
  Eigen::MatrixXd true_phi;            // planted topics x vocabulary
  std::vector<std::string> planted_vocab;
};

SynthData generate_synthetic(const SynthConfig& cfg);

// Planted-topic corpus alone (no price series), for topic-recovery checks.
struct PlantedCorpus {
  std::vector<DocumentRecord> docs;
  Eigen::MatrixXd true_phi;  // topics x vocabulary
  std::vector<std::string> vocab;
};

PlantedCorpus generate_planted_corpus(int n_docs, int topics, int words_per_topic,
                                      int shared_words, double shared_fraction,
                                      int min_tokens, int max_tokens,
                                      std::uint64_t seed);

// Writes prices.csv, indicators.csv, docs.jsonl, stopwords.txt into dir.
void write_synthetic(const SynthConfig& cfg, const std::string& dir);

}  // namespace fxlab
