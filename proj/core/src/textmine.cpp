#include "fxlab/textmine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fxlab/error.hpp"
#include "fxlab/io.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

std::vector<std::string> tokenize_text(const std::string& text,
                                       const std::unordered_set<std::string>& stopwords,
                                       int min_len) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (static_cast<int>(cur.size()) >= min_len && !stopwords.count(cur))
      out.push_back(cur);
    cur.clear();
  };
  for (unsigned char ch : text) {
    if (std::isalpha(ch))
      cur.push_back(static_cast<char>(std::tolower(ch)));
    else
      flush();
  }
  flush();
  return out;
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",      "about",  "above",   "after",  "again",  "against", "all",
      "am",     "an",     "and",     "any",    "are",    "as",      "at",
      "be",     "because", "been",   "before", "being",  "below",   "between",
      "both",   "but",    "by",      "can",    "could",  "did",     "do",
      "does",   "doing",  "down",    "during", "each",   "few",     "for",
      "from",   "further", "had",    "has",    "have",   "having",  "he",
      "her",    "here",   "hers",    "him",    "his",    "how",     "i",
      "if",     "in",     "into",    "is",     "it",     "its",     "itself",
      "just",   "me",     "more",    "most",   "my",     "no",      "nor",
      "not",    "now",    "of",      "off",    "on",     "once",    "only",
      "or",     "other",  "our",     "ours",   "out",    "over",    "own",
      "same",   "she",    "should",  "so",     "some",   "such",    "than",
      "that",   "the",    "their",   "theirs", "them",   "then",    "there",
      "these",  "they",   "this",    "those",  "through", "to",     "too",
      "under",  "until",  "up",      "very",   "was",    "we",      "were",
      "what",   "when",   "where",   "which",  "while",  "who",     "whom",
      "why",    "will",   "with",    "would",  "you",    "your",    "yours"};
  return words;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword list: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

std::size_t TokenizedCorpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

TokenizedCorpus tokenize(const std::vector<DocumentRecord>& records,
                         const std::unordered_set<std::string>& stopwords,
                         int min_len, int min_doc_freq) {
  std::vector<std::vector<std::string>> raw(records.size());
  std::unordered_map<std::string, int> doc_freq;
  for (std::size_t d = 0; d < records.size(); ++d) {
    raw[d] = tokenize_text(records[d].text, stopwords, min_len);
    std::set<std::string> uniq(raw[d].begin(), raw[d].end());
    for (const auto& tok : uniq) ++doc_freq[tok];
  }
  // lexicographic ids keep the vocabulary deterministic
  std::vector<std::string> kept;
  for (const auto& [tok, df] : doc_freq)
    if (df >= min_doc_freq) kept.push_back(tok);
  std::sort(kept.begin(), kept.end());

  TokenizedCorpus corpus;
  corpus.vocab = std::move(kept);
  for (std::size_t v = 0; v < corpus.vocab.size(); ++v)
    corpus.token_ids[corpus.vocab[v]] = static_cast<int>(v);
  corpus.docs.resize(records.size());
  bool any = false;
  for (std::size_t d = 0; d < records.size(); ++d) {
    for (const auto& tok : raw[d]) {
      auto it = corpus.token_ids.find(tok);
      if (it != corpus.token_ids.end()) corpus.docs[d].push_back(it->second);
    }
    any = any || !corpus.docs[d].empty();
    corpus.doc_dates.push_back(records[d].date);
    corpus.doc_categories.push_back(records[d].category);
  }
  if (!records.empty() && !any)
    throw Error("tokenize: all documents empty after filtering");
  return corpus;
}

TopicModel fit_lda_gibbs(const TokenizedCorpus& corpus, int K, double alpha,
                         double beta, int iterations, int burn_in,
                         std::uint64_t seed) {
  if (K < 1) throw Error("fit_lda_gibbs: K must be >= 1");
  if (burn_in < 0 || iterations <= burn_in)
    throw Error("fit_lda_gibbs: need iterations > burn_in >= 0");
  const std::size_t total = corpus.total_tokens();
  if (static_cast<std::size_t>(K) > total)
    throw Error("fit_lda_gibbs: K exceeds total token count");
  if (alpha <= 0) alpha = 50.0 / K;
  if (beta <= 0) throw Error("fit_lda_gibbs: beta must be > 0");

  const int D = static_cast<int>(corpus.docs.size());
  const int V = static_cast<int>(corpus.vocab.size());
  Rng rng(seed);

  std::vector<int> n_dk(static_cast<std::size_t>(D) * K, 0);
  std::vector<int> n_kv(static_cast<std::size_t>(K) * V, 0);
  std::vector<int> n_k(K, 0);
  std::vector<std::vector<int>> z(corpus.docs.size());
  for (int d = 0; d < D; ++d) {
    z[d].resize(corpus.docs[d].size());
    for (std::size_t pos = 0; pos < corpus.docs[d].size(); ++pos) {
      const int k = static_cast<int>(rng.uniform_int(0, K - 1));
      z[d][pos] = k;
      ++n_dk[static_cast<std::size_t>(d) * K + k];
      ++n_kv[static_cast<std::size_t>(k) * V + corpus.docs[d][pos]];
      ++n_k[k];
    }
  }

  Eigen::MatrixXd phi_acc = Eigen::MatrixXd::Zero(K, V);
  Eigen::MatrixXd theta_acc = Eigen::MatrixXd::Zero(D, K);
  int samples = 0;
  std::vector<double> cum(K);
  const double vbeta = V * beta;

  for (int sweep = 0; sweep < iterations; ++sweep) {
    for (int d = 0; d < D; ++d) {
      int* dk = n_dk.data() + static_cast<std::size_t>(d) * K;
      for (std::size_t pos = 0; pos < corpus.docs[d].size(); ++pos) {
        const int v = corpus.docs[d][pos];
        const int old = z[d][pos];
        --dk[old];
        --n_kv[static_cast<std::size_t>(old) * V + v];
        --n_k[old];
        double run = 0;
        for (int k = 0; k < K; ++k) {
          run += (dk[k] + alpha) * (n_kv[static_cast<std::size_t>(k) * V + v] + beta) /
                 (n_k[k] + vbeta);
          cum[k] = run;
        }
        const double u = rng.u01() * run;
        int pick = static_cast<int>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (pick >= K) pick = K - 1;
        z[d][pos] = pick;
        ++dk[pick];
        ++n_kv[static_cast<std::size_t>(pick) * V + v];
        ++n_k[pick];
      }
    }
    if (sweep >= burn_in) {
      for (int k = 0; k < K; ++k)
        for (int v = 0; v < V; ++v)
          phi_acc(k, v) += (n_kv[static_cast<std::size_t>(k) * V + v] + beta) /
                           (n_k[k] + vbeta);
      for (int d = 0; d < D; ++d) {
        const double nd = static_cast<double>(corpus.docs[d].size());
        for (int k = 0; k < K; ++k)
          theta_acc(d, k) = theta_acc(d, k) +
                            (n_dk[static_cast<std::size_t>(d) * K + k] + alpha) /
                                (nd + K * alpha);
      }
      ++samples;
    }
  }

  TopicModel model;
  model.K = K;
  model.alpha = alpha;
  model.beta = beta;
  model.seed = seed;
  model.phi = phi_acc / samples;
  model.theta = theta_acc / samples;
  model.assignments = std::move(z);
  return model;
}

// document ids per vocabulary word, sorted, for co-document counting
static std::vector<std::vector<int>> build_postings(const TokenizedCorpus& corpus) {
  std::vector<std::vector<int>> postings(corpus.vocab.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    std::set<int> uniq(corpus.docs[d].begin(), corpus.docs[d].end());
    for (int v : uniq) postings[static_cast<std::size_t>(v)].push_back(static_cast<int>(d));
  }
  return postings;
}

static std::size_t intersection_size(const std::vector<int>& a,
                                     const std::vector<int>& b) {
  std::size_t n = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (b[j] < a[i])
      ++j;
    else
      ++n, ++i, ++j;
  }
  return n;
}

double umass_coherence(const TokenizedCorpus& corpus, const TopicModel& model,
                       int top_words) {
  if (model.phi.cols() != static_cast<Eigen::Index>(corpus.vocab.size()))
    throw Error("umass_coherence: model vocabulary does not match corpus");
  const auto postings = build_postings(corpus);
  const int V = static_cast<int>(corpus.vocab.size());
  const int n_top = std::min(top_words, V);
  if (n_top < 2) throw Error("umass_coherence: need at least 2 vocabulary words");

  double total = 0;
  for (int k = 0; k < model.K; ++k) {
    std::vector<int> order(V);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + n_top, order.end(),
                      [&](int a, int b) {
                        if (model.phi(k, a) != model.phi(k, b))
                          return model.phi(k, a) > model.phi(k, b);
                        return a < b;  // deterministic tie order
                      });
    double score = 0;
    for (int i = 1; i < n_top; ++i) {
      for (int j = 0; j < i; ++j) {
        const auto& pi = postings[static_cast<std::size_t>(order[i])];
        const auto& pj = postings[static_cast<std::size_t>(order[j])];
        const double co = static_cast<double>(intersection_size(pi, pj));
        score += std::log((co + 1.0) / static_cast<double>(pj.size()));
      }
    }
    total += score;
  }
  return total / model.K;
}

TopicCountChoice select_topic_count(const TokenizedCorpus& corpus,
                                    const std::vector<int>& k_range,
                                    const LdaFitParams& fit, std::uint64_t seed,
                                    int top_words) {
  if (k_range.empty()) throw Error("select_topic_count: empty K range");
  TopicCountChoice choice;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> ks = k_range;
  std::sort(ks.begin(), ks.end());  // ascending scan makes ties pick smallest K
  for (int k : ks) {
    TopicModel m = fit_lda_gibbs(corpus, k, fit.alpha, fit.beta, fit.iterations,
                                 fit.burn_in, mix_seed(seed, static_cast<std::uint64_t>(k)));
    const double coh = umass_coherence(corpus, m, top_words);
    choice.coherence.emplace_back(k, coh);
    if (coh > best) {
      best = coh;
      choice.k_best = k;
    }
  }
  return choice;
}

std::string TopicDayScores::column_name(const char* field, int topic) {
  return std::string(field) + "_topic" + std::to_string(topic);
}

TopicDayScores topic_day_scores(const TopicModel& model,
                                const std::vector<DocumentRecord>& records,
                                const std::vector<Date>& dates,
                                TopicAssignRule rule) {
  (void)rule;  // argmax_theta is the only rule
  if (model.theta.rows() != static_cast<Eigen::Index>(records.size()))
    throw Error("topic_day_scores: theta rows do not match document count");
  if (dates.empty()) throw Error("topic_day_scores: empty date grid");

  const int K = model.K;
  const auto n_days = static_cast<Eigen::Index>(dates.size());
  TopicDayScores out;
  out.K = K;
  out.dates = dates;
  out.doc_count = Eigen::MatrixXi::Zero(n_days, K);
  Eigen::MatrixXd p_sum = Eigen::MatrixXd::Zero(n_days, K);
  Eigen::MatrixXd s_sum = p_sum, c_sum = p_sum;
  Eigen::MatrixXi p_n = Eigen::MatrixXi::Zero(n_days, K);
  Eigen::MatrixXi s_n = p_n, c_n = p_n;
  bool any_p = false, any_s = false, any_c = false;

  for (std::size_t i = 0; i < records.size(); ++i) {
    // snap to the next trading day; documents past the grid are dropped
    auto it = std::lower_bound(dates.begin(), dates.end(), records[i].date);
    if (it == dates.end()) continue;
    const auto t = static_cast<Eigen::Index>(it - dates.begin());
    Eigen::Index k = 0;
    model.theta.row(static_cast<Eigen::Index>(i)).maxCoeff(&k);
    out.doc_count(t, k) += 1;
    if (records[i].polarity) {
      p_sum(t, k) += *records[i].polarity;
      p_n(t, k) += 1;
      any_p = true;
    }
    if (records[i].subjectivity) {
      s_sum(t, k) += *records[i].subjectivity;
      s_n(t, k) += 1;
      any_s = true;
    }
    if (records[i].class_prob) {
      c_sum(t, k) += *records[i].class_prob;
      c_n(t, k) += 1;
      any_c = true;
    }
  }
  if (!any_p) throw Error("topic_day_scores: no document carries a polarity score");
  if (!any_s) throw Error("topic_day_scores: no document carries a subjectivity score");
  if (!any_c)
    throw Error("topic_day_scores: no document carries a classification score");

  auto filled = [&](const Eigen::MatrixXd& sum, const Eigen::MatrixXi& n,
                    double initial) {
    Eigen::MatrixXd m(n_days, K);
    for (int k = 0; k < K; ++k) {
      double prev = initial;
      for (Eigen::Index t = 0; t < n_days; ++t) {
        if (n(t, k) > 0) prev = sum(t, k) / n(t, k);
        m(t, k) = prev;
      }
    }
    return m;
  };
  out.polarity = filled(p_sum, p_n, 0.0);
  out.subjectivity = filled(s_sum, s_n, 0.0);
  out.model_score = filled(c_sum, c_n, 0.5);  // neutral classification prior
  return out;
}

TopicTrend topic_trend(const TopicModel& model, const TokenizedCorpus& corpus,
                       int n_slices) {
  if (n_slices < 1) throw Error("topic_trend: n_slices must be >= 1");
  if (corpus.doc_dates.empty()) throw Error("topic_trend: empty corpus");
  if (model.theta.rows() != static_cast<Eigen::Index>(corpus.doc_dates.size()))
    throw Error("topic_trend: theta rows do not match corpus");
  if (!std::is_sorted(corpus.doc_dates.begin(), corpus.doc_dates.end()))
    throw Error("topic_trend: documents must be date-ordered");

  const long first = corpus.doc_dates.front().serial();
  const long last = corpus.doc_dates.back().serial();
  const long span = last - first + 1;

  TopicTrend trend;
  trend.prevalence = Eigen::MatrixXd::Constant(
      n_slices, model.K, std::numeric_limits<double>::quiet_NaN());
  trend.has_documents.assign(static_cast<std::size_t>(n_slices), false);
  for (int s = 0; s < n_slices; ++s) {
    const long lo = first + span * s / n_slices;
    const long hi = first + span * (s + 1) / n_slices - 1;
    trend.slice_start.push_back(Date(static_cast<int>(lo)));
    trend.slice_end.push_back(Date(static_cast<int>(hi)));
  }

  std::vector<int> count(static_cast<std::size_t>(n_slices), 0);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_slices, model.K);
  for (std::size_t d = 0; d < corpus.doc_dates.size(); ++d) {
    long s = (corpus.doc_dates[d].serial() - first) * n_slices / span;
    if (s >= n_slices) s = n_slices - 1;
    sum.row(s) += model.theta.row(static_cast<Eigen::Index>(d));
    ++count[static_cast<std::size_t>(s)];
  }
  for (int s = 0; s < n_slices; ++s) {
    if (count[static_cast<std::size_t>(s)] == 0) continue;
    trend.prevalence.row(s) = sum.row(s) / count[static_cast<std::size_t>(s)];
    trend.has_documents[static_cast<std::size_t>(s)] = true;
  }
  return trend;
}

double lexicon_polarity(const std::string& text,
                        const std::map<std::string, double>& lexicon) {
  static const std::unordered_set<std::string> none;
  double sum = 0;
  int hits = 0;
  for (const auto& tok : tokenize_text(text, none, 1)) {
    auto it = lexicon.find(tok);
    if (it != lexicon.end()) {
      sum += it->second;
      ++hits;
    }
  }
  if (hits == 0) return 0.0;
  return std::clamp(sum / hits, -1.0, 1.0);
}

void save_topic_model(const std::string& path, const TopicModel& model,
                      const std::vector<std::string>& vocab) {
  if (model.phi.cols() != static_cast<Eigen::Index>(vocab.size()))
    throw Error("save_topic_model: vocabulary size does not match phi");
  std::string out = "fxlab-topic-model v1\n";
  out += "K " + std::to_string(model.K) + "\n";
  out += "alpha " + fmt_exact(model.alpha) + "\n";
  out += "beta " + fmt_exact(model.beta) + "\n";
  out += "seed " + std::to_string(model.seed) + "\n";
  out += "vocab " + std::to_string(vocab.size()) + "\n";
  for (const auto& tok : vocab) out += tok + "\n";
  out += "phi " + std::to_string(model.phi.rows()) + " " +
         std::to_string(model.phi.cols()) + "\n";
  char buf[48];
  auto dump = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%a", m(r, c));
        out += buf;
        out += c + 1 == m.cols() ? '\n' : ' ';
      }
    }
  };
  dump(model.phi);
  out += "theta " + std::to_string(model.theta.rows()) + " " +
         std::to_string(model.theta.cols()) + "\n";
  dump(model.theta);
  write_file_atomic(path, out);
}

LoadedTopicModel load_topic_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open topic model: " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "fxlab-topic-model" || version != "v1")
    throw Error(path + ": not a v1 topic model file");
  LoadedTopicModel out;
  auto expect = [&](const char* key) {
    std::string k;
    in >> k;
    if (!in || k != key) throw Error(path + ": expected '" + std::string(key) + "'");
  };
  std::string tok;
  expect("K");
  in >> out.model.K;
  expect("alpha");
  in >> tok;
  out.model.alpha = std::strtod(tok.c_str(), nullptr);
  expect("beta");
  in >> tok;
  out.model.beta = std::strtod(tok.c_str(), nullptr);
  expect("seed");
  in >> out.model.seed;
  expect("vocab");
  std::size_t v_count = 0;
  in >> v_count;
  out.vocab.resize(v_count);
  for (auto& w : out.vocab) in >> w;
  auto read_matrix = [&](const char* key, Eigen::MatrixXd& m) {
    expect(key);
    Eigen::Index rows = 0, cols = 0;
    in >> rows >> cols;
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        in >> tok;
        if (!in) throw Error(path + ": truncated matrix " + key);
        m(r, c) = std::strtod(tok.c_str(), nullptr);
      }
  };
  read_matrix("phi", out.model.phi);
  read_matrix("theta", out.model.theta);
  if (out.model.phi.cols() != static_cast<Eigen::Index>(out.vocab.size()))
    throw Error(path + ": phi does not match vocabulary size");
  return out;
}

}  // namespace fxlab
