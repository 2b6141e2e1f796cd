#include "fxlab/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>

#include "fxlab/error.hpp"
#include "fxlab/io.hpp"
#include "fxlab/rng.hpp"
#include "fxlab/textmine.hpp"

namespace fxlab {

namespace {

// alphabetic-only word ids so the tokenizer keeps them whole
std::string base26(int i, int width) {
  std::string s(static_cast<std::size_t>(width), 'a');
  for (int p = width - 1; p >= 0 && i > 0; --p) {
    s[static_cast<std::size_t>(p)] = static_cast<char>('a' + i % 26);
    i /= 26;
  }
  return s;
}

const char* topic_prefix(int k) {
  static const char* names[] = {"alpha", "bravo", "delta", "gamma",
                                "kappa", "sigma", "theta", "omega"};
  return names[k % 8];
}

struct PlantedTopics {
  std::vector<std::string> vocab;  // K*W exclusive words then S shared
  Eigen::MatrixXd phi;             // K x vocab
  std::vector<std::vector<double>> excl_cum;  // per topic, cumulative zipf
  double shared_fraction;
  int K, W, S;

  int sample_word(int topic, Rng& rng) const {
    if (S > 0 && rng.u01() < shared_fraction)
      return K * W + static_cast<int>(rng.uniform_int(0, S - 1));
    const auto& cum = excl_cum[static_cast<std::size_t>(topic)];
    const double u = rng.u01() * cum.back();
    const int i = static_cast<int>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    return topic * W + std::min(i, W - 1);
  }
};

PlantedTopics build_planted(int K, int W, int S, double shared_fraction) {
  if (K < 1 || W < 2) throw Error("planted corpus: need K >= 1, words_per_topic >= 2");
  PlantedTopics pt;
  pt.K = K;
  pt.W = W;
  pt.S = S;
  pt.shared_fraction = S > 0 ? shared_fraction : 0.0;
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < W; ++i)
      pt.vocab.push_back(topic_prefix(k) + base26(i, 2));
  for (int i = 0; i < S; ++i) pt.vocab.push_back("common" + base26(i, 2));

  pt.phi = Eigen::MatrixXd::Zero(K, static_cast<Eigen::Index>(pt.vocab.size()));
  for (int k = 0; k < K; ++k) {
    std::vector<double> cum;
    double run = 0, total = 0;
    for (int i = 0; i < W; ++i) total += 1.0 / std::pow(1.0 + i, 0.8);
    for (int i = 0; i < W; ++i) {
      const double w = 1.0 / std::pow(1.0 + i, 0.8);
      run += w;
      cum.push_back(run);
      pt.phi(k, k * W + i) = (1.0 - pt.shared_fraction) * w / total;
    }
    pt.excl_cum.push_back(std::move(cum));
    for (int i = 0; i < S; ++i) pt.phi(k, K * W + i) = pt.shared_fraction / S;
  }
  return pt;
}

std::string make_doc_text(const PlantedTopics& pt, int topic, int n_tokens,
                          Rng& rng) {
  static const char* glue[] = {"the", "of", "and", "is", "to"};
  std::string text;
  for (int i = 0; i < n_tokens; ++i) {
    if (!text.empty()) text += ' ';
    if (i % 5 == 4) {  // stopword filler the tokenizer must drop
      text += glue[i / 5 % 5];
      text += ' ';
    }
    std::string word = pt.vocab[static_cast<std::size_t>(pt.sample_word(topic, rng))];
    if (i == 0) word[0] = static_cast<char>(std::toupper(word[0]));
    text += word;
  }
  return text + ".";
}

}  // namespace

PlantedCorpus generate_planted_corpus(int n_docs, int topics, int words_per_topic,
                                      int shared_words, double shared_fraction,
                                      int min_tokens, int max_tokens,
                                      std::uint64_t seed) {
  if (n_docs < 1) throw Error("planted corpus: n_docs must be >= 1");
  if (min_tokens < 1 || max_tokens < min_tokens)
    throw Error("planted corpus: bad token range");
  PlantedTopics pt = build_planted(topics, words_per_topic, shared_words,
                                   shared_fraction);
  Rng rng(seed);
  PlantedCorpus out;
  out.vocab = pt.vocab;
  out.true_phi = pt.phi;
  Date day = Date::parse("2017-01-02");
  for (int i = 0; i < n_docs; ++i) {
    DocumentRecord rec;
    rec.date = day;
    rec.category = i % 2 == 0 ? DocCategory::news : DocCategory::analysis;
    const int topic = static_cast<int>(rng.uniform_int(0, topics - 1));
    const int len =
        min_tokens + static_cast<int>(rng.uniform_int(0, max_tokens - min_tokens));
    rec.text = make_doc_text(pt, topic, len, rng);
    out.docs.push_back(std::move(rec));
    if (i % 4 == 3) day = day.next_weekday();
  }
  return out;
}

SynthData generate_synthetic(const SynthConfig& cfg) {
  if (cfg.days < 30) throw Error("synthetic generator: need at least 30 days");
  PlantedTopics pt = build_planted(cfg.topics, cfg.words_per_topic,
                                   cfg.shared_words, cfg.shared_fraction);
  Rng rng(cfg.seed);

  std::vector<Date> dates;
  Date day = Date::parse("2017-01-02");
  for (int t = 0; t < cfg.days; ++t) {
    dates.push_back(day);
    day = day.next_weekday();
  }

  // latent sentiment factor and indicator drivers
  std::vector<double> latent(static_cast<std::size_t>(cfg.days));
  std::vector<double> x_rate(latent.size()), x_noise(latent.size());
  latent[0] = rng.gaussian() * cfg.sent_noise;
  x_rate[0] = rng.gaussian() * 0.1;
  x_noise[0] = rng.gaussian();
  for (int t = 1; t < cfg.days; ++t) {
    latent[t] = cfg.sent_rho * latent[t - 1] + rng.gaussian() * cfg.sent_noise;
    x_rate[t] = 0.95 * x_rate[t - 1] + rng.gaussian() * 0.1;
    x_noise[t] = 0.5 * x_noise[t - 1] + rng.gaussian();
  }

  std::vector<double> close(latent.size()), ret(latent.size(), 0.0);
  close[0] = cfg.start_price;
  for (int t = 1; t < cfg.days; ++t) {
    ret[t] = cfg.signal_strength * std::tanh(latent[t - 1]) +
             cfg.indicator_coupling * x_rate[t - 1] +
             cfg.level_reversion * std::log(cfg.start_price / close[t - 1]) +
             cfg.noise_scale * rng.gaussian();
    close[t] = close[t - 1] * (1.0 + ret[t]);
  }

  auto rolling = [&](const std::vector<double>& v, int t, int window, bool absolute) {
    double s = 0;
    int n = 0;
    for (int i = std::max(1, t - window + 1); i <= t; ++i) {
      s += absolute ? std::abs(v[static_cast<std::size_t>(i)])
                    : v[static_cast<std::size_t>(i)];
      ++n;
    }
    return n > 0 ? s / n : 0.0;
  };

  Eigen::MatrixXd ind(cfg.days, 4);
  for (int t = 0; t < cfg.days; ++t) {
    ind(t, 0) = x_rate[static_cast<std::size_t>(t)];
    ind(t, 1) = rolling(ret, t, 5, false);
    ind(t, 2) = rolling(ret, t, 5, true);
    ind(t, 3) = x_noise[static_cast<std::size_t>(t)];
  }

  SynthData data;
  data.latent = latent;
  data.true_phi = pt.phi;
  data.planted_vocab = pt.vocab;
  {
    Eigen::MatrixXd close_col(cfg.days, 1);
    for (int t = 0; t < cfg.days; ++t) close_col(t, 0) = close[static_cast<std::size_t>(t)];
    data.prices = SeriesFrame(dates, {"close"}, close_col);
    data.indicators =
        SeriesFrame(dates, {"ind_rate", "ind_momentum", "ind_vol", "ind_noise"}, ind);
  }

  // documents: topic mixture drifts over the period; scores observe latent
  for (int t = 0; t < cfg.days; ++t) {
    const double frac = static_cast<double>(t) / std::max(1, cfg.days - 1);
    std::vector<double> topic_cum;
    double run = 0;
    for (int k = 0; k < cfg.topics; ++k) {
      double w = 1.0;
      if (k == 0) w = 0.5 + 1.5 * frac;                 // rises
      if (k == cfg.topics - 1) w = 2.0 - 1.5 * frac;    // falls
      run += w;
      topic_cum.push_back(run);
    }
    const double base = std::tanh(latent[static_cast<std::size_t>(t)]);
    for (DocCategory cat : {DocCategory::news, DocCategory::analysis}) {
      const int count =
          cfg.min_docs_per_day +
          static_cast<int>(rng.uniform_int(0, cfg.max_docs_per_day - cfg.min_docs_per_day));
      for (int i = 0; i < count; ++i) {
        const double u = rng.u01() * run;
        const int topic = static_cast<int>(
            std::lower_bound(topic_cum.begin(), topic_cum.end(), u) -
            topic_cum.begin());
        DocumentRecord rec;
        rec.date = dates[static_cast<std::size_t>(t)];
        rec.category = cat;
        const int len = cfg.min_doc_tokens +
                        static_cast<int>(rng.uniform_int(
                            0, cfg.max_doc_tokens - cfg.min_doc_tokens));
        rec.text = make_doc_text(pt, std::min(topic, cfg.topics - 1), len, rng);
        const double jitter = cfg.score_noise;
        rec.sentiment = std::clamp(base + jitter * rng.gaussian(), -1.0, 1.0);
        rec.polarity = std::clamp(base + jitter * rng.gaussian(), -1.0, 1.0);
        rec.subjectivity = std::clamp(0.55 + 0.2 * rng.gaussian(), 0.05, 0.95);
        rec.class_prob =
            std::clamp(0.5 + 0.4 * base + 0.5 * jitter * rng.gaussian(), 0.01, 0.99);
        data.docs.push_back(std::move(rec));
      }
    }
  }
  return data;
}

void write_synthetic(const SynthConfig& cfg, const std::string& dir) {
  SynthData data = generate_synthetic(cfg);
  std::filesystem::create_directories(dir);
  Rng rng(mix_seed(cfg.seed, 0x9e1d));  // drives the missing-cell pattern

  CsvBuilder prices;
  prices.row({"date", "close"});
  for (Eigen::Index t = 0; t < data.prices.rows(); ++t)
    prices.row({data.prices.dates()[static_cast<std::size_t>(t)].to_string(),
                fmt_g(data.prices.values()(t, 0))});
  prices.write(dir + "/prices.csv");

  CsvBuilder ind;
  {
    std::vector<std::string> head = {"date"};
    for (const auto& n : data.indicators.names()) head.push_back(n);
    ind.row(head);
  }
  for (Eigen::Index t = 0; t < data.indicators.rows(); ++t) {
    std::vector<std::string> cells = {
        data.indicators.dates()[static_cast<std::size_t>(t)].to_string()};
    for (Eigen::Index c = 0; c < data.indicators.cols(); ++c) {
      // a sprinkle of missing cells exercises forward_fill downstream
      if (t > 0 && rng.u01() < 0.02)
        cells.push_back("");
      else
        cells.push_back(fmt_g(data.indicators.values()(t, c)));
    }
    ind.row(cells);
  }
  ind.write(dir + "/indicators.csv");

  save_documents_jsonl(dir + "/docs.jsonl", data.docs);

  std::vector<std::string> stop(default_stopwords().begin(), default_stopwords().end());
  std::sort(stop.begin(), stop.end());
  std::string stoptext;
  for (const auto& w : stop) stoptext += w + "\n";
  write_file_atomic(dir + "/stopwords.txt", stoptext);
}

}  // namespace fxlab
