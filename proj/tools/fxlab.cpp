// fxlab: exchange-rate forecasting laboratory.
//
// Data flows: price/indicator CSVs plus scored documents go through
// ingestion and feature derivation (sentiment indices, classification
// means, LDA topic scores); networks and classical baselines forecast the
// held-out segment; harnesses rank, ablate and test the results.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fxlab/baselines.hpp"
#include "fxlab/config.hpp"
#include "fxlab/documents.hpp"
#include "fxlab/error.hpp"
#include "fxlab/eval.hpp"
#include "fxlab/harness.hpp"
#include "fxlab/ingest.hpp"
#include "fxlab/io.hpp"
#include "fxlab/models.hpp"
#include "fxlab/rnn.hpp"
#include "fxlab/sentiment.hpp"
#include "fxlab/synth.hpp"
#include "fxlab/textmine.hpp"

namespace {

using namespace fxlab;

void print_outcome(const HarnessOutcome& out, const std::string& out_dir) {
  for (const std::string& w : out.warnings)
    std::cerr << "warning: " << w << "\n";
  std::cout << out.metrics_csv;
  std::cout << "rows: " << out.ok_rows << " ok, " << out.failed_rows
            << " failed, " << out.external_rows << " external\n";
  std::cout << "artifacts in " << out_dir << ":";
  for (const std::string& a : out.artifacts) std::cout << " " << a;
  std::cout << "\n";
}

int cmd_synth(const SynthConfig& sc, const std::string& out_dir) {
  write_synthetic(sc, out_dir);
  std::cout << "wrote prices.csv indicators.csv docs.jsonl stopwords.txt to "
            << out_dir << "\n";
  return 0;
}

int cmd_ingest(const std::string& config_path, const std::string& out_path) {
  ExperimentConfig cfg = load_config(config_path);
  std::vector<SeriesFrame> frames;
  frames.push_back(load_series_csv(cfg.data.prices, cfg.data.date_column));
  for (const std::string& p : cfg.data.indicators)
    frames.push_back(load_series_csv(p, cfg.data.date_column));
  SeriesFrame aligned = align_and_fill(frames, cfg.data.fill_policy);
  if (aligned.find_column(cfg.data.target_column) < 0)
    throw ConfigError("target column '" + cfg.data.target_column +
                      "' not present in the aligned series");
  write_series_csv(out_path, aligned, cfg.data.date_column);
  std::cout << "aligned " << aligned.rows() << " rows x " << aligned.cols()
            << " columns (" << aligned.dates().front().to_string() << " .. "
            << aligned.dates().back().to_string() << ") -> " << out_path
            << "\n";
  return 0;
}

int cmd_features(const std::string& config_path, const std::string& out_path) {
  ExperimentConfig cfg = load_config(config_path);
  ExperimentInputs in = load_inputs(cfg);
  write_series_csv(out_path, in.bundle.frame, cfg.data.date_column);
  auto list = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& c : v) s += (s.empty() ? "" : " ") + c;
    return s.empty() ? std::string("(none)") : s;
  };
  std::cout << "features -> " << out_path << " (" << in.bundle.frame.rows()
            << " rows)\n";
  std::cout << "financial: " << list(in.bundle.financial_columns) << "\n";
  std::cout << "kind1: " << list(in.bundle.kind1) << "\n";
  std::cout << "kind2: " << list(in.bundle.kind2) << "\n";
  std::cout << "kind3: " << list(in.bundle.kind3) << "\n";
  return 0;
}

int cmd_sentiment(const std::string& config_path, const std::string& out_path) {
  ExperimentConfig cfg = load_config(config_path);
  std::vector<SeriesFrame> frames;
  frames.push_back(load_series_csv(cfg.data.prices, cfg.data.date_column));
  for (const std::string& p : cfg.data.indicators)
    frames.push_back(load_series_csv(p, cfg.data.date_column));
  SeriesFrame aligned = align_and_fill(frames, cfg.data.fill_policy);
  std::vector<DocumentRecord> docs = load_documents_jsonl(cfg.data.documents);
  SentimentSeries s =
      build_sentiment_series(docs, aligned.dates(), cfg.features.sentiment_decay,
                             cfg.features.sentiment_window);
  CsvBuilder csv;
  csv.row({"series", "date", "value"});
  auto emit = [&](const char* name, const Eigen::VectorXd& v) {
    for (std::size_t t = 0; t < s.dates.size(); ++t)
      csv.row({name, s.dates[t].to_string(),
               fmt_g(v(static_cast<Eigen::Index>(t)))});
  };
  emit("sv_news", s.sv_news);
  emit("si_news", s.si_news);
  emit("sv_analysis", s.sv_analysis);
  emit("si_analysis", s.si_analysis);
  csv.write(out_path);
  std::cout << "sentiment series for " << s.dates.size() << " days -> "
            << out_path << "\n";
  return 0;
}

int cmd_lda(const std::string& config_path, const std::string& out_path,
            bool select, int k_min, int k_max) {
  ExperimentConfig cfg = load_config(config_path);
  std::vector<DocumentRecord> docs = load_documents_jsonl(cfg.data.documents);
  auto stopwords = cfg.data.stopwords.empty()
                       ? default_stopwords()
                       : load_stopwords(cfg.data.stopwords);
  TokenizedCorpus corpus =
      tokenize(docs, stopwords, cfg.features.token_min_len,
               cfg.features.token_min_doc_freq);
  std::cout << "corpus: " << corpus.docs.size() << " documents, "
            << corpus.vocab.size() << " vocabulary terms\n";

  LdaFitParams params;
  params.alpha = cfg.features.lda_alpha;
  params.beta = cfg.features.lda_beta;
  params.iterations = cfg.features.lda_iterations;
  params.burn_in = cfg.features.lda_burn_in;

  int k = cfg.features.topics;
  if (select) {
    std::vector<int> ks;
    for (int c = k_min; c <= k_max; ++c) ks.push_back(c);
    TopicCountChoice choice = select_topic_count(corpus, ks, params, cfg.seed);
    for (const auto& [kk, score] : choice.coherence)
      std::cout << "K=" << kk << " coherence=" << fmt_g(score) << "\n";
    std::cout << "selected K=" << choice.k_best << "\n";
    k = choice.k_best;
  }

  TopicModel model = fit_lda_gibbs(corpus, k, params.alpha, params.beta,
                                   params.iterations, params.burn_in, cfg.seed);
  for (int t = 0; t < model.K; ++t) {
    std::vector<int> order(corpus.vocab.size());
    for (std::size_t v = 0; v < order.size(); ++v)
      order[v] = static_cast<int>(v);
    std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(10, order.size()),
                      order.end(), [&](int a, int b) {
                        if (model.phi(t, a) != model.phi(t, b))
                          return model.phi(t, a) > model.phi(t, b);
                        return a < b;
                      });
    std::cout << "topic " << t << ":";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i)
      std::cout << " " << corpus.vocab[static_cast<std::size_t>(order[i])];
    std::cout << "\n";
  }
  std::cout << "coherence=" << fmt_g(umass_coherence(corpus, model)) << "\n";
  save_topic_model(out_path, model, corpus.vocab);
  std::cout << "topic model -> " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& checkpoint) {
  ExperimentConfig cfg = load_config(config_path);
  ExperimentInputs in = load_inputs(cfg);
  std::vector<std::string> columns = in.bundle.columns_for(true, true, true, true);
  TrainArtifacts a = train_default_network(cfg, in.bundle, columns);
  ForecastFrame actual = forecast_actuals(cfg, in.bundle);
  RegressionMetrics m = regression_metrics(actual.actual, a.predictions);
  std::cout << to_string(a.model.spec.cell) << " trained for "
            << a.model.train_loss.size() << " epochs (best epoch "
            << a.model.best_epoch << ")\n";
  if (!a.model.valid_rmse.empty())
    std::cout << "valid RMSE (normalized): "
              << fmt_g(a.model.valid_rmse[static_cast<std::size_t>(
                     a.model.best_epoch - 1)])
              << "\n";
  std::cout << "forecast MAE=" << fmt_g(m.mae) << " RMSE=" << fmt_g(m.rmse)
            << "\n";
  if (!checkpoint.empty()) {
    save_checkpoint(checkpoint, a.model);
    std::cout << "checkpoint -> " << checkpoint << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fxlab: exchange-rate forecasting laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fxlab 0.1.0");

  std::function<int()> action;

  // synth
  {
    auto* sub = app.add_subcommand(
        "synth", "Generate the bundled synthetic dataset");
    auto sc = std::make_shared<SynthConfig>();
    auto out = std::make_shared<std::string>("data");
    sub->add_option("--out", *out, "output directory")->capture_default_str();
    sub->add_option("--seed", sc->seed, "generator seed")
        ->capture_default_str();
    sub->add_option("--days", sc->days, "calendar days to simulate")
        ->capture_default_str();
    sub->add_option("--topics", sc->topics, "planted topic count")
        ->capture_default_str();
    sub->callback([&action, sc, out] {
      action = [sc, out] { return cmd_synth(*sc, *out); };
    });
  }

  // ingest
  {
    auto* sub = app.add_subcommand(
        "ingest", "Align price and indicator series onto one calendar");
    auto cfgp = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("aligned.csv");
    sub->add_option("--config", *cfgp, "experiment config (JSON)")->required();
    sub->add_option("--out", *out, "output CSV")->capture_default_str();
    sub->callback([&action, cfgp, out] {
      action = [cfgp, out] { return cmd_ingest(*cfgp, *out); };
    });
  }

  // features
  {
    auto* sub = app.add_subcommand(
        "features", "Derive the full feature table (financial + text)");
    auto cfgp = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("features.csv");
    sub->add_option("--config", *cfgp, "experiment config (JSON)")->required();
    sub->add_option("--out", *out, "output CSV")->capture_default_str();
    sub->callback([&action, cfgp, out] {
      action = [cfgp, out] { return cmd_features(*cfgp, *out); };
    });
  }

  // sentiment
  {
    auto* sub = app.add_subcommand(
        "sentiment", "Daily sentiment values and decayed sentiment indices");
    auto cfgp = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("sentiment.csv");
    sub->add_option("--config", *cfgp, "experiment config (JSON)")->required();
    sub->add_option("--out", *out, "output CSV (long format)")
        ->capture_default_str();
    sub->callback([&action, cfgp, out] {
      action = [cfgp, out] { return cmd_sentiment(*cfgp, *out); };
    });
  }

  // lda
  {
    auto* sub = app.add_subcommand(
        "lda", "Fit the collapsed-Gibbs topic model (optionally scan K)");
    auto cfgp = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("topics.model");
    auto select = std::make_shared<bool>(false);
    auto k_min = std::make_shared<int>(2);
    auto k_max = std::make_shared<int>(8);
    sub->add_option("--config", *cfgp, "experiment config (JSON)")->required();
    sub->add_option("--out", *out, "topic model file")->capture_default_str();
    sub->add_flag("--select", *select, "choose K by UMass coherence");
    sub->add_option("--k-min", *k_min, "smallest K scanned")
        ->capture_default_str();
    sub->add_option("--k-max", *k_max, "largest K scanned")
        ->capture_default_str();
    sub->callback([&action, cfgp, out, select, k_min, k_max] {
      action = [cfgp, out, select, k_min, k_max] {
        return cmd_lda(*cfgp, *out, *select, *k_min, *k_max);
      };
    });
  }

  // train
  {
    auto* sub = app.add_subcommand(
        "train", "Train the default network and report forecast metrics");
    auto cfgp = std::make_shared<std::string>();
    auto ckpt = std::make_shared<std::string>();
    sub->add_option("--config", *cfgp, "experiment config (JSON)")->required();
    sub->add_option("--checkpoint", *ckpt, "write the trained weights here");
    sub->callback([&action, cfgp, ckpt] {
      action = [cfgp, ckpt] { return cmd_train(*cfgp, *ckpt); };
    });
  }

  // harnesses
  auto add_harness = [&](const char* name, const char* help,
                         HarnessOutcome (*fn)(const ExperimentConfig&,
                                              const std::string&)) {
    auto* sub = app.add_subcommand(name, help);
    auto cfgp = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>(std::string("report-") + name);
    sub->add_option("--config", *cfgp, "experiment config (JSON)")->required();
    sub->add_option("--out", *out, "report directory")->capture_default_str();
    sub->callback([&action, cfgp, out, fn] {
      action = [cfgp, out, fn] {
        ExperimentConfig cfg = load_config(*cfgp);
        HarnessOutcome o = fn(cfg, *out);
        print_outcome(o, *out);
        return 0;
      };
    });
  };
  add_harness("compare",
              "Train and rank every configured model on identical splits",
              &run_compare);
  add_harness("ablate-text",
              "Evaluate each ablation model on text / financial / combined",
              &run_text_ablation);
  add_harness("ablate-kinds",
              "Evaluate the headline model under textual-kind combinations",
              &run_kind_ablation);

  // dm
  {
    auto* sub = app.add_subcommand(
        "dm", "All-pairs Diebold-Mariano test over forecast errors");
    auto cfgp = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("report-dm");
    auto from = std::make_shared<std::string>();
    sub->add_option("--config", *cfgp, "experiment config (JSON)")->required();
    sub->add_option("--out", *out, "report directory")->capture_default_str();
    sub->add_option("--from", *from,
                    "reuse predictions.csv from this report directory");
    sub->callback([&action, cfgp, out, from] {
      action = [cfgp, out, from] {
        ExperimentConfig cfg = load_config(*cfgp);
        HarnessOutcome o = run_dm(cfg, *out, *from);
        print_outcome(o, *out);
        return 0;
      };
    });
  }

  // plot-data
  {
    auto* sub = app.add_subcommand(
        "plot-data", "Re-emit a report series as a long-format CSV");
    auto report = std::make_shared<std::string>();
    auto what = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    sub->add_option("--report", *report, "report directory")->required();
    sub->add_option("--what", *what,
                    "forecast_vs_actual | topic_trend | si_series | "
                    "convergence")
        ->required();
    sub->add_option("--out", *out, "output CSV (default inside the report)");
    sub->callback([&action, report, what, out] {
      action = [report, what, out] {
        std::string dest = fxlab::emit_plot_data(*report, *what, *out);
        std::cout << "plot data -> " << dest << "\n";
        return 0;
      };
    });
  }

  try {
    app.parse(argc, argv);
    return action ? action() : 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const fxlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const fxlab::AllFailedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fxlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
