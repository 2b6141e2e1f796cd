#include "fxlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fxlab/error.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + where + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value for '" + std::string(key) +
                      "': " + e.what());
  }
}

void read_algo(const json& obj, const char* key, Algo& out) {
  std::string s;
  read(obj, key, s);
  if (!s.empty()) out = algo_from_string(s);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

  ExperimentConfig cfg;
  check_keys(root, "",
             {"seed", "data", "segmentation", "features", "training", "optimizer",
              "baselines", "models", "ablation_models", "kind_combos", "dm_loss",
              "dm_horizon"});
  read(root, "seed", cfg.seed);
  read(root, "models", cfg.models);
  read(root, "ablation_models", cfg.ablation_models);
  read(root, "kind_combos", cfg.kind_combos);
  read(root, "dm_loss", cfg.dm_loss);
  read(root, "dm_horizon", cfg.dm_horizon);
  if (cfg.dm_loss != "squared" && cfg.dm_loss != "absolute")
    throw ConfigError("config: dm_loss must be 'squared' or 'absolute'");

  if (root.contains("data")) {
    const json& j = root["data"];
    check_keys(j, "data.",
               {"prices", "indicators", "documents", "stopwords", "date_column",
                "target_column", "fill_policy"});
    read(j, "prices", cfg.data.prices);
    read(j, "indicators", cfg.data.indicators);
    read(j, "documents", cfg.data.documents);
    read(j, "stopwords", cfg.data.stopwords);
    read(j, "date_column", cfg.data.date_column);
    read(j, "target_column", cfg.data.target_column);
    if (j.contains("fill_policy"))
      cfg.data.fill_policy = fill_policy_from_string(j["fill_policy"].get<std::string>());
  }
  if (root.contains("segmentation")) {
    const json& j = root["segmentation"];
    check_keys(j, "segmentation.",
               {"train_start", "train_end", "context_days", "forecast_start",
                "forecast_end"});
    read(j, "train_start", cfg.segmentation.train_start);
    read(j, "train_end", cfg.segmentation.train_end);
    read(j, "context_days", cfg.segmentation.context_days);
    read(j, "forecast_start", cfg.segmentation.forecast_start);
    read(j, "forecast_end", cfg.segmentation.forecast_end);
  }
  if (root.contains("features")) {
    const json& j = root["features"];
    check_keys(j, "features.",
               {"recipe", "sentiment_decay", "sentiment_window", "topics",
                "lda_alpha", "lda_beta", "lda_iterations", "lda_burn_in",
                "token_min_len", "token_min_doc_freq"});
    read(j, "recipe", cfg.features.recipe);
    read(j, "sentiment_decay", cfg.features.sentiment_decay);
    read(j, "sentiment_window", cfg.features.sentiment_window);
    read(j, "topics", cfg.features.topics);
    read(j, "lda_alpha", cfg.features.lda_alpha);
    read(j, "lda_beta", cfg.features.lda_beta);
    read(j, "lda_iterations", cfg.features.lda_iterations);
    read(j, "lda_burn_in", cfg.features.lda_burn_in);
    read(j, "token_min_len", cfg.features.token_min_len);
    read(j, "token_min_doc_freq", cfg.features.token_min_doc_freq);
    static const std::set<std::string> known_features = {
        "lagged_indicators", "si_news",       "si_analysis",
        "class_news",        "class_analysis", "topic_scores"};
    for (const auto& f : cfg.features.recipe)
      if (!known_features.count(f))
        throw ConfigError("config: unknown feature generator '" + f + "'");
  }
  if (root.contains("training")) {
    const json& j = root["training"];
    check_keys(j, "training.",
               {"cell", "hidden_units", "timesteps", "learning_rate", "epochs",
                "batch_size", "patience", "clip_norm", "adam_beta1", "adam_beta2",
                "adam_eps", "valid_fraction"});
    if (j.contains("cell"))
      cfg.training.cell = cell_kind_from_string(j["cell"].get<std::string>());
    read(j, "hidden_units", cfg.training.hidden_units);
    read(j, "timesteps", cfg.training.timesteps);
    read(j, "learning_rate", cfg.training.learning_rate);
    read(j, "epochs", cfg.training.epochs);
    read(j, "batch_size", cfg.training.batch_size);
    read(j, "patience", cfg.training.patience);
    read(j, "clip_norm", cfg.training.clip_norm);
    read(j, "adam_beta1", cfg.training.adam_beta1);
    read(j, "adam_beta2", cfg.training.adam_beta2);
    read(j, "adam_eps", cfg.training.adam_eps);
    read(j, "valid_fraction", cfg.training.valid_fraction);
    if (cfg.training.valid_fraction <= 0 || cfg.training.valid_fraction >= 0.9)
      throw ConfigError("config: training.valid_fraction must be in (0, 0.9)");
  }
  if (root.contains("optimizer")) {
    const json& j = root["optimizer"];
    check_keys(j, "optimizer.",
               {"algo", "population", "iterations", "w", "c1", "c2", "tune_epochs",
                "hidden_min", "hidden_max", "timesteps_min", "timesteps_max",
                "lr_min", "lr_max", "log2_batch_min", "log2_batch_max",
                "ga_crossover", "ga_mutation", "cs_abandon", "bat_loudness",
                "bat_pulse"});
    read_algo(j, "algo", cfg.optimizer.algo);
    read(j, "population", cfg.optimizer.population);
    read(j, "iterations", cfg.optimizer.iterations);
    read(j, "w", cfg.optimizer.w);
    read(j, "c1", cfg.optimizer.c1);
    read(j, "c2", cfg.optimizer.c2);
    read(j, "tune_epochs", cfg.optimizer.tune_epochs);
    read(j, "hidden_min", cfg.optimizer.hidden_min);
    read(j, "hidden_max", cfg.optimizer.hidden_max);
    read(j, "timesteps_min", cfg.optimizer.timesteps_min);
    read(j, "timesteps_max", cfg.optimizer.timesteps_max);
    read(j, "lr_min", cfg.optimizer.lr_min);
    read(j, "lr_max", cfg.optimizer.lr_max);
    read(j, "log2_batch_min", cfg.optimizer.log2_batch_min);
    read(j, "log2_batch_max", cfg.optimizer.log2_batch_max);
    read(j, "ga_crossover", cfg.optimizer.variant_options.ga_crossover);
    read(j, "ga_mutation", cfg.optimizer.variant_options.ga_mutation);
    read(j, "cs_abandon", cfg.optimizer.variant_options.cs_abandon);
    read(j, "bat_loudness", cfg.optimizer.variant_options.bat_loudness);
    read(j, "bat_pulse", cfg.optimizer.variant_options.bat_pulse);
  }
  if (root.contains("baselines")) {
    const json& j = root["baselines"];
    check_keys(j, "baselines.",
               {"var_max_lag", "lag_criterion", "ar_p", "ar_d", "linear_lags",
                "forest_trees", "forest_depth"});
    read(j, "var_max_lag", cfg.baselines.var_max_lag);
    if (j.contains("lag_criterion"))
      cfg.baselines.lag_criterion =
          lag_criterion_from_string(j["lag_criterion"].get<std::string>());
    read(j, "ar_p", cfg.baselines.ar_p);
    read(j, "ar_d", cfg.baselines.ar_d);
    read(j, "linear_lags", cfg.baselines.linear_lags);
    read(j, "forest_trees", cfg.baselines.forest_trees);
    read(j, "forest_depth", cfg.baselines.forest_depth);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string ExperimentConfig::materialize() const {
  json j;
  j["seed"] = seed;
  j["models"] = models;
  j["ablation_models"] = ablation_models;
  j["kind_combos"] = kind_combos;
  j["dm_loss"] = dm_loss;
  j["dm_horizon"] = dm_horizon;
  j["data"] = {{"prices", data.prices},
               {"indicators", data.indicators},
               {"documents", data.documents},
               {"stopwords", data.stopwords},
               {"date_column", data.date_column},
               {"target_column", data.target_column},
               {"fill_policy", to_string(data.fill_policy)}};
  j["segmentation"] = {{"train_start", segmentation.train_start},
                       {"train_end", segmentation.train_end},
                       {"context_days", segmentation.context_days},
                       {"forecast_start", segmentation.forecast_start},
                       {"forecast_end", segmentation.forecast_end}};
  j["features"] = {{"recipe", features.recipe},
                   {"sentiment_decay", features.sentiment_decay},
                   {"sentiment_window", features.sentiment_window},
                   {"topics", features.topics},
                   {"lda_alpha", features.lda_alpha},
                   {"lda_beta", features.lda_beta},
                   {"lda_iterations", features.lda_iterations},
                   {"lda_burn_in", features.lda_burn_in},
                   {"token_min_len", features.token_min_len},
                   {"token_min_doc_freq", features.token_min_doc_freq}};
  j["training"] = {{"cell", to_string(training.cell)},
                   {"hidden_units", training.hidden_units},
                   {"timesteps", training.timesteps},
                   {"learning_rate", training.learning_rate},
                   {"epochs", training.epochs},
                   {"batch_size", training.batch_size},
                   {"patience", training.patience},
                   {"clip_norm", training.clip_norm},
                   {"adam_beta1", training.adam_beta1},
                   {"adam_beta2", training.adam_beta2},
                   {"adam_eps", training.adam_eps},
                   {"valid_fraction", training.valid_fraction}};
  j["optimizer"] = {{"algo", to_string(optimizer.algo)},
                    {"population", optimizer.population},
                    {"iterations", optimizer.iterations},
                    {"w", optimizer.w},
                    {"c1", optimizer.c1},
                    {"c2", optimizer.c2},
                    {"tune_epochs", optimizer.tune_epochs},
                    {"hidden_min", optimizer.hidden_min},
                    {"hidden_max", optimizer.hidden_max},
                    {"timesteps_min", optimizer.timesteps_min},
                    {"timesteps_max", optimizer.timesteps_max},
                    {"lr_min", optimizer.lr_min},
                    {"lr_max", optimizer.lr_max},
                    {"log2_batch_min", optimizer.log2_batch_min},
                    {"log2_batch_max", optimizer.log2_batch_max},
                    {"ga_crossover", optimizer.variant_options.ga_crossover},
                    {"ga_mutation", optimizer.variant_options.ga_mutation},
                    {"cs_abandon", optimizer.variant_options.cs_abandon},
                    {"bat_loudness", optimizer.variant_options.bat_loudness},
                    {"bat_pulse", optimizer.variant_options.bat_pulse}};
  j["baselines"] = {{"var_max_lag", baselines.var_max_lag},
                    {"lag_criterion", to_string(baselines.lag_criterion)},
                    {"ar_p", baselines.ar_p},
                    {"ar_d", baselines.ar_d},
                    {"linear_lags", baselines.linear_lags},
                    {"forest_trees", baselines.forest_trees},
                    {"forest_depth", baselines.forest_depth}};
  return j.dump(2) + "\n";
}

std::string ExperimentConfig::config_hash() const {
  const std::string text = materialize();
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
  return buf;
}

}  // namespace fxlab
