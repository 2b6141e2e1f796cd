#include "fxlab/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fxlab/documents.hpp"
#include "fxlab/error.hpp"
#include "fxlab/eval.hpp"
#include "fxlab/ingest.hpp"
#include "fxlab/io.hpp"
#include "fxlab/textmine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fxlab {

namespace {

constexpr const char* kLibraryVersion = "0.1.0";
constexpr int kTrendSlices = 5;

// --- shared evaluation plumbing ----------------------------------------

struct EvalRow {
  ModelRun run;
  RegressionMetrics metrics;  // meaningful only when run.status == "ok"
  std::optional<double> rank_mae, rank_rmse, weighted_rank;
};

EvalRow eval_model(const std::string& name, const ExperimentConfig& cfg,
                   const FeatureBundle& bundle,
                   const std::vector<std::string>& columns,
                   const ForecastFrame& actual) {
  EvalRow row;
  try {
    row.run = run_model(name, cfg, bundle, columns);
  } catch (const std::exception& e) {
    row.run = ModelRun{};
    row.run.name = name;
    row.run.status = "failed";
    row.run.detail = e.what();
    return row;
  }
  if (row.run.status != "ok") return row;
  if (row.run.predictions.size() != actual.actual.size()) {
    row.run.status = "failed";
    row.run.detail = "prediction length differs from the forecast segment";
    return row;
  }
  row.metrics = regression_metrics(actual.actual, row.run.predictions);
  return row;
}

// Fills rank_mae / rank_rmse / weighted_rank across the ok rows.
void rank_rows(std::vector<EvalRow>& rows,
               const std::vector<std::string>& labels) {
  MetricTable table;
  table.metrics = {"MAE", "RMSE"};
  std::vector<std::size_t> ok_index;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].run.status != "ok") continue;
    table.models.push_back(labels[i]);
    table.values.push_back({rows[i].metrics.mae, rows[i].metrics.rmse});
    ok_index.push_back(i);
  }
  if (table.models.empty()) return;
  RankResult rr = rank_models(table);
  for (std::size_t j = 0; j < ok_index.size(); ++j) {
    rows[ok_index[j]].rank_mae = rr.ranks[j][0];
    rows[ok_index[j]].rank_rmse = rr.ranks[j][1];
    rows[ok_index[j]].weighted_rank = rr.weighted[j];
  }
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? fmt_g(*v) : std::string{};
}

// Fixed leading column order: model, MAE, rank_MAE, RMSE, rank_RMSE,
// weighted_rank; a trailing status column marks failed/external rows.
std::string metrics_table_csv(const std::vector<EvalRow>& rows,
                              const std::vector<std::string>& labels) {
  CsvBuilder csv;
  csv.row({"model", "MAE", "rank_MAE", "RMSE", "rank_RMSE", "weighted_rank",
           "status"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const EvalRow& r = rows[i];
    if (r.run.status == "ok") {
      csv.row({labels[i], fmt_g(r.metrics.mae), opt_cell(r.rank_mae),
               fmt_g(r.metrics.rmse), opt_cell(r.rank_rmse),
               opt_cell(r.weighted_rank), r.run.status});
    } else {
      csv.row({labels[i], "", "", "", "", "", r.run.status});
    }
  }
  return csv.body();
}

std::string predictions_csv(const ForecastFrame& actual,
                            const std::vector<const EvalRow*>& ok_rows,
                            const std::vector<std::string>& labels) {
  CsvBuilder csv;
  std::vector<std::string> header = {"date", "actual"};
  header.insert(header.end(), labels.begin(), labels.end());
  csv.row(header);
  for (std::size_t t = 0; t < actual.dates.size(); ++t) {
    std::vector<std::string> cells = {actual.dates[t].to_string(),
                                      fmt_exact(actual.actual(
                                          static_cast<Eigen::Index>(t)))};
    for (const EvalRow* r : ok_rows)
      cells.push_back(
          fmt_exact(r->run.predictions(static_cast<Eigen::Index>(t))));
    csv.row(cells);
  }
  return csv.body();
}

json provenance_json(const ExperimentConfig& cfg, const std::string& kind) {
  json j;
  j["kind"] = kind;
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.config_hash();
  j["config"] = json::parse(cfg.materialize());
  j["versions"] = {{"fxlab", kLibraryVersion}};
  return j;
}

json row_json(const EvalRow& r) {
  json m;
  m["name"] = r.run.name;
  m["status"] = r.run.status;
  if (!r.run.detail.empty()) m["detail"] = r.run.detail;
  if (r.run.status == "ok") {
    m["MAE"] = r.metrics.mae;
    m["MSE"] = r.metrics.mse;
    m["RMSE"] = r.metrics.rmse;
    if (r.metrics.r2) m["R2"] = *r.metrics.r2;
    if (r.rank_mae) m["rank_MAE"] = *r.rank_mae;
    if (r.rank_rmse) m["rank_RMSE"] = *r.rank_rmse;
    if (r.weighted_rank) m["weighted_rank"] = *r.weighted_rank;
    if (!r.run.hyperparameters.empty()) {
      json h;
      for (const auto& [k, v] : r.run.hyperparameters) h[k] = v;
      m["hyperparameters"] = h;
    }
  }
  return m;
}

void write_json(const fs::path& path, const json& j) {
  write_file_atomic(path.string(), j.dump(2) + "\n");
}

void count_rows(const std::vector<EvalRow>& rows, HarnessOutcome& out) {
  for (const EvalRow& r : rows) {
    if (r.run.status == "ok")
      ++out.ok_rows;
    else if (r.run.status == "external")
      ++out.external_rows;
    else
      ++out.failed_rows;
  }
}

void write_search_logs(const fs::path& dir,
                       const std::vector<EvalRow>& rows,
                       const std::vector<std::string>& labels,
                       HarnessOutcome& out) {
  CsvBuilder conv;
  conv.row({"series", "iteration", "value"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const EvalRow& r = rows[i];
    if (!r.run.search_log_csv.empty()) {
      std::string name = "search_" + labels[i] + ".csv";
      write_file_atomic((dir / name).string(), r.run.search_log_csv);
      out.artifacts.push_back(name);
    }
    for (std::size_t k = 0; k < r.run.convergence.size(); ++k)
      conv.row({labels[i], std::to_string(k + 1),
                fmt_g(r.run.convergence[k])});
  }
  write_file_atomic((dir / "convergence.csv").string(), conv.body());
  out.artifacts.push_back("convergence.csv");
}

// Sanitized row label for ablation runs: model plus feature-set tag.
std::string tagged(const std::string& model, const std::string& tag) {
  return model + "@" + tag;
}

// --- CSV reading (for dm --from and plot-data) --------------------------

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_cell(const std::string& s, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error("non-numeric cell '" + s + "' in " + where);
  return v;
}

struct PredictionSet {
  std::vector<std::string> names;
  std::vector<Date> dates;
  Eigen::VectorXd actual;
  Eigen::MatrixXd preds;  // rows = dates, cols = models
};

PredictionSet load_predictions(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.size() < 2 || rows[0].size() < 3 || rows[0][0] != "date" ||
      rows[0][1] != "actual")
    throw Error("'" + path + "' is not a predictions table");
  PredictionSet p;
  p.names.assign(rows[0].begin() + 2, rows[0].end());
  auto n = rows.size() - 1;
  p.actual.resize(static_cast<Eigen::Index>(n));
  p.preds.resize(static_cast<Eigen::Index>(n),
                 static_cast<Eigen::Index>(p.names.size()));
  for (std::size_t t = 0; t < n; ++t) {
    const auto& r = rows[t + 1];
    if (r.size() != rows[0].size())
      throw Error("prediction rows have unequal lengths in '" + path + "'");
    p.dates.push_back(Date::parse(r[0]));
    p.actual(static_cast<Eigen::Index>(t)) = parse_cell(r[1], path);
    for (std::size_t c = 0; c < p.names.size(); ++c)
      p.preds(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
          parse_cell(r[c + 2], path);
  }
  return p;
}

DmLoss dm_loss_from(const std::string& s) {
  if (s == "squared") return DmLoss::squared;
  if (s == "absolute") return DmLoss::absolute;
  throw ConfigError("dm_loss must be 'squared' or 'absolute', got '" + s + "'");
}

}  // namespace

// --- inputs --------------------------------------------------------------

ExperimentInputs load_inputs(const ExperimentConfig& cfg) {
  ExperimentInputs in;
  std::vector<SeriesFrame> frames;
  frames.push_back(load_series_csv(cfg.data.prices, cfg.data.date_column));
  for (const std::string& path : cfg.data.indicators)
    frames.push_back(load_series_csv(path, cfg.data.date_column));
  in.aligned = align_and_fill(frames, cfg.data.fill_policy);
  if (in.aligned.find_column(cfg.data.target_column) < 0)
    throw ConfigError("target column '" + cfg.data.target_column +
                      "' not present in the aligned series");
  in.docs = load_documents_jsonl(cfg.data.documents);
  in.bundle = build_features(cfg, in.aligned, in.docs);
  return in;
}

// --- compare ---------------------------------------------------------------

HarnessOutcome run_compare(const ExperimentConfig& cfg,
                           const std::string& out_dir) {
  ExperimentInputs in = load_inputs(cfg);
  ForecastFrame actual = forecast_actuals(cfg, in.bundle);
  std::vector<std::string> combined = in.bundle.columns_for(true, true, true, true);

  std::vector<EvalRow> rows;
  std::vector<std::string> labels;
  for (const std::string& name : cfg.models) {
    labels.push_back(name);
    rows.push_back(eval_model(name, cfg, in.bundle, combined, actual));
  }
  rank_rows(rows, labels);

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  HarnessOutcome out;
  count_rows(rows, out);

  out.metrics_csv = metrics_table_csv(rows, labels);
  write_file_atomic((dir / "metrics.csv").string(), out.metrics_csv);
  out.artifacts.push_back("metrics.csv");

  std::vector<const EvalRow*> ok;
  std::vector<std::string> ok_labels;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].run.status == "ok") {
      ok.push_back(&rows[i]);
      ok_labels.push_back(labels[i]);
    }
  write_file_atomic((dir / "predictions.csv").string(),
                    predictions_csv(actual, ok, ok_labels));
  out.artifacts.push_back("predictions.csv");

  write_search_logs(dir, rows, labels, out);

  // sentiment index series (long format, ready for plotting)
  {
    CsvBuilder csv;
    csv.row({"series", "date", "value"});
    const SentimentSeries& s = in.bundle.sentiment;
    auto emit = [&](const char* name, const Eigen::VectorXd& v) {
      for (std::size_t t = 0; t < s.dates.size(); ++t)
        csv.row({name, s.dates[t].to_string(),
                 fmt_g(v(static_cast<Eigen::Index>(t)))});
    };
    if (!s.dates.empty()) {
      emit("sv_news", s.sv_news);
      emit("si_news", s.si_news);
      emit("sv_analysis", s.sv_analysis);
      emit("si_analysis", s.si_analysis);
    }
    write_file_atomic((dir / "si_series.csv").string(), csv.body());
    out.artifacts.push_back("si_series.csv");
  }

  // topic prevalence over time slices
  if (in.bundle.topic_model.K > 0) {
    TopicTrend trend =
        topic_trend(in.bundle.topic_model, in.bundle.corpus, kTrendSlices);
    CsvBuilder csv;
    csv.row({"series", "slice_start", "value"});
    for (int k = 0; k < in.bundle.topic_model.K; ++k)
      for (std::size_t s = 0; s < trend.slice_start.size(); ++s) {
        std::string value;
        if (trend.has_documents[s])
          value = fmt_g(trend.prevalence(static_cast<Eigen::Index>(s), k));
        csv.row({"topic_" + std::to_string(k),
                 trend.slice_start[s].to_string(), value});
      }
    write_file_atomic((dir / "topic_trend.csv").string(), csv.body());
    out.artifacts.push_back("topic_trend.csv");
  }

  // indicator-by-indicator lag choice and feature correlations; lag choice
  // is diagnostic, so a degenerate series downgrades it to a warning
  try {
    write_file_atomic(
        (dir / "lag_report.csv").string(),
        lag_selection_report(in.bundle.frame, in.bundle.target_column,
                             cfg.baselines.var_max_lag,
                             cfg.baselines.lag_criterion));
    out.artifacts.push_back("lag_report.csv");
  } catch (const Error& e) {
    out.warnings.push_back(std::string("lag report skipped: ") + e.what());
  }
  {
    CorrelationResult corr = correlation_matrix(in.bundle.frame);
    CsvBuilder csv;
    std::vector<std::string> header = {"column"};
    header.insert(header.end(), corr.names.begin(), corr.names.end());
    csv.row(header);
    for (std::size_t i = 0; i < corr.names.size(); ++i) {
      std::vector<std::string> cells = {corr.names[i]};
      for (std::size_t j = 0; j < corr.names.size(); ++j) {
        bool ok_cell = corr.valid[i] && corr.valid[j];
        cells.push_back(ok_cell ? fmt_g(corr.matrix(
                                      static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(j)))
                                : std::string{});
      }
      csv.row(cells);
    }
    write_file_atomic((dir / "correlation.csv").string(), csv.body());
    out.artifacts.push_back("correlation.csv");
  }

  json j = provenance_json(cfg, "compare");
  json models = json::array();
  for (const EvalRow& r : rows) models.push_back(row_json(r));
  j["models"] = models;
  json notes = json::array();
  for (const EvalRow& r : rows)
    if (!r.run.detail.empty())
      notes.push_back(r.run.name + ": " + r.run.detail);
  for (const std::string& w : out.warnings) notes.push_back(w);
  j["notes"] = notes;
  out.report_json = j.dump(2) + "\n";
  write_file_atomic((dir / "report.json").string(), out.report_json);
  out.artifacts.push_back("report.json");

  if (out.ok_rows == 0)
    throw AllFailedError("compare: every model row failed");
  return out;
}

// --- text ablation -----------------------------------------------------------

HarnessOutcome run_text_ablation(const ExperimentConfig& cfg,
                                 const std::string& out_dir) {
  ExperimentInputs in = load_inputs(cfg);
  if (in.bundle.text_columns().empty())
    throw ConfigError(
        "text features unavailable: enable si_news/si_analysis, "
        "class_news/class_analysis or topic_scores in the feature recipe");
  ForecastFrame actual = forecast_actuals(cfg, in.bundle);

  struct SetDef {
    const char* tag;
    std::vector<std::string> columns;
  };
  std::vector<SetDef> sets = {
      {"text", {}},
      {"financial", in.bundle.columns_for(true, false, false, false)},
      {"combined", in.bundle.columns_for(true, true, true, true)},
  };
  // text-only keeps the target series (it is the label and the window
  // backbone) plus every textual column
  sets[0].columns = in.bundle.text_columns();
  sets[0].columns.insert(sets[0].columns.begin(), in.bundle.target_column);

  std::vector<EvalRow> rows;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> row_key;  // model, set
  for (const std::string& model : cfg.ablation_models)
    for (const SetDef& s : sets) {
      labels.push_back(tagged(model, s.tag));
      row_key.emplace_back(model, s.tag);
      rows.push_back(eval_model(model, cfg, in.bundle, s.columns, actual));
    }

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  HarnessOutcome out;
  count_rows(rows, out);

  auto find_row = [&](const std::string& model,
                      const std::string& tag) -> const EvalRow* {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (row_key[i].first == model && row_key[i].second == tag)
        return &rows[i];
    return nullptr;
  };

  CsvBuilder grid;
  grid.row({"model", "feature_set", "MAE", "RMSE", "status"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const EvalRow& r = rows[i];
    if (r.run.status == "ok")
      grid.row({row_key[i].first, row_key[i].second, fmt_g(r.metrics.mae),
                fmt_g(r.metrics.rmse), r.run.status});
    else
      grid.row({row_key[i].first, row_key[i].second, "", "", r.run.status});
  }
  out.metrics_csv = grid.body();
  write_file_atomic((dir / "ablation_text.csv").string(), out.metrics_csv);
  out.artifacts.push_back("ablation_text.csv");

  CsvBuilder imp;
  imp.row({"model", "MAE_financial", "MAE_combined", "improvement_MAE",
           "RMSE_financial", "RMSE_combined", "improvement_RMSE"});
  json improvements = json::array();
  for (const std::string& model : cfg.ablation_models) {
    const EvalRow* fin = find_row(model, "financial");
    const EvalRow* com = find_row(model, "combined");
    std::vector<std::string> cells = {model, "", "", "", "", "", ""};
    json ji;
    ji["model"] = model;
    if (fin && com && fin->run.status == "ok" && com->run.status == "ok") {
      cells[1] = fmt_g(fin->metrics.mae);
      cells[2] = fmt_g(com->metrics.mae);
      cells[4] = fmt_g(fin->metrics.rmse);
      cells[5] = fmt_g(com->metrics.rmse);
      try {
        double im = improvement_rate(fin->metrics.mae, com->metrics.mae);
        cells[3] = fmt_g(im);
        ji["improvement_MAE"] = im;
      } catch (const Error& e) {
        out.warnings.push_back(model + ": " + e.what());
      }
      try {
        double ir = improvement_rate(fin->metrics.rmse, com->metrics.rmse);
        cells[6] = fmt_g(ir);
        ji["improvement_RMSE"] = ir;
      } catch (const Error& e) {
        out.warnings.push_back(model + ": " + e.what());
      }
    }
    imp.row(cells);
    improvements.push_back(ji);
  }
  write_file_atomic((dir / "ablation_text_improvement.csv").string(),
                    imp.body());
  out.artifacts.push_back("ablation_text_improvement.csv");

  std::vector<const EvalRow*> ok;
  std::vector<std::string> ok_labels;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].run.status == "ok") {
      ok.push_back(&rows[i]);
      ok_labels.push_back(labels[i]);
    }
  write_file_atomic((dir / "predictions.csv").string(),
                    predictions_csv(actual, ok, ok_labels));
  out.artifacts.push_back("predictions.csv");

  write_search_logs(dir, rows, labels, out);

  json j = provenance_json(cfg, "ablate-text");
  json grid_json = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    json r = row_json(rows[i]);
    r["model"] = row_key[i].first;
    r["feature_set"] = row_key[i].second;
    grid_json.push_back(r);
  }
  j["grid"] = grid_json;
  j["improvements"] = improvements;
  j["warnings"] = out.warnings;
  out.report_json = j.dump(2) + "\n";
  write_file_atomic((dir / "report.json").string(), out.report_json);
  out.artifacts.push_back("report.json");

  if (out.ok_rows == 0)
    throw AllFailedError("ablate-text: every model row failed");
  return out;
}

// --- kind ablation -------------------------------------------------------

HarnessOutcome run_kind_ablation(const ExperimentConfig& cfg,
                                 const std::string& out_dir) {
  ExperimentInputs in = load_inputs(cfg);
  ForecastFrame actual = forecast_actuals(cfg, in.bundle);
  if (cfg.ablation_models.empty())
    throw ConfigError("ablation_models must name at least one model");
  const std::string model = cfg.ablation_models.front();

  // Table-7 order: full set, pairs, singletons.
  std::vector<std::vector<int>> combos = cfg.kind_combos;
  if (combos.empty())
    combos = {{1, 2, 3}, {1, 2}, {1, 3}, {2, 3}, {1}, {2}, {3}};

  HarnessOutcome out;
  std::vector<std::vector<int>> cleaned;
  for (const auto& combo : combos) {
    if (combo.empty()) throw ConfigError("empty kind combination");
    std::vector<int> c = combo;
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    if (c.size() != combo.size()) {
      std::string label;
      for (int k : combo) label += (label.empty() ? "" : "+") + std::to_string(k);
      out.warnings.push_back("duplicate kind in combination " + label +
                             "; deduplicated");
    }
    for (int k : c)
      if (k < 1 || k > 3)
        throw ConfigError("kind combinations may only contain 1, 2 and 3");
    cleaned.push_back(c);
  }

  const std::vector<std::string>* kind_cols[4] = {nullptr, &in.bundle.kind1,
                                                  &in.bundle.kind2,
                                                  &in.bundle.kind3};
  std::set<int> needed;
  for (const auto& c : cleaned) needed.insert(c.begin(), c.end());
  for (int k : needed)
    if (kind_cols[k]->empty())
      throw ConfigError("kind " + std::to_string(k) +
                        " features unavailable: extend the feature recipe");

  std::vector<EvalRow> rows;
  std::vector<std::string> labels;
  for (const auto& c : cleaned) {
    bool k1 = std::count(c.begin(), c.end(), 1) > 0;
    bool k2 = std::count(c.begin(), c.end(), 2) > 0;
    bool k3 = std::count(c.begin(), c.end(), 3) > 0;
    std::string label = "kinds_";
    for (std::size_t i = 0; i < c.size(); ++i)
      label += (i ? "+" : "") + std::to_string(c[i]);
    labels.push_back(label);
    rows.push_back(eval_model(model, cfg, in.bundle,
                              in.bundle.columns_for(true, k1, k2, k3),
                              actual));
  }
  rank_rows(rows, labels);

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  count_rows(rows, out);

  out.metrics_csv = metrics_table_csv(rows, labels);
  write_file_atomic((dir / "ablation_kinds.csv").string(), out.metrics_csv);
  out.artifacts.push_back("ablation_kinds.csv");

  std::vector<const EvalRow*> ok;
  std::vector<std::string> ok_labels;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].run.status == "ok") {
      ok.push_back(&rows[i]);
      ok_labels.push_back(labels[i]);
    }
  write_file_atomic((dir / "predictions.csv").string(),
                    predictions_csv(actual, ok, ok_labels));
  out.artifacts.push_back("predictions.csv");

  write_search_logs(dir, rows, labels, out);

  json j = provenance_json(cfg, "ablate-kinds");
  j["model"] = model;
  json rj = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    json r = row_json(rows[i]);
    r["combination"] = labels[i];
    rj.push_back(r);
  }
  j["rows"] = rj;
  j["warnings"] = out.warnings;
  out.report_json = j.dump(2) + "\n";
  write_file_atomic((dir / "report.json").string(), out.report_json);
  out.artifacts.push_back("report.json");

  if (out.ok_rows == 0)
    throw AllFailedError("ablate-kinds: every row failed");
  return out;
}

// --- Diebold-Mariano -------------------------------------------------------

HarnessOutcome run_dm(const ExperimentConfig& cfg, const std::string& out_dir,
                      const std::string& predictions_from) {
  PredictionSet preds;
  HarnessOutcome out;

  if (!predictions_from.empty()) {
    fs::path src = fs::path(predictions_from);
    if (fs::is_directory(src)) src /= "predictions.csv";
    preds = load_predictions(src.string());
  } else {
    ExperimentInputs in = load_inputs(cfg);
    ForecastFrame actual = forecast_actuals(cfg, in.bundle);
    std::vector<std::string> combined =
        in.bundle.columns_for(true, true, true, true);
    std::vector<EvalRow> rows;
    for (const std::string& name : cfg.models)
      rows.push_back(eval_model(name, cfg, in.bundle, combined, actual));
    preds.dates = actual.dates;
    preds.actual = actual.actual;
    std::vector<Eigen::VectorXd> cols;
    for (const EvalRow& r : rows) {
      if (r.run.status == "ok") {
        preds.names.push_back(r.run.name);
        cols.push_back(r.run.predictions);
      } else if (r.run.status == "failed") {
        out.warnings.push_back(r.run.name + ": " + r.run.detail);
        ++out.failed_rows;
      } else {
        ++out.external_rows;
      }
    }
    preds.preds.resize(preds.actual.size(),
                       static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
      preds.preds.col(static_cast<Eigen::Index>(c)) = cols[c];
  }

  const auto n_models = preds.names.size();
  if (n_models < 2)
    throw AllFailedError(
        "dm: need predictions from at least two models, have " +
        std::to_string(n_models));
  out.ok_rows = static_cast<int>(n_models);

  DmLoss loss = dm_loss_from(cfg.dm_loss);
  Eigen::MatrixXd stats(n_models, n_models), pvals(n_models, n_models);
  stats.setZero();
  pvals.setOnes();
  std::vector<Eigen::VectorXd> errors;
  for (std::size_t c = 0; c < n_models; ++c)
    errors.push_back(preds.actual -
                     preds.preds.col(static_cast<Eigen::Index>(c)));
  for (std::size_t a = 0; a < n_models; ++a)
    for (std::size_t b = a + 1; b < n_models; ++b) {
      DmResult r = dm_test(errors[a], errors[b], loss, cfg.dm_horizon);
      stats(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          r.statistic;
      stats(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) =
          -r.statistic;
      pvals(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          r.p_value;
      pvals(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) =
          r.p_value;
    }

  // negative statistic: row model carries the lower loss
  std::vector<int> wins(n_models, 0);
  for (std::size_t a = 0; a < n_models; ++a)
    for (std::size_t b = 0; b < n_models; ++b)
      if (a != b &&
          stats(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) <
              0.0)
        ++wins[a];
  std::vector<double> rank(n_models, 0.0);
  for (std::size_t a = 0; a < n_models; ++a) {
    int better = 0, tied = 0;
    for (std::size_t b = 0; b < n_models; ++b) {
      if (wins[b] > wins[a]) ++better;
      if (wins[b] == wins[a]) ++tied;  // includes self
    }
    rank[a] = better + (tied + 1) / 2.0;
  }

  fs::create_directories(out_dir);
  fs::path dir(out_dir);

  auto matrix_csv = [&](const Eigen::MatrixXd& m) {
    CsvBuilder csv;
    std::vector<std::string> header = {"model"};
    header.insert(header.end(), preds.names.begin(), preds.names.end());
    csv.row(header);
    for (std::size_t a = 0; a < n_models; ++a) {
      std::vector<std::string> cells = {preds.names[a]};
      for (std::size_t b = 0; b < n_models; ++b)
        cells.push_back(fmt_g(m(static_cast<Eigen::Index>(a),
                                static_cast<Eigen::Index>(b))));
      csv.row(cells);
    }
    return csv.body();
  };
  write_file_atomic((dir / "dm_stats.csv").string(), matrix_csv(stats));
  out.artifacts.push_back("dm_stats.csv");
  write_file_atomic((dir / "dm_pvalues.csv").string(), matrix_csv(pvals));
  out.artifacts.push_back("dm_pvalues.csv");

  CsvBuilder ranks;
  ranks.row({"model", "wins", "rank"});
  for (std::size_t a = 0; a < n_models; ++a)
    ranks.row({preds.names[a], std::to_string(wins[a]), fmt_g(rank[a])});
  out.metrics_csv = ranks.body();
  write_file_atomic((dir / "dm_ranks.csv").string(), out.metrics_csv);
  out.artifacts.push_back("dm_ranks.csv");

  json j = provenance_json(cfg, "dm");
  j["loss"] = cfg.dm_loss;
  j["horizon"] = cfg.dm_horizon;
  j["models"] = preds.names;
  json js = json::array(), jp = json::array(), jw = json::array(),
       jr = json::array();
  for (std::size_t a = 0; a < n_models; ++a) {
    json rs = json::array(), rp = json::array();
    for (std::size_t b = 0; b < n_models; ++b) {
      rs.push_back(stats(static_cast<Eigen::Index>(a),
                         static_cast<Eigen::Index>(b)));
      rp.push_back(pvals(static_cast<Eigen::Index>(a),
                         static_cast<Eigen::Index>(b)));
    }
    js.push_back(rs);
    jp.push_back(rp);
    jw.push_back(wins[a]);
    jr.push_back(rank[a]);
  }
  j["statistics"] = js;
  j["p_values"] = jp;
  j["wins"] = jw;
  j["ranks"] = jr;
  j["warnings"] = out.warnings;
  out.report_json = j.dump(2) + "\n";
  write_file_atomic((dir / "report.json").string(), out.report_json);
  out.artifacts.push_back("report.json");
  return out;
}

// --- plot data ------------------------------------------------------------

std::string emit_plot_data(const std::string& report_dir,
                           const std::string& what,
                           const std::string& out_path) {
  static const std::map<std::string, const char*> sources = {
      {"forecast_vs_actual", "predictions.csv"},
      {"topic_trend", "topic_trend.csv"},
      {"si_series", "si_series.csv"},
      {"convergence", "convergence.csv"},
  };
  auto it = sources.find(what);
  if (it == sources.end()) {
    std::string valid;
    for (const auto& [k, v] : sources) valid += (valid.empty() ? "" : ", ") + k;
    throw ConfigError("unknown plot series '" + what + "'; valid: " + valid);
  }
  fs::path src = fs::path(report_dir) / it->second;
  if (!fs::exists(src))
    throw Error("report at '" + report_dir + "' does not contain " +
                std::string(it->second));

  std::string dest = out_path.empty()
                         ? (fs::path(report_dir) / ("plot_" + what + ".csv"))
                               .string()
                         : out_path;

  if (what == "forecast_vs_actual") {
    PredictionSet p = load_predictions(src.string());
    CsvBuilder csv;
    csv.row({"series", "date", "value"});
    for (std::size_t t = 0; t < p.dates.size(); ++t)
      csv.row({"actual", p.dates[t].to_string(),
               fmt_exact(p.actual(static_cast<Eigen::Index>(t)))});
    for (std::size_t c = 0; c < p.names.size(); ++c)
      for (std::size_t t = 0; t < p.dates.size(); ++t)
        csv.row({p.names[c], p.dates[t].to_string(),
                 fmt_exact(p.preds(static_cast<Eigen::Index>(t),
                                   static_cast<Eigen::Index>(c)))});
    write_file_atomic(dest, csv.body());
    return dest;
  }

  // the remaining series are stored in long format already; validate the
  // header and copy through
  auto rows = read_csv(src.string());
  if (rows.empty() || rows[0].size() != 3)
    throw Error("malformed plot source '" + src.string() + "'");
  CsvBuilder csv;
  for (const auto& r : rows) csv.row(r);
  write_file_atomic(dest, csv.body());
  return dest;
}

}  // namespace fxlab
