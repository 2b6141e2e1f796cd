#include "fxlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "fxlab/baselines.hpp"
#include "fxlab/error.hpp"
#include "fxlab/ingest.hpp"
#include "fxlab/metaheuristics.hpp"
#include "fxlab/rng.hpp"
#include "fxlab/rnn.hpp"

namespace fxlab {

namespace {

const std::set<std::string>& external_names() {
  static const std::set<std::string> names = {"svm", "svr", "pso-svm",
                                              "pso-svr", "ecm"};
  return names;
}

struct NnName {
  bool tuned = false;
  Algo algo = Algo::pso;
  CellKind cell = CellKind::lstm;
};

bool parse_nn_name(const std::string& name, NnName& out) {
  if (name == "lstm") {
    out = {false, Algo::pso, CellKind::lstm};
    return true;
  }
  if (name == "gru") {
    out = {false, Algo::pso, CellKind::gru};
    return true;
  }
  auto dash = name.find('-');
  if (dash == std::string::npos) return false;
  std::string prefix = name.substr(0, dash);
  std::string suffix = name.substr(dash + 1);
  if (suffix != "lstm" && suffix != "gru") return false;
  try {
    out.algo = algo_from_string(prefix);
  } catch (const Error&) {
    return false;
  }
  out.tuned = true;
  out.cell = suffix == "lstm" ? CellKind::lstm : CellKind::gru;
  return true;
}

std::uint64_t name_seed(std::uint64_t base, const std::string& name) {
  return mix_seed(base, fnv1a(name.data(), name.size()));
}

SegmentationSpec seg_spec(const ExperimentConfig& cfg) {
  SegmentationSpec s;
  s.train_start = Date::parse(cfg.segmentation.train_start);
  s.train_end = Date::parse(cfg.segmentation.train_end);
  s.context_days = cfg.segmentation.context_days;
  s.forecast_start = Date::parse(cfg.segmentation.forecast_start);
  s.forecast_end = Date::parse(cfg.segmentation.forecast_end);
  return s;
}

// Feature sub-frame (target guaranteed present) plus its row segments.
struct Prepared {
  SeriesFrame frame;
  Segments seg;
};

Prepared prepare(const ExperimentConfig& cfg, const FeatureBundle& bundle,
                 const std::vector<std::string>& columns) {
  std::vector<std::string> cols = columns;
  if (std::find(cols.begin(), cols.end(), bundle.target_column) == cols.end())
    cols.insert(cols.begin(), bundle.target_column);
  Prepared p;
  p.frame = bundle.frame.select_columns(cols);
  p.seg = segment(p.frame, seg_spec(cfg));
  if (p.seg.train.empty()) throw Error("models: empty training segment");
  if (p.seg.forecast.empty()) throw Error("models: empty forecast segment");
  return p;
}

// --- neural pipeline -------------------------------------------------

struct SplitSets {
  SupervisedSet train, valid, forecast;
};

SupervisedSet pick(const SupervisedSet& all, const std::vector<int>& idx) {
  SupervisedSet out;
  out.feature_names = all.feature_names;
  out.scaler = all.scaler;
  out.targets.resize(static_cast<Eigen::Index>(idx.size()));
  out.windows.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    int k = idx[i];
    out.windows.push_back(all.windows[static_cast<std::size_t>(k)]);
    out.targets(static_cast<Eigen::Index>(i)) =
        all.targets(static_cast<Eigen::Index>(k));
    out.target_rows.push_back(all.target_rows[static_cast<std::size_t>(k)]);
    out.target_dates.push_back(all.target_dates[static_cast<std::size_t>(k)]);
  }
  return out;
}

// Windows over the whole normalized frame, split by which segment their
// target row falls in. The validation share is held out rolling-origin
// style — the tail of each of five chronological chunks — so early
// stopping and tuner fitness see every regime in the training span.
SplitSets make_sets(const SeriesFrame& frame01, const std::string& target,
                    int timesteps, const Segments& seg, double valid_fraction) {
  SupervisedSet all = make_supervised_windows(frame01, target, timesteps, 1);
  std::vector<char> in_train(static_cast<std::size_t>(frame01.rows()), 0);
  std::vector<char> in_forecast(in_train.size(), 0);
  for (int r : seg.train) in_train[static_cast<std::size_t>(r)] = 1;
  for (int r : seg.forecast) in_forecast[static_cast<std::size_t>(r)] = 1;

  std::vector<int> train_idx, forecast_idx;
  for (std::size_t k = 0; k < all.size(); ++k) {
    auto row = static_cast<std::size_t>(all.target_rows[k]);
    if (in_train[row]) train_idx.push_back(static_cast<int>(k));
    if (in_forecast[row]) forecast_idx.push_back(static_cast<int>(k));
  }
  if (forecast_idx.empty())
    throw Error("models: no forecast window fits; timesteps too large?");

  auto n = static_cast<std::size_t>(train_idx.size());
  std::size_t n_valid = 0;
  if (valid_fraction > 0.0)
    n_valid = static_cast<std::size_t>(
        std::llround(valid_fraction * static_cast<double>(n)));
  if (n_valid >= n) n_valid = n > 1 ? n - 1 : 0;
  if (n - n_valid < 2)
    throw Error("models: training segment too short for the window length");

  const std::size_t folds = 5;
  std::vector<char> held(n, 0);
  for (std::size_t b = 0; b < folds; ++b) {
    const std::size_t lo = n * b / folds, hi = n * (b + 1) / folds;
    std::size_t share = n_valid * (b + 1) / folds - n_valid * b / folds;
    share = std::min(share, hi - lo);
    for (std::size_t k = hi - share; k < hi; ++k) held[k] = 1;
  }
  std::vector<int> tr, va;
  for (std::size_t k = 0; k < n; ++k)
    (held[k] ? va : tr).push_back(train_idx[k]);
  SplitSets out;
  out.train = pick(all, tr);
  out.valid = pick(all, va);
  out.forecast = pick(all, forecast_idx);
  return out;
}

TrainOptions train_options(const TrainingConfig& t) {
  TrainOptions o;
  o.adam_beta1 = t.adam_beta1;
  o.adam_beta2 = t.adam_beta2;
  o.adam_eps = t.adam_eps;
  o.clip_norm = t.clip_norm;
  o.patience = t.patience;
  return o;
}

Eigen::VectorXd denorm_predictions(const Eigen::VectorXd& y01,
                                   const MinMaxScaler& scaler, int target_col) {
  Eigen::VectorXd out(y01.size());
  for (Eigen::Index i = 0; i < y01.size(); ++i)
    out(i) = scaler.invert_value(target_col, y01(i));
  return out;
}

TrainArtifacts train_default_impl(const std::string& name,
                                  const ExperimentConfig& cfg,
                                  const Prepared& prep, CellKind cell) {
  auto [frame01, scaler] = minmax_normalize(prep.frame, prep.seg.train);
  SplitSets sets = make_sets(frame01, cfg.data.target_column,
                             cfg.training.timesteps, prep.seg,
                             cfg.training.valid_fraction);
  RnnSpec spec;
  spec.cell = cell;
  spec.input_dim = static_cast<int>(frame01.cols());
  spec.hidden_units = cfg.training.hidden_units;
  spec.timesteps = cfg.training.timesteps;
  spec.learning_rate = cfg.training.learning_rate;
  spec.epochs = cfg.training.epochs;
  spec.batch_size = cfg.training.batch_size;
  spec.seed = name_seed(cfg.seed, name);

  TrainArtifacts a;
  a.model = train_rnn(spec, sets.train, sets.valid, train_options(cfg.training));
  int tcol = frame01.column_index(cfg.data.target_column);
  a.predictions = denorm_predictions(
      rnn_forward_set(a.model.params, sets.forecast.windows), scaler, tcol);
  a.dates = sets.forecast.target_dates;
  return a;
}

ModelRun run_rnn_default(const std::string& name, const ExperimentConfig& cfg,
                         const Prepared& prep, CellKind cell) {
  TrainArtifacts a = train_default_impl(name, cfg, prep, cell);
  ModelRun run;
  run.name = name;
  run.predictions = a.predictions;
  run.dates = a.dates;
  run.hyperparameters = {
      {"hidden_units", static_cast<double>(a.model.spec.hidden_units)},
      {"timesteps", static_cast<double>(a.model.spec.timesteps)},
      {"learning_rate", a.model.spec.learning_rate},
      {"batch_size", static_cast<double>(a.model.spec.batch_size)}};
  return run;
}

ModelRun run_rnn_tuned(const std::string& name, const ExperimentConfig& cfg,
                       const Prepared& prep, CellKind cell, Algo algo) {
  const OptimizerConfig& oc = cfg.optimizer;
  auto [frame01, scaler] = minmax_normalize(prep.frame, prep.seg.train);
  const int input_dim = static_cast<int>(frame01.cols());
  const TrainOptions topt = train_options(cfg.training);

  SearchSpace space;
  space.dims = {
      {"hidden_units", DimKind::integer, static_cast<double>(oc.hidden_min),
       static_cast<double>(oc.hidden_max)},
      {"timesteps", DimKind::integer, static_cast<double>(oc.timesteps_min),
       static_cast<double>(oc.timesteps_max)},
      {"learning_rate", DimKind::log_continuous, oc.lr_min, oc.lr_max},
      {"log2_batch", DimKind::integer, static_cast<double>(oc.log2_batch_min),
       static_cast<double>(oc.log2_batch_max)}};
  space.validate();

  // Window tensors depend only on the timesteps dimension; cache them.
  std::unordered_map<int, SplitSets> sets_by_t;
  auto sets_for = [&](int timesteps) -> const SplitSets& {
    auto it = sets_by_t.find(timesteps);
    if (it == sets_by_t.end())
      it = sets_by_t
               .emplace(timesteps,
                        make_sets(frame01, cfg.data.target_column, timesteps,
                                  prep.seg, cfg.training.valid_fraction))
               .first;
    return it->second;
  };

  auto spec_for = [&](const std::vector<double>& point, int epochs,
                      std::uint64_t seed) {
    RnnSpec s;
    s.cell = cell;
    s.input_dim = input_dim;
    s.hidden_units = static_cast<int>(std::llround(point[0]));
    s.timesteps = static_cast<int>(std::llround(point[1]));
    s.learning_rate = point[2];
    s.epochs = epochs;
    s.batch_size = 1 << static_cast<int>(std::llround(point[3]));
    s.seed = seed;
    return s;
  };

  Objective objective = [&](const std::vector<double>& point,
                            std::uint64_t eval_seed) {
    RnnSpec s = spec_for(point, oc.tune_epochs, eval_seed);
    const SplitSets& sets = sets_for(s.timesteps);
    TrainedModel tm = train_rnn(s, sets.train, sets.valid, topt);
    const SupervisedSet& score_on =
        sets.valid.size() > 0 ? sets.valid : sets.train;
    return rmse_on(tm.params, score_on);
  };

  OptimizeOptions opts = oc.variant_options;
  opts.population = oc.population;
  opts.iterations = oc.iterations;
  opts.w = oc.w;
  opts.c1 = oc.c1;
  opts.c2 = oc.c2;

  std::uint64_t run_seed = name_seed(cfg.seed, name);
  OptimizeResult res = optimize(objective, space, algo, opts, run_seed);

  RnnSpec best = spec_for(res.best_point, cfg.training.epochs,
                          mix_seed(run_seed, 0xF17A1ull));
  const SplitSets& sets = sets_for(best.timesteps);
  TrainedModel tm = train_rnn(best, sets.train, sets.valid, topt);

  ModelRun run;
  run.name = name;
  int tcol = frame01.column_index(cfg.data.target_column);
  run.predictions = denorm_predictions(
      rnn_forward_set(tm.params, sets.forecast.windows), scaler, tcol);
  run.dates = sets.forecast.target_dates;
  run.convergence = res.history;
  run.search_log_csv = res.run_log_csv;
  run.hyperparameters = {
      {"hidden_units", static_cast<double>(best.hidden_units)},
      {"timesteps", static_cast<double>(best.timesteps)},
      {"learning_rate", best.learning_rate},
      {"batch_size", static_cast<double>(best.batch_size)}};
  if (res.objective_errors > 0)
    run.detail = std::to_string(res.objective_errors) +
                 " objective evaluation(s) failed during the search";
  return run;
}

// --- classical baselines ----------------------------------------------

std::vector<int> fit_rows(const Segments& seg) {
  std::vector<int> rows = seg.train;
  rows.insert(rows.end(), seg.context.begin(), seg.context.end());
  return rows;
}

// Joint AIC/BIC over all columns, common estimation sample across lags.
int select_var_lag(const Eigen::MatrixXd& data, int max_lag,
                   LagCriterion criterion) {
  const auto t_all = data.rows();
  const auto m = data.cols();
  int pmax = std::max(1, max_lag);
  while (pmax > 1 && t_all - pmax < m * pmax + 3) --pmax;

  double best = std::numeric_limits<double>::infinity();
  int best_p = 0;
  for (int p = 1; p <= pmax; ++p) {
    Eigen::MatrixXd slice = data.bottomRows(t_all - (pmax - p));
    double value;
    try {
      VarModel model = fit_var(slice, p);
      double det = model.resid_cov.partialPivLu().determinant();
      if (!(det > 0.0) || !std::isfinite(det)) continue;
      double t_eff = static_cast<double>(slice.rows() - p);
      double k = static_cast<double>(m) * (static_cast<double>(m) * p + 1.0);
      value = std::log(det) + (criterion == LagCriterion::aic
                                   ? 2.0 * k / t_eff
                                   : k * std::log(t_eff) / t_eff);
    } catch (const Error&) {
      continue;
    }
    if (value < best) {
      best = value;
      best_p = p;
    }
  }
  if (best_p == 0) throw Error("var: no admissible lag order");
  return best_p;
}

ModelRun run_var_model(const std::string& name, const ExperimentConfig& cfg,
                       const Prepared& prep) {
  const Eigen::MatrixXd& all = prep.frame.values();
  Eigen::MatrixXd fit = prep.frame.take_rows(fit_rows(prep.seg)).values();
  int p = select_var_lag(fit, cfg.baselines.var_max_lag,
                         cfg.baselines.lag_criterion);
  VarModel model = fit_var(fit, p);

  int tcol = prep.frame.column_index(cfg.data.target_column);
  ModelRun run;
  run.name = name;
  run.predictions.resize(static_cast<Eigen::Index>(prep.seg.forecast.size()));
  Eigen::Index i = 0;
  for (int r : prep.seg.forecast) {
    if (r < p) throw Error("var: forecast row precedes available history");
    Eigen::MatrixXd step = forecast_var(model, all.topRows(r), 1);
    run.predictions(i++) = step(0, tcol);
    run.dates.push_back(prep.frame.dates()[static_cast<std::size_t>(r)]);
  }
  run.hyperparameters = {{"lag", static_cast<double>(p)}};
  return run;
}

ModelRun run_linear_model(const std::string& name, const ExperimentConfig& cfg,
                          const Prepared& prep) {
  const int lags = std::max(1, cfg.baselines.linear_lags);
  int tcol = prep.frame.column_index(cfg.data.target_column);
  const Eigen::MatrixXd& all = prep.frame.values();
  const auto m = all.cols();
  const auto n_features = static_cast<Eigen::Index>(lags) + (m - 1);

  // Row r regresses target_r on target lags 1..L plus every other
  // column's value at r-1 (true values: honest one-step design).
  auto design_row = [&](int r) {
    Eigen::RowVectorXd x(n_features);
    for (int l = 1; l <= lags; ++l) x(l - 1) = all(r - l, tcol);
    Eigen::Index j = lags;
    for (Eigen::Index c = 0; c < m; ++c)
      if (c != tcol) x(j++) = all(r - 1, c);
    return x;
  };

  std::vector<int> train_rows;
  for (int r : prep.seg.train)
    if (r >= lags) train_rows.push_back(r);
  if (train_rows.size() < static_cast<std::size_t>(n_features) + 2)
    throw Error("linear: training segment too short for the lag design");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(train_rows.size()), n_features);
  Eigen::VectorXd y(static_cast<Eigen::Index>(train_rows.size()));
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = design_row(train_rows[i]);
    y(static_cast<Eigen::Index>(i)) = all(train_rows[i], tcol);
  }
  LinearModel model = fit_linear(x, y);

  ModelRun run;
  run.name = name;
  run.predictions.resize(static_cast<Eigen::Index>(prep.seg.forecast.size()));
  Eigen::Index i = 0;
  for (int r : prep.seg.forecast) {
    if (r < lags) throw Error("linear: forecast row precedes available history");
    Eigen::MatrixXd one = design_row(r);
    run.predictions(i++) = predict_linear(model, one)(0);
    run.dates.push_back(prep.frame.dates()[static_cast<std::size_t>(r)]);
  }
  run.hyperparameters = {{"lags", static_cast<double>(lags)}};
  if (model.ridge_fallback) run.detail = "rank-deficient design; ridge fallback";
  return run;
}

ModelRun run_ar_model(const std::string& name, const ExperimentConfig& cfg,
                      const Prepared& prep) {
  Eigen::VectorXd target = prep.frame.column(cfg.data.target_column);
  std::vector<int> rows = fit_rows(prep.seg);
  Eigen::VectorXd y_fit(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    y_fit(static_cast<Eigen::Index>(i)) = target(rows[i]);
  ArModel model = fit_ar(y_fit, cfg.baselines.ar_p, cfg.baselines.ar_d);

  ModelRun run;
  run.name = name;
  run.predictions.resize(static_cast<Eigen::Index>(prep.seg.forecast.size()));
  Eigen::Index i = 0;
  for (int r : prep.seg.forecast) {
    run.predictions(i++) = forecast_ar(model, target.head(r), 1)(0);
    run.dates.push_back(prep.frame.dates()[static_cast<std::size_t>(r)]);
  }
  run.hyperparameters = {{"p", static_cast<double>(model.p)},
                         {"d", static_cast<double>(model.d)}};
  return run;
}

ModelRun run_garch_model(const std::string& name, const ExperimentConfig& cfg,
                         const Prepared& prep) {
  Eigen::VectorXd price = prep.frame.column(cfg.data.target_column);
  // return at index t-1 describes the move into row t
  auto returns_up_to = [&](int row_end) {
    Eigen::VectorXd r(row_end - 1);
    for (int t = 1; t < row_end; ++t) r(t - 1) = price(t) / price(t - 1) - 1.0;
    return r;
  };
  std::vector<int> rows = fit_rows(prep.seg);
  Eigen::VectorXd r_fit(static_cast<Eigen::Index>(rows.size()) - 1);
  for (std::size_t i = 1; i < rows.size(); ++i)
    r_fit(static_cast<Eigen::Index>(i - 1)) =
        price(rows[i]) / price(rows[i - 1]) - 1.0;
  Garch11 model = fit_garch11(r_fit);

  ModelRun run;
  run.name = name;
  run.predictions.resize(static_cast<Eigen::Index>(prep.seg.forecast.size()));
  Eigen::Index i = 0;
  for (int r : prep.seg.forecast) {
    if (r < 2) throw Error("garch: forecast row precedes available history");
    GarchForecast f = forecast_garch(model, returns_up_to(r), 1);
    run.predictions(i++) = price(r - 1) * (1.0 + f.mean(0));
    run.dates.push_back(prep.frame.dates()[static_cast<std::size_t>(r)]);
  }
  run.hyperparameters = {{"omega", model.omega},
                         {"alpha", model.alpha},
                         {"beta", model.beta},
                         {"mean_phi", model.mean_phi}};
  return run;
}

}  // namespace

bool model_is_external(const std::string& name) {
  return external_names().count(name) > 0;
}

bool model_uses_features(const std::string& name) {
  if (name == "ar" || name == "garch") return false;
  return model_is_known(name) && !model_is_external(name);
}

bool model_is_known(const std::string& name) {
  if (model_is_external(name)) return true;
  if (name == "var" || name == "linear" || name == "ar" || name == "garch")
    return true;
  NnName nn;
  return parse_nn_name(name, nn);
}

ModelRun run_model(const std::string& name, const ExperimentConfig& cfg,
                   const FeatureBundle& bundle,
                   const std::vector<std::string>& columns) {
  if (!model_is_known(name)) throw Error("unknown model '" + name + "'");
  if (model_is_external(name)) {
    ModelRun run;
    run.name = name;
    run.status = "external";
    run.detail = "reference model from the comparison literature; "
                 "not implemented here";
    return run;
  }

  Prepared prep = prepare(cfg, bundle, columns);
  NnName nn;
  if (parse_nn_name(name, nn)) {
    if (nn.tuned) return run_rnn_tuned(name, cfg, prep, nn.cell, nn.algo);
    return run_rnn_default(name, cfg, prep, nn.cell);
  }
  if (name == "var") return run_var_model(name, cfg, prep);
  if (name == "linear") return run_linear_model(name, cfg, prep);
  if (name == "ar") return run_ar_model(name, cfg, prep);
  if (name == "garch") return run_garch_model(name, cfg, prep);
  throw Error("unknown model '" + name + "'");
}

TrainArtifacts train_default_network(const ExperimentConfig& cfg,
                                     const FeatureBundle& bundle,
                                     const std::vector<std::string>& columns) {
  Prepared prep = prepare(cfg, bundle, columns);
  return train_default_impl(to_string(cfg.training.cell), cfg, prep,
                            cfg.training.cell);
}

ForecastFrame forecast_actuals(const ExperimentConfig& cfg,
                               const FeatureBundle& bundle) {
  Segments seg = segment(bundle.frame, seg_spec(cfg));
  if (seg.forecast.empty()) throw Error("models: empty forecast segment");
  ForecastFrame out;
  Eigen::VectorXd target = bundle.frame.column(bundle.target_column);
  out.actual.resize(static_cast<Eigen::Index>(seg.forecast.size()));
  Eigen::Index i = 0;
  for (int r : seg.forecast) {
    out.actual(i++) = target(r);
    out.dates.push_back(bundle.frame.dates()[static_cast<std::size_t>(r)]);
  }
  return out;
}

}  // namespace fxlab
