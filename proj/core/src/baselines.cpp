#include "fxlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fxlab/error.hpp"
#include "fxlab/io.hpp"
#include "fxlab/numeric.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

std::string to_string(LagCriterion c) { return c == LagCriterion::aic ? "AIC" : "BIC"; }

LagCriterion lag_criterion_from_string(const std::string& s) {
  if (s == "aic" || s == "AIC") return LagCriterion::aic;
  if (s == "bic" || s == "BIC") return LagCriterion::bic;
  throw Error("unknown lag criterion '" + s + "' (expected aic or bic)");
}

// Lagged design matrix over rows start..T-1: [1, y_{t-1}, ..., y_{t-p}].
static Eigen::MatrixXd lag_design(const Eigen::MatrixXd& data, int p, int start) {
  const auto t_eff = data.rows() - start;
  const auto m = data.cols();
  Eigen::MatrixXd z(t_eff, 1 + m * p);
  z.col(0).setOnes();
  for (Eigen::Index t = 0; t < t_eff; ++t)
    for (int l = 1; l <= p; ++l)
      z.block(t, 1 + m * (l - 1), 1, m) = data.row(start + t - l);
  return z;
}

static Eigen::MatrixXd solve_ls(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y,
                                const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() < z.cols())
    throw Error(std::string(what) + ": singular regressor matrix");
  return qr.solve(y);
}

VarModel fit_var(const Eigen::MatrixXd& data, int p) {
  if (p < 1) throw Error("fit_var: p must be >= 1");
  const auto m = data.cols();
  if (data.rows() <= p + m * p + 1)
    throw Error("fit_var: series too short for lag " + std::to_string(p));
  Eigen::MatrixXd z = lag_design(data, p, p);
  Eigen::MatrixXd y = data.bottomRows(data.rows() - p);
  // rank-deficient designs (constant series and the like) take the same
  // tiny-ridge fallback as fit_linear; fitted values are still exact there
  Eigen::MatrixXd b;  // (1+mp) x m
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() == z.cols()) {
    b = qr.solve(y);
  } else {
    Eigen::MatrixXd gram = z.transpose() * z;
    gram.diagonal().array() += 1e-8;
    b = gram.ldlt().solve(z.transpose() * y);
  }
  VarModel model;
  model.p = p;
  model.intercept = b.row(0).transpose();
  model.coeffs = b.bottomRows(b.rows() - 1).transpose();  // m x (mp)
  Eigen::MatrixXd resid = y - z * b;
  model.resid_cov = resid.transpose() * resid / static_cast<double>(y.rows());
  return model;
}

Eigen::MatrixXd forecast_var(const VarModel& model, const Eigen::MatrixXd& history,
                             int steps) {
  if (steps < 1) throw Error("forecast_var: steps must be >= 1");
  const auto m = model.intercept.size();
  if (history.cols() != m) throw Error("forecast_var: wrong variable count");
  if (history.rows() < model.p)
    throw Error("forecast_var: history shorter than lag order");
  // rolling buffer of the last p observations, newest first
  std::vector<Eigen::VectorXd> last;
  for (int l = 1; l <= model.p; ++l)
    last.push_back(history.row(history.rows() - l).transpose());
  Eigen::MatrixXd out(steps, m);
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd next = model.intercept;
    for (int l = 0; l < model.p; ++l)
      next += model.coeffs.block(0, m * l, m, m) * last[static_cast<std::size_t>(l)];
    out.row(s) = next.transpose();
    last.insert(last.begin(), next);
    last.pop_back();
  }
  return out;
}

static double criterion_value(const Eigen::MatrixXd& sigma, double k, double t,
                              LagCriterion criterion) {
  const double det = sigma.determinant();
  if (!(det > 0)) throw Error("select_lag: residual covariance not positive definite");
  const double penalty =
      criterion == LagCriterion::aic ? 2.0 * k / t : k * std::log(t) / t;
  return std::log(det) + penalty;
}

LagSelection select_lag(const Eigen::VectorXd& target,
                        const Eigen::VectorXd& indicator, int max_lag,
                        LagCriterion criterion) {
  if (max_lag < 1) throw Error("select_lag: max_lag must be >= 1");
  if (target.size() != indicator.size())
    throw Error("select_lag: series lengths differ");
  const auto n = target.size();
  const int m = 2;
  if (n <= max_lag * m + 10)
    throw Error("select_lag: series too short for max_lag " + std::to_string(max_lag));
  Eigen::MatrixXd data(n, 2);
  data.col(0) = target;
  data.col(1) = indicator;

  // Common estimation sample across candidate lags keeps criteria comparable.
  const auto t_eff = static_cast<double>(n - max_lag);
  Eigen::MatrixXd y = data.bottomRows(n - max_lag);
  LagSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= max_lag; ++p) {
    Eigen::MatrixXd z = lag_design(data, p, max_lag);
    Eigen::MatrixXd b = solve_ls(z, y, "select_lag");
    Eigen::MatrixXd resid = y - z * b;
    Eigen::MatrixXd sigma = resid.transpose() * resid / t_eff;
    const double k = m * (m * p + 1);
    const double value = criterion_value(sigma, k, t_eff, criterion);
    sel.criterion.push_back(value);
    if (value < best) {  // strict: ties keep the smaller lag
      best = value;
      sel.p_best = p;
    }
  }
  return sel;
}

std::string lag_selection_report(const SeriesFrame& frame,
                                 const std::string& target_column, int max_lag,
                                 LagCriterion criterion) {
  const Eigen::VectorXd target = frame.column(target_column);
  CsvBuilder csv;
  csv.row({"variable", "lag", to_string(criterion)});
  for (const auto& name : frame.names()) {
    if (name == target_column) continue;
    LagSelection sel = select_lag(target, frame.column(name), max_lag, criterion);
    csv.row({name, std::to_string(sel.p_best),
             fmt_g(sel.criterion[static_cast<std::size_t>(sel.p_best - 1)])});
  }
  return csv.body();
}

LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw Error("fit_linear: row count mismatch");
  if (x.rows() == 0) throw Error("fit_linear: empty design");
  Eigen::MatrixXd z(x.rows(), x.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(x.cols()) = x;
  LinearModel model;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::VectorXd b;
  if (qr.rank() == z.cols()) {
    b = qr.solve(y);
  } else {
    const double lambda = 1e-8;
    Eigen::MatrixXd gram = z.transpose() * z;
    gram.diagonal().array() += lambda;
    b = gram.ldlt().solve(z.transpose() * y);
    model.ridge_fallback = true;
  }
  model.intercept = b(0);
  model.coef = b.tail(x.cols());
  return model;
}

Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.coef.size())
    throw Error("predict_linear: feature count mismatch");
  return (x * model.coef).array() + model.intercept;
}

static Eigen::VectorXd difference(const Eigen::VectorXd& s) {
  return s.tail(s.size() - 1) - s.head(s.size() - 1);
}

ArModel fit_ar(const Eigen::VectorXd& series, int p, int d) {
  if (p < 1) throw Error("fit_ar: p must be >= 1");
  if (d != 0 && d != 1) throw Error("fit_ar: d must be 0 or 1");
  Eigen::VectorXd w = d == 1 ? difference(series) : series;
  if (w.size() < p + 2)
    throw Error("fit_ar: series too short for p=" + std::to_string(p) +
                ", d=" + std::to_string(d));
  const auto t_eff = w.size() - p;
  Eigen::MatrixXd x(t_eff, p);
  for (Eigen::Index t = 0; t < t_eff; ++t)
    for (int l = 1; l <= p; ++l) x(t, l - 1) = w(p + t - l);
  LinearModel ols = fit_linear(x, w.tail(t_eff));
  ArModel model;
  model.p = p;
  model.d = d;
  model.coef = ols.coef;
  model.intercept = ols.intercept;
  return model;
}

Eigen::VectorXd forecast_ar(const ArModel& model, const Eigen::VectorXd& history,
                            int steps) {
  if (steps < 1) throw Error("forecast_ar: steps must be >= 1");
  const Eigen::Index need = model.p + model.d;
  if (history.size() < need) throw Error("forecast_ar: history shorter than p+d");
  Eigen::VectorXd w = model.d == 1 ? difference(history) : history;
  std::vector<double> buf(w.data() + w.size() - model.p, w.data() + w.size());
  Eigen::VectorXd out(steps);
  double level = history(history.size() - 1);
  for (int s = 0; s < steps; ++s) {
    double next = model.intercept;
    for (int l = 1; l <= model.p; ++l)
      next += model.coef(l - 1) * buf[buf.size() - static_cast<std::size_t>(l)];
    buf.erase(buf.begin());
    buf.push_back(next);
    if (model.d == 1) {
      level += next;
      out(s) = level;
    } else {
      out(s) = next;
    }
  }
  return out;
}

// Negative Gaussian log-likelihood of AR(1)+GARCH(1,1) with boundary
// penalties; parameters arrive rescaled so Nelder-Mead sees O(1) moves.
namespace {
struct GarchScale {
  double r_sd;
  double r_var;
};

double garch_negll(const Eigen::VectorXd& s, const Eigen::VectorXd& r,
                   const GarchScale& sc) {
  const double c = s(0) * sc.r_sd;
  const double phi = s(1);
  const double omega = s(2) * sc.r_var;
  const double alpha = s(3);
  const double beta = s(4);
  double penalty = 0;
  auto pen = [&](double violation) {
    if (violation > 0) penalty += 1e6 * (1.0 + violation);
  };
  pen(1e-12 - omega);
  pen(-alpha);
  pen(-beta);
  pen(alpha + beta - 0.999);
  pen(std::abs(phi) - 0.999);
  if (penalty > 0) return penalty;

  const auto n = r.size();
  Eigen::VectorXd eps(n - 1);
  for (Eigen::Index t = 1; t < n; ++t) eps(t - 1) = r(t) - c - phi * r(t - 1);
  const double eps_var = eps.squaredNorm() / static_cast<double>(eps.size());
  double h = std::max(eps_var, 1e-12);
  double ll = 0;
  for (Eigen::Index t = 0; t < eps.size(); ++t) {
    if (t > 0) h = omega + alpha * eps(t - 1) * eps(t - 1) + beta * h;
    h = std::max(h, 1e-18);
    ll += -0.5 * (std::log(2 * M_PI) + std::log(h) + eps(t) * eps(t) / h);
  }
  // conditionally homoskedastic data leaves (alpha, beta) unidentified along
  // a likelihood ridge; a minuscule norm penalty picks the small-persistence
  // end without moving identified fits (likelihood scale is O(n))
  return -ll + 1e-3 * (alpha * alpha + beta * beta);
}
}  // namespace

Garch11 fit_garch11(const Eigen::VectorXd& returns, int max_evaluations) {
  if (returns.size() < 100) throw Error("fit_garch11: need at least 100 returns");
  const double mean = returns.mean();
  const double var =
      (returns.array() - mean).square().sum() / static_cast<double>(returns.size());
  // max==min catches constants whose mean rounds to a nonzero variance
  if (!(var > 0) || returns.maxCoeff() == returns.minCoeff())
    throw Error("fit_garch11: zero variance in returns");
  const GarchScale sc{std::sqrt(var), var};

  auto f = [&](const Eigen::VectorXd& s) { return garch_negll(s, returns, sc); };
  Eigen::VectorXd step = Eigen::VectorXd::Constant(5, 0.05);
  // two deterministic starts: the likelihood of conditionally homoskedastic
  // data is flat along a (beta, omega) ridge, so a single high-persistence
  // start can park there
  Eigen::VectorXd s_hi(5), s_lo(5);
  s_hi << mean / sc.r_sd, 0.0, 0.05, 0.05, 0.9;  // omega scaled by var
  s_lo << mean / sc.r_sd, 0.0, 0.9, 0.05, 0.05;
  NelderMeadResult nm = nelder_mead(f, s_hi, step, max_evaluations / 2, 1e-9);
  NelderMeadResult lo = nelder_mead(f, s_lo, step, max_evaluations / 2, 1e-9);
  if (lo.fx < nm.fx) nm = lo;

  Garch11 model;
  model.mean_c = nm.x(0) * sc.r_sd;
  model.mean_phi = nm.x(1);
  model.omega = nm.x(2) * sc.r_var;
  model.alpha = nm.x(3);
  model.beta = nm.x(4);
  model.log_likelihood = -nm.fx;
  model.evaluations = nm.evaluations;
  if (!nm.converged)
    throw Error("fit_garch11: no convergence after " +
                std::to_string(nm.evaluations) + " evaluations; best found omega=" +
                fmt_g(model.omega) + " alpha=" + fmt_g(model.alpha) +
                " beta=" + fmt_g(model.beta));
  if (!(model.omega > 0) || model.alpha < 0 || model.beta < 0 ||
      model.alpha + model.beta >= 1)
    throw Error("fit_garch11: fitted parameters violate stationarity");
  return model;
}

GarchForecast forecast_garch(const Garch11& model, const Eigen::VectorXd& history,
                             int steps) {
  if (steps < 1) throw Error("forecast_garch: steps must be >= 1");
  if (history.size() < 2) throw Error("forecast_garch: history too short");
  const auto n = history.size();
  Eigen::VectorXd eps(n - 1);
  for (Eigen::Index t = 1; t < n; ++t)
    eps(t - 1) = history(t) - model.mean_c - model.mean_phi * history(t - 1);
  double h = eps.squaredNorm() / static_cast<double>(eps.size());
  for (Eigen::Index t = 1; t < eps.size(); ++t)
    h = model.omega + model.alpha * eps(t - 1) * eps(t - 1) + model.beta * h;

  GarchForecast out;
  out.mean.resize(steps);
  out.variance.resize(steps);
  double last_r = history(n - 1);
  double last_eps2 = eps(eps.size() - 1) * eps(eps.size() - 1);
  for (int s = 0; s < steps; ++s) {
    last_r = model.mean_c + model.mean_phi * last_r;
    out.mean(s) = last_r;
    h = model.omega + model.alpha * last_eps2 + model.beta * h;
    out.variance(s) = h;
    last_eps2 = h;  // expected squared innovation beyond one step
  }
  return out;
}

// --- regression forest ---------------------------------------------------

namespace {
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  double value = 0;
  int left = -1;
  int right = -1;
};

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  int max_depth;
  std::vector<TreeNode> nodes;
  Eigen::VectorXd* importance;

  static double sum_sq_dev(const Eigen::VectorXd& y, const std::vector<int>& rows) {
    double s = 0, ss = 0;
    for (int r : rows) {
      s += y(r);
      ss += y(r) * y(r);
    }
    const double n = static_cast<double>(rows.size());
    return ss - s * s / n;
  }

  int build(std::vector<int>& rows, int depth) {
    TreeNode node;
    double sum = 0;
    for (int r : rows) sum += y(r);
    node.value = sum / static_cast<double>(rows.size());
    const double sse = sum_sq_dev(y, rows);
    if (depth >= max_depth || rows.size() < 2 || sse <= 1e-12) {
      nodes.push_back(node);
      return static_cast<int>(nodes.size()) - 1;
    }

    int best_feature = -1;
    double best_threshold = 0, best_gain = 0;
    std::vector<std::pair<double, int>> order(rows.size());
    for (int j = 0; j < x.cols(); ++j) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        order[i] = {x(rows[i], j), rows[i]};
      std::sort(order.begin(), order.end());
      // prefix scan over sorted rows finds the best split in one pass
      double left_s = 0, left_ss = 0;
      double total_s = 0, total_ss = 0;
      for (const auto& [xv, r] : order) {
        total_s += y(r);
        total_ss += y(r) * y(r);
      }
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const double yv = y(order[i].second);
        left_s += yv;
        left_ss += yv * yv;
        if (order[i].first == order[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(order.size() - i - 1);
        const double sse_l = left_ss - left_s * left_s / nl;
        const double sse_r =
            (total_ss - left_ss) - (total_s - left_s) * (total_s - left_s) / nr;
        const double gain = sse - sse_l - sse_r;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = j;
          best_threshold = 0.5 * (order[i].first + order[i + 1].first);
        }
      }
    }
    if (best_feature < 0) {
      nodes.push_back(node);
      return static_cast<int>(nodes.size()) - 1;
    }

    (*importance)(best_feature) += best_gain;
    std::vector<int> left_rows, right_rows;
    for (int r : rows)
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    node.feature = best_feature;
    node.threshold = best_threshold;
    nodes.push_back(node);
    const int at = static_cast<int>(nodes.size()) - 1;
    const int l = build(left_rows, depth + 1);
    const int r = build(right_rows, depth + 1);
    nodes[static_cast<std::size_t>(at)].left = l;
    nodes[static_cast<std::size_t>(at)].right = r;
    return at;
  }
};
}  // namespace

Eigen::VectorXd forest_importance(const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, int n_trees,
                                  int max_depth, std::uint64_t seed) {
  if (n_trees < 1) throw Error("forest_importance: n_trees must be >= 1");
  if (max_depth < 1) throw Error("forest_importance: max_depth must be >= 1");
  if (x.rows() != y.size()) throw Error("forest_importance: row count mismatch");
  if (x.rows() < 2) throw Error("forest_importance: need at least 2 rows");

  Eigen::VectorXd importance = Eigen::VectorXd::Zero(x.cols());
  const auto n = x.rows();
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<int>(rng.uniform_int(0, n - 1));
    TreeBuilder builder{x, y, max_depth, {}, &importance};
    builder.build(rows, 0);
  }
  const double total = importance.sum();
  if (total <= 0)
    return Eigen::VectorXd::Constant(x.cols(), 1.0 / static_cast<double>(x.cols()));
  return importance / total;
}

std::vector<std::string> rfe(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names, int n_keep,
                             int n_trees, int max_depth, std::uint64_t seed,
                             int step) {
  if (names.size() != static_cast<std::size_t>(x.cols()))
    throw Error("rfe: names do not match columns");
  if (n_keep < 1 || n_keep > x.cols())
    throw Error("rfe: n_keep must be in [1, feature count]");
  if (step < 1) throw Error("rfe: step must be >= 1");

  std::vector<int> active(static_cast<std::size_t>(x.cols()));
  std::iota(active.begin(), active.end(), 0);
  while (static_cast<int>(active.size()) > n_keep) {
    Eigen::MatrixXd sub(x.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j)
      sub.col(static_cast<Eigen::Index>(j)) = x.col(active[j]);
    Eigen::VectorXd imp = forest_importance(sub, y, n_trees, max_depth, seed);

    const int drop = std::min<int>(step, static_cast<int>(active.size()) - n_keep);
    std::vector<std::size_t> order(active.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (imp(static_cast<Eigen::Index>(a)) != imp(static_cast<Eigen::Index>(b)))
        return imp(static_cast<Eigen::Index>(a)) < imp(static_cast<Eigen::Index>(b));
      // drop the larger name first so column order cannot matter
      return names[static_cast<std::size_t>(active[a])] >
             names[static_cast<std::size_t>(active[b])];
    });
    std::vector<bool> dead(active.size(), false);
    for (int k = 0; k < drop; ++k) dead[order[static_cast<std::size_t>(k)]] = true;
    std::vector<int> next;
    for (std::size_t j = 0; j < active.size(); ++j)
      if (!dead[j]) next.push_back(active[j]);
    active = std::move(next);
  }
  std::vector<std::string> kept;
  for (int j : active) kept.push_back(names[static_cast<std::size_t>(j)]);
  return kept;
}

}  // namespace fxlab
