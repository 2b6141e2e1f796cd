#include <doctest.h>

#include <cmath>
#include <vector>

#include "fxlab/error.hpp"
#include "fxlab/eval.hpp"
#include "fxlab/rng.hpp"

using namespace fxlab;

namespace {

// Brute-force re-implementations used as oracles: plain loops, no shared
// code with the library.
struct BruteRegression {
  double mae, mse, rmse;
  bool has_r2;
  double r2;
};

BruteRegression brute_regression(const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& p) {
  double abs_sum = 0, sq_sum = 0, mean = 0;
  const auto n = a.size();
  for (Eigen::Index i = 0; i < n; ++i) mean += a(i);
  mean /= double(n);
  double ss_tot = 0, ss_res = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = a(i) - p(i);
    abs_sum += std::abs(d);
    sq_sum += d * d;
    ss_res += d * d;
    ss_tot += (a(i) - mean) * (a(i) - mean);
  }
  BruteRegression b{};
  b.mae = abs_sum / double(n);
  b.mse = sq_sum / double(n);
  b.rmse = std::sqrt(b.mse);
  b.has_r2 = ss_tot > 0;
  if (b.has_r2) b.r2 = 1.0 - ss_res / ss_tot;
  return b;
}

struct BruteClass {
  double precision, recall, f1;
};

BruteClass brute_class(const std::vector<int>& a, const std::vector<int>& p,
                       int positive) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (p[i] == positive && a[i] == positive) ++tp;
    if (p[i] == positive && a[i] != positive) ++fp;
    if (p[i] != positive && a[i] == positive) ++fn;
  }
  BruteClass b{};
  b.precision = (tp + fp) ? double(tp) / (tp + fp) : 0.0;
  b.recall = (tp + fn) ? double(tp) / (tp + fn) : 0.0;
  b.f1 = (b.precision + b.recall) > 0
             ? 2 * b.precision * b.recall / (b.precision + b.recall)
             : 0.0;
  return b;
}

}  // namespace

TEST_CASE("regression metrics: worked examples") {
  Eigen::VectorXd a(2), p(2);
  a << 0, 0;
  p << 1, -1;
  RegressionMetrics m = regression_metrics(a, p);
  CHECK(m.mae == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.mse == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.rmse == doctest::Approx(1.0).epsilon(1e-15));

  Eigen::VectorXd a2(3), p2(3);
  a2 << 1, 2, 3;
  p2 << 2, 2, 2;
  RegressionMetrics m2 = regression_metrics(a2, p2);
  CHECK(m2.mae == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(m2.rmse == doctest::Approx(std::sqrt(2.0 / 3)).epsilon(1e-14));

  // perfect prediction
  RegressionMetrics m3 = regression_metrics(a2, a2);
  CHECK(m3.mae == 0.0);
  CHECK(m3.rmse == 0.0);
  REQUIRE(m3.r2.has_value());
  CHECK(*m3.r2 == doctest::Approx(1.0));
}

TEST_CASE("regression metrics: errors and edge cases") {
  Eigen::VectorXd a(3), p(2);
  a.setZero();
  p.setZero();
  CHECK_THROWS_AS(regression_metrics(a, p), Error);

  Eigen::VectorXd c(4), q(4);
  c.setConstant(2.0);
  q << 1, 2, 3, 4;
  RegressionMetrics m = regression_metrics(c, q);
  CHECK_FALSE(m.r2.has_value());  // constant actuals: R^2 undefined
}

TEST_CASE("regression metrics agree with brute force on random vectors") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + int(rng.uniform_int(2, 40));
    Eigen::VectorXd a(n), p(n);
    for (int i = 0; i < n; ++i) {
      a(i) = rng.gaussian() * 3 + 1;
      p(i) = rng.gaussian() * 3;
    }
    RegressionMetrics m = regression_metrics(a, p);
    BruteRegression b = brute_regression(a, p);
    CHECK(std::abs(m.mae - b.mae) <= 1e-12);
    CHECK(std::abs(m.mse - b.mse) <= 1e-12);
    CHECK(std::abs(m.rmse - b.rmse) <= 1e-12);
    REQUIRE(m.r2.has_value() == b.has_r2);
    if (b.has_r2) CHECK(std::abs(*m.r2 - b.r2) <= 1e-12);
    // power-mean inequality and the RMSE/MSE identity
    CHECK(m.rmse + 1e-15 >= m.mae);
    CHECK(std::abs(m.rmse * m.rmse - m.mse) <= 1e-12);
  }
}

TEST_CASE("classification metrics: worked examples") {
  // all correct
  std::vector<int> a = {0, 1, 0, 1}, p = a;
  ClassificationReport r = classification_metrics(a, p);
  CHECK(r.cls[0].f1 == doctest::Approx(1.0));
  CHECK(r.cls[1].f1 == doctest::Approx(1.0));
  CHECK(r.macro_avg.f1 == doctest::Approx(1.0));

  // TP=1, FP=1, FN=1 for class 1
  std::vector<int> a2 = {1, 0, 1, 0}, p2 = {1, 1, 0, 0};
  ClassificationReport r2 = classification_metrics(a2, p2);
  CHECK(r2.cls[1].precision == doctest::Approx(0.5));
  CHECK(r2.cls[1].recall == doctest::Approx(0.5));
  CHECK(r2.cls[1].f1 == doctest::Approx(0.5));

  // all-one-class predictions: the other class has recall 0 and the
  // zero-division flag set on its precision
  std::vector<int> a3 = {0, 1, 0, 1}, p3 = {1, 1, 1, 1};
  ClassificationReport r3 = classification_metrics(a3, p3);
  CHECK(r3.cls[0].recall == 0.0);
  CHECK(r3.cls[0].precision == 0.0);
  CHECK(r3.cls[0].zero_division);
}

TEST_CASE("classification metrics agree with brute-force confusion counts") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 3 + int(rng.uniform_int(3, 60));
    std::vector<int> a(n), p(n);
    for (int i = 0; i < n; ++i) {
      a[std::size_t(i)] = rng.u01() < 0.5 ? 0 : 1;
      p[std::size_t(i)] = rng.u01() < 0.5 ? 0 : 1;
    }
    ClassificationReport r = classification_metrics(a, p);
    for (int cls = 0; cls < 2; ++cls) {
      BruteClass b = brute_class(a, p, cls);
      CHECK(std::abs(r.cls[cls].precision - b.precision) <= 1e-12);
      CHECK(std::abs(r.cls[cls].recall - b.recall) <= 1e-12);
      CHECK(std::abs(r.cls[cls].f1 - b.f1) <= 1e-12);
    }
    // macro = unweighted mean, weighted = support-weighted mean
    double macro_f1 = (brute_class(a, p, 0).f1 + brute_class(a, p, 1).f1) / 2;
    CHECK(std::abs(r.macro_avg.f1 - macro_f1) <= 1e-12);
    int s0 = r.cls[0].support, s1 = r.cls[1].support;
    REQUIRE(s0 + s1 == n);
    double weighted_f1 =
        (s0 * brute_class(a, p, 0).f1 + s1 * brute_class(a, p, 1).f1) / n;
    CHECK(std::abs(r.weighted_avg.f1 - weighted_f1) <= 1e-12);
  }
}

TEST_CASE("improvement rate") {
  CHECK(improvement_rate(0.5, 0.5) == doctest::Approx(0.0));
  CHECK(improvement_rate(0.10, 0.08) == doctest::Approx(0.20).epsilon(1e-12));
  CHECK_THROWS_AS(improvement_rate(0.0, 0.1), Error);

  // reported-rate cross-check: recomputation from rounded cells differs
  // from the published 17.2946% beyond tolerance, so the flag trips
  RateCheck rc = check_reported_rate(0.0903, 0.0746, 0.172946);
  CHECK(rc.recomputed == doctest::Approx((0.0903 - 0.0746) / 0.0903));
  CHECK(std::abs(rc.recomputed - 0.1739) < 1e-4);
  CHECK(rc.flagged);

  // a consistent report does not flag
  RateCheck ok = check_reported_rate(0.10, 0.08, 0.20);
  CHECK_FALSE(ok.flagged);
}

TEST_CASE("dm test: convention, antisymmetry, discrimination") {
  Eigen::VectorXd e(30);
  for (int i = 0; i < 30; ++i) e(i) = std::sin(i * 0.7);

  DmResult same = dm_test(e, e);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  Rng rng(5);
  Eigen::VectorXd a(60), b(60);
  for (int i = 0; i < 60; ++i) {
    a(i) = rng.gaussian();
    b(i) = rng.gaussian() * 1.3;
  }
  DmResult ab = dm_test(a, b);
  DmResult ba = dm_test(b, a);
  CHECK(ab.statistic == doctest::Approx(-ba.statistic).epsilon(1e-12));
  CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));

  CHECK_THROWS_AS(dm_test(a.head(5), b.head(5)), Error);  // too short
  CHECK_THROWS_AS(dm_test(a.head(20), b.head(30)), Error);

  // Monte Carlo: N(0,1) vs N(0,2^2) errors, T=500 -> significantly
  // negative statistic in at least 95% of trials
  int significant = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    Rng r(mix_seed(900, std::uint64_t(t)));
    Eigen::VectorXd ea(500), eb(500);
    for (int i = 0; i < 500; ++i) {
      ea(i) = r.gaussian();
      eb(i) = 2.0 * r.gaussian();
    }
    DmResult d = dm_test(ea, eb);
    if (d.statistic < 0 && d.p_value < 0.01) ++significant;
  }
  CHECK(significant >= int(trials * 0.95));
}

TEST_CASE("dm test with absolute loss and longer horizon") {
  Rng rng(11);
  Eigen::VectorXd a(80), b(80);
  for (int i = 0; i < 80; ++i) {
    a(i) = rng.gaussian();
    b(i) = rng.gaussian() * 1.5;
  }
  DmResult abs1 = dm_test(a, b, DmLoss::absolute, 1);
  DmResult abs3 = dm_test(a, b, DmLoss::absolute, 3);
  CHECK(std::isfinite(abs1.statistic));
  CHECK(std::isfinite(abs3.statistic));
  CHECK(abs1.p_value > 0.0);
  CHECK(abs1.p_value <= 1.0);
}

TEST_CASE("rank models: ties share the mean rank; missing metrics flagged") {
  MetricTable t;
  t.models = {"a", "b", "c"};
  t.metrics = {"MAE", "RMSE"};
  t.values = {{0.1, 1.0}, {0.2, 1.0}, {0.3, 2.0}};
  RankResult r = rank_models(t);
  CHECK(*r.ranks[0][0] == doctest::Approx(1.0));
  CHECK(*r.ranks[1][0] == doctest::Approx(2.0));
  CHECK(*r.ranks[2][0] == doctest::Approx(3.0));
  // a and b tie on RMSE -> both 1.5
  CHECK(*r.ranks[0][1] == doctest::Approx(1.5));
  CHECK(*r.ranks[1][1] == doctest::Approx(1.5));
  CHECK(*r.ranks[2][1] == doctest::Approx(3.0));
  // weighted rank = mean of the per-metric ranks
  CHECK(*r.weighted[0] == doctest::Approx((1.0 + 1.5) / 2));
  CHECK(*r.weighted[1] == doctest::Approx((2.0 + 1.5) / 2));

  // single model
  MetricTable single;
  single.models = {"only"};
  single.metrics = {"MAE"};
  single.values = {{0.5}};
  RankResult rs = rank_models(single);
  CHECK(*rs.ranks[0][0] == doctest::Approx(1.0));
  CHECK(*rs.weighted[0] == doctest::Approx(1.0));

  // a missing metric excludes the model from that ranking with a flag
  MetricTable miss;
  miss.models = {"a", "b"};
  miss.metrics = {"MAE"};
  miss.values = {{std::nullopt}, {0.2}};
  RankResult rm = rank_models(miss);
  CHECK_FALSE(rm.ranks[0][0].has_value());
  CHECK(*rm.ranks[1][0] == doctest::Approx(1.0));
  CHECK_FALSE(rm.flags.empty());
}

TEST_CASE("rank models: weighted ranks recompute from per-metric ranks") {
  Rng rng(31);
  MetricTable t;
  t.metrics = {"MAE", "RMSE", "MSE"};
  for (int m = 0; m < 7; ++m) {
    t.models.push_back("m" + std::to_string(m));
    t.values.push_back({rng.u01(), rng.u01(), rng.u01()});
  }
  RankResult r = rank_models(t);
  for (std::size_t i = 0; i < t.models.size(); ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < t.metrics.size(); ++j) {
      REQUIRE(r.ranks[i][j].has_value());
      sum += *r.ranks[i][j];
    }
    CHECK(*r.weighted[i] == doctest::Approx(sum / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("correlation matrix") {
  std::vector<Date> dates;
  Date d0 = Date::parse("2020-01-01");
  Eigen::MatrixXd v(64, 3);
  Rng rng(8);
  for (int i = 0; i < 64; ++i) {
    dates.push_back(Date(d0.serial() + i));
    v(i, 0) = rng.gaussian();
    v(i, 1) = -v(i, 0);  // exact anticorrelation
    v(i, 2) = 5.0;       // constant column
  }
  SeriesFrame f(dates, {"x", "neg_x", "flat"}, v);
  CorrelationResult c = correlation_matrix(f);
  CHECK(c.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(c.matrix(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c.matrix(1, 0) == doctest::Approx(c.matrix(0, 1)));
  CHECK(c.valid[0]);
  CHECK_FALSE(c.valid[2]);  // zero variance -> reported absent

  // independent random columns stay near zero
  Eigen::MatrixXd w(10000, 2);
  std::vector<Date> dd;
  for (int i = 0; i < 10000; ++i) {
    dd.push_back(Date(d0.serial() + i));
    w(i, 0) = rng.gaussian();
    w(i, 1) = rng.gaussian();
  }
  SeriesFrame g(dd, {"u", "v"}, w);
  CorrelationResult ci = correlation_matrix(g);
  CHECK(std::abs(ci.matrix(0, 1)) < 0.05);
}
