#include <doctest.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "fxlab/error.hpp"
#include "fxlab/rnn.hpp"

using namespace fxlab;
namespace fs = std::filesystem;

namespace {

// central finite differences through the batch loss; returns the largest
// per-tensor relative error against the analytic gradients
double gradcheck_worst(RnnParams params, const std::vector<Eigen::MatrixXd>& wins,
                       const Eigen::VectorXd& tgts, double eps = 1e-5) {
  LossAndGrads lg = loss_and_gradients(params, wins, tgts);
  auto grad_views = lg.grads.tensors();
  auto param_views = params.tensors();
  REQUIRE(grad_views.size() == param_views.size());
  double worst = 0;
  for (std::size_t t = 0; t < param_views.size(); ++t) {
    REQUIRE(grad_views[t].name == param_views[t].name);
    REQUIRE(grad_views[t].size == param_views[t].size);
    double num = 0, analytic_sq = 0, fd_sq = 0;
    for (Eigen::Index j = 0; j < param_views[t].size; ++j) {
      const double orig = param_views[t].data[j];
      param_views[t].data[j] = orig + eps;
      const double lp = loss_and_gradients(params, wins, tgts).loss;
      param_views[t].data[j] = orig - eps;
      const double lm = loss_and_gradients(params, wins, tgts).loss;
      param_views[t].data[j] = orig;
      const double fd = (lp - lm) / (2 * eps);
      const double ga = grad_views[t].data[j];
      num += (ga - fd) * (ga - fd);
      analytic_sq += ga * ga;
      fd_sq += fd * fd;
    }
    const double denom = std::max({std::sqrt(analytic_sq), std::sqrt(fd_sq), 1e-12});
    worst = std::max(worst, std::sqrt(num) / denom);
  }
  return worst;
}

SupervisedSet set_from(const std::vector<Eigen::MatrixXd>& wins,
                       const Eigen::VectorXd& tgts) {
  SupervisedSet s;
  s.windows = wins;
  s.targets = tgts;
  for (std::size_t i = 0; i < wins.size(); ++i) {
    s.target_rows.push_back(static_cast<int>(i));
    s.target_dates.push_back(Date(18000 + static_cast<int>(i)));
  }
  return s;
}

// noiseless ramp: windows over v_i = i / 20, one-step-ahead target
SupervisedSet ramp_set(int n_windows, int timesteps) {
  std::vector<Eigen::MatrixXd> wins;
  Eigen::VectorXd tgts(n_windows);
  for (int k = 0; k < n_windows; ++k) {
    Eigen::MatrixXd w(timesteps, 1);
    for (int t = 0; t < timesteps; ++t) w(t, 0) = (k + t) / 20.0;
    wins.push_back(w);
    tgts(k) = (k + timesteps) / 20.0;
  }
  return set_from(wins, tgts);
}

}  // namespace

TEST_CASE("lstm_cell_step: zero-parameter hand evaluation") {
  RnnSpec spec;
  spec.cell = CellKind::lstm;
  spec.input_dim = 1;
  spec.hidden_units = 2;
  RnnParams p = RnnParams::zeros(spec);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(2, 1);
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(2, 1);

  LstmStepOut out = lstm_cell_step(p, x, h0, c0);
  for (int u = 0; u < 2; ++u) {
    CHECK(out.f(u, 0) == doctest::Approx(0.5));
    CHECK(out.i(u, 0) == doctest::Approx(0.5));
    CHECK(out.o(u, 0) == doctest::Approx(0.5));
    CHECK(out.cbar(u, 0) == doctest::Approx(0.0));
    CHECK(out.c(u, 0) == doctest::Approx(0.0));
    CHECK(out.h(u, 0) == doctest::Approx(0.0));
  }

  Eigen::MatrixXd c1 = Eigen::MatrixXd::Ones(2, 1);
  LstmStepOut out1 = lstm_cell_step(p, x, h0, c1);
  for (int u = 0; u < 2; ++u) {
    CHECK(out1.c(u, 0) == doctest::Approx(0.5));  // 0.5*1 + 0.5*0
    CHECK(out1.h(u, 0) == doctest::Approx(0.5 * std::tanh(0.5)));  // ~0.23106
  }
  CHECK(out1.h(0, 0) == doctest::Approx(0.23105857863000487).epsilon(1e-12));

  CHECK_THROWS_AS(lstm_cell_step(p, Eigen::MatrixXd::Zero(3, 1), h0, c0), Error);
  Eigen::MatrixXd bad = x;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_WITH_AS(lstm_cell_step(p, bad, h0, c0),
                       doctest::Contains("non-finite"), Error);
}

TEST_CASE("lstm_cell_step: bounded outputs under random parameters") {
  RnnSpec spec;
  spec.cell = CellKind::lstm;
  spec.input_dim = 3;
  spec.hidden_units = 5;
  Rng rng(99);
  RnnParams p = RnnParams::init(spec, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(3, 2), h(5, 2), c(5, 2);
    for (int r = 0; r < 3; ++r)
      for (int b = 0; b < 2; ++b) x(r, b) = rng.uniform(-5, 5);
    for (int r = 0; r < 5; ++r)
      for (int b = 0; b < 2; ++b) {
        h(r, b) = rng.uniform(-1, 1);
        c(r, b) = rng.uniform(-3, 3);
      }
    LstmStepOut out = lstm_cell_step(p, x, h, c);
    CHECK(out.h.cwiseAbs().maxCoeff() < 1.0);  // |o*tanh(c)| < 1
    CHECK(out.f.minCoeff() > 0.0);
    CHECK(out.f.maxCoeff() < 1.0);
  }
}

TEST_CASE("gru_cell_step: zero-parameter algebra and bounds") {
  RnnSpec spec;
  spec.cell = CellKind::gru;
  spec.input_dim = 1;
  spec.hidden_units = 2;
  RnnParams p = RnnParams::zeros(spec);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd h0(2, 1);
  h0 << 0.8, -0.4;
  GruStepOut out = gru_cell_step(p, x, h0);
  CHECK(out.h(0, 0) == doctest::Approx(0.4));   // 0.5 * h_prev
  CHECK(out.h(1, 0) == doctest::Approx(-0.2));

  GruStepOut zero = gru_cell_step(p, x, Eigen::MatrixXd::Zero(2, 1));
  CHECK(zero.h.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  Rng rng(5);
  RnnParams pr = RnnParams::init(spec, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd xi(1, 1), hi(2, 1);
    xi(0, 0) = rng.uniform(-5, 5);
    hi << rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99);
    GruStepOut o = gru_cell_step(pr, xi, hi);
    CHECK(o.h.cwiseAbs().maxCoeff() < 1.0);  // convex mix of tanh and h_prev
  }

  RnnSpec lspec = spec;
  lspec.cell = CellKind::lstm;
  RnnParams lstm_params = RnnParams::zeros(lspec);
  CHECK_THROWS_AS(gru_cell_step(lstm_params, x, h0), Error);
}

TEST_CASE("rnn_forward: zero params, one-step equivalence, determinism") {
  RnnSpec spec;
  spec.cell = CellKind::lstm;
  spec.input_dim = 2;
  spec.hidden_units = 3;
  RnnParams p = RnnParams::zeros(spec);
  p.head_b = 1.75;

  Eigen::MatrixXd window(4, 2);
  window.setConstant(0.3);
  CHECK(rnn_forward(p, window) == doctest::Approx(1.75));  // head bias only

  Rng rng(31);
  RnnParams pr = RnnParams::init(spec, rng);
  Eigen::MatrixXd one_step(1, 2);
  one_step << 0.2, -0.7;
  LstmStepOut manual = lstm_cell_step(pr, one_step.transpose(),
                                      Eigen::MatrixXd::Zero(3, 1),
                                      Eigen::MatrixXd::Zero(3, 1));
  const double by_hand = pr.head_w.dot(manual.h.col(0)) + pr.head_b;
  CHECK(rnn_forward(pr, one_step) == doctest::Approx(by_hand).epsilon(1e-14));

  Eigen::MatrixXd w2(3, 2);
  w2 << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  CHECK(rnn_forward(pr, w2) == rnn_forward(pr, w2));  // bit identical

  Eigen::MatrixXd bad(3, 5);
  bad.setZero();
  CHECK_THROWS_AS(rnn_forward(pr, bad), Error);
}

TEST_CASE("rnn_forward_set: matches per-window forward across chunk boundary") {
  RnnSpec spec;
  spec.cell = CellKind::gru;
  spec.input_dim = 1;
  spec.hidden_units = 3;
  Rng rng(8);
  RnnParams p = RnnParams::init(spec, rng);
  std::vector<Eigen::MatrixXd> wins;
  for (int i = 0; i < 600; ++i) {  // crosses the internal batching size
    Eigen::MatrixXd w(2, 1);
    w << rng.uniform(-1, 1), rng.uniform(-1, 1);
    wins.push_back(w);
  }
  Eigen::VectorXd batch = rnn_forward_set(p, wins);
  REQUIRE(batch.size() == 600);
  for (int i : {0, 1, 511, 512, 599})
    CHECK(batch(i) == rnn_forward(p, wins[static_cast<std::size_t>(i)]));
  CHECK(rnn_forward_set(p, {}).size() == 0);
}

TEST_CASE("loss_and_gradients: exact-fit zero loss, quadratic scaling") {
  RnnSpec spec;
  spec.cell = CellKind::lstm;
  spec.input_dim = 1;
  spec.hidden_units = 2;
  RnnParams p = RnnParams::zeros(spec);
  p.head_b = 0.4;

  std::vector<Eigen::MatrixXd> wins = {Eigen::MatrixXd::Constant(3, 1, 0.1),
                                       Eigen::MatrixXd::Constant(3, 1, 0.9)};
  Eigen::VectorXd hit(2);
  hit << 0.4, 0.4;  // prediction is identically head_b
  LossAndGrads exact = loss_and_gradients(p, wins, hit);
  CHECK(exact.loss == doctest::Approx(0.0));
  CHECK(exact.grads.flatten().cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  Eigen::VectorXd off(2);
  off << 0.6, 0.1;  // residuals 0.2 and -0.3
  const double base = loss_and_gradients(p, wins, off).loss;
  CHECK(base == doctest::Approx((0.04 + 0.09) / 2));
  Eigen::VectorXd twice(2);
  twice << 0.8, -0.2;  // residuals doubled
  CHECK(loss_and_gradients(p, wins, twice).loss == doctest::Approx(4 * base));

  Eigen::VectorXd wrong_len(3);
  wrong_len.setZero();
  CHECK_THROWS_AS(loss_and_gradients(p, wins, wrong_len), Error);
  CHECK_THROWS_AS(loss_and_gradients(p, {}, Eigen::VectorXd()), Error);
}

TEST_CASE("gradient check: LSTM and GRU vs central differences") {
  for (CellKind cell : {CellKind::lstm, CellKind::gru}) {
    CAPTURE(to_string(cell));
    RnnSpec spec;
    spec.cell = cell;
    spec.input_dim = 2;
    spec.hidden_units = 4;
    spec.timesteps = 3;
    Rng rng(cell == CellKind::lstm ? 17 : 18);
    RnnParams p = RnnParams::init(spec, rng);

    std::vector<Eigen::MatrixXd> wins;
    Eigen::VectorXd tgts(5);
    for (int b = 0; b < 5; ++b) {
      Eigen::MatrixXd w(3, 2);
      for (int t = 0; t < 3; ++t)
        for (int f = 0; f < 2; ++f) w(t, f) = rng.uniform(-1, 1);
      wins.push_back(w);
      tgts(b) = rng.uniform(-1, 1);
    }
    CHECK(gradcheck_worst(p, wins, tgts) < 1e-4);
  }
}

TEST_CASE("train_rnn: overfits a noiseless ramp") {
  for (CellKind cell : {CellKind::lstm, CellKind::gru}) {
    CAPTURE(to_string(cell));
    SupervisedSet train = ramp_set(8, 3);
    RnnSpec spec;
    spec.cell = cell;
    spec.input_dim = 1;
    spec.hidden_units = 8;
    spec.timesteps = 3;
    spec.learning_rate = 0.02;
    spec.epochs = 500;
    spec.batch_size = 8;
    spec.seed = 7;
    TrainedModel model = train_rnn(spec, train, SupervisedSet{});
    CHECK(rmse_on(model.params, train) < 0.01);
    CHECK(model.train_loss.size() == 500);
    CHECK(model.train_loss.back() < model.train_loss.front());
    CHECK(model.valid_rmse.empty());
    CHECK(model.best_epoch == 500);
  }
}

TEST_CASE("train_rnn: determinism, zero epochs, early stopping bookkeeping") {
  SupervisedSet train = ramp_set(10, 2);
  SupervisedSet valid = ramp_set(14, 2);  // superset ramp; fine as a holdout
  RnnSpec spec;
  spec.cell = CellKind::lstm;
  spec.input_dim = 1;
  spec.hidden_units = 4;
  spec.timesteps = 2;
  spec.learning_rate = 0.01;
  spec.epochs = 40;
  spec.batch_size = 4;
  spec.seed = 123;

  TrainedModel a = train_rnn(spec, train, valid);
  TrainedModel b = train_rnn(spec, train, valid);
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(a.train_loss == b.train_loss);
  CHECK(a.valid_rmse == b.valid_rmse);

  // returned params are the snapshot at the best validation epoch
  REQUIRE(!a.valid_rmse.empty());
  const double best = *std::min_element(a.valid_rmse.begin(), a.valid_rmse.end());
  CHECK(rmse_on(a.params, valid) == best);
  CHECK(a.best_epoch >= 1);
  CHECK(a.best_epoch <= static_cast<int>(a.valid_rmse.size()));

  RnnSpec zero = spec;
  zero.epochs = 0;
  TrainedModel untouched = train_rnn(zero, train, valid);
  Rng init_rng(zero.seed);
  RnnParams expect = RnnParams::init(zero, init_rng);
  CHECK(untouched.params.flatten() == expect.flatten());
  CHECK(untouched.train_loss.empty());
  CHECK(untouched.best_epoch == 0);

  RnnSpec diverge = spec;
  diverge.learning_rate = 1e300;
  diverge.epochs = 5;
  CHECK_THROWS_WITH_AS(train_rnn(diverge, train, valid),
                       doctest::Contains("diverged at epoch"), Error);

  RnnSpec mismatch = spec;
  mismatch.timesteps = 6;
  CHECK_THROWS_AS(train_rnn(mismatch, train, valid), Error);
  CHECK_THROWS_AS(train_rnn(spec, SupervisedSet{}, valid), Error);
}

TEST_CASE("spec validation and parameter bookkeeping") {
  RnnSpec spec;
  spec.input_dim = 2;
  spec.hidden_units = 4;
  CHECK_NOTHROW(spec.validate());
  RnnSpec bad = spec;
  bad.hidden_units = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = spec;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = spec;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);

  // LSTM: 4 gates of h x (h + in) weights + h bias, head h + 1
  Rng rng(2);
  RnnParams p = RnnParams::init(spec, rng);
  CHECK(p.parameter_count() == 4 * (4 * 6 + 4) + 4 + 1);
  RnnSpec gspec = spec;
  gspec.cell = CellKind::gru;
  Rng rng2(2);
  RnnParams g = RnnParams::init(gspec, rng2);
  CHECK(g.parameter_count() == 3 * (4 * 6 + 4) + 4 + 1);

  Eigen::VectorXd flat = p.flatten();
  CHECK(flat.size() == p.parameter_count());
  RnnParams q = RnnParams::zeros(spec);
  q.unflatten(flat);
  CHECK(q.flatten() == flat);
  CHECK_THROWS_AS(q.unflatten(Eigen::VectorXd::Zero(3)), Error);

  auto views = p.tensors();
  Eigen::Index total = 0;
  std::vector<std::string> names;
  for (const auto& v : views) {
    total += v.size;
    names.push_back(v.name);
  }
  CHECK(total == p.parameter_count());
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());

  // forget-gate bias starts at the +1 stabilizer
  bool saw_forget_bias = false;
  for (const auto& v : p.tensors())
    if (v.name == "b_f") {
      saw_forget_bias = true;
      for (Eigen::Index i = 0; i < v.size; ++i) CHECK(v.data[i] == 1.0);
    }
  CHECK(saw_forget_bias);
}

TEST_CASE("checkpoint round trip is bit exact") {
  SupervisedSet train = ramp_set(8, 3);
  RnnSpec spec;
  spec.cell = CellKind::gru;
  spec.input_dim = 1;
  spec.hidden_units = 5;
  spec.timesteps = 3;
  spec.learning_rate = 0.01;
  spec.epochs = 20;
  spec.batch_size = 4;
  spec.seed = 77;
  TrainedModel model = train_rnn(spec, train, train);

  static int counter = 0;
  fs::path p = fs::temp_directory_path() /
               ("fxlab-ckpt-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++) + ".txt");
  save_checkpoint(p.string(), model);
  TrainedModel back = load_checkpoint(p.string());
  fs::remove(p);

  CHECK(back.spec.cell == spec.cell);
  CHECK(back.spec.hidden_units == 5);
  CHECK(back.spec.seed == 77);
  CHECK(back.params.flatten() == model.params.flatten());
  CHECK(back.train_loss == model.train_loss);
  CHECK(back.valid_rmse == model.valid_rmse);
  CHECK(back.best_epoch == model.best_epoch);
  // identical predictions, not merely close
  CHECK(rnn_forward(back.params, train.windows[0]) ==
        rnn_forward(model.params, train.windows[0]));

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.ckpt"), Error);
}
