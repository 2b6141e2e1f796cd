#include "fxlab/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fxlab/error.hpp"
#include "fxlab/io.hpp"

namespace fxlab {

std::string to_string(CellKind c) { return c == CellKind::lstm ? "lstm" : "gru"; }

CellKind cell_kind_from_string(const std::string& s) {
  if (s == "lstm") return CellKind::lstm;
  if (s == "gru") return CellKind::gru;
  throw Error("unknown cell kind '" + s + "' (expected lstm or gru)");
}

void RnnSpec::validate() const {
  if (input_dim < 1) throw Error("rnn spec: input_dim must be >= 1");
  if (hidden_units < 1) throw Error("rnn spec: hidden_units must be >= 1");
  if (timesteps < 1) throw Error("rnn spec: timesteps must be >= 1");
  if (!(learning_rate > 0)) throw Error("rnn spec: learning_rate must be > 0");
  if (epochs < 0) throw Error("rnn spec: epochs must be >= 0");
  if (batch_size < 1) throw Error("rnn spec: batch_size must be >= 1");
}

static int gate_count(CellKind c) { return c == CellKind::lstm ? 4 : 3; }

static std::vector<std::string> gate_names(CellKind c) {
  if (c == CellKind::lstm) return {"f", "i", "c", "o"};
  return {"z", "r", "h"};
}

RnnParams RnnParams::zeros(const RnnSpec& spec) {
  spec.validate();
  RnnParams p;
  p.cell = spec.cell;
  p.input_dim = spec.input_dim;
  p.hidden_units = spec.hidden_units;
  const int h = spec.hidden_units;
  const int z = h + spec.input_dim;
  p.gates.resize(gate_count(spec.cell));
  for (auto& g : p.gates) {
    g.w = Eigen::MatrixXd::Zero(h, z);
    g.b = Eigen::VectorXd::Zero(h);
  }
  p.head_w = Eigen::VectorXd::Zero(h);
  p.head_b = 0.0;
  return p;
}

RnnParams RnnParams::init(const RnnSpec& spec, Rng& rng) {
  RnnParams p = zeros(spec);
  const int z = spec.hidden_units + spec.input_dim;
  const double gate_bound = 1.0 / std::sqrt(static_cast<double>(z));
  for (auto& g : p.gates) {
    for (Eigen::Index r = 0; r < g.w.rows(); ++r)
      for (Eigen::Index c = 0; c < g.w.cols(); ++c)
        g.w(r, c) = rng.uniform(-gate_bound, gate_bound);
  }
  // Positive forget bias keeps early memory open.
  if (spec.cell == CellKind::lstm) p.gates[0].b.setConstant(1.0);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(spec.hidden_units));
  for (Eigen::Index j = 0; j < p.head_w.size(); ++j)
    p.head_w(j) = rng.uniform(-head_bound, head_bound);
  return p;
}

std::vector<RnnParams::TensorView> RnnParams::tensors() {
  std::vector<TensorView> out;
  auto names = gate_names(cell);
  for (std::size_t g = 0; g < gates.size(); ++g) {
    out.push_back({"w_" + names[g], gates[g].w.data(), gates[g].w.size()});
    out.push_back({"b_" + names[g], gates[g].b.data(), gates[g].b.size()});
  }
  out.push_back({"head_w", head_w.data(), head_w.size()});
  out.push_back({"head_b", &head_b, 1});
  return out;
}

std::vector<RnnParams::TensorView> RnnParams::tensors() const {
  return const_cast<RnnParams*>(this)->tensors();
}

Eigen::Index RnnParams::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& t : tensors()) n += t.size;
  return n;
}

Eigen::VectorXd RnnParams::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  for (const auto& t : tensors()) {
    flat.segment(at, t.size) = Eigen::Map<const Eigen::VectorXd>(t.data, t.size);
    at += t.size;
  }
  return flat;
}

void RnnParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw Error("unflatten: size mismatch");
  Eigen::Index at = 0;
  for (auto& t : tensors()) {
    Eigen::Map<Eigen::VectorXd>(t.data, t.size) = flat.segment(at, t.size);
    at += t.size;
  }
}

static Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return 1.0 / (1.0 + (-a.array()).exp());
}

// Stacks h_prev over x_t into the concatenated cell input.
static Eigen::MatrixXd stack_input(const Eigen::MatrixXd& h_prev,
                                   const Eigen::MatrixXd& x_t) {
  Eigen::MatrixXd z(h_prev.rows() + x_t.rows(), x_t.cols());
  z.topRows(h_prev.rows()) = h_prev;
  z.bottomRows(x_t.rows()) = x_t;
  return z;
}

static void check_step_inputs(const RnnParams& params, const Eigen::MatrixXd& x_t,
                              const Eigen::MatrixXd& h_prev) {
  if (x_t.rows() != params.input_dim)
    throw Error("cell step: input has " + std::to_string(x_t.rows()) +
                " features, parameters expect " + std::to_string(params.input_dim));
  if (h_prev.rows() != params.hidden_units || h_prev.cols() != x_t.cols())
    throw Error("cell step: state shape mismatch");
  if (!x_t.allFinite()) throw Error("cell step: non-finite input");
}

LstmStepOut lstm_cell_step(const RnnParams& params, const Eigen::MatrixXd& x_t,
                           const Eigen::MatrixXd& h_prev,
                           const Eigen::MatrixXd& c_prev) {
  if (params.cell != CellKind::lstm) throw Error("lstm_cell_step: parameters are not an LSTM");
  check_step_inputs(params, x_t, h_prev);
  if (c_prev.rows() != h_prev.rows() || c_prev.cols() != h_prev.cols())
    throw Error("cell step: state shape mismatch");
  LstmStepOut s;
  s.z_in = stack_input(h_prev, x_t);
  const auto& g = params.gates;
  s.f = sigmoid((g[0].w * s.z_in).colwise() + g[0].b);
  s.i = sigmoid((g[1].w * s.z_in).colwise() + g[1].b);
  s.cbar = ((g[2].w * s.z_in).colwise() + g[2].b).array().tanh();
  s.o = sigmoid((g[3].w * s.z_in).colwise() + g[3].b);
  s.c = (s.f.array() * c_prev.array() + s.i.array() * s.cbar.array()).matrix();
  s.tanh_c = s.c.array().tanh();
  s.h = (s.o.array() * s.tanh_c.array()).matrix();
  return s;
}

GruStepOut gru_cell_step(const RnnParams& params, const Eigen::MatrixXd& x_t,
                         const Eigen::MatrixXd& h_prev) {
  if (params.cell != CellKind::gru) throw Error("gru_cell_step: parameters are not a GRU");
  check_step_inputs(params, x_t, h_prev);
  GruStepOut s;
  s.h_prev = h_prev;
  s.z_in = stack_input(h_prev, x_t);
  const auto& g = params.gates;
  s.zg = sigmoid((g[0].w * s.z_in).colwise() + g[0].b);
  s.r = sigmoid((g[1].w * s.z_in).colwise() + g[1].b);
  s.zr_in = stack_input((s.r.array() * h_prev.array()).matrix(), x_t);
  s.hbar = ((g[2].w * s.zr_in).colwise() + g[2].b).array().tanh();
  // update gate keeps the old state: z=1 copies h_prev through untouched
  s.h = (s.zg.array() * h_prev.array() + (1.0 - s.zg.array()) * s.hbar.array()).matrix();
  return s;
}

// Assembles the step-t input matrix (features x batch) from row-per-step windows.
static Eigen::MatrixXd gather_step(const std::vector<Eigen::MatrixXd>& windows,
                                   int t, int input_dim) {
  Eigen::MatrixXd x(input_dim, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t b = 0; b < windows.size(); ++b)
    x.col(static_cast<Eigen::Index>(b)) = windows[b].row(t).transpose();
  return x;
}

static void check_windows(const RnnParams& params,
                          const std::vector<Eigen::MatrixXd>& windows) {
  if (windows.empty()) throw Error("forward: no windows");
  const Eigen::Index t = windows.front().rows();
  for (const auto& w : windows) {
    if (w.cols() != params.input_dim)
      throw Error("forward: window has " + std::to_string(w.cols()) +
                  " features, parameters expect " + std::to_string(params.input_dim));
    if (w.rows() != t) throw Error("forward: ragged window lengths");
  }
}

struct BatchForward {
  std::vector<LstmStepOut> lstm;
  std::vector<GruStepOut> gru;
  Eigen::VectorXd pred;
  Eigen::MatrixXd h_last;
};

static BatchForward forward_batch(const RnnParams& params,
                                  const std::vector<Eigen::MatrixXd>& windows) {
  check_windows(params, windows);
  const int steps = static_cast<int>(windows.front().rows());
  const auto batch = static_cast<Eigen::Index>(windows.size());
  BatchForward out;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(params.hidden_units, batch);
  Eigen::MatrixXd c = h;
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd x = gather_step(windows, t, params.input_dim);
    if (params.cell == CellKind::lstm) {
      out.lstm.push_back(lstm_cell_step(params, x, h, c));
      h = out.lstm.back().h;
      c = out.lstm.back().c;
    } else {
      out.gru.push_back(gru_cell_step(params, x, h));
      h = out.gru.back().h;
    }
  }
  out.h_last = h;
  out.pred = (params.head_w.transpose() * h).transpose();
  out.pred.array() += params.head_b;
  return out;
}

double rnn_forward(const RnnParams& params, const Eigen::MatrixXd& window) {
  return forward_batch(params, {window}).pred(0);
}

Eigen::VectorXd rnn_forward_set(const RnnParams& params,
                                const std::vector<Eigen::MatrixXd>& windows) {
  if (windows.empty()) return Eigen::VectorXd();
  // chunked to bound the transient state matrices on large sets
  const std::size_t chunk = 512;
  Eigen::VectorXd pred(static_cast<Eigen::Index>(windows.size()));
  for (std::size_t at = 0; at < windows.size(); at += chunk) {
    const std::size_t n = std::min(chunk, windows.size() - at);
    std::vector<Eigen::MatrixXd> part(windows.begin() + static_cast<long>(at),
                                      windows.begin() + static_cast<long>(at + n));
    pred.segment(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(n)) =
        forward_batch(params, part).pred;
  }
  return pred;
}

LossAndGrads loss_and_gradients(const RnnParams& params,
                                const std::vector<Eigen::MatrixXd>& windows,
                                const Eigen::VectorXd& targets) {
  if (static_cast<Eigen::Index>(windows.size()) != targets.size())
    throw Error("loss_and_gradients: windows/targets length mismatch");
  BatchForward fwd = forward_batch(params, windows);
  const auto batch = static_cast<Eigen::Index>(windows.size());
  const int steps = static_cast<int>(windows.front().rows());
  const int hidden = params.hidden_units;

  Eigen::VectorXd err = fwd.pred - targets;
  LossAndGrads out;
  out.loss = err.squaredNorm() / static_cast<double>(batch);
  if (!std::isfinite(out.loss)) throw Error("loss is non-finite");
  RnnSpec shape;
  shape.cell = params.cell;
  shape.input_dim = params.input_dim;
  shape.hidden_units = params.hidden_units;
  out.grads = RnnParams::zeros(shape);
  auto& g = out.grads;

  Eigen::VectorXd dpred = 2.0 * err / static_cast<double>(batch);
  g.head_w = fwd.h_last * dpred;
  g.head_b = dpred.sum();
  Eigen::MatrixXd dh = params.head_w * dpred.transpose();  // hidden x batch

  if (params.cell == CellKind::lstm) {
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(hidden, batch);
    const Eigen::MatrixXd zero_state = Eigen::MatrixXd::Zero(hidden, batch);
    for (int t = steps - 1; t >= 0; --t) {
      const LstmStepOut& s = fwd.lstm[t];
      const Eigen::MatrixXd& c_prev = t > 0 ? fwd.lstm[t - 1].c : zero_state;
      Eigen::MatrixXd da_o =
          (dh.array() * s.tanh_c.array() * s.o.array() * (1.0 - s.o.array())).matrix();
      dc.array() += dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square());
      Eigen::MatrixXd da_f =
          (dc.array() * c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
      Eigen::MatrixXd da_i =
          (dc.array() * s.cbar.array() * s.i.array() * (1.0 - s.i.array())).matrix();
      Eigen::MatrixXd da_c =
          (dc.array() * s.i.array() * (1.0 - s.cbar.array().square())).matrix();
      g.gates[0].w.noalias() += da_f * s.z_in.transpose();
      g.gates[1].w.noalias() += da_i * s.z_in.transpose();
      g.gates[2].w.noalias() += da_c * s.z_in.transpose();
      g.gates[3].w.noalias() += da_o * s.z_in.transpose();
      g.gates[0].b += da_f.rowwise().sum();
      g.gates[1].b += da_i.rowwise().sum();
      g.gates[2].b += da_c.rowwise().sum();
      g.gates[3].b += da_o.rowwise().sum();
      Eigen::MatrixXd dz = params.gates[0].w.transpose() * da_f +
                           params.gates[1].w.transpose() * da_i +
                           params.gates[2].w.transpose() * da_c +
                           params.gates[3].w.transpose() * da_o;
      dh = dz.topRows(hidden);
      dc = (dc.array() * s.f.array()).matrix();
    }
  } else {
    for (int t = steps - 1; t >= 0; --t) {
      const GruStepOut& s = fwd.gru[t];
      Eigen::MatrixXd da_z = (dh.array() * (s.h_prev.array() - s.hbar.array()) *
                              s.zg.array() * (1.0 - s.zg.array()))
                                 .matrix();
      Eigen::MatrixXd da_h =
          (dh.array() * (1.0 - s.zg.array()) * (1.0 - s.hbar.array().square())).matrix();
      g.gates[2].w.noalias() += da_h * s.zr_in.transpose();
      g.gates[2].b += da_h.rowwise().sum();
      Eigen::MatrixXd dzr = params.gates[2].w.transpose() * da_h;
      Eigen::MatrixXd dtop = dzr.topRows(hidden);  // gradient on r .* h_prev
      Eigen::MatrixXd da_r =
          (dtop.array() * s.h_prev.array() * s.r.array() * (1.0 - s.r.array())).matrix();
      g.gates[1].w.noalias() += da_r * s.z_in.transpose();
      g.gates[1].b += da_r.rowwise().sum();
      g.gates[0].w.noalias() += da_z * s.z_in.transpose();
      g.gates[0].b += da_z.rowwise().sum();
      Eigen::MatrixXd dz_in = params.gates[0].w.transpose() * da_z +
                              params.gates[1].w.transpose() * da_r;
      dh = (dh.array() * s.zg.array() + dtop.array() * s.r.array()).matrix() +
           dz_in.topRows(hidden);
    }
  }
  return out;
}

double rmse_on(const RnnParams& params, const SupervisedSet& set) {
  if (set.size() == 0) throw Error("rmse_on: empty set");
  Eigen::VectorXd pred = rnn_forward_set(params, set.windows);
  return std::sqrt((pred - set.targets).squaredNorm() /
                   static_cast<double>(set.targets.size()));
}

TrainedModel train_rnn(const RnnSpec& spec, const SupervisedSet& train_set,
                       const SupervisedSet& valid_set, const TrainOptions& opts) {
  spec.validate();
  if (train_set.size() == 0) throw Error("train: empty training set");
  for (const auto& w : train_set.windows)
    if (w.rows() != spec.timesteps || w.cols() != spec.input_dim)
      throw Error("train: window shape does not match spec");

  Rng rng(spec.seed);
  TrainedModel model;
  model.spec = spec;
  model.params = RnnParams::init(spec, rng);

  const Eigen::Index n_params = model.params.parameter_count();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n_params);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_params);
  long adam_t = 0;

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;

  RnnParams best = model.params;
  double best_rmse = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    for (std::size_t k = n; k > 1; --k) {  // Fisher-Yates
      std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(k) - 1));
      std::swap(order[k - 1], order[j]);
    }
    double loss_sum = 0;
    int batches = 0;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t take = std::min<std::size_t>(spec.batch_size, n - at);
      std::vector<Eigen::MatrixXd> wins(take);
      Eigen::VectorXd tgts(static_cast<Eigen::Index>(take));
      for (std::size_t b = 0; b < take; ++b) {
        wins[b] = train_set.windows[order[at + b]];
        tgts(static_cast<Eigen::Index>(b)) =
            train_set.targets(static_cast<Eigen::Index>(order[at + b]));
      }
      LossAndGrads lg;
      try {
        lg = loss_and_gradients(model.params, wins, tgts);
      } catch (const Error&) {
        throw Error("training diverged at epoch " + std::to_string(epoch));
      }
      loss_sum += lg.loss;
      ++batches;

      Eigen::VectorXd grad = lg.grads.flatten();
      const double norm = grad.norm();
      if (norm > opts.clip_norm && norm > 0) grad *= opts.clip_norm / norm;
      ++adam_t;
      m = opts.adam_beta1 * m + (1 - opts.adam_beta1) * grad;
      v = (opts.adam_beta2 * v.array() + (1 - opts.adam_beta2) * grad.array().square())
              .matrix();
      const double bc1 = 1 - std::pow(opts.adam_beta1, adam_t);
      const double bc2 = 1 - std::pow(opts.adam_beta2, adam_t);
      Eigen::VectorXd step =
          (spec.learning_rate * (m.array() / bc1) /
           ((v.array() / bc2).sqrt() + opts.adam_eps))
              .matrix();
      model.params.unflatten(model.params.flatten() - step);
    }
    const double epoch_loss = loss_sum / std::max(batches, 1);
    if (!std::isfinite(epoch_loss))
      throw Error("training diverged at epoch " + std::to_string(epoch));
    model.train_loss.push_back(epoch_loss);

    if (valid_set.size() > 0) {
      const double vr = rmse_on(model.params, valid_set);
      model.valid_rmse.push_back(vr);
      if (vr < best_rmse) {
        best_rmse = vr;
        best = model.params;
        model.best_epoch = epoch;
        stale = 0;
      } else if (++stale >= opts.patience) {
        break;
      }
    } else {
      model.best_epoch = epoch;
    }
  }
  if (valid_set.size() > 0 && model.best_epoch > 0) model.params = best;
  return model;
}

static void write_tensor(std::string& out, const char* name, const double* data,
                         Eigen::Index size) {
  out += "tensor ";
  out += name;
  out += ' ';
  out += std::to_string(size);
  out += '\n';
  char buf[48];
  for (Eigen::Index k = 0; k < size; ++k) {
    std::snprintf(buf, sizeof buf, "%a", data[k]);
    out += buf;
    out += (k + 1) % 8 == 0 || k + 1 == size ? '\n' : ' ';
  }
}

void save_checkpoint(const std::string& path, const TrainedModel& model) {
  std::string out = "fxlab-rnn-checkpoint v1\n";
  const RnnSpec& s = model.spec;
  out += "cell " + to_string(s.cell) + "\n";
  out += "input_dim " + std::to_string(s.input_dim) + "\n";
  out += "hidden_units " + std::to_string(s.hidden_units) + "\n";
  out += "timesteps " + std::to_string(s.timesteps) + "\n";
  out += "learning_rate " + fmt_exact(s.learning_rate) + "\n";
  out += "epochs " + std::to_string(s.epochs) + "\n";
  out += "batch_size " + std::to_string(s.batch_size) + "\n";
  out += "seed " + std::to_string(s.seed) + "\n";
  out += "best_epoch " + std::to_string(model.best_epoch) + "\n";
  write_tensor(out, "train_loss", model.train_loss.data(),
               static_cast<Eigen::Index>(model.train_loss.size()));
  write_tensor(out, "valid_rmse", model.valid_rmse.data(),
               static_cast<Eigen::Index>(model.valid_rmse.size()));
  for (const auto& t : model.params.tensors())
    write_tensor(out, t.name.c_str(), t.data, t.size);
  write_file_atomic(path, out);
}

static double parse_checkpoint_double(const std::string& tok, const std::string& path) {
  char* end = nullptr;
  const double x = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw Error(path + ": malformed number '" + tok + "'");
  return x;
}

TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint: " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "fxlab-rnn-checkpoint" || version != "v1")
    throw Error(path + ": not a v1 rnn checkpoint");

  TrainedModel model;
  auto expect_key = [&](const char* key) {
    std::string k;
    in >> k;
    if (k != key) throw Error(path + ": expected '" + key + "', found '" + k + "'");
  };
  std::string tok;
  expect_key("cell");
  in >> tok;
  model.spec.cell = cell_kind_from_string(tok);
  expect_key("input_dim");
  in >> model.spec.input_dim;
  expect_key("hidden_units");
  in >> model.spec.hidden_units;
  expect_key("timesteps");
  in >> model.spec.timesteps;
  expect_key("learning_rate");
  in >> tok;
  model.spec.learning_rate = parse_checkpoint_double(tok, path);
  expect_key("epochs");
  in >> model.spec.epochs;
  expect_key("batch_size");
  in >> model.spec.batch_size;
  expect_key("seed");
  in >> model.spec.seed;
  expect_key("best_epoch");
  in >> model.best_epoch;
  if (!in) throw Error(path + ": truncated header");

  auto read_tensor = [&](const std::string& want, double* data, Eigen::Index size) {
    std::string kw, name;
    Eigen::Index n = 0;
    in >> kw >> name >> n;
    if (!in || kw != "tensor" || name != want || n != size)
      throw Error(path + ": bad tensor block (expected " + want + ")");
    for (Eigen::Index k = 0; k < size; ++k) {
      in >> tok;
      if (!in) throw Error(path + ": truncated tensor " + want);
      data[k] = parse_checkpoint_double(tok, path);
    }
  };
  auto read_sized = [&](const std::string& want, std::vector<double>& vec) {
    std::string kw, name;
    Eigen::Index n = 0;
    in >> kw >> name >> n;
    if (!in || kw != "tensor" || name != want)
      throw Error(path + ": bad tensor block (expected " + want + ")");
    vec.resize(static_cast<std::size_t>(n));
    for (auto& x : vec) {
      in >> tok;
      if (!in) throw Error(path + ": truncated tensor " + want);
      x = parse_checkpoint_double(tok, path);
    }
  };
  read_sized("train_loss", model.train_loss);
  read_sized("valid_rmse", model.valid_rmse);
  model.params = RnnParams::zeros(model.spec);
  for (auto& t : model.params.tensors()) read_tensor(t.name, t.data, t.size);
  return model;
}

}  // namespace fxlab
