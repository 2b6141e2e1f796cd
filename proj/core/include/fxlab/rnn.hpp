#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fxlab/ingest.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

enum class CellKind { lstm, gru };

std::string to_string(CellKind c);
CellKind cell_kind_from_string(const std::string& s);

struct RnnSpec {
  CellKind cell = CellKind::lstm;
  int input_dim = 1;
  int hidden_units = 32;
  int timesteps = 8;
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

// One gate: weights over the concatenated [h_prev, x] plus bias.
struct Gate {
  Eigen::MatrixXd w;  // hidden x (hidden + input)
  Eigen::VectorXd b;  // hidden
};

// Recurrent cell weights plus the scalar output head. Gate order is
// f, i, c, o for LSTM and z, r, h for GRU.
struct RnnParams {
  CellKind cell = CellKind::lstm;
  int input_dim = 0;
  int hidden_units = 0;
  std::vector<Gate> gates;
  Eigen::VectorXd head_w;
  double head_b = 0.0;

  static RnnParams init(const RnnSpec& spec, Rng& rng);
  static RnnParams zeros(const RnnSpec& spec);

  // Named views over every parameter tensor, in a fixed order.
  struct TensorView {
    std::string name;
    double* data;
    Eigen::Index size;
  };
  std::vector<TensorView> tensors();
  std::vector<TensorView> tensors() const;  // const_cast-free read access

  Eigen::Index parameter_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

// Single step of the LSTM recurrence. Batched: x_t is input x batch,
// h_prev/c_prev are hidden x batch.
struct LstmStepOut {
  Eigen::MatrixXd h;
  Eigen::MatrixXd c;
  // gate activations retained for backprop
  Eigen::MatrixXd f, i, cbar, o, tanh_c, z_in;
};

LstmStepOut lstm_cell_step(const RnnParams& params, const Eigen::MatrixXd& x_t,
                           const Eigen::MatrixXd& h_prev,
                           const Eigen::MatrixXd& c_prev);

struct GruStepOut {
  Eigen::MatrixXd h;
  Eigen::MatrixXd zg, r, hbar, z_in, zr_in, h_prev;
};

GruStepOut gru_cell_step(const RnnParams& params, const Eigen::MatrixXd& x_t,
                         const Eigen::MatrixXd& h_prev);

// Unrolls the cell over one window (timesteps x features) from zero state
// and applies the linear head to the final hidden state.
double rnn_forward(const RnnParams& params, const Eigen::MatrixXd& window);

// Predictions for a set of windows.
Eigen::VectorXd rnn_forward_set(const RnnParams& params,
                                const std::vector<Eigen::MatrixXd>& windows);

// Mean squared error over the batch plus full BPTT gradients.
struct LossAndGrads {
  double loss = 0.0;
  RnnParams grads;
};

LossAndGrads loss_and_gradients(const RnnParams& params,
                                const std::vector<Eigen::MatrixXd>& windows,
                                const Eigen::VectorXd& targets);

struct TrainedModel {
  RnnSpec spec;
  RnnParams params;
  std::vector<double> train_loss;  // mean minibatch MSE per epoch
  std::vector<double> valid_rmse;  // per epoch; empty without a valid set
  int best_epoch = 0;              // 1-based; 0 = never improved / no epochs
};

// Minibatch Adam with gradient-norm clipping and early stopping on
// validation RMSE. Deterministic for a fixed spec.seed.
struct TrainOptions {
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int patience = 20;
};

TrainedModel train_rnn(const RnnSpec& spec, const SupervisedSet& train_set,
                       const SupervisedSet& valid_set,
                       const TrainOptions& opts = {});

double rmse_on(const RnnParams& params, const SupervisedSet& set);

// Text checkpoint with hexfloat tensors; load is bit-exact.
void save_checkpoint(const std::string& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::string& path);

}  // namespace fxlab
