// lstm.hpp — per-frame binary sequence classifier: a single LSTM layer
// (standard cell, no peepholes) with a 2-class softmax head. Trained by
// plain SGD, one full sequence per step, with exact backpropagation
// through time and global-norm gradient clipping.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "completion/hmm.hpp"  // TrainSequence
#include "completion/types.hpp"

namespace completion {

// Gate blocks are packed along rows of the (4H x *) matrices in the fixed
// order: input, forget, cell-candidate, output.
struct LstmModel {
  Eigen::MatrixXd input_weights;      // 4H x k
  Eigen::MatrixXd recurrent_weights;  // 4H x H
  Eigen::VectorXd gate_biases;        // 4H
  Eigen::MatrixXd output_weights;     // 2 x H
  Eigen::Vector2d output_bias;

  Eigen::Index hidden_size() const { return recurrent_weights.cols(); }
  Eigen::Index input_dim() const { return input_weights.cols(); }
};

struct TrainConfig {
  int epochs = 25;
  double lr_first_epoch = 1e-3;  // dropped to lr_rest after the first epoch
  double lr_rest = 1e-4;
  std::uint64_t seed = 0;
  double grad_clip_norm = 5.0;
  double init_scale = 0.08;
  Eigen::Index hidden_size = 128;
};

// Forward-pass result plus every activation backprop needs. Matrices are
// T x H except probs/logits (T x 2).
struct LstmForward {
  Eigen::MatrixXd probs;   // softmax outputs, rows sum to 1
  Eigen::MatrixXd logits;
  Eigen::MatrixXd gate_i, gate_f, gate_g, gate_o;
  Eigen::MatrixXd cell, cell_tanh, hidden;
};

// Initial hidden and cell state are zero. Throws ValidationError on a
// dimension mismatch and TrainError naming the frame if an activation goes
// non-finite.
LstmForward lstm_forward(const LstmModel& model, const Eigen::MatrixXd& seq);

// Mean over frames of the cross-entropy between softmax output and the
// one-hot label, computed stably from logits.
double lstm_loss(const LstmForward& fwd, const LabelVector& labels);

struct LstmGradients {
  Eigen::MatrixXd input_weights;
  Eigen::MatrixXd recurrent_weights;
  Eigen::VectorXd gate_biases;
  Eigen::MatrixXd output_weights;
  Eigen::Vector2d output_bias;

  double global_norm() const;
  void scale(double factor);
};

// Exact BPTT gradients of the mean-frame cross-entropy loss.
LstmGradients lstm_gradients(const LstmModel& model, const Eigen::MatrixXd& seq,
                             const LabelVector& labels,
                             double* loss_out = nullptr);

struct EpochLog {
  int epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double mean_loss = 0.0;
};

// Parameters are drawn uniformly from [-init_scale, init_scale] with the
// seeded generator, then the forget-gate bias block is set to 1. Each epoch
// visits the sequences in a freshly shuffled order; one SGD step per
// sequence. Bit-reproducible for a fixed seed.
LstmModel train_lstm(const std::vector<TrainSequence>& sequences,
                     const TrainConfig& config,
                     std::vector<EpochLog>* log = nullptr);

// Per-frame argmax of the softmax output; ties go to Pre. Deliberately not
// monotonised: the model may flicker back to Pre.
LabelVector lstm_predict(const LstmModel& model, const Eigen::MatrixXd& seq);

// CSV bundle of the five parameter blocks; the JSON sidecar carrying
// (hidden_size, input_dim, train config) is written by the harness.
std::string lstm_to_csv(const LstmModel& model);
LstmModel lstm_from_csv(const std::string& content);

}  // namespace completion
