#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "alst/mfcc.hpp"
#include "alst/model.hpp"

namespace alst {

inline constexpr double kDecisionThreshold = 0.5;
inline constexpr double kProbabilityClip = 1e-7;

double sigmoid(double x);

/// One LSTM step:
///   i = s(W_i x + U_i h + b_i), f = s(W_f x + U_f h + b_f),
///   g = tanh(W_c x + U_c h + b_c), o = s(W_o x + U_o h + b_o),
///   C = f*C_prev + i*g, h = o*tanh(C).
CellState lstm_cell_forward(const Eigen::VectorXd& x, const CellState& prev,
                            const LstmParams& p);

/// Gate activations of the step above, exposed for property tests.
struct GateValues {
  Eigen::VectorXd i, f, g, o;
};
GateValues lstm_gates(const Eigen::VectorXd& x, const CellState& prev, const LstmParams& p);

/// Column t of the result is h'_t = [h_fwd_t ; h_bwd_t] (2H x T). The forward
/// direction runs t = 1..T, the backward direction t = T..1, both from zero
/// state.
Eigen::MatrixXd bilstm_forward(const MfccMatrix& x_seq, const LstmParams& fwd,
                               const LstmParams& bwd);

/// States of one direction over the sequence in processing order, as H x T.
Eigen::MatrixXd lstm_sequence(const MfccMatrix& x_seq, const LstmParams& p, bool reverse);

struct AttentionOutput {
  Eigen::VectorXd v;      // 2H pooled representation
  Eigen::VectorXd alpha;  // T weights, sum to 1
};

/// u_t = tanh(W_w h'_t + b_w); alpha = softmax_t(u_t . u_w); v = sum alpha_t h'_t.
AttentionOutput attention_forward(const Eigen::MatrixXd& h_seq, const AttentionParams& a);

struct Prediction {
  double probability = 0.5;
  Label verdict = Label::mispronounced;
};

inline Label verdict_for(double p) {
  return p >= kDecisionThreshold ? Label::mispronounced : Label::correct;
}

/// Attention variant pools with attention; the plain variant reads
/// [h_fwd_T ; h_bwd_1], the last state each direction computes.
Prediction predict_probability(const MfccMatrix& x_seq, const ModelParams& m);

/// -w [y ln p + (1-y) ln(1-p)] with p clipped to [1e-7, 1 - 1e-7].
double weighted_bce(double p, int y, double w);

struct TrainingSample {
  const MfccMatrix* features = nullptr;
  int y = 0;
  double weight = 1.0;
};

struct LossAndGrad {
  double loss = 0.0;   // mean weighted loss over the batch
  ModelParams grads;   // d loss / d params, same shapes as the model
};

/// Mean weighted BCE over the batch and its exact gradient by reverse-mode
/// accumulation through the output head, attention, and both LSTM
/// directions (BPTT). Sequences of equal length are evaluated together.
LossAndGrad backward_pass(std::span<const TrainingSample> batch, const ModelParams& m);

/// Mean weighted loss only; same value backward_pass reports.
double batch_loss(std::span<const TrainingSample> batch, const ModelParams& m);

}  // namespace alst
