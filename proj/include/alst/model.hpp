#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "alst/common.hpp"

namespace alst {

enum class Variant { bilstm, attention_bilstm };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// One LSTM direction. Gate blocks are stacked row-wise in the order
/// input, forget, cell candidate, output: rows [k*H, (k+1)*H) of `W`, `U`
/// and `b` belong to gate k.
struct LstmParams {
  Eigen::MatrixXd W;  // 4H x input_dim, applied to x_t
  Eigen::MatrixXd U;  // 4H x H, applied to h_{t-1}
  Eigen::VectorXd b;  // 4H

  enum Gate : int { input = 0, forget = 1, cell = 2, output = 3 };

  LstmParams() = default;
  LstmParams(int input_dim, int hidden_dim);

  int input_dim() const { return static_cast<int>(W.cols()); }
  int hidden_dim() const { return static_cast<int>(U.cols()); }

  auto W_gate(Gate g) { return W.middleRows(g * hidden_dim(), hidden_dim()); }
  auto U_gate(Gate g) { return U.middleRows(g * hidden_dim(), hidden_dim()); }
  auto b_gate(Gate g) { return b.segment(g * hidden_dim(), hidden_dim()); }
};

struct CellState {
  Eigen::VectorXd C;
  Eigen::VectorXd h;

  static CellState zeros(int hidden_dim) {
    return {Eigen::VectorXd::Zero(hidden_dim), Eigen::VectorXd::Zero(hidden_dim)};
  }
};

struct AttentionParams {
  Eigen::MatrixXd W_w;  // d_a x 2H
  Eigen::VectorXd b_w;  // d_a
  Eigen::VectorXd u_w;  // d_a, context vector

  AttentionParams() = default;
  AttentionParams(int feature_dim, int attention_dim);

  int attention_dim() const { return static_cast<int>(W_w.rows()); }
};

struct OutputParams {
  Eigen::RowVectorXd W_z;  // 1 x 2H
  double b_z = 0.0;
};

/// Everything needed to score a clip: weights, variant, and the feature
/// settings the weights were trained against.
struct ModelParams {
  Variant variant = Variant::attention_bilstm;
  LstmParams forward;
  LstmParams backward;
  std::optional<AttentionParams> attention;
  OutputParams output;
  std::string feature_fingerprint;
  /// Waveform length (samples) clips are tail-padded to before
  /// featurization; 0 disables padding.
  std::size_t pad_length = 0;
  /// Free-form UTF-8 JSON describing the training run; persisted verbatim.
  std::string train_config_json = "{}";

  int input_dim() const { return forward.input_dim(); }
  int hidden_dim() const { return forward.hidden_dim(); }

  /// Zero-valued copy with identical shapes (gradient / optimizer buffers).
  ModelParams zeros_like() const;

  /// Throws alst::Error on any shape inconsistency or non-finite entry.
  void validate() const;
};

/// Builds a model with uniform Glorot initialisation in
/// +-sqrt(6 / (fan_in + fan_out)) per gate matrix, zero biases, and forget
/// gate bias 1. attention_dim <= 0 selects 2 * hidden_dim.
ModelParams init_model(Variant variant, int input_dim, int hidden_dim, int attention_dim,
                       std::uint64_t seed);

/// Visits every trainable tensor as (name, Eigen::Ref<MatrixXd-like>). The
/// order is fixed; serialization, Adam, clipping and gradient checks all
/// rely on it.
template <typename Model, typename Fn>
void for_each_tensor(Model& m, Fn&& fn) {
  fn("forward.W", m.forward.W);
  fn("forward.U", m.forward.U);
  fn("forward.b", m.forward.b);
  fn("backward.W", m.backward.W);
  fn("backward.U", m.backward.U);
  fn("backward.b", m.backward.b);
  if (m.attention) {
    fn("attention.W_w", m.attention->W_w);
    fn("attention.b_w", m.attention->b_w);
    fn("attention.u_w", m.attention->u_w);
  }
  fn("output.W_z", m.output.W_z);
  auto bz = Eigen::Map<std::conditional_t<std::is_const_v<Model>, const Eigen::VectorXd,
                                          Eigen::VectorXd>>(&m.output.b_z, 1);
  fn("output.b_z", bz);
}

std::size_t parameter_count(const ModelParams& m);

/// Sqrt of the sum of squares over every tensor.
double global_norm(const ModelParams& m);

}  // namespace alst
