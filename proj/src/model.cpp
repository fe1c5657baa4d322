#include "alst/model.hpp"

#include <cmath>

namespace alst {
namespace {

void glorot(Eigen::Ref<Eigen::MatrixXd> block, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = rng.uniform(-limit, limit);
  }
}

template <typename T>
void require_finite(const char* name, const T& tensor) {
  if (!tensor.allFinite()) throw Error(std::string("non-finite entry in ") + name);
}

}  // namespace

const char* variant_name(Variant v) {
  return v == Variant::bilstm ? "bilstm" : "attention_bilstm";
}

Variant parse_variant(const std::string& name) {
  if (name == "bilstm") return Variant::bilstm;
  if (name == "attention_bilstm") return Variant::attention_bilstm;
  throw Error("unknown variant '" + name + "' (expected bilstm or attention_bilstm)");
}

LstmParams::LstmParams(int input_dim, int hidden_dim)
    : W(Eigen::MatrixXd::Zero(4 * hidden_dim, input_dim)),
      U(Eigen::MatrixXd::Zero(4 * hidden_dim, hidden_dim)),
      b(Eigen::VectorXd::Zero(4 * hidden_dim)) {}

AttentionParams::AttentionParams(int feature_dim, int attention_dim)
    : W_w(Eigen::MatrixXd::Zero(attention_dim, feature_dim)),
      b_w(Eigen::VectorXd::Zero(attention_dim)),
      u_w(Eigen::VectorXd::Zero(attention_dim)) {}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for_each_tensor(z, [](const char*, auto& t) { t.setZero(); });
  return z;
}

void ModelParams::validate() const {
  const int H = forward.hidden_dim();
  const int D = forward.input_dim();
  if (H < 1 || D < 1) throw Error("model: empty LSTM dimensions");
  for (const LstmParams* p : {&forward, &backward}) {
    if (p->W.rows() != 4 * H || p->W.cols() != D || p->U.rows() != 4 * H || p->U.cols() != H ||
        p->b.size() != 4 * H) {
      throw Error("model: LSTM tensor shapes inconsistent");
    }
  }
  if ((variant == Variant::attention_bilstm) != attention.has_value()) {
    throw Error("model: attention parameters present iff variant is attention_bilstm");
  }
  if (attention) {
    const auto& a = *attention;
    const auto A = a.W_w.rows();
    if (A < 1 || a.W_w.cols() != 2 * H || a.b_w.size() != A || a.u_w.size() != A) {
      throw Error("model: attention tensor shapes inconsistent");
    }
  }
  if (output.W_z.size() != 2 * H) throw Error("model: output weight shape inconsistent");
  for_each_tensor(*this, [](const char* name, const auto& t) { require_finite(name, t); });
}

ModelParams init_model(Variant variant, int input_dim, int hidden_dim, int attention_dim,
                       std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1) throw Error("init_model: dimensions must be positive");
  if (attention_dim <= 0) attention_dim = 2 * hidden_dim;

  Rng rng(derive_seed(seed, "init"));
  ModelParams m;
  m.variant = variant;
  for (LstmParams* p : {&m.forward, &m.backward}) {
    *p = LstmParams(input_dim, hidden_dim);
    for (auto g : {LstmParams::input, LstmParams::forget, LstmParams::cell, LstmParams::output}) {
      glorot(p->W_gate(g), input_dim, hidden_dim, rng);
      glorot(p->U_gate(g), hidden_dim, hidden_dim, rng);
    }
    p->b_gate(LstmParams::forget).setOnes();
  }
  if (variant == Variant::attention_bilstm) {
    AttentionParams a(2 * hidden_dim, attention_dim);
    glorot(a.W_w, 2 * hidden_dim, attention_dim, rng);
    glorot(a.u_w, attention_dim, 1, rng);
    m.attention = std::move(a);
  }
  m.output.W_z = Eigen::RowVectorXd::Zero(2 * hidden_dim);
  glorot(m.output.W_z, 2 * hidden_dim, 1, rng);
  m.output.b_z = 0.0;
  return m;
}

std::size_t parameter_count(const ModelParams& m) {
  std::size_t n = 0;
  for_each_tensor(m, [&](const char*, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

double global_norm(const ModelParams& m) {
  double sq = 0.0;
  for_each_tensor(m, [&](const char*, const auto& t) { sq += t.squaredNorm(); });
  return std::sqrt(sq);
}

}  // namespace alst
