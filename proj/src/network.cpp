#include "alst/network.hpp"

#include <cmath>
#include <map>

namespace alst {
namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;

ArrayXXd sigmoid_array(const ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

// Activations of one direction over a batch of equal-length sequences, in
// processing order (step s of the backward direction reads time T-1-s).
struct DirectionTrace {
  std::vector<ArrayXXd> i, f, g, o, C, h;  // each H x B
};

struct StepOut {
  ArrayXXd i, f, g, o, C, h;
};

StepOut lstm_step(const LstmParams& p, const MatrixXd& x, const MatrixXd& h_prev,
                  const ArrayXXd& C_prev) {
  const Eigen::Index H = p.hidden_dim();
  MatrixXd z = p.W * x;
  z.noalias() += p.U * h_prev;
  z.colwise() += p.b;
  StepOut s;
  s.i = sigmoid_array(z.middleRows(0 * H, H).array());
  s.f = sigmoid_array(z.middleRows(1 * H, H).array());
  s.g = z.middleRows(2 * H, H).array().tanh();
  s.o = sigmoid_array(z.middleRows(3 * H, H).array());
  s.C = s.f * C_prev + s.i * s.g;
  s.h = s.o * s.C.tanh();
  return s;
}

DirectionTrace run_direction(const LstmParams& p, const std::vector<MatrixXd>& xs,
                             bool reverse) {
  const auto T = xs.size();
  const Eigen::Index H = p.hidden_dim();
  const Eigen::Index B = xs.front().cols();
  DirectionTrace tr;
  for (auto* v : {&tr.i, &tr.f, &tr.g, &tr.o, &tr.C, &tr.h}) v->reserve(T);
  ArrayXXd h = ArrayXXd::Zero(H, B);
  ArrayXXd C = ArrayXXd::Zero(H, B);
  for (std::size_t s = 0; s < T; ++s) {
    const auto& x = xs[reverse ? T - 1 - s : s];
    StepOut out = lstm_step(p, x, h.matrix(), C);
    h = out.h;
    C = out.C;
    tr.i.push_back(std::move(out.i));
    tr.f.push_back(std::move(out.f));
    tr.g.push_back(std::move(out.g));
    tr.o.push_back(std::move(out.o));
    tr.C.push_back(std::move(out.C));
    tr.h.push_back(std::move(out.h));
  }
  return tr;
}

// Inputs of a same-length group rearranged per time step: xs[t] is D x B.
std::vector<MatrixXd> gather_inputs(const std::vector<const MfccMatrix*>& seqs) {
  const Eigen::Index T = seqs.front()->rows();
  const Eigen::Index D = seqs.front()->cols();
  const auto B = static_cast<Eigen::Index>(seqs.size());
  std::vector<MatrixXd> xs(static_cast<std::size_t>(T), MatrixXd(D, B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& m = *seqs[static_cast<std::size_t>(b)];
    for (Eigen::Index t = 0; t < T; ++t) xs[static_cast<std::size_t>(t)].col(b) = m.row(t).transpose();
  }
  return xs;
}

struct ForwardTrace {
  std::vector<MatrixXd> xs;
  DirectionTrace fwd, bwd;
  std::vector<MatrixXd> hcat;  // per time t: 2H x B (attention only)
  std::vector<ArrayXXd> u;     // per time t: A x B (attention only)
  ArrayXXd alpha;              // T x B (attention only)
  MatrixXd v;                  // 2H x B
  Eigen::ArrayXd p;            // B
};

ForwardTrace forward_group(const std::vector<const MfccMatrix*>& seqs, const ModelParams& m) {
  for (const auto* s : seqs) {
    if (s->rows() < 1) throw Error("empty feature sequence");
    if (s->cols() != m.input_dim()) {
      throw Error("feature dimension " + std::to_string(s->cols()) + " does not match model input " +
                  std::to_string(m.input_dim()));
    }
  }
  ForwardTrace tr;
  tr.xs = gather_inputs(seqs);
  const auto T = tr.xs.size();
  const Eigen::Index B = tr.xs.front().cols();
  const Eigen::Index H = m.hidden_dim();
  tr.fwd = run_direction(m.forward, tr.xs, false);
  tr.bwd = run_direction(m.backward, tr.xs, true);

  if (m.attention) {
    const auto& a = *m.attention;
    tr.hcat.resize(T);
    tr.u.resize(T);
    tr.alpha.resize(static_cast<Eigen::Index>(T), B);
    for (std::size_t t = 0; t < T; ++t) {
      MatrixXd hc(2 * H, B);
      hc.topRows(H) = tr.fwd.h[t].matrix();
      hc.bottomRows(H) = tr.bwd.h[T - 1 - t].matrix();
      MatrixXd pre = a.W_w * hc;
      pre.colwise() += a.b_w;
      tr.u[t] = pre.array().tanh();
      tr.alpha.row(static_cast<Eigen::Index>(t)) = (a.u_w.transpose() * tr.u[t].matrix()).array();
      tr.hcat[t] = std::move(hc);
    }
    // Column-wise softmax over time with max subtraction.
    for (Eigen::Index b = 0; b < B; ++b) {
      auto col = tr.alpha.col(b);
      col = (col - col.maxCoeff()).exp();
      col /= col.sum();
    }
    tr.v = MatrixXd::Zero(2 * H, B);
    for (std::size_t t = 0; t < T; ++t) {
      tr.v.array() += tr.hcat[t].array().rowwise() *
                      tr.alpha.row(static_cast<Eigen::Index>(t));
    }
  } else {
    tr.v.resize(2 * H, B);
    tr.v.topRows(H) = tr.fwd.h.back().matrix();
    tr.v.bottomRows(H) = tr.bwd.h.back().matrix();
  }

  const Eigen::ArrayXd logits =
      ((m.output.W_z * tr.v).array() + m.output.b_z).transpose();
  tr.p = 1.0 / (1.0 + (-logits).exp());
  return tr;
}

void backward_direction(const LstmParams& p, const DirectionTrace& tr,
                        const std::vector<MatrixXd>& xs, bool reverse,
                        const std::vector<ArrayXXd>& dh_ext, LstmParams& grad) {
  const auto T = xs.size();
  const Eigen::Index H = p.hidden_dim();
  const Eigen::Index B = xs.front().cols();
  ArrayXXd dh_next = ArrayXXd::Zero(H, B);
  ArrayXXd dC_next = ArrayXXd::Zero(H, B);
  const ArrayXXd zeros = ArrayXXd::Zero(H, B);
  MatrixXd dz(4 * H, B);
  for (std::size_t s = T; s-- > 0;) {
    const auto& i = tr.i[s];
    const auto& f = tr.f[s];
    const auto& g = tr.g[s];
    const auto& o = tr.o[s];
    const ArrayXXd& C_prev = s > 0 ? tr.C[s - 1] : zeros;
    const ArrayXXd& h_prev = s > 0 ? tr.h[s - 1] : zeros;

    const ArrayXXd dh = dh_ext[s] + dh_next;
    const ArrayXXd tc = tr.C[s].tanh();
    const ArrayXXd dC = dC_next + dh * o * (1.0 - tc.square());

    dz.middleRows(0 * H, H) = (dC * g * i * (1.0 - i)).matrix();
    dz.middleRows(1 * H, H) = (dC * C_prev * f * (1.0 - f)).matrix();
    dz.middleRows(2 * H, H) = (dC * i * (1.0 - g.square())).matrix();
    dz.middleRows(3 * H, H) = (dh * tc * o * (1.0 - o)).matrix();

    const auto& x = xs[reverse ? T - 1 - s : s];
    grad.W.noalias() += dz * x.transpose();
    grad.U.noalias() += dz * h_prev.matrix().transpose();
    grad.b += dz.rowwise().sum();
    dh_next = (p.U.transpose() * dz).array();
    dC_next = dC * f;
  }
}

// Loss contribution and d loss / d logit for one sample; the clipped region
// of the loss is flat.
double logit_gradient(double p, int y, double w, double scale) {
  if (p <= kProbabilityClip || p >= 1.0 - kProbabilityClip) return 0.0;
  return scale * w * (p - static_cast<double>(y));
}

std::map<Eigen::Index, std::vector<std::size_t>> group_by_length(
    std::span<const TrainingSample> batch) {
  std::map<Eigen::Index, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (batch[k].features == nullptr) throw Error("training sample without features");
    if (batch[k].y != 0 && batch[k].y != 1) throw Error("training label must be 0 or 1");
    if (!(batch[k].weight > 0.0)) throw Error("sample weight must be positive");
    groups[batch[k].features->rows()].push_back(k);
  }
  return groups;
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

GateValues lstm_gates(const Eigen::VectorXd& x, const CellState& prev, const LstmParams& p) {
  if (x.size() != p.input_dim() || prev.h.size() != p.hidden_dim() ||
      prev.C.size() != p.hidden_dim()) {
    throw Error("lstm_cell_forward: shape mismatch");
  }
  const StepOut s = lstm_step(p, x, prev.h, prev.C.array());
  return {s.i.matrix(), s.f.matrix(), s.g.matrix(), s.o.matrix()};
}

CellState lstm_cell_forward(const Eigen::VectorXd& x, const CellState& prev,
                            const LstmParams& p) {
  if (x.size() != p.input_dim() || prev.h.size() != p.hidden_dim() ||
      prev.C.size() != p.hidden_dim()) {
    throw Error("lstm_cell_forward: shape mismatch");
  }
  const StepOut s = lstm_step(p, x, prev.h, prev.C.array());
  return {s.C.matrix(), s.h.matrix()};
}

Eigen::MatrixXd lstm_sequence(const MfccMatrix& x_seq, const LstmParams& p, bool reverse) {
  if (x_seq.rows() < 1) throw Error("lstm_sequence: empty sequence");
  if (x_seq.cols() != p.input_dim()) throw Error("lstm_sequence: shape mismatch");
  const auto tr = run_direction(p, gather_inputs({&x_seq}), reverse);
  MatrixXd out(p.hidden_dim(), x_seq.rows());
  for (std::size_t s = 0; s < tr.h.size(); ++s) out.col(static_cast<Eigen::Index>(s)) = tr.h[s].matrix();
  return out;
}

Eigen::MatrixXd bilstm_forward(const MfccMatrix& x_seq, const LstmParams& fwd,
                               const LstmParams& bwd) {
  if (x_seq.rows() < 1) throw Error("bilstm_forward: empty sequence");
  if (fwd.hidden_dim() != bwd.hidden_dim() || fwd.input_dim() != bwd.input_dim() ||
      x_seq.cols() != fwd.input_dim()) {
    throw Error("bilstm_forward: shape mismatch");
  }
  const auto xs = gather_inputs({&x_seq});
  const auto f = run_direction(fwd, xs, false);
  const auto b = run_direction(bwd, xs, true);
  const Eigen::Index H = fwd.hidden_dim();
  const auto T = xs.size();
  MatrixXd out(2 * H, static_cast<Eigen::Index>(T));
  for (std::size_t t = 0; t < T; ++t) {
    out.col(static_cast<Eigen::Index>(t)).head(H) = f.h[t].matrix();
    out.col(static_cast<Eigen::Index>(t)).tail(H) = b.h[T - 1 - t].matrix();
  }
  return out;
}

AttentionOutput attention_forward(const Eigen::MatrixXd& h_seq, const AttentionParams& a) {
  if (h_seq.cols() < 1) throw Error("attention_forward: empty sequence");
  if (h_seq.rows() != a.W_w.cols()) throw Error("attention_forward: shape mismatch");
  MatrixXd pre = a.W_w * h_seq;
  pre.colwise() += a.b_w;
  const Eigen::VectorXd scores = (a.u_w.transpose() * pre.array().tanh().matrix()).transpose();
  Eigen::VectorXd alpha = (scores.array() - scores.maxCoeff()).exp().matrix();
  alpha /= alpha.sum();
  return {h_seq * alpha, alpha};
}

Prediction predict_probability(const MfccMatrix& x_seq, const ModelParams& m) {
  const auto tr = forward_group({&x_seq}, m);
  const double p = tr.p(0);
  return {p, verdict_for(p)};
}

double weighted_bce(double p, int y, double w) {
  const double q = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
  return -w * (y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

double batch_loss(std::span<const TrainingSample> batch, const ModelParams& m) {
  if (batch.empty()) throw Error("batch_loss: empty batch");
  double total = 0.0;
  for (const auto& [len, idx] : group_by_length(batch)) {
    std::vector<const MfccMatrix*> seqs;
    for (auto k : idx) seqs.push_back(batch[k].features);
    const auto tr = forward_group(seqs, m);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& s = batch[idx[j]];
      total += weighted_bce(tr.p(static_cast<Eigen::Index>(j)), s.y, s.weight);
    }
  }
  return total / static_cast<double>(batch.size());
}

LossAndGrad backward_pass(std::span<const TrainingSample> batch, const ModelParams& m) {
  if (batch.empty()) throw Error("backward_pass: empty batch");
  LossAndGrad out;
  out.grads = m.zeros_like();
  ModelParams& g = out.grads;
  const double scale = 1.0 / static_cast<double>(batch.size());
  const Eigen::Index H = m.hidden_dim();

  for (const auto& [len, idx] : group_by_length(batch)) {
    std::vector<const MfccMatrix*> seqs;
    for (auto k : idx) seqs.push_back(batch[k].features);
    const auto tr = forward_group(seqs, m);
    const auto T = tr.xs.size();
    const auto B = static_cast<Eigen::Index>(idx.size());

    Eigen::RowVectorXd dlogit(B);
    for (Eigen::Index j = 0; j < B; ++j) {
      const auto& s = batch[idx[static_cast<std::size_t>(j)]];
      out.loss += weighted_bce(tr.p(j), s.y, s.weight) * scale;
      dlogit(j) = logit_gradient(tr.p(j), s.y, s.weight, scale);
    }

    g.output.W_z.noalias() += dlogit * tr.v.transpose();
    g.output.b_z += dlogit.sum();
    const MatrixXd dv = m.output.W_z.transpose() * dlogit;  // 2H x B

    std::vector<ArrayXXd> dh_fwd(T, ArrayXXd::Zero(H, B));
    std::vector<ArrayXXd> dh_bwd(T, ArrayXXd::Zero(H, B));

    if (m.attention) {
      const auto& a = *m.attention;
      auto& ga = *g.attention;
      ArrayXXd dalpha(static_cast<Eigen::Index>(T), B);
      for (std::size_t t = 0; t < T; ++t) {
        dalpha.row(static_cast<Eigen::Index>(t)) =
            (tr.hcat[t].array() * dv.array()).colwise().sum();
      }
      const Eigen::Array<double, 1, Eigen::Dynamic> expected =
          (tr.alpha * dalpha).colwise().sum();
      const ArrayXXd dscore = tr.alpha * (dalpha.rowwise() - expected);

      for (std::size_t t = 0; t < T; ++t) {
        const auto row = dscore.row(static_cast<Eigen::Index>(t));
        const MatrixXd du = a.u_w * row.matrix();  // A x B
        ga.u_w.noalias() += tr.u[t].matrix() * row.matrix().transpose();
        const MatrixXd dpre = (du.array() * (1.0 - tr.u[t].square())).matrix();
        ga.W_w.noalias() += dpre * tr.hcat[t].transpose();
        ga.b_w += dpre.rowwise().sum();
        const MatrixXd dh = (dv.array().rowwise() * tr.alpha.row(static_cast<Eigen::Index>(t))).matrix() +
                            a.W_w.transpose() * dpre;
        dh_fwd[t] = dh.topRows(H).array();
        dh_bwd[T - 1 - t] = dh.bottomRows(H).array();
      }
    } else {
      dh_fwd[T - 1] = dv.topRows(H).array();
      dh_bwd[T - 1] = dv.bottomRows(H).array();
    }

    backward_direction(m.forward, tr.fwd, tr.xs, false, dh_fwd, g.forward);
    backward_direction(m.backward, tr.bwd, tr.xs, true, dh_bwd, g.backward);
  }
  return out;
}

}  // namespace alst
