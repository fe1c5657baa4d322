#include "alst/optim.hpp"

#include <cmath>
#include <vector>

namespace alst {

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               std::uint64_t t, const AdamConfig& cfg) {
  if (t < 1) throw Error("adam_step: step index must be >= 1");

  std::vector<Eigen::Map<const Eigen::ArrayXd>> g;
  for_each_tensor(grads, [&](const char* name, const auto& tensor) {
    if (!tensor.allFinite()) {
      throw Error(std::string("non-finite gradient in ") + name + "; training aborted");
    }
    g.emplace_back(tensor.data(), tensor.size());
  });

  std::vector<Eigen::Map<Eigen::ArrayXd>> m, v;
  for_each_tensor(state.m, [&](const char*, auto& x) { m.emplace_back(x.data(), x.size()); });
  for_each_tensor(state.v, [&](const char*, auto& x) { v.emplace_back(x.data(), x.size()); });
  if (m.size() != g.size() || v.size() != g.size()) throw Error("adam_step: state shape mismatch");

  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  std::size_t k = 0;
  for_each_tensor(params, [&](const char*, auto& x) {
    if (m[k].size() != x.size() || g[k].size() != x.size()) {
      throw Error("adam_step: state shape mismatch");
    }
    Eigen::Map<Eigen::ArrayXd> theta(x.data(), x.size());
    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k].square();
    theta -= cfg.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + cfg.epsilon);
    ++k;
  });
  state.steps = t;
}

double clip_global_norm(ModelParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for_each_tensor(grads, [&](const char*, auto& x) { x *= s; });
  }
  return norm;
}

}  // namespace alst
