#include "fleeta/nn/model.hpp"

#include <cmath>

#include "fleeta/rng.hpp"

namespace fleeta::nn {

ModelParams init_params(int patch_dim, uint64_t seed) {
  if (patch_dim < 1) throw ShapeMismatch("patch_dim must be positive");
  ModelParams p;
  p.patch_dim = patch_dim;
  p.enc_floor_w.resize(kDim, patch_dim);
  p.enc_floor_b.resize(kDim, 1);
  p.enc_robot_w.resize(kDim, 1);
  p.enc_robot_b.resize(kDim, 1);
  p.enc_eta_w.resize(kDim, 3);
  p.enc_eta_b.resize(kDim, 1);
  for (int h = 0; h < kHeads; ++h)
    for (int t = 0; t < kNodeTypes; ++t) p.head_w[h][t].resize(kDim, kDim);
  for (int h = 0; h < kHeads; ++h)
    for (int s = 0; s < kNodeTypes; ++s)
      for (int d = 0; d < kNodeTypes; ++d) p.attn[h][s][d].resize(2 * kDim, 1);
  p.proj_w.resize(kDim, kHeads * kDim);
  p.proj_b.resize(kDim, 1);
  p.edge_w.resize(kDim, 3 * kDim);
  p.edge_b.resize(kDim, 1);
  p.dec_w.resize(1, kDim);
  p.dec_b.resize(1, 1);

  // Weight matrices and attention vectors draw from
  // uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)); biases start at zero and the
  // decoder stays all-zero so the untrained model reproduces naive arrivals.
  auto rng = make_rng(seed);
  p.for_each([&](const std::string& name, Param& block) {
    if (name == "dec_w" || name == "dec_b") return;
    if (block.cols == 1 && name.size() >= 2 &&
        name.compare(name.size() - 2, 2, "_b") == 0)
      return;
    int fan_in = block.cols == 1 ? block.rows : block.cols;
    double bound = std::sqrt(1.0 / fan_in);
    for (double& v : block.w) v = (2.0 * uniform01(rng) - 1.0) * bound;
  });
  return p;
}

void zero_grad(ModelParams& params) {
  params.for_each([](const std::string&, Param& block) {
    std::fill(block.g.begin(), block.g.end(), 0.0);
  });
}

void check_finite(const ModelParams& params, const std::string& context) {
  params.for_each([&](const std::string& name, const Param& block) {
    for (double v : block.w)
      if (!std::isfinite(v))
        throw NaNDetected("non-finite weight in " + name + " (" + context +
                          ")");
    for (double v : block.g)
      if (!std::isfinite(v))
        throw NaNDetected("non-finite gradient in " + name + " (" + context +
                          ")");
  });
}

double learning_rate(const TrainConfig& config, int epoch) {
  return config.lr *
         std::pow(config.lr_decay, epoch / config.lr_decay_every);
}

void adam_step(ModelParams& params, const TrainConfig& config, int epoch,
               long long& step) {
  ++step;
  const double lr = learning_rate(config, epoch);
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  params.for_each([&](const std::string&, Param& block) {
    for (size_t i = 0; i < block.w.size(); ++i) {
      block.adam_m[i] =
          config.beta1 * block.adam_m[i] + (1.0 - config.beta1) * block.g[i];
      block.adam_v[i] = config.beta2 * block.adam_v[i] +
                        (1.0 - config.beta2) * block.g[i] * block.g[i];
      double m_hat = block.adam_m[i] / bc1;
      double v_hat = block.adam_v[i] / bc2;
      block.w[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  });
}

}  // namespace fleeta::nn
