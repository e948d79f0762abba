#pragma once

// Typed graph attention model for arrival-time prediction, written against a
// plain dense-parameter core (no autograd framework).
//
// Architecture, in forward order:
//   * typed encoders: one affine+ReLU map per node/edge type into d=64
//     (floor: flattened occupancy patch; robot: priority scalar; eta edge:
//     [duration/T_scale, arrival/T_scale, timestamp]).
//   * attention layer: per head h (H=3) and node type, a 64x64 transform
//     W[h][type]; per (source type, destination type) pair a 128-d attention
//     vector.  Scores use LeakyReLU(0.2); softmax runs over each
//     destination's sorted in-neighborhood including the self-loop.  The
//     three head outputs are concatenated (192) and projected back to 64
//     through a shared affine+ReLU so node state keeps a fixed width across
//     recurrent steps.
//   * edge updater: ReLU(W [h_robot | h_floor | e] + b) on eta features.
//   * decoder: affine 64 -> 1, zero-initialized.  Predictions are residual:
//     predicted arrival = current arrival feature + decoder output * T_scale,
//     so a freshly initialized model reproduces the naive estimate exactly.
//
// The recurrent pass decodes eta edges one timestamp at a time.  After
// decoding timestamp T, each decoded edge's arrival feature is overwritten
// with a feedback value and the same robot's later edges shift by the same
// delta:
//   * DMS and any inference pass feed back the model's own prediction;
//   * IMS training feeds back the ground-truth label (teacher forcing), and
//     gradients do not flow through the injected constants.
// IMS inference therefore runs the exact same computation as DMS inference;
// the two regimes differ only in the weights training produces.
//
// Training: MAPE loss (in percent) over all labelled eta edges,
// reverse-mode gradients through the full unroll (hand-written tape), Adam
// with a step-decayed learning rate.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fleeta/hetgraph.hpp"

namespace fleeta::nn {

struct NnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : NnError {
  using NnError::NnError;
};
struct NaNDetected : NnError {
  using NnError::NnError;
};
struct MissingLabels : NnError {
  using NnError::NnError;
};
struct ZeroLabel : NnError {
  using NnError::NnError;
};

constexpr int kDim = 64;
constexpr int kHeads = 3;
constexpr int kNodeTypes = 2;  // 0 = floor, 1 = robot

// One dense parameter block (row-major matrix; cols == 1 for vectors) with
// its gradient buffer and Adam moment estimates.
struct Param {
  int rows = 0;
  int cols = 0;
  std::vector<double> w;
  std::vector<double> g;
  std::vector<double> adam_m;
  std::vector<double> adam_v;

  void resize(int r, int c) {
    rows = r;
    cols = c;
    w.assign(static_cast<size_t>(r) * c, 0.0);
    g = adam_m = adam_v = w;
  }
  size_t size() const { return w.size(); }
};

struct ModelParams {
  int patch_dim = 0;  // floor-encoder input width (tile_size^2)

  Param enc_floor_w, enc_floor_b;  // d x patch_dim, d
  Param enc_robot_w, enc_robot_b;  // d x 1, d
  Param enc_eta_w, enc_eta_b;      // d x 3, d
  Param head_w[kHeads][kNodeTypes];             // d x d node transforms
  Param attn[kHeads][kNodeTypes][kNodeTypes];   // 2d attention vectors
  Param proj_w, proj_b;  // d x (H*d), d  -- head concat back to d
  Param edge_w, edge_b;  // d x 3d, d
  Param dec_w, dec_b;    // 1 x d, 1

  // Visits every block in a fixed order (init, Adam, checkpoints, and the
  // gradient checker all rely on this order being stable).
  template <typename F>
  void for_each(F&& f) {
    f("enc_floor_w", enc_floor_w);
    f("enc_floor_b", enc_floor_b);
    f("enc_robot_w", enc_robot_w);
    f("enc_robot_b", enc_robot_b);
    f("enc_eta_w", enc_eta_w);
    f("enc_eta_b", enc_eta_b);
    for (int h = 0; h < kHeads; ++h)
      for (int t = 0; t < kNodeTypes; ++t)
        f("head_w_" + std::to_string(h) + "_" + std::to_string(t),
          head_w[h][t]);
    for (int h = 0; h < kHeads; ++h)
      for (int s = 0; s < kNodeTypes; ++s)
        for (int d = 0; d < kNodeTypes; ++d)
          f("attn_" + std::to_string(h) + "_" + std::to_string(s) + "_" +
                std::to_string(d),
            attn[h][s][d]);
    f("proj_w", proj_w);
    f("proj_b", proj_b);
    f("edge_w", edge_w);
    f("edge_b", edge_b);
    f("dec_w", dec_w);
    f("dec_b", dec_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](const std::string& name, Param& p) {
          f(name, static_cast<const Param&>(p));
        });
  }
};

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases, and a
// zero decoder so the initial model equals the naive baseline.
ModelParams init_params(int patch_dim, uint64_t seed);

void zero_grad(ModelParams& params);

// Throws NaNDetected (tagged with `context`) if any weight or gradient is
// not finite.
void check_finite(const ModelParams& params, const std::string& context);

enum class Mode { IMS, DMS };

struct TrainConfig {
  double lr = 0.001;
  double lr_decay = 0.75;  // applied every lr_decay_every epochs
  int lr_decay_every = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 20;
  Mode mode = Mode::DMS;
  uint64_t seed = 0;
};

double learning_rate(const TrainConfig& config, int epoch);

// One Adam update from the accumulated gradients.  `step` is the running
// update counter (for bias correction) and is incremented.
void adam_step(ModelParams& params, const TrainConfig& config, int epoch,
               long long& step);

// ---- building blocks (exposed for unit tests) ----

// Node embeddings, floors first (node id = FloorNode id) then robots
// (node id = floor count + robot index).  Returns n_nodes * kDim values.
std::vector<double> encode_nodes(const HetGraph& graph,
                                 const ModelParams& params);

// Embedding of one eta edge; `arrival` is the (possibly updated) arrival
// feature to encode in place of the edge's stored naive arrival.
std::vector<double> encode_eta(const EtaEdge& edge, double arrival,
                               double t_scale, const ModelParams& params);

// One attention round over the graph's association + eta adjacency.
std::vector<double> heat_layer(const HetGraph& graph,
                               const std::vector<double>& node_feats,
                               const ModelParams& params);

// e' = ReLU(W [h_robot | h_floor | e] + b); inputs are kDim each.
std::vector<double> edge_update(const double* h_robot, const double* h_floor,
                                const double* eta_feat,
                                const ModelParams& params);

// Decoder output before the T_scale rescaling.
double decode_delta(const double* eta_feat, const ModelParams& params);

// ---- recurrent model ----

struct ForwardResult {
  // Absolute predicted arrival per eta edge (graph edge order).
  std::vector<double> predictions;
};

// Runs the full recurrent pass.  `training` only matters for Mode::IMS,
// which then requires every eta edge to carry a label.
ForwardResult forward_recurrent(const HetGraph& graph,
                                const ModelParams& params, Mode mode,
                                bool training);

// Forward in training semantics plus reverse-mode gradient accumulation
// into the parameter gradient buffers.  Returns the MAPE loss (percent)
// over all eta edges, which must all be labelled.
double backward(const HetGraph& graph, ModelParams& params, Mode mode);

// Loss of a training-semantics forward pass without touching gradients
// (used by the finite-difference gradient checker).
double training_loss(const HetGraph& graph, const ModelParams& params,
                     Mode mode);

// ---- metrics ----

double mape(const std::vector<double>& pred,
            const std::vector<double>& label);  // percent
double rmse(const std::vector<double>& pred, const std::vector<double>& label);
double mae(const std::vector<double>& pred, const std::vector<double>& label);

// ---- checkpoints ----

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace fleeta::nn
