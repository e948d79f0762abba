#include <algorithm>
#include <cmath>
#include <limits>

#include "fleeta/nn/model.hpp"

namespace fleeta::nn {

namespace {

constexpr double kLeakySlope = 0.2;  // attention score activation

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// y = W x + b
void affine(const Param& w, const Param& b, const double* x, double* y) {
  for (int r = 0; r < w.rows; ++r)
    y[r] = b.w[r] + dot(&w.w[static_cast<size_t>(r) * w.cols], x, w.cols);
}

// Accumulates gradients of y = W x + b given dy; dx (optional) += W^T dy.
void affine_backward(Param& w, Param& b, const double* x, const double* dy,
                     double* dx) {
  for (int r = 0; r < w.rows; ++r) {
    b.g[r] += dy[r];
    double* gw = &w.g[static_cast<size_t>(r) * w.cols];
    const double* wr = &w.w[static_cast<size_t>(r) * w.cols];
    for (int c = 0; c < w.cols; ++c) {
      gw[c] += dy[r] * x[c];
      if (dx) dx[c] += wr[c] * dy[r];
    }
  }
}

// y = W x (bias-free node transforms)
void matmul(const Param& w, const double* x, double* y) {
  for (int r = 0; r < w.rows; ++r)
    y[r] = dot(&w.w[static_cast<size_t>(r) * w.cols], x, w.cols);
}

void matmul_backward(Param& w, const double* x, const double* dy, double* dx) {
  for (int r = 0; r < w.rows; ++r) {
    double* gw = &w.g[static_cast<size_t>(r) * w.cols];
    const double* wr = &w.w[static_cast<size_t>(r) * w.cols];
    for (int c = 0; c < w.cols; ++c) {
      gw[c] += dy[r] * x[c];
      if (dx) dx[c] += wr[c] * dy[r];
    }
  }
}

struct Adjacency {
  int n_floor = 0;
  int n_nodes = 0;
  // Sorted unique in-neighbor lists, self-loop included for every node.
  std::vector<std::vector<int>> in_nbrs;
  std::vector<std::vector<int>> edges_at;     // eta edge ids per timestamp
  std::vector<std::vector<int>> robot_edges;  // eta edge ids per robot

  int node_type(int v) const { return v < n_floor ? 0 : 1; }
};

Adjacency build_adjacency(const HetGraph& graph) {
  Adjacency adj;
  adj.n_floor = static_cast<int>(graph.static_layer.floors.size());
  adj.n_nodes = adj.n_floor + static_cast<int>(graph.robots.size());
  adj.in_nbrs.assign(adj.n_nodes, {});
  for (const auto& [src, dst] : graph.static_layer.assoc)
    adj.in_nbrs[dst].push_back(src);
  for (int v = adj.n_floor; v < adj.n_nodes; ++v) adj.in_nbrs[v].push_back(v);
  int steps = 0;
  for (const EtaEdge& e : graph.eta) {
    int robot_node = adj.n_floor + e.robot;
    adj.in_nbrs[e.floor].push_back(robot_node);
    adj.in_nbrs[robot_node].push_back(e.floor);
    steps = std::max(steps, e.timestamp + 1);
  }
  for (auto& nbrs : adj.in_nbrs) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  adj.edges_at.assign(steps, {});
  adj.robot_edges.assign(graph.robots.size(), {});
  for (size_t i = 0; i < graph.eta.size(); ++i) {
    adj.edges_at[graph.eta[i].timestamp].push_back(static_cast<int>(i));
    adj.robot_edges[graph.eta[i].robot].push_back(static_cast<int>(i));
  }
  return adj;
}

struct HeatScratch {
  std::vector<double> m;       // kHeads * n * kDim typed node transforms
  std::vector<double> concat;  // n * kHeads*kDim attention head outputs
  std::vector<double> r;       // n * kDim projection pre-activation
};

// Scores and softmax weights of one (destination, head) neighborhood.
void attention_weights(const Adjacency& adj, const ModelParams& p,
                       const HeatScratch& s, int v, int h,
                       std::vector<double>& pre, std::vector<double>& alpha) {
  const auto& nbrs = adj.in_nbrs[v];
  const int n = adj.n_nodes, tv = adj.node_type(v);
  const double* mv = &s.m[(static_cast<size_t>(h) * n + v) * kDim];
  double right[kNodeTypes];
  for (int t = 0; t < kNodeTypes; ++t)
    right[t] = dot(&p.attn[h][t][tv].w[kDim], mv, kDim);
  pre.assign(nbrs.size(), 0.0);
  alpha.assign(nbrs.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < nbrs.size(); ++i) {
    int tu = adj.node_type(nbrs[i]);
    pre[i] = dot(p.attn[h][tu][tv].w.data(),
                 &s.m[(static_cast<size_t>(h) * n + nbrs[i]) * kDim], kDim) +
             right[tu];
    alpha[i] = pre[i] > 0 ? pre[i] : kLeakySlope * pre[i];
    top = std::max(top, alpha[i]);
  }
  double total = 0.0;
  for (double& a : alpha) {
    a = std::exp(a - top);
    total += a;
  }
  for (double& a : alpha) a /= total;
}

// Fills the scratch for one attention round over node features `h_in`;
// the round's output is ReLU(scratch.r).
void heat_compute(const Adjacency& adj, const ModelParams& p,
                  const std::vector<double>& h_in, HeatScratch& s) {
  const int n = adj.n_nodes;
  s.m.assign(static_cast<size_t>(kHeads) * n * kDim, 0.0);
  s.concat.assign(static_cast<size_t>(n) * kHeads * kDim, 0.0);
  s.r.assign(static_cast<size_t>(n) * kDim, 0.0);
  for (int h = 0; h < kHeads; ++h)
    for (int u = 0; u < n; ++u)
      matmul(p.head_w[h][adj.node_type(u)], &h_in[static_cast<size_t>(u) * kDim],
             &s.m[(static_cast<size_t>(h) * n + u) * kDim]);
  std::vector<double> pre, alpha;
  for (int v = 0; v < n; ++v) {
    for (int h = 0; h < kHeads; ++h) {
      attention_weights(adj, p, s, v, h, pre, alpha);
      double* out = &s.concat[(static_cast<size_t>(v) * kHeads + h) * kDim];
      const auto& nbrs = adj.in_nbrs[v];
      for (size_t i = 0; i < nbrs.size(); ++i) {
        const double* mu = &s.m[(static_cast<size_t>(h) * n + nbrs[i]) * kDim];
        for (int d = 0; d < kDim; ++d) out[d] += alpha[i] * mu[d];
      }
    }
    affine(p.proj_w, p.proj_b, &s.concat[static_cast<size_t>(v) * kHeads * kDim],
           &s.r[static_cast<size_t>(v) * kDim]);
  }
}

// Converts a gradient w.r.t. the round's output into a gradient w.r.t. its
// input, accumulating parameter gradients.  `dh` holds d(output) on entry
// and d(input) on exit; `s` must have been filled for the same input.
void heat_backward(const Adjacency& adj, ModelParams& p,
                   const std::vector<double>& h_in, const HeatScratch& s,
                   std::vector<double>& dh) {
  const int n = adj.n_nodes;
  std::vector<double> dm(static_cast<size_t>(kHeads) * n * kDim, 0.0);
  std::vector<double> dh_in(static_cast<size_t>(n) * kDim, 0.0);
  std::vector<double> pre, alpha, dalpha;
  std::vector<double> dr(kDim), dc(static_cast<size_t>(kHeads) * kDim);
  for (int v = 0; v < n; ++v) {
    for (int d = 0; d < kDim; ++d) {
      double rv = s.r[static_cast<size_t>(v) * kDim + d];
      dr[d] = rv > 0 ? dh[static_cast<size_t>(v) * kDim + d] : 0.0;
    }
    std::fill(dc.begin(), dc.end(), 0.0);
    affine_backward(p.proj_w, p.proj_b,
                    &s.concat[static_cast<size_t>(v) * kHeads * kDim], dr.data(),
                    dc.data());
    const auto& nbrs = adj.in_nbrs[v];
    const int tv = adj.node_type(v);
    for (int h = 0; h < kHeads; ++h) {
      attention_weights(adj, p, s, v, h, pre, alpha);
      const double* dhead = &dc[static_cast<size_t>(h) * kDim];
      const double* mv = &s.m[(static_cast<size_t>(h) * n + v) * kDim];
      dalpha.assign(nbrs.size(), 0.0);
      double mix = 0.0;
      for (size_t i = 0; i < nbrs.size(); ++i) {
        dalpha[i] =
            dot(dhead, &s.m[(static_cast<size_t>(h) * n + nbrs[i]) * kDim], kDim);
        mix += alpha[i] * dalpha[i];
      }
      for (size_t i = 0; i < nbrs.size(); ++i) {
        int u = nbrs[i], tu = adj.node_type(u);
        const double* mu = &s.m[(static_cast<size_t>(h) * n + u) * kDim];
        double* dmu = &dm[(static_cast<size_t>(h) * n + u) * kDim];
        double ds = alpha[i] * (dalpha[i] - mix);
        double dp = ds * (pre[i] > 0 ? 1.0 : kLeakySlope);
        Param& a = p.attn[h][tu][tv];
        const double* left = a.w.data();
        const double* rightw = &a.w[kDim];
        double* dmv = &dm[(static_cast<size_t>(h) * n + v) * kDim];
        for (int d = 0; d < kDim; ++d) {
          a.g[d] += dp * mu[d];
          a.g[kDim + d] += dp * mv[d];
          dmu[d] += dp * left[d] + alpha[i] * dhead[d];
          dmv[d] += dp * rightw[d];
        }
      }
    }
  }
  for (int h = 0; h < kHeads; ++h)
    for (int u = 0; u < n; ++u)
      matmul_backward(p.head_w[h][adj.node_type(u)],
                      &h_in[static_cast<size_t>(u) * kDim],
                      &dm[(static_cast<size_t>(h) * n + u) * kDim],
                      &dh_in[static_cast<size_t>(u) * kDim]);
  dh = std::move(dh_in);
}

// Node encoders; fills pre-activations when requested (for ReLU masks).
std::vector<double> encode_nodes_impl(const HetGraph& graph,
                                      const ModelParams& p,
                                      std::vector<double>* pre_out) {
  const auto& floors = graph.static_layer.floors;
  const int n =
      static_cast<int>(floors.size()) + static_cast<int>(graph.robots.size());
  std::vector<double> pre(static_cast<size_t>(n) * kDim, 0.0);
  for (size_t i = 0; i < floors.size(); ++i) {
    if (static_cast<int>(floors[i].patch.size()) != p.enc_floor_w.cols)
      throw ShapeMismatch("floor patch width does not match the encoder");
    affine(p.enc_floor_w, p.enc_floor_b, floors[i].patch.data(),
           &pre[i * kDim]);
  }
  for (size_t r = 0; r < graph.robots.size(); ++r) {
    double x = graph.robots[r].priority;
    affine(p.enc_robot_w, p.enc_robot_b, &x,
           &pre[(floors.size() + r) * kDim]);
  }
  std::vector<double> h(pre.size());
  for (size_t i = 0; i < pre.size(); ++i) h[i] = std::max(0.0, pre[i]);
  if (pre_out) *pre_out = std::move(pre);
  return h;
}

struct EdgeRec {
  double x[3] = {0, 0, 0};
  std::vector<double> u_pre;  // eta encoder pre-activation
  std::vector<double> z_pre;  // edge-update pre-activation
  double arr = 0;             // arrival feature at decode time
  double pred = 0;
};

struct Tape {
  Adjacency adj;
  std::vector<std::vector<double>> h;  // node features per level, steps+1
  std::vector<EdgeRec> rec;
  std::vector<double> predictions;
};

// The recurrent pass shared by inference, loss evaluation, and training.
// Teacher forcing (label injection) applies exactly when mode == IMS and
// training is set.
void run_forward(const HetGraph& graph, const ModelParams& p, Mode mode,
                 bool training, Tape& tape) {
  const bool teacher = mode == Mode::IMS && training;
  tape.adj = build_adjacency(graph);
  const Adjacency& adj = tape.adj;
  if (teacher)
    for (const EtaEdge& e : graph.eta)
      if (!e.has_label)
        throw MissingLabels("teacher-forced training needs labelled edges");

  tape.h.clear();
  tape.h.push_back(encode_nodes_impl(graph, p, nullptr));
  tape.rec.assign(graph.eta.size(), {});
  tape.predictions.assign(graph.eta.size(), 0.0);
  std::vector<double> arr(graph.eta.size());
  for (size_t i = 0; i < graph.eta.size(); ++i)
    arr[i] = graph.eta[i].naive_arrival;

  HeatScratch scratch;
  std::vector<double> concat3(3 * kDim), f(kDim), q(kDim);
  const int steps = static_cast<int>(adj.edges_at.size());
  for (int t = 0; t < steps; ++t) {
    heat_compute(adj, p, tape.h.back(), scratch);
    std::vector<double> g(scratch.r.size());
    for (size_t i = 0; i < g.size(); ++i) g[i] = std::max(0.0, scratch.r[i]);
    tape.h.push_back(std::move(g));
    const std::vector<double>& nodes = tape.h.back();
    for (int ei : adj.edges_at[t]) {
      const EtaEdge& edge = graph.eta[ei];
      EdgeRec& rec = tape.rec[ei];
      rec.arr = arr[ei];
      rec.x[0] = edge.naive_duration / graph.t_scale;
      rec.x[1] = arr[ei] / graph.t_scale;
      rec.x[2] = static_cast<double>(edge.timestamp);
      rec.u_pre.assign(kDim, 0.0);
      affine(p.enc_eta_w, p.enc_eta_b, rec.x, rec.u_pre.data());
      for (int d = 0; d < kDim; ++d) f[d] = std::max(0.0, rec.u_pre[d]);
      const double* h_robot =
          &nodes[static_cast<size_t>(adj.n_floor + edge.robot) * kDim];
      const double* h_floor = &nodes[static_cast<size_t>(edge.floor) * kDim];
      std::copy(h_robot, h_robot + kDim, concat3.begin());
      std::copy(h_floor, h_floor + kDim, concat3.begin() + kDim);
      std::copy(f.begin(), f.end(), concat3.begin() + 2 * kDim);
      rec.z_pre.assign(kDim, 0.0);
      affine(p.edge_w, p.edge_b, concat3.data(), rec.z_pre.data());
      for (int d = 0; d < kDim; ++d) q[d] = std::max(0.0, rec.z_pre[d]);
      double out = p.dec_b.w[0] + dot(p.dec_w.w.data(), q.data(), kDim);
      rec.pred = arr[ei] + out * graph.t_scale;
      tape.predictions[ei] = rec.pred;
    }
    // Feedback: overwrite each decoded edge's arrival and shift the same
    // robot's later edges by the same delta.
    for (int ei : adj.edges_at[t]) {
      double v = teacher ? graph.eta[ei].label : tape.rec[ei].pred;
      double delta = v - arr[ei];
      arr[ei] = v;
      for (int ej : adj.robot_edges[graph.eta[ei].robot])
        if (graph.eta[ej].timestamp > t) arr[ej] += delta;
    }
  }
  for (double v : tape.predictions)
    if (!std::isfinite(v))
      throw NaNDetected("forward pass produced a non-finite prediction");
}

// MAPE (percent) over the tape's predictions; optionally its gradient.
double loss_from_tape(const HetGraph& graph, const Tape& tape,
                      std::vector<double>* dpred) {
  const size_t m = graph.eta.size();
  if (dpred) dpred->assign(m, 0.0);
  if (m == 0) return 0.0;
  double loss = 0.0;
  for (size_t i = 0; i < m; ++i) {
    if (!graph.eta[i].has_label)
      throw MissingLabels("loss needs a label on every eta edge");
    double y = graph.eta[i].label;
    if (y <= 0.0) throw ZeroLabel("MAPE needs strictly positive labels");
    double d = tape.predictions[i] - y;
    loss += std::abs(d) / y;
    if (dpred) (*dpred)[i] = (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / y;
  }
  const double scale = 100.0 / static_cast<double>(m);
  if (dpred)
    for (double& v : *dpred) v *= scale;
  return loss * scale;
}

}  // namespace

std::vector<double> encode_nodes(const HetGraph& graph,
                                 const ModelParams& params) {
  return encode_nodes_impl(graph, params, nullptr);
}

std::vector<double> encode_eta(const EtaEdge& edge, double arrival,
                               double t_scale, const ModelParams& params) {
  double x[3] = {edge.naive_duration / t_scale, arrival / t_scale,
                 static_cast<double>(edge.timestamp)};
  std::vector<double> h(kDim, 0.0);
  affine(params.enc_eta_w, params.enc_eta_b, x, h.data());
  for (double& v : h) v = std::max(0.0, v);
  return h;
}

std::vector<double> heat_layer(const HetGraph& graph,
                               const std::vector<double>& node_feats,
                               const ModelParams& params) {
  Adjacency adj = build_adjacency(graph);
  if (node_feats.size() != static_cast<size_t>(adj.n_nodes) * kDim)
    throw ShapeMismatch("node feature span does not match the graph");
  HeatScratch scratch;
  heat_compute(adj, params, node_feats, scratch);
  std::vector<double> out(scratch.r.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, scratch.r[i]);
  return out;
}

std::vector<double> edge_update(const double* h_robot, const double* h_floor,
                                const double* eta_feat,
                                const ModelParams& params) {
  std::vector<double> concat3(3 * kDim);
  std::copy(h_robot, h_robot + kDim, concat3.begin());
  std::copy(h_floor, h_floor + kDim, concat3.begin() + kDim);
  std::copy(eta_feat, eta_feat + kDim, concat3.begin() + 2 * kDim);
  std::vector<double> out(kDim, 0.0);
  affine(params.edge_w, params.edge_b, concat3.data(), out.data());
  for (double& v : out) v = std::max(0.0, v);
  return out;
}

double decode_delta(const double* eta_feat, const ModelParams& params) {
  return params.dec_b.w[0] + dot(params.dec_w.w.data(), eta_feat, kDim);
}

ForwardResult forward_recurrent(const HetGraph& graph,
                                const ModelParams& params, Mode mode,
                                bool training) {
  Tape tape;
  run_forward(graph, params, mode, training, tape);
  return {std::move(tape.predictions)};
}

double training_loss(const HetGraph& graph, const ModelParams& params,
                     Mode mode) {
  Tape tape;
  run_forward(graph, params, mode, true, tape);
  return loss_from_tape(graph, tape, nullptr);
}

double backward(const HetGraph& graph, ModelParams& params, Mode mode) {
  const bool teacher = mode == Mode::IMS;
  Tape tape;
  run_forward(graph, params, mode, true, tape);
  const Adjacency& adj = tape.adj;
  std::vector<double> dpred;
  double loss = loss_from_tape(graph, tape, &dpred);
  if (graph.eta.empty()) return loss;

  std::vector<double> darr(graph.eta.size(), 0.0);
  std::vector<double> dh(static_cast<size_t>(adj.n_nodes) * kDim, 0.0);
  HeatScratch scratch;
  std::vector<double> f(kDim), q(kDim), dq(kDim), dz(kDim), du(kDim);
  std::vector<double> concat3(3 * kDim), dconcat3(3 * kDim), dx(3);
  const int steps = static_cast<int>(adj.edges_at.size());
  for (int t = steps - 1; t >= 0; --t) {
    // Feedback backward: the write A[e] <- v shifted later same-robot
    // edges by v - A[e], so their gradients flow into v and, negated,
    // into the pre-write arrival.
    for (int ei : adj.edges_at[t]) {
      double later = 0.0;
      for (int ej : adj.robot_edges[graph.eta[ei].robot])
        if (graph.eta[ej].timestamp > t) later += darr[ej];
      double dv = darr[ei] + later;
      darr[ei] = -later;
      if (!teacher) dpred[ei] += dv;
    }
    // Decode backward.
    heat_compute(adj, params, tape.h[t], scratch);
    const std::vector<double>& nodes = tape.h[t + 1];
    for (int ei : adj.edges_at[t]) {
      const EtaEdge& edge = graph.eta[ei];
      EdgeRec& rec = tape.rec[ei];
      double dp = dpred[ei];
      darr[ei] += dp;
      double dout = dp * graph.t_scale;
      for (int d = 0; d < kDim; ++d) {
        f[d] = std::max(0.0, rec.u_pre[d]);
        q[d] = std::max(0.0, rec.z_pre[d]);
      }
      params.dec_b.g[0] += dout;
      for (int d = 0; d < kDim; ++d) {
        params.dec_w.g[d] += dout * q[d];
        dq[d] = dout * params.dec_w.w[d];
        dz[d] = rec.z_pre[d] > 0 ? dq[d] : 0.0;
      }
      const double* h_robot =
          &nodes[static_cast<size_t>(adj.n_floor + edge.robot) * kDim];
      const double* h_floor = &nodes[static_cast<size_t>(edge.floor) * kDim];
      std::copy(h_robot, h_robot + kDim, concat3.begin());
      std::copy(h_floor, h_floor + kDim, concat3.begin() + kDim);
      std::copy(f.begin(), f.end(), concat3.begin() + 2 * kDim);
      std::fill(dconcat3.begin(), dconcat3.end(), 0.0);
      affine_backward(params.edge_w, params.edge_b, concat3.data(), dz.data(),
                      dconcat3.data());
      double* dh_robot = &dh[static_cast<size_t>(adj.n_floor + edge.robot) * kDim];
      double* dh_floor = &dh[static_cast<size_t>(edge.floor) * kDim];
      for (int d = 0; d < kDim; ++d) {
        dh_robot[d] += dconcat3[d];
        dh_floor[d] += dconcat3[kDim + d];
        du[d] = rec.u_pre[d] > 0 ? dconcat3[2 * kDim + d] : 0.0;
      }
      std::fill(dx.begin(), dx.end(), 0.0);
      affine_backward(params.enc_eta_w, params.enc_eta_b, rec.x, du.data(),
                      dx.data());
      darr[ei] += dx[1] / graph.t_scale;
    }
    heat_backward(adj, params, tape.h[t], scratch, dh);
  }

  // Encoder backward from the gradient w.r.t. the initial node features.
  std::vector<double> enc_pre;
  encode_nodes_impl(graph, params, &enc_pre);
  const auto& floors = graph.static_layer.floors;
  std::vector<double> dnode(kDim);
  for (size_t i = 0; i < floors.size(); ++i) {
    for (int d = 0; d < kDim; ++d)
      dnode[d] = enc_pre[i * kDim + d] > 0 ? dh[i * kDim + d] : 0.0;
    affine_backward(params.enc_floor_w, params.enc_floor_b,
                    floors[i].patch.data(), dnode.data(), nullptr);
  }
  for (size_t r = 0; r < graph.robots.size(); ++r) {
    size_t base = (floors.size() + r) * kDim;
    for (int d = 0; d < kDim; ++d)
      dnode[d] = enc_pre[base + d] > 0 ? dh[base + d] : 0.0;
    double x = graph.robots[r].priority;
    affine_backward(params.enc_robot_w, params.enc_robot_b, &x, dnode.data(),
                    nullptr);
  }
  return loss;
}

}  // namespace fleeta::nn
