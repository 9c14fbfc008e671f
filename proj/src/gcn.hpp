#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "graph.hpp"

namespace depolar {

/// Dense row-major matrix. The network is small (2->16->16->1); all linear
/// algebra is written as explicit loops with a fixed summation order so that
/// results are bit-reproducible and permutation-equivariant.
struct Matrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::int64_t r, std::int64_t c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}

  double& operator()(std::int64_t i, std::int64_t j) {
    return data[static_cast<std::size_t>(i * cols + j)];
  }
  double operator()(std::int64_t i, std::int64_t j) const {
    return data[static_cast<std::size_t>(i * cols + j)];
  }
  double* row(std::int64_t i) { return data.data() + static_cast<std::size_t>(i * cols); }
  const double* row(std::int64_t i) const {
    return data.data() + static_cast<std::size_t>(i * cols);
  }
  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }
};

struct GcnDims {
  int input = 2;
  int hidden = 16;
  int embedding = 16;
  int output = 1;
};

enum class Aggregation { mean, weighted_mean };

struct TrainingMeta {
  long long epochs_run = 0;
  long long best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  double final_train_loss = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  long long train_graphs = 0;
  long long val_graphs = 0;
};

/// Two propagation layers (neighbor mean + self term, activation after each)
/// followed by a linear scoring head:
///   h1_v = relu(W0 * mean_{u in N(v)} x_u + B0 * x_v)
///   h2_v = relu(W1 * mean_{u in N(v)} h1_u + B1 * h1_v)
///   score_v = head_w . h2_v + head_b
struct GcnModel {
  GcnDims dims;
  Aggregation aggregation = Aggregation::mean;
  Matrix W0, B0;               // hidden x input
  Matrix W1, B1;               // embedding x hidden
  std::vector<double> head_w;  // embedding
  double head_b = 0.0;
  double target_scale = 1000.0;
  TrainingMeta meta;
};

/// Seeded symmetric-breaking initialization: every weight uniform in
/// +-sqrt(6 / (fan_in + fan_out)); head bias zero.
GcnModel init_model(const GcnDims& dims, std::uint64_t seed,
                    Aggregation aggregation = Aggregation::mean, double target_scale = 1000.0);

/// Shape/value sanity for a model (raises model errors).
void validate_model(const GcnModel& model);

/// Node features (effective_s, effective_z): the network's stored opinions
/// with anchored entries forced to zero. Returns an n x 2 matrix.
Matrix node_features(const Network& net, const ModerationState& mod);
Matrix node_features(const Network& net, std::span<const double> effective_s,
                     std::span<const double> effective_z);

struct ForwardCache {
  Matrix H0, A0, Z1, H1, A1, Z2, H2;
};

/// Per-node scores. Nodes without neighbors use a zero aggregate term.
/// features must have dims.input columns (model error otherwise).
std::vector<double> gcn_forward(const GcnModel& model, const Network& net, const Matrix& features,
                                ForwardCache* cache = nullptr);
std::vector<double> gcn_forward(const GcnModel& model, const Network& net,
                                const ModerationState& mod, ForwardCache* cache = nullptr);

/// Training example: a network carrying (s, z) node features, the true
/// per-node gain targets, an optional eligibility mask, and the anchors that
/// were applied when the example was generated (anchored nodes enter the
/// forward pass with zeroed features and are excluded from the loss).
struct LabeledGraph {
  Network net;
  std::vector<double> targets;
  std::vector<std::uint8_t> mask;   // empty = all nodes eligible
  std::vector<NodeId> anchors;      // empty for fresh graphs
};

struct GcnGradients {
  Matrix W0, B0, W1, B1;
  std::vector<double> head_w;
  double head_b = 0.0;
};

/// Mean over all masked-in nodes of (score_v - target_scale * target_v)^2.
/// Raises an argument error if no node in the batch is masked in.
double batch_loss(const GcnModel& model, std::span<const LabeledGraph> batch,
                  long long* masked_out = nullptr, int threads = 1);

/// Loss plus its exact analytic gradient with respect to every weight.
double batch_loss_and_gradients(const GcnModel& model, std::span<const LabeledGraph> batch,
                                GcnGradients& grads, long long* masked_out = nullptr,
                                int threads = 1);

struct TrainOptions {
  long long epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 8;
  double val_frac = 0.2;
  long long patience = 20;  // early stop after this many stale epochs
  std::uint64_t seed = 0;
  double target_scale = 1000.0;
  Aggregation aggregation = Aggregation::mean;
  int threads = 1;
};

struct EpochLog {
  long long epoch = 0;       // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;     // equals train_loss when the split has no validation graphs
  bool improved = false;
};

struct TrainResult {
  GcnModel model;  // best-validation snapshot
  std::vector<EpochLog> log;
};

/// Adam on mini-batches with a seeded deterministic shuffle and train/val
/// split. Keeps the best-validation snapshot; stops early after
/// opts.patience epochs without improvement. Non-finite loss raises a
/// divergence error naming the epoch.
TrainResult train(std::span<const LabeledGraph> dataset, const TrainOptions& opts,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Versioned JSON round-trip of every field including target_scale and dims.
void save_model(const GcnModel& model, const std::string& path);
GcnModel load_model(const std::string& path);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct RankingReport {
  double mean_spearman = 0.0;
  double top_hit_rate = 0.0;  // fraction of graphs whose true-best node is among the top-k scored
  int top_k = 5;
  long long graphs = 0;
};

/// Ranking quality of model scores against true gain targets over a set of
/// labeled graphs (scores from each graph's own features/anchors).
RankingReport evaluate_ranking(const GcnModel& model, std::span<const LabeledGraph> graphs,
                               int top_k = 5);

}  // namespace depolar
