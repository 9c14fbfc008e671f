#include "gcn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "parallel.hpp"
#include "rng.hpp"

namespace depolar {

namespace {

using nlohmann::json;

void fill_glorot(Matrix& m, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : m.data) v = rng.uniform(-limit, limit);
}

double relu(double x) { return x > 0.0 ? x : 0.0; }
double relu_grad(double pre) { return pre > 0.0 ? 1.0 : 0.0; }

/// A = neighbor aggregate of H (mean or weight-normalized mean), fixed
/// adjacency order per node. Nodes without neighbors get a zero row.
void aggregate(const Network& net, const Matrix& H, Aggregation agg, Matrix& A) {
  const std::int64_t n = H.rows;
  const std::int64_t d = H.cols;
  A.rows = n;
  A.cols = d;
  A.data.assign(static_cast<std::size_t>(n * d), 0.0);
  for (NodeId v = 0; v < n; ++v) {
    auto nbrs = net.neighbors(v);
    if (nbrs.empty()) continue;
    double* out = A.row(v);
    if (agg == Aggregation::mean) {
      for (const Neighbor& nb : nbrs) {
        const double* row = H.row(nb.id);
        for (std::int64_t k = 0; k < d; ++k) out[k] += row[k];
      }
      const double inv = 1.0 / static_cast<double>(nbrs.size());
      for (std::int64_t k = 0; k < d; ++k) out[k] *= inv;
    } else {
      for (const Neighbor& nb : nbrs) {
        const double* row = H.row(nb.id);
        for (std::int64_t k = 0; k < d; ++k) out[k] += nb.weight * row[k];
      }
      const double inv = 1.0 / net.weighted_degree(v);
      for (std::int64_t k = 0; k < d; ++k) out[k] *= inv;
    }
  }
}

/// Z(v,.) = W * A(v,.) + B * H(v,.), explicit fixed-order dot products.
void layer_pre_activation(const Matrix& W, const Matrix& B, const Matrix& A, const Matrix& H,
                          Matrix& Z) {
  const std::int64_t n = H.rows;
  const std::int64_t din = H.cols;
  const std::int64_t dout = W.rows;
  Z.rows = n;
  Z.cols = dout;
  Z.data.resize(static_cast<std::size_t>(n * dout));
  for (std::int64_t v = 0; v < n; ++v) {
    const double* a = A.row(v);
    const double* h = H.row(v);
    for (std::int64_t j = 0; j < dout; ++j) {
      const double* wrow = W.row(j);
      const double* brow = B.row(j);
      double acc = 0.0;
      for (std::int64_t k = 0; k < din; ++k) acc += wrow[k] * a[k];
      for (std::int64_t k = 0; k < din; ++k) acc += brow[k] * h[k];
      Z(v, j) = acc;
    }
  }
}

void apply_relu(const Matrix& Z, Matrix& H) {
  H.rows = Z.rows;
  H.cols = Z.cols;
  H.data.resize(Z.data.size());
  for (std::size_t i = 0; i < Z.data.size(); ++i) H.data[i] = relu(Z.data[i]);
}

GcnGradients zero_gradients(const GcnModel& model) {
  GcnGradients g;
  g.W0 = Matrix(model.W0.rows, model.W0.cols);
  g.B0 = Matrix(model.B0.rows, model.B0.cols);
  g.W1 = Matrix(model.W1.rows, model.W1.cols);
  g.B1 = Matrix(model.B1.rows, model.B1.cols);
  g.head_w.assign(model.head_w.size(), 0.0);
  g.head_b = 0.0;
  return g;
}

struct GraphContribution {
  GcnGradients grads;
  double sse = 0.0;
  long long masked = 0;
};

std::vector<std::uint8_t> effective_mask(const LabeledGraph& lg) {
  const std::size_t n = static_cast<std::size_t>(lg.net.node_count());
  if (!lg.mask.empty() && lg.mask.size() != n) {
    fail(ErrorCode::argument, "mask has size " + std::to_string(lg.mask.size()) + ", expected " +
                                  std::to_string(n));
  }
  if (lg.targets.size() != n) {
    fail(ErrorCode::argument, "targets have size " + std::to_string(lg.targets.size()) +
                                  ", expected " + std::to_string(n));
  }
  std::vector<std::uint8_t> mask(n, 1);
  if (!lg.mask.empty()) mask = lg.mask;
  for (NodeId v : lg.anchors) {
    if (v < 0 || static_cast<std::size_t>(v) >= n) {
      fail(ErrorCode::index, "anchor id " + std::to_string(v) + " out of range");
    }
    mask[static_cast<std::size_t>(v)] = 0;
  }
  return mask;
}

ModerationState state_for(const LabeledGraph& lg) {
  ModerationState mod(lg.net);
  for (NodeId v : lg.anchors) mod = mod.anchored(v);
  return mod;
}

/// Unnormalized contribution (dscore = 2 * residual); the caller divides by
/// the batch-wide masked-node count.
GraphContribution graph_contribution(const GcnModel& model, const LabeledGraph& lg,
                                     bool want_grads) {
  GraphContribution out;
  out.grads = want_grads ? zero_gradients(model) : GcnGradients{};
  const std::vector<std::uint8_t> mask = effective_mask(lg);
  const Network& net = lg.net;
  const std::int64_t n = net.node_count();

  ForwardCache cache;
  Matrix features = node_features(net, state_for(lg));
  std::vector<double> scores = gcn_forward(model, net, features, &cache);

  std::vector<double> dscore(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t v = 0; v < n; ++v) {
    if (!mask[static_cast<std::size_t>(v)]) continue;
    const double target = lg.targets[static_cast<std::size_t>(v)];
    if (!std::isfinite(target)) {
      fail(ErrorCode::argument, "non-finite target at masked-in node " + std::to_string(v));
    }
    const double r = scores[static_cast<std::size_t>(v)] - model.target_scale * target;
    out.sse += r * r;
    ++out.masked;
    dscore[static_cast<std::size_t>(v)] = 2.0 * r;
  }
  if (!want_grads || out.masked == 0) return out;

  const std::int64_t hidden = model.dims.hidden;
  const std::int64_t emb = model.dims.embedding;
  const std::int64_t din = model.dims.input;
  GcnGradients& g = out.grads;

  // Head.
  for (std::int64_t v = 0; v < n; ++v) {
    const double ds = dscore[static_cast<std::size_t>(v)];
    if (ds == 0.0) continue;
    for (std::int64_t k = 0; k < emb; ++k) {
      g.head_w[static_cast<std::size_t>(k)] += ds * cache.H2(v, k);
    }
    g.head_b += ds;
  }

  // Backprop through layer 2.
  Matrix dZ2(n, emb);
  for (std::int64_t v = 0; v < n; ++v) {
    const double ds = dscore[static_cast<std::size_t>(v)];
    for (std::int64_t k = 0; k < emb; ++k) {
      dZ2(v, k) = ds * model.head_w[static_cast<std::size_t>(k)] * relu_grad(cache.Z2(v, k));
    }
  }
  for (std::int64_t v = 0; v < n; ++v) {
    for (std::int64_t j = 0; j < emb; ++j) {
      const double d = dZ2(v, j);
      if (d == 0.0) continue;
      for (std::int64_t k = 0; k < hidden; ++k) {
        g.W1(j, k) += d * cache.A1(v, k);
        g.B1(j, k) += d * cache.H1(v, k);
      }
    }
  }

  // dH1 = agg^T (dZ2 * W1) + dZ2 * B1.
  Matrix dA1(n, hidden);
  for (std::int64_t v = 0; v < n; ++v) {
    for (std::int64_t k = 0; k < hidden; ++k) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < emb; ++j) acc += dZ2(v, j) * model.W1(j, k);
      dA1(v, k) = acc;
    }
  }
  Matrix dH1(n, hidden);
  for (NodeId u = 0; u < n; ++u) {
    for (const Neighbor& nb : net.neighbors(u)) {
      const double factor = model.aggregation == Aggregation::mean
                                ? 1.0 / static_cast<double>(net.degree(nb.id))
                                : nb.weight / net.weighted_degree(nb.id);
      for (std::int64_t k = 0; k < hidden; ++k) dH1(u, k) += factor * dA1(nb.id, k);
    }
    for (std::int64_t k = 0; k < hidden; ++k) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < emb; ++j) acc += dZ2(u, j) * model.B1(j, k);
      dH1(u, k) += acc;
    }
  }

  // Backprop through layer 1.
  Matrix dZ1(n, hidden);
  for (std::int64_t v = 0; v < n; ++v) {
    for (std::int64_t k = 0; k < hidden; ++k) {
      dZ1(v, k) = dH1(v, k) * relu_grad(cache.Z1(v, k));
    }
  }
  for (std::int64_t v = 0; v < n; ++v) {
    for (std::int64_t j = 0; j < hidden; ++j) {
      const double d = dZ1(v, j);
      if (d == 0.0) continue;
      for (std::int64_t k = 0; k < din; ++k) {
        g.W0(j, k) += d * cache.A0(v, k);
        g.B0(j, k) += d * cache.H0(v, k);
      }
    }
  }
  return out;
}

void accumulate(GcnGradients& into, const GcnGradients& from) {
  auto add = [](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(into.W0.data, from.W0.data);
  add(into.B0.data, from.B0.data);
  add(into.W1.data, from.W1.data);
  add(into.B1.data, from.B1.data);
  add(into.head_w, from.head_w);
  into.head_b += from.head_b;
}

double batch_loss_impl(const GcnModel& model, std::span<const LabeledGraph* const> batch,
                       GcnGradients* grads, long long* masked_out, int threads) {
  validate_model(model);
  if (batch.empty()) fail(ErrorCode::argument, "empty batch");
  std::vector<GraphContribution> slots(batch.size());
  parallel_for(0, static_cast<std::int64_t>(batch.size()), threads,
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t i = lo; i < hi; ++i) {
                   slots[static_cast<std::size_t>(i)] =
                       graph_contribution(model, *batch[static_cast<std::size_t>(i)],
                                          grads != nullptr);
                 }
               });
  double sse = 0.0;
  long long masked = 0;
  for (const GraphContribution& c : slots) {
    sse += c.sse;
    masked += c.masked;
  }
  if (masked == 0) {
    fail(ErrorCode::argument, "no masked-in nodes anywhere in the batch");
  }
  if (grads) {
    *grads = zero_gradients(model);
    for (const GraphContribution& c : slots) {
      if (c.masked > 0) accumulate(*grads, c.grads);
    }
    const double inv = 1.0 / static_cast<double>(masked);
    for (double& v : grads->W0.data) v *= inv;
    for (double& v : grads->B0.data) v *= inv;
    for (double& v : grads->W1.data) v *= inv;
    for (double& v : grads->B1.data) v *= inv;
    for (double& v : grads->head_w) v *= inv;
    grads->head_b *= inv;
  }
  if (masked_out) *masked_out = masked;
  return sse / static_cast<double>(masked);
}

std::vector<const LabeledGraph*> to_pointers(std::span<const LabeledGraph> graphs) {
  std::vector<const LabeledGraph*> out;
  out.reserve(graphs.size());
  for (const LabeledGraph& g : graphs) out.push_back(&g);
  return out;
}

/// Flat parameter view for the optimizer (fixed order).
std::vector<std::pair<double*, std::size_t>> parameter_view(GcnModel& m) {
  return {{m.W0.data.data(), m.W0.data.size()},
          {m.B0.data.data(), m.B0.data.size()},
          {m.W1.data.data(), m.W1.data.size()},
          {m.B1.data.data(), m.B1.data.size()},
          {m.head_w.data(), m.head_w.size()},
          {&m.head_b, 1}};
}

std::vector<std::pair<const double*, std::size_t>> gradient_view(const GcnGradients& g) {
  return {{g.W0.data.data(), g.W0.data.size()},
          {g.B0.data.data(), g.B0.data.size()},
          {g.W1.data.data(), g.W1.data.size()},
          {g.B1.data.data(), g.B1.data.size()},
          {g.head_w.data(), g.head_w.size()},
          {&g.head_b, 1}};
}

std::string aggregation_name(Aggregation a) {
  return a == Aggregation::mean ? "mean" : "weighted_mean";
}

Aggregation aggregation_from_name(const std::string& name, const std::string& context) {
  if (name == "mean") return Aggregation::mean;
  if (name == "weighted_mean") return Aggregation::weighted_mean;
  fail(ErrorCode::format, context + ": unknown aggregation `" + name + "`");
}

json matrix_to_json(const Matrix& m) { return json(m.data); }

Matrix matrix_from_json(const json& arr, std::int64_t rows, std::int64_t cols,
                        const std::string& name) {
  if (!arr.is_array() || static_cast<std::int64_t>(arr.size()) != rows * cols) {
    fail(ErrorCode::format, name + " must be a row-major array of " + std::to_string(rows * cols) +
                                " numbers");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (!arr[i].is_number()) fail(ErrorCode::format, name + " contains a non-number");
    m.data[i] = arr[i].get<double>();
  }
  return m;
}

/// Ranks with average ties.
std::vector<double> ranks_of(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

GcnModel init_model(const GcnDims& dims, std::uint64_t seed, Aggregation aggregation,
                    double target_scale) {
  if (dims.input <= 0 || dims.hidden <= 0 || dims.embedding <= 0 || dims.output != 1) {
    fail(ErrorCode::argument, "model dims must be positive with scalar output");
  }
  if (!(target_scale > 0.0)) {
    fail(ErrorCode::argument, "target_scale must be positive, got " + std::to_string(target_scale));
  }
  GcnModel m;
  m.dims = dims;
  m.aggregation = aggregation;
  m.target_scale = target_scale;
  Rng rng(seed);
  m.W0 = Matrix(dims.hidden, dims.input);
  m.B0 = Matrix(dims.hidden, dims.input);
  m.W1 = Matrix(dims.embedding, dims.hidden);
  m.B1 = Matrix(dims.embedding, dims.hidden);
  fill_glorot(m.W0, dims.input, dims.hidden, rng);
  fill_glorot(m.B0, dims.input, dims.hidden, rng);
  fill_glorot(m.W1, dims.hidden, dims.embedding, rng);
  fill_glorot(m.B1, dims.hidden, dims.embedding, rng);
  m.head_w.resize(static_cast<std::size_t>(dims.embedding));
  const double limit = std::sqrt(6.0 / (dims.embedding + dims.output));
  for (double& v : m.head_w) v = rng.uniform(-limit, limit);
  m.head_b = 0.0;
  return m;
}

void validate_model(const GcnModel& m) {
  auto shape_ok = [](const Matrix& mat, std::int64_t r, std::int64_t c) {
    return mat.rows == r && mat.cols == c &&
           mat.data.size() == static_cast<std::size_t>(r * c);
  };
  if (m.dims.input <= 0 || m.dims.hidden <= 0 || m.dims.embedding <= 0 || m.dims.output != 1 ||
      !shape_ok(m.W0, m.dims.hidden, m.dims.input) || !shape_ok(m.B0, m.dims.hidden, m.dims.input) ||
      !shape_ok(m.W1, m.dims.embedding, m.dims.hidden) ||
      !shape_ok(m.B1, m.dims.embedding, m.dims.hidden) ||
      m.head_w.size() != static_cast<std::size_t>(m.dims.embedding)) {
    fail(ErrorCode::model, "model weight shapes are inconsistent with dims");
  }
  if (!(m.target_scale > 0.0)) {
    fail(ErrorCode::model, "model target_scale must be positive");
  }
}

Matrix node_features(const Network& net, const ModerationState& mod) {
  return node_features(net, mod.effective_internal(),
                       mod.effective_expressed(net.expressed()));
}

Matrix node_features(const Network& net, std::span<const double> effective_s,
                     std::span<const double> effective_z) {
  const std::int64_t n = net.node_count();
  if (static_cast<std::int64_t>(effective_s.size()) != n ||
      static_cast<std::int64_t>(effective_z.size()) != n) {
    fail(ErrorCode::argument, "feature vectors must have one entry per node");
  }
  Matrix f(n, 2);
  for (std::int64_t v = 0; v < n; ++v) {
    f(v, 0) = effective_s[static_cast<std::size_t>(v)];
    f(v, 1) = effective_z[static_cast<std::size_t>(v)];
  }
  return f;
}

std::vector<double> gcn_forward(const GcnModel& model, const Network& net, const Matrix& features,
                                ForwardCache* cache) {
  validate_model(model);
  if (features.rows != net.node_count() || features.cols != model.dims.input) {
    fail(ErrorCode::model, "feature matrix is " + std::to_string(features.rows) + "x" +
                               std::to_string(features.cols) + ", model expects " +
                               std::to_string(net.node_count()) + "x" +
                               std::to_string(model.dims.input));
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.H0 = features;
  aggregate(net, c.H0, model.aggregation, c.A0);
  layer_pre_activation(model.W0, model.B0, c.A0, c.H0, c.Z1);
  apply_relu(c.Z1, c.H1);
  aggregate(net, c.H1, model.aggregation, c.A1);
  layer_pre_activation(model.W1, model.B1, c.A1, c.H1, c.Z2);
  apply_relu(c.Z2, c.H2);

  const std::int64_t n = net.node_count();
  const std::int64_t emb = model.dims.embedding;
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < emb; ++k) acc += model.head_w[static_cast<std::size_t>(k)] * c.H2(v, k);
    scores[static_cast<std::size_t>(v)] = acc + model.head_b;
  }
  return scores;
}

std::vector<double> gcn_forward(const GcnModel& model, const Network& net,
                                const ModerationState& mod, ForwardCache* cache) {
  return gcn_forward(model, net, node_features(net, mod), cache);
}

double batch_loss(const GcnModel& model, std::span<const LabeledGraph> batch,
                  long long* masked_out, int threads) {
  std::vector<const LabeledGraph*> ptrs = to_pointers(batch);
  return batch_loss_impl(model, ptrs, nullptr, masked_out, threads);
}

double batch_loss_and_gradients(const GcnModel& model, std::span<const LabeledGraph> batch,
                                GcnGradients& grads, long long* masked_out, int threads) {
  std::vector<const LabeledGraph*> ptrs = to_pointers(batch);
  return batch_loss_impl(model, ptrs, &grads, masked_out, threads);
}

TrainResult train(std::span<const LabeledGraph> dataset, const TrainOptions& opts,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (dataset.empty()) fail(ErrorCode::argument, "training dataset is empty");
  if (opts.epochs <= 0) fail(ErrorCode::argument, "epochs must be positive");
  if (!(opts.learning_rate > 0.0)) fail(ErrorCode::argument, "learning rate must be positive");
  if (opts.batch_size <= 0) fail(ErrorCode::argument, "batch size must be positive");
  if (!(opts.val_frac >= 0.0 && opts.val_frac < 1.0)) {
    fail(ErrorCode::argument, "validation fraction must lie in [0, 1)");
  }
  if (opts.patience <= 0) fail(ErrorCode::argument, "patience must be positive");

  Rng rng(opts.seed);
  const std::size_t total = dataset.size();
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  std::size_t val_count = static_cast<std::size_t>(
      std::llround(opts.val_frac * static_cast<double>(total)));
  if (val_count >= total) val_count = total - 1;
  std::vector<const LabeledGraph*> val, tr;
  for (std::size_t i = 0; i < val_count; ++i) val.push_back(&dataset[order[i]]);
  for (std::size_t i = val_count; i < total; ++i) tr.push_back(&dataset[order[i]]);

  GcnModel model = init_model(GcnDims{}, rng.next_u64(), opts.aggregation, opts.target_scale);

  // Adam state over the flat parameter view.
  std::size_t param_count = 0;
  for (const auto& blk : parameter_view(model)) param_count += blk.second;
  std::vector<double> m_state(param_count, 0.0), v_state(param_count, 0.0);
  long long step = 0;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  TrainResult result;
  GcnModel best = model;
  double best_crit = std::numeric_limits<double>::infinity();
  long long best_epoch = -1;
  long long stale = 0;
  double last_train_loss = std::numeric_limits<double>::quiet_NaN();
  long long epoch = 0;

  std::vector<std::size_t> tr_order(tr.size());
  std::iota(tr_order.begin(), tr_order.end(), 0);

  for (epoch = 1; epoch <= opts.epochs; ++epoch) {
    rng.shuffle(tr_order.begin(), tr_order.end());
    double sse_sum = 0.0;
    long long masked_sum = 0;
    for (std::size_t start = 0; start < tr.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t stop = std::min(tr.size(), start + static_cast<std::size_t>(opts.batch_size));
      std::vector<const LabeledGraph*> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(tr[tr_order[i]]);
      GcnGradients grads;
      long long masked = 0;
      const double loss =
          batch_loss_impl(model, batch, &grads, &masked, opts.threads);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::divergence,
             "non-finite training loss at epoch " + std::to_string(epoch));
      }
      sse_sum += loss * static_cast<double>(masked);
      masked_sum += masked;

      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      std::size_t offset = 0;
      auto params = parameter_view(model);
      auto gview = gradient_view(grads);
      for (std::size_t blk = 0; blk < params.size(); ++blk) {
        double* p = params[blk].first;
        const double* gp = gview[blk].first;
        const std::size_t len = params[blk].second;
        for (std::size_t i = 0; i < len; ++i) {
          const double g = gp[i];
          double& m1 = m_state[offset + i];
          double& v1 = v_state[offset + i];
          m1 = beta1 * m1 + (1.0 - beta1) * g;
          v1 = beta2 * v1 + (1.0 - beta2) * g * g;
          const double mhat = m1 / bc1;
          const double vhat = v1 / bc2;
          p[i] -= opts.learning_rate * mhat / (std::sqrt(vhat) + eps);
        }
        offset += len;
      }
    }
    const double train_loss = masked_sum > 0 ? sse_sum / static_cast<double>(masked_sum)
                                             : std::numeric_limits<double>::quiet_NaN();
    double val_loss = train_loss;
    if (!val.empty()) {
      val_loss = batch_loss_impl(model, val, nullptr, nullptr, opts.threads);
    }
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      fail(ErrorCode::divergence, "non-finite loss at epoch " + std::to_string(epoch));
    }
    last_train_loss = train_loss;

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_loss;
    log.val_loss = val_loss;
    log.improved = val_loss < best_crit;
    if (log.improved) {
      best_crit = val_loss;
      best = model;
      best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (stale >= opts.patience) break;
  }

  best.meta.epochs_run = static_cast<long long>(result.log.size());
  best.meta.best_epoch = best_epoch;
  best.meta.best_val_loss = best_crit;
  best.meta.final_train_loss = last_train_loss;
  best.meta.seed = opts.seed;
  best.meta.train_graphs = static_cast<long long>(tr.size());
  best.meta.val_graphs = static_cast<long long>(val.size());
  result.model = std::move(best);
  return result;
}

void save_model(const GcnModel& model, const std::string& path) {
  validate_model(model);
  json meta = {
      {"epochs_run", model.meta.epochs_run},
      {"best_epoch", model.meta.best_epoch},
      {"seed", model.meta.seed},
      {"train_graphs", model.meta.train_graphs},
      {"val_graphs", model.meta.val_graphs},
      {"aggregation", aggregation_name(model.aggregation)},
  };
  if (std::isfinite(model.meta.best_val_loss)) meta["best_val_loss"] = model.meta.best_val_loss;
  if (std::isfinite(model.meta.final_train_loss)) {
    meta["final_train_loss"] = model.meta.final_train_loss;
  }
  json doc = {
      {"version", 1},
      {"dims", {model.dims.input, model.dims.hidden, model.dims.embedding, model.dims.output}},
      {"activation", "relu"},
      {"W0", matrix_to_json(model.W0)},
      {"B0", matrix_to_json(model.B0)},
      {"W1", matrix_to_json(model.W1)},
      {"B1", matrix_to_json(model.B1)},
      {"head_w", json(model.head_w)},
      {"head_b", model.head_b},
      {"target_scale", model.target_scale},
      {"training_meta", meta},
  };
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
  if (!out) fail(ErrorCode::io, "write to " + path + " failed");
}

GcnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path + " for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": invalid model JSON: " + e.what());
  }
  try {
    if (!doc.is_object()) fail(ErrorCode::format, "model file is not a JSON object");
    if (!doc.contains("version") || !doc["version"].is_number_integer() ||
        doc["version"].get<int>() != 1) {
      fail(ErrorCode::format, "unsupported model version (expected 1)");
    }
    for (const char* key : {"dims", "activation", "W0", "B0", "W1", "B1", "head_w", "head_b",
                            "target_scale"}) {
      if (!doc.contains(key)) fail(ErrorCode::format, std::string("missing field `") + key + "`");
    }
    const json& dims = doc["dims"];
    if (!dims.is_array() || dims.size() != 4) {
      fail(ErrorCode::format, "dims must be a 4-element array");
    }
    GcnModel m;
    m.dims.input = dims[0].get<int>();
    m.dims.hidden = dims[1].get<int>();
    m.dims.embedding = dims[2].get<int>();
    m.dims.output = dims[3].get<int>();
    if (doc["activation"].get<std::string>() != "relu") {
      fail(ErrorCode::format, "unsupported activation `" +
                                  doc["activation"].get<std::string>() + "` (expected relu)");
    }
    m.W0 = matrix_from_json(doc["W0"], m.dims.hidden, m.dims.input, "W0");
    m.B0 = matrix_from_json(doc["B0"], m.dims.hidden, m.dims.input, "B0");
    m.W1 = matrix_from_json(doc["W1"], m.dims.embedding, m.dims.hidden, "W1");
    m.B1 = matrix_from_json(doc["B1"], m.dims.embedding, m.dims.hidden, "B1");
    const json& hw = doc["head_w"];
    if (!hw.is_array() || static_cast<int>(hw.size()) != m.dims.embedding) {
      fail(ErrorCode::format, "head_w must have one entry per embedding unit");
    }
    m.head_w.resize(hw.size());
    for (std::size_t i = 0; i < hw.size(); ++i) m.head_w[i] = hw[i].get<double>();
    m.head_b = doc["head_b"].get<double>();
    m.target_scale = doc["target_scale"].get<double>();
    if (doc.contains("training_meta") && doc["training_meta"].is_object()) {
      const json& meta = doc["training_meta"];
      auto get_ll = [&](const char* key, long long dflt) {
        return meta.contains(key) && meta[key].is_number() ? meta[key].get<long long>() : dflt;
      };
      m.meta.epochs_run = get_ll("epochs_run", 0);
      m.meta.best_epoch = get_ll("best_epoch", -1);
      m.meta.train_graphs = get_ll("train_graphs", 0);
      m.meta.val_graphs = get_ll("val_graphs", 0);
      if (meta.contains("seed") && meta["seed"].is_number_unsigned()) {
        m.meta.seed = meta["seed"].get<std::uint64_t>();
      }
      if (meta.contains("best_val_loss") && meta["best_val_loss"].is_number()) {
        m.meta.best_val_loss = meta["best_val_loss"].get<double>();
      }
      if (meta.contains("final_train_loss") && meta["final_train_loss"].is_number()) {
        m.meta.final_train_loss = meta["final_train_loss"].get<double>();
      }
      if (meta.contains("aggregation")) {
        m.aggregation = aggregation_from_name(meta["aggregation"].get<std::string>(), path);
      }
    }
    if (!(m.target_scale > 0.0)) fail(ErrorCode::format, "target_scale must be positive");
    try {
      validate_model(m);
    } catch (const Error& e) {
      fail(ErrorCode::format, e.what());
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": malformed model JSON: " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::format) {
      fail(ErrorCode::format, path + ": " + e.what());
    }
    throw;
  }
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::argument, "rank correlation needs equal-length inputs");
  }
  if (a.size() < 2) {
    fail(ErrorCode::argument, "rank correlation needs at least two observations");
  }
  std::vector<double> ra = ranks_of(a);
  std::vector<double> rb = ranks_of(b);
  const double n = static_cast<double>(a.size());
  double mean = (n + 1.0) / 2.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;  // a constant ranking carries no order information
  return cov / std::sqrt(va * vb);
}

RankingReport evaluate_ranking(const GcnModel& model, std::span<const LabeledGraph> graphs,
                               int top_k) {
  if (graphs.empty()) fail(ErrorCode::argument, "no graphs to evaluate");
  if (top_k <= 0) fail(ErrorCode::argument, "top_k must be positive");
  RankingReport report;
  report.top_k = top_k;
  double rho_sum = 0.0;
  long long rho_count = 0;
  long long hits = 0;
  for (const LabeledGraph& lg : graphs) {
    const std::vector<std::uint8_t> mask = effective_mask(lg);
    std::vector<double> scores = gcn_forward(model, lg.net, node_features(lg.net, state_for(lg)));
    std::vector<std::size_t> idx;
    for (std::size_t v = 0; v < mask.size(); ++v) {
      if (mask[v]) idx.push_back(v);
    }
    if (idx.empty()) continue;
    std::vector<double> sc, tg;
    sc.reserve(idx.size());
    tg.reserve(idx.size());
    for (std::size_t v : idx) {
      sc.push_back(scores[v]);
      tg.push_back(lg.targets[v]);
    }
    if (idx.size() >= 2) {
      rho_sum += spearman(sc, tg);
      ++rho_count;
    }
    // True-best node (ties -> lowest node id) vs the top-k predicted set.
    std::size_t best = 0;
    for (std::size_t i = 1; i < tg.size(); ++i) {
      if (tg[i] > tg[best]) best = i;
    }
    std::vector<std::size_t> by_score(idx.size());
    std::iota(by_score.begin(), by_score.end(), 0);
    std::stable_sort(by_score.begin(), by_score.end(),
                     [&](std::size_t x, std::size_t y) { return sc[x] > sc[y]; });
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(top_k), by_score.size());
    bool hit = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (by_score[i] == best) {
        hit = true;
        break;
      }
    }
    if (hit) ++hits;
    ++report.graphs;
  }
  if (report.graphs == 0) fail(ErrorCode::argument, "no graphs with masked-in nodes");
  report.mean_spearman = rho_count > 0 ? rho_sum / static_cast<double>(rho_count) : 0.0;
  report.top_hit_rate = static_cast<double>(hits) / static_cast<double>(report.graphs);
  return report;
}

}  // namespace depolar
