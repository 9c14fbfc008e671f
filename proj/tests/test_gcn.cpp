#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "dynamics.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "rng.hpp"

using namespace depolar;

namespace {

Network random_opinion_graph(Rng& rng, NodeId n, double edge_prob) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.uniform01() < edge_prob) edges.push_back({u, v, 1.0});
    }
  }
  std::vector<double> s(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n));
  for (auto& v : s) v = rng.uniform(-1.0, 1.0);
  for (auto& v : z) v = rng.uniform(-0.8, 0.8);
  return Network::build(n, std::move(edges)).with_opinions(std::move(s), std::move(z));
}

LabeledGraph random_labeled(Rng& rng, NodeId n, double edge_prob) {
  LabeledGraph lg;
  lg.net = random_opinion_graph(rng, n, edge_prob);
  lg.targets.resize(static_cast<std::size_t>(n));
  for (auto& t : lg.targets) t = rng.uniform(-0.01, 0.03);
  return lg;
}

/// All model parameters as mutable pointers, fixed order.
std::vector<double*> flat_params(GcnModel& m) {
  std::vector<double*> out;
  for (auto* mat : {&m.W0, &m.B0, &m.W1, &m.B1}) {
    for (double& v : mat->data) out.push_back(&v);
  }
  for (double& v : m.head_w) out.push_back(&v);
  out.push_back(&m.head_b);
  return out;
}

std::vector<double> flat_gradients(const GcnGradients& g) {
  std::vector<double> out;
  for (const Matrix* mat : {&g.W0, &g.B0, &g.W1, &g.B1}) {
    out.insert(out.end(), mat->data.begin(), mat->data.end());
  }
  out.insert(out.end(), g.head_w.begin(), g.head_w.end());
  out.push_back(g.head_b);
  return out;
}

}  // namespace

TEST_CASE("forward: zero model gives zero scores; constant head gives constant scores") {
  Rng rng(1);
  Network net = random_opinion_graph(rng, 10, 0.3);
  GcnModel zero = init_model(GcnDims{}, 0);
  zero.W0.set_zero();
  zero.B0.set_zero();
  zero.W1.set_zero();
  zero.B1.set_zero();
  std::fill(zero.head_w.begin(), zero.head_w.end(), 0.0);
  zero.head_b = 0.0;
  std::vector<double> s0 = gcn_forward(zero, net, ModerationState(net));
  for (double v : s0) CHECK(v == 0.0);

  zero.head_b = 3.25;
  std::vector<double> sc = gcn_forward(zero, net, ModerationState(net));
  for (double v : sc) CHECK(v == 3.25);
}

TEST_CASE("forward: isolated nodes get finite scores from the self path") {
  Network net = Network::build(3, {{0, 1, 1.0}}).with_opinions({1.0, -1.0, 0.5}, {0.5, -0.5, 0.5});
  GcnModel model = init_model(GcnDims{}, 7);
  std::vector<double> scores = gcn_forward(model, net, ModerationState(net));
  REQUIRE(scores.size() == 3);
  for (double v : scores) CHECK(std::isfinite(v));
}

TEST_CASE("forward: anchored nodes enter with zeroed features") {
  Network net = Network::build(2, {{0, 1, 1.0}}).with_opinions({1.0, -1.0}, {0.5, -0.5});
  GcnModel model = init_model(GcnDims{}, 3);
  // Anchoring node 0 must look exactly like setting its features to zero.
  ModerationState mod = ModerationState(net).anchored(0);
  std::vector<double> a = gcn_forward(model, net, mod);
  Network zeroed = net.with_opinions({0.0, -1.0}, {0.0, -0.5});
  std::vector<double> b = gcn_forward(model, zeroed, ModerationState(zeroed));
  CHECK(a == b);  // bitwise
}

TEST_CASE("forward: dimension mismatch is a model error") {
  Network net = Network::build(2, {{0, 1, 1.0}});
  GcnModel model = init_model(GcnDims{}, 0);
  Matrix bad(2, 3);
  try {
    gcn_forward(model, net, bad);
    FAIL("expected model error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::model);
  }
  GcnModel broken = model;
  broken.head_w.pop_back();
  CHECK_THROWS_AS(gcn_forward(broken, net, ModerationState(net)), Error);
}

TEST_CASE("forward: permutation equivariance, bit-for-bit") {
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    Network net = random_opinion_graph(rng, 30, 0.15);
    GcnModel model = init_model(GcnDims{}, 100 + static_cast<std::uint64_t>(trial));
    std::vector<NodeId> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    Network pnet = permute(net, perm);
    std::vector<double> base = gcn_forward(model, net, ModerationState(net));
    std::vector<double> moved = gcn_forward(model, pnet, ModerationState(pnet));
    for (NodeId i = 0; i < 30; ++i) {
      CHECK(moved[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ==
            base[static_cast<std::size_t>(i)]);  // exact equality
    }
  }
}

TEST_CASE("argmax invariance under positive affine transforms of scores") {
  Rng rng(13);
  Network net = random_opinion_graph(rng, 25, 0.2);
  GcnModel model = init_model(GcnDims{}, 5);
  std::vector<double> scores = gcn_forward(model, net, ModerationState(net));
  auto argmax = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[best]) best = i;
    }
    return best;
  };
  const std::size_t base = argmax(scores);
  for (double a : {0.5, 2.0, 1000.0}) {
    for (double b : {-3.0, 0.0, 7.5}) {
      std::vector<double> t = scores;
      for (double& v : t) v = a * v + b;
      CHECK(argmax(t) == base);
    }
  }
}

TEST_CASE("loss: frozen examples") {
  // Single node, score 0, scaled target 2 -> loss 4.
  LabeledGraph lg;
  lg.net = Network::build(1, {});
  lg.targets = {2.0};
  GcnModel zero = init_model(GcnDims{}, 0, Aggregation::mean, 1.0);
  zero.W0.set_zero();
  zero.B0.set_zero();
  zero.W1.set_zero();
  zero.B1.set_zero();
  std::fill(zero.head_w.begin(), zero.head_w.end(), 0.0);
  zero.head_b = 0.0;
  std::vector<LabeledGraph> batch;
  batch.push_back(lg);
  CHECK(batch_loss(zero, batch) == doctest::Approx(4.0));

  // Doubling target_scale quadruples this zero-score loss.
  GcnModel doubled = zero;
  doubled.target_scale = 2.0;
  CHECK(batch_loss(doubled, batch) == doctest::Approx(16.0));

  // Scores identically equal to scaled targets -> zero loss, zero gradients.
  GcnModel constant = zero;
  constant.head_b = 2.0;  // score == 2 == scale * target
  CHECK(batch_loss(constant, batch) == doctest::Approx(0.0));
  GcnGradients g;
  CHECK(batch_loss_and_gradients(constant, batch, g) == doctest::Approx(0.0));
  for (double v : flat_gradients(g)) CHECK(v == 0.0);

  // Empty-mask batch is an argument error.
  LabeledGraph masked = lg;
  masked.mask = {0};
  std::vector<LabeledGraph> masked_batch{masked};
  CHECK_THROWS_AS(batch_loss(zero, masked_batch), Error);
}

TEST_CASE("gradients: head bias closed form 2*mean(score - scaled target)") {
  Rng rng(17);
  std::vector<LabeledGraph> batch;
  batch.push_back(random_labeled(rng, 12, 0.25));
  batch.push_back(random_labeled(rng, 9, 0.3));
  GcnModel model = init_model(GcnDims{}, 23, Aggregation::mean, 10.0);
  GcnGradients g;
  batch_loss_and_gradients(model, batch, g);
  double acc = 0.0;
  long long count = 0;
  for (const LabeledGraph& lg : batch) {
    std::vector<double> scores = gcn_forward(model, lg.net, ModerationState(lg.net));
    for (std::size_t v = 0; v < scores.size(); ++v) {
      acc += 2.0 * (scores[v] - model.target_scale * lg.targets[v]);
      ++count;
    }
  }
  CHECK(g.head_b == doctest::Approx(acc / static_cast<double>(count)).epsilon(1e-12));
}

TEST_CASE("gradients: central finite differences, tiny model 2-3-3-1") {
  Rng rng(29);
  GcnDims dims;
  dims.input = 2;
  dims.hidden = 3;
  dims.embedding = 3;
  dims.output = 1;
  GcnModel model = init_model(dims, 31, Aggregation::mean, 5.0);
  std::vector<LabeledGraph> batch;
  batch.push_back(random_labeled(rng, 5, 0.5));
  batch.push_back(random_labeled(rng, 6, 0.4));

  GcnGradients analytic;
  batch_loss_and_gradients(model, batch, analytic);
  std::vector<double> ga = flat_gradients(analytic);
  std::vector<double*> params = flat_params(model);
  REQUIRE(ga.size() == params.size());

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + h;
    const double up = batch_loss(model, batch);
    *params[i] = saved - h;
    const double down = batch_loss(model, batch);
    *params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(ga[i]), 1e-8});
    max_rel = std::max(max_rel, std::abs(numeric - ga[i]) / denom);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("gradients: finite differences with weighted aggregation and anchors") {
  Rng rng(37);
  GcnDims dims;
  dims.hidden = 3;
  dims.embedding = 3;
  GcnModel model = init_model(dims, 41, Aggregation::weighted_mean, 3.0);
  LabeledGraph lg = random_labeled(rng, 7, 0.5);
  lg.anchors = {2};
  std::vector<LabeledGraph> batch{lg};

  GcnGradients analytic;
  batch_loss_and_gradients(model, batch, analytic);
  std::vector<double> ga = flat_gradients(analytic);
  std::vector<double*> params = flat_params(model);

  const double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + h;
    const double up = batch_loss(model, batch);
    *params[i] = saved - h;
    const double down = batch_loss(model, batch);
    *params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(ga[i]), 1e-8});
    CHECK(std::abs(numeric - ga[i]) / denom < 1e-4);
  }
}

TEST_CASE("train: overfit a single graph far below the initial loss") {
  Rng rng(43);
  std::vector<LabeledGraph> data;
  data.push_back(random_labeled(rng, 20, 0.2));
  GcnModel fresh = init_model(GcnDims{}, 47, Aggregation::mean, 10.0);
  const double initial = batch_loss(fresh, data);

  TrainOptions opts;
  opts.epochs = 2000;
  opts.learning_rate = 3e-3;
  opts.val_frac = 0.0;
  opts.patience = 2000;
  opts.seed = 47;
  opts.target_scale = 10.0;
  TrainResult result = train(data, opts);
  const double final_loss = batch_loss(result.model, data);
  CHECK(final_loss < 1e-3 * initial);
  CHECK(result.model.meta.epochs_run > 0);
}

TEST_CASE("train: same seed, identical weights; logs cover every epoch") {
  Rng rng(53);
  std::vector<LabeledGraph> data;
  for (int i = 0; i < 6; ++i) data.push_back(random_labeled(rng, 15, 0.25));
  TrainOptions opts;
  opts.epochs = 12;
  opts.patience = 12;
  opts.seed = 99;
  opts.val_frac = 0.25;
  TrainResult a = train(data, opts);
  TrainResult b = train(data, opts);
  CHECK(a.model.W0.data == b.model.W0.data);
  CHECK(a.model.B1.data == b.model.B1.data);
  CHECK(a.model.head_w == b.model.head_w);
  CHECK(a.model.head_b == b.model.head_b);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_loss == b.log[i].val_loss);
  }
  CHECK(a.log.size() <= 12);
  CHECK(a.model.meta.train_graphs + a.model.meta.val_graphs == 6);
  CHECK(a.model.meta.val_graphs == 2);  // llround(0.25 * 6)

  CHECK_THROWS_AS(train({}, opts), Error);
  TrainOptions bad = opts;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(data, bad), Error);
}

TEST_CASE("train: early stopping halts after patience stale epochs") {
  Rng rng(59);
  std::vector<LabeledGraph> data;
  for (int i = 0; i < 5; ++i) data.push_back(random_labeled(rng, 10, 0.3));
  TrainOptions opts;
  opts.epochs = 500;
  opts.patience = 5;
  opts.seed = 3;
  opts.val_frac = 0.2;
  opts.learning_rate = 1e-4;
  TrainResult r = train(data, opts);
  // Either it ran all 500 epochs improving steadily (unlikely at this lr) or
  // stopped early; in both cases the log length matches epochs_run and the
  // tail shows `patience` consecutive non-improving epochs when it stopped early.
  CHECK(static_cast<long long>(r.log.size()) == r.model.meta.epochs_run);
  if (r.log.size() < 500) {
    REQUIRE(r.log.size() >= 5);
    for (std::size_t i = r.log.size() - 5; i < r.log.size(); ++i) {
      CHECK(!r.log[i].improved);
    }
  }
}

TEST_CASE("save/load: lossless round-trip, version and shape checks") {
  GcnModel model = init_model(GcnDims{}, 61, Aggregation::weighted_mean, 123.5);
  model.meta.epochs_run = 17;
  model.meta.best_epoch = 9;
  model.meta.best_val_loss = 0.125;
  model.meta.final_train_loss = 0.0625;
  model.meta.seed = 777;
  model.meta.train_graphs = 10;
  model.meta.val_graphs = 3;
  auto path = (std::filesystem::temp_directory_path() / "depolar_model_rt.json").string();
  save_model(model, path);
  GcnModel back = load_model(path);
  CHECK(back.W0.data == model.W0.data);
  CHECK(back.B0.data == model.B0.data);
  CHECK(back.W1.data == model.W1.data);
  CHECK(back.B1.data == model.B1.data);
  CHECK(back.head_w == model.head_w);
  CHECK(back.head_b == model.head_b);
  CHECK(back.target_scale == model.target_scale);
  CHECK(back.aggregation == Aggregation::weighted_mean);
  CHECK(back.meta.epochs_run == 17);
  CHECK(back.meta.best_epoch == 9);
  CHECK(back.meta.best_val_loss == 0.125);
  CHECK(back.meta.seed == 777);

  // Loaded model is usable by forward.
  Rng rng(67);
  Network net = random_opinion_graph(rng, 8, 0.4);
  std::vector<double> a = gcn_forward(model, net, ModerationState(net));
  std::vector<double> b = gcn_forward(back, net, ModerationState(net));
  CHECK(a == b);

  // Truncated file -> format error.
  {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(path);
    out << text.substr(0, text.size() / 2);
  }
  try {
    load_model(path);
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::format);
  }

  // Version mismatch -> format error.
  save_model(model, path);
  {
    std::ifstream in(path);
    nlohmann::json doc;
    in >> doc;
    doc["version"] = 2;
    std::ofstream out(path);
    out << doc.dump();
  }
  CHECK_THROWS_AS(load_model(path), Error);

  // Shape inconsistency -> format error.
  save_model(model, path);
  {
    std::ifstream in(path);
    nlohmann::json doc;
    in >> doc;
    doc["W0"].erase(0);
    std::ofstream out(path);
    out << doc.dump();
  }
  try {
    load_model(path);
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::format);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model("/nonexistent/depolar_model.json"), Error);
}

TEST_CASE("spearman: exact values and tie handling") {
  std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> up = {10.0, 20.0, 30.0, 40.0};
  std::vector<double> down = {4.0, 3.0, 2.0, 1.0};
  CHECK(spearman(a, up) == doctest::Approx(1.0));
  CHECK(spearman(a, down) == doctest::Approx(-1.0));
  std::vector<double> constant = {5.0, 5.0, 5.0, 5.0};
  CHECK(spearman(a, constant) == 0.0);
  // Classic tie case: ranks (1, 2.5, 2.5, 4).
  std::vector<double> ties = {1.0, 2.0, 2.0, 3.0};
  CHECK(spearman(ties, ties) == doctest::Approx(1.0));
  CHECK_THROWS_AS(spearman(a, std::vector<double>{1.0}), Error);
}

TEST_CASE("evaluate_ranking: perfect predictor scores rho 1 and full hit rate") {
  Rng rng(71);
  std::vector<LabeledGraph> graphs;
  for (int i = 0; i < 4; ++i) graphs.push_back(random_labeled(rng, 12, 0.3));
  // An oracle-like model cannot be built directly, so check the degenerate
  // bound instead: hit rate of the true-argmax baseline through the report
  // structure using a trained overfit model on one graph.
  std::vector<LabeledGraph> one{graphs[0]};
  TrainOptions opts;
  opts.epochs = 1500;
  opts.learning_rate = 3e-3;
  opts.val_frac = 0.0;
  opts.patience = 1500;
  opts.seed = 5;
  opts.target_scale = 100.0;
  TrainResult r = train(one, opts);
  RankingReport report = evaluate_ranking(r.model, one, 5);
  CHECK(report.graphs == 1);
  CHECK(report.mean_spearman > 0.95);
  CHECK(report.top_hit_rate == doctest::Approx(1.0));
}
