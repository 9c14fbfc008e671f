// End-to-end tests of the shared-library C ABI. This file deliberately uses
// only depolar.h — no internal headers — to prove the exported surface is
// sufficient for a complete consumer.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "depolar.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "depolar_capi_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& body) {
  fs::path p = dir / name;
  std::ofstream out(p);
  REQUIRE(out.good());
  out << body;
  return p;
}

struct NetworkHandle {
  dp_network* ptr = nullptr;
  ~NetworkHandle() { dp_network_free(ptr); }
};
struct ModelHandle {
  dp_model* ptr = nullptr;
  ~ModelHandle() { dp_model_free(ptr); }
};
struct TraceHandle {
  dp_trace* ptr = nullptr;
  ~TraceHandle() { dp_trace_free(ptr); }
};

NetworkHandle load_path3(const fs::path& dir) {
  fs::path edges = write_file(dir, "path3.txt", "0 1\n1 2\n");
  write_file(dir, "path3_opinions.csv", "node,internal\n0,1\n2,-1\n");
  NetworkHandle net;
  REQUIRE(dp_network_load(edges.string().c_str(), 1.0, &net.ptr) == DP_OK);
  REQUIRE(dp_network_load_opinions(net.ptr, (dir / "path3_opinions.csv").string().c_str()) ==
          DP_OK);
  return net;
}

}  // namespace

TEST_CASE("version, error text, and numeric formatting are available") {
  CHECK(std::string(dp_version()) == "1.0.0");
  CHECK(dp_last_error() != nullptr);

  char buf[32];
  REQUIRE(dp_format_double(0.25, buf, sizeof buf) == DP_OK);
  CHECK(std::string(buf) == "0.25");
  REQUIRE(dp_format_double(1.0 / 3.0, buf, sizeof buf) == DP_OK);
  CHECK(std::strtod(buf, nullptr) == 1.0 / 3.0);  // round-trips exactly
  CHECK(dp_format_double(0.25, buf, 2) == DP_ERR_ARGUMENT);
  CHECK(dp_format_double(0.25, nullptr, 32) == DP_ERR_ARGUMENT);

  CHECK(dp_default_k(105) == 11);
  CHECK(dp_default_k(0) == 0);
}

TEST_CASE("option initializers fill documented defaults") {
  dp_solver_options solver;
  dp_solver_options_init(&solver);
  CHECK(solver.tol == 1e-10);
  CHECK(solver.max_iter == 100000);
  CHECK(solver.method == 0);
  CHECK(solver.threads == 1);

  dp_dcsbm_params params;
  dp_dcsbm_params_init(&params);
  CHECK(params.n == 1000);
  CHECK(params.gamma == 2.5);
  CHECK(params.seed == 0);

  dp_corpus_params corpus;
  dp_corpus_params_init(&corpus);
  CHECK(corpus.count == 128);
  CHECK(corpus.augment_anchors == 0);

  dp_train_options train;
  dp_train_options_init(&train);
  CHECK(train.epochs == 200);
  CHECK(train.learning_rate == 1e-3);
  CHECK(train.batch_size == 8);
  CHECK(train.patience == 20);
  CHECK(train.target_scale == 1000.0);
  CHECK(train.aggregation == 0);
}

TEST_CASE("networks load, expose counts and opinions, and write back") {
  fs::path dir = fresh_dir("network");
  NetworkHandle net = load_path3(dir);

  CHECK(dp_network_node_count(net.ptr) == 3);
  CHECK(dp_network_edge_count(net.ptr) == 2);

  double s[3];
  REQUIRE(dp_network_internal(net.ptr, s, 3) == DP_OK);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == -1.0);
  CHECK(dp_network_internal(net.ptr, s, 2) == DP_ERR_ARGUMENT);
  CHECK(std::string(dp_last_error()).find("capacity") != std::string::npos);

  const double replaced[3] = {0.5, 0.0, -0.5};
  REQUIRE(dp_network_set_opinions(net.ptr, nullptr, replaced, 3) == DP_OK);
  double z[3];
  REQUIRE(dp_network_expressed(net.ptr, z, 3) == DP_OK);
  CHECK(z[0] == 0.5);
  CHECK(dp_network_set_opinions(net.ptr, replaced, nullptr, 2) == DP_ERR_ARGUMENT);

  REQUIRE(dp_network_write(net.ptr, (dir / "copy.txt").string().c_str()) == DP_OK);
  REQUIRE(dp_network_write_opinions(net.ptr, (dir / "copy.csv").string().c_str()) == DP_OK);
  NetworkHandle copy;
  REQUIRE(dp_network_load((dir / "copy.txt").string().c_str(), 1.0, &copy.ptr) == DP_OK);
  CHECK(dp_network_node_count(copy.ptr) == 3);
  CHECK(dp_network_edge_count(copy.ptr) == 2);
}

TEST_CASE("failures return status codes and a thread-local message") {
  dp_network* net = nullptr;
  CHECK(dp_network_load("/nonexistent/edges.txt", 1.0, &net) == DP_ERR_IO);
  CHECK(std::string(dp_last_error()).find("/nonexistent/edges.txt") != std::string::npos);
  CHECK(net == nullptr);

  fs::path dir = fresh_dir("badfile");
  fs::path bad = write_file(dir, "bad.txt", "0 0\n");  // self-loop
  CHECK(dp_network_load(bad.string().c_str(), 1.0, &net) == DP_ERR_FORMAT);
  CHECK(std::string(dp_last_error()).find(":1:") != std::string::npos);

  CHECK(dp_network_load(nullptr, 1.0, &net) == DP_ERR_ARGUMENT);
  CHECK(dp_network_node_count(nullptr) == 0);
  CHECK(dp_trace_steps(nullptr) == 0);
}

TEST_CASE("equilibria match the hand-solved line graph") {
  fs::path dir = fresh_dir("equilibrium");
  NetworkHandle net = load_path3(dir);

  double z[3];
  double pi = 0.0;
  REQUIRE(dp_network_equilibrium(net.ptr, nullptr, 0, nullptr, z, &pi) == DP_OK);
  CHECK(std::fabs(z[0] - 0.5) < 1e-9);
  CHECK(std::fabs(z[1]) < 1e-9);
  CHECK(std::fabs(z[2] + 0.5) < 1e-9);
  CHECK(std::fabs(pi - 1.0 / 6.0) < 1e-9);

  const int64_t anchor = 0;
  REQUIRE(dp_network_equilibrium(net.ptr, &anchor, 1, nullptr, z, &pi) == DP_OK);
  CHECK(z[0] == 0.0);
  CHECK(std::fabs(z[1] + 0.2) < 1e-9);
  CHECK(std::fabs(z[2] + 0.6) < 1e-9);

  const int64_t bad = 7;
  CHECK(dp_network_equilibrium(net.ptr, &bad, 1, nullptr, z, &pi) == DP_ERR_INDEX);

  dp_solver_options direct;
  dp_solver_options_init(&direct);
  direct.method = 1;
  REQUIRE(dp_network_equilibrium(net.ptr, nullptr, 0, &direct, z, &pi) == DP_OK);
  CHECK(std::fabs(z[0] - 0.5) < 1e-9);

  direct.method = 7;
  CHECK(dp_network_equilibrium(net.ptr, nullptr, 0, &direct, z, &pi) == DP_ERR_ARGUMENT);
}

TEST_CASE("synthetic graphs generate with opinions and label their gains") {
  dp_dcsbm_params params;
  dp_dcsbm_params_init(&params);
  params.n = 80;
  params.seed = 3;

  NetworkHandle net;
  REQUIRE(dp_dcsbm_generate(&params, nullptr, &net.ptr) == DP_OK);
  const int64_t n = dp_network_node_count(net.ptr);
  CHECK(n > 40);
  CHECK(n <= 80);

  std::vector<double> s(static_cast<std::size_t>(n));
  REQUIRE(dp_network_internal(net.ptr, s.data(), n) == DP_OK);
  for (double v : s) CHECK(std::fabs(v) == 1.0);

  std::vector<double> gains(static_cast<std::size_t>(n));
  REQUIRE(dp_label_gains(net.ptr, nullptr, 1, gains.data()) == DP_OK);
  for (double g : gains) CHECK(std::isfinite(g));

  params.mu = 1.5;
  dp_network* bad = nullptr;
  CHECK(dp_dcsbm_generate(&params, nullptr, &bad) == DP_ERR_ARGUMENT);
}

TEST_CASE("gain labels reproduce the hand-solved dyad values") {
  fs::path dir = fresh_dir("labels");
  fs::path edges = write_file(dir, "dyad.txt", "0 1\n");
  NetworkHandle net;
  REQUIRE(dp_network_load(edges.string().c_str(), 1.0, &net.ptr) == DP_OK);
  const double s[2] = {1.0, -1.0};
  REQUIRE(dp_network_set_opinions(net.ptr, s, nullptr, 2) == DP_OK);

  double gains[2];
  REQUIRE(dp_label_gains(net.ptr, nullptr, 1, gains) == DP_OK);
  CHECK(std::fabs(gains[0] + 1.0 / 72.0) < 1e-9);
  CHECK(std::fabs(gains[1] + 1.0 / 72.0) < 1e-9);
}

TEST_CASE("corpora build with progress callbacks and validate from disk") {
  fs::path dir = fresh_dir("corpus");
  dp_corpus_params params;
  dp_corpus_params_init(&params);
  params.count = 2;
  params.base.n = 50;
  params.base.seed = 99;

  struct Progress {
    int calls = 0;
    int64_t last_total = 0;
  } progress;
  auto on_entry = [](int64_t index, int64_t total, const char* name, void* user) {
    auto* p = static_cast<Progress*>(user);
    p->calls += 1;
    p->last_total = total;
    CHECK(index >= 1);
    CHECK(index <= total);
    CHECK(name != nullptr);
  };
  REQUIRE(dp_corpus_build(&params, nullptr, dir.string().c_str(), on_entry, &progress) == DP_OK);
  CHECK(progress.calls == 2);
  CHECK(progress.last_total == 2);

  int64_t entries = 0;
  REQUIRE(dp_corpus_validate(dir.string().c_str(), &entries) == DP_OK);
  CHECK(entries == 2);

  CHECK(dp_corpus_validate((dir / "missing").string().c_str(), &entries) == DP_ERR_IO);
  params.count = -1;
  CHECK(dp_corpus_build(&params, nullptr, dir.string().c_str(), nullptr, nullptr) ==
        DP_ERR_ARGUMENT);
}

TEST_CASE("models train on a corpus, persist, and drive guided selection") {
  fs::path dir = fresh_dir("train");
  dp_corpus_params corpus;
  dp_corpus_params_init(&corpus);
  corpus.count = 3;
  corpus.base.n = 50;
  corpus.base.seed = 7;
  REQUIRE(dp_corpus_build(&corpus, nullptr, dir.string().c_str(), nullptr, nullptr) == DP_OK);

  dp_train_options opts;
  dp_train_options_init(&opts);
  opts.epochs = 5;
  opts.seed = 11;

  int epochs_seen = 0;
  auto on_epoch = [](int64_t epoch, double train_loss, double val_loss, int, void* user) {
    auto* count = static_cast<int*>(user);
    *count += 1;
    CHECK(epoch >= 1);
    CHECK(std::isfinite(train_loss));
    CHECK(std::isfinite(val_loss));
  };
  ModelHandle model;
  REQUIRE(dp_train(dir.string().c_str(), &opts, on_epoch, &epochs_seen, &model.ptr) == DP_OK);
  CHECK(epochs_seen == 5);

  dp_training_meta meta;
  REQUIRE(dp_model_training_meta(model.ptr, &meta) == DP_OK);
  CHECK(meta.epochs_run == 5);
  CHECK(meta.seed == 11);
  CHECK(meta.train_graphs + meta.val_graphs == 3);

  fs::path model_path = dir / "model.json";
  REQUIRE(dp_model_save(model.ptr, model_path.string().c_str()) == DP_OK);
  ModelHandle back;
  REQUIRE(dp_model_load(model_path.string().c_str(), &back.ptr) == DP_OK);
  dp_training_meta meta2;
  REQUIRE(dp_model_training_meta(back.ptr, &meta2) == DP_OK);
  CHECK(meta2.best_epoch == meta.best_epoch);

  // The persisted model drives the guided solver through the same ABI.
  dp_dcsbm_params gen;
  dp_dcsbm_params_init(&gen);
  gen.n = 60;
  gen.seed = 15;
  NetworkHandle net;
  REQUIRE(dp_dcsbm_generate(&gen, nullptr, &net.ptr) == DP_OK);
  TraceHandle trace;
  REQUIRE(dp_solve_gnn(net.ptr, 3, back.ptr, nullptr, &trace.ptr) == DP_OK);
  CHECK(dp_trace_steps(trace.ptr) == 3);
  CHECK(std::string(dp_trace_algorithm(trace.ptr)) == "gnn");

  CHECK(dp_model_load((dir / "absent.json").string().c_str(), &back.ptr) == DP_ERR_IO);
  CHECK(dp_train((dir / "missing").string().c_str(), &opts, nullptr, nullptr, &model.ptr) ==
        DP_ERR_IO);
}

TEST_CASE("solvers run through the ABI and traces round-trip to CSV") {
  fs::path dir = fresh_dir("solve");
  NetworkHandle net = load_path3(dir);

  TraceHandle greedy;
  REQUIRE(dp_solve_greedy(net.ptr, 1, nullptr, 1, &greedy.ptr) == DP_OK);
  CHECK(std::string(dp_trace_algorithm(greedy.ptr)) == "greedy");
  REQUIRE(dp_trace_steps(greedy.ptr) == 1);

  int64_t chosen[1];
  REQUIRE(dp_trace_chosen(greedy.ptr, chosen, 1) == DP_OK);
  CHECK(chosen[0] == 0);
  double pi[2];
  REQUIRE(dp_trace_polarization(greedy.ptr, pi, 2) == DP_OK);
  CHECK(std::fabs(pi[0] - 1.0 / 6.0) < 1e-9);
  CHECK(std::fabs(pi[1] - 2.0 / 15.0) < 1e-9);
  CHECK(dp_trace_polarization(greedy.ptr, pi, 1) == DP_ERR_ARGUMENT);
  double elapsed[2];
  REQUIRE(dp_trace_elapsed_ms(greedy.ptr, elapsed, 2) == DP_OK);
  CHECK(elapsed[0] >= 0.0);
  int64_t sweeps[2];
  REQUIRE(dp_trace_sweeps(greedy.ptr, sweeps, 2) == DP_OK);
  CHECK(sweeps[0] >= 1);

  CHECK(dp_solve_greedy(net.ptr, 99, nullptr, 1, &greedy.ptr) == DP_ERR_ARGUMENT);

  // Random baseline: seeded, reproducible through the ABI.
  TraceHandle r1, r2;
  REQUIRE(dp_solve_random(net.ptr, 2, 5, nullptr, &r1.ptr) == DP_OK);
  REQUIRE(dp_solve_random(net.ptr, 2, 5, nullptr, &r2.ptr) == DP_OK);
  int64_t c1[2], c2[2];
  REQUIRE(dp_trace_chosen(r1.ptr, c1, 2) == DP_OK);
  REQUIRE(dp_trace_chosen(r2.ptr, c2, 2) == DP_OK);
  CHECK(c1[0] == c2[0]);
  CHECK(c1[1] == c2[1]);

  // Replay rejects duplicates; accepts the greedy pick.
  TraceHandle replay;
  const int64_t dup[2] = {0, 0};
  CHECK(dp_evaluate_selection(net.ptr, dup, 2, nullptr, &replay.ptr) == DP_ERR_ARGUMENT);
  REQUIRE(dp_evaluate_selection(net.ptr, chosen, 1, nullptr, &replay.ptr) == DP_OK);
  double rpi[2];
  REQUIRE(dp_trace_polarization(replay.ptr, rpi, 2) == DP_OK);
  CHECK(rpi[1] == pi[1]);

  // CSV output: config comments, stable bytes, timing only on request.
  fs::path csv_a = dir / "a.csv";
  fs::path csv_b = dir / "b.csv";
  REQUIRE(dp_trace_write_csv(greedy.ptr, csv_a.string().c_str(), "k: 1", 0) == DP_OK);
  REQUIRE(dp_trace_write_csv(greedy.ptr, csv_b.string().c_str(), "k: 1", 0) == DP_OK);
  std::ifstream in_a(csv_a), in_b(csv_b);
  std::string body_a((std::istreambuf_iterator<char>(in_a)), std::istreambuf_iterator<char>());
  std::string body_b((std::istreambuf_iterator<char>(in_b)), std::istreambuf_iterator<char>());
  CHECK(body_a == body_b);
  CHECK(body_a.find("# k: 1\n") == 0);
  CHECK(body_a.find("step,node,polarization,elapsed_ms\n") != std::string::npos);
  CHECK(dp_trace_write_csv(greedy.ptr, "/nonexistent/dir/out.csv", nullptr, 0) == DP_ERR_IO);
}
