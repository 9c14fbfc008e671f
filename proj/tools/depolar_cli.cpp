// depolar — command-line front end for the opinion-moderation toolkit.
//
// This binary is a pure consumer of the shared library's C API (depolar.h);
// it contains no algorithmic code of its own. Exit codes: 0 success,
// 1 runtime failure (I/O, convergence, ...), 2 usage error.
#include <CLI11.hpp>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "depolar.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int exit_code_for(dp_status status) {
  if (status == DP_OK) return kExitOk;
  if (status == DP_ERR_ARGUMENT || status == DP_ERR_RANGE) return kExitUsage;
  return kExitFailure;
}

/// Prints the library's error message and converts the status to an exit
/// code. Call only on failure.
int report(dp_status status, const std::string& context) {
  std::cerr << "depolar: " << context << ": " << dp_last_error() << "\n";
  return exit_code_for(status);
}

std::string fmt(double value) {
  char buf[40];
  if (dp_format_double(value, buf, sizeof buf) != DP_OK) return "nan";
  return buf;
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

/// Options shared by every subcommand.
struct GlobalOptions {
  double tol = 1e-10;
  int64_t max_iter = 100000;
  int threads = 1;
  uint64_t seed = 0;
  std::string out;

  dp_solver_options solver() const {
    dp_solver_options s;
    dp_solver_options_init(&s);
    s.tol = tol;
    s.max_iter = max_iter;
    s.threads = threads;
    return s;
  }
};

/// Dataset source shared by solve/sweep/bench: either an edge-list file
/// (with optional opinions CSV) or a generated two-community graph.
struct DatasetOptions {
  std::string edges;
  std::string opinions;
  double default_weight = 1.0;
  int64_t dcsbm_n = 0;  // > 0 selects the synthetic source
  double mu = 0.0;      // 0 = library default
};

void add_dataset_flags(CLI::App* cmd, DatasetOptions& data) {
  auto* edges = cmd->add_option("--edges", data.edges, "Edge-list file (u v [w] per line)");
  cmd->add_option("--opinions", data.opinions, "Opinions CSV (node,internal[,expressed])")
      ->needs(edges);
  cmd->add_option("--default-weight", data.default_weight,
                  "Weight for edges listed without one")
      ->needs(edges);
  auto* synth = cmd->add_option("--dcsbm", data.dcsbm_n,
                                "Generate a two-community graph with this many nodes instead "
                                "of loading files (seeded by --seed)");
  cmd->add_option("--mu", data.mu, "Inter-community edge share for --dcsbm (0 = default)")
      ->needs(synth);
  synth->excludes(edges);
}

/// Loads or generates the requested network. Returns kExitOk and fills `net`
/// on success; otherwise returns the exit code after reporting.
int open_dataset(const DatasetOptions& data, const GlobalOptions& global, NetworkHandle& net,
                 std::string& description) {
  if (data.dcsbm_n > 0) {
    dp_dcsbm_params params;
    dp_dcsbm_params_init(&params);
    params.n = data.dcsbm_n;
    params.seed = global.seed;
    if (data.mu > 0.0) params.mu = data.mu;
    dp_solver_options solver = global.solver();
    if (dp_status s = dp_dcsbm_generate(&params, &solver, &net.ptr)) {
      return report(s, "generating graph");
    }
    description = "dcsbm(n=" + std::to_string(data.dcsbm_n) +
                  ", seed=" + std::to_string(global.seed) + ")";
    return kExitOk;
  }
  if (data.edges.empty()) {
    std::cerr << "depolar: either --edges or --dcsbm is required\n";
    return kExitUsage;
  }
  if (dp_status s = dp_network_load(data.edges.c_str(), data.default_weight, &net.ptr)) {
    return report(s, "loading " + data.edges);
  }
  if (!data.opinions.empty()) {
    if (dp_status s = dp_network_load_opinions(net.ptr, data.opinions.c_str())) {
      return report(s, "loading " + data.opinions);
    }
  }
  description = data.edges;
  return kExitOk;
}

std::string solver_config_lines(const GlobalOptions& global) {
  std::ostringstream out;
  out << "tol: " << fmt(global.tol) << "\n"
      << "max_iter: " << global.max_iter << "\n"
      << "threads: " << global.threads;
  return out.str();
}

/// Opens `path` for writing or fails loudly.
int open_output(const std::string& path, std::ofstream& out) {
  out.open(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "depolar: cannot open " << path << " for writing\n";
    return kExitFailure;
  }
  return kExitOk;
}

int write_comment_header(std::ofstream& out, const std::string& config) {
  std::istringstream lines(config);
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
  int64_t count = 128;
  int64_t n = 1000;
  double block_split = 0.0;
  double gamma = 0.0;
  double d_min = 0.0;
  double d_max = -1.0;
  double mu = 0.0;
  int64_t augment = 0;
  bool quiet = false;
};

int cmd_generate(const GlobalOptions& global, const GenerateOptions& opts) {
  if (global.out.empty()) {
    std::cerr << "depolar: generate requires --out <corpus-dir>\n";
    return kExitUsage;
  }
  dp_corpus_params params;
  dp_corpus_params_init(&params);
  params.count = opts.count;
  params.augment_anchors = opts.augment;
  params.threads = global.threads;
  params.base.n = opts.n;
  params.base.seed = global.seed;
  if (opts.block_split > 0.0) params.base.block_split = opts.block_split;
  if (opts.gamma > 0.0) params.base.gamma = opts.gamma;
  if (opts.d_min > 0.0) params.base.d_min = opts.d_min;
  if (opts.d_max >= 0.0) params.base.d_max = opts.d_max;
  if (opts.mu > 0.0) params.base.mu = opts.mu;

  dp_solver_options solver = global.solver();
  struct Progress {
    bool quiet;
  } progress{opts.quiet};
  auto on_entry = [](int64_t index, int64_t total, const char* name, void* user) {
    if (!static_cast<Progress*>(user)->quiet) {
      std::fprintf(stderr, "[%" PRId64 "/%" PRId64 "] %s\n", index, total, name);
    }
  };
  if (dp_status s = dp_corpus_build(&params, &solver, global.out.c_str(), on_entry, &progress)) {
    return report(s, "building corpus in " + global.out);
  }
  std::cout << "wrote " << opts.count << " labeled graphs"
            << (opts.augment > 0
                    ? " (+" + std::to_string(opts.count * opts.augment) + " anchored variants)"
                    : "")
            << " to " << global.out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- label

struct LabelOptions {
  DatasetOptions data;
};

int cmd_label(const GlobalOptions& global, const LabelOptions& opts) {
  if (global.out.empty()) {
    std::cerr << "depolar: label requires --out <targets.csv>\n";
    return kExitUsage;
  }
  NetworkHandle net;
  std::string description;
  if (int rc = open_dataset(opts.data, global, net, description)) return rc;

  const int64_t n = dp_network_node_count(net.ptr);
  std::vector<double> gains(static_cast<std::size_t>(n));
  dp_solver_options solver = global.solver();
  if (dp_status s = dp_label_gains(net.ptr, &solver, global.threads, gains.data())) {
    return report(s, "labeling gains");
  }

  std::ofstream out;
  if (int rc = open_output(global.out, out)) return rc;
  write_comment_header(out, "dataset: " + description + "\n" + solver_config_lines(global));
  out << "node,gain\n";
  for (int64_t v = 0; v < n; ++v) {
    out << v << "," << fmt(gains[static_cast<std::size_t>(v)]) << "\n";
  }
  if (!out) {
    std::cerr << "depolar: write to " << global.out << " failed\n";
    return kExitFailure;
  }
  std::cout << "labeled " << n << " nodes -> " << global.out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainOptionsCli {
  std::string corpus;
  int64_t epochs = 200;
  double learning_rate = 1e-3;
  int64_t batch_size = 8;
  double val_frac = 0.2;
  int64_t patience = 20;
  double target_scale = 1000.0;
  std::string aggregation = "mean";
  std::string log_path;
  bool quiet = false;
};

int cmd_train(const GlobalOptions& global, const TrainOptionsCli& opts) {
  if (global.out.empty()) {
    std::cerr << "depolar: train requires --out <model.json>\n";
    return kExitUsage;
  }
  dp_train_options train;
  dp_train_options_init(&train);
  train.epochs = opts.epochs;
  train.learning_rate = opts.learning_rate;
  train.batch_size = opts.batch_size;
  train.val_frac = opts.val_frac;
  train.patience = opts.patience;
  train.seed = global.seed;
  train.target_scale = opts.target_scale;
  train.aggregation = opts.aggregation == "weighted" ? 1 : 0;
  train.threads = global.threads;

  struct EpochSink {
    std::ofstream log;
    bool quiet = false;
  } sink;
  sink.quiet = opts.quiet;
  if (!opts.log_path.empty()) {
    if (int rc = open_output(opts.log_path, sink.log)) return rc;
    sink.log << "# corpus: " << opts.corpus << "\n"
             << "# seed: " << global.seed << "\n"
             << "# epochs: " << opts.epochs << "\n"
             << "# learning_rate: " << fmt(opts.learning_rate) << "\n"
             << "# batch_size: " << opts.batch_size << "\n"
             << "# val_frac: " << fmt(opts.val_frac) << "\n"
             << "# patience: " << opts.patience << "\n"
             << "# target_scale: " << fmt(opts.target_scale) << "\n"
             << "# aggregation: " << opts.aggregation << "\n"
             << "epoch,train_loss,val_loss,improved\n";
  }
  auto on_epoch = [](int64_t epoch, double train_loss, double val_loss, int improved,
                     void* user) {
    auto* s = static_cast<EpochSink*>(user);
    if (s->log.is_open()) {
      s->log << epoch << "," << fmt(train_loss) << "," << fmt(val_loss) << "," << improved
             << "\n";
    }
    if (!s->quiet && (improved != 0 || epoch % 25 == 0)) {
      std::fprintf(stderr, "epoch %" PRId64 ": train %.6g val %.6g%s\n", epoch, train_loss,
                   val_loss, improved ? " *" : "");
    }
  };

  ModelHandle model;
  if (dp_status s = dp_train(opts.corpus.c_str(), &train, on_epoch, &sink, &model.ptr)) {
    return report(s, "training on " + opts.corpus);
  }
  if (dp_status s = dp_model_save(model.ptr, global.out.c_str())) {
    return report(s, "saving model to " + global.out);
  }
  dp_training_meta meta;
  if (dp_status s = dp_model_training_meta(model.ptr, &meta)) {
    return report(s, "reading training summary");
  }
  std::cout << "trained " << meta.epochs_run << " epochs on " << meta.train_graphs
            << " graphs (" << meta.val_graphs << " held out); best epoch " << meta.best_epoch
            << ", best val loss " << fmt(meta.best_val_loss) << "; model -> " << global.out
            << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- solve

struct SolveOptions {
  DatasetOptions data;
  std::string algorithm;
  int64_t k = 0;  // 0 = default budget
  std::string model_path;
  bool timing = false;
};

int run_algorithm(const std::string& algorithm, dp_network* net, int64_t k,
                  const dp_solver_options& solver, const GlobalOptions& global,
                  const ModelHandle& model, uint64_t seed, TraceHandle& trace) {
  dp_status s = DP_OK;
  if (algorithm == "greedy") {
    s = dp_solve_greedy(net, k, &solver, global.threads, &trace.ptr);
  } else if (algorithm == "gnn") {
    s = dp_solve_gnn(net, k, model.ptr, &solver, &trace.ptr);
  } else {
    s = dp_solve_random(net, k, seed, &solver, &trace.ptr);
  }
  if (s != DP_OK) return report(s, algorithm + " selection");
  return kExitOk;
}

int cmd_solve(const GlobalOptions& global, const SolveOptions& opts) {
  if (opts.algorithm == "gnn" && opts.model_path.empty()) {
    std::cerr << "depolar: --algorithm gnn requires --model <model.json>\n";
    return kExitUsage;
  }
  NetworkHandle net;
  std::string description;
  if (int rc = open_dataset(opts.data, global, net, description)) return rc;

  ModelHandle model;
  if (!opts.model_path.empty()) {
    if (dp_status s = dp_model_load(opts.model_path.c_str(), &model.ptr)) {
      return report(s, "loading model " + opts.model_path);
    }
  }

  const int64_t n = dp_network_node_count(net.ptr);
  const int64_t k = opts.k > 0 ? opts.k : dp_default_k(n);
  dp_solver_options solver = global.solver();
  TraceHandle trace;
  if (int rc = run_algorithm(opts.algorithm, net.ptr, k, solver, global, model, global.seed,
                             trace)) {
    return rc;
  }

  std::vector<double> pi(static_cast<std::size_t>(k) + 1);
  if (dp_status s = dp_trace_polarization(trace.ptr, pi.data(), k + 1)) {
    return report(s, "reading trace");
  }
  std::cout << "algorithm: " << dp_trace_algorithm(trace.ptr) << "\n"
            << "dataset: " << description << " (" << n << " nodes, "
            << dp_network_edge_count(net.ptr) << " edges)\n"
            << "k: " << k << "\n"
            << "initial polarization: " << fmt(pi.front()) << "\n"
            << "final polarization: " << fmt(pi.back()) << "\n";

  if (!global.out.empty()) {
    std::ostringstream config;
    config << "algorithm: " << opts.algorithm << "\n"
           << "dataset: " << description << "\n"
           << "k: " << k << "\n"
           << "seed: " << global.seed << "\n";
    if (!opts.model_path.empty()) config << "model: " << opts.model_path << "\n";
    config << solver_config_lines(global);
    if (dp_status s = dp_trace_write_csv(trace.ptr, global.out.c_str(), config.str().c_str(),
                                         opts.timing ? 1 : 0)) {
      return report(s, "writing " + global.out);
    }
    std::cout << "trace -> " << global.out << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------- sweep

struct SweepOptions {
  DatasetOptions data;
  std::vector<std::string> algorithms{"greedy", "gnn", "random"};
  int64_t k_max = 0;  // 0 = default budget
  int64_t random_seeds = 10;
  std::string model_path;
};

int cmd_sweep(const GlobalOptions& global, const SweepOptions& opts) {
  if (global.out.empty()) {
    std::cerr << "depolar: sweep requires --out <sweep.csv>\n";
    return kExitUsage;
  }
  for (const std::string& a : opts.algorithms) {
    if (a != "greedy" && a != "gnn" && a != "random") {
      std::cerr << "depolar: unknown algorithm '" << a << "'\n";
      return kExitUsage;
    }
  }
  const bool wants_gnn =
      std::find(opts.algorithms.begin(), opts.algorithms.end(), "gnn") != opts.algorithms.end();
  if (wants_gnn && opts.model_path.empty()) {
    std::cerr << "depolar: sweeping gnn requires --model <model.json>\n";
    return kExitUsage;
  }

  NetworkHandle net;
  std::string description;
  if (int rc = open_dataset(opts.data, global, net, description)) return rc;
  ModelHandle model;
  if (!opts.model_path.empty()) {
    if (dp_status s = dp_model_load(opts.model_path.c_str(), &model.ptr)) {
      return report(s, "loading model " + opts.model_path);
    }
  }

  const int64_t n = dp_network_node_count(net.ptr);
  const int64_t k_max = opts.k_max > 0 ? opts.k_max : dp_default_k(n);
  dp_solver_options solver = global.solver();

  std::ofstream out;
  if (int rc = open_output(global.out, out)) return rc;
  std::ostringstream config;
  config << "dataset: " << description << "\n"
         << "k_max: " << k_max << "\n"
         << "random_seeds: " << opts.random_seeds << "\n"
         << "seed: " << global.seed << "\n";
  if (!opts.model_path.empty()) config << "model: " << opts.model_path << "\n";
  config << solver_config_lines(global);
  write_comment_header(out, config.str());
  out << "algorithm,k,final_pi,seed\n";

  // Each algorithm's K-step trace already contains the final polarization of
  // every smaller budget: selections are prefix-stable, so one run per
  // algorithm (or per random seed) covers the whole sweep.
  std::vector<double> pi(static_cast<std::size_t>(k_max) + 1);
  for (const std::string& algorithm : opts.algorithms) {
    const int64_t repeats = algorithm == "random" ? opts.random_seeds : 1;
    for (int64_t r = 0; r < repeats; ++r) {
      const uint64_t seed = global.seed + static_cast<uint64_t>(r);
      TraceHandle trace;
      if (int rc = run_algorithm(algorithm, net.ptr, k_max, solver, global, model, seed, trace)) {
        return rc;
      }
      if (dp_status s = dp_trace_polarization(trace.ptr, pi.data(), k_max + 1)) {
        return report(s, "reading trace");
      }
      for (int64_t k = 0; k <= k_max; ++k) {
        out << algorithm << "," << k << "," << fmt(pi[static_cast<std::size_t>(k)]) << ","
            << seed << "\n";
      }
    }
  }
  if (!out) {
    std::cerr << "depolar: write to " << global.out << " failed\n";
    return kExitFailure;
  }
  std::cout << "sweep -> " << global.out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- bench

struct BenchOptions {
  std::vector<std::string> algorithms{"greedy", "gnn"};
  std::vector<int64_t> sizes{500, 1000, 2000, 5000};
  int64_t k = 50;
  std::string model_path;
  double mu = 0.0;
};

int cmd_bench(const GlobalOptions& global, const BenchOptions& opts) {
  if (global.out.empty()) {
    std::cerr << "depolar: bench requires --out <bench.csv>\n";
    return kExitUsage;
  }
  const bool wants_gnn =
      std::find(opts.algorithms.begin(), opts.algorithms.end(), "gnn") != opts.algorithms.end();
  if (wants_gnn && opts.model_path.empty()) {
    std::cerr << "depolar: benching gnn requires --model <model.json>\n";
    return kExitUsage;
  }
  ModelHandle model;
  if (!opts.model_path.empty()) {
    if (dp_status s = dp_model_load(opts.model_path.c_str(), &model.ptr)) {
      return report(s, "loading model " + opts.model_path);
    }
  }

  std::ofstream out;
  if (int rc = open_output(global.out, out)) return rc;
  std::ostringstream config;
  config << "k: " << opts.k << "\n"
         << "seed: " << global.seed << "\n";
  if (!opts.model_path.empty()) config << "model: " << opts.model_path << "\n";
  config << solver_config_lines(global);
  write_comment_header(out, config.str());
  out << "algorithm,n,k,wall_ms\n";

  dp_solver_options solver = global.solver();
  for (int64_t n : opts.sizes) {
    dp_dcsbm_params params;
    dp_dcsbm_params_init(&params);
    params.n = n;
    params.seed = global.seed;
    if (opts.mu > 0.0) params.mu = opts.mu;
    NetworkHandle net;
    if (dp_status s = dp_dcsbm_generate(&params, &solver, &net.ptr)) {
      return report(s, "generating graph (n=" + std::to_string(n) + ")");
    }
    const int64_t k = std::min<int64_t>(opts.k, dp_network_node_count(net.ptr));

    for (const std::string& algorithm : opts.algorithms) {
      TraceHandle trace;
      if (int rc =
              run_algorithm(algorithm, net.ptr, k, solver, global, model, global.seed, trace)) {
        return rc;
      }
      // Wall time of the selection loop only: sum of per-step readings,
      // which exclude file I/O and model loading by construction.
      std::vector<double> elapsed(static_cast<std::size_t>(k) + 1);
      if (dp_status s = dp_trace_elapsed_ms(trace.ptr, elapsed.data(), k + 1)) {
        return report(s, "reading timings");
      }
      double wall_ms = 0.0;
      for (double ms : elapsed) wall_ms += ms;
      out << algorithm << "," << n << "," << k << "," << fmt(wall_ms) << "\n";
      std::fprintf(stderr, "%s n=%" PRId64 " k=%" PRId64 ": %.1f ms\n", algorithm.c_str(), n, k,
                   wall_ms);
    }
  }
  if (!out) {
    std::cerr << "depolar: write to " << global.out << " failed\n";
    return kExitFailure;
  }
  std::cout << "bench -> " << global.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- validate

struct ValidateOptions {
  std::string corpus;
  std::string model_path;
  std::string edges;
};

int cmd_validate(const ValidateOptions& opts) {
  if (opts.corpus.empty() && opts.model_path.empty() && opts.edges.empty()) {
    std::cerr << "depolar: validate requires --corpus, --model, or --edges\n";
    return kExitUsage;
  }
  if (!opts.corpus.empty()) {
    int64_t entries = 0;
    if (dp_status s = dp_corpus_validate(opts.corpus.c_str(), &entries)) {
      return report(s, "validating corpus " + opts.corpus);
    }
    std::cout << "corpus ok: " << entries << " entries\n";
  }
  if (!opts.model_path.empty()) {
    ModelHandle model;
    if (dp_status s = dp_model_load(opts.model_path.c_str(), &model.ptr)) {
      return report(s, "validating model " + opts.model_path);
    }
    std::cout << "model ok: " << opts.model_path << "\n";
  }
  if (!opts.edges.empty()) {
    NetworkHandle net;
    if (dp_status s = dp_network_load(opts.edges.c_str(), 1.0, &net.ptr)) {
      return report(s, "validating edge list " + opts.edges);
    }
    std::cout << "edge list ok: " << dp_network_node_count(net.ptr) << " nodes, "
              << dp_network_edge_count(net.ptr) << " edges\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depolar — moderation-set selection for opinion networks (library v" +
               std::string(dp_version()) + ")"};
  app.require_subcommand(1);
  // Let --tol/--seed/--out and friends appear after the subcommand name too.
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--tol", global.tol, "Fixed-point stop threshold")->capture_default_str();
  app.add_option("--max-iter", global.max_iter, "Fixed-point sweep budget")
      ->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads")->capture_default_str();
  app.add_option("--seed", global.seed, "Master random seed")->capture_default_str();
  app.add_option("--out", global.out, "Output file or directory");

  GenerateOptions generate;
  auto* cmd_gen = app.add_subcommand("generate", "Build a labeled synthetic-graph corpus");
  cmd_gen->add_option("--count", generate.count, "Fresh graphs")->capture_default_str();
  cmd_gen->add_option("--n", generate.n, "Nodes per graph")->capture_default_str();
  cmd_gen->add_option("--block-split", generate.block_split, "Community-1 fraction (0 = default)");
  cmd_gen->add_option("--gamma", generate.gamma, "Degree power-law exponent (0 = default)");
  cmd_gen->add_option("--d-min", generate.d_min, "Expected-degree floor (0 = default)");
  cmd_gen->add_option("--d-max", generate.d_max, "Expected-degree cap (-1 = default)");
  cmd_gen->add_option("--mu", generate.mu, "Inter-community edge share (0 = default)");
  cmd_gen->add_option("--augment", generate.augment, "Anchored variants per graph")
      ->capture_default_str();
  cmd_gen->add_flag("--quiet", generate.quiet, "Suppress per-entry progress");

  LabelOptions label;
  auto* cmd_lab = app.add_subcommand("label", "Write per-node anchoring gains for one graph");
  add_dataset_flags(cmd_lab, label.data);

  TrainOptionsCli train;
  auto* cmd_trn = app.add_subcommand("train", "Train a gain-ranking model on a corpus");
  cmd_trn->add_option("--corpus", train.corpus, "Corpus directory")->required();
  cmd_trn->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
  cmd_trn->add_option("--lr", train.learning_rate, "Learning rate")->capture_default_str();
  cmd_trn->add_option("--batch-size", train.batch_size, "Graphs per batch")
      ->capture_default_str();
  cmd_trn->add_option("--val-frac", train.val_frac, "Held-out fraction")->capture_default_str();
  cmd_trn->add_option("--patience", train.patience, "Early-stop stall budget")
      ->capture_default_str();
  cmd_trn->add_option("--target-scale", train.target_scale, "Gain scaling for regression")
      ->capture_default_str();
  cmd_trn->add_option("--aggregation", train.aggregation, "Neighbor aggregation")
      ->check(CLI::IsMember({"mean", "weighted"}))
      ->capture_default_str();
  cmd_trn->add_option("--log", train.log_path, "Write an epoch log CSV here");
  cmd_trn->add_flag("--quiet", train.quiet, "Suppress epoch progress");

  SolveOptions solve;
  auto* cmd_slv = app.add_subcommand("solve", "Select and anchor K nodes, reporting the trace");
  cmd_slv->add_option("--algorithm", solve.algorithm, "greedy | gnn | random")
      ->required()
      ->check(CLI::IsMember({"greedy", "gnn", "random"}));
  cmd_slv->add_option("--k", solve.k, "Moderation budget (0 = 10% of nodes)")
      ->capture_default_str();
  cmd_slv->add_option("--model", solve.model_path, "Model file (required for gnn)");
  cmd_slv->add_flag("--timing", solve.timing, "Write wall-clock timings into the trace CSV");
  add_dataset_flags(cmd_slv, solve.data);

  SweepOptions sweep;
  auto* cmd_swp = app.add_subcommand("sweep", "Final polarization for every budget 0..k");
  cmd_swp->add_option("--algorithms", sweep.algorithms, "Algorithms to sweep")
      ->delimiter(',')
      ->capture_default_str();
  cmd_swp->add_option("--k-max", sweep.k_max, "Largest budget (0 = 10% of nodes)")
      ->capture_default_str();
  cmd_swp->add_option("--random-seeds", sweep.random_seeds, "Repeats for the random baseline")
      ->capture_default_str();
  cmd_swp->add_option("--model", sweep.model_path, "Model file (required when sweeping gnn)");
  add_dataset_flags(cmd_swp, sweep.data);

  BenchOptions bench;
  auto* cmd_bch = app.add_subcommand("bench", "Time the solvers across graph sizes");
  cmd_bch->add_option("--algorithms", bench.algorithms, "Algorithms to time")
      ->delimiter(',')
      ->capture_default_str();
  cmd_bch->add_option("--sizes", bench.sizes, "Graph sizes to generate")
      ->delimiter(',')
      ->capture_default_str();
  cmd_bch->add_option("--k", bench.k, "Moderation budget")->capture_default_str();
  cmd_bch->add_option("--model", bench.model_path, "Model file (required when timing gnn)");
  cmd_bch->add_option("--mu", bench.mu, "Inter-community edge share (0 = default)");

  ValidateOptions validate;
  auto* cmd_val = app.add_subcommand("validate", "Check corpora, models, or edge lists");
  cmd_val->add_option("--corpus", validate.corpus, "Corpus directory to validate");
  cmd_val->add_option("--model", validate.model_path, "Model file to validate");
  cmd_val->add_option("--edges", validate.edges, "Edge list to validate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (cmd_gen->parsed()) return cmd_generate(global, generate);
  if (cmd_lab->parsed()) return cmd_label(global, label);
  if (cmd_trn->parsed()) return cmd_train(global, train);
  if (cmd_slv->parsed()) return cmd_solve(global, solve);
  if (cmd_swp->parsed()) return cmd_sweep(global, sweep);
  if (cmd_bch->parsed()) return cmd_bench(global, bench);
  if (cmd_val->parsed()) return cmd_validate(validate);
  std::cerr << "depolar: no subcommand\n";
  return kExitUsage;
}
