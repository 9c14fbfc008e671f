// C ABI over the C++ core: opaque handles, status codes, thread-local error
// text. Exceptions never cross this boundary.
#include "depolar.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "dcsbm.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "selection.hpp"

using namespace depolar;

struct dp_network {
  Network net;
};
struct dp_model {
  GcnModel model;
};
struct dp_trace {
  SelectionTrace trace;
};

namespace {

thread_local std::string g_last_error;

dp_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return DP_ERR_IO;
    case ErrorCode::format: return DP_ERR_FORMAT;
    case ErrorCode::argument: return DP_ERR_ARGUMENT;
    case ErrorCode::range: return DP_ERR_RANGE;
    case ErrorCode::index: return DP_ERR_INDEX;
    case ErrorCode::convergence: return DP_ERR_CONVERGENCE;
    case ErrorCode::capability: return DP_ERR_CAPABILITY;
    case ErrorCode::model: return DP_ERR_MODEL;
    case ErrorCode::divergence: return DP_ERR_DIVERGENCE;
  }
  return DP_ERR_INTERNAL;
}

dp_status set_error(dp_status status, const char* message) {
  g_last_error = message == nullptr ? "" : message;
  return status;
}

/// Runs `body`, translating any escaping exception into a status code.
template <typename F>
dp_status guarded(F&& body) noexcept {
  try {
    return body();
  } catch (const Error& e) {
    return set_error(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(DP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(DP_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(DP_ERR_INTERNAL, "unknown failure");
  }
}

dp_status require(bool ok, const char* message) {
  return ok ? DP_OK : set_error(DP_ERR_ARGUMENT, message);
}

SolverOptions to_solver(const dp_solver_options* opts) {
  SolverOptions s;
  if (opts == nullptr) return s;
  s.tol = opts->tol;
  s.max_iter = opts->max_iter;
  if (opts->method != 0 && opts->method != 1) {
    fail(ErrorCode::argument, "solver method must be 0 (fixed-point) or 1 (direct), got " +
                                  std::to_string(opts->method));
  }
  s.method = opts->method == 1 ? SolveMethod::direct : SolveMethod::fixed_point;
  s.threads = opts->threads;
  s.direct_cap = opts->direct_cap;
  return s;
}

DcsbmParams to_dcsbm(const dp_dcsbm_params* params) {
  DcsbmParams p;
  if (params == nullptr) return p;
  p.n = params->n;
  p.block_split = params->block_split;
  p.gamma = params->gamma;
  p.d_min = params->d_min;
  p.d_max = params->d_max;
  p.mu = params->mu;
  p.seed = params->seed;
  return p;
}

dp_status copy_out(const std::vector<double>& values, double* out, int64_t cap,
                   const char* what) {
  if (out == nullptr) return set_error(DP_ERR_ARGUMENT, "output buffer is NULL");
  if (cap < static_cast<int64_t>(values.size())) {
    g_last_error = std::string(what) + " needs capacity " + std::to_string(values.size()) +
                   ", got " + std::to_string(cap);
    return DP_ERR_ARGUMENT;
  }
  std::memcpy(out, values.data(), values.size() * sizeof(double));
  return DP_OK;
}

dp_status copy_out(const std::vector<int64_t>& values, int64_t* out, int64_t cap,
                   const char* what) {
  if (out == nullptr) return set_error(DP_ERR_ARGUMENT, "output buffer is NULL");
  if (cap < static_cast<int64_t>(values.size())) {
    g_last_error = std::string(what) + " needs capacity " + std::to_string(values.size()) +
                   ", got " + std::to_string(cap);
    return DP_ERR_ARGUMENT;
  }
  std::memcpy(out, values.data(), values.size() * sizeof(int64_t));
  return DP_OK;
}

}  // namespace

extern "C" {

const char* dp_version(void) { return "1.0.0"; }

const char* dp_last_error(void) { return g_last_error.c_str(); }

dp_status dp_format_double(double value, char* buf, int64_t cap) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(buf != nullptr, "buffer is NULL")) return s;
    const std::string text = format_double(value);
    if (cap < static_cast<int64_t>(text.size()) + 1) {
      return set_error(DP_ERR_ARGUMENT, "buffer too small for formatted value");
    }
    std::memcpy(buf, text.c_str(), text.size() + 1);
    return DP_OK;
  });
}

int64_t dp_default_k(int64_t n) { return n <= 0 ? 0 : default_k(n); }

void dp_solver_options_init(dp_solver_options* opts) {
  if (opts == nullptr) return;
  SolverOptions d;
  opts->tol = d.tol;
  opts->max_iter = d.max_iter;
  opts->method = d.method == SolveMethod::direct ? 1 : 0;
  opts->threads = d.threads;
  opts->direct_cap = d.direct_cap;
}

void dp_dcsbm_params_init(dp_dcsbm_params* params) {
  if (params == nullptr) return;
  DcsbmParams d;
  params->n = d.n;
  params->block_split = d.block_split;
  params->gamma = d.gamma;
  params->d_min = d.d_min;
  params->d_max = d.d_max;
  params->mu = d.mu;
  params->seed = d.seed;
}

void dp_corpus_params_init(dp_corpus_params* params) {
  if (params == nullptr) return;
  dp_dcsbm_params_init(&params->base);
  CorpusParams d;
  params->count = d.count;
  params->augment_anchors = d.augment_anchors;
  params->threads = d.threads;
}

void dp_train_options_init(dp_train_options* opts) {
  if (opts == nullptr) return;
  TrainOptions d;
  opts->epochs = d.epochs;
  opts->learning_rate = d.learning_rate;
  opts->batch_size = d.batch_size;
  opts->val_frac = d.val_frac;
  opts->patience = d.patience;
  opts->seed = d.seed;
  opts->target_scale = d.target_scale;
  opts->aggregation = d.aggregation == Aggregation::weighted_mean ? 1 : 0;
  opts->threads = d.threads;
}

dp_status dp_network_load(const char* edge_path, double default_weight, dp_network** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(edge_path != nullptr && out != nullptr,
                              "edge_path and out must be non-NULL")) {
      return s;
    }
    Network net = load_edge_list(edge_path, default_weight);
    *out = new dp_network{std::move(net)};
    return DP_OK;
  });
}

dp_status dp_network_load_opinions(dp_network* net, const char* path) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr && path != nullptr,
                              "net and path must be non-NULL")) {
      return s;
    }
    net->net = load_opinions(net->net, path);
    return DP_OK;
  });
}

dp_status dp_network_set_opinions(dp_network* net, const double* internal_opinions,
                                  const double* expressed_opinions, int64_t n) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr, "net must be non-NULL")) return s;
    if (n != net->net.node_count()) {
      return set_error(DP_ERR_ARGUMENT, "opinion length does not match the node count");
    }
    if (internal_opinions != nullptr) {
      net->net = net->net.with_internal(std::vector<double>(internal_opinions,
                                                            internal_opinions + n));
    }
    if (expressed_opinions != nullptr) {
      net->net = net->net.with_expressed(std::vector<double>(expressed_opinions,
                                                             expressed_opinions + n));
    }
    return DP_OK;
  });
}

int64_t dp_network_node_count(const dp_network* net) {
  return net == nullptr ? 0 : net->net.node_count();
}

int64_t dp_network_edge_count(const dp_network* net) {
  return net == nullptr ? 0 : net->net.edge_count();
}

dp_status dp_network_internal(const dp_network* net, double* out, int64_t cap) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr, "net must be non-NULL")) return s;
    return copy_out(net->net.internal(), out, cap, "internal opinions");
  });
}

dp_status dp_network_expressed(const dp_network* net, double* out, int64_t cap) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr, "net must be non-NULL")) return s;
    return copy_out(net->net.expressed(), out, cap, "expressed opinions");
  });
}

dp_status dp_network_write(const dp_network* net, const char* edge_path) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr && edge_path != nullptr,
                              "net and edge_path must be non-NULL")) {
      return s;
    }
    write_edge_list(net->net, edge_path);
    return DP_OK;
  });
}

dp_status dp_network_write_opinions(const dp_network* net, const char* path) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr && path != nullptr,
                              "net and path must be non-NULL")) {
      return s;
    }
    write_opinions(net->net, path);
    return DP_OK;
  });
}

dp_status dp_network_equilibrium(const dp_network* net, const int64_t* anchors,
                                 int64_t anchor_count, const dp_solver_options* solver,
                                 double* z_out, double* pi_out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr, "net must be non-NULL")) return s;
    if (dp_status s = require(anchor_count == 0 || anchors != nullptr,
                              "anchors is NULL but anchor_count is positive")) {
      return s;
    }
    ModerationState mod(net->net);
    for (int64_t i = 0; i < anchor_count; ++i) mod = mod.anchored(anchors[i]);
    SolveReport report = steady_state(net->net, mod, to_solver(solver));
    if (z_out != nullptr) {
      if (dp_status s = copy_out(report.z_ss, z_out, net->net.node_count(), "equilibrium")) {
        return s;
      }
    }
    if (pi_out != nullptr) *pi_out = polarization_index(report.z_ss);
    return DP_OK;
  });
}

void dp_network_free(dp_network* net) { delete net; }

dp_status dp_dcsbm_generate(const dp_dcsbm_params* params, const dp_solver_options* solver,
                            dp_network** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(out != nullptr, "out must be non-NULL")) return s;
    DcsbmResult r = generate_dcsbm(to_dcsbm(params));
    Network net = assign_opinions(r.net, r.membership, to_solver(solver));
    *out = new dp_network{std::move(net)};
    return DP_OK;
  });
}

dp_status dp_label_gains(const dp_network* net, const dp_solver_options* solver, int threads,
                         double* targets_out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr, "net must be non-NULL")) return s;
    LabeledGraph lg = label_gains(net->net, to_solver(solver), threads);
    return copy_out(lg.targets, targets_out, net->net.node_count(), "gain labels");
  });
}

dp_status dp_corpus_build(const dp_corpus_params* params, const dp_solver_options* solver,
                          const char* out_dir, dp_progress_fn progress, void* user) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(params != nullptr && out_dir != nullptr,
                              "params and out_dir must be non-NULL")) {
      return s;
    }
    if (params->count < 0 || params->count > 1000000 || params->augment_anchors < 0 ||
        params->augment_anchors > 1000) {
      return set_error(DP_ERR_ARGUMENT, "corpus count or augment_anchors out of range");
    }
    CorpusParams cp;
    cp.count = static_cast<int>(params->count);
    cp.base = to_dcsbm(&params->base);
    cp.solver = to_solver(solver);
    cp.augment_anchors = static_cast<int>(params->augment_anchors);
    cp.threads = params->threads;

    const int64_t total = params->count * (1 + params->augment_anchors);
    int64_t done = 0;
    build_corpus(cp, out_dir, [&](const CorpusEntry& entry) {
      ++done;
      if (progress != nullptr) progress(done, total, entry.dir.c_str(), user);
    });
    return DP_OK;
  });
}

dp_status dp_corpus_validate(const char* dir, int64_t* entry_count_out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(dir != nullptr, "dir must be non-NULL")) return s;
    CorpusManifest manifest = validate_corpus(dir);
    if (entry_count_out != nullptr) {
      *entry_count_out = static_cast<int64_t>(manifest.graphs.size());
    }
    return DP_OK;
  });
}

dp_status dp_train(const char* corpus_dir, const dp_train_options* opts, dp_epoch_fn on_epoch,
                   void* user, dp_model** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(corpus_dir != nullptr && out != nullptr,
                              "corpus_dir and out must be non-NULL")) {
      return s;
    }
    TrainOptions to;
    if (opts != nullptr) {
      to.epochs = opts->epochs;
      to.learning_rate = opts->learning_rate;
      to.batch_size = opts->batch_size;
      to.val_frac = opts->val_frac;
      to.patience = opts->patience;
      to.seed = opts->seed;
      to.target_scale = opts->target_scale;
      if (opts->aggregation != 0 && opts->aggregation != 1) {
        return set_error(DP_ERR_ARGUMENT, "aggregation must be 0 (mean) or 1 (weighted mean)");
      }
      to.aggregation = opts->aggregation == 1 ? Aggregation::weighted_mean : Aggregation::mean;
      to.threads = opts->threads;
    }
    std::vector<LabeledGraph> graphs = load_corpus(corpus_dir);
    TrainResult result = train(graphs, to, [&](const EpochLog& log) {
      if (on_epoch != nullptr) {
        on_epoch(log.epoch, log.train_loss, log.val_loss, log.improved ? 1 : 0, user);
      }
    });
    *out = new dp_model{std::move(result.model)};
    return DP_OK;
  });
}

dp_status dp_model_load(const char* path, dp_model** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(path != nullptr && out != nullptr,
                              "path and out must be non-NULL")) {
      return s;
    }
    GcnModel model = load_model(path);
    *out = new dp_model{std::move(model)};
    return DP_OK;
  });
}

dp_status dp_model_save(const dp_model* model, const char* path) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(model != nullptr && path != nullptr,
                              "model and path must be non-NULL")) {
      return s;
    }
    save_model(model->model, path);
    return DP_OK;
  });
}

dp_status dp_model_training_meta(const dp_model* model, dp_training_meta* out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(model != nullptr && out != nullptr,
                              "model and out must be non-NULL")) {
      return s;
    }
    const TrainingMeta& m = model->model.meta;
    out->epochs_run = m.epochs_run;
    out->best_epoch = m.best_epoch;
    out->best_val_loss = m.best_val_loss;
    out->final_train_loss = m.final_train_loss;
    out->seed = m.seed;
    out->train_graphs = m.train_graphs;
    out->val_graphs = m.val_graphs;
    return DP_OK;
  });
}

void dp_model_free(dp_model* model) { delete model; }

dp_status dp_solve_greedy(const dp_network* net, int64_t k, const dp_solver_options* solver,
                          int threads, dp_trace** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr && out != nullptr,
                              "net and out must be non-NULL")) {
      return s;
    }
    SelectionTrace trace = greedy_ext(net->net, k, to_solver(solver), threads);
    *out = new dp_trace{std::move(trace)};
    return DP_OK;
  });
}

dp_status dp_solve_gnn(const dp_network* net, int64_t k, const dp_model* model,
                       const dp_solver_options* solver, dp_trace** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr && model != nullptr && out != nullptr,
                              "net, model, and out must be non-NULL")) {
      return s;
    }
    SelectionTrace trace = gnn_greedy_ext(net->net, k, model->model, to_solver(solver));
    *out = new dp_trace{std::move(trace)};
    return DP_OK;
  });
}

dp_status dp_solve_random(const dp_network* net, int64_t k, uint64_t seed,
                          const dp_solver_options* solver, dp_trace** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr && out != nullptr,
                              "net and out must be non-NULL")) {
      return s;
    }
    SelectionTrace trace = random_select(net->net, k, seed, to_solver(solver));
    *out = new dp_trace{std::move(trace)};
    return DP_OK;
  });
}

dp_status dp_evaluate_selection(const dp_network* net, const int64_t* chosen, int64_t count,
                                const dp_solver_options* solver, dp_trace** out) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(net != nullptr && out != nullptr,
                              "net and out must be non-NULL")) {
      return s;
    }
    if (dp_status s = require(count == 0 || chosen != nullptr,
                              "chosen is NULL but count is positive")) {
      return s;
    }
    SelectionTrace trace = evaluate_selection(
        net->net, std::span<const NodeId>(chosen, static_cast<std::size_t>(count)),
        to_solver(solver));
    *out = new dp_trace{std::move(trace)};
    return DP_OK;
  });
}

const char* dp_trace_algorithm(const dp_trace* trace) {
  return trace == nullptr ? "" : algorithm_name(trace->trace.algorithm);
}

int64_t dp_trace_steps(const dp_trace* trace) {
  return trace == nullptr ? 0 : static_cast<int64_t>(trace->trace.chosen.size());
}

dp_status dp_trace_chosen(const dp_trace* trace, int64_t* out, int64_t cap) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(trace != nullptr, "trace must be non-NULL")) return s;
    return copy_out(trace->trace.chosen, out, cap, "chosen nodes");
  });
}

dp_status dp_trace_polarization(const dp_trace* trace, double* out, int64_t cap) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(trace != nullptr, "trace must be non-NULL")) return s;
    return copy_out(trace->trace.pi_trace, out, cap, "polarization trace");
  });
}

dp_status dp_trace_elapsed_ms(const dp_trace* trace, double* out, int64_t cap) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(trace != nullptr, "trace must be non-NULL")) return s;
    return copy_out(trace->trace.elapsed_ms, out, cap, "elapsed times");
  });
}

dp_status dp_trace_sweeps(const dp_trace* trace, int64_t* out, int64_t cap) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(trace != nullptr, "trace must be non-NULL")) return s;
    return copy_out(trace->trace.sweeps, out, cap, "sweep counts");
  });
}

dp_status dp_trace_write_csv(const dp_trace* trace, const char* path, const char* config,
                             int include_timing) {
  return guarded([&]() -> dp_status {
    if (dp_status s = require(trace != nullptr && path != nullptr,
                              "trace and path must be non-NULL")) {
      return s;
    }
    write_trace_csv(trace->trace, path, config == nullptr ? "" : config, include_timing != 0);
    return DP_OK;
  });
}

void dp_trace_free(dp_trace* trace) { delete trace; }

}  // extern "C"
