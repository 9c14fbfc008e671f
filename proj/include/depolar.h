/* depolar — opinion-moderation toolkit C API.
 *
 * All library functionality sits behind this header: opaque handles, integer
 * status codes, and plain-C option structs. Every function that can fail
 * returns dp_status; on failure, dp_last_error() returns a thread-local
 * message describing what went wrong. Out-parameters are written only on
 * DP_OK. Handles are freed with their dp_*_free function; passing NULL to a
 * free function is a no-op.
 */
#ifndef DEPOLAR_H
#define DEPOLAR_H

#include <stdint.h>

#if defined(_WIN32)
#define DP_API __declspec(dllexport)
#else
#define DP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dp_status {
  DP_OK = 0,
  DP_ERR_IO = 1,          /* file missing/unreadable/unwritable */
  DP_ERR_FORMAT = 2,      /* malformed file content */
  DP_ERR_ARGUMENT = 3,    /* invalid argument value */
  DP_ERR_RANGE = 4,       /* value outside its documented domain */
  DP_ERR_INDEX = 5,       /* id outside the graph */
  DP_ERR_CONVERGENCE = 6, /* iterative solver hit its budget */
  DP_ERR_CAPABILITY = 7,  /* request exceeds a configured limit */
  DP_ERR_MODEL = 8,       /* model incompatible with the input */
  DP_ERR_DIVERGENCE = 9,  /* training diverged */
  DP_ERR_INTERNAL = 10    /* unexpected failure; see dp_last_error() */
} dp_status;

/* Library version string, e.g. "1.0.0". */
DP_API const char* dp_version(void);

/* Message for the most recent failure on this thread; never NULL. */
DP_API const char* dp_last_error(void);

/* Shortest decimal form that round-trips the double; needs cap >= 32. */
DP_API dp_status dp_format_double(double value, char* buf, int64_t cap);

/* Default moderation budget: 10% of n, rounded up. */
DP_API int64_t dp_default_k(int64_t n);

/* ------------------------------------------------------------------ */
/* Option structs. Call the _init function first, then override fields. */

typedef struct dp_solver_options {
  double tol;          /* fixed-point stop threshold (max |update|) */
  int64_t max_iter;    /* fixed-point sweep budget */
  int method;          /* 0 = fixed-point iteration, 1 = direct dense solve */
  int threads;         /* worker threads for batched solves */
  int64_t direct_cap;  /* node-count limit for the dense method */
} dp_solver_options;
DP_API void dp_solver_options_init(dp_solver_options* opts);

typedef struct dp_dcsbm_params {
  int64_t n;          /* nodes before largest-component extraction */
  double block_split; /* fraction of nodes in community 1 */
  double gamma;       /* power-law exponent of expected degrees */
  double d_min;       /* expected-degree lower bound */
  double d_max;       /* expected-degree upper bound; 0 = sqrt(n) */
  double mu;          /* expected share of inter-community edges */
  uint64_t seed;
} dp_dcsbm_params;
DP_API void dp_dcsbm_params_init(dp_dcsbm_params* params);

typedef struct dp_corpus_params {
  dp_dcsbm_params base; /* base.seed is the master seed */
  int64_t count;        /* fresh graphs */
  int64_t augment_anchors; /* extra pre-anchored examples per graph */
  int threads;
} dp_corpus_params;
DP_API void dp_corpus_params_init(dp_corpus_params* params);

typedef struct dp_train_options {
  int64_t epochs;
  double learning_rate;
  int64_t batch_size;
  double val_frac;      /* held-out fraction of the corpus */
  int64_t patience;     /* early-stop stall budget, in epochs */
  uint64_t seed;
  double target_scale;  /* gains are multiplied by this for regression */
  int aggregation;      /* 0 = mean over neighbors, 1 = weighted mean */
  int threads;
} dp_train_options;
DP_API void dp_train_options_init(dp_train_options* opts);

typedef struct dp_training_meta {
  int64_t epochs_run;
  int64_t best_epoch;
  double best_val_loss;
  double final_train_loss;
  uint64_t seed;
  int64_t train_graphs;
  int64_t val_graphs;
} dp_training_meta;

/* ------------------------------------------------------------------ */
/* Networks. */

typedef struct dp_network dp_network;

/* Loads a `u v [weight]` edge list ('#' comments allowed). Nodes without a
 * listed weight get default_weight. */
DP_API dp_status dp_network_load(const char* edge_path, double default_weight, dp_network** out);

/* Replaces the held opinions from a `node,internal[,expressed]` CSV. */
DP_API dp_status dp_network_load_opinions(dp_network* net, const char* path);

/* Replaces opinion vectors directly; either pointer may be NULL to keep the
 * current values. Both arrays have length n = node count. */
DP_API dp_status dp_network_set_opinions(dp_network* net, const double* internal_opinions,
                                         const double* expressed_opinions, int64_t n);

DP_API int64_t dp_network_node_count(const dp_network* net);
DP_API int64_t dp_network_edge_count(const dp_network* net);

/* Copies the held opinion vectors (cap >= node count). */
DP_API dp_status dp_network_internal(const dp_network* net, double* out, int64_t cap);
DP_API dp_status dp_network_expressed(const dp_network* net, double* out, int64_t cap);

DP_API dp_status dp_network_write(const dp_network* net, const char* edge_path);
DP_API dp_status dp_network_write_opinions(const dp_network* net, const char* path);

/* Equilibrium of the opinion dynamics with the given nodes held at zero.
 * anchors may be NULL when anchor_count is 0. z_out (cap node count) and
 * pi_out may each be NULL when not wanted. */
DP_API dp_status dp_network_equilibrium(const dp_network* net, const int64_t* anchors,
                                        int64_t anchor_count, const dp_solver_options* solver,
                                        double* z_out, double* pi_out);

DP_API void dp_network_free(dp_network* net);

/* ------------------------------------------------------------------ */
/* Synthetic graphs, gain labels, corpora. */

/* Draws a two-community power-law graph, keeps its largest component, and
 * assigns internal opinions +1/-1 by community with the implied equilibrium
 * as the expressed state. */
DP_API dp_status dp_dcsbm_generate(const dp_dcsbm_params* params,
                                   const dp_solver_options* solver, dp_network** out);

/* Single-step polarization gain of anchoring each node, from the network's
 * current state (targets_out cap = node count). */
DP_API dp_status dp_label_gains(const dp_network* net, const dp_solver_options* solver,
                                int threads, double* targets_out);

/* Progress callback: called once per finished corpus entry. */
typedef void (*dp_progress_fn)(int64_t index, int64_t total, const char* name, void* user);

/* Builds (or resumes) a labeled corpus under out_dir. */
DP_API dp_status dp_corpus_build(const dp_corpus_params* params, const dp_solver_options* solver,
                                 const char* out_dir, dp_progress_fn progress, void* user);

/* Re-reads every entry and checks it against the manifest. On success,
 * *entry_count_out (optional) receives the number of entries. */
DP_API dp_status dp_corpus_validate(const char* dir, int64_t* entry_count_out);

/* ------------------------------------------------------------------ */
/* Models. */

typedef struct dp_model dp_model;

/* Epoch callback: improved is 1 when validation loss reached a new best. */
typedef void (*dp_epoch_fn)(int64_t epoch, double train_loss, double val_loss, int improved,
                            void* user);

/* Trains a gain-ranking model on a corpus directory. */
DP_API dp_status dp_train(const char* corpus_dir, const dp_train_options* opts,
                          dp_epoch_fn on_epoch, void* user, dp_model** out);

DP_API dp_status dp_model_load(const char* path, dp_model** out);
DP_API dp_status dp_model_save(const dp_model* model, const char* path);
DP_API dp_status dp_model_training_meta(const dp_model* model, dp_training_meta* out);
DP_API void dp_model_free(dp_model* model);

/* ------------------------------------------------------------------ */
/* Moderation-set solvers and traces. */

typedef struct dp_trace dp_trace;

/* Exhaustive best-gain selection of k nodes. */
DP_API dp_status dp_solve_greedy(const dp_network* net, int64_t k,
                                 const dp_solver_options* solver, int threads, dp_trace** out);

/* Model-guided selection of k nodes. */
DP_API dp_status dp_solve_gnn(const dp_network* net, int64_t k, const dp_model* model,
                              const dp_solver_options* solver, dp_trace** out);

/* Uniform-without-replacement baseline. */
DP_API dp_status dp_solve_random(const dp_network* net, int64_t k, uint64_t seed,
                                 const dp_solver_options* solver, dp_trace** out);

/* Replays an explicit anchor list (duplicates rejected). */
DP_API dp_status dp_evaluate_selection(const dp_network* net, const int64_t* chosen,
                                       int64_t count, const dp_solver_options* solver,
                                       dp_trace** out);

/* "greedy", "gnn", "random", or "replay". */
DP_API const char* dp_trace_algorithm(const dp_trace* trace);

/* Number of anchoring steps K. Arrays below hold K entries for chosen and
 * K+1 entries (row 0 = initial state) for the others. */
DP_API int64_t dp_trace_steps(const dp_trace* trace);
DP_API dp_status dp_trace_chosen(const dp_trace* trace, int64_t* out, int64_t cap);
DP_API dp_status dp_trace_polarization(const dp_trace* trace, double* out, int64_t cap);
DP_API dp_status dp_trace_elapsed_ms(const dp_trace* trace, double* out, int64_t cap);
DP_API dp_status dp_trace_sweeps(const dp_trace* trace, int64_t* out, int64_t cap);

/* Writes `step,node,polarization,elapsed_ms` rows; row 0 is the initial
 * state. Lines of config (optional, may be NULL) become `# ` comments.
 * Timing fields are filled only when include_timing is nonzero, keeping the
 * default output byte-stable across reruns. */
DP_API dp_status dp_trace_write_csv(const dp_trace* trace, const char* path, const char* config,
                                    int include_timing);

DP_API void dp_trace_free(dp_trace* trace);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DEPOLAR_H */
