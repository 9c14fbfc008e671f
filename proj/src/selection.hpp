#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "gcn.hpp"
#include "graph.hpp"

namespace depolar {

enum class SelectionAlgorithm { greedy, gnn_greedy, random_pick, replay };

/// Short stable name used in file headers and reports.
const char* algorithm_name(SelectionAlgorithm algorithm);

/// Result of an iterative moderation run. Index 0 of pi_trace / elapsed_ms /
/// sweeps describes the initial free equilibrium; index t (1-based) describes
/// the state after anchoring chosen[t-1].
struct SelectionTrace {
  SelectionAlgorithm algorithm = SelectionAlgorithm::greedy;
  std::vector<NodeId> chosen;        // K anchored nodes, in anchoring order
  std::vector<double> pi_trace;      // K+1 polarization values
  std::vector<double> elapsed_ms;    // K+1 per-step wall-clock durations
  std::vector<std::int64_t> sweeps;  // K+1 fixed-point sweep counts
};

/// Default moderation budget: 10% of the node count, rounded up.
NodeId default_k(NodeId n);

/// Exhaustive best-gain selection: each step evaluates the polarization gain
/// of every non-anchored candidate against the current state (concurrently
/// when threads > 1), anchors the maximal one (ties -> lowest id), and
/// recomputes the equilibrium. Convergence failures name the step and node.
SelectionTrace greedy_ext(const Network& net, NodeId k, const SolverOptions& solver = {},
                          int threads = 1);

/// Model-guided selection: each step scores all nodes with one forward pass
/// on the current (network, anchors, equilibrium) state, anchors the highest
/// scoring non-anchored node (ties -> lowest id), and recomputes the
/// equilibrium so the next step sees fresh features.
SelectionTrace gnn_greedy_ext(const Network& net, NodeId k, const GcnModel& model,
                              const SolverOptions& solver = {});

/// Scoring hook for score-driven selection: receives the immutable network,
/// the current anchor state, and the current equilibrium (anchored entries
/// exactly 0); returns one score per node.
using ScoreFn = std::function<std::vector<double>(const Network& net, const ModerationState& mod,
                                                  std::span<const double> z)>;

/// Generic score-argmax loop behind gnn_greedy_ext; exposed so tests can
/// inject oracle scores.
SelectionTrace scored_select(const Network& net, NodeId k, const ScoreFn& score,
                             const SolverOptions& solver = {});

/// Uniform baseline: K distinct nodes drawn without replacement (the first
/// draws are identical for any larger K under the same seed), anchored in
/// draw order.
SelectionTrace random_select(const Network& net, NodeId k, std::uint64_t seed,
                             const SolverOptions& solver = {});

/// Replays an externally supplied anchor list and recomputes the trace, so
/// runs can be audited and algorithms compared on identical footing.
/// Duplicate or out-of-range ids are argument errors.
SelectionTrace evaluate_selection(const Network& net, std::span<const NodeId> chosen,
                                  const SolverOptions& solver = {});

/// Writes `step,node,polarization,elapsed_ms` rows, row 0 = initial state
/// (empty node field). Lines of `config` are prepended as `# ` comments.
/// Timing values are only written when include_timing is set: wall-clock
/// readings vary run to run, and the default keeps the file byte-identical
/// across reruns of a seeded pipeline.
void write_trace_csv(const SelectionTrace& trace, const std::string& path,
                     const std::string& config = "", bool include_timing = false);

}  // namespace depolar
