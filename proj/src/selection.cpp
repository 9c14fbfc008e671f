#include "selection.hpp"

#include <chrono>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace depolar {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_budget(const Network& net, NodeId k) {
  if (k < 1 || k > net.node_count()) {
    fail(ErrorCode::argument, "budget must lie in [1, " + std::to_string(net.node_count()) +
                                  "], got " + std::to_string(k));
  }
}

/// Shared driver: seeds the trace with the free equilibrium, then repeatedly
/// asks `pick` for the next node, anchors it, and re-solves. `pick` sees the
/// current state and equilibrium and reports the chosen node.
template <typename PickFn>
SelectionTrace run_selection(const Network& net, NodeId k, const SolverOptions& solver,
                             SelectionAlgorithm algorithm, PickFn&& pick) {
  SelectionTrace trace;
  trace.algorithm = algorithm;

  ModerationState mod(net);
  FixedPointContext ctx(net, solver);
  FixedPointContext::Workspace ws;
  std::vector<double> z_cur;

  Clock::time_point start = Clock::now();
  long long iters = 0;
  try {
    std::span<const double> z = ctx.solve(mod, -1, net.expressed(), ws, &iters);
    z_cur.assign(z.begin(), z.end());
  } catch (const ConvergenceError& e) {
    fail(ErrorCode::convergence, std::string("initial equilibrium: ") + e.what());
  }
  trace.pi_trace.push_back(polarization_index(z_cur));
  trace.elapsed_ms.push_back(ms_since(start));
  trace.sweeps.push_back(iters);

  for (NodeId step = 1; step <= k; ++step) {
    start = Clock::now();
    const NodeId v = pick(step, mod, std::span<const double>(z_cur));
    mod = mod.anchored(v);
    try {
      std::span<const double> z = ctx.solve(mod, -1, z_cur, ws, &iters);
      z_cur.assign(z.begin(), z.end());
    } catch (const ConvergenceError& e) {
      fail(ErrorCode::convergence, "step " + std::to_string(step) + " (node " +
                                       std::to_string(v) + "): " + e.what());
    }
    trace.chosen.push_back(v);
    trace.pi_trace.push_back(polarization_index(z_cur));
    trace.elapsed_ms.push_back(ms_since(start));
    trace.sweeps.push_back(iters);
  }
  return trace;
}

/// Ascending argmax over non-anchored nodes; strict > keeps the lowest id on
/// ties.
NodeId best_unanchored(std::span<const double> values, const ModerationState& mod) {
  NodeId best = -1;
  for (NodeId v = 0; v < static_cast<NodeId>(values.size()); ++v) {
    if (mod.is_anchored(v)) continue;
    if (best == -1 || values[static_cast<std::size_t>(v)] > values[static_cast<std::size_t>(best)]) {
      best = v;
    }
  }
  if (best == -1) fail(ErrorCode::argument, "no non-anchored node left to select");
  return best;
}

}  // namespace

const char* algorithm_name(SelectionAlgorithm algorithm) {
  switch (algorithm) {
    case SelectionAlgorithm::greedy: return "greedy";
    case SelectionAlgorithm::gnn_greedy: return "gnn";
    case SelectionAlgorithm::random_pick: return "random";
    case SelectionAlgorithm::replay: return "replay";
  }
  fail(ErrorCode::argument, "unknown selection algorithm");
}

NodeId default_k(NodeId n) { return (n + 9) / 10; }

SelectionTrace greedy_ext(const Network& net, NodeId k, const SolverOptions& solver, int threads) {
  check_budget(net, k);
  FixedPointContext ctx(net, solver);
  std::vector<double> gains(static_cast<std::size_t>(net.node_count()));

  return run_selection(
      net, k, solver, SelectionAlgorithm::greedy,
      [&](NodeId step, const ModerationState& mod, std::span<const double> z_cur) -> NodeId {
        const double pi_cur = polarization_index(z_cur);
        parallel_for(0, net.node_count(), threads, [&](std::int64_t lo, std::int64_t hi) {
          FixedPointContext::Workspace ws;
          for (std::int64_t v = lo; v < hi; ++v) {
            if (mod.is_anchored(v)) continue;
            try {
              std::span<const double> z = ctx.solve(mod, v, z_cur, ws);
              gains[static_cast<std::size_t>(v)] = pi_cur - polarization_index(z);
            } catch (const ConvergenceError& e) {
              fail(ErrorCode::convergence, "step " + std::to_string(step) +
                                               ": gain evaluation failed at node " +
                                               std::to_string(v) + ": " + e.what());
            }
          }
        });
        return best_unanchored(gains, mod);
      });
}

SelectionTrace scored_select(const Network& net, NodeId k, const ScoreFn& score,
                             const SolverOptions& solver) {
  check_budget(net, k);
  if (!score) fail(ErrorCode::argument, "scoring function is empty");

  return run_selection(
      net, k, solver, SelectionAlgorithm::gnn_greedy,
      [&](NodeId /*step*/, const ModerationState& mod, std::span<const double> z_cur) -> NodeId {
        std::vector<double> scores = score(net, mod, z_cur);
        if (scores.size() != static_cast<std::size_t>(net.node_count())) {
          fail(ErrorCode::argument, "scorer returned " + std::to_string(scores.size()) +
                                        " scores for " + std::to_string(net.node_count()) +
                                        " nodes");
        }
        return best_unanchored(scores, mod);
      });
}

SelectionTrace gnn_greedy_ext(const Network& net, NodeId k, const GcnModel& model,
                              const SolverOptions& solver) {
  validate_model(model);
  return scored_select(
      net, k,
      [&model](const Network& g, const ModerationState& mod, std::span<const double> z) {
        Matrix features = node_features(g, mod.effective_internal(), z);
        return gcn_forward(model, g, features);
      },
      solver);
}

SelectionTrace random_select(const Network& net, NodeId k, std::uint64_t seed,
                             const SolverOptions& solver) {
  check_budget(net, k);
  const NodeId n = net.node_count();

  // Partial Fisher-Yates from the front: draw i only touches slots >= i, so
  // the first draws agree for any budget under the same seed.
  Rng rng(seed);
  std::vector<NodeId> pool(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<NodeId> order;
  order.reserve(static_cast<std::size_t>(k));
  for (NodeId i = 0; i < k; ++i) {
    const NodeId j =
        i + static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    order.push_back(pool[static_cast<std::size_t>(i)]);
  }

  SelectionTrace trace = run_selection(
      net, k, solver, SelectionAlgorithm::random_pick,
      [&order](NodeId step, const ModerationState&, std::span<const double>) -> NodeId {
        return order[static_cast<std::size_t>(step - 1)];
      });
  return trace;
}

SelectionTrace evaluate_selection(const Network& net, std::span<const NodeId> chosen,
                                  const SolverOptions& solver) {
  std::set<NodeId> seen;
  for (NodeId v : chosen) {
    if (v < 0 || v >= net.node_count()) {
      fail(ErrorCode::argument, "node id " + std::to_string(v) + " out of range [0, " +
                                    std::to_string(net.node_count() - 1) + "]");
    }
    if (!seen.insert(v).second) {
      fail(ErrorCode::argument, "duplicate node id " + std::to_string(v) + " in selection");
    }
  }

  SelectionTrace trace;
  if (chosen.empty()) {
    // Degenerate replay: only the initial equilibrium.
    ModerationState mod(net);
    FixedPointContext ctx(net, solver);
    FixedPointContext::Workspace ws;
    Clock::time_point start = Clock::now();
    long long iters = 0;
    std::span<const double> z = ctx.solve(mod, -1, net.expressed(), ws, &iters);
    trace.algorithm = SelectionAlgorithm::replay;
    trace.pi_trace.push_back(polarization_index(z));
    trace.elapsed_ms.push_back(ms_since(start));
    trace.sweeps.push_back(iters);
    return trace;
  }

  trace = run_selection(
      net, static_cast<NodeId>(chosen.size()), solver, SelectionAlgorithm::replay,
      [&chosen](NodeId step, const ModerationState&, std::span<const double>) -> NodeId {
        return chosen[static_cast<std::size_t>(step - 1)];
      });
  return trace;
}

void write_trace_csv(const SelectionTrace& trace, const std::string& path,
                     const std::string& config, bool include_timing) {
  if (trace.pi_trace.size() != trace.chosen.size() + 1) {
    fail(ErrorCode::argument, "trace has " + std::to_string(trace.pi_trace.size()) +
                                  " polarization values for " + std::to_string(trace.chosen.size()) +
                                  " chosen nodes");
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");

  if (!config.empty()) {
    std::istringstream lines(config);
    std::string line;
    while (std::getline(lines, line)) out << "# " << line << "\n";
  }
  out << "step,node,polarization,elapsed_ms\n";
  for (std::size_t row = 0; row < trace.pi_trace.size(); ++row) {
    out << row << ",";
    if (row > 0) out << trace.chosen[row - 1];
    out << "," << format_double(trace.pi_trace[row]) << ",";
    if (include_timing && row < trace.elapsed_ms.size()) {
      out << format_double(trace.elapsed_ms[row]);
    }
    out << "\n";
  }
  if (!out) fail(ErrorCode::io, "write to " + path + " failed");
}

}  // namespace depolar
