#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graph.hpp"

namespace depolar {

enum class SolveMethod { fixed_point, direct };

struct SolverOptions {
  double tol = 1e-10;        // infinity-norm of one sweep's update
  long long max_iter = 100000;
  SolveMethod method = SolveMethod::fixed_point;
  int threads = 1;           // candidate-level parallelism (gain batches)
  NodeId direct_cap = 2000;  // dense solve refuses above this
};

/// Set of anchored (moderated) nodes over a fixed Network. Anchored nodes are
/// pinned to a neutral expressed opinion: their internal opinion is treated as
/// zero and their equilibrium value is exactly zero, while their incident
/// edges stay in place (neighbors still divide by the full weighted degree).
class ModerationState {
 public:
  ModerationState() = default;
  explicit ModerationState(const Network& net);

  const Network& network() const { return *net_; }
  NodeId anchor_count() const { return count_; }
  bool is_anchored(NodeId v) const;
  /// Anchored node ids in the order they were anchored.
  const std::vector<NodeId>& anchors() const { return order_; }
  /// Binary indicator x over all nodes (1 = anchored).
  const std::vector<std::uint8_t>& indicator() const { return x_; }

  /// Internal opinions with anchored entries forced to zero (s - s⊙x).
  std::vector<double> effective_internal() const;
  /// Copies z with anchored entries forced to zero.
  std::vector<double> effective_expressed(std::span<const double> z) const;

  /// New state with v additionally anchored. Double-anchoring is an error.
  ModerationState anchored(NodeId v) const;

 private:
  const Network* net_ = nullptr;
  std::vector<std::uint8_t> x_;
  std::vector<NodeId> order_;
  NodeId count_ = 0;
};

ModerationState anchor(const ModerationState& mod, NodeId v);

struct SolveReport {
  std::vector<double> z_ss;
  long long iterations = 0;
  double residual = 0.0;
  SolveMethod method = SolveMethod::fixed_point;
};

/// Equilibrium of the opinion-averaging rule with anchored nodes pinned to
/// zero: z_i = (s_i + Σ_j w_ij z_j) / (1 + Σ_j w_ij) for non-anchored i.
/// Synchronous sweeps; stops when the update's infinity norm is <= tol.
/// Throws ConvergenceError (carrying the best iterate) if max_iter sweeps do
/// not reach tol.
SolveReport steady_state(const Network& net, const ModerationState& mod,
                         const SolverOptions& opts = {},
                         std::span<const double> warm_start = {});

/// Dense LU solve of (D_x̄ L + I) z = s - s⊙x. Test oracle; refuses networks
/// larger than opts.direct_cap with a capability error.
SolveReport steady_state_direct(const Network& net, const ModerationState& mod,
                                const SolverOptions& opts = {});

/// ‖z‖₂² / n. Empty input is an argument error.
double polarization_index(std::span<const double> z);

/// π(current equilibrium) − π(equilibrium with anchors ∪ {v}); may be
/// negative. v must not already be anchored.
double gain(const Network& net, const ModerationState& mod, NodeId v,
            const SolverOptions& opts = {});

/// Reusable fixed-point machinery for batches of related solves (the greedy
/// inner loop). Precomputes per-node denominators; solves share warm starts
/// and per-thread scratch buffers, and may pin one extra node on top of the
/// state's anchors without building a new ModerationState.
class FixedPointContext {
 public:
  FixedPointContext(const Network& net, SolverOptions opts);

  const Network& network() const { return *net_; }
  const SolverOptions& options() const { return opts_; }

  struct Workspace {
    std::vector<double> a;
    std::vector<double> b;
  };

  /// Solves with the state's anchors plus optional extra_anchor (-1 = none),
  /// writing the result into ws. Returns sweep count; sets *residual_out if
  /// non-null. The result lives in the returned span (one of ws's buffers).
  std::span<const double> solve(const ModerationState& mod, NodeId extra_anchor,
                                std::span<const double> warm_start, Workspace& ws,
                                long long* iterations_out = nullptr,
                                double* residual_out = nullptr) const;

 private:
  const Network* net_;
  SolverOptions opts_;
  std::vector<double> inv_denom_;  // 1/(1 + weighted_degree)
};

}  // namespace depolar
