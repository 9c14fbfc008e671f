#include "dynamics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>

namespace depolar {

ModerationState::ModerationState(const Network& net)
    : net_(&net), x_(static_cast<std::size_t>(net.node_count()), 0) {}

bool ModerationState::is_anchored(NodeId v) const {
  if (net_ == nullptr || v < 0 || v >= net_->node_count()) {
    fail(ErrorCode::index, "node id " + std::to_string(v) + " out of range");
  }
  return x_[static_cast<std::size_t>(v)] != 0;
}

std::vector<double> ModerationState::effective_internal() const {
  std::vector<double> s = net_->internal();
  for (NodeId v : order_) s[static_cast<std::size_t>(v)] = 0.0;
  return s;
}

std::vector<double> ModerationState::effective_expressed(std::span<const double> z) const {
  if (static_cast<NodeId>(z.size()) != net_->node_count()) {
    fail(ErrorCode::argument, "expressed vector has size " + std::to_string(z.size()) +
                                  ", expected " + std::to_string(net_->node_count()));
  }
  std::vector<double> out(z.begin(), z.end());
  for (NodeId v : order_) out[static_cast<std::size_t>(v)] = 0.0;
  return out;
}

ModerationState ModerationState::anchored(NodeId v) const {
  if (is_anchored(v)) {
    fail(ErrorCode::argument, "node " + std::to_string(v) + " is already anchored");
  }
  ModerationState out = *this;
  out.x_[static_cast<std::size_t>(v)] = 1;
  out.order_.push_back(v);
  ++out.count_;
  return out;
}

ModerationState anchor(const ModerationState& mod, NodeId v) { return mod.anchored(v); }

FixedPointContext::FixedPointContext(const Network& net, SolverOptions opts)
    : net_(&net), opts_(opts) {
  if (!(opts_.tol > 0.0)) {
    fail(ErrorCode::argument, "tolerance must be positive, got " + std::to_string(opts_.tol));
  }
  if (opts_.max_iter <= 0) {
    fail(ErrorCode::argument, "max_iter must be positive, got " + std::to_string(opts_.max_iter));
  }
  const std::size_t n = static_cast<std::size_t>(net.node_count());
  inv_denom_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_denom_[i] = 1.0 / (1.0 + net.weighted_degree(static_cast<NodeId>(i)));
  }
}

std::span<const double> FixedPointContext::solve(const ModerationState& mod, NodeId extra_anchor,
                                                 std::span<const double> warm_start, Workspace& ws,
                                                 long long* iterations_out,
                                                 double* residual_out) const {
  const NodeId n = net_->node_count();
  const std::size_t un = static_cast<std::size_t>(n);
  const std::vector<double>& s = net_->internal();
  const std::vector<std::uint8_t>& x = mod.indicator();

  auto pinned = [&](NodeId i) {
    return x[static_cast<std::size_t>(i)] != 0 || i == extra_anchor;
  };

  ws.a.resize(un);
  ws.b.resize(un);
  double* cur = ws.a.data();
  double* nxt = ws.b.data();

  if (warm_start.size() == un) {
    std::copy(warm_start.begin(), warm_start.end(), cur);
  } else if (warm_start.empty()) {
    std::fill(cur, cur + un, 0.0);
  } else {
    fail(ErrorCode::argument, "warm start has size " + std::to_string(warm_start.size()) +
                                  ", expected " + std::to_string(un));
  }
  for (NodeId i = 0; i < n; ++i) {
    if (pinned(i)) cur[static_cast<std::size_t>(i)] = 0.0;
  }

  long long iter = 0;
  double resid = 0.0;
  if (n == 0) {
    if (iterations_out) *iterations_out = 0;
    if (residual_out) *residual_out = 0.0;
    return {cur, un};
  }
  for (; iter < opts_.max_iter; ++iter) {
    resid = 0.0;
    for (NodeId i = 0; i < n; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      if (pinned(i)) {
        nxt[ii] = 0.0;
        continue;
      }
      double acc = s[ii];
      for (const Neighbor& nb : net_->neighbors(i)) {
        acc += nb.weight * cur[static_cast<std::size_t>(nb.id)];
      }
      const double zi = acc * inv_denom_[ii];
      nxt[ii] = zi;
      resid = std::max(resid, std::abs(zi - cur[ii]));
    }
    std::swap(cur, nxt);
    if (resid <= opts_.tol) {
      ++iter;
      break;
    }
  }
  if (resid > opts_.tol) {
    std::vector<double> best(cur, cur + un);
    throw ConvergenceError("fixed-point solve did not reach tolerance " +
                               std::to_string(opts_.tol) + " within " +
                               std::to_string(opts_.max_iter) + " sweeps (residual " +
                               std::to_string(resid) + ")",
                           std::move(best), resid, iter);
  }
  if (iterations_out) *iterations_out = iter;
  if (residual_out) *residual_out = resid;
  return {cur, un};
}

SolveReport steady_state(const Network& net, const ModerationState& mod,
                         const SolverOptions& opts, std::span<const double> warm_start) {
  FixedPointContext ctx(net, opts);
  FixedPointContext::Workspace ws;
  SolveReport report;
  report.method = SolveMethod::fixed_point;
  std::span<const double> z =
      ctx.solve(mod, -1, warm_start, ws, &report.iterations, &report.residual);
  report.z_ss.assign(z.begin(), z.end());
  return report;
}

SolveReport steady_state_direct(const Network& net, const ModerationState& mod,
                                const SolverOptions& opts) {
  const NodeId n = net.node_count();
  if (n > opts.direct_cap) {
    fail(ErrorCode::capability, "dense solve supports at most " + std::to_string(opts.direct_cap) +
                                    " nodes, got " + std::to_string(n));
  }
  SolveReport report;
  report.method = SolveMethod::direct;
  report.iterations = 0;
  report.residual = 0.0;
  if (n == 0) return report;

  const std::vector<std::uint8_t>& x = mod.indicator();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (NodeId i = 0; i < n; ++i) {
    if (x[static_cast<std::size_t>(i)]) {
      A(i, i) = 1.0;  // zeroed Laplacian row leaves the identity row
      continue;
    }
    A(i, i) = net.weighted_degree(i) + 1.0;
    for (const Neighbor& nb : net.neighbors(i)) A(i, nb.id) -= nb.weight;
    b(i) = net.internal()[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd z = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(b);
  report.z_ss.assign(z.data(), z.data() + n);
  for (NodeId v : mod.anchors()) report.z_ss[static_cast<std::size_t>(v)] = 0.0;
  return report;
}

double polarization_index(std::span<const double> z) {
  if (z.empty()) {
    fail(ErrorCode::argument, "polarization index of an empty opinion vector is undefined");
  }
  double sum = 0.0;
  for (double v : z) sum += v * v;
  return sum / static_cast<double>(z.size());
}

double gain(const Network& net, const ModerationState& mod, NodeId v, const SolverOptions& opts) {
  if (mod.is_anchored(v)) {
    fail(ErrorCode::argument, "node " + std::to_string(v) + " is already anchored");
  }
  FixedPointContext ctx(net, opts);
  FixedPointContext::Workspace ws;
  std::span<const double> z_old = ctx.solve(mod, -1, {}, ws);
  const double pi_old = polarization_index(z_old);
  std::vector<double> warm(z_old.begin(), z_old.end());
  std::span<const double> z_new = ctx.solve(mod, v, warm, ws);
  return pi_old - polarization_index(z_new);
}

}  // namespace depolar
