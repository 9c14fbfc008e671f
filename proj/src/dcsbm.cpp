#include "dcsbm.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "rng.hpp"

namespace depolar {

namespace {

/// Draws one endpoint from a block by inverse CDF over cumulative propensity
/// mass. cumulative holds partial sums of the block's propensities; ids maps
/// positions to node ids.
NodeId draw_endpoint(const std::vector<double>& cumulative, const std::vector<NodeId>& ids,
                     Rng& rng) {
  const double total = cumulative.back();
  const double u = rng.uniform01() * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  std::size_t pos = static_cast<std::size_t>(it - cumulative.begin());
  if (pos >= ids.size()) pos = ids.size() - 1;  // u == total edge case
  return ids[pos];
}

}  // namespace

void validate_params(const DcsbmParams& p) {
  const double d_max = p.d_max > 0.0 ? p.d_max : std::sqrt(static_cast<double>(p.n));
  if (p.n < 2) fail(ErrorCode::argument, "need at least 2 nodes, got " + std::to_string(p.n));
  if (!(p.gamma > 2.0)) {
    fail(ErrorCode::argument, "gamma must exceed 2, got " + std::to_string(p.gamma));
  }
  if (!(p.mu > 0.0 && p.mu < 1.0)) {
    fail(ErrorCode::argument, "mu must lie in (0, 1), got " + std::to_string(p.mu));
  }
  if (!(p.block_split > 0.0 && p.block_split < 1.0)) {
    fail(ErrorCode::argument, "block_split must lie in (0, 1), got " + std::to_string(p.block_split));
  }
  if (!(p.d_min >= 2.0 && p.d_min <= d_max && d_max <= static_cast<double>(p.n - 1))) {
    fail(ErrorCode::argument, "degree bounds must satisfy 2 <= d_min <= d_max <= n-1, got [" +
                                  std::to_string(p.d_min) + ", " + std::to_string(d_max) + "]");
  }
  const NodeId n1 = static_cast<NodeId>(std::llround(p.block_split * static_cast<double>(p.n)));
  if (n1 < 1 || n1 > p.n - 1) {
    fail(ErrorCode::argument, "block split leaves an empty community");
  }
}

DcsbmResult generate_dcsbm(const DcsbmParams& params) {
  validate_params(params);
  const NodeId n = params.n;
  const double d_max = params.d_max > 0.0 ? params.d_max : std::sqrt(static_cast<double>(n));
  const NodeId n1 = static_cast<NodeId>(std::llround(params.block_split * static_cast<double>(n)));

  Rng rng(params.seed);

  // Expected degrees (propensities), power-law distributed.
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (double& t : theta) t = rng.power_law(params.gamma, params.d_min, d_max);

  // Per-block propensity mass. Community 1 is ids [0, n1), community 2 the rest.
  std::vector<NodeId> block1_ids, block2_ids;
  std::vector<double> cum1, cum2;
  double mass1 = 0.0, mass2 = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    if (i < n1) {
      mass1 += theta[static_cast<std::size_t>(i)];
      block1_ids.push_back(i);
      cum1.push_back(mass1);
    } else {
      mass2 += theta[static_cast<std::size_t>(i)];
      block2_ids.push_back(i);
      cum2.push_back(mass2);
    }
  }

  // Block mixing: total expected edges M = (D1 + D2) / 2, inter-block edges
  // mu * M, intra-block totals chosen so every node's expected degree is its
  // propensity.
  const double total_edges = (mass1 + mass2) / 2.0;
  const double inter = params.mu * total_edges;
  const double intra1 = (mass1 - inter) / 2.0;  // expected intra edges in block 1
  const double intra2 = (mass2 - inter) / 2.0;
  if (intra1 <= 0.0 || intra2 <= 0.0) {
    fail(ErrorCode::argument,
         "degenerate parameters: inter-community mass exceeds a community's degree mass");
  }
  if (2.0 * total_edges / static_cast<double>(n) < 1.0) {
    fail(ErrorCode::argument, "degenerate parameters: implied mean degree below 1");
  }

  // Grouped Poisson draw per block pair, endpoints i.i.d. by propensity.
  std::vector<std::pair<NodeId, NodeId>> raw;
  const long long count11 = rng.poisson(intra1);
  for (long long e = 0; e < count11; ++e) {
    raw.emplace_back(draw_endpoint(cum1, block1_ids, rng), draw_endpoint(cum1, block1_ids, rng));
  }
  const long long count12 = rng.poisson(inter);
  for (long long e = 0; e < count12; ++e) {
    raw.emplace_back(draw_endpoint(cum1, block1_ids, rng), draw_endpoint(cum2, block2_ids, rng));
  }
  const long long count22 = rng.poisson(intra2);
  for (long long e = 0; e < count22; ++e) {
    raw.emplace_back(draw_endpoint(cum2, block2_ids, rng), draw_endpoint(cum2, block2_ids, rng));
  }

  // Collapse multi-edges, drop self-loops, canonical order.
  for (auto& pr : raw) {
    if (pr.first > pr.second) std::swap(pr.first, pr.second);
  }
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& pr : raw) {
    if (pr.first != pr.second) edges.push_back({pr.first, pr.second, 1.0});
  }

  DcsbmResult result;
  result.raw_nodes = n;
  result.raw_edges = static_cast<std::int64_t>(edges.size());
  Network full = Network::build(n, std::move(edges));
  ComponentResult lcc = largest_connected_component(full);
  result.net = std::move(lcc.net);
  result.new_to_old = std::move(lcc.new_to_old);
  result.membership.resize(static_cast<std::size_t>(result.net.node_count()));
  for (std::size_t i = 0; i < result.membership.size(); ++i) {
    result.membership[i] = result.new_to_old[i] < n1 ? 1 : 2;
  }
  return result;
}

Network assign_opinions(const Network& net, const std::vector<int>& membership,
                        const SolverOptions& solver) {
  if (static_cast<NodeId>(membership.size()) != net.node_count()) {
    fail(ErrorCode::argument, "membership has size " + std::to_string(membership.size()) +
                                  ", expected " + std::to_string(net.node_count()));
  }
  std::vector<double> s(membership.size());
  for (std::size_t i = 0; i < membership.size(); ++i) {
    if (membership[i] != 1 && membership[i] != 2) {
      fail(ErrorCode::argument, "membership at node " + std::to_string(i) +
                                    " must be 1 or 2, got " + std::to_string(membership[i]));
    }
    s[i] = membership[i] == 1 ? 1.0 : -1.0;
  }
  Network with_s = net.with_internal(std::move(s));
  SolveReport report = steady_state(with_s, ModerationState(with_s), solver);
  return with_s.with_expressed(std::move(report.z_ss));
}

}  // namespace depolar
