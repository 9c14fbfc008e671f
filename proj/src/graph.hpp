#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace depolar {

using NodeId = std::int64_t;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double w = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId id = 0;
  double weight = 1.0;
};

/// Weighted undirected graph with per-node internal (s) and expressed (z)
/// opinions in [-1, +1]. No self-loops, no duplicate edges, all weights
/// positive. Instances are immutable; derived graphs are new values.
///
/// Adjacency lists keep edge-insertion order, so a permuted copy built from
/// relabeled edges traverses each neighborhood in the same positional order.
class Network {
 public:
  Network() = default;

  /// Validates the edge set and builds the adjacency index. Opinions are
  /// zero-initialized.
  static Network build(NodeId node_count, std::vector<Edge> edges);

  NodeId node_count() const { return n_; }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const Neighbor> neighbors(NodeId i) const {
    return {adj_.data() + adj_offsets_[static_cast<std::size_t>(i)],
            adj_.data() + adj_offsets_[static_cast<std::size_t>(i) + 1]};
  }
  std::int64_t degree(NodeId i) const {
    return adj_offsets_[static_cast<std::size_t>(i) + 1] - adj_offsets_[static_cast<std::size_t>(i)];
  }
  /// Sum of incident edge weights.
  double weighted_degree(NodeId i) const { return weighted_degree_[static_cast<std::size_t>(i)]; }

  const std::vector<double>& internal() const { return s_; }
  const std::vector<double>& expressed() const { return z_; }

  /// Copies with replaced opinion vectors (range-checked to [-1, 1]).
  Network with_internal(std::vector<double> s) const;
  Network with_expressed(std::vector<double> z) const;
  Network with_opinions(std::vector<double> s, std::vector<double> z) const;

 private:
  NodeId n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::int64_t> adj_offsets_;
  std::vector<Neighbor> adj_;
  std::vector<double> weighted_degree_;
  std::vector<double> s_;
  std::vector<double> z_;
};

/// Row view of the weighted graph Laplacian: diagonal(i) is the weighted
/// degree, off-diagonals are -w_ij. Rows may be zeroed (anchored nodes),
/// in which case every entry of the row is exactly zero.
class LaplacianView {
 public:
  explicit LaplacianView(const Network& net);
  LaplacianView(const Network& net, std::vector<std::uint8_t> zeroed);

  NodeId size() const { return net_->node_count(); }
  bool is_zeroed(NodeId i) const { return !zeroed_.empty() && zeroed_[static_cast<std::size_t>(i)] != 0; }
  double diagonal(NodeId i) const { return is_zeroed(i) ? 0.0 : net_->weighted_degree(i); }
  /// Off-diagonal support of row i as (j, w_ij) pairs; the matrix entry is
  /// -w_ij. Empty for zeroed rows.
  std::span<const Neighbor> off_diagonal(NodeId i) const {
    if (is_zeroed(i)) return {};
    return net_->neighbors(i);
  }
  std::vector<NodeId> zeroed_rows() const;

  /// y = (L_zeroed + I) x. For a zeroed row the system row reduces to the
  /// identity row, so y_i = x_i there.
  std::vector<double> apply_plus_identity(std::span<const double> x) const;

 private:
  const Network* net_;
  std::vector<std::uint8_t> zeroed_;
};

LaplacianView laplacian(const Network& net);

/// Reads a whitespace-separated edge list: `u v [w]` per line, `#` comments.
/// Node count is 1 + max id seen. Missing weights default to default_weight.
Network load_edge_list(const std::string& path, double default_weight = 1.0);

/// Writes the canonical edge list: one `u v w` line per edge with u < v,
/// sorted by (u, v), weights formatted to round-trip exactly.
void write_edge_list(const Network& net, const std::string& path);

/// Reads a `node,s` or `node,s,z` CSV and returns a copy of net with the
/// listed opinions applied. Unlisted nodes keep s = 0.
Network load_opinions(const Network& net, const std::string& path);

/// Writes `node,s,z` rows for every node.
void write_opinions(const Network& net, const std::string& path);

/// Relabels nodes: node i becomes perm[i]. perm must be a bijection on
/// {0..n-1}. Edge order and per-node adjacency order are preserved
/// positionally.
Network permute(const Network& net, std::span<const NodeId> perm);

struct ComponentResult {
  Network net;                        // induced subgraph, ids relabeled 0..k-1
  std::vector<NodeId> new_to_old;     // ascending original ids
  std::vector<NodeId> old_to_new;     // -1 for dropped nodes
};

/// Largest connected component; size ties go to the component containing the
/// smallest original id. Opinions are carried over.
ComponentResult largest_connected_component(const Network& net);

/// Edges normalized to u < v and sorted; used by tests and the writer.
std::vector<Edge> canonical_edges(const Network& net);

/// Shortest decimal representation that parses back to exactly x.
std::string format_double(double x);

}  // namespace depolar
