#include "graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <utility>

namespace depolar {

namespace {

void check_node(NodeId id, NodeId n, const char* what) {
  if (id < 0 || id >= n) {
    fail(ErrorCode::index, std::string(what) + " node id " + std::to_string(id) +
                               " out of range [0, " + std::to_string(n) + ")");
  }
}

void check_opinion_range(const std::vector<double>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= -1.0 && v[i] <= 1.0)) {
      fail(ErrorCode::range, std::string(name) + " opinion at node " + std::to_string(i) +
                                 " is " + std::to_string(v[i]) + ", outside [-1, 1]");
    }
  }
}

struct LineReader {
  std::ifstream in;
  std::string path;
  std::int64_t line_no = 0;

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) fail(ErrorCode::io, "cannot open " + p + " for reading");
  }
  bool next(std::string& line) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  [[noreturn]] void fail_format(const std::string& msg) const {
    fail(ErrorCode::format, path + ":" + std::to_string(line_no) + ": " + msg);
  }
};

}  // namespace

Network Network::build(NodeId node_count, std::vector<Edge> edges) {
  if (node_count < 0) {
    fail(ErrorCode::argument, "node count must be non-negative, got " + std::to_string(node_count));
  }
  Network net;
  net.n_ = node_count;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    Edge& e = edges[k];
    check_node(e.u, node_count, "edge endpoint");
    check_node(e.v, node_count, "edge endpoint");
    if (e.u == e.v) {
      fail(ErrorCode::argument, "self-loop at node " + std::to_string(e.u));
    }
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      fail(ErrorCode::range, "edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                                 ") has non-positive weight " + std::to_string(e.w));
    }
  }
  {
    // Duplicate detection on unordered endpoint pairs.
    std::vector<std::pair<NodeId, NodeId>> keys;
    keys.reserve(edges.size());
    for (const Edge& e : edges) keys.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v));
    std::sort(keys.begin(), keys.end());
    auto dup = std::adjacent_find(keys.begin(), keys.end());
    if (dup != keys.end()) {
      fail(ErrorCode::argument, "duplicate edge (" + std::to_string(dup->first) + ", " +
                                    std::to_string(dup->second) + ")");
    }
  }

  const std::size_t n = static_cast<std::size_t>(node_count);
  std::vector<std::int64_t> counts(n, 0);
  for (const Edge& e : edges) {
    ++counts[static_cast<std::size_t>(e.u)];
    ++counts[static_cast<std::size_t>(e.v)];
  }
  net.adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) net.adj_offsets_[i + 1] = net.adj_offsets_[i] + counts[i];
  net.adj_.resize(static_cast<std::size_t>(net.adj_offsets_[n]));
  std::vector<std::int64_t> cursor(net.adj_offsets_.begin(), net.adj_offsets_.end() - 1);
  for (const Edge& e : edges) {
    net.adj_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.u)]++)] = {e.v, e.w};
    net.adj_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.v)]++)] = {e.u, e.w};
  }
  net.weighted_degree_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const Neighbor& nb : net.neighbors(static_cast<NodeId>(i))) sum += nb.weight;
    net.weighted_degree_[i] = sum;
  }
  net.edges_ = std::move(edges);
  net.s_.assign(n, 0.0);
  net.z_.assign(n, 0.0);
  return net;
}

Network Network::with_internal(std::vector<double> s) const {
  if (static_cast<NodeId>(s.size()) != n_) {
    fail(ErrorCode::argument, "internal opinion vector has size " + std::to_string(s.size()) +
                                  ", expected " + std::to_string(n_));
  }
  check_opinion_range(s, "internal");
  Network out = *this;
  out.s_ = std::move(s);
  return out;
}

Network Network::with_expressed(std::vector<double> z) const {
  if (static_cast<NodeId>(z.size()) != n_) {
    fail(ErrorCode::argument, "expressed opinion vector has size " + std::to_string(z.size()) +
                                  ", expected " + std::to_string(n_));
  }
  check_opinion_range(z, "expressed");
  Network out = *this;
  out.z_ = std::move(z);
  return out;
}

Network Network::with_opinions(std::vector<double> s, std::vector<double> z) const {
  return with_internal(std::move(s)).with_expressed(std::move(z));
}

LaplacianView::LaplacianView(const Network& net) : net_(&net) {}

LaplacianView::LaplacianView(const Network& net, std::vector<std::uint8_t> zeroed)
    : net_(&net), zeroed_(std::move(zeroed)) {
  if (!zeroed_.empty() && static_cast<NodeId>(zeroed_.size()) != net.node_count()) {
    fail(ErrorCode::argument, "zeroed-row mask has size " + std::to_string(zeroed_.size()) +
                                  ", expected " + std::to_string(net.node_count()));
  }
}

std::vector<NodeId> LaplacianView::zeroed_rows() const {
  std::vector<NodeId> rows;
  for (std::size_t i = 0; i < zeroed_.size(); ++i) {
    if (zeroed_[i]) rows.push_back(static_cast<NodeId>(i));
  }
  return rows;
}

std::vector<double> LaplacianView::apply_plus_identity(std::span<const double> x) const {
  const NodeId n = size();
  if (static_cast<NodeId>(x.size()) != n) {
    fail(ErrorCode::argument, "vector has size " + std::to_string(x.size()) + ", expected " +
                                  std::to_string(n));
  }
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (NodeId i = 0; i < n; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    if (is_zeroed(i)) {
      y[ii] = x[ii];
      continue;
    }
    double acc = (net_->weighted_degree(i) + 1.0) * x[ii];
    for (const Neighbor& nb : net_->neighbors(i)) {
      acc -= nb.weight * x[static_cast<std::size_t>(nb.id)];
    }
    y[ii] = acc;
  }
  return y;
}

LaplacianView laplacian(const Network& net) { return LaplacianView(net); }

Network load_edge_list(const std::string& path, double default_weight) {
  if (!(default_weight > 0.0) || !std::isfinite(default_weight)) {
    fail(ErrorCode::argument,
         "default edge weight must be positive, got " + std::to_string(default_weight));
  }
  LineReader reader(path);
  std::vector<Edge> edges;
  std::map<std::pair<NodeId, NodeId>, std::int64_t> first_line;
  NodeId max_id = -1;
  std::string line;
  while (reader.next(line)) {
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ss(line.substr(start));
    NodeId u = 0, v = 0;
    double w = default_weight;
    if (!(ss >> u >> v)) reader.fail_format("expected `u v [w]`, got `" + line + "`");
    if (!(ss >> w)) {
      w = default_weight;
      ss.clear();
    }
    std::string rest;
    if (ss >> rest) reader.fail_format("trailing content `" + rest + "`");
    if (u < 0 || v < 0) reader.fail_format("negative node id");
    if (u == v) reader.fail_format("self-loop at node " + std::to_string(u));
    if (!(w > 0.0) || !std::isfinite(w)) {
      reader.fail_format("non-positive weight " + std::to_string(w));
    }
    auto key = std::make_pair(std::min(u, v), std::max(u, v));
    auto [it, inserted] = first_line.emplace(key, reader.line_no);
    if (!inserted) {
      reader.fail_format("duplicate edge (" + std::to_string(u) + ", " + std::to_string(v) +
                         "), first seen on line " + std::to_string(it->second));
    }
    edges.push_back({u, v, w});
    max_id = std::max({max_id, u, v});
  }
  return Network::build(max_id + 1, std::move(edges));
}

void write_edge_list(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  out << "# nodes " << net.node_count() << "\n";
  for (const Edge& e : canonical_edges(net)) {
    out << e.u << " " << e.v << " " << format_double(e.w) << "\n";
  }
  if (!out) fail(ErrorCode::io, "write to " + path + " failed");
}

Network load_opinions(const Network& net, const std::string& path) {
  LineReader reader(path);
  std::vector<double> s = net.internal();
  std::vector<double> z = net.expressed();
  bool any_z = false;
  std::string line;
  bool header_allowed = true;
  while (reader.next(line)) {
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::string body = line.substr(start);
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream ss(body);
    NodeId node = 0;
    double sv = 0.0, zv = 0.0;
    if (!(ss >> node >> sv)) {
      std::string first;
      std::istringstream probe(body);
      // A single leading header row like `node,s,z` is tolerated.
      if (header_allowed && (probe >> first) && !first.empty() && !std::isdigit(static_cast<unsigned char>(first[0])) &&
          first[0] != '-' && first[0] != '+') {
        header_allowed = false;
        continue;
      }
      reader.fail_format("expected `node,s[,z]`, got `" + line + "`");
    }
    header_allowed = false;
    bool has_z = static_cast<bool>(ss >> zv);
    std::string rest;
    if (has_z && (ss >> rest)) reader.fail_format("trailing content `" + rest + "`");
    if (node < 0 || node >= net.node_count()) {
      fail(ErrorCode::index, reader.path + ":" + std::to_string(reader.line_no) + ": node id " +
                                 std::to_string(node) + " out of range [0, " +
                                 std::to_string(net.node_count()) + ")");
    }
    if (!(sv >= -1.0 && sv <= 1.0)) {
      fail(ErrorCode::range, reader.path + ":" + std::to_string(reader.line_no) +
                                 ": internal opinion " + std::to_string(sv) + " outside [-1, 1]");
    }
    s[static_cast<std::size_t>(node)] = sv;
    if (has_z) {
      if (!(zv >= -1.0 && zv <= 1.0)) {
        fail(ErrorCode::range, reader.path + ":" + std::to_string(reader.line_no) +
                                   ": expressed opinion " + std::to_string(zv) + " outside [-1, 1]");
      }
      z[static_cast<std::size_t>(node)] = zv;
      any_z = true;
    }
  }
  Network out = net.with_internal(std::move(s));
  if (any_z) out = out.with_expressed(std::move(z));
  return out;
}

void write_opinions(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  out << "node,s,z\n";
  for (NodeId i = 0; i < net.node_count(); ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    out << i << "," << format_double(net.internal()[ii]) << "," << format_double(net.expressed()[ii])
        << "\n";
  }
  if (!out) fail(ErrorCode::io, "write to " + path + " failed");
}

Network permute(const Network& net, std::span<const NodeId> perm) {
  const NodeId n = net.node_count();
  if (static_cast<NodeId>(perm.size()) != n) {
    fail(ErrorCode::argument, "permutation has size " + std::to_string(perm.size()) +
                                  ", expected " + std::to_string(n));
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  for (NodeId i = 0; i < n; ++i) {
    const NodeId p = perm[static_cast<std::size_t>(i)];
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) {
      fail(ErrorCode::argument, "permutation is not a bijection on {0.." + std::to_string(n - 1) +
                                    "}: entry " + std::to_string(i) + " -> " + std::to_string(p));
    }
    seen[static_cast<std::size_t>(p)] = 1;
  }
  std::vector<Edge> edges = net.edges();
  for (Edge& e : edges) {
    e.u = perm[static_cast<std::size_t>(e.u)];
    e.v = perm[static_cast<std::size_t>(e.v)];
  }
  std::vector<double> s(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) {
    s[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = net.internal()[static_cast<std::size_t>(i)];
    z[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = net.expressed()[static_cast<std::size_t>(i)];
  }
  return Network::build(n, std::move(edges)).with_opinions(std::move(s), std::move(z));
}

ComponentResult largest_connected_component(const Network& net) {
  const NodeId n = net.node_count();
  std::vector<NodeId> comp(static_cast<std::size_t>(n), -1);
  NodeId comp_count = 0;
  std::vector<std::int64_t> comp_size;
  std::vector<NodeId> stack;
  for (NodeId root = 0; root < n; ++root) {
    if (comp[static_cast<std::size_t>(root)] != -1) continue;
    const NodeId c = comp_count++;
    comp_size.push_back(0);
    stack.push_back(root);
    comp[static_cast<std::size_t>(root)] = c;
    while (!stack.empty()) {
      const NodeId i = stack.back();
      stack.pop_back();
      ++comp_size[static_cast<std::size_t>(c)];
      for (const Neighbor& nb : net.neighbors(i)) {
        if (comp[static_cast<std::size_t>(nb.id)] == -1) {
          comp[static_cast<std::size_t>(nb.id)] = c;
          stack.push_back(nb.id);
        }
      }
    }
  }
  // Components are discovered in order of their smallest member, so the first
  // maximal component wins ties by smallest contained original id.
  NodeId best = 0;
  for (NodeId c = 1; c < comp_count; ++c) {
    if (comp_size[static_cast<std::size_t>(c)] > comp_size[static_cast<std::size_t>(best)]) best = c;
  }

  ComponentResult result;
  result.old_to_new.assign(static_cast<std::size_t>(n), -1);
  for (NodeId i = 0; i < n; ++i) {
    if (comp[static_cast<std::size_t>(i)] == best) {
      result.old_to_new[static_cast<std::size_t>(i)] = static_cast<NodeId>(result.new_to_old.size());
      result.new_to_old.push_back(i);
    }
  }
  const NodeId k = static_cast<NodeId>(result.new_to_old.size());
  std::vector<Edge> edges;
  for (const Edge& e : net.edges()) {
    const NodeId nu = result.old_to_new[static_cast<std::size_t>(e.u)];
    const NodeId nv = result.old_to_new[static_cast<std::size_t>(e.v)];
    if (nu != -1 && nv != -1) edges.push_back({nu, nv, e.w});
  }
  std::vector<double> s(static_cast<std::size_t>(k)), z(static_cast<std::size_t>(k));
  for (NodeId i = 0; i < k; ++i) {
    s[static_cast<std::size_t>(i)] = net.internal()[static_cast<std::size_t>(result.new_to_old[static_cast<std::size_t>(i)])];
    z[static_cast<std::size_t>(i)] = net.expressed()[static_cast<std::size_t>(result.new_to_old[static_cast<std::size_t>(i)])];
  }
  result.net = Network::build(k, std::move(edges)).with_opinions(std::move(s), std::move(z));
  return result;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  // Prefer a shorter representation when it round-trips.
  for (int prec = 1; prec <= 16; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
    if (std::strtod(shorter, nullptr) == x) return shorter;
  }
  return buf;
}

std::vector<Edge> canonical_edges(const Network& net) {
  std::vector<Edge> edges = net.edges();
  for (Edge& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  return edges;
}

}  // namespace depolar
