#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "parallel.hpp"
#include "rng.hpp"

namespace depolar {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json params_to_json(const DcsbmParams& p) {
  return json{{"n", p.n},          {"block_split", p.block_split}, {"gamma", p.gamma},
              {"d_min", p.d_min},  {"d_max", p.d_max},             {"mu", p.mu},
              {"seed", p.seed}};
}

DcsbmParams params_from_json(const json& j, const std::string& context) {
  for (const char* key : {"n", "block_split", "gamma", "d_min", "d_max", "mu", "seed"}) {
    if (!j.contains(key)) {
      fail(ErrorCode::format, context + ": params missing field `" + key + "`");
    }
  }
  DcsbmParams p;
  p.n = j["n"].get<NodeId>();
  p.block_split = j["block_split"].get<double>();
  p.gamma = j["gamma"].get<double>();
  p.d_min = j["d_min"].get<double>();
  p.d_max = j["d_max"].get<double>();
  p.mu = j["mu"].get<double>();
  p.seed = j["seed"].get<std::uint64_t>();
  return p;
}

bool params_equal(const DcsbmParams& a, const DcsbmParams& b) {
  return a.n == b.n && a.block_split == b.block_split && a.gamma == b.gamma &&
         a.d_min == b.d_min && a.d_max == b.d_max && a.mu == b.mu && a.seed == b.seed;
}

struct GraphMeta {
  std::uint64_t seed = 0;
  DcsbmParams params;
  double tol = 0.0;
  long long max_iter = 0;
  std::vector<NodeId> anchors;
  NodeId nodes = 0;
  std::int64_t edges = 0;
};

GraphMeta read_meta(const std::string& dir) {
  const std::string path = dir + "/meta.json";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path + " for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": invalid JSON: " + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("version") || doc["version"].get<int>() != 1) {
      fail(ErrorCode::format, path + ": unsupported meta version (expected 1)");
    }
    GraphMeta meta;
    meta.seed = doc.at("seed").get<std::uint64_t>();
    meta.params = params_from_json(doc.at("params"), path);
    meta.tol = doc.at("solver").at("tol").get<double>();
    meta.max_iter = doc.at("solver").at("max_iter").get<long long>();
    for (const auto& a : doc.at("anchors")) meta.anchors.push_back(a.get<NodeId>());
    meta.nodes = doc.at("nodes").get<NodeId>();
    meta.edges = doc.at("edges").get<std::int64_t>();
    return meta;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": malformed meta: " + e.what());
  }
}

void write_targets(const std::string& path, const std::vector<double>& targets) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  out << "node,gain\n";
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out << i << "," << format_double(targets[i]) << "\n";
  }
  if (!out) fail(ErrorCode::io, "write to " + path + " failed");
}

std::vector<double> read_targets(const std::string& path, NodeId n) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path + " for reading");
  std::vector<double> targets(static_cast<std::size_t>(n), 0.0);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  std::string line;
  std::int64_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    NodeId node = 0;
    double value = 0.0;
    if (!(ss >> node >> value)) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      fail(ErrorCode::format, path + ":" + std::to_string(line_no) + ": expected `node,gain`");
    }
    header_allowed = false;
    if (node < 0 || node >= n) {
      fail(ErrorCode::index, path + ":" + std::to_string(line_no) + ": node id " +
                                 std::to_string(node) + " out of range [0, " + std::to_string(n) +
                                 ")");
    }
    if (!std::isfinite(value)) {
      fail(ErrorCode::format, path + ":" + std::to_string(line_no) + ": non-finite gain");
    }
    targets[static_cast<std::size_t>(node)] = value;
    seen[static_cast<std::size_t>(node)] = 1;
  }
  for (NodeId i = 0; i < n; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      fail(ErrorCode::format, path + ": missing gain for node " + std::to_string(i));
    }
  }
  return targets;
}

std::string entry_dir_name(int graph_index, int augment_index) {
  char buf[32];
  if (augment_index == 0) {
    std::snprintf(buf, sizeof(buf), "g%04d", graph_index);
  } else {
    std::snprintf(buf, sizeof(buf), "g%04d_a%02d", graph_index, augment_index);
  }
  return buf;
}

/// Checks whether an already-present entry matches what the build would
/// produce (same seed, params, anchors) and loads cleanly.
bool entry_is_valid(const std::string& dir, std::uint64_t seed, const DcsbmParams& params,
                    std::span<const NodeId> anchors) {
  try {
    GraphMeta meta = read_meta(dir);
    if (meta.seed != seed || !params_equal(meta.params, params)) return false;
    if (meta.anchors.size() != anchors.size()) return false;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (meta.anchors[i] != anchors[i]) return false;
    }
    LabeledGraph lg = load_labeled_graph(dir);
    return lg.net.node_count() == meta.nodes && lg.net.edge_count() == meta.edges;
  } catch (const Error&) {
    return false;
  }
}

/// Best-gain node (ties -> lowest id) among non-anchored nodes.
NodeId argmax_target(const LabeledGraph& lg) {
  std::vector<std::uint8_t> anchored(static_cast<std::size_t>(lg.net.node_count()), 0);
  for (NodeId v : lg.anchors) anchored[static_cast<std::size_t>(v)] = 1;
  NodeId best = -1;
  for (NodeId v = 0; v < lg.net.node_count(); ++v) {
    if (anchored[static_cast<std::size_t>(v)]) continue;
    if (best == -1 || lg.targets[static_cast<std::size_t>(v)] > lg.targets[static_cast<std::size_t>(best)]) {
      best = v;
    }
  }
  if (best == -1) fail(ErrorCode::argument, "no non-anchored node left to moderate");
  return best;
}

}  // namespace

LabeledGraph label_gains(const Network& net, const SolverOptions& solver, int threads,
                         std::span<const NodeId> anchors) {
  ModerationState mod(net);
  for (NodeId v : anchors) mod = mod.anchored(v);

  FixedPointContext ctx(net, solver);
  FixedPointContext::Workspace base_ws;
  std::span<const double> base =
      ctx.solve(mod, -1, net.expressed(), base_ws);
  std::vector<double> z0(base.begin(), base.end());
  const double pi0 = polarization_index(z0);

  const NodeId n = net.node_count();
  std::vector<double> targets(static_cast<std::size_t>(n), 0.0);
  parallel_for(0, n, threads, [&](std::int64_t lo, std::int64_t hi) {
    FixedPointContext::Workspace ws;
    for (std::int64_t v = lo; v < hi; ++v) {
      if (mod.is_anchored(v)) continue;
      try {
        std::span<const double> z = ctx.solve(mod, v, z0, ws);
        targets[static_cast<std::size_t>(v)] = pi0 - polarization_index(z);
      } catch (const ConvergenceError& e) {
        fail(ErrorCode::convergence,
             "gain labeling failed at node " + std::to_string(v) + ": " + e.what());
      }
    }
  });

  LabeledGraph lg;
  lg.net = net.with_expressed(std::move(z0));
  lg.targets = std::move(targets);
  lg.anchors.assign(anchors.begin(), anchors.end());
  return lg;
}

void save_labeled_graph(const LabeledGraph& lg, const std::string& dir, std::uint64_t seed,
                        const DcsbmParams& params, const SolverOptions& solver) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory " + dir + ": " + ec.message());
  write_edge_list(lg.net, dir + "/edges.txt");
  write_opinions(lg.net, dir + "/opinions.csv");
  write_targets(dir + "/targets.csv", lg.targets);
  json meta = {
      {"version", 1},
      {"seed", seed},
      {"params", params_to_json(params)},
      {"solver", {{"tol", solver.tol}, {"max_iter", solver.max_iter}}},
      {"anchors", json(lg.anchors)},
      {"nodes", lg.net.node_count()},
      {"edges", lg.net.edge_count()},
      {"pi0", polarization_index(lg.net.expressed())},
  };
  std::ofstream out(dir + "/meta.json");
  if (!out) fail(ErrorCode::io, "cannot open " + dir + "/meta.json for writing");
  out << meta.dump(2) << "\n";
  if (!out) fail(ErrorCode::io, "write to " + dir + "/meta.json failed");
}

LabeledGraph load_labeled_graph(const std::string& dir) {
  GraphMeta meta = read_meta(dir);
  Network net = load_edge_list(dir + "/edges.txt");
  if (net.node_count() != meta.nodes || net.edge_count() != meta.edges) {
    fail(ErrorCode::format, dir + ": edges.txt has " + std::to_string(net.node_count()) +
                                " nodes / " + std::to_string(net.edge_count()) +
                                " edges, meta.json says " + std::to_string(meta.nodes) + " / " +
                                std::to_string(meta.edges));
  }
  net = load_opinions(net, dir + "/opinions.csv");
  LabeledGraph lg;
  lg.targets = read_targets(dir + "/targets.csv", net.node_count());
  lg.net = std::move(net);
  lg.anchors = meta.anchors;
  for (NodeId v : lg.anchors) {
    if (v < 0 || v >= lg.net.node_count()) {
      fail(ErrorCode::format, dir + ": anchor id " + std::to_string(v) + " out of range");
    }
  }
  return lg;
}

CorpusManifest build_corpus(const CorpusParams& params, const std::string& out_dir,
                            const std::function<void(const CorpusEntry&)>& on_entry) {
  if (params.count <= 0) {
    fail(ErrorCode::argument, "corpus count must be positive, got " + std::to_string(params.count));
  }
  if (params.augment_anchors < 0) {
    fail(ErrorCode::argument, "augment_anchors must be non-negative");
  }
  validate_params(params.base);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory " + out_dir + ": " + ec.message());

  // Distinct per-graph seeds from the master seed.
  std::uint64_t chain = params.base.seed;
  std::vector<std::uint64_t> seeds;
  std::set<std::uint64_t> unique_check;
  for (int g = 0; g < params.count; ++g) {
    const std::uint64_t s = splitmix64(chain);
    seeds.push_back(s);
    unique_check.insert(s);
  }
  if (unique_check.size() != seeds.size()) {
    fail(ErrorCode::argument, "per-graph seed collision; choose a different master seed");
  }

  CorpusManifest manifest;
  manifest.count = params.count;
  manifest.params = params.base;
  manifest.solver = params.solver;
  manifest.augment_anchors = params.augment_anchors;

  for (int g = 0; g < params.count; ++g) {
    DcsbmParams graph_params = params.base;
    graph_params.seed = seeds[static_cast<std::size_t>(g)];

    LabeledGraph current;
    std::vector<NodeId> anchors;
    for (int a = 0; a <= params.augment_anchors; ++a) {
      const std::string name = entry_dir_name(g, a);
      const std::string dir = out_dir + "/" + name;
      if (entry_is_valid(dir, graph_params.seed, graph_params, anchors)) {
        current = load_labeled_graph(dir);
      } else {
        if (a == 0) {
          DcsbmResult draw = generate_dcsbm(graph_params);
          Network with_opinions = assign_opinions(draw.net, draw.membership, params.solver);
          current = label_gains(with_opinions, params.solver, params.threads);
        } else {
          current = label_gains(current.net, params.solver, params.threads, anchors);
        }
        save_labeled_graph(current, dir, graph_params.seed, graph_params, params.solver);
      }
      CorpusEntry entry;
      entry.dir = name;
      entry.seed = graph_params.seed;
      entry.nodes = current.net.node_count();
      entry.edges = current.net.edge_count();
      entry.anchors = anchors;
      manifest.graphs.push_back(entry);
      if (on_entry) on_entry(entry);
      if (a < params.augment_anchors) anchors.push_back(argmax_target(current));
    }
  }

  json doc = {
      {"version", 1},
      {"count", manifest.count},
      {"augment_anchors", manifest.augment_anchors},
      {"params", params_to_json(manifest.params)},
      {"solver", {{"tol", params.solver.tol}, {"max_iter", params.solver.max_iter}}},
  };
  json graphs = json::array();
  for (const CorpusEntry& e : manifest.graphs) {
    graphs.push_back({{"dir", e.dir},
                      {"seed", e.seed},
                      {"nodes", e.nodes},
                      {"edges", e.edges},
                      {"anchors", json(e.anchors)}});
  }
  doc["graphs"] = graphs;
  const std::string manifest_path = out_dir + "/manifest.json";
  std::ofstream out(manifest_path);
  if (!out) fail(ErrorCode::io, "cannot open " + manifest_path + " for writing");
  out << doc.dump(2) << "\n";
  if (!out) fail(ErrorCode::io, "write to " + manifest_path + " failed");
  return manifest;
}

CorpusManifest load_manifest(const std::string& dir) {
  const std::string path = dir + "/manifest.json";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path + " for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": invalid JSON: " + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("version") || doc["version"].get<int>() != 1) {
      fail(ErrorCode::format, path + ": unsupported manifest version (expected 1)");
    }
    CorpusManifest manifest;
    manifest.count = doc.at("count").get<int>();
    manifest.augment_anchors = doc.value("augment_anchors", 0);
    manifest.params = params_from_json(doc.at("params"), path);
    manifest.solver.tol = doc.at("solver").at("tol").get<double>();
    manifest.solver.max_iter = doc.at("solver").at("max_iter").get<long long>();
    for (const auto& g : doc.at("graphs")) {
      CorpusEntry entry;
      entry.dir = g.at("dir").get<std::string>();
      entry.seed = g.at("seed").get<std::uint64_t>();
      entry.nodes = g.at("nodes").get<NodeId>();
      entry.edges = g.at("edges").get<std::int64_t>();
      for (const auto& a : g.at("anchors")) entry.anchors.push_back(a.get<NodeId>());
      manifest.graphs.push_back(std::move(entry));
    }
    return manifest;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": malformed manifest: " + e.what());
  }
}

CorpusManifest validate_corpus(const std::string& dir) {
  CorpusManifest manifest = load_manifest(dir);
  if (manifest.count <= 0 || manifest.graphs.empty()) {
    fail(ErrorCode::format, dir + ": manifest lists no graphs");
  }
  std::set<std::uint64_t> fresh_seeds;
  int fresh = 0;
  for (const CorpusEntry& entry : manifest.graphs) {
    const std::string entry_dir = dir + "/" + entry.dir;
    LabeledGraph lg = load_labeled_graph(entry_dir);
    if (lg.net.node_count() != entry.nodes || lg.net.edge_count() != entry.edges) {
      fail(ErrorCode::format, entry_dir + ": entry has " + std::to_string(lg.net.node_count()) +
                                  " nodes / " + std::to_string(lg.net.edge_count()) +
                                  " edges, manifest says " + std::to_string(entry.nodes) + " / " +
                                  std::to_string(entry.edges));
    }
    if (lg.anchors != entry.anchors) {
      fail(ErrorCode::format, entry_dir + ": anchors disagree with manifest");
    }
    if (entry.anchors.empty()) {
      ++fresh;
      if (!fresh_seeds.insert(entry.seed).second) {
        fail(ErrorCode::format, dir + ": duplicate per-graph seed " + std::to_string(entry.seed));
      }
    }
  }
  if (fresh != manifest.count) {
    fail(ErrorCode::format, dir + ": manifest count " + std::to_string(manifest.count) +
                                " does not match " + std::to_string(fresh) + " fresh entries");
  }
  return manifest;
}

std::vector<LabeledGraph> load_corpus(const std::string& dir) {
  CorpusManifest manifest = validate_corpus(dir);
  std::vector<LabeledGraph> graphs;
  graphs.reserve(manifest.graphs.size());
  for (const CorpusEntry& entry : manifest.graphs) {
    graphs.push_back(load_labeled_graph(dir + "/" + entry.dir));
  }
  return graphs;
}

}  // namespace depolar
