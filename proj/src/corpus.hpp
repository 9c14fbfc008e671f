#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dcsbm.hpp"
#include "dynamics.hpp"
#include "gcn.hpp"
#include "graph.hpp"

namespace depolar {

/// Per-node true gains under the given pre-applied anchors:
/// targets_v = pi(current equilibrium) - pi(equilibrium with anchors + {v}).
/// Anchored nodes get target 0 and are masked out via the anchors field.
/// Deterministic for any thread count; a solver failure aborts naming the
/// lowest offending node id.
LabeledGraph label_gains(const Network& net, const SolverOptions& solver = {}, int threads = 1,
                         std::span<const NodeId> anchors = {});

struct CorpusParams {
  int count = 128;        // fresh DCSBM graphs
  DcsbmParams base;       // base.seed is the master seed
  SolverOptions solver;   // used for equilibria and labeling
  int augment_anchors = 0;  // extra moderated-state examples per graph
  int threads = 1;
};

struct CorpusEntry {
  std::string dir;    // relative to the corpus root
  std::uint64_t seed = 0;
  NodeId nodes = 0;
  std::int64_t edges = 0;
  std::vector<NodeId> anchors;  // pre-applied anchors (empty for fresh graphs)
};

struct CorpusManifest {
  int count = 0;  // fresh graphs (excluding augmented entries)
  DcsbmParams params;
  SolverOptions solver;
  int augment_anchors = 0;
  std::vector<CorpusEntry> graphs;
};

/// Writes/reads one labeled example as a directory holding edges.txt,
/// opinions.csv (node,s,z), targets.csv (node,gain), and meta.json.
void save_labeled_graph(const LabeledGraph& lg, const std::string& dir, std::uint64_t seed,
                        const DcsbmParams& params, const SolverOptions& solver);
LabeledGraph load_labeled_graph(const std::string& dir);

/// Generates, labels, and stores `count` DCSBM graphs (plus augmented
/// moderated-state entries when requested) under out_dir, one subdirectory
/// per example, then writes manifest.json last. Reruns skip entries that
/// already exist and validate, so an interrupted build resumes where it
/// stopped. Per-graph seeds derive from the master seed and are distinct.
CorpusManifest build_corpus(const CorpusParams& params, const std::string& out_dir,
                            const std::function<void(const CorpusEntry&)>& on_entry = {});

CorpusManifest load_manifest(const std::string& dir);

/// Loads the manifest and re-validates every listed entry (files parse,
/// sizes match, seeds distinct). Raises format/io errors on any mismatch.
CorpusManifest validate_corpus(const std::string& dir);

/// Loads every entry of a validated corpus in manifest order.
std::vector<LabeledGraph> load_corpus(const std::string& dir);

}  // namespace depolar
