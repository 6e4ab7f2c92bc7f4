#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rlpart/error.hpp"

namespace rlpart {

enum class Part : std::uint8_t { A = 0, B = 1 };
enum class Part3 : std::uint8_t { A = 0, B = 1, S = 2 };

inline Part other(Part p) { return p == Part::A ? Part::B : Part::A; }

// Immutable simple undirected graph in compressed adjacency form.
// Node ids are dense 0..n-1, neighbor lists sorted ascending, no self-loops,
// no duplicates, and symmetric by construction.
class Graph {
 public:
  Graph() = default;

  // Builds from an edge list; self-loops and duplicate edges are dropped.
  static Graph from_edges(int n, std::span<const std::pair<int, int>> edges);
  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    return from_edges(n, std::span<const std::pair<int, int>>(edges));
  }

  int num_nodes() const { return n_; }
  std::int64_t num_edges() const { return m_; }

  int degree(int v) const { return static_cast<int>(ptr_[v + 1] - ptr_[v]); }

  std::span<const int> neighbors(int v) const {
    return {ind_.data() + ptr_[v], ind_.data() + ptr_[v + 1]};
  }

  bool has_edge(int u, int v) const;

  // Sum of all degrees, equals 2m.
  std::int64_t total_volume() const { return 2 * m_; }

  bool connected() const;

  // Connected component id per node, components numbered by smallest member.
  std::vector<int> component_ids(int* num_components = nullptr) const;

  // Sorted edge list (u < v), ascending.
  std::vector<std::pair<int, int>> edge_list() const;

 private:
  int n_ = 0;
  std::int64_t m_ = 0;
  std::vector<std::int64_t> ptr_;
  std::vector<int> ind_;
};

// Two-way node labeling with cached volumes, part sizes and cut size.
class Bisection {
 public:
  Bisection() = default;
  Bisection(const Graph& g, std::vector<Part> labels);

  Part label(int v) const { return label_[v]; }
  const std::vector<Part>& labels() const { return label_; }

  std::int64_t vol(Part p) const { return p == Part::A ? vol_a_ : vol_b_; }
  int count(Part p) const { return p == Part::A ? cnt_a_ : cnt_b_; }
  std::int64_t cut() const { return cut_; }

  // Flips v's label, updating caches by scanning only adj(v). Returns the
  // step reward NC_before - NC_after. Throws DegeneratePartitionError if the
  // move would empty a part (caches untouched in that case).
  double move_node(const Graph& g, int v);

  double normalized_cut() const;

  // max(volA/volB, volB/volA)
  double volume_balance() const;

 private:
  std::vector<Part> label_;
  std::int64_t vol_a_ = 0, vol_b_ = 0, cut_ = 0;
  int cnt_a_ = 0, cnt_b_ = 0;
};

// Three-way labeling (A, B, S) with cached cardinalities. Valid iff there is
// no direct A-B edge.
class Separator3 {
 public:
  Separator3() = default;
  Separator3(const Graph& g, std::vector<Part3> labels, bool validate = true);

  Part3 label(int v) const { return label_[v]; }
  const std::vector<Part3>& labels() const { return label_; }

  int count(Part3 p) const {
    switch (p) {
      case Part3::A: return cnt_a_;
      case Part3::B: return cnt_b_;
      default: return cnt_s_;
    }
  }

  double normalized_separator() const;

  bool valid(const Graph& g) const;

  // Relabels one node, updating cardinality caches. No validity check here;
  // callers own the action rules.
  void relabel(int v, Part3 to);

 private:
  std::vector<Part3> label_;
  int cnt_a_ = 0, cnt_b_ = 0, cnt_s_ = 0;
};

// Induced subgraph with the parent-graph node ids and boundary flags.
// boundary(i) is true iff local node i has a parent-graph neighbor outside
// the subgraph.
struct Subgraph {
  std::vector<int> parent_ids;      // ascending
  std::vector<int> parent_to_local; // parent id -> local id, -1 if absent
  Graph graph;
  std::vector<std::uint8_t> boundary;

  int local(int parent_id) const { return parent_to_local[parent_id]; }
  int parent(int local_id) const { return parent_ids[local_id]; }
  int num_nodes() const { return graph.num_nodes(); }
};

std::int64_t cut_size(const Graph& g, const Bisection& b);

std::int64_t volume(const Graph& g, std::span<const int> part);

double normalized_cut(const Graph& g, const Bisection& b);

double normalized_separator(const Graph& g, const Separator3& s);

// All endpoints of cut edges, ascending.
std::vector<int> cut_frontier(const Graph& g, const Bisection& b);

// Induced subgraph on the BFS ball of radius k around the seed set.
Subgraph k_hop_subgraph(const Graph& g, std::span<const int> seeds, int k);

// Separator nodes with neighbors in both A and B, ascending.
std::vector<int> essential_separator_nodes(const Graph& g, const Separator3& s);

}  // namespace rlpart
