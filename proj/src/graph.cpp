#include "rlpart/graph.hpp"

#include <algorithm>
#include <cassert>

namespace rlpart {

Graph Graph::from_edges(int n, std::span<const std::pair<int, int>> edges) {
  Graph g;
  g.n_ = n;
  std::vector<std::pair<int, int>> dir;
  dir.reserve(2 * edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;  // self-loops dropped
    if (u < 0 || v < 0 || u >= n || v >= n) throw InvalidInputError("edge endpoint out of range");
    dir.emplace_back(u, v);
    dir.emplace_back(v, u);
  }
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  g.ptr_.assign(n + 1, 0);
  for (auto& [u, v] : dir) g.ptr_[u + 1]++;
  for (int i = 0; i < n; ++i) g.ptr_[i + 1] += g.ptr_[i];
  g.ind_.resize(dir.size());
  for (std::size_t k = 0; k < dir.size(); ++k) g.ind_[k] = dir[k].second;
  g.m_ = static_cast<std::int64_t>(dir.size()) / 2;
  return g;
}

bool Graph::has_edge(int u, int v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

bool Graph::connected() const {
  if (n_ <= 1) return true;
  int ncomp = 0;
  component_ids(&ncomp);
  return ncomp == 1;
}

std::vector<int> Graph::component_ids(int* num_components) const {
  std::vector<int> comp(n_, -1);
  std::vector<int> stack;
  int c = 0;
  for (int s = 0; s < n_; ++s) {
    if (comp[s] != -1) continue;
    comp[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int w : neighbors(u))
        if (comp[w] == -1) {
          comp[w] = c;
          stack.push_back(w);
        }
    }
    ++c;
  }
  if (num_components) *num_components = c;
  return comp;
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(m_));
  for (int u = 0; u < n_; ++u)
    for (int v : neighbors(u))
      if (u < v) edges.emplace_back(u, v);
  return edges;
}

Bisection::Bisection(const Graph& g, std::vector<Part> labels) : label_(std::move(labels)) {
  if (static_cast<int>(label_.size()) != g.num_nodes())
    throw InvalidInputError("bisection label count != node count");
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (label_[v] == Part::A) {
      vol_a_ += g.degree(v);
      cnt_a_++;
    } else {
      vol_b_ += g.degree(v);
      cnt_b_++;
    }
  }
  cut_ = cut_size(g, *this);
}

double Bisection::normalized_cut() const {
  if (vol_a_ == 0 || vol_b_ == 0)
    throw DegeneratePartitionError("normalized cut of a partition with an empty part");
  return static_cast<double>(cut_) * (1.0 / static_cast<double>(vol_a_) + 1.0 / static_cast<double>(vol_b_));
}

double Bisection::volume_balance() const {
  if (vol_a_ == 0 || vol_b_ == 0)
    throw DegeneratePartitionError("balance of a partition with an empty part");
  double r = static_cast<double>(vol_a_) / static_cast<double>(vol_b_);
  return std::max(r, 1.0 / r);
}

double Bisection::move_node(const Graph& g, int v) {
  const Part from = label_[v];
  if ((from == Part::A && cnt_a_ == 1) || (from == Part::B && cnt_b_ == 1))
    throw DegeneratePartitionError("move would empty a part");
  const double nc_before = normalized_cut();

  // edges to the old side become cut, edges to the new side become internal
  std::int64_t to_same = 0, to_other = 0;
  for (int w : g.neighbors(v)) (label_[w] == from ? to_same : to_other)++;
  cut_ += to_same - to_other;

  const int d = g.degree(v);
  if (from == Part::A) {
    vol_a_ -= d;
    vol_b_ += d;
    cnt_a_--;
    cnt_b_++;
    label_[v] = Part::B;
  } else {
    vol_b_ -= d;
    vol_a_ += d;
    cnt_b_--;
    cnt_a_++;
    label_[v] = Part::A;
  }
  return nc_before - normalized_cut();
}

Separator3::Separator3(const Graph& g, std::vector<Part3> labels, bool validate)
    : label_(std::move(labels)) {
  if (static_cast<int>(label_.size()) != g.num_nodes())
    throw InvalidInputError("separator label count != node count");
  for (Part3 p : label_) {
    switch (p) {
      case Part3::A: cnt_a_++; break;
      case Part3::B: cnt_b_++; break;
      case Part3::S: cnt_s_++; break;
    }
  }
  if (validate && !valid(g)) throw InvalidSeparatorError("A-B edge in separator labeling");
}

bool Separator3::valid(const Graph& g) const {
  for (int u = 0; u < g.num_nodes(); ++u) {
    if (label_[u] != Part3::A) continue;
    for (int w : g.neighbors(u))
      if (label_[w] == Part3::B) return false;
  }
  return true;
}

double Separator3::normalized_separator() const {
  if (cnt_a_ == 0 || cnt_b_ == 0)
    throw DegeneratePartitionError("normalized separator with an empty part");
  return static_cast<double>(cnt_s_) * (1.0 / cnt_a_ + 1.0 / cnt_b_);
}

void Separator3::relabel(int v, Part3 to) {
  const Part3 from = label_[v];
  if (from == to) return;
  switch (from) {
    case Part3::A: cnt_a_--; break;
    case Part3::B: cnt_b_--; break;
    case Part3::S: cnt_s_--; break;
  }
  switch (to) {
    case Part3::A: cnt_a_++; break;
    case Part3::B: cnt_b_++; break;
    case Part3::S: cnt_s_++; break;
  }
  label_[v] = to;
}

std::int64_t cut_size(const Graph& g, const Bisection& b) {
  std::int64_t cut = 0;
  for (int u = 0; u < g.num_nodes(); ++u)
    for (int v : g.neighbors(u))
      if (u < v && b.label(u) != b.label(v)) cut++;
  return cut;
}

std::int64_t volume(const Graph& g, std::span<const int> part) {
  std::int64_t vol = 0;
  for (int v : part) vol += g.degree(v);
  return vol;
}

double normalized_cut(const Graph& g, const Bisection& b) {
  (void)g;
  return b.normalized_cut();
}

double normalized_separator(const Graph& g, const Separator3& s) {
  if (!s.valid(g)) throw InvalidSeparatorError("A-B edge in separator labeling");
  return s.normalized_separator();
}

std::vector<int> cut_frontier(const Graph& g, const Bisection& b) {
  std::vector<std::uint8_t> on(g.num_nodes(), 0);
  for (int u = 0; u < g.num_nodes(); ++u)
    for (int v : g.neighbors(u))
      if (b.label(u) != b.label(v)) {
        on[u] = 1;
        on[v] = 1;
      }
  std::vector<int> out;
  for (int v = 0; v < g.num_nodes(); ++v)
    if (on[v]) out.push_back(v);
  return out;
}

Subgraph k_hop_subgraph(const Graph& g, std::span<const int> seeds, int k) {
  const int n = g.num_nodes();
  std::vector<int> dist(n, -1);
  std::vector<int> frontier, next;
  for (int s : seeds)
    if (dist[s] == -1) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  for (int hop = 0; hop < k && !frontier.empty(); ++hop) {
    next.clear();
    for (int u : frontier)
      for (int w : g.neighbors(u))
        if (dist[w] == -1) {
          dist[w] = hop + 1;
          next.push_back(w);
        }
    frontier.swap(next);
  }

  Subgraph sg;
  for (int v = 0; v < n; ++v)
    if (dist[v] != -1) sg.parent_ids.push_back(v);
  sg.parent_to_local.assign(n, -1);
  for (int i = 0; i < static_cast<int>(sg.parent_ids.size()); ++i)
    sg.parent_to_local[sg.parent_ids[i]] = i;

  std::vector<std::pair<int, int>> edges;
  sg.boundary.assign(sg.parent_ids.size(), 0);
  for (int i = 0; i < static_cast<int>(sg.parent_ids.size()); ++i) {
    for (int w : g.neighbors(sg.parent_ids[i])) {
      int j = sg.parent_to_local[w];
      if (j == -1)
        sg.boundary[i] = 1;
      else if (i < j)
        edges.emplace_back(i, j);
    }
  }
  sg.graph = Graph::from_edges(static_cast<int>(sg.parent_ids.size()), edges);
  return sg;
}

std::vector<int> essential_separator_nodes(const Graph& g, const Separator3& s) {
  std::vector<int> out;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (s.label(v) != Part3::S) continue;
    bool a = false, b = false;
    for (int w : g.neighbors(v)) {
      a = a || s.label(w) == Part3::A;
      b = b || s.label(w) == Part3::B;
      if (a && b) break;
    }
    if (a && b) out.push_back(v);
  }
  return out;
}

}  // namespace rlpart
