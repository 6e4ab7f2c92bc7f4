#include "rlpart/coarsen.hpp"

#include <algorithm>

namespace rlpart {

CoarseLevel heavy_edge_matching_ordered(const Graph& g, const std::vector<int>& order) {
  const int n = g.num_nodes();
  std::vector<int> unmatched_deg(n);
  for (int v = 0; v < n; ++v) unmatched_deg[v] = g.degree(v);

  CoarseLevel lvl;
  lvl.fine_to_coarse.assign(n, -1);
  int nc = 0;
  for (int v : order) {
    if (lvl.fine_to_coarse[v] != -1) continue;
    int best = -1, best_key = -1;
    for (int w : g.neighbors(v)) {
      if (lvl.fine_to_coarse[w] != -1) continue;
      int key = unmatched_deg[w];
      if (best == -1 || key < best_key || (key == best_key && w < best)) {
        best = w;
        best_key = key;
      }
    }
    lvl.fine_to_coarse[v] = nc;
    if (best != -1) {
      lvl.fine_to_coarse[best] = nc;
      lvl.cluster_size.push_back(2);
      for (int u : {v, best})
        for (int w : g.neighbors(u))
          if (lvl.fine_to_coarse[w] == -1) unmatched_deg[w]--;
    } else {
      lvl.cluster_size.push_back(1);
      for (int w : g.neighbors(v))
        if (lvl.fine_to_coarse[w] == -1) unmatched_deg[w]--;
    }
    ++nc;
  }

  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edge_list()) {
    int cu = lvl.fine_to_coarse[u], cv = lvl.fine_to_coarse[v];
    if (cu != cv) edges.emplace_back(cu, cv);
  }
  lvl.coarse = Graph::from_edges(nc, edges);  // dedupes multi-edges
  return lvl;
}

CoarseLevel heavy_edge_matching(const Graph& g, Rng& rng) {
  return heavy_edge_matching_ordered(g, rng.permutation(g.num_nodes()));
}

CoarseLevel heavy_edge_matching(const Graph& g, std::uint64_t seed) {
  Rng rng(seed);
  return heavy_edge_matching(g, rng);
}

Bisection interpolate_bisection(const Graph& fine, const CoarseLevel& lvl,
                                const Bisection& coarse_b) {
  std::vector<Part> labels(fine.num_nodes());
  for (int v = 0; v < fine.num_nodes(); ++v)
    labels[v] = coarse_b.label(lvl.fine_to_coarse[v]);
  return Bisection(fine, std::move(labels));
}

Separator3 interpolate_separator(const Graph& fine, const CoarseLevel& lvl,
                                 const Separator3& coarse_s) {
  // A fine A-B edge would imply a coarse A-B edge, so validity carries over;
  // still verified here to catch invalid coarse inputs.
  std::vector<Part3> labels(fine.num_nodes());
  for (int v = 0; v < fine.num_nodes(); ++v)
    labels[v] = coarse_s.label(lvl.fine_to_coarse[v]);
  try {
    return Separator3(fine, std::move(labels), true);
  } catch (const InvalidSeparatorError&) {
    throw InvalidInputError("coarse separator labeling is not a valid separator");
  }
}

std::vector<CoarseLevel> coarsening_chain(const Graph& g, int n_min, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CoarseLevel> chain;
  const Graph* cur = &g;
  while (cur->num_nodes() >= n_min) {
    CoarseLevel lvl = heavy_edge_matching(*cur, rng);
    if (lvl.coarse.num_nodes() == cur->num_nodes()) break;  // stall
    chain.push_back(std::move(lvl));
    cur = &chain.back().coarse;
  }
  return chain;
}

}  // namespace rlpart
