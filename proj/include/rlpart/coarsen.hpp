#pragma once

#include <cstdint>
#include <vector>

#include "rlpart/graph.hpp"
#include "rlpart/rng.hpp"

namespace rlpart {

// One coarsening level: clusters of size 1 or 2 from a matching, the coarse
// graph, and the fine-to-coarse map used to interpolate labelings back.
struct CoarseLevel {
  std::vector<int> fine_to_coarse;
  std::vector<int> cluster_size;  // per coarse node, 1 or 2
  Graph coarse;
};

// Heavy-edge matching coarsening. Nodes are visited in a seeded random
// permutation; each unmatched node pairs with the unmatched neighbor that has
// the fewest unmatched neighbors (ties broken by lowest id). The graphs here
// are unweighted, so this tie-break is what keeps singleton count low.
CoarseLevel heavy_edge_matching(const Graph& g, Rng& rng);
CoarseLevel heavy_edge_matching(const Graph& g, std::uint64_t seed);

// Deterministic variant with an explicit visit order.
CoarseLevel heavy_edge_matching_ordered(const Graph& g, const std::vector<int>& order);

Bisection interpolate_bisection(const Graph& fine, const CoarseLevel& lvl,
                                const Bisection& coarse_b);

Separator3 interpolate_separator(const Graph& fine, const CoarseLevel& lvl,
                                 const Separator3& coarse_s);

// Coarsens repeatedly until the coarsest graph has fewer than n_min nodes or
// coarsening stalls. chain[0] coarsens g; chain[i] coarsens chain[i-1].coarse.
std::vector<CoarseLevel> coarsening_chain(const Graph& g, int n_min, std::uint64_t seed);

}  // namespace rlpart
