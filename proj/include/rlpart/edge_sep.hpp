#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rlpart/a2c.hpp"
#include "rlpart/coarsen.hpp"
#include "rlpart/graph.hpp"
#include "rlpart/nn.hpp"

namespace rlpart {

enum class CoarseSolver { RlAgent, GreedyFallback, External };

struct RefineConfig {
  int n_min = 100;
  int k_hops = 3;
  CoarseSolver coarse_solver = CoarseSolver::GreedyFallback;
  std::string external_cmd;  // partitioner hook; receives an .mtx path, prints "id A|B" lines
  bool audit = false;        // verify caches and features after every step
  // episode mask rejects moves pushing the volume (edge task) or cardinality
  // (vertex task) ratio beyond this, unless they improve an already-worse
  // state; <= 1 disables the guard. Interpolation can overshoot by a few
  // percent per level, so the default sits below the 1.3 reporting bound.
  double balance_cap = 1.2;
  std::uint64_t seed = 1;
};

constexpr double kNoBalanceCap = 0.0;

// Edge-task features, one row per subgraph node:
// [in A, in B, on subgraph boundary, vol(A)/vol(V), vol(B)/vol(V)]
Mat build_edge_features(const Graph& g, const Subgraph& gsub, const Bisection& b);

// Per-level before/after metrics collected during a multilevel solve.
struct LevelTrace {
  int n = 0;
  std::int64_t cut_interpolated = 0, cut_refined = 0;
  double metric_interpolated = 0, metric_refined = 0;  // NC or NS
  bool refined = false;
};

// One evaluation episode (length = cut size) on gsub, greedy actions; the
// best reward prefix is replayed onto b. Boundary nodes (feature 2), moves
// that would empty a part, and moves past the balance cap are masked.
Episode refine_episode_eval(const Graph& g, const Subgraph& gsub, Bisection& b,
                            const RefineAgent& agent, bool audit = false,
                            double balance_cap = kNoBalanceCap);

// Training flavor: sampled actions, A2C updates through the trainer, no
// replay (the post-episode labeling is kept).
Episode refine_episode_train(const Graph& g, const Subgraph& gsub, Bisection& b,
                             RefineAgent& agent,
                             ChunkedA2C<RefineAgent, RefineCache>& trainer, Rng& rng,
                             double balance_cap = kNoBalanceCap);

// Deterministic coarsest-level partition: BFS-grown half from a
// pseudo-peripheral node, then one boundary-greedy improvement pass.
Bisection greedy_fallback_partition(const Graph& g);

// Coarsest-level RL bisection, evaluation mode: grows A from a minimum-degree
// seed for floor(n/2)-1 steps, then keeps the prefix with the best normalized
// cut within a 1% imbalance allowance.
Bisection coarse_edge_separator_eval(const Graph& g, const CoarseAgent& agent);

struct CoarseEpisodeResult {
  Bisection bisection;
  Episode episode;
};

CoarseEpisodeResult coarse_edge_separator_train(const Graph& g, CoarseAgent& agent,
                                                ChunkedA2C<CoarseAgent, CoarseCache>& trainer,
                                                Rng& rng);

// Full multilevel pipeline (evaluation): coarsen to n_min, solve the coarsest
// graph, then interpolate and refine level by level.
Bisection edge_separator(const Graph& g, const RefineConfig& cfg, const RefineAgent* refine_agent,
                         const CoarseAgent* coarse_agent,
                         std::vector<LevelTrace>* trace = nullptr);

// Solves the coarsest graph with the configured solver.
Bisection coarsest_bisection(const Graph& g, const RefineConfig& cfg,
                             const CoarseAgent* coarse_agent);

void write_partition(const Bisection& b, const std::string& path);
Bisection read_partition(const Graph& g, const std::string& path);

}  // namespace rlpart
