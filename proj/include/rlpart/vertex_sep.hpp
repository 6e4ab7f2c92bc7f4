#pragma once

#include <string>
#include <vector>

#include "rlpart/a2c.hpp"
#include "rlpart/edge_sep.hpp"
#include "rlpart/graph.hpp"

namespace rlpart {

// Vertex-task features, one row per subgraph node:
// [in A, in B, in S, on subgraph boundary, essential, |A|/|V|, |B|/|V|]
Mat build_vertex_features(const Graph& g, const Subgraph& gsub, const Separator3& s);

// Alg-style three-way action: A or B nodes move into S; an S node leaves
// toward a side it already touches, or the smaller side when isolated.
// Returns NS_before - NS_after. Throws EssentialNodeError when asked to
// remove an essential separator node.
double apply_action_vertex(int a, const Graph& g, Separator3& s);

// Minimum vertex cover of the cut edges (maximum bipartite matching plus the
// Koenig construction); covered nodes become S.
Separator3 edge_to_vertex_separator(const Graph& g, const Bisection& b);

// Moves every non-essential separator node to a side, repeating until only
// essential nodes remain. Each move is a strictly NS-improving three-way
// action, so validity is preserved. Returns the number of nodes moved.
int make_separator_minimal(const Graph& g, Separator3& s);

// One evaluation episode of length 2|S0| with greedy actions, replayed to the
// peak cumulative reward prefix.
Episode vertex_episode_eval(const Graph& g, const Subgraph& gsub, Separator3& s,
                            const RefineAgent& agent, bool audit = false,
                            double balance_cap = kNoBalanceCap);

Episode vertex_episode_train(const Graph& g, const Subgraph& gsub, Separator3& s,
                             RefineAgent& agent,
                             ChunkedA2C<RefineAgent, RefineCache>& trainer, Rng& rng,
                             double balance_cap = kNoBalanceCap);

// Full multilevel vertex-separator pipeline (evaluation).
Separator3 vertex_separator(const Graph& g, const RefineConfig& cfg,
                            const RefineAgent* refine_agent, const CoarseAgent* coarse_agent,
                            std::vector<LevelTrace>* trace = nullptr);

void write_separator(const Separator3& s, const std::string& path);
Separator3 read_separator(const Graph& g, const std::string& path);

}  // namespace rlpart
