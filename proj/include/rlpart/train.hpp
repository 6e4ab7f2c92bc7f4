#pragma once

#include <string>
#include <vector>

#include "rlpart/a2c.hpp"
#include "rlpart/edge_sep.hpp"
#include "rlpart/vertex_sep.hpp"

namespace rlpart {

enum class Task { Edge, Coarse, Vertex };

struct EpisodeRecord {
  int epoch = 0;
  int graph_id = 0;
  int episode_length = 0;
  double cumulative_reward = 0;
  double loss = 0;
  double wall_time_s = 0;
  bool skipped = false;
  std::string error;
};

struct TrainOutcome {
  std::vector<EpisodeRecord> log;
};

// Multi-worker A2C driver: every epoch sweeps the dataset, workers take
// disjoint graphs, gradient application is serialized through SharedModel.
// One worker runs on the calling thread and is bitwise reproducible.
TrainOutcome train_edge_agent(RefineAgent& agent, const std::vector<Graph>& graphs, int epochs,
                              const TrainConfig& cfg);
TrainOutcome train_vertex_agent(RefineAgent& agent, const std::vector<Graph>& graphs, int epochs,
                                const TrainConfig& cfg);
TrainOutcome train_coarse_agent(CoarseAgent& agent, const std::vector<Graph>& graphs, int epochs,
                                const TrainConfig& cfg);

// One training episode; exposed for tests. During training the coarse level
// is produced by the deterministic fallback partitioner.
EpisodeRecord edge_training_episode(const Graph& g, RefineAgent& local, SharedModel& shared,
                                    const TrainConfig& cfg, Rng& rng, int k_hops = 3);
EpisodeRecord vertex_training_episode(const Graph& g, RefineAgent& local, SharedModel& shared,
                                      const TrainConfig& cfg, Rng& rng, int k_hops = 3);
EpisodeRecord coarse_training_episode(const Graph& g, CoarseAgent& local, SharedModel& shared,
                                      const TrainConfig& cfg, Rng& rng);

// Line-delimited training log: epoch graph-id episode-length
// cumulative-reward loss wall-time
void write_training_log(const TrainOutcome& outcome, const std::string& path);

}  // namespace rlpart
