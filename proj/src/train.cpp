#include "rlpart/train.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

namespace rlpart {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EpisodeRecord edge_training_episode(const Graph& g, RefineAgent& local, SharedModel& shared,
                                    const TrainConfig& cfg, Rng& rng, int k_hops) {
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeRecord rec;
  if (g.num_nodes() < 4) {
    rec.skipped = true;
    rec.error = "graph too small";
    return rec;
  }
  // one coarsening level per episode; the dataset already contains the
  // coarser graphs, so every scale gets visited
  CoarseLevel lvl = heavy_edge_matching(g, rng);
  if (lvl.coarse.num_nodes() < 2 || lvl.coarse.num_nodes() == g.num_nodes()) {
    rec.skipped = true;
    rec.error = "coarsening stalled";
    return rec;
  }
  Bisection coarse_b = greedy_fallback_partition(lvl.coarse);
  Bisection b = interpolate_bisection(g, lvl, coarse_b);
  if (b.count(Part::A) == 0 || b.count(Part::B) == 0 || b.cut() == 0) {
    rec.skipped = true;
    rec.error = "degenerate interpolation";
    return rec;
  }
  Subgraph gsub = k_hop_subgraph(g, cut_frontier(g, b), k_hops);
  ChunkedA2C<RefineAgent, RefineCache> trainer(local, gsub.graph, cfg, shared);
  refine_episode_train(g, gsub, b, local, trainer, rng);
  rec.episode_length = trainer.steps();
  rec.cumulative_reward = trainer.cumulative_reward();
  rec.loss = trainer.total_loss();
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

EpisodeRecord vertex_training_episode(const Graph& g, RefineAgent& local, SharedModel& shared,
                                      const TrainConfig& cfg, Rng& rng, int k_hops) {
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeRecord rec;
  if (g.num_nodes() < 4) {
    rec.skipped = true;
    rec.error = "graph too small";
    return rec;
  }
  CoarseLevel lvl = heavy_edge_matching(g, rng);
  if (lvl.coarse.num_nodes() < 2 || lvl.coarse.num_nodes() == g.num_nodes()) {
    rec.skipped = true;
    rec.error = "coarsening stalled";
    return rec;
  }
  Separator3 coarse_s =
      edge_to_vertex_separator(lvl.coarse, greedy_fallback_partition(lvl.coarse));
  Separator3 s = interpolate_separator(g, lvl, coarse_s);
  if (s.count(Part3::S) == 0 || s.count(Part3::A) == 0 || s.count(Part3::B) == 0) {
    rec.skipped = true;
    rec.error = "degenerate interpolation";
    return rec;
  }
  std::vector<int> seeds;
  for (int v = 0; v < g.num_nodes(); ++v)
    if (s.label(v) == Part3::S) seeds.push_back(v);
  Subgraph gsub = k_hop_subgraph(g, seeds, k_hops);
  ChunkedA2C<RefineAgent, RefineCache> trainer(local, gsub.graph, cfg, shared);
  vertex_episode_train(g, gsub, s, local, trainer, rng);
  rec.episode_length = trainer.steps();
  rec.cumulative_reward = trainer.cumulative_reward();
  rec.loss = trainer.total_loss();
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

EpisodeRecord coarse_training_episode(const Graph& g, CoarseAgent& local, SharedModel& shared,
                                      const TrainConfig& cfg, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeRecord rec;
  if (g.num_nodes() < 4) {
    rec.skipped = true;
    rec.error = "graph too small";
    return rec;
  }
  ChunkedA2C<CoarseAgent, CoarseCache> trainer(local, g, cfg, shared);
  coarse_edge_separator_train(g, local, trainer, rng);
  rec.episode_length = trainer.steps();
  rec.cumulative_reward = trainer.cumulative_reward();
  rec.loss = trainer.total_loss();
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

namespace {

// Shared driver skeleton: Agent is copied per worker; RunEpisode executes one
// training episode against the worker-local copy.
template <class Agent, class RunEpisode>
TrainOutcome run_driver(Agent& agent, const std::vector<Graph>& graphs, int epochs,
                        const TrainConfig& cfg, RunEpisode run) {
  if (graphs.empty()) throw InvalidInputError("training dataset is empty");
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0) throw InvalidInputError("gamma outside [0,1]");
  if (cfg.alpha <= 0.0 || cfg.alpha > 1.0) throw InvalidInputError("alpha outside (0,1]");
  if (cfg.lr <= 0.0) throw InvalidInputError("learning rate must be positive");
  if (cfg.update_every < 1) throw InvalidInputError("update_every must be at least 1");
  SharedModel shared(agent.params());
  TrainOutcome outcome;
  outcome.log.resize(static_cast<std::size_t>(epochs) * graphs.size());
  const Rng root(cfg.seed);

  const int workers = std::max(1, cfg.workers);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    auto work = [&](int wid) {
      Agent local = agent;  // values refreshed through SharedModel
      shared.pull(local.params());
      local.params().zero_grads();
      for (std::size_t gi = static_cast<std::size_t>(wid); gi < graphs.size(); gi += workers) {
        Rng rng = root.fork((static_cast<std::uint64_t>(epoch) << 32) ^ gi);
        EpisodeRecord rec;
        try {
          rec = run(graphs[gi], local, shared, rng);
        } catch (const std::exception& err) {
          rec.skipped = true;
          rec.error = err.what();
        }
        rec.epoch = epoch;
        rec.graph_id = static_cast<int>(gi);
        outcome.log[static_cast<std::size_t>(epoch) * graphs.size() + gi] = rec;
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
  }
  return outcome;
}

}  // namespace

TrainOutcome train_edge_agent(RefineAgent& agent, const std::vector<Graph>& graphs, int epochs,
                              const TrainConfig& cfg) {
  return run_driver(agent, graphs, epochs, cfg,
                    [&cfg](const Graph& g, RefineAgent& local, SharedModel& shared, Rng& rng) {
                      return edge_training_episode(g, local, shared, cfg, rng);
                    });
}

TrainOutcome train_vertex_agent(RefineAgent& agent, const std::vector<Graph>& graphs, int epochs,
                                const TrainConfig& cfg) {
  return run_driver(agent, graphs, epochs, cfg,
                    [&cfg](const Graph& g, RefineAgent& local, SharedModel& shared, Rng& rng) {
                      return vertex_training_episode(g, local, shared, cfg, rng);
                    });
}

TrainOutcome train_coarse_agent(CoarseAgent& agent, const std::vector<Graph>& graphs, int epochs,
                                const TrainConfig& cfg) {
  return run_driver(agent, graphs, epochs, cfg,
                    [&cfg](const Graph& g, CoarseAgent& local, SharedModel& shared, Rng& rng) {
                      return coarse_training_episode(g, local, shared, cfg, rng);
                    });
}

void write_training_log(const TrainOutcome& outcome, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open training log for writing: " + path);
  os << "# epoch graph_id episode_length cumulative_reward loss wall_time_s\n";
  for (const auto& r : outcome.log) {
    if (r.skipped) {
      os << r.epoch << ' ' << r.graph_id << " skipped " << r.error << '\n';
      continue;
    }
    os << r.epoch << ' ' << r.graph_id << ' ' << r.episode_length << ' ' << r.cumulative_reward
       << ' ' << r.loss << ' ' << r.wall_time_s << '\n';
  }
  if (!os) throw IoError("short write on training log: " + path);
}

}  // namespace rlpart
