#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "rlpart/nn.hpp"
#include "rlpart/rng.hpp"

namespace rlpart {

// Per-step log of one refinement run.
struct Episode {
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> log_probs;  // of the chosen action
  std::vector<double> values;     // critic estimates (training mode)

  std::size_t length() const { return actions.size(); }
};

// Return-to-go matches the discounted-return definition; the literal variant
// accumulates past rewards instead and is kept as a compatibility switch.
enum class ReturnOrder { ToGo, PastAccumulated };

struct TrainConfig {
  double gamma = 0.9;
  double alpha = 0.1;    // critic loss weight
  double lr = 1e-3;      // delta
  int workers = 1;
  int update_every = 20;  // steps between parameter updates within an episode
  std::uint64_t seed = 1;
  ReturnOrder return_order = ReturnOrder::ToGo;
};

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma,
                                       ReturnOrder order = ReturnOrder::ToGo);

// (R - mean) / (population std + 1e-8); a length-1 sequence maps to {0}.
std::vector<double> normalize_returns(const std::vector<double>& returns);

// L = -sum log pi(a_t)(R_t - v_t) + alpha sum (R_t - v_t)^2, with the
// advantage treated as a constant in the actor term. Optionally emits the
// loss derivative seeds per step: d_logp_chosen[t] and d_value[t].
double a2c_loss(const Episode& ep, const std::vector<double>& returns, double alpha,
                std::vector<double>* d_logp_chosen = nullptr,
                std::vector<double>* d_value = nullptr);

enum class SampleMode { Sample, Greedy };

// Greedy takes the lowest-id argmax; Sample draws from exp(log_probs).
int sample_action(const std::vector<double>& log_probs, SampleMode mode, Rng& rng);

// Shared parameter values guarded by a mutex. Workers roll out episodes
// against a local copy and apply accumulated gradients serially.
class SharedModel {
 public:
  explicit SharedModel(ParamStore& shared) : shared_(shared) {}

  void pull(ParamStore& local) {
    std::lock_guard<std::mutex> lock(mu_);
    copy_values(shared_, local);
  }

  // shared -= lr * local.grad, then refreshes local values and zeros grads.
  void apply(ParamStore& local, double lr) {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& name : shared_.names()) {
      Mat& v = shared_.value(name);
      const Mat& g = local.grad(name);
      for (std::size_t i = 0; i < v.a.size(); ++i) v.a[i] -= lr * g.a[i];
    }
    copy_values(shared_, local);
    local.zero_grads();
  }

 private:
  static void copy_values(const ParamStore& from, ParamStore& to) {
    for (const auto& name : from.names()) to.value(name).a = from.value(name).a;
  }

  ParamStore& shared_;
  std::mutex mu_;
};

// Buffers rollout steps and applies the A2C update every cfg.update_every
// steps and at episode end. The Cache type is the agent's forward cache; the
// graph must outlive the trainer.
template <class Agent, class Cache>
class ChunkedA2C {
 public:
  ChunkedA2C(Agent& agent, const Graph& g, const TrainConfig& cfg, SharedModel& shared)
      : agent_(agent), graph_(g), cfg_(cfg), shared_(shared) {}

  void record_step(Cache&& cache, int action, double log_prob, double value, double reward) {
    caches_.push_back(std::move(cache));
    chunk_.actions.push_back(action);
    chunk_.log_probs.push_back(log_prob);
    chunk_.values.push_back(value);
    chunk_.rewards.push_back(reward);
    cumulative_reward_ += reward;
    ++steps_;
    if (static_cast<int>(chunk_.length()) >= cfg_.update_every) update_now();
  }

  void end_episode() {
    if (chunk_.length() > 0) update_now();
  }

  double total_loss() const { return total_loss_; }
  double cumulative_reward() const { return cumulative_reward_; }
  int steps() const { return steps_; }

 private:
  void update_now() {
    auto returns = normalize_returns(discounted_returns(chunk_.rewards, cfg_.gamma,
                                                        cfg_.return_order));
    std::vector<double> d_logp, d_value;
    total_loss_ += a2c_loss(chunk_, returns, cfg_.alpha, &d_logp, &d_value);
    const int n_nodes = static_cast<int>(caches_.front().log_probs.size());
    std::vector<double> dlp(n_nodes, 0.0);
    for (std::size_t t = 0; t < chunk_.length(); ++t) {
      std::fill(dlp.begin(), dlp.end(), 0.0);
      dlp[chunk_.actions[t]] = d_logp[t];
      agent_.backward(graph_, caches_[t], dlp, d_value[t]);
    }
    shared_.apply(agent_.params(), cfg_.lr);
    caches_.clear();
    chunk_ = Episode{};
  }

  Agent& agent_;
  const Graph& graph_;
  TrainConfig cfg_;
  SharedModel& shared_;
  std::vector<Cache> caches_;
  Episode chunk_;
  double total_loss_ = 0.0;
  double cumulative_reward_ = 0.0;
  int steps_ = 0;
};

}  // namespace rlpart
