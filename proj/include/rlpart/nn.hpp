#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlpart/dense.hpp"
#include "rlpart/graph.hpp"
#include "rlpart/rng.hpp"

namespace rlpart {

enum class TaskKind : std::uint32_t { EdgeRefine = 0, CoarsePartition = 1, VertexRefine = 2 };

// Flat collection of named parameter matrices with matching gradient buffers.
// Declaration order is the checkpoint layout order.
class ParamStore {
 public:
  Mat& add(const std::string& name, int rows, int cols, int fan_in);

  Mat& value(const std::string& name);
  const Mat& value(const std::string& name) const;
  Mat& grad(const std::string& name);
  const Mat& grad(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t parameter_count() const;

  void zero_grads();
  void sgd_step(double lr);                    // theta -= lr * grad
  void init_uniform(Rng& rng);                 // uniform in +-1/sqrt(fan_in)
  void accumulate_grads_from(const ParamStore& other);
  bool all_finite() const;

 private:
  struct Entry {
    Mat value, grad;
    int fan_in = 1;
  };
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::vector<std::string> names_;
  std::unordered_map<std::string, Entry> params_;
};

struct AgentOutput {
  std::vector<double> log_probs;  // -inf on masked nodes
  double critic = 0.0;            // valid only when has_critic
  bool has_critic = false;
};

// Masked entries get log-probability -inf; the rest follow a numerically
// stabilized softmax. Throws AllMaskedError when nothing is selectable.
std::vector<double> masked_log_softmax(const std::vector<double>& scores,
                                       const std::vector<std::uint8_t>& masked);

// mask[i] = 1 iff any F(i, j) != 0 for j in feature_indices
std::vector<std::uint8_t> feature_mask(const Mat& F, const std::vector<int>& feature_indices);

// ---- layers -----------------------------------------------------------

struct SageCache {
  Mat X, MX;  // input and its neighborhood mean
};

// F' = F W1 + mean_{j in N(i)} F_j W2 + bias; empty neighborhoods aggregate
// to the zero vector.
Mat sage_forward(const Mat& F, const Graph& g, const Mat& W1, const Mat& W2, const Mat& bias,
                 SageCache* cache = nullptr);

// Accumulates parameter grads, returns dF.
Mat sage_backward(const Graph& g, const SageCache& cache, const Mat& W1, const Mat& W2,
                  const Mat& dY, Mat& dW1, Mat& dW2, Mat& dbias);

struct GatParams {
  const Mat& W;      // in x out
  const Mat& a_dst;  // 1 x out, attention on the aggregating node
  const Mat& a_src;  // 1 x out, attention on the neighbor
  const Mat& bias;   // 1 x out
};

struct GatMutParams {
  Mat& W;
  Mat& a_dst;
  Mat& a_src;
  Mat& bias;
};

struct GatCache {
  Mat X, H;                      // input and X W
  std::vector<double> s_dst, s_src;  // per-node attention scores
  std::vector<double> z, alpha;  // per candidate pair (self first, then neighbors)
};

// Single-head graph attention with self-loops and LeakyReLU(0.2) logits.
Mat gat_forward(const Mat& F, const Graph& g, const GatParams& p, GatCache* cache = nullptr);

Mat gat_backward(const Graph& g, const GatCache& cache, const GatParams& p, const Mat& dY,
                 GatMutParams grads);

// ---- agent networks ---------------------------------------------------

struct RefineCache {
  Mat F0;
  SageCache sage1_c, sage2_c, actor_c;
  Mat t1, t2;                       // tanh outputs of the shared layers
  std::vector<double> scores;       // actor SAGE output, one per node
  std::vector<std::uint8_t> mask;
  std::vector<double> log_probs;
  // critic side (training only)
  bool has_critic = false;
  SageCache critic_sage_c;
  Mat tc;                           // tanh output of the critic SAGE
  Mat zlin;                         // per-node linear outputs
  double pooled = 0.0, critic = 0.0;
};

// The refinement agent: two shared channel-preserving SAGE layers with Tanh,
// an actor SAGE head to one channel followed by masked log-softmax, and a
// critic head (SAGE, Linear to 1, mean pool, Tanh) fed by the detached shared
// output. 182 parameters at 5 input channels, 338 at 7.
class RefineAgent {
 public:
  explicit RefineAgent(int channels);

  int channels() const { return channels_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  void init_params(std::uint64_t seed);

  AgentOutput forward(const Graph& g, const Mat& F, const std::vector<std::uint8_t>& mask,
                      bool training, RefineCache* cache = nullptr) const;
  AgentOutput forward(const Graph& g, const Mat& F, const std::vector<int>& mask_features,
                      bool training, RefineCache* cache = nullptr) const;

  // Seeds reverse mode with d(loss)/d(log_probs) and d(loss)/d(critic);
  // gradients accumulate into params().grad. The critic head input is
  // detached: no critic gradient reaches the shared layers.
  void backward(const Graph& g, const RefineCache& cache, const std::vector<double>& dlog_probs,
                double dcritic);

 private:
  int channels_;
  ParamStore params_;
};

struct CoarseCache {
  Mat F0;
  std::vector<GatCache> gat_c;  // 4 layers
  std::vector<Mat> gat_t;       // tanh outputs
  Mat l1, l2;                   // tanh outputs of the shared linear layers
  Mat a1, a2;                   // actor tanh outputs (a2 is n x 1)
  std::vector<std::uint8_t> mask;
  std::vector<double> log_probs;
  bool has_critic = false;
  Mat g1, g2;                   // gate network: tanh output, raw logits
  std::vector<double> gamma;    // attention weights over nodes
  Mat pooled, c1;               // pooled feature row, critic tanh output
  double critic = 0.0;
};

// Coarsest-level agent: four GAT(10) layers and two Linear(5) layers shared,
// a two-layer actor head, and a critic head with gated global-attention
// pooling. Unlike the refinement agent there is no detach: the critic loss
// also trains the shared layers.
class CoarseAgent {
 public:
  static constexpr int kInChannels = 2;
  static constexpr int kConvUnits = 10;
  static constexpr int kLinUnits = 5;

  CoarseAgent();

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  void init_params(std::uint64_t seed);

  AgentOutput forward(const Graph& g, const Mat& F, const std::vector<std::uint8_t>& mask,
                      bool training, CoarseCache* cache = nullptr) const;
  AgentOutput forward(const Graph& g, const Mat& F, const std::vector<int>& mask_features,
                      bool training, CoarseCache* cache = nullptr) const;

  void backward(const Graph& g, const CoarseCache& cache, const std::vector<double>& dlog_probs,
                double dcritic);

 private:
  int num_gat_layers_ = 4;
  ParamStore params_;
};

// ---- checkpoints ------------------------------------------------------
// Little-endian file: magic, version, task kind, channel count, layer table
// (name, rows, cols), then raw f64 parameter blocks in declaration order.

void save_checkpoint(const ParamStore& params, TaskKind task, int channels,
                     const std::string& path);

// Loads into an existing store; the layer table must match its declaration.
void load_checkpoint(ParamStore& params, TaskKind expected_task, int expected_channels,
                     const std::string& path);

}  // namespace rlpart
