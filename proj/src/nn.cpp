#include "rlpart/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace rlpart {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr char kMagic[8] = {'R', 'L', 'P', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr double kLeakySlope = 0.2;
}  // namespace

// ---- ParamStore --------------------------------------------------------

Mat& ParamStore::add(const std::string& name, int rows, int cols, int fan_in) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw InvalidInputError("duplicate parameter name: " + name);
  names_.push_back(name);
  it->second.value = Mat(rows, cols);
  it->second.grad = Mat(rows, cols);
  it->second.fan_in = fan_in;
  return it->second.value;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvalidInputError("unknown parameter: " + name);
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvalidInputError("unknown parameter: " + name);
  return it->second;
}

Mat& ParamStore::value(const std::string& name) { return entry(name).value; }
const Mat& ParamStore::value(const std::string& name) const { return entry(name).value; }
Mat& ParamStore::grad(const std::string& name) { return entry(name).grad; }
const Mat& ParamStore::grad(const std::string& name) const { return entry(name).grad; }

std::size_t ParamStore::parameter_count() const {
  std::size_t count = 0;
  for (const auto& name : names_) count += entry(name).value.size();
  return count;
}

void ParamStore::zero_grads() {
  for (auto& name : names_) {
    auto& g = entry(name).grad;
    std::fill(g.a.begin(), g.a.end(), 0.0);
  }
}

void ParamStore::sgd_step(double lr) {
  for (auto& name : names_) {
    auto& e = entry(name);
    for (std::size_t i = 0; i < e.value.a.size(); ++i) e.value.a[i] -= lr * e.grad.a[i];
  }
}

void ParamStore::init_uniform(Rng& rng) {
  for (auto& name : names_) {
    auto& e = entry(name);
    const double bound = 1.0 / std::sqrt(static_cast<double>(e.fan_in));
    for (double& x : e.value.a) x = rng.uniform(-bound, bound);
  }
}

void ParamStore::accumulate_grads_from(const ParamStore& other) {
  for (auto& name : names_) add_inplace(entry(name).grad, other.entry(name).grad);
}

bool ParamStore::all_finite() const {
  for (auto& name : names_)
    if (!entry(name).value.finite()) return false;
  return true;
}

// ---- masked log softmax -------------------------------------------------

std::vector<double> masked_log_softmax(const std::vector<double>& scores,
                                       const std::vector<std::uint8_t>& masked) {
  const int n = static_cast<int>(scores.size());
  double mx = kNegInf;
  for (int i = 0; i < n; ++i)
    if (!masked[i]) mx = std::max(mx, scores[i]);
  if (mx == kNegInf) throw AllMaskedError("log softmax with every node masked");
  double sum = 0;
  for (int i = 0; i < n; ++i)
    if (!masked[i]) sum += std::exp(scores[i] - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(n, kNegInf);
  for (int i = 0; i < n; ++i)
    if (!masked[i]) out[i] = scores[i] - lse;
  return out;
}

std::vector<std::uint8_t> feature_mask(const Mat& F, const std::vector<int>& feature_indices) {
  std::vector<std::uint8_t> mask(F.rows, 0);
  for (int i = 0; i < F.rows; ++i)
    for (int j : feature_indices)
      if (F(i, j) != 0.0) {
        mask[i] = 1;
        break;
      }
  return mask;
}

namespace {

// dScores for y = masked_log_softmax(scores); dy must be zero on masked nodes.
std::vector<double> log_softmax_backward(const std::vector<double>& log_probs,
                                         const std::vector<std::uint8_t>& masked,
                                         const std::vector<double>& dy) {
  const int n = static_cast<int>(log_probs.size());
  double total = 0;
  for (int i = 0; i < n; ++i)
    if (!masked[i]) total += dy[i];
  std::vector<double> dx(n, 0.0);
  for (int i = 0; i < n; ++i)
    if (!masked[i]) dx[i] = dy[i] - std::exp(log_probs[i]) * total;
  return dx;
}

Mat neighbor_mean(const Mat& F, const Graph& g) {
  Mat M(F.rows, F.cols);
  for (int i = 0; i < g.num_nodes(); ++i) {
    auto nb = g.neighbors(i);
    if (nb.empty()) continue;
    for (int j : nb)
      for (int c = 0; c < F.cols; ++c) M(i, c) += F(j, c);
    const double inv = 1.0 / static_cast<double>(nb.size());
    for (int c = 0; c < F.cols; ++c) M(i, c) *= inv;
  }
  return M;
}

// adjoint of neighbor_mean: dF_j += sum_{i : j in N(i)} dM_i / deg(i)
Mat neighbor_mean_backward(const Mat& dM, const Graph& g) {
  Mat dF(dM.rows, dM.cols);
  for (int i = 0; i < g.num_nodes(); ++i) {
    auto nb = g.neighbors(i);
    if (nb.empty()) continue;
    const double inv = 1.0 / static_cast<double>(nb.size());
    for (int j : nb)
      for (int c = 0; c < dM.cols; ++c) dF(j, c) += inv * dM(i, c);
  }
  return dF;
}

}  // namespace

// ---- SAGE ---------------------------------------------------------------

Mat sage_forward(const Mat& F, const Graph& g, const Mat& W1, const Mat& W2, const Mat& bias,
                 SageCache* cache) {
  check_dims(F.rows == g.num_nodes(), "sage rows != node count");
  check_dims(F.cols == W1.rows && F.cols == W2.rows, "sage weight input dimension");
  check_dims(W1.cols == W2.cols, "sage weight output dimension");
  Mat MX = neighbor_mean(F, g);
  Mat Y = matmul(F, W1);
  add_inplace(Y, matmul(MX, W2));
  add_row_bias(Y, bias);
  if (cache) {
    cache->X = F;
    cache->MX = std::move(MX);
  }
  return Y;
}

Mat sage_backward(const Graph& g, const SageCache& cache, const Mat& W1, const Mat& W2,
                  const Mat& dY, Mat& dW1, Mat& dW2, Mat& dbias) {
  add_inplace(dW1, matmul_tn(cache.X, dY));
  add_inplace(dW2, matmul_tn(cache.MX, dY));
  add_inplace(dbias, col_sums(dY));
  Mat dX = matmul_nt(dY, W1);
  Mat dMX = matmul_nt(dY, W2);
  add_inplace(dX, neighbor_mean_backward(dMX, g));
  return dX;
}

// ---- GAT ----------------------------------------------------------------
// Candidate layout per node i: the self pair first, then neighbors ascending.

Mat gat_forward(const Mat& F, const Graph& g, const GatParams& p, GatCache* cache) {
  check_dims(F.rows == g.num_nodes(), "gat rows != node count");
  check_dims(F.cols == p.W.rows, "gat weight input dimension");
  const int n = F.rows, d = p.W.cols;

  Mat H = matmul(F, p.W);
  std::vector<double> s_dst(n), s_src(n);
  for (int i = 0; i < n; ++i) {
    double sd = 0, ss = 0;
    for (int c = 0; c < d; ++c) {
      sd += H(i, c) * p.a_dst(0, c);
      ss += H(i, c) * p.a_src(0, c);
    }
    s_dst[i] = sd;
    s_src[i] = ss;
  }

  std::vector<double> z, alpha;
  z.reserve(n + g.total_volume());
  Mat Y(n, d);
  for (int i = 0; i < n; ++i) {
    const std::size_t base = z.size();
    z.push_back(s_dst[i] + s_src[i]);  // self
    for (int j : g.neighbors(i)) z.push_back(s_dst[i] + s_src[j]);
    const std::size_t cnt = z.size() - base;

    double mx = kNegInf;
    for (std::size_t k = 0; k < cnt; ++k) {
      double& e = z[base + k];
      const double activated = e > 0 ? e : kLeakySlope * e;
      mx = std::max(mx, activated);
    }
    double sum = 0;
    alpha.resize(base + cnt);
    for (std::size_t k = 0; k < cnt; ++k) {
      const double e = z[base + k];
      const double activated = e > 0 ? e : kLeakySlope * e;
      alpha[base + k] = std::exp(activated - mx);
      sum += alpha[base + k];
    }
    for (std::size_t k = 0; k < cnt; ++k) alpha[base + k] /= sum;

    for (int c = 0; c < d; ++c) Y(i, c) = alpha[base] * H(i, c);
    std::size_t k = 1;
    for (int j : g.neighbors(i)) {
      const double w = alpha[base + k++];
      for (int c = 0; c < d; ++c) Y(i, c) += w * H(j, c);
    }
  }
  add_row_bias(Y, p.bias);

  if (cache) {
    cache->X = F;
    cache->H = std::move(H);
    cache->s_dst = std::move(s_dst);
    cache->s_src = std::move(s_src);
    cache->z = std::move(z);
    cache->alpha = std::move(alpha);
  }
  return Y;
}

Mat gat_backward(const Graph& g, const GatCache& cache, const GatParams& p, const Mat& dY,
                 GatMutParams grads) {
  const int n = dY.rows, d = dY.cols;
  add_inplace(grads.bias, col_sums(dY));

  Mat dH(n, d);
  std::vector<double> ds_dst(n, 0.0), ds_src(n, 0.0);

  std::size_t base = 0;
  for (int i = 0; i < n; ++i) {
    auto nb = g.neighbors(i);
    const std::size_t cnt = 1 + nb.size();

    // d alpha and the softmax Jacobian over this neighborhood
    double dot = 0;  // sum_k alpha_k * dalpha_k
    std::vector<double> dalpha(cnt);
    for (std::size_t k = 0; k < cnt; ++k) {
      const int j = k == 0 ? i : nb[k - 1];
      double s = 0;
      for (int c = 0; c < d; ++c) s += dY(i, c) * cache.H(j, c);
      dalpha[k] = s;
      dot += cache.alpha[base + k] * s;
      const double w = cache.alpha[base + k];
      for (int c = 0; c < d; ++c) dH(j, c) += w * dY(i, c);
    }
    for (std::size_t k = 0; k < cnt; ++k) {
      const int j = k == 0 ? i : nb[k - 1];
      const double de = cache.alpha[base + k] * (dalpha[k] - dot);
      const double dz = de * (cache.z[base + k] > 0 ? 1.0 : kLeakySlope);
      ds_dst[i] += dz;
      ds_src[j] += dz;
    }
    base += cnt;
  }

  // s_dst[i] = H_i . a_dst, s_src[i] = H_i . a_src
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) {
      dH(i, c) += ds_dst[i] * p.a_dst(0, c) + ds_src[i] * p.a_src(0, c);
      grads.a_dst(0, c) += ds_dst[i] * cache.H(i, c);
      grads.a_src(0, c) += ds_src[i] * cache.H(i, c);
    }

  add_inplace(grads.W, matmul_tn(cache.X, dH));
  return matmul_nt(dH, p.W);
}

// ---- RefineAgent ---------------------------------------------------------

RefineAgent::RefineAgent(int channels) : channels_(channels) {
  const int c = channels;
  params_.add("shared.sage1.W1", c, c, c);
  params_.add("shared.sage1.W2", c, c, c);
  params_.add("shared.sage1.b", 1, c, c);
  params_.add("shared.sage2.W1", c, c, c);
  params_.add("shared.sage2.W2", c, c, c);
  params_.add("shared.sage2.b", 1, c, c);
  params_.add("actor.sage.W1", c, 1, c);
  params_.add("actor.sage.W2", c, 1, c);
  params_.add("actor.sage.b", 1, 1, c);
  params_.add("critic.sage.W1", c, c, c);
  params_.add("critic.sage.W2", c, c, c);
  params_.add("critic.sage.b", 1, c, c);
  params_.add("critic.lin.W", c, 1, c);
  params_.add("critic.lin.b", 1, 1, c);
}

void RefineAgent::init_params(std::uint64_t seed) {
  Rng rng(seed);
  params_.init_uniform(rng);
}

AgentOutput RefineAgent::forward(const Graph& g, const Mat& F,
                                 const std::vector<int>& mask_features, bool training,
                                 RefineCache* cache) const {
  return forward(g, F, feature_mask(F, mask_features), training, cache);
}

AgentOutput RefineAgent::forward(const Graph& g, const Mat& F,
                                 const std::vector<std::uint8_t>& mask, bool training,
                                 RefineCache* cache) const {
  check_dims(F.cols == channels_, "refine agent channel count");
  RefineCache local;
  RefineCache& c = cache ? *cache : local;
  c.F0 = F;
  c.mask = mask;

  Mat h1 = sage_forward(F, g, params_.value("shared.sage1.W1"), params_.value("shared.sage1.W2"),
                        params_.value("shared.sage1.b"), &c.sage1_c);
  c.t1 = tanh_of(h1);
  Mat h2 = sage_forward(c.t1, g, params_.value("shared.sage2.W1"),
                        params_.value("shared.sage2.W2"), params_.value("shared.sage2.b"),
                        &c.sage2_c);
  c.t2 = tanh_of(h2);

  Mat actor = sage_forward(c.t2, g, params_.value("actor.sage.W1"),
                           params_.value("actor.sage.W2"), params_.value("actor.sage.b"),
                           &c.actor_c);
  c.scores.resize(actor.rows);
  for (int i = 0; i < actor.rows; ++i) c.scores[i] = actor(i, 0);
  c.log_probs = masked_log_softmax(c.scores, mask);

  AgentOutput out;
  out.log_probs = c.log_probs;
  if (training) {
    // critic sees the shared output but is detached from it in backward
    Mat hc = sage_forward(c.t2, g, params_.value("critic.sage.W1"),
                          params_.value("critic.sage.W2"), params_.value("critic.sage.b"),
                          &c.critic_sage_c);
    c.tc = tanh_of(hc);
    c.zlin = matmul(c.tc, params_.value("critic.lin.W"));
    add_row_bias(c.zlin, params_.value("critic.lin.b"));
    double mean = 0;
    for (int i = 0; i < c.zlin.rows; ++i) mean += c.zlin(i, 0);
    mean /= std::max(1, c.zlin.rows);
    c.pooled = mean;
    c.critic = std::tanh(mean);
    c.has_critic = true;
    out.critic = c.critic;
    out.has_critic = true;
  }
  return out;
}

void RefineAgent::backward(const Graph& g, const RefineCache& c,
                           const std::vector<double>& dlog_probs, double dcritic) {
  // actor head
  std::vector<double> dscores = log_softmax_backward(c.log_probs, c.mask, dlog_probs);
  Mat dActor(static_cast<int>(dscores.size()), 1);
  for (int i = 0; i < dActor.rows; ++i) dActor(i, 0) = dscores[i];
  Mat dt2 = sage_backward(g, c.actor_c, params_.value("actor.sage.W1"),
                          params_.value("actor.sage.W2"), dActor, params_.grad("actor.sage.W1"),
                          params_.grad("actor.sage.W2"), params_.grad("actor.sage.b"));

  // critic head; its dX is dropped at the detach point
  if (c.has_critic && dcritic != 0.0) {
    const double dpooled = dcritic * (1.0 - c.critic * c.critic);
    Mat dzlin(c.zlin.rows, 1);
    const double inv = 1.0 / std::max(1, c.zlin.rows);
    for (int i = 0; i < dzlin.rows; ++i) dzlin(i, 0) = dpooled * inv;
    add_inplace(params_.grad("critic.lin.W"), matmul_tn(c.tc, dzlin));
    add_inplace(params_.grad("critic.lin.b"), col_sums(dzlin));
    Mat dtc = matmul_nt(dzlin, params_.value("critic.lin.W"));
    Mat dhc = tanh_backward(dtc, c.tc);
    sage_backward(g, c.critic_sage_c, params_.value("critic.sage.W1"),
                  params_.value("critic.sage.W2"), dhc, params_.grad("critic.sage.W1"),
                  params_.grad("critic.sage.W2"), params_.grad("critic.sage.b"));
  }

  Mat dh2 = tanh_backward(dt2, c.t2);
  Mat dt1 = sage_backward(g, c.sage2_c, params_.value("shared.sage2.W1"),
                          params_.value("shared.sage2.W2"), dh2, params_.grad("shared.sage2.W1"),
                          params_.grad("shared.sage2.W2"), params_.grad("shared.sage2.b"));
  Mat dh1 = tanh_backward(dt1, c.t1);
  sage_backward(g, c.sage1_c, params_.value("shared.sage1.W1"), params_.value("shared.sage1.W2"),
                dh1, params_.grad("shared.sage1.W1"), params_.grad("shared.sage1.W2"),
                params_.grad("shared.sage1.b"));
}

// ---- CoarseAgent ----------------------------------------------------------

CoarseAgent::CoarseAgent() {
  int in = kInChannels;
  for (int l = 1; l <= num_gat_layers_; ++l) {
    const std::string prefix = "gat" + std::to_string(l) + ".";
    params_.add(prefix + "W", in, kConvUnits, in);
    params_.add(prefix + "a_dst", 1, kConvUnits, kConvUnits);
    params_.add(prefix + "a_src", 1, kConvUnits, kConvUnits);
    params_.add(prefix + "b", 1, kConvUnits, in);
    in = kConvUnits;
  }
  params_.add("shared.lin1.W", kConvUnits, kLinUnits, kConvUnits);
  params_.add("shared.lin1.b", 1, kLinUnits, kConvUnits);
  params_.add("shared.lin2.W", kLinUnits, kLinUnits, kLinUnits);
  params_.add("shared.lin2.b", 1, kLinUnits, kLinUnits);
  params_.add("actor.lin1.W", kLinUnits, kLinUnits, kLinUnits);
  params_.add("actor.lin1.b", 1, kLinUnits, kLinUnits);
  params_.add("actor.lin2.W", kLinUnits, 1, kLinUnits);
  params_.add("actor.lin2.b", 1, 1, kLinUnits);
  params_.add("gate.lin1.W", kLinUnits, kLinUnits, kLinUnits);
  params_.add("gate.lin1.b", 1, kLinUnits, kLinUnits);
  params_.add("gate.lin2.W", kLinUnits, 1, kLinUnits);
  params_.add("gate.lin2.b", 1, 1, kLinUnits);
  params_.add("critic.lin1.W", kLinUnits, kLinUnits, kLinUnits);
  params_.add("critic.lin1.b", 1, kLinUnits, kLinUnits);
  params_.add("critic.lin2.W", kLinUnits, 1, kLinUnits);
  params_.add("critic.lin2.b", 1, 1, kLinUnits);
}

void CoarseAgent::init_params(std::uint64_t seed) {
  Rng rng(seed);
  params_.init_uniform(rng);
}

AgentOutput CoarseAgent::forward(const Graph& g, const Mat& F,
                                 const std::vector<int>& mask_features, bool training,
                                 CoarseCache* cache) const {
  return forward(g, F, feature_mask(F, mask_features), training, cache);
}

AgentOutput CoarseAgent::forward(const Graph& g, const Mat& F,
                                 const std::vector<std::uint8_t>& mask, bool training,
                                 CoarseCache* cache) const {
  check_dims(F.cols == kInChannels, "coarse agent channel count");
  CoarseCache local;
  CoarseCache& c = cache ? *cache : local;
  c.F0 = F;
  c.mask = mask;
  c.gat_c.assign(num_gat_layers_, GatCache{});
  c.gat_t.assign(num_gat_layers_, Mat{});

  const Mat* cur = &F;
  for (int l = 0; l < num_gat_layers_; ++l) {
    const std::string prefix = "gat" + std::to_string(l + 1) + ".";
    GatParams p{params_.value(prefix + "W"), params_.value(prefix + "a_dst"),
                params_.value(prefix + "a_src"), params_.value(prefix + "b")};
    Mat z = gat_forward(*cur, g, p, &c.gat_c[l]);
    c.gat_t[l] = tanh_of(z);
    cur = &c.gat_t[l];
  }

  Mat z1 = matmul(*cur, params_.value("shared.lin1.W"));
  add_row_bias(z1, params_.value("shared.lin1.b"));
  c.l1 = tanh_of(z1);
  Mat z2 = matmul(c.l1, params_.value("shared.lin2.W"));
  add_row_bias(z2, params_.value("shared.lin2.b"));
  c.l2 = tanh_of(z2);

  Mat za1 = matmul(c.l2, params_.value("actor.lin1.W"));
  add_row_bias(za1, params_.value("actor.lin1.b"));
  c.a1 = tanh_of(za1);
  Mat za2 = matmul(c.a1, params_.value("actor.lin2.W"));
  add_row_bias(za2, params_.value("actor.lin2.b"));
  c.a2 = tanh_of(za2);

  std::vector<double> scores(c.a2.rows);
  for (int i = 0; i < c.a2.rows; ++i) scores[i] = c.a2(i, 0);
  c.log_probs = masked_log_softmax(scores, mask);

  AgentOutput out;
  out.log_probs = c.log_probs;
  if (training) {
    Mat zg1 = matmul(c.l2, params_.value("gate.lin1.W"));
    add_row_bias(zg1, params_.value("gate.lin1.b"));
    c.g1 = tanh_of(zg1);
    c.g2 = matmul(c.g1, params_.value("gate.lin2.W"));
    add_row_bias(c.g2, params_.value("gate.lin2.b"));

    const int n = c.g2.rows;
    c.gamma.resize(n);
    double mx = kNegInf;
    for (int i = 0; i < n; ++i) mx = std::max(mx, c.g2(i, 0));
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      c.gamma[i] = std::exp(c.g2(i, 0) - mx);
      sum += c.gamma[i];
    }
    for (int i = 0; i < n; ++i) c.gamma[i] /= sum;

    c.pooled = Mat(1, kLinUnits);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < kLinUnits; ++j) c.pooled(0, j) += c.gamma[i] * c.l2(i, j);

    Mat zc1 = matmul(c.pooled, params_.value("critic.lin1.W"));
    add_row_bias(zc1, params_.value("critic.lin1.b"));
    c.c1 = tanh_of(zc1);
    Mat v = matmul(c.c1, params_.value("critic.lin2.W"));
    add_row_bias(v, params_.value("critic.lin2.b"));
    c.critic = v(0, 0);
    c.has_critic = true;
    out.critic = c.critic;
    out.has_critic = true;
  }
  return out;
}

void CoarseAgent::backward(const Graph& g, const CoarseCache& c,
                           const std::vector<double>& dlog_probs, double dcritic) {
  const int n = static_cast<int>(c.log_probs.size());

  // actor head
  std::vector<double> dscores = log_softmax_backward(c.log_probs, c.mask, dlog_probs);
  Mat da2(n, 1);
  for (int i = 0; i < n; ++i) da2(i, 0) = dscores[i];
  Mat dza2 = tanh_backward(da2, c.a2);
  add_inplace(params_.grad("actor.lin2.W"), matmul_tn(c.a1, dza2));
  add_inplace(params_.grad("actor.lin2.b"), col_sums(dza2));
  Mat da1 = matmul_nt(dza2, params_.value("actor.lin2.W"));
  Mat dza1 = tanh_backward(da1, c.a1);
  add_inplace(params_.grad("actor.lin1.W"), matmul_tn(c.l2, dza1));
  add_inplace(params_.grad("actor.lin1.b"), col_sums(dza1));
  Mat dl2 = matmul_nt(dza1, params_.value("actor.lin1.W"));

  // critic head: no detach, gradients flow into the shared stack
  if (c.has_critic && dcritic != 0.0) {
    Mat dv(1, 1);
    dv(0, 0) = dcritic;
    add_inplace(params_.grad("critic.lin2.W"), matmul_tn(c.c1, dv));
    add_inplace(params_.grad("critic.lin2.b"), col_sums(dv));
    Mat dc1 = matmul_nt(dv, params_.value("critic.lin2.W"));
    Mat dzc1 = tanh_backward(dc1, c.c1);
    add_inplace(params_.grad("critic.lin1.W"), matmul_tn(c.pooled, dzc1));
    add_inplace(params_.grad("critic.lin1.b"), col_sums(dzc1));
    Mat dpooled = matmul_nt(dzc1, params_.value("critic.lin1.W"));  // 1 x 5

    // pooled = sum_i gamma_i l2_i
    std::vector<double> dgamma(n, 0.0);
    double dot = 0;
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < CoarseAgent::kLinUnits; ++j) s += dpooled(0, j) * c.l2(i, j);
      dgamma[i] = s;
      dot += c.gamma[i] * s;
      for (int j = 0; j < CoarseAgent::kLinUnits; ++j) dl2(i, j) += c.gamma[i] * dpooled(0, j);
    }
    Mat dg2(n, 1);
    for (int i = 0; i < n; ++i) dg2(i, 0) = c.gamma[i] * (dgamma[i] - dot);

    add_inplace(params_.grad("gate.lin2.W"), matmul_tn(c.g1, dg2));
    add_inplace(params_.grad("gate.lin2.b"), col_sums(dg2));
    Mat dg1 = matmul_nt(dg2, params_.value("gate.lin2.W"));
    Mat dzg1 = tanh_backward(dg1, c.g1);
    add_inplace(params_.grad("gate.lin1.W"), matmul_tn(c.l2, dzg1));
    add_inplace(params_.grad("gate.lin1.b"), col_sums(dzg1));
    add_inplace(dl2, matmul_nt(dzg1, params_.value("gate.lin1.W")));
  }

  // shared dense layers
  Mat dz2 = tanh_backward(dl2, c.l2);
  add_inplace(params_.grad("shared.lin2.W"), matmul_tn(c.l1, dz2));
  add_inplace(params_.grad("shared.lin2.b"), col_sums(dz2));
  Mat dl1 = matmul_nt(dz2, params_.value("shared.lin2.W"));
  Mat dz1 = tanh_backward(dl1, c.l1);
  add_inplace(params_.grad("shared.lin1.W"), matmul_tn(c.gat_t.back(), dz1));
  add_inplace(params_.grad("shared.lin1.b"), col_sums(dz1));
  Mat dcur = matmul_nt(dz1, params_.value("shared.lin1.W"));

  // GAT stack
  for (int l = num_gat_layers_ - 1; l >= 0; --l) {
    const std::string prefix = "gat" + std::to_string(l + 1) + ".";
    Mat dz = tanh_backward(dcur, c.gat_t[l]);
    GatParams p{params_.value(prefix + "W"), params_.value(prefix + "a_dst"),
                params_.value(prefix + "a_src"), params_.value(prefix + "b")};
    GatMutParams gr{params_.grad(prefix + "W"), params_.grad(prefix + "a_dst"),
                    params_.grad(prefix + "a_src"), params_.grad(prefix + "b")};
    dcur = gat_backward(g, c.gat_c[l], p, dz, gr);
  }
}

// ---- checkpoints ----------------------------------------------------------

namespace {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return is.good();
}

}  // namespace

void save_checkpoint(const ParamStore& params, TaskKind task, int channels,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(task));
  write_pod(os, static_cast<std::uint32_t>(channels));
  write_pod(os, static_cast<std::uint32_t>(params.names().size()));
  for (const auto& name : params.names()) {
    const Mat& m = params.value(name);
    write_pod(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(os, static_cast<std::uint32_t>(m.rows));
    write_pod(os, static_cast<std::uint32_t>(m.cols));
  }
  for (const auto& name : params.names()) {
    const Mat& m = params.value(name);
    os.write(reinterpret_cast<const char*>(m.a.data()),
             static_cast<std::streamsize>(m.a.size() * sizeof(double)));
  }
  if (!os) throw IoError("short write on checkpoint: " + path);
}

void load_checkpoint(ParamStore& params, TaskKind expected_task, int expected_channels,
                     const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CorruptFileError("bad checkpoint magic: " + path);
  std::uint32_t version = 0, task = 0, channels = 0, entries = 0;
  if (!read_pod(is, version) || !read_pod(is, task) || !read_pod(is, channels) ||
      !read_pod(is, entries))
    throw CorruptFileError("truncated checkpoint header: " + path);
  if (version != kVersion)
    throw VersionMismatchError("checkpoint version " + std::to_string(version));
  if (task != static_cast<std::uint32_t>(expected_task))
    throw VersionMismatchError("checkpoint task kind does not match");
  if (channels != static_cast<std::uint32_t>(expected_channels))
    throw VersionMismatchError("checkpoint channel count does not match");
  if (entries != params.names().size())
    throw VersionMismatchError("checkpoint layer table size does not match");
  for (const auto& name : params.names()) {
    std::uint32_t len = 0;
    if (!read_pod(is, len) || len > 4096) throw CorruptFileError("bad layer name: " + path);
    std::string fname(len, '\0');
    is.read(fname.data(), len);
    std::uint32_t rows = 0, cols = 0;
    if (!is || !read_pod(is, rows) || !read_pod(is, cols))
      throw CorruptFileError("truncated layer table: " + path);
    const Mat& m = params.value(name);
    if (fname != name || static_cast<int>(rows) != m.rows || static_cast<int>(cols) != m.cols)
      throw VersionMismatchError("checkpoint layer " + fname + " does not match " + name);
  }
  for (const auto& name : params.names()) {
    Mat& m = params.value(name);
    is.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
    if (is.gcount() != static_cast<std::streamsize>(m.a.size() * sizeof(double)))
      throw CorruptFileError("truncated parameter block: " + path);
  }
}

}  // namespace rlpart
