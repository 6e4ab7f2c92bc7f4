#include "rlpart/edge_sep.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

#include "rlpart/data_io.hpp"

namespace rlpart {

namespace {

// node counts per side restricted to the subgraph are not enough to protect
// against emptying a part, so the guard uses the global counts
void add_degenerate_guard(const Subgraph& gsub, const Bisection& b,
                          std::vector<std::uint8_t>& mask) {
  const bool last_a = b.count(Part::A) == 1, last_b = b.count(Part::B) == 1;
  if (!last_a && !last_b) return;
  for (int i = 0; i < gsub.num_nodes(); ++i) {
    const Part p = b.label(gsub.parent(i));
    if ((p == Part::A && last_a) || (p == Part::B && last_b)) mask[i] = 1;
  }
}

double ratio_of(double x, double y) { return x > y ? x / y : y / x; }

// masks moves whose resulting volume ratio exceeds the cap; a state already
// past the cap may only improve
void add_balance_guard(const Graph& g, const Subgraph& gsub, const Bisection& b,
                       double balance_cap, std::vector<std::uint8_t>& mask) {
  if (balance_cap <= 1.0) return;
  const double va = static_cast<double>(b.vol(Part::A));
  const double vb = static_cast<double>(b.vol(Part::B));
  const double allowed = std::max(balance_cap, ratio_of(va, vb));
  for (int i = 0; i < gsub.num_nodes(); ++i) {
    if (mask[i]) continue;
    const int pv = gsub.parent(i);
    const double d = static_cast<double>(g.degree(pv));
    const double na = b.label(pv) == Part::A ? va - d : va + d;
    const double nb = b.label(pv) == Part::A ? vb + d : vb - d;
    if (na <= 0 || nb <= 0 || ratio_of(na, nb) > allowed) mask[i] = 1;
  }
}

bool any_unmasked(const std::vector<std::uint8_t>& mask) {
  for (auto m : mask)
    if (!m) return true;
  return false;
}

void audit_episode_state(const Graph& g, const Subgraph& gsub, const Bisection& b,
                         const Mat& feat) {
  Bisection fresh(g, b.labels());
  if (fresh.cut() != b.cut() || fresh.vol(Part::A) != b.vol(Part::A) ||
      fresh.vol(Part::B) != b.vol(Part::B))
    throw Error("audit: bisection caches diverged from labels");
  Mat expect = build_edge_features(g, gsub, b);
  for (std::size_t i = 0; i < expect.a.size(); ++i)
    if (std::abs(expect.a[i] - feat.a[i]) > 1e-12)
      throw Error("audit: edge features diverged from state");
}

// replay index: prefix with the largest cumulative reward, empty prefix wins
// all-nonpositive episodes, earliest peak on ties
int peak_prefix(const std::vector<double>& rewards) {
  int best_k = 0;
  double best = 0, acc = 0;
  for (int k = 0; k < static_cast<int>(rewards.size()); ++k) {
    acc += rewards[k];
    if (acc > best + 1e-15) {
      best = acc;
      best_k = k + 1;
    }
  }
  return best_k;
}

int min_degree_node(const Graph& g) {
  int best = 0;
  for (int v = 1; v < g.num_nodes(); ++v)
    if (g.degree(v) < g.degree(best)) best = v;
  return best;
}

}  // namespace

Mat build_edge_features(const Graph& g, const Subgraph& gsub, const Bisection& b) {
  const double vol = static_cast<double>(g.total_volume());
  const double fa = static_cast<double>(b.vol(Part::A)) / vol;
  const double fb = static_cast<double>(b.vol(Part::B)) / vol;
  Mat F(gsub.num_nodes(), 5);
  for (int i = 0; i < gsub.num_nodes(); ++i) {
    const Part p = b.label(gsub.parent(i));
    F(i, 0) = p == Part::A ? 1.0 : 0.0;
    F(i, 1) = p == Part::B ? 1.0 : 0.0;
    F(i, 2) = gsub.boundary[i] ? 1.0 : 0.0;
    F(i, 3) = fa;
    F(i, 4) = fb;
  }
  return F;
}

namespace {

void update_edge_features(Mat& F, const Graph& g, const Subgraph& gsub, const Bisection& b,
                          int moved_local) {
  const Part p = b.label(gsub.parent(moved_local));
  F(moved_local, 0) = p == Part::A ? 1.0 : 0.0;
  F(moved_local, 1) = p == Part::B ? 1.0 : 0.0;
  const double vol = static_cast<double>(g.total_volume());
  const double fa = static_cast<double>(b.vol(Part::A)) / vol;
  const double fb = static_cast<double>(b.vol(Part::B)) / vol;
  for (int i = 0; i < F.rows; ++i) {
    F(i, 3) = fa;
    F(i, 4) = fb;
  }
}

}  // namespace

Episode refine_episode_eval(const Graph& g, const Subgraph& gsub, Bisection& b,
                            const RefineAgent& agent, bool audit, double balance_cap) {
  Episode ep;
  const std::int64_t c = b.cut();
  if (c == 0) return ep;
  const Bisection initial = b;
  Mat F = build_edge_features(g, gsub, b);
  Rng dummy(0);

  for (std::int64_t t = 0; t < c; ++t) {
    std::vector<std::uint8_t> mask = feature_mask(F, {2});
    add_degenerate_guard(gsub, b, mask);
    add_balance_guard(g, gsub, b, balance_cap, mask);
    if (!any_unmasked(mask)) break;
    AgentOutput out = agent.forward(gsub.graph, F, mask, /*training=*/false);
    const int a = sample_action(out.log_probs, SampleMode::Greedy, dummy);
    const double reward = b.move_node(g, gsub.parent(a));
    update_edge_features(F, g, gsub, b, a);
    if (audit) audit_episode_state(g, gsub, b, F);
    ep.actions.push_back(a);
    ep.rewards.push_back(reward);
    ep.log_probs.push_back(out.log_probs[a]);
    ep.values.push_back(0.0);
  }

  // replay the prefix with peak cumulative reward
  const int keep = peak_prefix(ep.rewards);
  b = initial;
  for (int t = 0; t < keep; ++t) b.move_node(g, gsub.parent(ep.actions[t]));
  return ep;
}

Episode refine_episode_train(const Graph& g, const Subgraph& gsub, Bisection& b,
                             RefineAgent& agent,
                             ChunkedA2C<RefineAgent, RefineCache>& trainer, Rng& rng,
                             double balance_cap) {
  Episode ep;
  const std::int64_t c = b.cut();
  Mat F = build_edge_features(g, gsub, b);
  for (std::int64_t t = 0; t < c; ++t) {
    std::vector<std::uint8_t> mask = feature_mask(F, {2});
    add_degenerate_guard(gsub, b, mask);
    add_balance_guard(g, gsub, b, balance_cap, mask);
    if (!any_unmasked(mask)) break;
    RefineCache cache;
    AgentOutput out = agent.forward(gsub.graph, F, mask, /*training=*/true, &cache);
    const int a = sample_action(out.log_probs, SampleMode::Sample, rng);
    const double reward = b.move_node(g, gsub.parent(a));
    update_edge_features(F, g, gsub, b, a);
    ep.actions.push_back(a);
    ep.rewards.push_back(reward);
    ep.log_probs.push_back(out.log_probs[a]);
    ep.values.push_back(out.critic);
    trainer.record_step(std::move(cache), a, out.log_probs[a], out.critic, reward);
  }
  trainer.end_episode();
  return ep;
}

Bisection greedy_fallback_partition(const Graph& g) {
  const int n = g.num_nodes();
  if (n < 2) throw InvalidInputError("partition needs at least 2 nodes");

  // pseudo-peripheral start: repeated BFS to a farthest node
  auto bfs_far = [&](int s, std::vector<int>& order) {
    std::vector<int> dist(n, -1);
    order.clear();
    order.push_back(s);
    dist[s] = 0;
    std::size_t head = 0;
    int far = s;
    while (head < order.size()) {
      int u = order[head++];
      for (int w : g.neighbors(u))
        if (dist[w] == -1) {
          dist[w] = dist[u] + 1;
          order.push_back(w);
          if (dist[w] > dist[far] || (dist[w] == dist[far] && w < far)) far = w;
        }
    }
    return far;
  };
  std::vector<int> order;
  int start = bfs_far(0, order);
  start = bfs_far(start, order);
  bfs_far(start, order);  // final BFS order from the pseudo-peripheral node

  std::vector<Part> labels(n, Part::B);
  const std::int64_t total = g.total_volume();
  std::int64_t vol_a = 0;
  int taken = 0;
  for (int v : order) {
    if (taken == n - 1) break;
    labels[v] = Part::A;
    vol_a += g.degree(v);
    ++taken;
    if (2 * vol_a >= total) break;
  }

  Bisection b(g, std::move(labels));

  // one boundary-greedy improvement pass
  for (int v = 0; v < n; ++v) {
    if (b.count(b.label(v)) == 1) continue;
    bool frontier = false;
    for (int w : g.neighbors(v)) frontier = frontier || b.label(w) != b.label(v);
    if (!frontier) continue;
    const double before = b.normalized_cut();
    const double reward = b.move_node(g, v);
    if (reward <= 0) {
      b.move_node(g, v);  // revert
      (void)before;
    }
  }
  return b;
}

Bisection coarse_edge_separator_eval(const Graph& g, const CoarseAgent& agent) {
  const int n = g.num_nodes();
  if (n < 2) throw InvalidInputError("coarse partition needs at least 2 nodes");
  std::vector<Part> labels(n, Part::B);
  labels[min_degree_node(g)] = Part::A;
  Bisection b(g, labels);
  const Bisection initial = b;

  // B nodes carry [1,0]; picked (A) nodes carry [0,1] and are masked
  Mat F(n, 2);
  for (int v = 0; v < n; ++v) {
    F(v, 0) = b.label(v) == Part::B ? 1.0 : 0.0;
    F(v, 1) = b.label(v) == Part::A ? 1.0 : 0.0;
  }

  Episode ep;
  Rng dummy(0);
  const int episode_len = n / 2 - 1;
  for (int t = 0; t < episode_len; ++t) {
    AgentOutput out = agent.forward(g, F, std::vector<int>{1}, /*training=*/false);
    const int a = sample_action(out.log_probs, SampleMode::Greedy, dummy);
    const double reward = b.move_node(g, a);
    F(a, 0) = 0.0;
    F(a, 1) = 1.0;
    ep.actions.push_back(a);
    ep.rewards.push_back(reward);
  }

  // best normalized cut over prefixes within the imbalance allowance
  const int budget = std::min<int>(static_cast<int>(ep.actions.size()),
                                   episode_len + n / 100);
  b = initial;
  double best_nc = b.normalized_cut();
  int best_k = 0;
  {
    Bisection scan = initial;
    for (int k = 1; k <= budget; ++k) {
      scan.move_node(g, ep.actions[k - 1]);
      const double nc = scan.normalized_cut();
      if (nc < best_nc - 1e-15 ||
          (std::abs(nc - best_nc) <= 1e-15 && k > best_k)) {  // ties favor balance
        best_nc = nc;
        best_k = k;
      }
    }
  }
  for (int k = 0; k < best_k; ++k) b.move_node(g, ep.actions[k]);
  return b;
}

CoarseEpisodeResult coarse_edge_separator_train(const Graph& g, CoarseAgent& agent,
                                                ChunkedA2C<CoarseAgent, CoarseCache>& trainer,
                                                Rng& rng) {
  const int n = g.num_nodes();
  if (n < 2) throw InvalidInputError("coarse partition needs at least 2 nodes");
  std::vector<Part> labels(n, Part::B);
  labels[min_degree_node(g)] = Part::A;
  Bisection b(g, labels);

  Mat F(n, 2);
  for (int v = 0; v < n; ++v) {
    F(v, 0) = b.label(v) == Part::B ? 1.0 : 0.0;
    F(v, 1) = b.label(v) == Part::A ? 1.0 : 0.0;
  }

  CoarseEpisodeResult res;
  for (int t = 0; t < n / 2 - 1; ++t) {
    CoarseCache cache;
    AgentOutput out = agent.forward(g, F, std::vector<int>{1}, /*training=*/true, &cache);
    const int a = sample_action(out.log_probs, SampleMode::Sample, rng);
    const double reward = b.move_node(g, a);
    F(a, 0) = 0.0;
    F(a, 1) = 1.0;
    res.episode.actions.push_back(a);
    res.episode.rewards.push_back(reward);
    res.episode.log_probs.push_back(out.log_probs[a]);
    res.episode.values.push_back(out.critic);
    trainer.record_step(std::move(cache), a, out.log_probs[a], out.critic, reward);
  }
  trainer.end_episode();
  res.bisection = std::move(b);
  return res;
}

namespace {

Bisection external_partition(const Graph& g, const std::string& cmd) {
  const std::string tmp = "/tmp/rlpart_ext_" + std::to_string(::getpid()) + ".mtx";
  write_matrix_market(SparsePattern{g}, tmp);
  const std::string full = cmd + " " + tmp;
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) throw IoError("cannot run external partitioner: " + cmd);
  std::string output;
  char buf[4096];
  std::size_t got;
  while ((got = ::fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, got);
  const int status = ::pclose(pipe);
  std::remove(tmp.c_str());
  if (status != 0) throw IoError("external partitioner failed: " + cmd);

  std::vector<Part> labels(g.num_nodes(), Part::B);
  std::istringstream is(output);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int v;
    std::string lab;
    if (!(ls >> v >> lab) || v < 0 || v >= g.num_nodes())
      throw IoError("bad external partitioner output line: " + line);
    labels[v] = lab == "A" ? Part::A : Part::B;
  }
  return Bisection(g, std::move(labels));
}

}  // namespace

Bisection coarsest_bisection(const Graph& g, const RefineConfig& cfg,
                             const CoarseAgent* coarse_agent) {
  switch (cfg.coarse_solver) {
    case CoarseSolver::RlAgent:
      if (coarse_agent) return coarse_edge_separator_eval(g, *coarse_agent);
      return greedy_fallback_partition(g);
    case CoarseSolver::External:
      if (!cfg.external_cmd.empty()) return external_partition(g, cfg.external_cmd);
      return greedy_fallback_partition(g);
    case CoarseSolver::GreedyFallback:
    default:
      return greedy_fallback_partition(g);
  }
}

namespace {

Bisection edge_separator_rec(const Graph& g, const RefineConfig& cfg,
                             const RefineAgent* refine_agent, const CoarseAgent* coarse_agent,
                             std::vector<LevelTrace>* trace, Rng& rng, int level) {
  if (g.num_nodes() < cfg.n_min) return coarsest_bisection(g, cfg, coarse_agent);

  CoarseLevel lvl = heavy_edge_matching(g, rng);
  if (lvl.coarse.num_nodes() == g.num_nodes())
    return coarsest_bisection(g, cfg, coarse_agent);  // coarsening stalled

  Bisection coarse_b =
      edge_separator_rec(lvl.coarse, cfg, refine_agent, coarse_agent, trace, rng, level + 1);
  Bisection b = interpolate_bisection(g, lvl, coarse_b);

  LevelTrace lt;
  lt.n = g.num_nodes();
  lt.cut_interpolated = b.cut();
  lt.cut_refined = b.cut();

  // degenerate or already separable: keep the interpolation
  if (b.count(Part::A) == 0 || b.count(Part::B) == 0 || b.cut() == 0 || !refine_agent) {
    if (trace && b.count(Part::A) > 0 && b.count(Part::B) > 0) {
      lt.metric_interpolated = lt.metric_refined = b.normalized_cut();
      trace->push_back(lt);
    }
    return b;
  }

  lt.metric_interpolated = b.normalized_cut();
  Subgraph gsub = k_hop_subgraph(g, cut_frontier(g, b), cfg.k_hops);
  refine_episode_eval(g, gsub, b, *refine_agent, cfg.audit, cfg.balance_cap);
  lt.cut_refined = b.cut();
  lt.metric_refined = b.normalized_cut();
  lt.refined = true;
  if (trace) trace->push_back(lt);
  return b;
}

}  // namespace

Bisection edge_separator(const Graph& g, const RefineConfig& cfg, const RefineAgent* refine_agent,
                         const CoarseAgent* coarse_agent, std::vector<LevelTrace>* trace) {
  if (cfg.n_min < 4 || cfg.k_hops < 1) throw InvalidInputError("n_min >= 4 and k_hops >= 1 required");
  if (g.num_nodes() < 2) throw InvalidInputError("edge separator needs at least 2 nodes");
  if (!g.connected()) throw DisconnectedInputError("edge separator requires a connected graph");
  Rng rng(cfg.seed);
  return edge_separator_rec(g, cfg, refine_agent, coarse_agent, trace, rng, 0);
}

void write_partition(const Bisection& b, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open partition file for writing: " + path);
  for (std::size_t v = 0; v < b.labels().size(); ++v)
    os << v << ' ' << (b.labels()[v] == Part::A ? 'A' : 'B') << '\n';
  if (!os) throw IoError("short write on partition file: " + path);
}

Bisection read_partition(const Graph& g, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open partition file: " + path);
  std::vector<Part> labels(g.num_nodes(), Part::B);
  std::vector<std::uint8_t> seen(g.num_nodes(), 0);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int v;
    std::string lab;
    if (!(ls >> v >> lab) || v < 0 || v >= g.num_nodes() || (lab != "A" && lab != "B"))
      throw ParseError("bad partition line", line_no);
    labels[v] = lab == "A" ? Part::A : Part::B;
    seen[v] = 1;
  }
  for (int v = 0; v < g.num_nodes(); ++v)
    if (!seen[v]) throw ParseError("partition file misses node " + std::to_string(v), line_no);
  return Bisection(g, std::move(labels));
}

}  // namespace rlpart
