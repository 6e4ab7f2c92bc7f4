#include "rlpart/vertex_sep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rlpart/coarsen.hpp"

namespace rlpart {

Mat build_vertex_features(const Graph& g, const Subgraph& gsub, const Separator3& s) {
  const double n = static_cast<double>(g.num_nodes());
  const double fa = s.count(Part3::A) / n;
  const double fb = s.count(Part3::B) / n;
  std::vector<std::uint8_t> essential(g.num_nodes(), 0);
  for (int v : essential_separator_nodes(g, s)) essential[v] = 1;

  Mat F(gsub.num_nodes(), 7);
  for (int i = 0; i < gsub.num_nodes(); ++i) {
    const int pv = gsub.parent(i);
    const Part3 p = s.label(pv);
    F(i, 0) = p == Part3::A ? 1.0 : 0.0;
    F(i, 1) = p == Part3::B ? 1.0 : 0.0;
    F(i, 2) = p == Part3::S ? 1.0 : 0.0;
    F(i, 3) = gsub.boundary[i] ? 1.0 : 0.0;
    F(i, 4) = essential[pv] ? 1.0 : 0.0;
    F(i, 5) = fa;
    F(i, 6) = fb;
  }
  return F;
}

double apply_action_vertex(int a, const Graph& g, Separator3& s) {
  const double ns_before = s.normalized_separator();
  const Part3 from = s.label(a);
  if (from == Part3::A || from == Part3::B) {
    s.relabel(a, Part3::S);
    return ns_before - s.normalized_separator();
  }

  // a leaves the separator
  bool in_a = false, in_b = false;
  for (int w : g.neighbors(a)) {
    in_a = in_a || s.label(w) == Part3::A;
    in_b = in_b || s.label(w) == Part3::B;
  }
  if (in_a && in_b) throw EssentialNodeError("cannot remove an essential separator node");
  if (in_a)
    s.relabel(a, Part3::A);
  else if (in_b)
    s.relabel(a, Part3::B);
  else
    s.relabel(a, s.count(Part3::A) <= s.count(Part3::B) ? Part3::A : Part3::B);
  return ns_before - s.normalized_separator();
}

Separator3 edge_to_vertex_separator(const Graph& g, const Bisection& b) {
  // bipartite graph on the endpoints of cut edges; the side with more nodes
  // plays "left" so the cover prefers trimming the larger part
  const Part left_part =
      b.count(Part::A) >= b.count(Part::B) ? Part::A : Part::B;

  std::vector<int> left_nodes, right_nodes;
  std::vector<int> left_id(g.num_nodes(), -1), right_id(g.num_nodes(), -1);
  for (int u = 0; u < g.num_nodes(); ++u)
    for (int v : g.neighbors(u)) {
      if (b.label(u) == b.label(v)) continue;
      int lu = b.label(u) == left_part ? u : v;
      int ru = b.label(u) == left_part ? v : u;
      if (left_id[lu] == -1) {
        left_id[lu] = static_cast<int>(left_nodes.size());
        left_nodes.push_back(lu);
      }
      if (right_id[ru] == -1) {
        right_id[ru] = static_cast<int>(right_nodes.size());
        right_nodes.push_back(ru);
      }
    }

  const int nl = static_cast<int>(left_nodes.size());
  const int nr = static_cast<int>(right_nodes.size());
  std::vector<std::vector<int>> adj(nl);
  for (int li = 0; li < nl; ++li)
    for (int w : g.neighbors(left_nodes[li]))
      if (b.label(w) != left_part && right_id[w] != -1) adj[li].push_back(right_id[w]);

  // Kuhn's augmenting-path maximum matching
  std::vector<int> match_l(nl, -1), match_r(nr, -1);
  std::vector<std::uint8_t> used(nr);
  std::function<bool(int)> try_augment = [&](int li) -> bool {
    for (int ri : adj[li]) {
      if (used[ri]) continue;
      used[ri] = 1;
      if (match_r[ri] == -1 || try_augment(match_r[ri])) {
        match_l[li] = ri;
        match_r[ri] = li;
        return true;
      }
    }
    return false;
  };
  for (int li = 0; li < nl; ++li) {
    std::fill(used.begin(), used.end(), 0);
    try_augment(li);
  }

  // Koenig: Z = alternating-path closure of unmatched left nodes;
  // cover = (L \ Z) on the left plus (R in Z) on the right
  std::vector<std::uint8_t> zl(nl, 0), zr(nr, 0);
  std::vector<int> stack;
  for (int li = 0; li < nl; ++li)
    if (match_l[li] == -1) {
      zl[li] = 1;
      stack.push_back(li);
    }
  while (!stack.empty()) {
    int li = stack.back();
    stack.pop_back();
    for (int ri : adj[li]) {
      if (zr[ri]) continue;
      zr[ri] = 1;
      int next = match_r[ri];
      if (next != -1 && !zl[next]) {
        zl[next] = 1;
        stack.push_back(next);
      }
    }
  }

  std::vector<Part3> labels(g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v)
    labels[v] = b.label(v) == Part::A ? Part3::A : Part3::B;
  for (int li = 0; li < nl; ++li)
    if (!zl[li]) labels[left_nodes[li]] = Part3::S;
  for (int ri = 0; ri < nr; ++ri)
    if (zr[ri]) labels[right_nodes[ri]] = Part3::S;
  return Separator3(g, std::move(labels));
}

int make_separator_minimal(const Graph& g, Separator3& s) {
  // without both sides anchored the sweep would flood everything one way
  if (s.count(Part3::A) == 0 || s.count(Part3::B) == 0) return 0;
  int moved = 0;
  bool again = true;
  while (again) {
    again = false;
    for (int v = 0; v < g.num_nodes(); ++v) {
      if (s.label(v) != Part3::S) continue;
      bool in_a = false, in_b = false;
      for (int w : g.neighbors(v)) {
        in_a = in_a || s.label(w) == Part3::A;
        in_b = in_b || s.label(w) == Part3::B;
      }
      if (in_a && in_b) continue;
      if (in_a)
        s.relabel(v, Part3::A);
      else if (in_b)
        s.relabel(v, Part3::B);
      else
        s.relabel(v, s.count(Part3::A) <= s.count(Part3::B) ? Part3::A : Part3::B);
      ++moved;
      again = true;
    }
  }
  return moved;
}

namespace {

void add_vertex_degenerate_guard(const Subgraph& gsub, const Separator3& s,
                                 std::vector<std::uint8_t>& mask) {
  const bool last_a = s.count(Part3::A) == 1, last_b = s.count(Part3::B) == 1;
  if (!last_a && !last_b) return;
  for (int i = 0; i < gsub.num_nodes(); ++i) {
    const Part3 p = s.label(gsub.parent(i));
    if ((p == Part3::A && last_a) || (p == Part3::B && last_b)) mask[i] = 1;
  }
}

double ratio_of(double x, double y) { return x > y ? x / y : y / x; }

// cardinality analog of the edge task's balance guard; S-node actions are
// left alone since their destination side depends on adjacency
void add_vertex_balance_guard(const Subgraph& gsub, const Separator3& s, double balance_cap,
                              std::vector<std::uint8_t>& mask) {
  if (balance_cap <= 1.0) return;
  const double ca = s.count(Part3::A), cb = s.count(Part3::B);
  const double allowed = std::max(balance_cap, ratio_of(ca, cb));
  for (int i = 0; i < gsub.num_nodes(); ++i) {
    if (mask[i]) continue;
    const Part3 p = s.label(gsub.parent(i));
    double na = ca, nb = cb;
    if (p == Part3::A)
      na -= 1;
    else if (p == Part3::B)
      nb -= 1;
    else
      continue;
    if (na <= 0 || nb <= 0 || ratio_of(na, nb) > allowed) mask[i] = 1;
  }
}

bool any_unmasked(const std::vector<std::uint8_t>& mask) {
  for (auto m : mask)
    if (!m) return true;
  return false;
}

void audit_vertex_state(const Graph& g, const Separator3& s) {
  if (!s.valid(g)) throw Error("audit: separator invalidated by an action");
  Separator3 fresh(g, s.labels());
  if (fresh.count(Part3::A) != s.count(Part3::A) || fresh.count(Part3::B) != s.count(Part3::B) ||
      fresh.count(Part3::S) != s.count(Part3::S))
    throw Error("audit: separator cardinality caches diverged");
}

template <bool Training, class PickAction, class OnStep>
Episode vertex_episode(const Graph& g, const Subgraph& gsub, Separator3& s,
                       const RefineAgent& agent, bool audit, double balance_cap,
                       PickAction pick, OnStep on_step) {
  Episode ep;
  const int episode_len = 2 * s.count(Part3::S);
  for (int t = 0; t < episode_len; ++t) {
    Mat F = build_vertex_features(g, gsub, s);  // essential set recomputed per step
    std::vector<std::uint8_t> mask = feature_mask(F, {3, 4});
    add_vertex_degenerate_guard(gsub, s, mask);
    add_vertex_balance_guard(gsub, s, balance_cap, mask);
    if (!any_unmasked(mask)) break;
    RefineCache cache;
    AgentOutput out = agent.forward(gsub.graph, F, mask, Training, &cache);
    const int a = pick(out);
    const double reward = apply_action_vertex(gsub.parent(a), g, s);
    if (audit) audit_vertex_state(g, s);
    ep.actions.push_back(a);
    ep.rewards.push_back(reward);
    ep.log_probs.push_back(out.log_probs[a]);
    ep.values.push_back(out.critic);
    on_step(std::move(cache), a, out, reward);
  }
  return ep;
}

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

}  // namespace

Episode vertex_episode_eval(const Graph& g, const Subgraph& gsub, Separator3& s,
                            const RefineAgent& agent, bool audit, double balance_cap) {
  const Separator3 initial = s;
  Rng dummy(0);
  Episode ep = vertex_episode<false>(
      g, gsub, s, agent, audit, balance_cap,
      [&](const AgentOutput& out) { return sample_action(out.log_probs, SampleMode::Greedy, dummy); },
      [](RefineCache&&, int, const AgentOutput&, double) {});

  const int keep = peak_prefix(ep.rewards);
  s = initial;
  for (int t = 0; t < keep; ++t) apply_action_vertex(gsub.parent(ep.actions[t]), g, s);
  return ep;
}

Episode vertex_episode_train(const Graph& g, const Subgraph& gsub, Separator3& s,
                             RefineAgent& agent,
                             ChunkedA2C<RefineAgent, RefineCache>& trainer, Rng& rng,
                             double balance_cap) {
  Episode ep = vertex_episode<true>(
      g, gsub, s, agent, /*audit=*/false, balance_cap,
      [&](const AgentOutput& out) { return sample_action(out.log_probs, SampleMode::Sample, rng); },
      [&](RefineCache&& cache, int a, const AgentOutput& out, double reward) {
        trainer.record_step(std::move(cache), a, out.log_probs[a], out.critic, reward);
      });
  trainer.end_episode();
  return ep;
}

namespace {

Separator3 vertex_separator_rec(const Graph& g, const RefineConfig& cfg,
                                const RefineAgent* refine_agent, const CoarseAgent* coarse_agent,
                                std::vector<LevelTrace>* trace, Rng& rng) {
  const auto coarsest = [&](const Graph& gc) {
    const Bisection b = coarsest_bisection(gc, cfg, coarse_agent);
    Separator3 s = edge_to_vertex_separator(gc, b);
    if (s.count(Part3::A) > 0 && s.count(Part3::B) > 0) return s;
    // the minimum cover swallowed a whole side (dense coarse graphs); take
    // the one-sided frontier cover that keeps both sides populated instead
    for (Part side : {Part::A, Part::B}) {
      std::vector<Part3> labels(gc.num_nodes());
      int na = 0, nb = 0;
      for (int v = 0; v < gc.num_nodes(); ++v) {
        labels[v] = b.label(v) == Part::A ? Part3::A : Part3::B;
        bool frontier = false;
        if (b.label(v) == side)
          for (int w : gc.neighbors(v)) frontier = frontier || b.label(w) != side;
        if (frontier) labels[v] = Part3::S;
        na += labels[v] == Part3::A;
        nb += labels[v] == Part3::B;
      }
      if (na > 0 && nb > 0) {
        Separator3 alt(gc, std::move(labels));
        make_separator_minimal(gc, alt);
        return alt;
      }
    }
    return s;  // hopeless (near-complete graph); the caller guards
  };
  if (g.num_nodes() < cfg.n_min) return coarsest(g);

  CoarseLevel lvl = heavy_edge_matching(g, rng);
  if (lvl.coarse.num_nodes() == g.num_nodes()) return coarsest(g);

  Separator3 coarse_s =
      vertex_separator_rec(lvl.coarse, cfg, refine_agent, coarse_agent, trace, rng);
  Separator3 s = interpolate_separator(g, lvl, coarse_s);

  LevelTrace lt;
  lt.n = g.num_nodes();

  const bool degenerate = s.count(Part3::A) == 0 || s.count(Part3::B) == 0;
  if (s.count(Part3::S) == 0 || degenerate || !refine_agent) {
    if (trace && !degenerate) {
      lt.metric_interpolated = lt.metric_refined = s.normalized_separator();
      trace->push_back(lt);
    }
    return s;
  }

  lt.metric_interpolated = s.normalized_separator();
  std::vector<int> seeds;
  for (int v = 0; v < g.num_nodes(); ++v)
    if (s.label(v) == Part3::S) seeds.push_back(v);
  Subgraph gsub = k_hop_subgraph(g, seeds, cfg.k_hops);
  vertex_episode_eval(g, gsub, s, *refine_agent, cfg.audit, cfg.balance_cap);
  lt.metric_refined = s.normalized_separator();
  lt.refined = true;
  if (trace) trace->push_back(lt);
  return s;
}

}  // namespace

Separator3 vertex_separator(const Graph& g, const RefineConfig& cfg,
                            const RefineAgent* refine_agent, const CoarseAgent* coarse_agent,
                            std::vector<LevelTrace>* trace) {
  if (cfg.n_min < 4 || cfg.k_hops < 1) throw InvalidInputError("n_min >= 4 and k_hops >= 1 required");
  if (g.num_nodes() < 2) throw InvalidInputError("vertex separator needs at least 2 nodes");
  if (!g.connected()) throw DisconnectedInputError("vertex separator requires a connected graph");
  Rng rng(cfg.seed);
  return vertex_separator_rec(g, cfg, refine_agent, coarse_agent, trace, rng);
}

void write_separator(const Separator3& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open separator file for writing: " + path);
  for (std::size_t v = 0; v < s.labels().size(); ++v) {
    const char c = s.labels()[v] == Part3::A ? 'A' : (s.labels()[v] == Part3::B ? 'B' : 'S');
    os << v << ' ' << c << '\n';
  }
  if (!os) throw IoError("short write on separator file: " + path);
}

Separator3 read_separator(const Graph& g, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open separator file: " + path);
  std::vector<Part3> labels(g.num_nodes(), Part3::S);
  std::vector<std::uint8_t> seen(g.num_nodes(), 0);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int v;
    std::string lab;
    if (!(ls >> v >> lab) || v < 0 || v >= g.num_nodes() ||
        (lab != "A" && lab != "B" && lab != "S"))
      throw ParseError("bad separator line", line_no);
    labels[v] = lab == "A" ? Part3::A : (lab == "B" ? Part3::B : Part3::S);
    seen[v] = 1;
  }
  for (int v = 0; v < g.num_nodes(); ++v)
    if (!seen[v]) throw ParseError("separator file misses node " + std::to_string(v), line_no);
  return Separator3(g, std::move(labels));
}

}  // namespace rlpart
