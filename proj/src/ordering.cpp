#include "rlpart/ordering.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace rlpart {

Permutation::Permutation(std::vector<int> old_of_new) : p_(std::move(old_of_new)) {
  const int n = static_cast<int>(p_.size());
  inv_.assign(n, -1);
  for (int k = 0; k < n; ++k) {
    if (p_[k] < 0 || p_[k] >= n || inv_[p_[k]] != -1)
      throw InvalidInputError("permutation is not a bijection");
    inv_[p_[k]] = k;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  return Permutation(std::move(p));
}

FillStats symbolic_fill(const SparsePattern& pattern, const Permutation& p) {
  const Graph& g = pattern.adj;
  const int n = g.num_nodes();
  if (p.size() != n) throw InvalidInputError("permutation size != pattern size");

  // permuted lower adjacency: for new index j, new indices of neighbors
  std::vector<std::vector<int>> lower(n);
  for (int v = 0; v < n; ++v) {
    const int j = p.new_of_old(v);
    for (int w : g.neighbors(v)) {
      const int i = p.new_of_old(w);
      if (i < j) lower[j].push_back(i);
    }
  }

  // elimination tree with path compression
  std::vector<int> parent(n, -1), ancestor(n, -1);
  for (int j = 0; j < n; ++j) {
    for (int i : lower[j]) {
      int k = i;
      while (ancestor[k] != -1 && ancestor[k] != j) {
        const int next = ancestor[k];
        ancestor[k] = j;
        k = next;
      }
      if (ancestor[k] == -1) {
        ancestor[k] = j;
        parent[k] = j;
      }
    }
  }

  // row counts: row i of L holds the etree paths from each lower neighbor up
  // toward i
  std::int64_t nnz_factor = n;  // diagonal
  std::vector<int> mark(n, -1);
  for (int i = 0; i < n; ++i) {
    mark[i] = i;
    for (int k : lower[i]) {
      int j = k;
      while (mark[j] != i) {
        nnz_factor++;
        mark[j] = i;
        j = parent[j];
      }
    }
  }

  std::int64_t nnz_lower_a = n;
  for (int j = 0; j < n; ++j) nnz_lower_a += static_cast<std::int64_t>(lower[j].size());

  FillStats stats;
  stats.nnz_factor = nnz_factor;
  stats.fill = nnz_factor - nnz_lower_a;
  return stats;
}

// ---- minimum degree -------------------------------------------------------
// Quotient-graph representation: eliminated nodes become elements; a
// variable's degree is the size of the union of its variable neighbors and
// the variables of its adjacent elements.

namespace {

struct MdState {
  std::vector<std::vector<int>> vadj;   // variable-variable adjacency
  std::vector<std::vector<int>> eadj;   // variable -> adjacent elements
  std::vector<std::vector<int>> elems;  // element -> boundary variables
  std::vector<std::uint8_t> eliminated, absorbed;
  std::vector<int> degree, stamp_of;
  int stamp = 0;
};

int external_degree(MdState& st, int u) {
  st.stamp++;
  st.stamp_of[u] = st.stamp;
  int deg = 0;
  for (int w : st.vadj[u])
    if (!st.eliminated[w] && st.stamp_of[w] != st.stamp) {
      st.stamp_of[w] = st.stamp;
      deg++;
    }
  for (int e : st.eadj[u]) {
    if (st.absorbed[e]) continue;
    for (int w : st.elems[e])
      if (!st.eliminated[w] && st.stamp_of[w] != st.stamp) {
        st.stamp_of[w] = st.stamp;
        deg++;
      }
  }
  return deg;
}

}  // namespace

Permutation minimum_degree(const Graph& g) {
  const int n = g.num_nodes();
  MdState st;
  st.vadj.resize(n);
  st.eadj.resize(n);
  st.eliminated.assign(n, 0);
  st.degree.resize(n);
  st.stamp_of.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    st.vadj[v].assign(nb.begin(), nb.end());
    st.degree[v] = static_cast<int>(nb.size());
  }

  // degree buckets as ordered sets give the lowest-id tie-break directly
  std::vector<std::set<int>> buckets(n + 1);
  for (int v = 0; v < n; ++v) buckets[st.degree[v]].insert(v);
  int min_deg = 0;

  std::vector<int> order;
  order.reserve(n);
  std::vector<int> boundary;
  for (int step = 0; step < n; ++step) {
    while (min_deg <= n && buckets[min_deg].empty()) min_deg++;
    const int v = *buckets[min_deg].begin();
    buckets[min_deg].erase(buckets[min_deg].begin());
    order.push_back(v);
    st.eliminated[v] = 1;

    // boundary = union of v's variable neighbors and its elements' variables
    st.stamp++;
    st.stamp_of[v] = st.stamp;
    boundary.clear();
    for (int w : st.vadj[v])
      if (!st.eliminated[w] && st.stamp_of[w] != st.stamp) {
        st.stamp_of[w] = st.stamp;
        boundary.push_back(w);
      }
    for (int e : st.eadj[v]) {
      if (st.absorbed[e]) continue;
      st.absorbed[e] = 1;  // element absorbed by the new one
      for (int w : st.elems[e])
        if (!st.eliminated[w] && st.stamp_of[w] != st.stamp) {
          st.stamp_of[w] = st.stamp;
          boundary.push_back(w);
        }
    }

    const int new_elem = static_cast<int>(st.elems.size());
    std::sort(boundary.begin(), boundary.end());
    st.elems.push_back(boundary);
    st.absorbed.push_back(0);
    for (int e : st.eadj[v]) {
      st.elems[e].clear();  // absorbed elements are never read again
      st.elems[e].shrink_to_fit();
    }

    // prune boundary variables: drop eliminated nodes and nodes now covered
    // by the new element, retire absorbed elements
    st.stamp++;
    for (int w : boundary) st.stamp_of[w] = st.stamp;
    const int boundary_stamp = st.stamp;
    for (int u : boundary) {
      auto& va = st.vadj[u];
      va.erase(std::remove_if(va.begin(), va.end(),
                              [&](int w) {
                                return st.eliminated[w] || st.stamp_of[w] == boundary_stamp;
                              }),
               va.end());
      auto& ea = st.eadj[u];
      ea.erase(std::remove_if(ea.begin(), ea.end(), [&](int e) { return st.absorbed[e]; }),
               ea.end());
      ea.push_back(new_elem);
    }
    for (int u : boundary) {
      const int d = external_degree(st, u);
      if (d != st.degree[u]) {
        buckets[st.degree[u]].erase(u);
        st.degree[u] = d;
        buckets[d].insert(u);
        min_deg = std::min(min_deg, d);
      }
    }
  }
  return Permutation(std::move(order));
}

// ---- nested dissection ------------------------------------------------

namespace {

struct NdWorkItem {
  std::vector<int> nodes;  // parent-graph ids, ascending
  int out_begin;           // positions [out_begin, out_begin + nodes.size())
};

// induced graph on `nodes` (ascending); local ids index into `nodes`
Graph induced_graph(const Graph& g, const std::vector<int>& nodes,
                    std::vector<int>& global_to_local) {
  for (std::size_t i = 0; i < nodes.size(); ++i) global_to_local[nodes[i]] = static_cast<int>(i);
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int w : g.neighbors(nodes[i])) {
      const int j = global_to_local[w];
      if (j != -1 && static_cast<int>(i) < j) edges.emplace_back(static_cast<int>(i), j);
    }
  Graph sub = Graph::from_edges(static_cast<int>(nodes.size()), edges);
  for (int v : nodes) global_to_local[v] = -1;
  return sub;
}

}  // namespace

Permutation nested_dissection(const Graph& g, int n_min, const SeparatorProvider& provider) {
  const int n = g.num_nodes();
  std::vector<int> perm(n, -1);
  std::vector<int> global_to_local(n, -1);

  std::vector<NdWorkItem> stack;
  {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({std::move(all), 0});
  }

  while (!stack.empty()) {
    NdWorkItem item = std::move(stack.back());
    stack.pop_back();
    if (item.nodes.empty()) continue;

    Graph sub = induced_graph(g, item.nodes, global_to_local);

    int ncomp = 0;
    std::vector<int> comp = sub.component_ids(&ncomp);
    if (ncomp > 1) {
      // order components independently, concatenated by component id
      std::vector<std::vector<int>> groups(ncomp);
      for (std::size_t i = 0; i < item.nodes.size(); ++i)
        groups[comp[i]].push_back(item.nodes[i]);
      int offset = item.out_begin;
      for (auto& grp : groups) {
        const int sz = static_cast<int>(grp.size());
        stack.push_back({std::move(grp), offset});
        offset += sz;
      }
      continue;
    }

    if (sub.num_nodes() < n_min) {
      Permutation md = minimum_degree(sub);
      for (int k = 0; k < md.size(); ++k) perm[item.out_begin + k] = item.nodes[md.old_of_new(k)];
      continue;
    }

    Separator3 sep = provider(sub);
    std::vector<int> a_nodes, b_nodes, s_nodes;
    for (std::size_t i = 0; i < item.nodes.size(); ++i) {
      switch (sep.label(static_cast<int>(i))) {
        case Part3::A: a_nodes.push_back(item.nodes[i]); break;
        case Part3::B: b_nodes.push_back(item.nodes[i]); break;
        case Part3::S: s_nodes.push_back(item.nodes[i]); break;
      }
    }
    if (sep.count(Part3::S) == 0 || a_nodes.empty() || b_nodes.empty()) {
      // separator failed to split the block; order it by minimum degree
      Permutation md = minimum_degree(sub);
      for (int k = 0; k < md.size(); ++k) perm[item.out_begin + k] = item.nodes[md.old_of_new(k)];
      continue;
    }

    // layout: A block, then B block, then the separator
    int offset = item.out_begin;
    const int a_sz = static_cast<int>(a_nodes.size());
    const int b_sz = static_cast<int>(b_nodes.size());
    stack.push_back({std::move(a_nodes), offset});
    stack.push_back({std::move(b_nodes), offset + a_sz});
    offset += a_sz + b_sz;
    for (std::size_t k = 0; k < s_nodes.size(); ++k) perm[offset + static_cast<int>(k)] = s_nodes[k];
  }

  return Permutation(std::move(perm));
}

OrderReport order_matrix(const SparsePattern& pattern, int n_min,
                         const SeparatorProvider& provider) {
  OrderReport report;
  report.perm = nested_dissection(pattern.adj, n_min, provider);
  report.natural = symbolic_fill(pattern, Permutation::identity(pattern.size()));
  report.ordered = symbolic_fill(pattern, report.perm);
  return report;
}

void write_permutation(const Permutation& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open permutation file for writing: " + path);
  for (int k = 0; k < p.size(); ++k) os << p.old_of_new(k) << '\n';
  if (!os) throw IoError("short write on permutation file: " + path);
}

Permutation read_permutation(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open permutation file: " + path);
  std::vector<int> p;
  int v;
  while (is >> v) p.push_back(v);
  return Permutation(std::move(p));
}

}  // namespace rlpart
