#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "rlpart/coarsen.hpp"

using namespace rlpart;

TEST_CASE("matching on a path with identity order") {
  Graph p4 = oracle::path(4);
  CoarseLevel lvl = heavy_edge_matching_ordered(p4, {0, 1, 2, 3});
  CHECK(lvl.fine_to_coarse == std::vector<int>{0, 0, 1, 1});
  CHECK(lvl.coarse.num_nodes() == 2);
  CHECK(lvl.coarse.num_edges() == 1);
  CHECK(lvl.cluster_size == std::vector<int>{2, 2});
}

TEST_CASE("single node coarsens to itself") {
  Graph one = Graph::from_edges(1, std::vector<std::pair<int, int>>{});
  CoarseLevel lvl = heavy_edge_matching(one, 5);
  CHECK(lvl.coarse.num_nodes() == 1);
  CHECK(lvl.coarse.num_edges() == 0);
}

TEST_CASE("matching invariants and pull-back on random graphs") {
  Rng rng(19);
  for (int it = 0; it < 15; ++it) {
    Graph g = oracle::random_connected_graph(10 + rng.uniform_index(40), 0.1, rng);
    CoarseLevel lvl = heavy_edge_matching(g, rng.next_u64());
    const int n = g.num_nodes(), nc = lvl.coarse.num_nodes();
    CHECK(nc >= (n + 1) / 2);
    CHECK(nc <= n);
    // cluster sizes 1 or 2, consistent with the map
    std::vector<int> count(nc, 0);
    for (int v = 0; v < n; ++v) count[lvl.fine_to_coarse[v]]++;
    for (int c = 0; c < nc; ++c) {
      CHECK(count[c] == lvl.cluster_size[c]);
      CHECK(count[c] >= 1);
      CHECK(count[c] <= 2);
    }
    // clusters of size 2 are actual edges (it is a matching)
    std::vector<std::vector<int>> members(nc);
    for (int v = 0; v < n; ++v) members[lvl.fine_to_coarse[v]].push_back(v);
    for (auto& mem : members)
      if (mem.size() == 2) CHECK(g.has_edge(mem[0], mem[1]));
    // every coarse edge pulls back to at least one fine edge
    for (auto [cu, cv] : lvl.coarse.edge_list()) {
      bool found = false;
      for (int u : members[cu])
        for (int v : members[cv]) found = found || g.has_edge(u, v);
      CHECK(found);
    }
    CHECK(lvl.coarse.num_edges() <= g.num_edges());
  }
}

TEST_CASE("interpolate bisection") {
  Graph p4 = oracle::path(4);
  CoarseLevel lvl = heavy_edge_matching_ordered(p4, {0, 1, 2, 3});
  Bisection cb(lvl.coarse, {Part::A, Part::B});
  Bisection fb = interpolate_bisection(p4, lvl, cb);
  CHECK(fb.labels() == std::vector<Part>{Part::A, Part::A, Part::B, Part::B});
  CHECK(fb.cut() == 1);

  Bisection all_a(lvl.coarse, {Part::A, Part::A});
  CHECK(interpolate_bisection(p4, lvl, all_a).vol(Part::B) == 0);
}

TEST_CASE("interpolated cut edges join clusters with different coarse labels") {
  Rng rng(29);
  for (int it = 0; it < 10; ++it) {
    Graph g = oracle::random_connected_graph(30, 0.08, rng);
    CoarseLevel lvl = heavy_edge_matching(g, rng.next_u64());
    auto clabels = oracle::random_bisection_labels(lvl.coarse.num_nodes(), rng);
    Bisection cb(lvl.coarse, clabels);
    Bisection fb = interpolate_bisection(g, lvl, cb);
    CHECK(fb.cut() >= 0);
    for (auto [u, v] : g.edge_list())
      if (fb.label(u) != fb.label(v))
        CHECK(clabels[lvl.fine_to_coarse[u]] != clabels[lvl.fine_to_coarse[v]]);
  }
}

TEST_CASE("interpolate separator") {
  Graph p6 = oracle::path(6);
  CoarseLevel lvl = heavy_edge_matching_ordered(p6, {0, 1, 2, 3, 4, 5});
  REQUIRE(lvl.coarse.num_nodes() == 3);
  Separator3 cs(lvl.coarse, {Part3::A, Part3::S, Part3::B});
  Separator3 fs = interpolate_separator(p6, lvl, cs);
  CHECK(fs.labels() == std::vector<Part3>{Part3::A, Part3::A, Part3::S, Part3::S, Part3::B,
                                          Part3::B});
  CHECK(fs.valid(p6));

  Separator3 all_s(lvl.coarse, {Part3::S, Part3::S, Part3::S});
  CHECK(interpolate_separator(p6, lvl, all_s).count(Part3::S) == 6);

  Separator3 invalid(lvl.coarse, {Part3::A, Part3::B, Part3::B}, false);
  CHECK_THROWS_AS(interpolate_separator(p6, lvl, invalid), InvalidInputError);
}

TEST_CASE("random valid coarse separators interpolate to valid fine separators") {
  Rng rng(37);
  for (int it = 0; it < 10; ++it) {
    Graph g = oracle::random_connected_graph(26, 0.1, rng);
    CoarseLevel lvl = heavy_edge_matching(g, rng.next_u64());
    const Graph& cg = lvl.coarse;
    // random valid separator on the coarse graph
    auto bl = oracle::random_bisection_labels(cg.num_nodes(), rng);
    std::vector<Part3> lab(cg.num_nodes());
    for (int v = 0; v < cg.num_nodes(); ++v) lab[v] = bl[v] == Part::A ? Part3::A : Part3::B;
    Bisection cb(cg, bl);
    for (int v : cut_frontier(cg, cb))
      if (bl[v] == Part::B) lab[v] = Part3::S;
    Separator3 cs(cg, lab);
    Separator3 fs = interpolate_separator(g, lvl, cs);
    CHECK(fs.valid(g));
    CHECK(oracle::separator_valid(g, fs.labels()));
    CHECK(fs.count(Part3::A) + fs.count(Part3::B) + fs.count(Part3::S) == g.num_nodes());
  }
}

TEST_CASE("coarsening chain") {
  Graph p8 = oracle::path(8);
  auto chain = coarsening_chain(p8, 3, 123);
  REQUIRE(!chain.empty());
  CHECK(chain.back().coarse.num_nodes() == 2);

  Graph small = oracle::path(2);
  CHECK(coarsening_chain(small, 3, 1).empty());

  // level count bound: coarsening rate is at most 2 per level
  Rng rng(43);
  Graph g = oracle::random_connected_graph(200, 0.02, rng);
  auto big_chain = coarsening_chain(g, 10, 7);
  int bound = static_cast<int>(std::ceil(std::log2(200.0 / 10.0))) + 3;
  CHECK(static_cast<int>(big_chain.size()) <= 2 * bound);
  for (std::size_t i = 0; i < big_chain.size(); ++i) {
    int fine_n = i == 0 ? 200 : big_chain[i - 1].coarse.num_nodes();
    CHECK(big_chain[i].coarse.num_nodes() >= (fine_n + 1) / 2);
  }
}
