#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "rlpart/graph.hpp"

using namespace rlpart;

TEST_CASE("graph construction drops self-loops and duplicates") {
  std::vector<std::pair<int, int>> e{{0, 1}, {1, 0}, {1, 1}, {1, 2}, {1, 2}};
  Graph g = Graph::from_edges(3, e);
  CHECK(g.num_edges() == 2);
  CHECK(g.degree(1) == 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(2, 1));
  CHECK(!g.has_edge(1, 1));
}

TEST_CASE("adjacency is symmetric and sorted") {
  Rng rng(7);
  Graph g = oracle::random_graph(25, 0.2, rng);
  for (int u = 0; u < g.num_nodes(); ++u) {
    auto nb = g.neighbors(u);
    CHECK(std::is_sorted(nb.begin(), nb.end()));
    for (int v : nb) CHECK(g.has_edge(v, u));
  }
}

TEST_CASE("cut_size on small cases") {
  Graph p4 = oracle::path(4);
  Bisection b(p4, {Part::A, Part::A, Part::B, Part::B});
  CHECK(cut_size(p4, b) == 1);

  Bisection all_a(p4, {Part::A, Part::A, Part::A, Part::A});
  CHECK(cut_size(p4, all_a) == 0);
}

TEST_CASE("cut matches brute-force edge scan on random graphs") {
  Rng rng(11);
  for (int it = 0; it < 20; ++it) {
    Graph g = oracle::random_graph(20, 0.25, rng);
    auto labels = oracle::random_bisection_labels(20, rng);
    Bisection b(g, labels);
    CHECK(b.cut() == oracle::cut(g, labels));
    CHECK(cut_size(g, b) == oracle::cut(g, labels));
  }
}

TEST_CASE("volume") {
  Graph p4 = oracle::path(4);
  std::vector<int> part{0, 1};
  CHECK(volume(p4, part) == 3);

  std::vector<int> all{0, 1, 2, 3};
  CHECK(volume(p4, all) == 2 * p4.num_edges());

  Rng rng(3);
  Graph g = oracle::random_graph(18, 0.3, rng);
  std::vector<int> nodes;
  for (int v = 0; v < 18; ++v)
    if (rng.uniform() < 0.5) nodes.push_back(v);
  CHECK(volume(g, nodes) == oracle::volume(g, nodes));
}

TEST_CASE("normalized cut hand values") {
  Graph p4 = oracle::path(4);
  Bisection b(p4, {Part::A, Part::A, Part::B, Part::B});
  CHECK(normalized_cut(p4, b) == doctest::Approx(2.0 / 3.0));

  Graph s3 = oracle::star(3);
  Bisection bs(s3, {Part::B, Part::A, Part::B, Part::B});  // one leaf vs rest
  CHECK(normalized_cut(s3, bs) == doctest::Approx(1.2));

  Graph k4 = oracle::complete(4);
  Bisection bk(k4, {Part::A, Part::A, Part::B, Part::B});
  CHECK(normalized_cut(k4, bk) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("normalized cut rejects degenerate partitions") {
  Graph p4 = oracle::path(4);
  Bisection b(p4, {Part::A, Part::A, Part::A, Part::A});
  CHECK_THROWS_AS(b.normalized_cut(), DegeneratePartitionError);
}

TEST_CASE("NC stays in [0,2] on random bisections") {
  Rng rng(5);
  for (int it = 0; it < 50; ++it) {
    Graph g = oracle::random_connected_graph(12 + rng.uniform_index(10), 0.15, rng);
    auto labels = oracle::random_bisection_labels(g.num_nodes(), rng);
    Bisection b(g, labels);
    double nc = b.normalized_cut();
    CHECK(nc >= 0.0);
    CHECK(nc <= 2.0);
    CHECK(nc == doctest::Approx(oracle::normalized_cut(g, labels)));
  }
}

TEST_CASE("normalized separator") {
  Graph p5 = oracle::path(5);
  Separator3 s(p5, {Part3::A, Part3::A, Part3::S, Part3::B, Part3::B});
  CHECK(normalized_separator(p5, s) == doctest::Approx(1.0));

  // 5x5 grid, middle column separates
  Graph g25 = oracle::grid(5, 5);
  std::vector<Part3> lab(25);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) lab[r * 5 + c] = c < 2 ? Part3::A : (c == 2 ? Part3::S : Part3::B);
  Separator3 s25(g25, lab);
  CHECK(normalized_separator(g25, s25) == doctest::Approx(1.0));

  // empty separator on a disconnected graph
  Graph two = Graph::from_edges(4, std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
  Separator3 s0(two, {Part3::A, Part3::A, Part3::B, Part3::B});
  CHECK(normalized_separator(two, s0) == doctest::Approx(0.0));
}

TEST_CASE("separator validity enforcement") {
  Graph p3 = oracle::path(3);
  CHECK_THROWS_AS(Separator3(p3, {Part3::A, Part3::B, Part3::B}), InvalidSeparatorError);
  Separator3 lazy(p3, {Part3::A, Part3::B, Part3::B}, false);
  CHECK_THROWS_AS(normalized_separator(p3, lazy), InvalidSeparatorError);

  Separator3 empty_ab(p3, {Part3::S, Part3::S, Part3::S});
  CHECK_THROWS_AS(empty_ab.normalized_separator(), DegeneratePartitionError);
}

TEST_CASE("cut_frontier") {
  Graph p4 = oracle::path(4);
  Bisection b(p4, {Part::A, Part::A, Part::B, Part::B});
  CHECK(cut_frontier(p4, b) == std::vector<int>{1, 2});

  Bisection zero(p4, {Part::A, Part::A, Part::A, Part::A});
  CHECK(cut_frontier(p4, zero).empty());

  Rng rng(17);
  for (int it = 0; it < 10; ++it) {
    Graph g = oracle::random_graph(15, 0.25, rng);
    auto labels = oracle::random_bisection_labels(15, rng);
    Bisection rb(g, labels);
    CHECK(cut_frontier(g, rb) == oracle::cut_frontier(g, labels));
  }
}

TEST_CASE("k_hop_subgraph basics") {
  Graph p6 = oracle::path(6);
  std::vector<int> seeds{2, 3};
  Subgraph sg = k_hop_subgraph(p6, seeds, 1);
  CHECK(sg.parent_ids == std::vector<int>{1, 2, 3, 4});
  CHECK(sg.boundary == std::vector<std::uint8_t>{1, 0, 0, 1});
  CHECK(sg.graph.num_edges() == 3);

  Subgraph sg0 = k_hop_subgraph(p6, seeds, 0);
  CHECK(sg0.parent_ids == std::vector<int>{2, 3});
  CHECK(sg0.graph.num_edges() == 1);

  Subgraph all = k_hop_subgraph(p6, seeds, 10);
  CHECK(all.parent_ids.size() == 6);
  CHECK(std::count(all.boundary.begin(), all.boundary.end(), 1) == 0);
}

TEST_CASE("k_hop_subgraph monotone in k and boundary flags correct") {
  Rng rng(23);
  Graph g = oracle::random_connected_graph(30, 0.08, rng);
  std::vector<int> seeds{0, 7, 13};
  std::vector<int> prev;
  for (int k = 0; k <= 4; ++k) {
    Subgraph sg = k_hop_subgraph(g, seeds, k);
    CHECK(std::includes(sg.parent_ids.begin(), sg.parent_ids.end(), prev.begin(), prev.end()));
    for (int s : seeds)
      CHECK(std::binary_search(sg.parent_ids.begin(), sg.parent_ids.end(), s));
    // boundary iff some parent-graph neighbor is outside
    for (int i = 0; i < sg.num_nodes(); ++i) {
      bool outside = false;
      for (int w : g.neighbors(sg.parent(i))) outside |= sg.parent_to_local[w] == -1;
      CHECK(static_cast<bool>(sg.boundary[i]) == outside);
    }
    // induced edges exist in parent
    for (auto [u, v] : sg.graph.edge_list()) CHECK(g.has_edge(sg.parent(u), sg.parent(v)));
    prev = sg.parent_ids;
  }
}

TEST_CASE("essential separator nodes") {
  Graph p5 = oracle::path(5);
  Separator3 s(p5, {Part3::A, Part3::A, Part3::S, Part3::B, Part3::B});
  CHECK(essential_separator_nodes(p5, s) == std::vector<int>{2});

  // S={1,2}: node 1 sees {A,S}, node 2 sees {S,B}; neither touches both sides
  Separator3 s2(p5, {Part3::A, Part3::S, Part3::S, Part3::B, Part3::B});
  CHECK(essential_separator_nodes(p5, s2).empty());

  Separator3 none(p5, {Part3::A, Part3::A, Part3::A, Part3::A, Part3::A});
  CHECK(essential_separator_nodes(p5, none).empty());

  // neighbor-scan oracle on random graphs
  Rng rng(31);
  for (int it = 0; it < 10; ++it) {
    Graph g = oracle::random_connected_graph(20, 0.1, rng);
    // random valid separator: random bisection, then everything on the frontier into S
    auto bl = oracle::random_bisection_labels(20, rng);
    std::vector<Part3> lab(20);
    for (int v = 0; v < 20; ++v) lab[v] = bl[v] == Part::A ? Part3::A : Part3::B;
    Bisection b(g, bl);
    for (int v : cut_frontier(g, b))
      if (bl[v] == Part::A) lab[v] = Part3::S;
    Separator3 s3(g, lab);
    auto ess = essential_separator_nodes(g, s3);
    for (int v = 0; v < 20; ++v) {
      bool a = false, bb = false;
      for (int w : g.neighbors(v)) {
        a |= lab[w] == Part3::A;
        bb |= lab[w] == Part3::B;
      }
      bool expect = lab[v] == Part3::S && a && bb;
      CHECK(std::binary_search(ess.begin(), ess.end(), v) == expect);
    }
  }
}

TEST_CASE("move_node_edge updates caches incrementally") {
  Graph p4 = oracle::path(4);
  Bisection b(p4, {Part::A, Part::A, Part::B, Part::B});
  double reward = b.move_node(p4, 1);
  // edge (1,2) leaves the cut, edge (0,1) enters it
  CHECK(b.cut() == 1);
  CHECK(b.vol(Part::A) == 1);
  CHECK(b.vol(Part::B) == 5);
  CHECK(b.cut() == oracle::cut(p4, b.labels()));
  CHECK(reward == doctest::Approx(2.0 / 3.0 - 1.0 * (1.0 / 1.0 + 1.0 / 5.0)));
  CHECK(reward < 0);

  // involution
  b.move_node(p4, 1);
  CHECK(b.cut() == 1);
  CHECK(b.vol(Part::A) == 3);
  CHECK(b.vol(Part::B) == 3);
}

TEST_CASE("move_node_edge refuses to empty a part") {
  Graph p3 = oracle::path(3);
  Bisection b(p3, {Part::A, Part::B, Part::B});
  CHECK_THROWS_AS(b.move_node(p3, 0), DegeneratePartitionError);
  CHECK(b.cut() == 1);  // untouched
}

TEST_CASE("50 random moves keep caches coherent; rewards telescope") {
  Rng rng(41);
  Graph g = oracle::random_connected_graph(24, 0.12, rng);
  auto labels = oracle::random_bisection_labels(24, rng);
  Bisection b(g, labels);
  const double nc0 = b.normalized_cut();
  double reward_sum = 0;
  for (int it = 0; it < 50; ++it) {
    int v = rng.uniform_index(24);
    Part from = b.label(v);
    if (b.count(from) == 1) continue;
    reward_sum += b.move_node(g, v);
    Bisection fresh(g, b.labels());
    CHECK(b.cut() == fresh.cut());
    CHECK(b.vol(Part::A) == fresh.vol(Part::A));
    CHECK(b.vol(Part::B) == fresh.vol(Part::B));
  }
  CHECK(nc0 - b.normalized_cut() == doctest::Approx(reward_sum));
}

TEST_CASE("connectivity and components") {
  CHECK(oracle::path(5).connected());
  Graph two = Graph::from_edges(5, std::vector<std::pair<int, int>>{{0, 1}, {2, 3}, {3, 4}});
  CHECK(!two.connected());
  int nc = 0;
  auto comp = two.component_ids(&nc);
  CHECK(nc == 2);
  CHECK(comp[0] == comp[1]);
  CHECK(comp[2] == comp[3]);
  CHECK(comp[0] != comp[2]);
}
