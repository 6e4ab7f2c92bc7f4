#include "rlpart/data_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "rlpart/coarsen.hpp"
#include "rlpart/rng.hpp"

namespace rlpart {

// ---- matrix market ------------------------------------------------------

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

SparsePattern read_matrix_market(const std::string& path, MatrixMarketInfo* info) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open matrix market file: " + path);

  long line_no = 1;
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty file", line_no);
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", line_no);
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") throw ParseError("unsupported object: " + object, line_no);
  if (format != "coordinate") throw ParseError("unsupported format: " + format, line_no);
  if (field != "real" && field != "integer" && field != "pattern" && field != "complex")
    throw ParseError("unsupported field: " + field, line_no);
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric" &&
      symmetry != "hermitian")
    throw ParseError("unsupported symmetry: " + symmetry, line_no);

  // skip comments and blank lines
  do {
    if (!std::getline(is, line)) throw ParseError("missing size line", line_no);
    ++line_no;
  } while (line.empty() || line[0] == '%');

  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw ParseError("bad size line", line_no);
  }
  if (rows != cols) throw InvalidInputError("non-square matrix: " + path);

  MatrixMarketInfo local;
  local.rows = static_cast<int>(rows);
  local.cols = static_cast<int>(cols);
  local.symmetrized = symmetry == "general";

  std::vector<std::pair<int, int>> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    do {
      if (!std::getline(is, line)) throw ParseError("unexpected end of file", line_no);
      ++line_no;
    } while (line.empty() || line[0] == '%');
    std::istringstream ss(line);
    long i = 0, j = 0;
    if (!(ss >> i >> j)) throw ParseError("bad coordinate entry", line_no);
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError("coordinate out of range", line_no);
    if (i == j) {
      local.diagonal++;
      continue;  // diagonal is implicit
    }
    entries.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1));
  }

  // duplicate accounting on the undirected pairs
  {
    std::vector<std::pair<int, int>> und(entries);
    for (auto& [u, v] : und)
      if (u > v) std::swap(u, v);
    std::sort(und.begin(), und.end());
    long unique_count = static_cast<long>(std::unique(und.begin(), und.end()) - und.begin());
    if (symmetry == "general") {
      // a pair listed in both directions is one undirected edge, not a dup
      std::vector<std::pair<int, int>> dir(entries);
      std::sort(dir.begin(), dir.end());
      long unique_dir = static_cast<long>(std::unique(dir.begin(), dir.end()) - dir.begin());
      local.duplicates = static_cast<long>(entries.size()) - unique_dir;
    } else {
      local.duplicates = static_cast<long>(entries.size()) - unique_count;
    }
  }

  SparsePattern pattern;
  pattern.adj = Graph::from_edges(static_cast<int>(rows), entries);  // symmetrizes and dedupes
  if (info) *info = local;
  return pattern;
}

void write_matrix_market(const SparsePattern& pattern, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open matrix market file for writing: " + path);
  os << "%%MatrixMarket matrix coordinate pattern symmetric\n";
  const Graph& g = pattern.adj;
  os << g.num_nodes() << ' ' << g.num_nodes() << ' ' << g.num_edges() << '\n';
  for (int u = 0; u < g.num_nodes(); ++u)
    for (int v : g.neighbors(u))
      if (v < u) os << u + 1 << ' ' << v + 1 << '\n';  // lower triangle, 1-based
  if (!os) throw IoError("short write on matrix market file: " + path);
}

// ---- binary graph cache --------------------------------------------------

void write_graph_cache(const Graph& g, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open graph cache for writing: " + path);
  const std::uint64_t n = static_cast<std::uint64_t>(g.num_nodes());
  const std::uint64_t m = static_cast<std::uint64_t>(g.num_edges());
  os.write(reinterpret_cast<const char*>(&n), 8);
  os.write(reinterpret_cast<const char*>(&m), 8);
  for (auto [u, v] : g.edge_list()) {
    const std::uint32_t a = static_cast<std::uint32_t>(u), b = static_cast<std::uint32_t>(v);
    os.write(reinterpret_cast<const char*>(&a), 4);
    os.write(reinterpret_cast<const char*>(&b), 4);
  }
  if (!os) throw IoError("short write on graph cache: " + path);
}

Graph read_graph_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open graph cache: " + path);
  std::uint64_t n = 0, m = 0;
  is.read(reinterpret_cast<char*>(&n), 8);
  is.read(reinterpret_cast<char*>(&m), 8);
  if (!is) throw CorruptFileError("truncated graph cache header: " + path);
  std::vector<std::pair<int, int>> edges(m);
  for (auto& [u, v] : edges) {
    std::uint32_t a = 0, b = 0;
    is.read(reinterpret_cast<char*>(&a), 4);
    is.read(reinterpret_cast<char*>(&b), 4);
    if (!is) throw CorruptFileError("truncated graph cache edge list: " + path);
    u = static_cast<int>(a);
    v = static_cast<int>(b);
  }
  return Graph::from_edges(static_cast<int>(n), edges);
}

// ---- Delaunay -------------------------------------------------------------

namespace {

double orient2d(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// positive if d is strictly inside the circumcircle of ccw triangle (a,b,c)
double in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
         ad * (bdx * cdy - bdy * cdx);
}

struct TriSoup {
  std::vector<std::array<int, 3>> tris;
  std::vector<std::uint8_t> dead;

  int add(int a, int b, int c) {
    tris.push_back({a, b, c});
    dead.push_back(0);
    return static_cast<int>(tris.size()) - 1;
  }
};

std::uint64_t edge_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
}

struct DegenerateGeometry {};

// Incremental lexicographic sweep: every new point is hull-extreme, so it is
// joined to the visible hull chain.
TriSoup sweep_triangulation(const std::vector<Point2>& pts, const std::vector<int>& order) {
  const double eps = 1e-13;
  TriSoup soup;
  std::deque<int> hull;  // ccw polygon

  // initial non-collinear triple
  std::size_t k = 2;
  while (k < order.size() &&
         std::abs(orient2d(pts[order[0]], pts[order[1]], pts[order[k]])) <= eps)
    ++k;
  if (k >= order.size()) throw DegenerateGeometry{};
  if (k != 2) throw DegenerateGeometry{};  // collinear prefix: perturb instead of special-casing

  {
    const int a = order[0], b = order[1], c = order[2];
    if (orient2d(pts[a], pts[b], pts[c]) > 0) {
      soup.add(a, b, c);
      hull = {a, b, c};
    } else {
      soup.add(a, c, b);
      hull = {a, c, b};
    }
  }

  for (std::size_t idx = 3; idx < order.size(); ++idx) {
    const int p = order[idx];
    const int h = static_cast<int>(hull.size());
    // visibility per hull edge
    std::vector<std::uint8_t> vis(h);
    int vis_count = 0;
    for (int e = 0; e < h; ++e) {
      const double o = orient2d(pts[hull[e]], pts[hull[(e + 1) % h]], pts[p]);
      if (std::abs(o) <= eps) throw DegenerateGeometry{};
      vis[e] = o < 0 ? 1 : 0;
      vis_count += vis[e];
    }
    if (vis_count == 0 || vis_count == h) throw DegenerateGeometry{};
    // visible edges form one contiguous chain; find its start
    int start = 0;
    while (start < h && !(vis[start] && !vis[(start + h - 1) % h])) ++start;
    if (start == h) throw DegenerateGeometry{};  // non-contiguous visibility
    for (int e = start; vis[((e % h) + h) % h]; ++e) {
      const int u = hull[e % h], v = hull[(e + 1) % h];
      soup.add(v, u, p);  // reversed edge + p is ccw
    }
    // new hull: keep the invisible chain, then p
    std::deque<int> next;
    int cursor = start;
    while (vis[cursor % h]) ++cursor;  // first invisible edge
    next.push_back(hull[cursor % h]);
    for (int e = cursor; !vis[e % h]; ++e) next.push_back(hull[(e + 1) % h]);
    next.push_back(p);
    hull = std::move(next);
  }
  return soup;
}

// Lawson flips to the Delaunay condition.
void legalize(TriSoup& soup, const std::vector<Point2>& pts) {
  std::unordered_map<std::uint64_t, std::pair<int, int>> edge2tri;
  edge2tri.reserve(soup.tris.size() * 2);
  auto link = [&](int t) {
    for (int e = 0; e < 3; ++e) {
      auto key = edge_key(soup.tris[t][e], soup.tris[t][(e + 1) % 3]);
      auto [it, fresh] = edge2tri.try_emplace(key, std::make_pair(t, -1));
      if (!fresh) it->second.second = t;
    }
  };
  for (int t = 0; t < static_cast<int>(soup.tris.size()); ++t) link(t);

  std::deque<std::uint64_t> queue;
  for (auto& [key, val] : edge2tri) queue.push_back(key);

  auto third = [&](int t, int u, int v) {
    for (int x : soup.tris[t])
      if (x != u && x != v) return x;
    return -1;
  };

  std::size_t flips = 0;
  const std::size_t flip_cap = 64 * soup.tris.size() + 4096;
  while (!queue.empty()) {
    const std::uint64_t key = queue.front();
    queue.pop_front();
    auto it = edge2tri.find(key);
    if (it == edge2tri.end()) continue;
    auto [t1, t2] = it->second;
    if (t2 == -1 || soup.dead[t1] || soup.dead[t2]) continue;
    const int u = static_cast<int>(key >> 32), v = static_cast<int>(key & 0xffffffffu);
    const int c = third(t1, u, v), d = third(t2, u, v);
    if (c == -1 || d == -1) continue;

    // orientation bookkeeping: make (a, b, c) the ccw triangle t1
    int a = u, b = v;
    {
      const auto& tv = soup.tris[t1];
      for (int e = 0; e < 3; ++e)
        if (tv[e] != c && tv[(e + 1) % 3] != c) {
          a = tv[e];
          b = tv[(e + 1) % 3];
        }
      // (a, b) is directed so that t1 = (a, b, c) is ccw; t2 = (b, a, d)
    }
    if (in_circle(pts[a], pts[b], pts[c], pts[d]) <= 0) continue;
    // flippable only if a and b straddle line c-d
    const double oa = orient2d(pts[c], pts[d], pts[a]);
    const double ob = orient2d(pts[c], pts[d], pts[b]);
    if (!(oa > 0 && ob < 0) && !(oa < 0 && ob > 0)) continue;

    if (++flips > flip_cap) throw DegenerateGeometry{};

    soup.dead[t1] = soup.dead[t2] = 1;
    edge2tri.erase(it);
    auto unlink = [&](int t, std::uint64_t skip) {
      for (int e = 0; e < 3; ++e) {
        const auto k2 = edge_key(soup.tris[t][e], soup.tris[t][(e + 1) % 3]);
        if (k2 == skip) continue;
        auto jt = edge2tri.find(k2);
        if (jt == edge2tri.end()) continue;
        if (jt->second.first == t) std::swap(jt->second.first, jt->second.second);
        if (jt->second.second == t) jt->second.second = -1;
        if (jt->second.first == -1) edge2tri.erase(jt);
      }
    };
    unlink(t1, key);
    unlink(t2, key);
    const int n1 = soup.add(a, d, c);
    const int n2 = soup.add(d, b, c);
    link(n1);
    link(n2);
    for (std::uint64_t k2 : {edge_key(a, d), edge_key(d, b), edge_key(b, c), edge_key(c, a)})
      queue.push_back(k2);
  }
}

}  // namespace

std::vector<std::pair<int, int>> delaunay_edges(std::vector<Point2> points,
                                                std::vector<std::array<int, 3>>* triangles) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw InvalidInputError("delaunay triangulation needs at least 3 points");

  std::vector<int> order(n);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 8) throw InvalidInputError("degenerate point set beyond perturbation");
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return points[i].x != points[j].x ? points[i].x < points[j].x : points[i].y < points[j].y;
    });
    try {
      TriSoup soup = sweep_triangulation(points, order);
      legalize(soup, points);
      std::vector<std::pair<int, int>> edges;
      if (triangles) triangles->clear();
      for (int t = 0; t < static_cast<int>(soup.tris.size()); ++t) {
        if (soup.dead[t]) continue;
        const auto& tv = soup.tris[t];
        if (triangles) triangles->push_back(tv);
        for (int e = 0; e < 3; ++e) edges.emplace_back(tv[e], tv[(e + 1) % 3]);
      }
      return edges;
    } catch (const DegenerateGeometry&) {
      // deterministic symbolic perturbation, grows with each attempt
      Rng jitter(0x9e3779b9u + attempt);
      const double scale = 1e-9 * std::pow(10.0, attempt);
      for (auto& p : points) {
        p.x += scale * (jitter.uniform() - 0.5);
        p.y += scale * (jitter.uniform() - 0.5);
      }
    }
  }
}

Graph generate_delaunay(int n, std::uint64_t seed) {
  if (n < 3) throw InvalidInputError("delaunay graph needs at least 3 nodes");
  Rng rng(seed);
  std::vector<Point2> pts(n);
  for (auto& p : pts) {
    p.x = rng.uniform();
    p.y = rng.uniform();
  }
  return Graph::from_edges(n, delaunay_edges(std::move(pts)));
}

// ---- dataset ---------------------------------------------------------------

Graph largest_component(const Graph& g, int* removed_nodes) {
  int ncomp = 0;
  std::vector<int> comp = g.component_ids(&ncomp);
  if (ncomp <= 1) {
    if (removed_nodes) *removed_nodes = 0;
    return g;
  }
  std::vector<int> sizes(ncomp, 0);
  for (int c : comp) sizes[c]++;
  const int keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<int> remap(g.num_nodes(), -1);
  int next = 0;
  for (int v = 0; v < g.num_nodes(); ++v)
    if (comp[v] == keep) remap[v] = next++;
  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edge_list())
    if (remap[u] != -1 && remap[v] != -1) edges.emplace_back(remap[u], remap[v]);
  if (removed_nodes) *removed_nodes = g.num_nodes() - next;
  return Graph::from_edges(next, edges);
}

Dataset build_training_dataset(DatasetKind kind, const std::string& matrix_dir, int n_min,
                               int n_max, int n_target, std::uint64_t seed) {
  if (n_min >= n_max) throw InvalidInputError("dataset needs n_min < n_max");
  Dataset ds;
  Rng rng(seed);

  std::vector<std::string> files;
  if (kind == DatasetKind::MatrixDir) {
    namespace fs = std::filesystem;
    for (const auto& entry : fs::directory_iterator(matrix_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".mtx")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidInputError("no .mtx files in " + matrix_dir);
  }

  std::size_t file_cursor = 0;
  while (static_cast<int>(ds.entries.size()) < n_target) {
    DatasetEntry base;
    if (kind == DatasetKind::Delaunay) {
      const int n = n_min + 1 + static_cast<int>(rng.uniform_int(
                                     static_cast<std::uint64_t>(n_max - n_min)));
      const std::uint64_t gseed = rng.next_u64();
      base.graph = generate_delaunay(n, gseed);
      base.source = "delaunay";
      base.seed = gseed;
    } else {
      // cycle files, keep those whose largest component lands in range
      bool found = false;
      for (std::size_t tries = 0; tries < files.size(); ++tries) {
        const std::string& f = files[file_cursor];
        file_cursor = (file_cursor + 1) % files.size();
        SparsePattern pat = read_matrix_market(f);
        int removed = 0;
        Graph comp = largest_component(pat.adj, &removed);
        if (comp.num_nodes() > n_min && comp.num_nodes() <= n_max) {
          base.graph = std::move(comp);
          base.source = f;
          base.removed_nodes = removed;
          found = true;
          break;
        }
      }
      if (!found) throw InvalidInputError("no matrix in " + matrix_dir + " has size in range");
    }

    const std::string source = base.source;
    const std::uint64_t gseed = base.seed;
    Graph current = base.graph;
    // the graph itself, then every coarsening with more than n_min nodes
    ds.entries.push_back(std::move(base));
    int depth = 1;
    while (static_cast<int>(ds.entries.size()) < n_target) {
      CoarseLevel lvl = heavy_edge_matching(current, rng.next_u64());
      if (lvl.coarse.num_nodes() <= n_min || lvl.coarse.num_nodes() == current.num_nodes())
        break;
      current = std::move(lvl.coarse);
      DatasetEntry e;
      e.graph = current;
      e.source = source;
      e.seed = gseed;
      e.coarsen_depth = depth++;
      ds.entries.push_back(std::move(e));
    }
  }
  return ds;
}

void write_dataset_manifest(const Dataset& ds, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& e = ds.entries[i];
    j.push_back({{"id", i},
                 {"n", e.graph.num_nodes()},
                 {"m", e.graph.num_edges()},
                 {"source", e.source},
                 {"seed", e.seed},
                 {"coarsen_depth", e.coarsen_depth},
                 {"removed_nodes", e.removed_nodes}});
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open manifest for writing: " + path);
  os << j.dump(2) << '\n';
}

}  // namespace rlpart
