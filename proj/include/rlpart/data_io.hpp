#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rlpart/graph.hpp"
#include "rlpart/ordering.hpp"

namespace rlpart {

struct MatrixMarketInfo {
  long duplicates = 0;     // merged coordinate entries
  long diagonal = 0;       // diagonal entries seen (implicit in the pattern)
  bool symmetrized = false;  // input was general and got mirrored
  int rows = 0, cols = 0;
};

// Coordinate-format Matrix Market reader. real/integer/pattern/complex are
// all reduced to structure (explicit zeros stay structural); general inputs
// are symmetrized; 1-based indices converted; duplicates merged.
SparsePattern read_matrix_market(const std::string& path, MatrixMarketInfo* info = nullptr);

void write_matrix_market(const SparsePattern& pattern, const std::string& path);

// Binary graph cache: little-endian header (n, m), then the sorted edge list.
void write_graph_cache(const Graph& g, const std::string& path);
Graph read_graph_cache(const std::string& path);

struct Point2 {
  double x = 0, y = 0;
};

// Delaunay triangulation edges (sweep triangulation + Lawson flips).
// Degenerate inputs are handled by a deterministic symbolic perturbation.
// Optionally emits the triangle list for inspection.
std::vector<std::pair<int, int>> delaunay_edges(std::vector<Point2> points,
                                                std::vector<std::array<int, 3>>* triangles = nullptr);

// Delaunay triangulation of n uniform points in the unit square.
Graph generate_delaunay(int n, std::uint64_t seed);

struct DatasetEntry {
  Graph graph;
  std::string source;       // "delaunay" or the file it came from
  std::uint64_t seed = 0;   // generation seed (delaunay)
  int coarsen_depth = 0;    // 0 for the generated graph itself
  int removed_nodes = 0;    // nodes outside the largest component (ingested)
};

struct Dataset {
  std::vector<DatasetEntry> entries;
};

enum class DatasetKind { Delaunay, MatrixDir };

// Repeatedly draws a graph with n uniform in (n_min, n_max], adds it together
// with its coarsening chain down to n_min, until the dataset holds n_target
// entries (overshoot truncated).
Dataset build_training_dataset(DatasetKind kind, const std::string& matrix_dir, int n_min,
                               int n_max, int n_target, std::uint64_t seed);

// Largest connected component as its own graph; id order preserved.
Graph largest_component(const Graph& g, int* removed_nodes = nullptr);

void write_dataset_manifest(const Dataset& ds, const std::string& path);

}  // namespace rlpart
