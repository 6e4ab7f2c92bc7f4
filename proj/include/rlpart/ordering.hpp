#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rlpart/graph.hpp"

namespace rlpart {

// Symmetric permutation: p[k] is the old index placed at new position k.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> old_of_new);
  static Permutation identity(int n);

  int size() const { return static_cast<int>(p_.size()); }
  int old_of_new(int k) const { return p_[k]; }
  int new_of_old(int v) const { return inv_[v]; }
  const std::vector<int>& vec() const { return p_; }

 private:
  std::vector<int> p_, inv_;
};

// Symmetric sparsity structure with an implicit unit diagonal; the
// off-diagonal structure is the adjacency of a simple graph.
struct SparsePattern {
  Graph adj;

  int size() const { return adj.num_nodes(); }
  // full-matrix nonzero count, diagonal included
  std::int64_t nnz() const { return adj.num_nodes() + 2 * adj.num_edges(); }
};

struct FillStats {
  std::int64_t nnz_factor = 0;  // nnz(L) including the diagonal
  std::int64_t fill = 0;        // nnz(L) minus nnz(tril(A)) including diagonals

  std::int64_t lu_nnz(int n) const { return 2 * nnz_factor - n; }
};

// Symbolic symmetric elimination (no pivoting) of the permuted pattern via
// the elimination tree and per-row path walks.
FillStats symbolic_fill(const SparsePattern& pattern, const Permutation& p);

// Classic exact minimum degree with quotient-graph bookkeeping; ties are
// broken toward the lowest node id.
Permutation minimum_degree(const Graph& g);

using SeparatorProvider = std::function<Separator3(const Graph&)>;

// Nested dissection with an explicit work stack: subdomains first, separator
// last; components of disconnected inputs are ordered independently; blocks
// below n_min fall back to minimum_degree.
Permutation nested_dissection(const Graph& g, int n_min, const SeparatorProvider& provider);

struct OrderReport {
  Permutation perm;
  FillStats natural, ordered;
};

OrderReport order_matrix(const SparsePattern& pattern, int n_min,
                         const SeparatorProvider& provider);

void write_permutation(const Permutation& p, const std::string& path);
Permutation read_permutation(const std::string& path);

}  // namespace rlpart
