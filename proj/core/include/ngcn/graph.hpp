#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "ngcn/linalg.hpp"

namespace ngcn {

using NodeIndex = std::uint32_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

/// Undirected, unweighted adjacency without self-loops.
///
/// Each undirected edge is stored once as (min, max). Construction accepts
/// raw citation lists: duplicates, both orientations and self-loops are
/// folded away.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;

  // Throws UsageError if an endpoint is out of range.
  static SparseAdjacency from_edge_list(std::size_t n,
                                        std::span<const Edge> edges);

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  bool contains(NodeIndex i, NodeIndex j) const;
  std::vector<std::size_t> degrees() const;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;  // sorted, i < j
};

/// (D + I)^{-1/2} (A + I) (D + I)^{-1/2} in CSR form.
class NormalizedAdjacency {
 public:
  using SparseView = Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>>;

  std::size_t node_count() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  std::span<const int> row_offsets() const noexcept { return row_offsets_; }
  std::span<const int> column_indices() const noexcept { return column_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  // Zero when (i, j) is not stored.
  double value(std::size_t i, std::size_t j) const;
  DenseMatrix to_dense() const;
  SparseView eigen() const;

 private:
  friend NormalizedAdjacency normalize(const SparseAdjacency& adj);

  std::size_t n_ = 0;
  std::vector<int> row_offsets_;
  std::vector<int> column_indices_;
  std::vector<double> values_;
};

NormalizedAdjacency normalize(const SparseAdjacency& adj);

// x Ã for a feature-by-node matrix x (d x n). Column i of the result is the
// Ã-weighted aggregate of node i's neighborhood.
DenseMatrix spmm(const NormalizedAdjacency& norm, const DenseMatrix& x);

}  // namespace ngcn
