#include "ngcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ngcn/error.hpp"

namespace ngcn {

SparseAdjacency SparseAdjacency::from_edge_list(std::size_t n,
                                                std::span<const Edge> edges) {
  SparseAdjacency adj;
  adj.n_ = n;
  adj.edges_.reserve(edges.size());
  for (const auto& [i, j] : edges) {
    if (i >= n || j >= n) {
      throw UsageError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                       ") out of range for " + std::to_string(n) + " nodes");
    }
    if (i == j) continue;
    adj.edges_.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(adj.edges_.begin(), adj.edges_.end());
  adj.edges_.erase(std::unique(adj.edges_.begin(), adj.edges_.end()),
                   adj.edges_.end());
  return adj;
}

bool SparseAdjacency::contains(NodeIndex i, NodeIndex j) const {
  if (i == j) return false;
  const Edge key{std::min(i, j), std::max(i, j)};
  return std::binary_search(edges_.begin(), edges_.end(), key);
}

std::vector<std::size_t> SparseAdjacency::degrees() const {
  std::vector<std::size_t> deg(n_, 0);
  for (const auto& [i, j] : edges_) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

double NormalizedAdjacency::value(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) {
    throw UsageError("NormalizedAdjacency::value: index out of range");
  }
  const auto begin = column_indices_.begin() + row_offsets_[i];
  const auto end = column_indices_.begin() + row_offsets_[i + 1];
  const auto it = std::lower_bound(begin, end, static_cast<int>(j));
  if (it == end || *it != static_cast<int>(j)) return 0.0;
  return values_[static_cast<std::size_t>(it - column_indices_.begin())];
}

DenseMatrix NormalizedAdjacency::to_dense() const {
  DenseMatrix out(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      out(i, static_cast<std::size_t>(column_indices_[k])) = values_[k];
    }
  }
  return out;
}

NormalizedAdjacency::SparseView NormalizedAdjacency::eigen() const {
  const auto n = static_cast<Eigen::Index>(n_);
  return SparseView(n, n, static_cast<Eigen::Index>(values_.size()),
                    row_offsets_.data(), column_indices_.data(),
                    values_.data());
}

NormalizedAdjacency normalize(const SparseAdjacency& adj) {
  const std::size_t n = adj.node_count();
  const auto deg = adj.degrees();

  std::vector<std::vector<int>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbors[i].reserve(deg[i] + 1);
    neighbors[i].push_back(static_cast<int>(i));
  }
  for (const auto& [i, j] : adj.edges()) {
    neighbors[i].push_back(static_cast<int>(j));
    neighbors[j].push_back(static_cast<int>(i));
  }

  NormalizedAdjacency out;
  out.n_ = n;
  out.row_offsets_.reserve(n + 1);
  out.row_offsets_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = neighbors[i];
    std::sort(row.begin(), row.end());
    for (int j : row) {
      out.column_indices_.push_back(j);
      // Computed as one product so value(i,j) and value(j,i) agree bitwise.
      out.values_.push_back(1.0 / std::sqrt((static_cast<double>(deg[i]) + 1.0) *
                                            (static_cast<double>(deg[j]) + 1.0)));
    }
    out.row_offsets_.push_back(static_cast<int>(out.column_indices_.size()));
  }
  return out;
}

DenseMatrix spmm(const NormalizedAdjacency& norm, const DenseMatrix& x) {
  if (x.cols() != norm.node_count()) {
    throw UsageError("spmm: features have " + std::to_string(x.cols()) +
                     " columns but the graph has " +
                     std::to_string(norm.node_count()) + " nodes");
  }
  DenseMatrix out(x.rows(), x.cols());
  // Ã is symmetric, so x Ã = x Ã^T; the row-major CSR is used as Ã^T.
  out.eigen().noalias() = x.eigen() * norm.eigen().transpose();
  return out;
}

}  // namespace ngcn
