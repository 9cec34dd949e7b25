#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ngcn/graph.hpp"
#include "ngcn/linalg.hpp"

namespace ngcn {

struct FixedSplit {
  std::vector<NodeIndex> train;
  std::vector<NodeIndex> val;
  std::vector<NodeIndex> test;
};

/// A citation graph as loaded from disk.
///
/// Features are stored feature-by-node (d0 x n) and row-normalized: every
/// node's feature column sums to one in absolute value unless it is zero.
struct GraphBundle {
  std::string dataset;
  std::size_t n = 0;
  std::size_t d0 = 0;
  std::size_t classes = 0;
  DenseMatrix features;
  SparseAdjacency edges;
  std::vector<int> labels;
  FixedSplit fixed_split;
};

/// Reads a bundle directory:
///   meta.json     {"n", "d0", "c", "dataset"}
///   features.csv  node_id,v_1,...,v_d0
///   edges.csv     src,dst
///   labels.csv    node_id,class
///   split.json    {"train": [...], "val": [...], "test": [...]}
/// Throws LoadError naming the file (and line, for CSV input).
GraphBundle load_bundle(const std::filesystem::path& dir);

// Writes the directory layout read by load_bundle. Values are rendered with
// shortest round-trip precision.
void save_bundle(const GraphBundle& bundle, const std::filesystem::path& dir);

// Scales each feature column to unit 1-norm; zero columns are left alone.
void row_normalize_features(DenseMatrix& features);

// Checks the bundle invariants, throwing UsageError on violation.
void validate_bundle(const GraphBundle& bundle);

struct SplitMask {
  std::vector<char> train;
  std::vector<char> val;
  std::vector<char> test;
  std::size_t n_bar = 0;

  std::size_t node_count() const noexcept { return train.size(); }
  std::vector<NodeIndex> train_indices() const;
  std::vector<NodeIndex> val_indices() const;
  std::vector<NodeIndex> test_indices() const;
};

struct SplitOptions {
  // Test nodes kept by split 3, taken from the front of the split-1 test list.
  std::size_t split3_test_size = 500;
};

/// Training / validation / test masks.
///
///  1: the bundle's fixed split verbatim.
///  2: split-1 validation and test nodes are held out, every other node trains.
///  3: split-1 validation plus the first split3_test_size split-1 test nodes
///     are held out, every other node trains.
SplitMask make_split(const GraphBundle& bundle, int split_id,
                     const SplitOptions& options = {});

}  // namespace ngcn
