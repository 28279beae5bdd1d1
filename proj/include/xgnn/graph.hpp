#pragma once

#include "xgnn/common.hpp"

#include <optional>
#include <span>
#include <vector>

namespace xgnn {

struct Edge {
  Index u = 0;
  Index v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; construction validates every invariant.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(Index i, Index j) const;

  /// this * dense
  Matrix multiply(const Matrix& dense) const;
  /// this^T * dense, without materialising the transpose.
  Matrix multiply_transposed(const Matrix& dense) const;

  Matrix to_dense() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Undirected graph with node features. Immutable once built; the only
/// way to obtain one is build_graph (or the helpers that call it).
class Graph {
 public:
  Graph() = default;

  Index num_nodes() const { return static_cast<Index>(offsets_.size()) - 1; }
  /// Undirected edge count, each edge counted once.
  Index num_edges() const { return static_cast<Index>(neighbors_.size()) / 2; }
  Index feature_dim() const { return features_.cols(); }

  std::span<const Index> neighbors(Index node) const {
    return {neighbors_.data() + offsets_[node],
            static_cast<std::size_t>(offsets_[node + 1] - offsets_[node])};
  }
  Index degree(Index node) const { return offsets_[node + 1] - offsets_[node]; }

  const std::vector<Index>& offsets() const { return offsets_; }
  const std::vector<Index>& adjacency() const { return neighbors_; }
  const Matrix& features() const { return features_; }
  const std::vector<int>& node_labels() const { return node_labels_; }
  const std::optional<double>& graph_label() const { return graph_label_; }

  /// Each undirected edge once, as (u, v) with u < v, lexicographically sorted.
  std::vector<Edge> edge_list() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  friend Graph build_graph(std::span<const Edge>, Matrix, std::vector<int>,
                           std::optional<double>);

  std::vector<Index> offsets_{0};
  std::vector<Index> neighbors_;
  Matrix features_;
  std::vector<int> node_labels_;
  std::optional<double> graph_label_;
};

/// Builds the symmetrised CSR graph. The node count is features.rows().
/// node_labels is either empty or holds one label per node.
/// Throws InvalidArgument naming the offending edge for out-of-range
/// indices, self-loops and duplicates (in either orientation).
Graph build_graph(std::span<const Edge> edges, Matrix features,
                  std::vector<int> node_labels = {},
                  std::optional<double> graph_label = std::nullopt);

std::vector<Index> degrees(const Graph& g);

/// D^{-1/2} (A [+ I]) D^{-1/2}, degrees taken after self-loop insertion.
/// Throws InvalidArgument naming the first zero-degree node.
SparseMatrix normalize_adjacency(const Graph& g, bool add_self_loops = true);

/// Binary adjacency A.
SparseMatrix adjacency_matrix(const Graph& g);

/// Row-normalised adjacency D^{-1} A; rows of isolated nodes are empty.
SparseMatrix mean_adjacency(const Graph& g);

/// Relabels node i as perm[i]. Features and node labels move with their node.
Graph permute_nodes(const Graph& g, std::span<const Index> perm);

struct NodeRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
  friend bool operator==(const NodeRange&, const NodeRange&) = default;
};

/// Disjoint union of member graphs. ranges[k] is the node range of member k.
struct BatchedGraph {
  Graph graph;
  std::vector<NodeRange> ranges;
};

BatchedGraph block_diagonal_batch(std::span<const Graph> graphs);
BatchedGraph block_diagonal_batch(std::span<const Graph* const> graphs);

}  // namespace xgnn
