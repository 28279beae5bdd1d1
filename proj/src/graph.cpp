#include "xgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace xgnn {

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (rows_ < 0 || cols_ < 0) throw InvalidArgument("SparseMatrix: negative shape");
  if (static_cast<Index>(row_offsets_.size()) != rows_ + 1 || row_offsets_.front() != 0)
    throw InvalidArgument("SparseMatrix: row offsets must have rows+1 entries starting at 0");
  if (col_indices_.size() != values_.size() ||
      row_offsets_.back() != static_cast<Index>(values_.size()))
    throw InvalidArgument("SparseMatrix: offsets/indices/values length mismatch");
  for (Index r = 0; r < rows_; ++r) {
    if (row_offsets_[r + 1] < row_offsets_[r])
      throw InvalidArgument("SparseMatrix: row offsets decrease at row " + std::to_string(r));
    for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const Index c = col_indices_[k];
      if (c < 0 || c >= cols_)
        throw InvalidArgument("SparseMatrix: column out of range in row " + std::to_string(r));
      if (k > row_offsets_[r] && c <= col_indices_[k - 1])
        throw InvalidArgument("SparseMatrix: columns not strictly increasing in row " +
                              std::to_string(r));
      if (!std::isfinite(values_[k]))
        throw InvalidArgument("SparseMatrix: non-finite value in row " + std::to_string(r));
    }
  }
}

double SparseMatrix::at(Index i, Index j) const {
  const auto first = col_indices_.begin() + row_offsets_[i];
  const auto last = col_indices_.begin() + row_offsets_[i + 1];
  const auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? values_[it - col_indices_.begin()] : 0.0;
}

Matrix SparseMatrix::multiply(const Matrix& dense) const {
  if (dense.rows() != cols_) throw InvalidArgument("spmm: inner dimension mismatch");
  Matrix out = Matrix::Zero(rows_, dense.cols());
  for (Index r = 0; r < rows_; ++r) {
    for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      out.row(r).noalias() += values_[k] * dense.row(col_indices_[k]);
  }
  return out;
}

Matrix SparseMatrix::multiply_transposed(const Matrix& dense) const {
  if (dense.rows() != rows_) throw InvalidArgument("spmm^T: inner dimension mismatch");
  Matrix out = Matrix::Zero(cols_, dense.cols());
  for (Index r = 0; r < rows_; ++r) {
    for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      out.row(col_indices_[k]).noalias() += values_[k] * dense.row(r);
  }
  return out;
}

Matrix SparseMatrix::to_dense() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (Index r = 0; r < rows_; ++r)
    for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      out(r, col_indices_[k]) = values_[k];
  return out;
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(num_edges()));
  for (Index u = 0; u < num_nodes(); ++u)
    for (Index v : neighbors(u))
      if (u < v) edges.push_back({u, v});
  return edges;
}

bool operator==(const Graph& a, const Graph& b) {
  return a.offsets_ == b.offsets_ && a.neighbors_ == b.neighbors_ &&
         a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_ &&
         a.node_labels_ == b.node_labels_ && a.graph_label_ == b.graph_label_;
}

Graph build_graph(std::span<const Edge> edges, Matrix features, std::vector<int> node_labels,
                  std::optional<double> graph_label) {
  const Index n = features.rows();
  if (!node_labels.empty() && static_cast<Index>(node_labels.size()) != n) {
    std::ostringstream msg;
    msg << "build_graph: " << node_labels.size() << " node labels for " << n << " nodes";
    throw InvalidArgument(msg.str());
  }
  if (!features.allFinite()) throw InvalidArgument("build_graph: non-finite feature value");

  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    std::ostringstream where;
    where << "edge " << e << " (" << u << ", " << v << ")";
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw InvalidArgument("build_graph: node index out of range [0, " + std::to_string(n) +
                            ") at " + where.str());
    if (u == v) throw InvalidArgument("build_graph: self-loop at " + where.str());
    lists[u].push_back(v);
    lists[v].push_back(u);
  }

  Graph g;
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (Index u = 0; u < n; ++u) {
    auto& list = lists[u];
    std::sort(list.begin(), list.end());
    const auto dup = std::adjacent_find(list.begin(), list.end());
    if (dup != list.end()) {
      std::ostringstream msg;
      msg << "build_graph: duplicate edge (" << std::min(u, *dup) << ", " << std::max(u, *dup)
          << ")";
      throw InvalidArgument(msg.str());
    }
    g.offsets_[u + 1] = g.offsets_[u] + static_cast<Index>(list.size());
  }
  g.neighbors_.reserve(static_cast<std::size_t>(g.offsets_.back()));
  for (auto& list : lists) g.neighbors_.insert(g.neighbors_.end(), list.begin(), list.end());
  g.features_ = std::move(features);
  g.node_labels_ = std::move(node_labels);
  g.graph_label_ = graph_label;
  return g;
}

std::vector<Index> degrees(const Graph& g) {
  std::vector<Index> out(static_cast<std::size_t>(g.num_nodes()));
  for (Index i = 0; i < g.num_nodes(); ++i) out[i] = g.degree(i);
  return out;
}

SparseMatrix normalize_adjacency(const Graph& g, bool add_self_loops) {
  const Index n = g.num_nodes();
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index d = g.degree(i) + (add_self_loops ? 1 : 0);
    if (d == 0)
      throw InvalidArgument("normalize_adjacency: node " + std::to_string(i) +
                            " has degree 0 and self-loops are disabled");
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  std::vector<Index> offsets{0};
  std::vector<Index> cols;
  std::vector<double> vals;
  offsets.reserve(static_cast<std::size_t>(n) + 1);
  for (Index i = 0; i < n; ++i) {
    bool self_done = !add_self_loops;
    for (Index j : g.neighbors(i)) {
      if (!self_done && j > i) {
        cols.push_back(i);
        vals.push_back(inv_sqrt[i] * inv_sqrt[i]);
        self_done = true;
      }
      cols.push_back(j);
      vals.push_back(inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!self_done) {
      cols.push_back(i);
      vals.push_back(inv_sqrt[i] * inv_sqrt[i]);
    }
    offsets.push_back(static_cast<Index>(cols.size()));
  }
  return {n, n, std::move(offsets), std::move(cols), std::move(vals)};
}

SparseMatrix adjacency_matrix(const Graph& g) {
  return {g.num_nodes(), g.num_nodes(), g.offsets(), g.adjacency(),
          std::vector<double>(g.adjacency().size(), 1.0)};
}

SparseMatrix mean_adjacency(const Graph& g) {
  std::vector<double> vals(g.adjacency().size());
  for (Index i = 0; i < g.num_nodes(); ++i)
    for (Index k = g.offsets()[i]; k < g.offsets()[i + 1]; ++k)
      vals[k] = 1.0 / static_cast<double>(g.degree(i));
  return {g.num_nodes(), g.num_nodes(), g.offsets(), g.adjacency(), std::move(vals)};
}

Graph permute_nodes(const Graph& g, std::span<const Index> perm) {
  const Index n = g.num_nodes();
  if (static_cast<Index>(perm.size()) != n)
    throw InvalidArgument("permute_nodes: permutation length differs from node count");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index p : perm) {
    if (p < 0 || p >= n || seen[p])
      throw InvalidArgument("permute_nodes: input is not a bijection on [0, n)");
    seen[p] = true;
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.edge_list()) edges.push_back({perm[e.u], perm[e.v]});
  Matrix features(n, g.feature_dim());
  for (Index i = 0; i < n; ++i) features.row(perm[i]) = g.features().row(i);
  std::vector<int> labels;
  if (!g.node_labels().empty()) {
    labels.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) labels[perm[i]] = g.node_labels()[i];
  }
  return build_graph(edges, std::move(features), std::move(labels), g.graph_label());
}

BatchedGraph block_diagonal_batch(std::span<const Graph* const> graphs) {
  if (graphs.empty()) throw InvalidArgument("block_diagonal_batch: empty graph list");
  const Index dim = graphs.front()->feature_dim();
  Index total = 0;
  bool all_labelled = true;
  for (const Graph* g : graphs) {
    if (g->feature_dim() != dim)
      throw InvalidArgument("block_diagonal_batch: feature dimension mismatch (" +
                            std::to_string(g->feature_dim()) + " vs " + std::to_string(dim) +
                            ")");
    total += g->num_nodes();
    all_labelled = all_labelled && !g->node_labels().empty();
  }
  BatchedGraph out;
  Matrix features(total, dim);
  std::vector<Edge> edges;
  std::vector<int> labels;
  Index offset = 0;
  for (const Graph* g : graphs) {
    out.ranges.push_back({offset, offset + g->num_nodes()});
    if (g->num_nodes() > 0) features.middleRows(offset, g->num_nodes()) = g->features();
    for (const Edge& e : g->edge_list()) edges.push_back({e.u + offset, e.v + offset});
    if (all_labelled) labels.insert(labels.end(), g->node_labels().begin(), g->node_labels().end());
    offset += g->num_nodes();
  }
  std::optional<double> label;
  if (graphs.size() == 1) label = graphs.front()->graph_label();
  out.graph = build_graph(edges, std::move(features), std::move(labels), label);
  return out;
}

BatchedGraph block_diagonal_batch(std::span<const Graph> graphs) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const Graph& g : graphs) ptrs.push_back(&g);
  return block_diagonal_batch(std::span<const Graph* const>(ptrs));
}

}  // namespace xgnn
