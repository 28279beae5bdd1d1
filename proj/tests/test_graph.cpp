#include "xgnn/checks.hpp"
#include "xgnn/graph.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace xgnn;

namespace {

Graph make(Index n, std::vector<Edge> edges, Index s = 1) {
  Matrix x(n, s);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < s; ++j) x(i, j) = static_cast<double>(10 * i + j);
  return build_graph(edges, x);
}

std::vector<Index> nbrs(const Graph& g, Index i) {
  auto s = g.neighbors(i);
  return {s.begin(), s.end()};
}

}  // namespace

TEST(BuildGraph, SingleEdgeIsSymmetrised) {
  const Graph g = make(2, {{0, 1}});
  EXPECT_EQ(nbrs(g, 0), std::vector<Index>{1});
  EXPECT_EQ(nbrs(g, 1), std::vector<Index>{0});
  EXPECT_EQ(g.num_edges(), 1);
}

TEST(BuildGraph, NoEdgesGivesIsolatedNodes) {
  const Graph g = make(3, {});
  for (Index i = 0; i < 3; ++i) EXPECT_TRUE(g.neighbors(i).empty());
}

TEST(BuildGraph, TriangleDegrees) {
  const Graph g = make(3, {{0, 1}, {1, 2}, {0, 2}});
  EXPECT_EQ(degrees(g), (std::vector<Index>{2, 2, 2}));
}

TEST(BuildGraph, RejectsBadEdges) {
  EXPECT_THROW(make(2, {{0, 2}}), InvalidArgument);
  EXPECT_THROW(make(2, {{1, 1}}), InvalidArgument);
  EXPECT_THROW(make(2, {{0, 1}, {1, 0}}), InvalidArgument);
  EXPECT_THROW(make(2, {{-1, 0}}), InvalidArgument);
  try {
    make(3, {{0, 1}, {2, 2}});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("edge 1"), std::string::npos) << e.what();
  }
}

TEST(BuildGraph, RejectsWrongLabelCount) {
  EXPECT_THROW(build_graph({}, Matrix::Zero(3, 1), {0, 1}), InvalidArgument);
}

TEST(Degrees, IsolatedAndStar) {
  EXPECT_EQ(degrees(make(1, {})), std::vector<Index>{0});
  EXPECT_EQ(degrees(make(4, {{0, 1}, {0, 2}, {0, 3}})), (std::vector<Index>{3, 1, 1, 1}));
}

TEST(Normalize, SingleNodeWithSelfLoop) {
  const SparseMatrix a = normalize_adjacency(make(1, {}));
  ASSERT_EQ(a.nnz(), 1);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 1.0);
}

TEST(Normalize, PathOfTwoIsAllHalf) {
  const Matrix a = normalize_adjacency(make(2, {{0, 1}})).to_dense();
  EXPECT_TRUE(a.isApprox(Matrix::Constant(2, 2, 0.5)));
  for (Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(a.data()[i], 0.5);
}

TEST(Normalize, TriangleIsAllThird) {
  const Matrix a = normalize_adjacency(make(3, {{0, 1}, {1, 2}, {0, 2}})).to_dense();
  for (Index i = 0; i < 9; ++i) EXPECT_NEAR(a.data()[i], 1.0 / 3.0, 1e-15);
}

TEST(Normalize, WithoutSelfLoopsIsolatedNodeThrows) {
  EXPECT_THROW(normalize_adjacency(make(3, {{0, 1}}), false), InvalidArgument);
  const Matrix a = normalize_adjacency(make(2, {{0, 1}}), false).to_dense();
  EXPECT_DOUBLE_EQ(a(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(a(0, 1), 1.0);
}

TEST(Normalize, IsSymmetric) {
  const Graph g = random_graph(12, 0.3, 2, 4);
  const Matrix a = normalize_adjacency(g).to_dense();
  EXPECT_TRUE(a.isApprox(a.transpose()));
}

TEST(MeanAdjacency, RowsSumToOne) {
  const Graph g = make(4, {{0, 1}, {0, 2}});
  const Matrix a = mean_adjacency(g).to_dense();
  EXPECT_DOUBLE_EQ(a.row(0).sum(), 1.0);
  EXPECT_DOUBLE_EQ(a(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(a.row(3).sum(), 0.0);
}

TEST(SparseMatrix, MultiplyAndTranspose) {
  const SparseMatrix a(2, 3, {0, 2, 3}, {0, 2, 1}, {1.0, 2.0, 3.0});
  Matrix x(3, 1);
  x << 1, 2, 3;
  Matrix y = a.multiply(x);
  EXPECT_DOUBLE_EQ(y(0, 0), 7.0);
  EXPECT_DOUBLE_EQ(y(1, 0), 6.0);
  Matrix z(2, 1);
  z << 1, 1;
  EXPECT_TRUE(a.multiply_transposed(z).isApprox(a.to_dense().transpose() * z));
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), InvalidArgument);
}

TEST(Permute, IdentityKeepsGraph) {
  const Graph g = random_graph(7, 0.4, 3, 1);
  const std::vector<Index> id{0, 1, 2, 3, 4, 5, 6};
  EXPECT_TRUE(permute_nodes(g, id) == g);
}

TEST(Permute, SwapOnPathSwapsFeatures) {
  const Graph g = make(2, {{0, 1}});
  const std::vector<Index> swap{1, 0};
  const Graph p = permute_nodes(g, swap);
  EXPECT_EQ(p.num_edges(), 1);
  EXPECT_DOUBLE_EQ(p.features()(0, 0), g.features()(1, 0));
  EXPECT_DOUBLE_EQ(p.features()(1, 0), g.features()(0, 0));
}

TEST(Permute, DegreesFollowNodes) {
  const Graph g = random_graph(10, 0.3, 1, 2);
  const std::vector<Index> perm{3, 7, 0, 9, 1, 4, 8, 2, 6, 5};
  const auto before = degrees(g);
  const auto after = degrees(permute_nodes(g, perm));
  for (Index i = 0; i < 10; ++i) EXPECT_EQ(after[perm[i]], before[i]);
}

TEST(Permute, RejectsNonPermutation) {
  const Graph g = make(3, {});
  const std::vector<Index> bad{0, 0, 1};
  EXPECT_THROW(permute_nodes(g, bad), InvalidArgument);
}

TEST(Batch, TwoPaths) {
  const std::vector<Graph> gs{make(2, {{0, 1}}), make(2, {{0, 1}})};
  const BatchedGraph b = block_diagonal_batch(gs);
  EXPECT_EQ(b.graph.num_nodes(), 4);
  EXPECT_EQ(b.graph.num_edges(), 2);
  ASSERT_EQ(b.ranges.size(), 2u);
  EXPECT_EQ(b.ranges[0], (NodeRange{0, 2}));
  EXPECT_EQ(b.ranges[1], (NodeRange{2, 4}));
  EXPECT_EQ(nbrs(b.graph, 2), std::vector<Index>{3});
}

TEST(Batch, SingleGraphUnchanged) {
  const Graph g = random_graph(5, 0.5, 2, 3);
  const std::vector<Graph> gs{g};
  const BatchedGraph b = block_diagonal_batch(gs);
  EXPECT_TRUE(b.graph == g);
  ASSERT_EQ(b.ranges.size(), 1u);
  EXPECT_EQ(b.ranges[0], (NodeRange{0, 5}));
}

TEST(Batch, TriangleAndIsolated) {
  const std::vector<Graph> gs{make(3, {{0, 1}, {1, 2}, {0, 2}}), make(1, {})};
  const BatchedGraph b = block_diagonal_batch(gs);
  EXPECT_EQ(b.graph.num_nodes(), 4);
  EXPECT_EQ(b.graph.num_edges(), 3);
  EXPECT_TRUE(b.graph.neighbors(3).empty());
}

TEST(Batch, FeatureWidthMismatchThrows) {
  const std::vector<Graph> gs{make(2, {}, 1), make(2, {}, 2)};
  EXPECT_THROW(block_diagonal_batch(gs), InvalidArgument);
}

TEST(Graph, EdgeListRoundTrip) {
  const Graph g = random_graph(9, 0.4, 1, 11);
  const auto edges = g.edge_list();
  const Graph h = build_graph(edges, g.features());
  EXPECT_TRUE(g == h);
  for (const Edge& e : edges) EXPECT_LT(e.u, e.v);
}
