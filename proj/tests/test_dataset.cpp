#include "tmpdir.hpp"

#include "xgnn/dataset.hpp"
#include "xgnn/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace xgnn;

namespace {

void write_tiny_node_dataset(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  spit(dir / "meta.json",
       R"({"name":"tiny","task":"node-classification","num_nodes":4,"num_edges":3,)"
       R"("feature_dim":2,"num_classes":2})");
  spit(dir / "edges.tsv", "0\t1\n0\t2\n2\t3\n");
  spit(dir / "features.tsv", "1\t0\n0.5\t-1\n0\t0\n2\t1e-3\n");
  spit(dir / "labels.tsv", "0\n1\n0\n1\n");
  spit(dir / "split.tsv", "train\nval\ntest\nnone\n");
}

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

// Nearest-class-mean classifier on features only; fit on train, score on test.
double feature_only_accuracy(const NodeDataset& ds) {
  const int k = *ds.meta.num_classes;
  Matrix means = Matrix::Zero(k, ds.graph.feature_dim());
  std::vector<int> counts(k, 0);
  for (Index i : ds.indices(Split::Train)) {
    means.row(ds.graph.node_labels()[i]) += ds.graph.features().row(i);
    ++counts[ds.graph.node_labels()[i]];
  }
  for (int c = 0; c < k; ++c) means.row(c) /= std::max(counts[c], 1);
  const auto test = ds.indices(Split::Test);
  int hit = 0;
  for (Index i : test) {
    Index best = 0;
    double best_d = 1e300;
    for (int c = 0; c < k; ++c) {
      const double d = (ds.graph.features().row(i) - means.row(c)).squaredNorm();
      if (d < best_d) best_d = d, best = c;
    }
    hit += best == ds.graph.node_labels()[i];
  }
  return static_cast<double>(hit) / static_cast<double>(test.size());
}

}  // namespace

TEST(NodeDataset, LoadsTinyFixture) {
  TempDir tmp;
  write_tiny_node_dataset(tmp.path());
  const NodeDataset ds = load_node_dataset(tmp.path());
  EXPECT_EQ(ds.meta.name, "tiny");
  EXPECT_EQ(ds.graph.num_nodes(), 4);
  EXPECT_EQ(ds.graph.num_edges(), 3);
  EXPECT_EQ(ds.graph.degree(0), 2);
  EXPECT_DOUBLE_EQ(ds.graph.features()(3, 1), 1e-3);
  EXPECT_EQ(ds.indices(Split::Train), std::vector<Index>{0});
  EXPECT_EQ(ds.indices(Split::None), std::vector<Index>{3});
  EXPECT_EQ(peek_dataset_task(tmp.path()), DatasetTask::NodeClassification);
}

TEST(NodeDataset, RoundTrip) {
  TempDir tmp;
  NodeSynthOptions o;
  o.nodes = 40;
  o.seed = 3;
  const NodeDataset ds = synth_node_dataset(o);
  write_node_dataset(ds, tmp / "a");
  const NodeDataset back = load_node_dataset(tmp / "a");
  EXPECT_TRUE(back == ds);
}

TEST(NodeDataset, FeatureRowCountMismatchCitesFile) {
  TempDir tmp;
  write_tiny_node_dataset(tmp.path());
  spit(tmp / "features.tsv", "1\t0\n0.5\t-1\n0\t0\n");
  const std::string e = error_of([&] { load_node_dataset(tmp.path()); });
  EXPECT_NE(e.find("features.tsv"), std::string::npos) << e;
}

TEST(NodeDataset, ValidationErrorsNameFileAndLine) {
  struct Case {
    const char* file;
    const char* text;
    const char* expect;
  };
  const std::vector<Case> cases{
      {"edges.tsv", "0\t1\n2\t0\n2\t3\n", "edges.tsv line 2"},
      {"edges.tsv", "0\t1\n0\t1\n2\t3\n", "edges.tsv line 2"},
      {"edges.tsv", "0\t1\n0\t9\n2\t3\n", "edges.tsv line 2"},
      {"edges.tsv", "0\t1\n0\tx\n2\t3\n", "edges.tsv line 2"},
      {"edges.tsv", "0\t1\n0\t2\n", "edges.tsv"},
      {"features.tsv", "1\t0\n0.5\n0\t0\n2\t1\n", "features.tsv line 2"},
      {"features.tsv", "1\t0\n0.5\tnan\n0\t0\n2\t1\n", "features.tsv line 2"},
      {"labels.tsv", "0\n1\n2\n1\n", "labels.tsv line 3"},
      {"split.tsv", "train\nval\ntest\nholdout\n", "split.tsv line 4"},
      {"split.tsv", "train\nval\nval\nnone\n", "split.tsv"},
      {"meta.json", "{\"name\":\"x\"}", "meta.json"},
  };
  for (const Case& c : cases) {
    TempDir tmp;
    write_tiny_node_dataset(tmp.path());
    spit(tmp / c.file, c.text);
    const std::string e = error_of([&] { load_node_dataset(tmp.path()); });
    EXPECT_NE(e.find(c.expect), std::string::npos) << c.file << ": '" << e << "'";
  }
}

TEST(NodeDataset, MissingFileThrows) {
  TempDir tmp;
  write_tiny_node_dataset(tmp.path());
  std::filesystem::remove(tmp / "labels.tsv");
  EXPECT_THROW(load_node_dataset(tmp.path()), DataError);
}

TEST(GraphDataset, TwoLinesTwoGraphs) {
  TempDir tmp;
  spit(tmp / "meta.json",
       R"({"name":"pair","task":"graph-classification","num_graphs":2,"num_nodes":5,)"
       R"("num_edges":3,"feature_dim":1,"num_classes":2})");
  spit(tmp / "graphs.jsonl",
       "{\"edges\":[[0,1]],\"features\":[[1],[2]],\"label\":1}\n"
       "{\"edges\":[[0,1],[1,2]],\"features\":[[0],[0],[5]],\"label\":0}\n");
  const GraphDataset ds = load_graph_dataset(tmp.path());
  ASSERT_EQ(ds.graphs.size(), 2u);
  EXPECT_EQ(ds.graphs[0].num_nodes(), 2);
  EXPECT_EQ(*ds.graphs[0].graph_label(), 1.0);
  EXPECT_EQ(ds.graphs[1].num_edges(), 2);
  EXPECT_EQ(peek_dataset_task(tmp.path()), DatasetTask::GraphClassification);
}

TEST(GraphDataset, RegressionLabelsAreReal) {
  TempDir tmp;
  spit(tmp / "meta.json",
       R"({"name":"r","task":"graph-regression","num_graphs":1,"num_nodes":2,)"
       R"("num_edges":1,"feature_dim":1})");
  spit(tmp / "graphs.jsonl", "{\"edges\":[[0,1]],\"features\":[[1],[2]],\"label\":0.25}\n");
  EXPECT_DOUBLE_EQ(*load_graph_dataset(tmp.path()).graphs[0].graph_label(), 0.25);
}

TEST(GraphDataset, ClassificationRejectsRealLabel) {
  TempDir tmp;
  spit(tmp / "meta.json",
       R"({"name":"c","task":"graph-classification","num_graphs":1,"num_nodes":2,)"
       R"("num_edges":1,"feature_dim":1,"num_classes":2})");
  spit(tmp / "graphs.jsonl", "{\"edges\":[[0,1]],\"features\":[[1],[2]],\"label\":0.5}\n");
  EXPECT_NE(error_of([&] { load_graph_dataset(tmp.path()); }).find("line 1"), std::string::npos);
}

TEST(GraphDataset, EdgeOutOfRangeCitesLine) {
  TempDir tmp;
  spit(tmp / "meta.json",
       R"({"name":"c","task":"graph-classification","num_graphs":2,"num_nodes":4,)"
       R"("num_edges":2,"feature_dim":1,"num_classes":2})");
  spit(tmp / "graphs.jsonl",
       "{\"edges\":[[0,1]],\"features\":[[1],[2]],\"label\":0}\n"
       "{\"edges\":[[0,2]],\"features\":[[1],[2]],\"label\":1}\n");
  const std::string e = error_of([&] { load_graph_dataset(tmp.path()); });
  EXPECT_NE(e.find("graphs.jsonl line 2"), std::string::npos) << e;
}

TEST(GraphDataset, CountMismatch) {
  TempDir tmp;
  spit(tmp / "meta.json",
       R"({"name":"c","task":"graph-classification","num_graphs":3,"num_nodes":2,)"
       R"("num_edges":1,"feature_dim":1,"num_classes":2})");
  spit(tmp / "graphs.jsonl", "{\"edges\":[[0,1]],\"features\":[[1],[2]],\"label\":0}\n");
  EXPECT_THROW(load_graph_dataset(tmp.path()), DataError);
}

TEST(GraphDataset, RoundTrip) {
  TempDir tmp;
  GraphSynthOptions o;
  o.num_graphs = 12;
  for (bool regression : {false, true}) {
    o.regression = regression;
    const GraphDataset ds = synth_graph_dataset(o);
    const auto dir = tmp / (regression ? "r" : "c");
    write_graph_dataset(ds, dir);
    EXPECT_TRUE(load_graph_dataset(dir) == ds);
  }
}

TEST(SynthNode, SameSeedSameBytes) {
  TempDir tmp;
  NodeSynthOptions o;
  o.seed = 11;
  write_node_dataset(synth_node_dataset(o), tmp / "a");
  write_node_dataset(synth_node_dataset(o), tmp / "b");
  for (const char* f : {"meta.json", "edges.tsv", "features.tsv", "labels.tsv", "split.tsv"})
    EXPECT_EQ(slurp(tmp / "a" / f), slurp(tmp / "b" / f)) << f;
}

TEST(SynthNode, SplitProportions) {
  NodeSynthOptions o;
  o.nodes = 100;
  const NodeDataset ds = synth_node_dataset(o);
  EXPECT_EQ(ds.indices(Split::Train).size(), 60u);
  EXPECT_EQ(ds.indices(Split::Val).size(), 20u);
  EXPECT_EQ(ds.indices(Split::Test).size(), 20u);
}

TEST(SynthNode, NoSeparationNoSignal) {
  NodeSynthOptions o;
  o.nodes = 3000;
  o.classes = 3;
  o.separation = 0.0;
  o.p_intra = o.p_inter = 0.001;
  EXPECT_NEAR(feature_only_accuracy(synth_node_dataset(o)), 1.0 / 3.0, 0.06);
}

TEST(SynthNode, LargeSeparationIsSeparable) {
  NodeSynthOptions o;
  o.nodes = 600;
  o.separation = 8.0;
  EXPECT_GE(feature_only_accuracy(synth_node_dataset(o)), 0.99);
}

TEST(SynthGraph, ExactClassBalance) {
  GraphSynthOptions o;
  o.num_graphs = 21;
  const GraphDataset ds = synth_graph_dataset(o);
  int ones = 0;
  for (const Graph& g : ds.graphs) ones += *g.graph_label() == 1.0;
  EXPECT_EQ(ones, 10);
  EXPECT_EQ(ds.meta.num_graphs, 21);
}

TEST(SynthGraph, Deterministic) {
  GraphSynthOptions o;
  o.seed = 4;
  EXPECT_TRUE(synth_graph_dataset(o) == synth_graph_dataset(o));
  GraphSynthOptions other = o;
  other.seed = 5;
  EXPECT_FALSE(synth_graph_dataset(o) == synth_graph_dataset(other));
}

TEST(SynthGraph, MeanDegreeSeparatesClasses) {
  GraphSynthOptions o;
  o.num_graphs = 400;
  o.min_nodes = o.max_nodes = 20;
  const GraphDataset ds = synth_graph_dataset(o);
  // ER(0.1) vs ER(0.4) at n = 20: expected mean degree 1.9 vs 7.6
  int hit = 0;
  for (const Graph& g : ds.graphs) {
    const double mean_degree = 2.0 * g.num_edges() / g.num_nodes();
    hit += (mean_degree > 4.75) == (*g.graph_label() == 1.0);
  }
  EXPECT_GE(hit / 400.0, 0.95);
}

TEST(SynthGraph, FeaturesAreOneAndDegree) {
  const GraphDataset ds = synth_graph_dataset({});
  const Graph& g = ds.graphs[0];
  for (Index i = 0; i < g.num_nodes(); ++i) {
    EXPECT_EQ(g.features()(i, 0), 1.0);
    EXPECT_EQ(g.features()(i, 1), static_cast<double>(g.degree(i)));
  }
}

TEST(SynthGraph, RegressionTargetIsMeanDegree) {
  GraphSynthOptions o;
  o.regression = true;
  const GraphDataset ds = synth_graph_dataset(o);
  EXPECT_EQ(ds.meta.task, DatasetTask::GraphRegression);
  const Graph& g = ds.graphs[3];
  EXPECT_NEAR(*g.graph_label(), 2.0 * g.num_edges() / g.num_nodes(), 1e-12);
}
