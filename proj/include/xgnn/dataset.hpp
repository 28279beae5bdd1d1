#pragma once

#include "xgnn/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xgnn {

enum class DatasetTask { NodeClassification, GraphClassification, GraphRegression };

std::string_view to_string(DatasetTask t);
DatasetTask parse_dataset_task(std::string_view s);

struct DatasetMeta {
  std::string name;
  DatasetTask task = DatasetTask::NodeClassification;
  Index num_nodes = 0;   // total over all graphs for graph datasets
  Index num_graphs = 1;
  Index num_edges = 0;   // undirected, total over all graphs
  Index feature_dim = 0;
  std::optional<int> num_classes;
  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

enum class Split : std::uint8_t { Train, Val, Test, None };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct NodeDataset {
  DatasetMeta meta;
  Graph graph;
  std::vector<Split> split;

  /// Node indices assigned to the given split, ascending.
  std::vector<Index> indices(Split s) const;
  friend bool operator==(const NodeDataset&, const NodeDataset&) = default;
};

/// Graph labels live in Graph::graph_label (integral values for classification).
struct GraphDataset {
  DatasetMeta meta;
  std::vector<Graph> graphs;
  friend bool operator==(const GraphDataset&, const GraphDataset&) = default;
};

/// Reads meta.json, edges.tsv, features.tsv, labels.tsv and split.tsv.
/// Any malformed line or count mismatch throws DataError naming file and line.
NodeDataset load_node_dataset(const std::filesystem::path& dir);
void write_node_dataset(const NodeDataset& ds, const std::filesystem::path& dir);

/// Reads meta.json and graphs.jsonl (one {"edges", "features", "label"} object per line).
GraphDataset load_graph_dataset(const std::filesystem::path& dir);
void write_graph_dataset(const GraphDataset& ds, const std::filesystem::path& dir);

/// Either kind of dataset, dispatched on meta.json's task.
DatasetTask peek_dataset_task(const std::filesystem::path& dir);

struct NodeSynthOptions {
  Index nodes = 300;
  int classes = 3;
  /// Distance between any two class means, in noise standard deviations.
  double separation = 2.0;
  Index feature_dim = 8;
  double p_intra = 0.05;
  double p_inter = 0.005;
  std::uint64_t seed = 0;
};

/// Stochastic block model with one community per class and Gaussian features
/// around class means (separation / sqrt(2)) * e_c. Random 60/20/20 split.
NodeDataset synth_node_dataset(const NodeSynthOptions& opt);

enum class GraphSynthMode {
  ErDensity,  // class 0 ~ ER(p_a), class 1 ~ ER(p_b)
  Community,  // class 0 ~ ER((p_a + p_b) / 2), class 1 ~ two blocks, p_a inside, p_b across
};

struct GraphSynthOptions {
  Index num_graphs = 200;
  Index min_nodes = 15;
  Index max_nodes = 25;
  double p_a = 0.1;
  double p_b = 0.4;
  GraphSynthMode mode = GraphSynthMode::ErDensity;
  /// Regression target: mean degree instead of the class.
  bool regression = false;
  std::uint64_t seed = 0;
};

/// ceil(num/2) graphs of class 0 and floor(num/2) of class 1, in shuffled
/// order. Node features are [1, degree].
GraphDataset synth_graph_dataset(const GraphSynthOptions& opt);

}  // namespace xgnn
