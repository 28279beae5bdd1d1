#include "xgnn/dataset.hpp"

#include "xgnn/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

namespace xgnn {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class LineReader {
 public:
  explicit LineReader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
  }
  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path_.filename().string() + " line " + std::to_string(line_no_) + ": " + what);
  }
  std::size_t line_no() const { return line_no_; }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

json read_meta(const fs::path& dir) {
  const fs::path path = dir / "meta.json";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("meta.json: " + std::string(e.what()));
  }
}

DatasetMeta parse_meta(const json& j) {
  DatasetMeta m;
  try {
    m.name = j.at("name").get<std::string>();
    m.task = parse_dataset_task(j.at("task").get<std::string>());
    m.num_nodes = j.at("num_nodes").get<Index>();
    m.num_edges = j.at("num_edges").get<Index>();
    m.feature_dim = j.at("feature_dim").get<Index>();
    m.num_graphs = j.value("num_graphs", Index{1});
    if (j.contains("num_classes") && !j.at("num_classes").is_null())
      m.num_classes = j.at("num_classes").get<int>();
  } catch (const json::exception& e) {
    throw DataError("meta.json: " + std::string(e.what()));
  } catch (const InvalidArgument& e) {
    throw DataError("meta.json: " + std::string(e.what()));
  }
  if (m.num_nodes < 0 || m.num_edges < 0 || m.feature_dim < 1 || m.num_graphs < 1)
    throw DataError("meta.json: counts must be non-negative and feature_dim >= 1");
  if (m.task != DatasetTask::GraphRegression && (!m.num_classes || *m.num_classes < 1))
    throw DataError("meta.json: classification datasets need num_classes >= 1");
  return m;
}

json meta_json(const DatasetMeta& m) {
  json j{{"name", m.name},
         {"task", to_string(m.task)},
         {"num_nodes", m.num_nodes},
         {"num_edges", m.num_edges},
         {"feature_dim", m.feature_dim}};
  if (m.task != DatasetTask::NodeClassification) j["num_graphs"] = m.num_graphs;
  j["num_classes"] = m.num_classes ? json(*m.num_classes) : json(nullptr);
  return j;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

std::string_view to_string(DatasetTask t) {
  switch (t) {
    case DatasetTask::NodeClassification: return "node-classification";
    case DatasetTask::GraphClassification: return "graph-classification";
    case DatasetTask::GraphRegression: return "graph-regression";
  }
  return "?";
}

DatasetTask parse_dataset_task(std::string_view s) {
  if (s == "node-classification") return DatasetTask::NodeClassification;
  if (s == "graph-classification") return DatasetTask::GraphClassification;
  if (s == "graph-regression") return DatasetTask::GraphRegression;
  throw InvalidArgument("unknown dataset task '" + std::string(s) + "'");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::None: return "none";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "none") return Split::None;
  throw InvalidArgument("unknown split token '" + std::string(s) + "'");
}

std::vector<Index> NodeDataset::indices(Split s) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(static_cast<Index>(i));
  return out;
}

DatasetTask peek_dataset_task(const fs::path& dir) { return parse_meta(read_meta(dir)).task; }

NodeDataset load_node_dataset(const fs::path& dir) {
  NodeDataset ds;
  ds.meta = parse_meta(read_meta(dir));
  if (ds.meta.task != DatasetTask::NodeClassification)
    throw DataError("meta.json: task is " + std::string(to_string(ds.meta.task)) +
                    ", expected node-classification");
  const Index n = ds.meta.num_nodes;
  const Index dim = ds.meta.feature_dim;
  std::string line;

  std::vector<Edge> edges;
  {
    LineReader r(dir / "edges.tsv");
    Edge prev{-1, -1};
    while (r.next(line)) {
      const auto f = split_tabs(line);
      Edge e;
      if (f.size() != 2 || !parse_number(f[0], e.u) || !parse_number(f[1], e.v))
        r.fail("expected \"u<TAB>v\"");
      if (e.u < 0 || e.v >= n) r.fail("node index out of range [0, " + std::to_string(n) + ")");
      if (e.u >= e.v) r.fail("edge must satisfy u < v");
      if (std::tie(e.u, e.v) <= std::tie(prev.u, prev.v)) r.fail("edges not strictly sorted");
      edges.push_back(e);
      prev = e;
    }
    if (static_cast<Index>(edges.size()) != ds.meta.num_edges)
      throw DataError("edges.tsv: " + std::to_string(edges.size()) + " edges, meta.json says " +
                      std::to_string(ds.meta.num_edges));
  }

  Matrix features(n, dim);
  {
    LineReader r(dir / "features.tsv");
    Index row = 0;
    while (r.next(line)) {
      if (row >= n) r.fail("more feature rows than meta.json num_nodes " + std::to_string(n));
      const auto f = split_tabs(line);
      if (static_cast<Index>(f.size()) != dim)
        r.fail(std::to_string(f.size()) + " values, expected feature_dim " + std::to_string(dim));
      for (Index c = 0; c < dim; ++c) {
        double v = 0.0;
        if (!parse_number(f[c], v) || !std::isfinite(v)) r.fail("malformed value in column " + std::to_string(c));
        features(row, c) = v;
      }
      ++row;
    }
    if (row != n)
      throw DataError("features.tsv: " + std::to_string(row) + " rows, meta.json says " +
                      std::to_string(n) + " nodes");
  }

  std::vector<int> labels;
  {
    LineReader r(dir / "labels.tsv");
    while (r.next(line)) {
      int y = 0;
      if (!parse_number(std::string_view(line), y)) r.fail("expected one integer label");
      if (y < 0 || y >= *ds.meta.num_classes)
        r.fail("label " + std::to_string(y) + " outside [0, " + std::to_string(*ds.meta.num_classes) + ")");
      labels.push_back(y);
    }
    if (static_cast<Index>(labels.size()) != n)
      throw DataError("labels.tsv: " + std::to_string(labels.size()) + " rows, meta.json says " +
                      std::to_string(n) + " nodes");
  }

  {
    LineReader r(dir / "split.tsv");
    while (r.next(line)) {
      try {
        ds.split.push_back(parse_split(line));
      } catch (const InvalidArgument& e) {
        r.fail(e.what());
      }
    }
    if (static_cast<Index>(ds.split.size()) != n)
      throw DataError("split.tsv: " + std::to_string(ds.split.size()) + " rows, meta.json says " +
                      std::to_string(n) + " nodes");
    for (Split s : {Split::Train, Split::Val, Split::Test})
      if (std::find(ds.split.begin(), ds.split.end(), s) == ds.split.end())
        throw DataError("split.tsv: no node assigned to " + std::string(to_string(s)));
  }

  try {
    ds.graph = build_graph(edges, std::move(features), std::move(labels));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("edges.tsv: ") + e.what());
  }
  return ds;
}

void write_node_dataset(const NodeDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "meta.json", meta_json(ds.meta).dump(2) + "\n");
  std::string text;
  for (const Edge& e : ds.graph.edge_list())
    text += std::to_string(e.u) + "\t" + std::to_string(e.v) + "\n";
  write_text(dir / "edges.tsv", text);
  text.clear();
  const Matrix& x = ds.graph.features();
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      if (c) text += '\t';
      text += format_double(x(r, c));
    }
    text += '\n';
  }
  write_text(dir / "features.tsv", text);
  text.clear();
  for (int y : ds.graph.node_labels()) text += std::to_string(y) + "\n";
  write_text(dir / "labels.tsv", text);
  text.clear();
  for (Split s : ds.split) text += std::string(to_string(s)) + "\n";
  write_text(dir / "split.tsv", text);
}

GraphDataset load_graph_dataset(const fs::path& dir) {
  GraphDataset ds;
  ds.meta = parse_meta(read_meta(dir));
  if (ds.meta.task == DatasetTask::NodeClassification)
    throw DataError("meta.json: task is node-classification, expected a graph task");
  const bool classification = ds.meta.task == DatasetTask::GraphClassification;
  LineReader r(dir / "graphs.jsonl");
  std::string line;
  Index total_nodes = 0;
  Index total_edges = 0;
  while (r.next(line)) {
    if (line.empty()) r.fail("empty line");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      r.fail(std::string("invalid JSON: ") + e.what());
    }
    std::vector<Edge> edges;
    Matrix features;
    double label = 0.0;
    try {
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) r.fail("edges must be [u, v] pairs");
        edges.push_back({e[0].get<Index>(), e[1].get<Index>()});
      }
      const auto& rows = j.at("features");
      features.resize(static_cast<Index>(rows.size()), ds.meta.feature_dim);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != ds.meta.feature_dim)
          r.fail("feature row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                 " values, expected " + std::to_string(ds.meta.feature_dim));
        for (Index c = 0; c < ds.meta.feature_dim; ++c)
          features(static_cast<Index>(i), c) = rows[i][c].get<double>();
      }
      const auto& y = j.at("label");
      if (classification) {
        if (!y.is_number_integer()) r.fail("classification label must be an integer");
        const int cls = y.get<int>();
        if (cls < 0 || cls >= *ds.meta.num_classes) r.fail("label outside [0, num_classes)");
        label = cls;
      } else {
        if (!y.is_number()) r.fail("regression label must be a number");
        label = y.get<double>();
      }
    } catch (const json::exception& e) {
      r.fail(e.what());
    }
    try {
      ds.graphs.push_back(build_graph(edges, std::move(features), {}, label));
    } catch (const InvalidArgument& e) {
      r.fail(e.what());
    }
    total_nodes += ds.graphs.back().num_nodes();
    total_edges += ds.graphs.back().num_edges();
  }
  const auto mismatch = [](const char* what, Index got, Index want) {
    return DataError("graphs.jsonl: " + std::to_string(got) + " " + what + ", meta.json says " +
                     std::to_string(want));
  };
  if (static_cast<Index>(ds.graphs.size()) != ds.meta.num_graphs)
    throw mismatch("graphs", static_cast<Index>(ds.graphs.size()), ds.meta.num_graphs);
  if (total_nodes != ds.meta.num_nodes) throw mismatch("nodes", total_nodes, ds.meta.num_nodes);
  if (total_edges != ds.meta.num_edges) throw mismatch("edges", total_edges, ds.meta.num_edges);
  return ds;
}

void write_graph_dataset(const GraphDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "meta.json", meta_json(ds.meta).dump(2) + "\n");
  std::string text;
  const bool classification = ds.meta.task == DatasetTask::GraphClassification;
  for (const Graph& g : ds.graphs) {
    text += "{\"edges\":[";
    bool first = true;
    for (const Edge& e : g.edge_list()) {
      text += (first ? "[" : ",[") + std::to_string(e.u) + "," + std::to_string(e.v) + "]";
      first = false;
    }
    text += "],\"features\":[";
    for (Index i = 0; i < g.num_nodes(); ++i) {
      text += i ? ",[" : "[";
      for (Index c = 0; c < g.feature_dim(); ++c)
        text += (c ? "," : "") + format_double(g.features()(i, c));
      text += "]";
    }
    const double y = g.graph_label().value_or(0.0);
    text += "],\"label\":";
    text += classification ? std::to_string(static_cast<int>(y)) : format_double(y);
    text += "}\n";
  }
  write_text(dir / "graphs.jsonl", text);
}

NodeDataset synth_node_dataset(const NodeSynthOptions& opt) {
  if (opt.nodes < 5) throw InvalidArgument("synthetic node dataset needs >= 5 nodes");
  if (opt.classes < 1 || opt.classes > opt.feature_dim)
    throw InvalidArgument("need 1 <= classes <= feature_dim");
  if (opt.separation < 0.0) throw InvalidArgument("separation must be >= 0");
  Rng rng(derive_seed(opt.seed, Stream::Synth, 0));
  const Index n = opt.nodes;

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[i] = static_cast<int>(i % opt.classes);
  rng.shuffle(labels.begin(), labels.end());

  std::vector<Edge> edges;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v)
      if (rng.bernoulli(labels[u] == labels[v] ? opt.p_intra : opt.p_inter)) edges.push_back({u, v});

  const double offset = opt.separation / std::sqrt(2.0);
  Matrix x(n, opt.feature_dim);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < opt.feature_dim; ++c) x(i, c) = rng.normal();
    x(i, labels[i]) += offset;
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order.begin(), order.end());
  NodeDataset ds;
  ds.split.assign(static_cast<std::size_t>(n), Split::Test);
  const Index n_train = (n * 6) / 10;
  const Index n_val = (n * 2) / 10;
  for (Index k = 0; k < n_train; ++k) ds.split[order[k]] = Split::Train;
  for (Index k = n_train; k < n_train + n_val; ++k) ds.split[order[k]] = Split::Val;

  ds.graph = build_graph(edges, std::move(x), std::move(labels));
  ds.meta = {"synthetic-sbm", DatasetTask::NodeClassification, n, 1, ds.graph.num_edges(),
             opt.feature_dim, opt.classes};
  return ds;
}

namespace {
GraphSynthOptions validated(const GraphSynthOptions& opt) {
  for (double p : {opt.p_a, opt.p_b})
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("edge probabilities must lie in [0, 1]");
  if (opt.num_graphs < 2) throw InvalidArgument("need at least two graphs");
  if (opt.min_nodes < 1 || opt.max_nodes < opt.min_nodes)
    throw InvalidArgument("node range must satisfy 1 <= min <= max");
  return opt;
}
}  // namespace

GraphDataset synth_graph_dataset(const GraphSynthOptions& options) {
  const GraphSynthOptions opt = validated(options);
  Rng rng(derive_seed(opt.seed, Stream::Synth, 1));
  std::vector<int> classes(static_cast<std::size_t>(opt.num_graphs));
  for (Index k = 0; k < opt.num_graphs; ++k) classes[k] = k < (opt.num_graphs + 1) / 2 ? 0 : 1;
  rng.shuffle(classes.begin(), classes.end());

  GraphDataset ds;
  Index total_nodes = 0;
  Index total_edges = 0;
  for (int cls : classes) {
    const Index n = opt.min_nodes + static_cast<Index>(rng.below(
                                        static_cast<std::uint64_t>(opt.max_nodes - opt.min_nodes + 1)));
    std::vector<Edge> edges;
    for (Index u = 0; u < n; ++u)
      for (Index v = u + 1; v < n; ++v) {
        double p = 0.0;
        if (opt.mode == GraphSynthMode::ErDensity)
          p = cls == 0 ? opt.p_a : opt.p_b;
        else if (cls == 0)
          p = 0.5 * (opt.p_a + opt.p_b);
        else
          p = ((u < n / 2) == (v < n / 2)) ? opt.p_a : opt.p_b;
        if (rng.bernoulli(p)) edges.push_back({u, v});
      }
    std::vector<Index> deg(static_cast<std::size_t>(n), 0);
    for (const Edge& e : edges) {
      ++deg[e.u];
      ++deg[e.v];
    }
    Matrix x(n, 2);
    for (Index i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = static_cast<double>(deg[i]);
    }
    const double label =
        opt.regression ? 2.0 * static_cast<double>(edges.size()) / static_cast<double>(n) : cls;
    ds.graphs.push_back(build_graph(edges, std::move(x), {}, label));
    total_nodes += n;
    total_edges += static_cast<Index>(edges.size());
  }
  ds.meta.name = opt.mode == GraphSynthMode::ErDensity ? "synthetic-er" : "synthetic-community";
  ds.meta.task = opt.regression ? DatasetTask::GraphRegression : DatasetTask::GraphClassification;
  ds.meta.num_nodes = total_nodes;
  ds.meta.num_graphs = opt.num_graphs;
  ds.meta.num_edges = total_edges;
  ds.meta.feature_dim = 2;
  if (!opt.regression) ds.meta.num_classes = 2;
  return ds;
}

}  // namespace xgnn
