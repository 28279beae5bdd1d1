#pragma once

#include "xgnn/graph.hpp"
#include "xgnn/optim.hpp"
#include "xgnn/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xgnn {

enum class Family { Gcn, Gin, Sage, Pna, Sgc };
enum class Variant { Vanilla, Expander, ActivationOnly };
enum class Activation { Relu, Prelu, Tanh };
enum class HeadKind { Linear, Mlp3 };
enum class Task { NodeClass, GraphClass, GraphReg };

std::string_view to_string(Family f);
std::string_view to_string(Variant v);
std::string_view to_string(Activation a);
std::string_view to_string(HeadKind h);
std::string_view to_string(Task t);
Family parse_family(std::string_view s);
Variant parse_variant(std::string_view s);
Activation parse_activation(std::string_view s);
HeadKind parse_head(std::string_view s);
Task parse_task(std::string_view s);

struct ModelConfig {
  Family family = Family::Gcn;
  Variant variant = Variant::Vanilla;
  std::optional<double> density;  // expander only
  int layers = 2;                 // message-passing layers (propagation steps K for sgc)
  int hidden = 64;
  Activation activation = Activation::Relu;
  HeadKind head = HeadKind::Linear;
  Task task = Task::NodeClass;
  int output_dim = 2;
  bool use_initial_embedding = false;
  bool batchnorm = false;
  bool self_loops = true;  // GCN/SGC normalisation uses A + I
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on inconsistent combinations.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Keys absent from j keep their current value in c. Unknown keys are rejected.
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Sparse operators and graph facts one forward pass needs, built once per
/// graph (or mini-batch) and shared read-only.
struct GraphContext {
  GraphContext(const Graph& g, const ModelConfig& cfg, std::vector<NodeRange> ranges = {});

  Index num_nodes = 0;
  ad::Tensor features;
  std::shared_ptr<const SparseMatrix> norm_adj;  // gcn, sgc
  std::shared_ptr<const SparseMatrix> adj;       // gin, sage, pna
  std::shared_ptr<const SparseMatrix> mean_adj;  // pna
  std::shared_ptr<const Vector> log_degree;      // log(d + 1), pna
  std::vector<NodeRange> ranges;                 // readout segments (graph tasks)
  std::uint64_t fingerprint = 0;                 // content hash of structure + features
};

/// mean of log(d_i + 1) over the given nodes.
double pna_delta(const Graph& g, std::span<const Index> nodes);
double pna_delta(std::span<const Graph* const> graphs);

/// A^K X
Matrix propagate(const SparseMatrix& a, const Matrix& x, int k);

/// Caches A^K X per (content fingerprint, K). Thread-safe.
class PropagationCache {
 public:
  std::shared_ptr<const Matrix> get(const GraphContext& ctx, int k);
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::uint64_t, int>, std::shared_ptr<const Matrix>> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Pointwise nonlinearity; `slope` is used only for prelu.
struct Act {
  Activation kind = Activation::Relu;
  ad::Tensor slope;
  ad::Tensor operator()(const ad::Tensor& x) const;
};

// Single message-passing layers. A null weight selects the activation-only
// form. `flops`, when given, accumulates the cost of the layer.

ad::Tensor gcn_layer(const ad::Tensor& h, const GraphContext& ctx, const Parameter* w,
                     const Act& act, std::int64_t* flops = nullptr);
ad::Tensor gin_layer(const ad::Tensor& h, const GraphContext& ctx, const ad::Tensor& eps,
                     const Parameter* w, const Act& act, std::int64_t* flops = nullptr);
ad::Tensor sage_layer(const ad::Tensor& h, const GraphContext& ctx, const Parameter* w_pool,
                      const Parameter* w_update, const Act& act, std::int64_t* flops = nullptr);

struct PnaOperator {
  double delta = 1.0;
  static constexpr double std_eps = 1e-8;
  /// Four aggregators (mean, max, min, std) of neighbour rows.
  std::vector<ad::Tensor> aggregate(const ad::Tensor& h, const GraphContext& ctx) const;
  /// Identity, amplification log(d+1)/delta, attenuation delta/log(d+1);
  /// degrees below 1 are clamped to 1.
  std::vector<std::shared_ptr<const Vector>> scalers(const GraphContext& ctx) const;
  /// The 12 blocks, scaler-major: block 4*s + a.
  std::vector<ad::Tensor> blocks(const ad::Tensor& h, const GraphContext& ctx) const;
};

ad::Tensor pna_layer(const ad::Tensor& h, const GraphContext& ctx, const Parameter* w,
                     const Act& act, const PnaOperator& op, std::int64_t* flops = nullptr);

/// (A^K X) W
ad::Tensor sgc_forward(const Matrix& x, const SparseMatrix& a, int k, const ad::Tensor& w);

/// Per-range row means.
ad::Tensor mean_readout(const ad::Tensor& h, std::span<const NodeRange> ranges);

struct ParamCounts {
  Index total = 0;
  Index update_step = 0;
  Index embedding = 0;
  Index head = 0;
  Index norm_act = 0;
  double ratio_vs_vanilla = 1.0;
};

class Model {
 public:
  Model(const ModelConfig& cfg, Index input_dim, double pna_delta = 1.0);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const { return cfg_; }
  Index input_dim() const { return input_dim_; }
  /// Width of the node states entering the readout / head.
  Index embedding_dim() const { return embedding_dim_; }
  double pna_delta() const { return pna_.delta; }

  /// Node states after the last message-passing layer.
  ad::Tensor embed(const GraphContext& ctx, bool training, std::int64_t* flops = nullptr);
  /// Node-level (n x k) or graph-level (ranges x k) outputs.
  ad::Tensor forward(const GraphContext& ctx, bool training, std::int64_t* flops = nullptr);
  /// Applies the prediction head alone.
  ad::Tensor apply_head(const ad::Tensor& x, std::int64_t* flops = nullptr) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find(std::string_view name);

  /// Masks of every expander map, in creation order.
  std::vector<const ExpanderMask*> masks() const;

  /// Copies parameter values (and batch-norm running statistics).
  struct Snapshot {
    std::vector<Matrix> values;
    std::vector<Matrix> running;
  };
  Snapshot snapshot() const;
  void restore(const Snapshot& s);

 private:
  struct Layer {
    Index in = 0;
    Index out = 0;
    Parameter* w = nullptr;       // update map (W, or W2 for sage)
    Parameter* w_pool = nullptr;  // sage neighbour map W1
    Parameter* eps = nullptr;     // gin
    Parameter* slope = nullptr;   // prelu
    std::unique_ptr<ad::BatchNorm> bn;
  };
  struct Dense {
    Parameter* w = nullptr;
    Parameter* b = nullptr;
  };

  Parameter* add_param(std::string name, ParamRole role, Matrix value);
  Parameter* add_linear(std::string name, ParamRole role, Index in, Index out, bool masked);
  Act act_for(const Layer& layer) const;

  ModelConfig cfg_;
  Index input_dim_ = 0;
  Index embedding_dim_ = 0;
  PnaOperator pna_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::uint64_t init_ordinal_ = 0;
  std::uint64_t mask_ordinal_ = 0;
  Parameter* embed_ = nullptr;
  std::vector<Layer> layers_;
  std::vector<Dense> head_;
  std::shared_ptr<PropagationCache> cache_;
};

Model build_model(const ModelConfig& cfg, Index input_dim, double pna_delta = 1.0);

/// Counts by role; masked maps count in-mask entries only. The ratio divides
/// the total by that of the vanilla twin (same config, variant vanilla; gcn
/// for sgc).
ParamCounts count_params(const Model& model);

}  // namespace xgnn
