#include "xgnn/model.hpp"

#include "xgnn/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

namespace xgnn {
namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             const char* what) {
  for (const auto& [name, value] : table)
    if (name == s) return value;
  std::string msg = std::string("unknown ") + what + " '" + std::string(s) + "' (expected";
  for (const auto& [name, value] : table) msg += " " + std::string(name);
  throw InvalidArgument(msg + ")");
}

template <class E, std::size_t N>
std::string_view enum_name(E e, const std::array<std::pair<std::string_view, E>, N>& table) {
  for (const auto& [name, value] : table)
    if (value == e) return name;
  return "?";
}

constexpr std::array<std::pair<std::string_view, Family>, 5> kFamilies{{
    {"gcn", Family::Gcn}, {"gin", Family::Gin}, {"sage", Family::Sage},
    {"pna", Family::Pna}, {"sgc", Family::Sgc}}};
constexpr std::array<std::pair<std::string_view, Variant>, 3> kVariants{{
    {"vanilla", Variant::Vanilla}, {"expander", Variant::Expander},
    {"activation-only", Variant::ActivationOnly}}};
constexpr std::array<std::pair<std::string_view, Activation>, 3> kActivations{{
    {"relu", Activation::Relu}, {"prelu", Activation::Prelu}, {"tanh", Activation::Tanh}}};
constexpr std::array<std::pair<std::string_view, HeadKind>, 2> kHeads{{
    {"linear", HeadKind::Linear}, {"mlp3", HeadKind::Mlp3}}};
constexpr std::array<std::pair<std::string_view, Task>, 3> kTasks{{
    {"node-class", Task::NodeClass}, {"graph-class", Task::GraphClass},
    {"graph-reg", Task::GraphReg}}};

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

Matrix glorot(Index in, Index out, const ExpanderMask* mask, Rng& rng) {
  const double ones = mask ? static_cast<double>(mask->ones()) : static_cast<double>(in * out);
  const double fan_in = ones / static_cast<double>(out);
  const double fan_out = ones / static_cast<double>(in);
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(in, out);
  for (Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-limit, limit);
  return w;
}

ad::Tensor linear(const ad::Tensor& x, const Parameter& w, std::int64_t* flops) {
  if (flops) *flops += 2 * x.rows() * w.count();
  return ad::matmul(x, w.effective());
}

void add_spmm_flops(std::int64_t* flops, const SparseMatrix& a, Index width) {
  if (flops) *flops += 2 * a.nnz() * width;
}

}  // namespace

std::string_view to_string(Family f) { return enum_name(f, kFamilies); }
std::string_view to_string(Variant v) { return enum_name(v, kVariants); }
std::string_view to_string(Activation a) { return enum_name(a, kActivations); }
std::string_view to_string(HeadKind h) { return enum_name(h, kHeads); }
std::string_view to_string(Task t) { return enum_name(t, kTasks); }
Family parse_family(std::string_view s) { return parse_enum(s, kFamilies, "model family"); }
Variant parse_variant(std::string_view s) { return parse_enum(s, kVariants, "variant"); }
Activation parse_activation(std::string_view s) { return parse_enum(s, kActivations, "activation"); }
HeadKind parse_head(std::string_view s) { return parse_enum(s, kHeads, "head"); }
Task parse_task(std::string_view s) { return parse_enum(s, kTasks, "task"); }

void ModelConfig::validate() const {
  if (variant == Variant::Expander) {
    if (!density) throw InvalidArgument("variant expander requires a density");
    if (!(*density > 0.0 && *density <= 1.0))
      throw InvalidArgument("density must lie in (0, 1]");
  } else if (density) {
    throw InvalidArgument("density is only meaningful for the expander variant");
  }
  if (family == Family::Sgc) {
    if (variant != Variant::Vanilla) throw InvalidArgument("sgc admits no variant");
    if (activation != Activation::Relu) throw InvalidArgument("sgc admits no activation");
    if (use_initial_embedding) throw InvalidArgument("sgc has no initial embedding");
    if (batchnorm) throw InvalidArgument("sgc has no batch normalisation");
  }
  if (layers < 1) throw InvalidArgument("layers must be >= 1");
  if (hidden < 1) throw InvalidArgument("hidden width must be >= 1");
  if (output_dim < 1) throw InvalidArgument("output_dim must be >= 1");
  if (head == HeadKind::Mlp3 && (hidden % 4 != 0))
    throw InvalidArgument("mlp3 head needs hidden width divisible by 4");
  if (task == Task::GraphReg && output_dim != 1)
    throw InvalidArgument("graph regression needs output_dim 1");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"family", to_string(c.family)},
                     {"variant", to_string(c.variant)},
                     {"layers", c.layers},
                     {"hidden", c.hidden},
                     {"activation", to_string(c.activation)},
                     {"head", to_string(c.head)},
                     {"task", to_string(c.task)},
                     {"output_dim", c.output_dim},
                     {"use_initial_embedding", c.use_initial_embedding},
                     {"batchnorm", c.batchnorm},
                     {"self_loops", c.self_loops},
                     {"seed", c.seed}};
  j["density"] = c.density ? nlohmann::json(*c.density) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  static const std::array<std::string_view, 13> known{
      "family", "variant", "density", "layers", "hidden", "activation", "head",
      "task", "output_dim", "use_initial_embedding", "batchnorm", "self_loops", "seed"};
  if (!j.is_object()) throw InvalidArgument("model config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidArgument("unknown model config key '" + key + "'");
  try {
    if (j.contains("family")) c.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("density"))
      c.density = j.at("density").is_null() ? std::nullopt
                                            : std::optional<double>(j.at("density").get<double>());
    if (j.contains("layers")) c.layers = j.at("layers").get<int>();
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<int>();
    if (j.contains("activation"))
      c.activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("head")) c.head = parse_head(j.at("head").get<std::string>());
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("output_dim")) c.output_dim = j.at("output_dim").get<int>();
    if (j.contains("use_initial_embedding"))
      c.use_initial_embedding = j.at("use_initial_embedding").get<bool>();
    if (j.contains("batchnorm")) c.batchnorm = j.at("batchnorm").get<bool>();
    if (j.contains("self_loops")) c.self_loops = j.at("self_loops").get<bool>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("model config: ") + e.what());
  }
}

GraphContext::GraphContext(const Graph& g, const ModelConfig& cfg, std::vector<NodeRange> r)
    : num_nodes(g.num_nodes()), features(ad::Tensor::constant(g.features())), ranges(std::move(r)) {
  switch (cfg.family) {
    case Family::Gcn:
    case Family::Sgc:
      norm_adj = std::make_shared<const SparseMatrix>(normalize_adjacency(g, cfg.self_loops));
      break;
    case Family::Pna: {
      mean_adj = std::make_shared<const SparseMatrix>(mean_adjacency(g));
      auto logd = std::make_shared<Vector>(g.num_nodes());
      for (Index i = 0; i < g.num_nodes(); ++i)
        (*logd)(i) = std::log(static_cast<double>(std::max<Index>(g.degree(i), 1)) + 1.0);
      log_degree = std::move(logd);
      [[fallthrough]];
    }
    case Family::Gin:
    case Family::Sage:
      adj = std::make_shared<const SparseMatrix>(adjacency_matrix(g));
      break;
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, g.offsets().data(), g.offsets().size() * sizeof(Index));
  h = fnv1a(h, g.adjacency().data(), g.adjacency().size() * sizeof(Index));
  const Index dims[2] = {g.features().rows(), g.features().cols()};
  h = fnv1a(h, dims, sizeof dims);
  h = fnv1a(h, g.features().data(), static_cast<std::size_t>(g.features().size()) * sizeof(double));
  h = fnv1a(h, &cfg.self_loops, sizeof cfg.self_loops);
  fingerprint = h;
}

double pna_delta(const Graph& g, std::span<const Index> nodes) {
  if (nodes.empty()) throw InvalidArgument("pna_delta: no nodes");
  double total = 0.0;
  for (Index i : nodes) total += std::log(static_cast<double>(g.degree(i)) + 1.0);
  return total / static_cast<double>(nodes.size());
}

double pna_delta(std::span<const Graph* const> graphs) {
  double total = 0.0;
  Index count = 0;
  for (const Graph* g : graphs)
    for (Index i = 0; i < g->num_nodes(); ++i) {
      total += std::log(static_cast<double>(g->degree(i)) + 1.0);
      ++count;
    }
  if (count == 0) throw InvalidArgument("pna_delta: no nodes");
  return total / static_cast<double>(count);
}

Matrix propagate(const SparseMatrix& a, const Matrix& x, int k) {
  if (k < 1) throw InvalidArgument("propagation steps must be >= 1");
  Matrix out = a.multiply(x);
  for (int step = 1; step < k; ++step) out = a.multiply(out);
  return out;
}

std::shared_ptr<const Matrix> PropagationCache::get(const GraphContext& ctx, int k) {
  std::lock_guard lock(mutex_);
  const auto key = std::make_pair(ctx.fingerprint, k);
  if (auto it = entries_.find(key); it != entries_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  auto value = std::make_shared<const Matrix>(propagate(*ctx.norm_adj, ctx.features.value(), k));
  entries_.emplace(key, value);
  return value;
}

ad::Tensor Act::operator()(const ad::Tensor& x) const {
  switch (kind) {
    case Activation::Relu: return ad::relu(x);
    case Activation::Prelu: return ad::prelu(x, slope);
    case Activation::Tanh: return ad::tanh(x);
  }
  throw InvalidArgument("unknown activation");
}

ad::Tensor gcn_layer(const ad::Tensor& h, const GraphContext& ctx, const Parameter* w,
                     const Act& act, std::int64_t* flops) {
  if (!w) {
    add_spmm_flops(flops, *ctx.norm_adj, h.cols());
    return act(ad::spmm(ctx.norm_adj, h));
  }
  // Propagate at the narrower width; both orders give A H W.
  if (w->weight().cols() < h.cols()) {
    ad::Tensor hw = linear(h, *w, flops);
    add_spmm_flops(flops, *ctx.norm_adj, hw.cols());
    return act(ad::spmm(ctx.norm_adj, hw));
  }
  add_spmm_flops(flops, *ctx.norm_adj, h.cols());
  return act(linear(ad::spmm(ctx.norm_adj, h), *w, flops));
}

ad::Tensor gin_layer(const ad::Tensor& h, const GraphContext& ctx, const ad::Tensor& eps,
                     const Parameter* w, const Act& act, std::int64_t* flops) {
  add_spmm_flops(flops, *ctx.adj, h.cols());
  ad::Tensor m = ad::add(ad::add(ad::spmm(ctx.adj, h), h), ad::scale_by(h, eps));
  if (w) m = linear(m, *w, flops);
  return act(m);
}

ad::Tensor sage_layer(const ad::Tensor& h, const GraphContext& ctx, const Parameter* w_pool,
                      const Parameter* w_update, const Act& act, std::int64_t* flops) {
  if ((w_pool == nullptr) != (w_update == nullptr))
    throw InvalidArgument("sage_layer: pass both maps or neither");
  if (!w_update) {
    ad::Tensor m = ad::add(h, ad::neighbor_max(ctx.adj, act(h)));
    return ad::row_l2_normalize(act(m));
  }
  ad::Tensor pooled = ad::neighbor_max(ctx.adj, act(linear(h, *w_pool, flops)));
  const std::array<ad::Tensor, 2> parts{h, pooled};
  ad::Tensor m = ad::concat_cols(parts);
  return ad::row_l2_normalize(act(linear(m, *w_update, flops)));
}

std::vector<ad::Tensor> PnaOperator::aggregate(const ad::Tensor& h, const GraphContext& ctx) const {
  ad::Tensor mean = ad::spmm(ctx.mean_adj, h);
  ad::Tensor max = ad::neighbor_max(ctx.adj, h);
  ad::Tensor min = ad::scale(ad::neighbor_max(ctx.adj, ad::scale(h, -1.0)), -1.0);
  ad::Tensor mean_sq = ad::spmm(ctx.mean_adj, ad::mul(h, h));
  ad::Tensor var = ad::relu(ad::sub(mean_sq, ad::mul(mean, mean)));
  const Index n = h.rows();
  const Index c = h.cols();
  ad::Tensor std = ad::sqrt(ad::add(var, ad::Tensor::constant(Matrix::Constant(n, c, std_eps))));
  return {mean, max, min, std};
}

std::vector<std::shared_ptr<const Vector>> PnaOperator::scalers(const GraphContext& ctx) const {
  const Vector& logd = *ctx.log_degree;
  auto identity = std::make_shared<const Vector>(Vector::Ones(logd.size()));
  auto amplify = std::make_shared<const Vector>(logd / delta);
  auto attenuate = std::make_shared<const Vector>(logd.cwiseInverse() * delta);
  return {identity, amplify, attenuate};
}

std::vector<ad::Tensor> PnaOperator::blocks(const ad::Tensor& h, const GraphContext& ctx) const {
  const auto aggs = aggregate(h, ctx);
  const auto scales = scalers(ctx);
  std::vector<ad::Tensor> out;
  for (std::size_t s = 0; s < scales.size(); ++s)
    for (const ad::Tensor& a : aggs) out.push_back(s == 0 ? a : ad::row_scale(a, scales[s]));
  return out;
}

ad::Tensor pna_layer(const ad::Tensor& h, const GraphContext& ctx, const Parameter* w,
                     const Act& act, const PnaOperator& op, std::int64_t* flops) {
  if (flops) {
    add_spmm_flops(flops, *ctx.mean_adj, 2 * h.cols());
    add_spmm_flops(flops, *ctx.adj, 2 * h.cols());
  }
  if (!w) {
    // (1/12) sum over (s, a) of scaler_s * agg_a = (sum_s scaler_s / 12) * sum_a agg_a
    const auto aggs = op.aggregate(h, ctx);
    ad::Tensor total = ad::add(ad::add(aggs[0], aggs[1]), ad::add(aggs[2], aggs[3]));
    const auto scales = op.scalers(ctx);
    auto factor = std::make_shared<const Vector>((*scales[0] + *scales[1] + *scales[2]) / 12.0);
    return act(ad::row_scale(total, factor));
  }
  const auto parts = op.blocks(h, ctx);
  return act(linear(ad::concat_cols(parts), *w, flops));
}

ad::Tensor sgc_forward(const Matrix& x, const SparseMatrix& a, int k, const ad::Tensor& w) {
  return ad::matmul(ad::Tensor::constant(propagate(a, x, k)), w);
}

ad::Tensor mean_readout(const ad::Tensor& h, std::span<const NodeRange> ranges) {
  return ad::segment_mean(h, ranges);
}

Model::Model(const ModelConfig& cfg, Index input_dim, double pna_delta)
    : cfg_(cfg), input_dim_(input_dim), cache_(std::make_shared<PropagationCache>()) {
  cfg_.validate();
  if (input_dim < 1) throw InvalidArgument("input feature dimension must be >= 1");
  if (!(pna_delta > 0.0)) throw InvalidArgument("pna delta must be positive");
  pna_.delta = pna_delta;

  const bool maps = cfg_.family != Family::Sgc && cfg_.variant != Variant::ActivationOnly;
  const bool masked = cfg_.variant == Variant::Expander;
  Index width = input_dim;
  if (maps && cfg_.use_initial_embedding) {
    embed_ = add_linear("embed.W", ParamRole::Embedding, width, cfg_.hidden, false);
    width = cfg_.hidden;
  }
  if (cfg_.family != Family::Sgc) {
    for (int l = 0; l < cfg_.layers; ++l) {
      Layer layer;
      layer.in = width;
      layer.out = maps ? cfg_.hidden : width;
      const std::string prefix = "layer" + std::to_string(l) + ".";
      if (cfg_.family == Family::Gin)
        layer.eps = add_param(prefix + "eps", ParamRole::NormAct, Matrix::Zero(1, 1));
      if (maps) {
        switch (cfg_.family) {
          case Family::Sage:
            layer.w_pool = add_linear(prefix + "W1", ParamRole::UpdateStep, width, width, masked);
            layer.w = add_linear(prefix + "W2", ParamRole::UpdateStep, 2 * width, cfg_.hidden, masked);
            break;
          case Family::Pna:
            layer.w = add_linear(prefix + "W", ParamRole::UpdateStep, 12 * width, cfg_.hidden, masked);
            break;
          default:
            layer.w = add_linear(prefix + "W", ParamRole::UpdateStep, width, cfg_.hidden, masked);
        }
      }
      if (cfg_.activation == Activation::Prelu)
        layer.slope = add_param(prefix + "prelu", ParamRole::NormAct, Matrix::Constant(1, 1, 0.25));
      if (cfg_.batchnorm) {
        layer.bn = std::make_unique<ad::BatchNorm>(layer.out);
        layer.bn->gamma = add_param(prefix + "bn.gamma", ParamRole::NormAct,
                                    Matrix::Ones(1, layer.out))->weight();
        layer.bn->beta = add_param(prefix + "bn.beta", ParamRole::NormAct,
                                   Matrix::Zero(1, layer.out))->weight();
      }
      width = layer.out;
      layers_.push_back(std::move(layer));
    }
  }
  embedding_dim_ = width;

  const Index k = cfg_.output_dim;
  if (cfg_.head == HeadKind::Linear) {
    head_.push_back({add_linear("head.W", ParamRole::Head, width, k, false),
                     add_param("head.b", ParamRole::Head, Matrix::Zero(1, k))});
  } else {
    const std::array<Index, 4> dims{width, cfg_.hidden / 2, cfg_.hidden / 4, k};
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string n = std::to_string(i + 1);
      head_.push_back({add_linear("head.W" + n, ParamRole::Head, dims[i], dims[i + 1], false),
                       add_param("head.b" + n, ParamRole::Head, Matrix::Zero(1, dims[i + 1]))});
    }
  }
}

Parameter* Model::add_param(std::string name, ParamRole role, Matrix value) {
  params_.push_back(std::make_unique<Parameter>(std::move(name), role, std::move(value)));
  return params_.back().get();
}

Parameter* Model::add_linear(std::string name, ParamRole role, Index in, Index out, bool masked) {
  Rng rng(derive_seed(cfg_.seed, Stream::Init, init_ordinal_++));
  if (!masked) return add_param(std::move(name), role, glorot(in, out, nullptr, rng));
  ExpanderMask mask =
      sample_mask(in, out, *cfg_.density, derive_seed(cfg_.seed, Stream::Mask, mask_ordinal_++));
  Matrix w = glorot(in, out, &mask, rng);
  params_.push_back(std::make_unique<Parameter>(std::move(name), role, std::move(w), std::move(mask)));
  return params_.back().get();
}

Act Model::act_for(const Layer& layer) const {
  Act act{cfg_.activation, {}};
  if (layer.slope) act.slope = layer.slope->weight();
  return act;
}

ad::Tensor Model::embed(const GraphContext& ctx, bool training, std::int64_t* flops) {
  if (ctx.features.cols() != input_dim_)
    throw InvalidArgument("graph has " + std::to_string(ctx.features.cols()) +
                          " features, model expects " + std::to_string(input_dim_));
  if (cfg_.family == Family::Sgc) {
    if (flops) *flops += 2 * ctx.norm_adj->nnz() * input_dim_ * cfg_.layers;
    if (cfg_.task == Task::NodeClass) return ad::Tensor::constant(*cache_->get(ctx, cfg_.layers));
    return ad::Tensor::constant(propagate(*ctx.norm_adj, ctx.features.value(), cfg_.layers));
  }
  ad::Tensor h = ctx.features;
  if (embed_) h = linear(h, *embed_, flops);
  for (Layer& layer : layers_) {
    const Act act = act_for(layer);
    switch (cfg_.family) {
      case Family::Gcn: h = gcn_layer(h, ctx, layer.w, act, flops); break;
      case Family::Gin: h = gin_layer(h, ctx, layer.eps->weight(), layer.w, act, flops); break;
      case Family::Sage: h = sage_layer(h, ctx, layer.w_pool, layer.w, act, flops); break;
      case Family::Pna: h = pna_layer(h, ctx, layer.w, act, pna_, flops); break;
      case Family::Sgc: break;
    }
    if (layer.bn) h = ad::batchnorm(h, *layer.bn, training);
  }
  return h;
}

ad::Tensor Model::apply_head(const ad::Tensor& x, std::int64_t* flops) const {
  ad::Tensor out = x;
  for (std::size_t i = 0; i < head_.size(); ++i) {
    out = ad::add_bias(linear(out, *head_[i].w, flops), head_[i].b->weight());
    if (i + 1 < head_.size()) out = ad::relu(out);
  }
  return out;
}

ad::Tensor Model::forward(const GraphContext& ctx, bool training, std::int64_t* flops) {
  ad::Tensor h = embed(ctx, training, flops);
  if (cfg_.task != Task::NodeClass) {
    if (ctx.ranges.empty()) {
      const std::array<NodeRange, 1> whole{NodeRange{0, ctx.num_nodes}};
      h = mean_readout(h, whole);
    } else {
      h = mean_readout(h, ctx.ranges);
    }
  }
  return apply_head(h, flops);
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

Parameter* Model::find(std::string_view name) {
  for (auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

std::vector<const ExpanderMask*> Model::masks() const {
  std::vector<const ExpanderMask*> out;
  for (const auto& p : params_)
    if (p->masked()) out.push_back(p->mask());
  return out;
}

Model::Snapshot Model::snapshot() const {
  Snapshot s;
  for (const auto& p : params_) s.values.push_back(p->weight().value());
  for (const Layer& layer : layers_)
    if (layer.bn) {
      s.running.push_back(layer.bn->running_mean);
      s.running.push_back(layer.bn->running_var);
    }
  return s;
}

void Model::restore(const Snapshot& s) {
  if (s.values.size() != params_.size()) throw InvalidArgument("snapshot does not match model");
  for (std::size_t k = 0; k < params_.size(); ++k) params_[k]->weight().mutable_value() = s.values[k];
  std::size_t r = 0;
  for (Layer& layer : layers_)
    if (layer.bn) {
      layer.bn->running_mean = s.running.at(r++);
      layer.bn->running_var = s.running.at(r++);
    }
}

Model build_model(const ModelConfig& cfg, Index input_dim, double pna_delta) {
  return Model(cfg, input_dim, pna_delta);
}

namespace {
ParamCounts raw_counts(const Model& model) {
  ParamCounts c;
  for (const Parameter* p : model.parameters()) {
    const Index n = p->count();
    c.total += n;
    switch (p->role()) {
      case ParamRole::UpdateStep: c.update_step += n; break;
      case ParamRole::Embedding: c.embedding += n; break;
      case ParamRole::Head: c.head += n; break;
      case ParamRole::NormAct: c.norm_act += n; break;
    }
  }
  return c;
}
}  // namespace

ParamCounts count_params(const Model& model) {
  ParamCounts c = raw_counts(model);
  ModelConfig twin = model.config();
  if (twin.family == Family::Sgc) twin.family = Family::Gcn;
  twin.variant = Variant::Vanilla;
  twin.density.reset();
  if (twin == model.config()) {
    c.ratio_vs_vanilla = 1.0;
    return c;
  }
  const Model vanilla(twin, model.input_dim(), model.pna_delta());
  c.ratio_vs_vanilla = static_cast<double>(c.total) / static_cast<double>(raw_counts(vanilla).total);
  return c;
}

}  // namespace xgnn
