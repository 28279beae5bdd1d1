#include "xgnn/checks.hpp"

#include "xgnn/random.hpp"

#include <numeric>

namespace xgnn {

Graph random_graph(Index nodes, double edge_prob, Index feature_dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::Synth));
  std::vector<Edge> edges;
  for (Index u = 0; u < nodes; ++u)
    for (Index v = u + 1; v < nodes; ++v)
      if (rng.bernoulli(edge_prob)) edges.push_back({u, v});
  Matrix x(nodes, feature_dim);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return build_graph(edges, std::move(x));
}

ModelConfig gradcheck_config(Family family, Variant variant, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.family = family;
  cfg.variant = variant;
  if (variant == Variant::Expander) cfg.density = 0.5;
  cfg.layers = 2;
  cfg.hidden = 4;
  cfg.activation = family == Family::Sgc ? Activation::Relu : Activation::Tanh;
  cfg.task = Task::NodeClass;
  cfg.output_dim = 2;
  cfg.seed = seed;
  return cfg;
}

GradcheckResult model_gradcheck(Family family, Variant variant, std::uint64_t seed,
                                double analytic_bias) {
  constexpr Index nodes = 6;
  const Graph g = random_graph(nodes, 0.5, 3, seed);
  const ModelConfig cfg = gradcheck_config(family, variant, seed);
  std::vector<Index> all(nodes);
  std::iota(all.begin(), all.end(), Index{0});
  Model model(cfg, g.feature_dim(), pna_delta(g, all));
  const GraphContext ctx(g, cfg);

  Rng rng(derive_seed(seed, Stream::Synth, 1));
  std::vector<int> labels;
  for (Index i = 0; i < nodes; ++i) labels.push_back(static_cast<int>(rng.below(2)));

  std::vector<ad::Tensor> inputs;
  for (Parameter* p : model.parameters()) inputs.push_back(p->weight());
  return gradcheck([&] { return ad::cross_entropy(model.forward(ctx, true), labels); }, inputs,
                   1e-6, analytic_bias);
}

std::vector<GradcheckCombo> gradcheck_combos() {
  std::vector<GradcheckCombo> out;
  for (Family f : {Family::Gcn, Family::Gin, Family::Sage, Family::Pna})
    for (Variant v : {Variant::Vanilla, Variant::Expander, Variant::ActivationOnly})
      out.push_back({f, v});
  return out;
}

}  // namespace xgnn
