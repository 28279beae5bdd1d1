#pragma once

#include "xgnn/model.hpp"
#include "xgnn/optim.hpp"

#include <cstdint>
#include <vector>

namespace xgnn {

/// Erdos-Renyi graph with standard-normal features, drawn from
/// derive_seed(seed, Stream::Synth).
Graph random_graph(Index nodes, double edge_prob, Index feature_dim, std::uint64_t seed);

/// Small model used by the gradient check: 2 layers, width 4, tanh,
/// density 0.5 for expander maps.
ModelConfig gradcheck_config(Family family, Variant variant, std::uint64_t seed = 0);

/// Finite-difference check of every parameter of a node-classification
/// model on a 6-node random graph.
GradcheckResult model_gradcheck(Family family, Variant variant, std::uint64_t seed = 0,
                                double analytic_bias = 0.0);

struct GradcheckCombo {
  Family family;
  Variant variant;
};

/// The four message-passing families in all three variants, family-major.
std::vector<GradcheckCombo> gradcheck_combos();

}  // namespace xgnn
