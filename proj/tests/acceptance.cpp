// Acceptance checks that run on synthetic data. Prints one PASS/FAIL line
// per criterion; exit status is nonzero when any criterion fails.

#include "xgnn/checks.hpp"
#include "xgnn/expander.hpp"
#include "xgnn/random.hpp"
#include "xgnn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>

using namespace xgnn;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

template <class F>
void criterion(const char* name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s  %s  (%s; %.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<Index> permutation(Index n, Rng& rng) {
  std::vector<Index> p(n);
  std::iota(p.begin(), p.end(), Index{0});
  rng.shuffle(p.begin(), p.end());
  return p;
}

Outcome gradient_suite() {
  double worst = 0.0;
  std::string where;
  auto run = [&](Family f, Variant v) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const double e = model_gradcheck(f, v, seed).max_rel_error;
      if (e > worst) {
        worst = e;
        where = std::string(to_string(f)) + " " + std::string(to_string(v));
      }
    }
  };
  for (const GradcheckCombo& c : gradcheck_combos()) run(c.family, c.variant);
  run(Family::Sgc, Variant::Vanilla);
  return {worst < 1e-4, "13 models x 5 graphs, worst " + fmt("%.2e", worst) + " at " + where};
}

Outcome mask_suite() {
  Rng rng(derive_seed(2024, Stream::Synth));
  int bad = 0;
  std::string first;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng.below(120));
    const Index cols = 1 + static_cast<Index>(rng.below(120));
    const double density = 1e-3 + (1.0 - 1e-3) * rng.uniform();
    const std::uint64_t seed = rng.next();
    const Index n = 1 + static_cast<Index>(rng.below(64));
    const ExpanderMask m = sample_mask(rows, cols, density, seed);
    const Matrix dense = m.dense();
    const Index d = degree_for_density(rows, cols, density);
    const MaskDiagnostics diag = verify_mask(m);

    bool ok = m.degree() == d && diag.regular && !diag.collapsed;
    // naive oracle: every unit of the smaller side has exactly d ones
    const Index small = std::min(rows, cols);
    for (Index u = 0; u < small; ++u) {
      const double ones = rows <= cols ? dense.row(u).sum() : dense.col(u).sum();
      ok = ok && ones == static_cast<double>(d);
    }
    ok = ok && mask_density(m) == static_cast<double>(d) / static_cast<double>(std::max(rows, cols));
    const auto nonzeros = static_cast<std::int64_t>((dense.array() != 0.0).count());
    ok = ok && flop_estimate(m, n) == 2 * n * nonzeros;
    ok = ok && nonzeros == d * small;
    if (!ok) {
      if (bad == 0)
        first = std::to_string(rows) + "x" + std::to_string(cols) + " density " +
                fmt("%.4f", density);
      ++bad;
    }
  }
  return {bad == 0, bad == 0 ? "1000 random masks" : std::to_string(bad) + " bad, first " + first};
}

Outcome sgc_collapse() {
  double worst = 0.0;
  for (std::uint64_t g_seed = 0; g_seed < 100; ++g_seed) {
    Rng rng(derive_seed(g_seed, Stream::Synth, 7));
    const Index s = 2 + static_cast<Index>(rng.below(4));
    const int k = 1 + static_cast<int>(rng.below(3));
    const Graph g = random_graph(8, 0.3 + 0.4 * rng.uniform(), s, g_seed);
    const auto a = std::make_shared<const SparseMatrix>(normalize_adjacency(g));
    std::vector<Matrix> ws;
    Index width = s;
    Matrix composed = Matrix::Identity(s, s);
    for (int l = 0; l < k; ++l) {
      const Index out = l + 1 == k ? 3 : 2 + static_cast<Index>(rng.below(5));
      Matrix w(width, out);
      for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
      ws.push_back(w);
      composed = composed * w;
      width = out;
    }
    // K-layer GCN with identity activations, on the tape
    ad::Tensor h = ad::Tensor::constant(g.features());
    for (const Matrix& w : ws) h = ad::matmul(ad::spmm(a, h), ad::Tensor::constant(w));
    const Matrix s_out = sgc_forward(g.features(), *a, k, ad::Tensor::constant(composed)).value();
    worst = std::max(worst, (s_out - h.value()).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-10, "100 graphs, max abs diff " + fmt("%.2e", worst)};
}

Outcome equivariance() {
  double node_worst = 0.0;
  double graph_worst = 0.0;
  for (Family f : {Family::Gcn, Family::Gin, Family::Sage, Family::Pna, Family::Sgc})
    for (Variant v : {Variant::Vanilla, Variant::Expander, Variant::ActivationOnly}) {
      if (f == Family::Sgc && v != Variant::Vanilla) continue;
      for (Task task : {Task::NodeClass, Task::GraphClass}) {
        ModelConfig c;
        c.family = f;
        c.variant = v;
        if (v == Variant::Expander) c.density = 0.3;
        c.layers = 2;
        c.hidden = 8;
        c.task = task;
        c.output_dim = 3;
        c.activation = f == Family::Sgc ? Activation::Relu : Activation::Tanh;
        Model m(c, 4, 1.2);
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
          Rng rng(derive_seed(seed, Stream::Synth, 3));
          const Index n = 3 + static_cast<Index>(rng.below(12));
          const Graph g = random_graph(n, 0.1 + 0.5 * rng.uniform(), 4, seed + 1000);
          const auto perm = permutation(n, rng);
          const Graph gp = permute_nodes(g, perm);
          const Matrix a = m.forward(GraphContext(g, c), false).value();
          const Matrix b = m.forward(GraphContext(gp, c), false).value();
          if (task == Task::NodeClass) {
            for (Index i = 0; i < n; ++i)
              node_worst = std::max(node_worst, (a.row(i) - b.row(perm[i])).cwiseAbs().maxCoeff());
          } else {
            graph_worst = std::max(graph_worst, (a - b).cwiseAbs().maxCoeff());
          }
        }
      }
    }
  return {node_worst < 1e-10 && graph_worst < 1e-10,
          "50 graphs x 13 models, node " + fmt("%.2e", node_worst) + ", readout " +
              fmt("%.2e", graph_worst)};
}

Outcome parameter_ratio() {
  std::ostringstream detail;
  bool ok = true;
  const Graph g = random_graph(20, 0.2, 32, 5);
  for (Family f : {Family::Gcn, Family::Gin, Family::Sage, Family::Pna}) {
    ModelConfig vc;
    vc.family = f;
    vc.hidden = 64;
    vc.layers = 2;
    vc.output_dim = 7;
    vc.seed = 11;
    Model vanilla(vc, 32);
    const ParamCounts vcount = count_params(vanilla);
    Index slack = 0;
    for (const Parameter* p : vanilla.parameters())
      if (p->role() == ParamRole::UpdateStep)
        slack += std::min(p->weight().rows(), p->weight().cols());
    for (double density : {0.1, 0.5, 1.0}) {
      ModelConfig ec = vc;
      ec.variant = Variant::Expander;
      ec.density = density;
      Model ex(ec, 32);
      const ParamCounts ecount = count_params(ex);
      const double target = density * static_cast<double>(vcount.update_step);
      const double off = std::abs(static_cast<double>(ecount.update_step) - target);
      if (off > static_cast<double>(slack)) {
        ok = false;
        detail << to_string(f) << "@" << density << " off by " << off << " > " << slack << "; ";
      }
      if (density == 1.0) {
        const GraphContext ctx(g, vc);
        if (!(ex.forward(ctx, false).value().array() == vanilla.forward(ctx, false).value().array())
                 .all()) {
          ok = false;
          detail << to_string(f) << " density 1.0 output differs; ";
        }
      }
    }
  }
  if (ok) detail << "4 families x densities {0.1, 0.5, 1.0}; density 1.0 bitwise equal";
  return {ok, detail.str()};
}

Outcome synthetic_graph_classification() {
  GraphSynthOptions o;
  o.num_graphs = 400;
  o.mode = GraphSynthMode::ErDensity;
  o.seed = 17;
  const GraphDataset ds = synth_graph_dataset(o);

  ModelConfig vc;
  vc.family = Family::Gcn;
  vc.hidden = 64;
  vc.layers = 4;
  vc.head = HeadKind::Mlp3;
  vc.task = Task::GraphClass;
  vc.output_dim = 2;
  ModelConfig ec = vc;
  ec.variant = Variant::Expander;
  ec.density = 0.1;
  const TrainHyper hyper = default_hyper(vc);

  std::vector<double> van, exp;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GraphSplit split = holdout_split(ds, seed);
    for (auto* cfg : {&vc, &ec}) {
      ModelConfig c = *cfg;
      c.seed = seed;
      Model m = build_model_for(c, ds, split.train);
      const TrainReport r = train(m, ds, split, hyper, seed);
      (cfg == &vc ? van : exp).push_back(r.test_metric);
    }
  }
  const double vm = mean_std(van).mean;
  const double em = mean_std(exp).mean;
  const bool ok = vm >= 0.90 && std::abs(em - vm) <= 0.05;
  return {ok, "5 seeds, vanilla " + fmt("%.2f%%", 100 * vm) + ", expander-10% " +
                  fmt("%.2f%%", 100 * em)};
}

}  // namespace

int main() {
  criterion("gradient suite: 4 families x 3 variants plus SGC, max relative error < 1e-4",
            gradient_suite);
  criterion("mask properties: exact degree, density identity, no collapse, FLOPs vs nonzero count",
            mask_suite);
  criterion("SGC equals activation-free K-layer GCN with composed weights (< 1e-10)",
            sgc_collapse);
  criterion("permutation equivariance of layers and invariance of readout (< 1e-10)",
            equivariance);
  criterion("update-step parameters track density; density 1.0 equals vanilla bitwise",
            parameter_ratio);
  criterion("synthetic ER graph classification: vanilla >= 90%, expander-10% within 5 points",
            synthetic_graph_classification);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
