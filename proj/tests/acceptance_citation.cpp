// Accuracy checks on converted citation datasets. The dataset root comes
// from argv[1] or XGNN_DATA_DIR and must contain cora/, citeseer/ and
// pubmed/ in the node dataset format. Missing datasets fail their criteria.

#include "xgnn/dataset.hpp"
#include "xgnn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

using namespace xgnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;
fs::path root;

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

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100 * v);
  return buf;
}

NodeDataset load(const char* name) {
  const fs::path dir = root / name;
  if (!fs::exists(dir / "meta.json"))
    throw DataError("dataset not found: " + dir.string());
  return load_node_dataset(dir);
}

ModelConfig node_config(const NodeDataset& ds, Family f, Variant v) {
  ModelConfig c;
  c.family = f;
  c.variant = v;
  if (v == Variant::Expander) c.density = 0.1;
  c.layers = 2;
  c.hidden = 256;
  c.task = Task::NodeClass;
  c.output_dim = ds.meta.num_classes.value_or(2);
  return c;
}

struct Timed {
  double metric = 0.0;
  double seconds = 0.0;
};

Timed run_sgc(const NodeDataset& ds) {
  const auto start = std::chrono::steady_clock::now();
  const ModelConfig c = node_config(ds, Family::Sgc, Variant::Vanilla);
  Model m = build_model_for(c, ds);
  const TrainReport r = train(m, ds, default_hyper(c), 0);
  return {r.test_metric,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

Timed run_activation_only(const NodeDataset& ds) {
  const auto start = std::chrono::steady_clock::now();
  const ModelConfig c = node_config(ds, Family::Gcn, Variant::ActivationOnly);
  const SweepResult s = activation_sweep(c, ds, default_hyper(c), 0);
  return {s.reports[s.selected_index].test_metric,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

Outcome sgc_cora() {
  const Timed t = run_sgc(load("cora"));
  const bool ok = std::abs(t.metric - 0.804) <= 0.015 && t.seconds < 120;
  return {ok, "test " + pct(t.metric) + ", " + std::to_string(t.seconds) + "s"};
}

Outcome activation_only_cora() {
  const Timed t = run_activation_only(load("cora"));
  return {t.metric >= 0.789, "test " + pct(t.metric)};
}

Outcome activation_only_citeseer() {
  const Timed t = run_activation_only(load("citeseer"));
  return {std::abs(t.metric - 0.727) <= 0.02, "test " + pct(t.metric)};
}

Outcome gcn_cora() {
  const NodeDataset ds = load("cora");
  std::vector<double> van, exp;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (Variant v : {Variant::Vanilla, Variant::Expander}) {
      ModelConfig c = node_config(ds, Family::Gcn, v);
      c.seed = seed;
      Model m = build_model_for(c, ds);
      const TrainReport r = train(m, ds, default_hyper(c), seed);
      (v == Variant::Vanilla ? van : exp).push_back(r.test_metric);
    }
  }
  const double vm = mean_std(van).mean;
  const double em = mean_std(exp).mean;
  const bool ok = std::abs(vm - 0.8054) <= 0.015 && std::abs(em - vm) <= 0.01;
  return {ok, "5 seeds, vanilla " + pct(vm) + ", expander-10% " + pct(em)};
}

Outcome pubmed() {
  const NodeDataset ds = load("pubmed");
  const Timed s = run_sgc(ds);
  const Timed a = run_activation_only(ds);
  const bool ok = std::abs(s.metric - 0.789) <= 0.015 && std::abs(a.metric - 0.789) <= 0.015 &&
                  s.seconds + a.seconds < 600;
  return {ok, "sgc " + pct(s.metric) + ", activation-only " + pct(a.metric) + ", " +
                  std::to_string(s.seconds + a.seconds) + "s"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) {
    root = argv[1];
  } else if (const char* env = std::getenv("XGNN_DATA_DIR")) {
    root = env;
  } else {
    root = "data";
  }
  criterion("SGC on Cora (K=2): 80.4% within 1.5 points, under 2 minutes", sgc_cora);
  criterion("activation-only GCN on Cora: at least 78.9%", activation_only_cora);
  criterion("activation-only GCN on CiteSeer: 72.7% within 2.0 points", activation_only_citeseer);
  criterion("GCN on Cora: 80.54% within 1.5 points, expander-10% within 1.0 of vanilla", gcn_cora);
  criterion("SGC and activation-only on PubMed: 78.9% within 1.5 points, under 10 minutes",
            pubmed);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
