#include "xgnn/train.hpp"

#include "xgnn/random.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace xgnn {
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool better(double candidate, double incumbent, bool higher) {
  return higher ? candidate > incumbent : candidate < incumbent;
}

/// Learning-rate decay and early stopping driven by the validation metric.
class PlateauTracker {
 public:
  PlateauTracker(const TrainHyper& h, bool higher)
      : hyper_(h), higher_(higher),
        best_(higher ? -std::numeric_limits<double>::infinity()
                     : std::numeric_limits<double>::infinity()) {}

  /// Returns true when val improved on the best seen so far.
  bool observe(double val, Adam& opt) {
    if (better(val, best_, higher_)) {
      best_ = val;
      since_best_ = 0;
      since_decay_ = 0;
      return true;
    }
    ++since_best_;
    ++since_decay_;
    if (hyper_.lr_decay_factor < 1.0 && since_decay_ >= hyper_.lr_patience) {
      opt.set_lr(std::max(hyper_.min_lr, std::min(opt.lr(), opt.lr() * hyper_.lr_decay_factor)));
      since_decay_ = 0;
    }
    return false;
  }
  bool should_stop() const {
    return hyper_.early_stop_patience > 0 && since_best_ >= hyper_.early_stop_patience;
  }

 private:
  const TrainHyper& hyper_;
  bool higher_;
  double best_;
  int since_best_ = 0;
  int since_decay_ = 0;
};

TrainReport start_report(const Model& model, const TrainHyper& hyper, std::uint64_t seed,
                         const std::string& dataset) {
  TrainReport r;
  r.config = model.config();
  r.hyper = hyper;
  r.seed = seed;
  r.dataset = dataset;
  r.metric = higher_is_better(model.config().task) ? "accuracy" : "mae";
  r.params = count_params(model);
  return r;
}

Matrix graph_targets(const GraphDataset& ds, std::span<const Index> graphs) {
  Matrix t(static_cast<Index>(graphs.size()), 1);
  for (std::size_t k = 0; k < graphs.size(); ++k)
    t(static_cast<Index>(k), 0) = ds.graphs[graphs[k]].graph_label().value_or(0.0);
  return t;
}

std::vector<int> graph_classes(const GraphDataset& ds, std::span<const Index> graphs) {
  std::vector<int> y;
  for (Index g : graphs) y.push_back(static_cast<int>(ds.graphs[g].graph_label().value_or(0.0)));
  return y;
}

struct Batch {
  std::vector<Index> members;
  GraphContext ctx;
};

Batch make_batch(const GraphDataset& ds, std::span<const Index> members, const ModelConfig& cfg) {
  std::vector<const Graph*> ptrs;
  for (Index g : members) ptrs.push_back(&ds.graphs[g]);
  BatchedGraph b = block_diagonal_batch(std::span<const Graph* const>(ptrs));
  return {std::vector<Index>(members.begin(), members.end()),
          GraphContext(b.graph, cfg, std::move(b.ranges))};
}

std::vector<Batch> make_batches(const GraphDataset& ds, std::span<const Index> graphs,
                                const ModelConfig& cfg, int batch_size) {
  std::vector<Batch> out;
  for (std::size_t at = 0; at < graphs.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t len = std::min<std::size_t>(batch_size, graphs.size() - at);
    out.push_back(make_batch(ds, graphs.subspan(at, len), cfg));
  }
  return out;
}

ad::Tensor batch_loss(const ad::Tensor& out, const GraphDataset& ds, std::span<const Index> members,
                      Task task) {
  if (task == Task::GraphReg) return ad::mae(out, graph_targets(ds, members));
  const auto y = graph_classes(ds, members);
  return ad::cross_entropy(out, y);
}

double batched_metric(Model& model, const GraphDataset& ds, std::span<const Batch> batches) {
  ad::NoGradGuard guard;
  const Task task = model.config().task;
  double total = 0.0;
  Index count = 0;
  for (const Batch& b : batches) {
    const Matrix out = model.forward(b.ctx, false).value();
    const auto n = static_cast<Index>(b.members.size());
    if (task == Task::GraphReg)
      total += mean_abs_error(out, graph_targets(ds, b.members)) * static_cast<double>(n);
    else
      total += accuracy(out, graph_classes(ds, b.members)) * static_cast<double>(n);
    count += n;
  }
  if (count == 0) throw InvalidArgument("evaluate: empty split");
  return total / static_cast<double>(count);
}

double node_metric(const Matrix& logits, const NodeDataset& ds, std::span<const Index> nodes) {
  if (nodes.empty()) throw InvalidArgument("evaluate: empty split");
  Matrix rows(static_cast<Index>(nodes.size()), logits.cols());
  std::vector<int> labels;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    rows.row(static_cast<Index>(k)) = logits.row(nodes[k]);
    labels.push_back(ds.graph.node_labels()[nodes[k]]);
  }
  return accuracy(rows, labels);
}

std::string dataset_label(const DatasetMeta& m) { return m.name; }

}  // namespace

void TrainHyper::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be positive");
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (weight_decay < 0.0) throw InvalidArgument("weight decay must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
    throw InvalidArgument("lr decay factor must lie in (0, 1]");
  if (lr_patience < 1) throw InvalidArgument("lr patience must be >= 1");
  if (early_stop_patience < 0) throw InvalidArgument("early-stop patience must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (precision != "f64") throw InvalidArgument("only precision f64 is supported");
}

void to_json(json& j, const TrainHyper& h) {
  j = json{{"epochs", h.epochs},
           {"lr", h.lr},
           {"weight_decay", h.weight_decay},
           {"lr_decay_factor", h.lr_decay_factor},
           {"lr_patience", h.lr_patience},
           {"min_lr", h.min_lr},
           {"early_stop_patience", h.early_stop_patience},
           {"batch_size", h.batch_size},
           {"precision", h.precision}};
}

void from_json(const json& j, TrainHyper& h) {
  try {
    if (j.contains("epochs")) h.epochs = j.at("epochs").get<int>();
    if (j.contains("lr")) h.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) h.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("lr_decay_factor")) h.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    if (j.contains("lr_patience")) h.lr_patience = j.at("lr_patience").get<int>();
    if (j.contains("min_lr")) h.min_lr = j.at("min_lr").get<double>();
    if (j.contains("early_stop_patience"))
      h.early_stop_patience = j.at("early_stop_patience").get<int>();
    if (j.contains("batch_size")) h.batch_size = j.at("batch_size").get<int>();
    if (j.contains("precision")) h.precision = j.at("precision").get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("training hyperparameters: ") + e.what());
  }
}

TrainHyper default_hyper(const ModelConfig& cfg) {
  TrainHyper h;
  if (cfg.task == Task::NodeClass) {
    h.epochs = 200;
    h.lr = cfg.family == Family::Sgc ? 0.2 : 0.01;
    h.weight_decay = 5e-4;
  } else {
    h.epochs = 100;
    h.lr = 1e-3;
    h.weight_decay = 0.0;
    h.lr_decay_factor = 0.5;
    h.lr_patience = 10;
    h.min_lr = 1e-5;
    h.batch_size = 32;
  }
  return h;
}

json to_json(const TrainReport& r) {
  json curve = json::array();
  for (const EpochRecord& e : r.curve)
    curve.push_back({{"epoch", e.epoch},
                     {"loss", e.loss},
                     {"train", e.train_metric},
                     {"val", e.val_metric},
                     {"lr", e.lr}});
  return json{{"config", r.config},
              {"hyper", r.hyper},
              {"seed", r.seed},
              {"dataset", r.dataset},
              {"metric", r.metric},
              {"train_metric", r.train_metric},
              {"val_metric", r.val_metric},
              {"test_metric", r.test_metric},
              {"best_epoch", r.best_epoch},
              {"params",
               {{"total", r.params.total},
                {"update_step", r.params.update_step},
                {"embedding", r.params.embedding},
                {"head", r.params.head},
                {"norm_act", r.params.norm_act},
                {"ratio_vs_vanilla", r.params.ratio_vs_vanilla}}},
              {"flops", r.flops},
              {"wall_seconds", r.wall_seconds},
              {"masks", r.mask_files},
              {"diverged", r.diverged},
              {"diagnostic", r.diagnostic},
              {"curve", curve}};
}

bool higher_is_better(Task task) { return task != Task::GraphReg; }

double accuracy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() == 0) throw InvalidArgument("accuracy: empty split");
  if (static_cast<Index>(labels.size()) != logits.rows())
    throw InvalidArgument("accuracy: one label per row required");
  Index correct = 0;
  for (Index r = 0; r < logits.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    if (best == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

double mean_abs_error(const Matrix& pred, const Matrix& target) {
  if (pred.size() == 0) throw InvalidArgument("mae: empty split");
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidArgument("mae: shape mismatch");
  return (pred - target).cwiseAbs().mean();
}

Model build_model_for(const ModelConfig& cfg, const NodeDataset& ds) {
  double delta = 1.0;
  if (cfg.family == Family::Pna) delta = pna_delta(ds.graph, ds.indices(Split::Train));
  return Model(cfg, ds.graph.feature_dim(), delta);
}

Model build_model_for(const ModelConfig& cfg, const GraphDataset& ds, std::span<const Index> train) {
  double delta = 1.0;
  if (cfg.family == Family::Pna) {
    std::vector<const Graph*> ptrs;
    for (Index g : train) ptrs.push_back(&ds.graphs[g]);
    delta = pna_delta(std::span<const Graph* const>(ptrs));
  }
  return Model(cfg, ds.meta.feature_dim, delta);
}

TrainReport train(Model& model, const NodeDataset& ds, const TrainHyper& hyper, std::uint64_t seed) {
  hyper.validate();
  if (model.config().task != Task::NodeClass)
    throw InvalidArgument("model task does not match node-classification dataset");
  const auto start = Clock::now();
  TrainReport report = start_report(model, hyper, seed, dataset_label(ds.meta));
  const GraphContext ctx(ds.graph, model.config());
  const auto train_nodes = ds.indices(Split::Train);
  const auto val_nodes = ds.indices(Split::Val);
  const auto test_nodes = ds.indices(Split::Test);
  std::vector<int> train_labels;
  for (Index i : train_nodes) train_labels.push_back(ds.graph.node_labels()[i]);
  {
    ad::NoGradGuard guard;
    model.forward(ctx, false, &report.flops);
  }

  Adam opt(model.parameters(), {hyper.lr, 0.9, 0.999, 1e-8, hyper.weight_decay});
  PlateauTracker plateau(hyper, true);
  Model::Snapshot best = model.snapshot();
  try {
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      opt.zero_grad();
      ad::Tensor logits = model.forward(ctx, true);
      ad::Tensor loss = ad::cross_entropy(ad::gather_rows(logits, train_nodes), train_labels);
      ad::backward(loss);
      const double lr_used = opt.lr();
      opt.step();

      Matrix eval;
      {
        ad::NoGradGuard guard;
        eval = model.forward(ctx, false).value();
      }
      EpochRecord rec{epoch, loss.item(), node_metric(eval, ds, train_nodes),
                      node_metric(eval, ds, val_nodes), lr_used};
      report.curve.push_back(rec);
      if (plateau.observe(rec.val_metric, opt)) {
        best = model.snapshot();
        report.best_epoch = epoch;
        report.train_metric = rec.train_metric;
        report.val_metric = rec.val_metric;
      }
      if (plateau.should_stop()) break;
    }
  } catch (const NumericError& e) {
    report.diverged = true;
    report.diagnostic = e.what();
    report.wall_seconds = seconds_since(start);
    throw DivergenceError(std::string("training diverged: ") + e.what(), std::move(report));
  }
  model.restore(best);
  report.test_metric = evaluate(model, ds, Split::Test);
  (void)test_nodes;
  report.wall_seconds = seconds_since(start);
  return report;
}

TrainReport train(Model& model, const GraphDataset& ds, const GraphSplit& split,
                  const TrainHyper& hyper, std::uint64_t seed) {
  hyper.validate();
  const Task task = model.config().task;
  if ((task == Task::NodeClass) ||
      (task == Task::GraphReg) != (ds.meta.task == DatasetTask::GraphRegression))
    throw InvalidArgument("model task does not match graph dataset task");
  if (split.train.empty() || split.val.empty() || split.test.empty())
    throw InvalidArgument("graph split needs non-empty train, val and test sets");
  const auto start = Clock::now();
  TrainReport report = start_report(model, hyper, seed, dataset_label(ds.meta));
  const bool higher = higher_is_better(task);
  const auto& cfg = model.config();
  const auto train_eval = make_batches(ds, split.train, cfg, 64);
  const auto val_batches = make_batches(ds, split.val, cfg, 64);
  {
    // One forward pass over a single training graph batch of the configured size.
    ad::NoGradGuard guard;
    const std::size_t len = std::min<std::size_t>(hyper.batch_size, split.train.size());
    const Batch probe = make_batch(ds, std::span(split.train).first(len), cfg);
    model.forward(probe.ctx, false, &report.flops);
  }

  Adam opt(model.parameters(), {hyper.lr, 0.9, 0.999, 1e-8, hyper.weight_decay});
  PlateauTracker plateau(hyper, higher);
  Model::Snapshot best = model.snapshot();
  std::vector<Index> order = split.train;
  try {
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      Rng rng(derive_seed(seed, Stream::Shuffle, static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order.begin(), order.end());
      double loss_total = 0.0;
      const double lr_used = opt.lr();
      for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(hyper.batch_size)) {
        const std::size_t len = std::min<std::size_t>(hyper.batch_size, order.size() - at);
        const auto members = std::span(order).subspan(at, len);
        const Batch batch = make_batch(ds, members, cfg);
        opt.zero_grad();
        ad::Tensor loss = batch_loss(model.forward(batch.ctx, true), ds, members, task);
        ad::backward(loss);
        opt.step();
        loss_total += loss.item() * static_cast<double>(len);
      }
      EpochRecord rec{epoch, loss_total / static_cast<double>(order.size()),
                      batched_metric(model, ds, train_eval), batched_metric(model, ds, val_batches),
                      lr_used};
      report.curve.push_back(rec);
      if (plateau.observe(rec.val_metric, opt)) {
        best = model.snapshot();
        report.best_epoch = epoch;
        report.train_metric = rec.train_metric;
        report.val_metric = rec.val_metric;
      }
      if (plateau.should_stop()) break;
    }
  } catch (const NumericError& e) {
    report.diverged = true;
    report.diagnostic = e.what();
    report.wall_seconds = seconds_since(start);
    throw DivergenceError(std::string("training diverged: ") + e.what(), std::move(report));
  }
  model.restore(best);
  report.test_metric = evaluate(model, ds, split.test);
  report.wall_seconds = seconds_since(start);
  return report;
}

double evaluate(Model& model, const NodeDataset& ds, Split split) {
  const auto nodes = ds.indices(split);
  if (nodes.empty()) throw InvalidArgument("evaluate: empty split");
  ad::NoGradGuard guard;
  const GraphContext ctx(ds.graph, model.config());
  return node_metric(model.forward(ctx, false).value(), ds, nodes);
}

double evaluate(Model& model, const GraphDataset& ds, std::span<const Index> graphs, int batch_size) {
  if (graphs.empty()) throw InvalidArgument("evaluate: empty split");
  const auto batches = make_batches(ds, graphs, model.config(), batch_size);
  return batched_metric(model, ds, batches);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("mean_std: no values");
  // Shifted by the first value so identical inputs give exactly zero spread.
  const double n = static_cast<double>(values.size());
  const double shift = values.front();
  double mean_d = 0.0;
  for (double v : values) mean_d += v - shift;
  mean_d /= n;
  double sq = 0.0;
  for (double v : values) sq += (v - shift - mean_d) * (v - shift - mean_d);
  return {shift + mean_d, std::sqrt(sq / n)};
}

std::vector<std::vector<Index>> stratified_folds(const GraphDataset& ds, int folds,
                                                 std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("need at least 2 folds");
  std::map<int, std::vector<Index>> by_class;
  const bool classification = ds.meta.task == DatasetTask::GraphClassification;
  for (Index g = 0; g < static_cast<Index>(ds.graphs.size()); ++g) {
    const int cls = classification ? static_cast<int>(ds.graphs[g].graph_label().value_or(0.0)) : 0;
    by_class[cls].push_back(g);
  }
  if (classification)
    for (const auto& [cls, members] : by_class)
      if (static_cast<int>(members.size()) < folds)
        throw InvalidArgument("class " + std::to_string(cls) + " has " +
                              std::to_string(members.size()) + " graphs, fewer than " +
                              std::to_string(folds) + " folds");
  if (static_cast<int>(ds.graphs.size()) < folds)
    throw InvalidArgument("fewer graphs than folds");
  Rng rng(derive_seed(seed, Stream::Folds));
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  std::size_t next = 0;
  for (auto& [cls, members] : by_class) {
    rng.shuffle(members.begin(), members.end());
    for (Index g : members) out[next++ % out.size()].push_back(g);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

GraphSplit holdout_split(const GraphDataset& ds, std::uint64_t seed) {
  const auto folds = stratified_folds(ds, 10, seed);
  GraphSplit s;
  s.test = folds[0];
  s.val = folds[1];
  for (std::size_t f = 2; f < folds.size(); ++f)
    s.train.insert(s.train.end(), folds[f].begin(), folds[f].end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

CvResult cross_validate(const ModelConfig& cfg, const GraphDataset& ds, const TrainHyper& hyper,
                        int folds, std::uint64_t seed, int jobs) {
  const auto assignment = stratified_folds(ds, folds, seed);
  CvResult result;
  result.reports.resize(assignment.size());
  run_parallel(assignment.size(), jobs, [&](std::size_t k) {
    GraphSplit split;
    split.test = assignment[k];
    split.val = assignment[(k + 1) % assignment.size()];
    for (std::size_t f = 0; f < assignment.size(); ++f)
      if (f != k && f != (k + 1) % assignment.size())
        split.train.insert(split.train.end(), assignment[f].begin(), assignment[f].end());
    std::sort(split.train.begin(), split.train.end());
    Model model = build_model_for(cfg, ds, split.train);
    result.reports[k] = train(model, ds, split, hyper, seed);
  });
  for (const TrainReport& r : result.reports) result.fold_metrics.push_back(r.test_metric);
  result.summary = mean_std(result.fold_metrics);
  return result;
}

std::size_t select_best(std::span<const double> values, bool higher_better) {
  if (values.empty()) throw InvalidArgument("select_best: no values");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (better(values[i], values[best], higher_better)) best = i;
  return best;
}

namespace {

template <class TrainOne>
SweepResult sweep(const ModelConfig& cfg, int jobs, TrainOne&& train_one) {
  if (cfg.variant != Variant::ActivationOnly)
    throw InvalidArgument("activation sweep requires the activation-only variant");
  constexpr std::array<Activation, 3> order{Activation::Relu, Activation::Prelu, Activation::Tanh};
  SweepResult result;
  result.reports.resize(order.size());
  run_parallel(order.size(), jobs, [&](std::size_t k) {
    ModelConfig c = cfg;
    c.activation = order[k];
    result.reports[k] = train_one(c);
  });
  std::vector<double> vals;
  for (const TrainReport& r : result.reports) vals.push_back(r.val_metric);
  result.selected_index = select_best(vals, higher_is_better(cfg.task));
  result.selected = order[result.selected_index];
  return result;
}

}  // namespace

SweepResult activation_sweep(const ModelConfig& cfg, const NodeDataset& ds,
                             const TrainHyper& hyper, std::uint64_t seed, int jobs) {
  return sweep(cfg, jobs, [&](const ModelConfig& c) {
    Model model = build_model_for(c, ds);
    return train(model, ds, hyper, seed);
  });
}

SweepResult activation_sweep(const ModelConfig& cfg, const GraphDataset& ds,
                             const GraphSplit& split, const TrainHyper& hyper,
                             std::uint64_t seed, int jobs) {
  return sweep(cfg, jobs, [&](const ModelConfig& c) {
    Model model = build_model_for(c, ds, split.train);
    return train(model, ds, split, hyper, seed);
  });
}

}  // namespace xgnn
