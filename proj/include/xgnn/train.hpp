#pragma once

#include "xgnn/dataset.hpp"
#include "xgnn/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xgnn {

struct TrainHyper {
  int epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  /// Multiplies the learning rate after `lr_patience` epochs without a
  /// validation improvement; 1 disables decay.
  double lr_decay_factor = 1.0;
  int lr_patience = 10;
  double min_lr = 0.0;
  /// Stop after this many epochs without a validation improvement; 0 disables.
  int early_stop_patience = 0;
  int batch_size = 32;
  /// Only "f64" is implemented.
  std::string precision = "f64";

  void validate() const;
  friend bool operator==(const TrainHyper&, const TrainHyper&) = default;
};

void to_json(nlohmann::json& j, const TrainHyper& h);
void from_json(const nlohmann::json& j, TrainHyper& h);

/// Defaults for a task/model pair: Adam lr 0.01 (0.2 for sgc), weight decay
/// 5e-4, 200 epochs for node tasks; lr 1e-3, decay 0.5 / patience 10,
/// batch 32 for graph tasks.
TrainHyper default_hyper(const ModelConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_metric = 0.0;
  double val_metric = 0.0;
  double lr = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
  ModelConfig config;
  TrainHyper hyper;
  std::uint64_t seed = 0;
  std::string dataset;
  std::string metric;  // "accuracy" or "mae"
  double train_metric = 0.0;
  double val_metric = 0.0;
  double test_metric = 0.0;
  int best_epoch = -1;
  std::vector<EpochRecord> curve;
  ParamCounts params;
  std::int64_t flops = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> mask_files;
  bool diverged = false;
  std::string diagnostic;
};

nlohmann::json to_json(const TrainReport& r);

/// Thrown when the loss (or any intermediate) becomes non-finite; carries
/// the report up to the failing epoch.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, TrainReport report)
      : Error(what), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

struct GraphSplit {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
};

bool higher_is_better(Task task);

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels);
double mean_abs_error(const Matrix& pred, const Matrix& target);

/// Model sized for the dataset; PNA's delta comes from training nodes/graphs.
Model build_model_for(const ModelConfig& cfg, const NodeDataset& ds);
Model build_model_for(const ModelConfig& cfg, const GraphDataset& ds, std::span<const Index> train);

/// Full-batch training on a node dataset. Test accuracy is computed once,
/// from the best-validation parameters.
TrainReport train(Model& model, const NodeDataset& ds, const TrainHyper& hyper, std::uint64_t seed);
/// Mini-batch training over block-diagonal batches of the training graphs.
TrainReport train(Model& model, const GraphDataset& ds, const GraphSplit& split,
                  const TrainHyper& hyper, std::uint64_t seed);

double evaluate(Model& model, const NodeDataset& ds, Split split);
double evaluate(Model& model, const GraphDataset& ds, std::span<const Index> graphs,
                int batch_size = 64);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population (divide by N)
};
MeanStd mean_std(std::span<const double> values);

/// Stratified assignment: graphs of each class are shuffled (seeded) and
/// dealt round-robin. Regression datasets are dealt without stratification.
std::vector<std::vector<Index>> stratified_folds(const GraphDataset& ds, int folds,
                                                 std::uint64_t seed);

/// Train/val/test split for a single run: fold 0 of a 10-fold stratified
/// assignment is the test set, fold 1 validation, the rest training.
GraphSplit holdout_split(const GraphDataset& ds, std::uint64_t seed);

struct CvResult {
  MeanStd summary;
  std::vector<double> fold_metrics;
  std::vector<TrainReport> reports;
};

/// Fold k is the test set, fold (k+1) mod folds the validation set, the rest train.
CvResult cross_validate(const ModelConfig& cfg, const GraphDataset& ds, const TrainHyper& hyper,
                        int folds, std::uint64_t seed, int jobs = 1);

/// Index of the best value; ties keep the earliest entry.
std::size_t select_best(std::span<const double> values, bool higher_better);

struct SweepResult {
  Activation selected = Activation::Relu;
  std::size_t selected_index = 0;
  std::vector<TrainReport> reports;  // relu, prelu, tanh
};

/// Trains the activation-only config with relu, prelu and tanh and selects
/// by validation metric (preference relu > prelu > tanh on ties).
SweepResult activation_sweep(const ModelConfig& cfg, const NodeDataset& ds,
                             const TrainHyper& hyper, std::uint64_t seed, int jobs = 1);
SweepResult activation_sweep(const ModelConfig& cfg, const GraphDataset& ds,
                             const GraphSplit& split, const TrainHyper& hyper,
                             std::uint64_t seed, int jobs = 1);

/// Runs fn(0..count-1) on up to `jobs` threads.
void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace xgnn
