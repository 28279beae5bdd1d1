#include "cli.hpp"

#include "xgnn/checks.hpp"
#include "xgnn/dataset.hpp"
#include "xgnn/expander.hpp"
#include "xgnn/report.hpp"
#include "xgnn/train.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace xgnn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Flags shared by train, sweep and cv.
struct RunFlags {
  std::string dataset;
  std::string out;
  std::string config;
  std::string model;
  std::string variant;
  double density = 0.0;
  std::string activation;
  std::string head;
  int layers = 0;
  int hidden = 0;
  int epochs = 0;
  double lr = 0.0;
  double weight_decay = 0.0;
  int batch_size = 0;
  int early_stop = 0;
  bool batchnorm = false;
  bool embedding = false;
  bool no_self_loops = false;
  std::uint64_t seed = 0;
  int jobs = 1;
  int folds = 10;

  CLI::Option* density_opt = nullptr;
  CLI::Option* layers_opt = nullptr;
  CLI::Option* hidden_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* wd_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* early_opt = nullptr;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
  sub->add_option("--dataset", f.dataset, "Dataset directory (meta.json + data files)")->required();
  sub->add_option("--out", f.out, "Report JSON to write")->required();
  sub->add_option("--config", f.config, "Model config JSON; flags given here override it");
  sub->add_option("--model", f.model, "gcn | gin | sage | pna | sgc");
  sub->add_option("--variant", f.variant, "vanilla | expander | activation-only");
  f.density_opt = sub->add_option("--density", f.density, "Expander density in (0, 1]");
  sub->add_option("--activation", f.activation, "relu | prelu | tanh");
  sub->add_option("--head", f.head, "linear | mlp3");
  f.layers_opt = sub->add_option("--layers", f.layers, "Message-passing layers (K for sgc)");
  f.hidden_opt = sub->add_option("--hidden", f.hidden, "Hidden width p");
  f.epochs_opt = sub->add_option("--epochs", f.epochs, "Training epochs");
  f.lr_opt = sub->add_option("--lr", f.lr, "Adam learning rate");
  f.wd_opt = sub->add_option("--weight-decay", f.weight_decay, "L2 weight decay");
  f.batch_opt = sub->add_option("--batch-size", f.batch_size, "Graphs per mini-batch");
  f.early_opt = sub->add_option("--early-stop", f.early_stop,
                                "Stop after N epochs without validation improvement (0 = off)");
  sub->add_flag("--batchnorm", f.batchnorm, "Batch normalisation after each layer");
  sub->add_flag("--embedding", f.embedding, "Dense initial embedding of the input features");
  sub->add_flag("--no-self-loops", f.no_self_loops, "GCN/SGC normalisation without A + I");
  sub->add_option("--seed", f.seed, "Root seed for masks, init, shuffles and folds");
}

/// Config from --config and the model flags. Dataset-dependent fields are
/// filled in later by finish_config.
ModelConfig merge_config(const RunFlags& f) {
  ModelConfig cfg;
  cfg.layers = 0;
  cfg.hidden = 0;
  if (!f.config.empty()) from_json(read_json(f.config), cfg);
  if (!f.model.empty()) cfg.family = parse_family(f.model);
  if (!f.variant.empty()) cfg.variant = parse_variant(f.variant);
  if (f.density_opt->count()) cfg.density = f.density;
  if (!f.activation.empty()) cfg.activation = parse_activation(f.activation);
  if (!f.head.empty()) cfg.head = parse_head(f.head);
  if (f.layers_opt->count()) cfg.layers = f.layers;
  if (f.hidden_opt->count()) cfg.hidden = f.hidden;
  if (f.batchnorm) cfg.batchnorm = true;
  if (f.embedding) cfg.use_initial_embedding = true;
  if (f.no_self_loops) cfg.self_loops = false;
  cfg.seed = f.seed;

  if (cfg.variant == Variant::Expander && !cfg.density)
    throw InvalidArgument("--variant expander requires --density");
  if (cfg.variant != Variant::Expander && cfg.density)
    throw InvalidArgument("--density is only meaningful with --variant expander");
  return cfg;
}

/// Applies task, output width and task-dependent defaults (node: 2 layers
/// of width 256, linear head; graph: 4 layers of width 64, mlp3 head).
void finish_config(ModelConfig& cfg, const DatasetMeta& meta, bool head_given) {
  const bool node = meta.task == DatasetTask::NodeClassification;
  cfg.task = node ? Task::NodeClass
                  : meta.task == DatasetTask::GraphRegression ? Task::GraphReg : Task::GraphClass;
  if (cfg.task == Task::GraphReg) {
    cfg.output_dim = 1;
  } else {
    if (!meta.num_classes) throw DataError("meta.json lacks num_classes");
    cfg.output_dim = *meta.num_classes;
  }
  if (cfg.layers == 0) cfg.layers = node ? 2 : 4;
  if (cfg.hidden == 0) cfg.hidden = node ? 256 : 64;
  if (!head_given) cfg.head = node ? HeadKind::Linear : HeadKind::Mlp3;
  cfg.validate();
}

TrainHyper merge_hyper(const ModelConfig& cfg, const RunFlags& f) {
  TrainHyper h = default_hyper(cfg);
  if (f.epochs_opt->count()) h.epochs = f.epochs;
  if (f.lr_opt->count()) h.lr = f.lr;
  if (f.wd_opt->count()) h.weight_decay = f.weight_decay;
  if (f.batch_opt->count()) h.batch_size = f.batch_size;
  if (f.early_opt->count()) h.early_stop_patience = f.early_stop;
  h.validate();
  return h;
}

bool config_sets_head(const RunFlags& f) {
  if (!f.head.empty()) return true;
  return !f.config.empty() && read_json(f.config).contains("head");
}

struct Prepared {
  ModelConfig cfg;
  TrainHyper hyper;
  DatasetTask task;
  std::optional<NodeDataset> node;
  std::optional<GraphDataset> graph;
};

Prepared prepare(const RunFlags& f) {
  Prepared p;
  p.cfg = merge_config(f);
  // Dataset-independent checks run before anything is loaded.
  {
    ModelConfig probe = p.cfg;
    if (probe.layers == 0) probe.layers = 2;
    if (probe.hidden == 0) probe.hidden = 64;
    probe.validate();
  }
  const bool head_given = config_sets_head(f);
  p.task = peek_dataset_task(f.dataset);
  if (p.task == DatasetTask::NodeClassification) {
    p.node = load_node_dataset(f.dataset);
    finish_config(p.cfg, p.node->meta, head_given);
  } else {
    p.graph = load_graph_dataset(f.dataset);
    finish_config(p.cfg, p.graph->meta, head_given);
  }
  p.hyper = merge_hyper(p.cfg, f);
  return p;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string summary_line(const TrainReport& r) {
  return "test=" + fmt(r.test_metric) + " params=" + std::to_string(r.params.total) +
         " ratio=" + fmt(r.params.ratio_vs_vanilla);
}

fs::path artifact_dir(const fs::path& out) {
  fs::path dir = out;
  dir += ".artifacts";
  return dir;
}

int cmd_train(const RunFlags& f, std::ostream& out) {
  Prepared p = prepare(f);
  TrainReport report;
  Model model = p.node ? build_model_for(p.cfg, *p.node) : [&] {
    return build_model_for(p.cfg, *p.graph, holdout_split(*p.graph, p.cfg.seed).train);
  }();
  try {
    if (p.node)
      report = train(model, *p.node, p.hyper, p.cfg.seed);
    else
      report = train(model, *p.graph, holdout_split(*p.graph, p.cfg.seed), p.hyper, p.cfg.seed);
  } catch (const DivergenceError& e) {
    write_json_atomic(f.out, to_json(e.report()));
    throw;
  }
  const fs::path dir = artifact_dir(f.out);
  for (const std::string& m : save_parameters(model, dir))
    report.mask_files.push_back((dir.filename() / m).generic_string());
  write_json_atomic(f.out, to_json(report));
  out << summary_line(report) << '\n';
  return 0;
}

int cmd_sweep(const RunFlags& f, std::ostream& out) {
  Prepared p = prepare(f);
  SweepResult result = p.node ? activation_sweep(p.cfg, *p.node, p.hyper, p.cfg.seed, f.jobs)
                              : activation_sweep(p.cfg, *p.graph, holdout_split(*p.graph, p.cfg.seed),
                                                 p.hyper, p.cfg.seed, f.jobs);
  json doc;
  doc["selected"] = std::string(to_string(result.selected));
  doc["selected_index"] = result.selected_index;
  doc["reports"] = json::array();
  for (const TrainReport& r : result.reports) doc["reports"].push_back(to_json(r));
  write_json_atomic(f.out, doc);
  const TrainReport& best = result.reports[result.selected_index];
  out << "selected=" << to_string(result.selected) << " val=" << fmt(best.val_metric) << ' '
      << summary_line(best) << '\n';
  return 0;
}

int cmd_cv(const RunFlags& f, std::ostream& out) {
  Prepared p = prepare(f);
  if (!p.graph) throw InvalidArgument("cv needs a graph-level dataset");
  CvResult cv = cross_validate(p.cfg, *p.graph, p.hyper, f.folds, p.cfg.seed, f.jobs);
  json doc;
  doc["folds"] = f.folds;
  doc["test_mean"] = cv.summary.mean;
  doc["test_std"] = cv.summary.std;
  doc["fold_metrics"] = cv.fold_metrics;
  doc["reports"] = json::array();
  for (const TrainReport& r : cv.reports) doc["reports"].push_back(to_json(r));
  write_json_atomic(f.out, doc);
  out << "test=" << fmt(cv.summary.mean) << " std=" << fmt(cv.summary.std)
      << " params=" << cv.reports.front().params.total
      << " ratio=" << fmt(cv.reports.front().params.ratio_vs_vanilla) << '\n';
  return 0;
}

struct GradcheckFlags {
  std::string model;
  std::string variant;
  std::uint64_t seed = 0;
  double inject = 0.0;
};

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out) {
  std::vector<GradcheckCombo> combos;
  if (f.model == "sgc") {
    if (!f.variant.empty() && parse_variant(f.variant) != Variant::Vanilla)
      throw InvalidArgument("sgc has no " + f.variant + " variant");
    combos.push_back({Family::Sgc, Variant::Vanilla});
  } else {
    const std::optional<Family> family =
        f.model.empty() ? std::nullopt : std::optional(parse_family(f.model));
    const std::optional<Variant> variant =
        f.variant.empty() ? std::nullopt : std::optional(parse_variant(f.variant));
    for (const GradcheckCombo& c : gradcheck_combos())
      if ((!family || c.family == *family) && (!variant || c.variant == *variant))
        combos.push_back(c);
  }
  bool ok = true;
  for (const GradcheckCombo& c : combos) {
    const GradcheckResult r = model_gradcheck(c.family, c.variant, f.seed, f.inject);
    const bool pass = r.max_rel_error < 1e-4;
    ok = ok && pass;
    std::ostringstream err;
    err << std::scientific << std::setprecision(3) << r.max_rel_error;
    out << to_string(c.family) << ' ' << to_string(c.variant) << " max_rel_error=" << err.str()
        << ' ' << (pass ? "PASS" : "FAIL") << '\n';
  }
  return ok ? 0 : 2;
}

struct MaskFlags {
  Index rows = 0;
  Index cols = 0;
  double density = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sample_mask(const MaskFlags& f, std::ostream& out) {
  if (f.rows < 1 || f.cols < 1) throw InvalidArgument("--rows and --cols must be positive");
  const ExpanderMask mask = sample_mask(f.rows, f.cols, f.density, f.seed);
  {
    const fs::path path = f.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream file(path);
    if (!file) throw DataError("cannot write " + f.out);
    write_mask(file, mask);
    if (!file) throw DataError("write failed: " + f.out);
  }
  out << "degree=" << mask.degree() << " density=" << fmt(mask_density(mask))
      << " ones=" << mask.ones() << '\n';
  return 0;
}

struct SynthFlags {
  std::string task;
  std::string out;
  std::uint64_t seed = 0;
  Index nodes = 300;
  int classes = 3;
  double separation = 2.0;
  Index feature_dim = 8;
  double p_intra = 0.05;
  double p_inter = 0.005;
  Index graphs = 200;
  Index min_nodes = 15;
  Index max_nodes = 25;
  double p_a = 0.1;
  double p_b = 0.4;
  std::string mode = "er-density";
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  const DatasetTask task = parse_dataset_task(f.task);
  if (task == DatasetTask::NodeClassification) {
    NodeSynthOptions o;
    o.nodes = f.nodes;
    o.classes = f.classes;
    o.separation = f.separation;
    o.feature_dim = f.feature_dim;
    o.p_intra = f.p_intra;
    o.p_inter = f.p_inter;
    o.seed = f.seed;
    const NodeDataset ds = synth_node_dataset(o);
    write_node_dataset(ds, f.out);
    out << "nodes=" << ds.meta.num_nodes << " edges=" << ds.meta.num_edges << '\n';
  } else {
    GraphSynthOptions o;
    o.num_graphs = f.graphs;
    o.min_nodes = f.min_nodes;
    o.max_nodes = f.max_nodes;
    o.p_a = f.p_a;
    o.p_b = f.p_b;
    if (f.mode == "er-density")
      o.mode = GraphSynthMode::ErDensity;
    else if (f.mode == "community")
      o.mode = GraphSynthMode::Community;
    else
      throw InvalidArgument("unknown --mode '" + f.mode + "' (er-density | community)");
    o.regression = task == DatasetTask::GraphRegression;
    o.seed = f.seed;
    const GraphDataset ds = synth_graph_dataset(o);
    write_graph_dataset(ds, f.out);
    out << "graphs=" << ds.meta.num_graphs << " nodes=" << ds.meta.num_nodes
        << " edges=" << ds.meta.num_edges << '\n';
  }
  return 0;
}

struct ReportFlags {
  std::vector<std::string> in;
  std::string format = "table";
  std::string out;
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
  std::vector<json> docs;
  for (const std::string& p : f.in) docs.push_back(read_json(p));
  std::string text;
  if (f.format == "table") {
    text = render_table(docs);
  } else if (f.format == "json") {
    text = json(docs).dump(2) + "\n";
  } else {
    throw InvalidArgument("unknown --format '" + f.format + "' (table | json)");
  }
  if (f.out.empty()) {
    out << text;
  } else {
    std::ofstream file(f.out);
    if (!file) throw DataError("cannot write " + f.out);
    file << text;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expander and activation-only graph neural networks"};
  app.name("xgnn");
  app.require_subcommand(1);

  RunFlags train_flags, sweep_flags, cv_flags;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write its report");
  add_run_flags(train_cmd, train_flags);
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Train an activation-only model with relu, prelu and tanh");
  add_run_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--jobs", sweep_flags.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation on graph datasets");
  add_run_flags(cv_cmd, cv_flags);
  cv_cmd->add_option("--folds", cv_flags.folds, "Number of folds")->check(CLI::Range(2, 1000));
  cv_cmd->add_option("--jobs", cv_flags.jobs, "Concurrent folds")->check(CLI::PositiveNumber);

  GradcheckFlags gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check per model");
  gc_cmd->add_option("--model", gc.model, "Restrict to one family (sgc runs alone)");
  gc_cmd->add_option("--variant", gc.variant, "Restrict to one variant");
  gc_cmd->add_option("--seed", gc.seed, "Seed for graph, labels and weights");
  gc_cmd->add_option("--inject-bias", gc.inject)->group("");

  MaskFlags mf;
  auto* mask_cmd = app.add_subcommand("sample-mask", "Sample an expander mask and write it");
  mask_cmd->add_option("--rows", mf.rows, "Input units")->required();
  mask_cmd->add_option("--cols", mf.cols, "Output units")->required();
  mask_cmd->add_option("--density", mf.density, "Density in (0, 1]")->required();
  mask_cmd->add_option("--seed", mf.seed, "Mask seed");
  mask_cmd->add_option("--out", mf.out, "Mask file to write")->required();

  SynthFlags sf;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset directory");
  synth_cmd->add_option("--task", sf.task,
                        "node-classification | graph-classification | graph-regression")
      ->required();
  synth_cmd->add_option("--out", sf.out, "Output directory")->required();
  synth_cmd->add_option("--seed", sf.seed, "Generator seed");
  synth_cmd->add_option("--nodes", sf.nodes, "Node task: number of nodes");
  synth_cmd->add_option("--classes", sf.classes, "Node task: number of classes");
  synth_cmd->add_option("--separation", sf.separation, "Node task: class-mean distance");
  synth_cmd->add_option("--feature-dim", sf.feature_dim, "Node task: feature width");
  synth_cmd->add_option("--p-intra", sf.p_intra, "Node task: edge probability within a class");
  synth_cmd->add_option("--p-inter", sf.p_inter, "Node task: edge probability across classes");
  synth_cmd->add_option("--graphs", sf.graphs, "Graph tasks: number of graphs");
  synth_cmd->add_option("--min-nodes", sf.min_nodes, "Graph tasks: smallest graph");
  synth_cmd->add_option("--max-nodes", sf.max_nodes, "Graph tasks: largest graph");
  synth_cmd->add_option("--p-a", sf.p_a, "Graph tasks: first edge probability");
  synth_cmd->add_option("--p-b", sf.p_b, "Graph tasks: second edge probability");
  synth_cmd->add_option("--mode", sf.mode, "Graph tasks: er-density | community");

  ReportFlags rf;
  auto* report_cmd = app.add_subcommand("report", "Render run reports as a text table");
  report_cmd->add_option("--in", rf.in, "Report JSON files")->required();
  report_cmd->add_option("--format", rf.format, "table | json");
  report_cmd->add_option("--out", rf.out, "Write here instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    return 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, out);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, out);
    if (*cv_cmd) return cmd_cv(cv_flags, out);
    if (*gc_cmd) return cmd_gradcheck(gc, out);
    if (*mask_cmd) return cmd_sample_mask(mf, out);
    if (*synth_cmd) return cmd_synth(sf, out);
    if (*report_cmd) return cmd_report(rf, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace xgnn
