#include "scgbin/cli/commands.hpp"

#include "scgbin/binning_io.hpp"
#include "scgbin/cli/config.hpp"
#include "scgbin/cli/experiment.hpp"
#include "scgbin/cli/pipeline.hpp"
#include "scgbin/cli/reports.hpp"
#include "scgbin/error.hpp"
#include "scgbin/evaluation.hpp"
#include "scgbin/events_io.hpp"
#include "scgbin/signal_io.hpp"
#include "scgbin/text_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>

namespace scgbin::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
  std::string method;
  std::string bins;
};

AppConfig resolve_config(const CommonFlags& f) {
  AppConfig c = load_app_config(f.config);
  if (f.seed) set_seed(c, *f.seed);
  if (!f.method.empty()) c.experiment.methods = {parse_method(f.method)};
  if (!f.bins.empty()) c.experiment.bin_counts = parse_bin_list(f.bins);
  c.validate();
  return c;
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(1) + "\n");
}

// Bin-mean features for an event table from, in order of precedence, a
// feature CSV, a partition file, or a fresh (method, bins) fit.
struct FeatureSource {
  Eigen::MatrixXd features;
  std::optional<BinPartition> partition;
  json info;
};

FeatureSource resolve_features(const EventTable& events, const std::string& features_path,
                               const std::string& partition_path, const AppConfig& config) {
  FeatureSource fs_;
  if (!features_path.empty()) {
    fs_.features = read_feature_csv(features_path);
    if (fs_.features.rows() != events.size()) {
      throw ParameterError(features_path + ": " + std::to_string(fs_.features.rows()) + " rows but the dataset has " +
                           std::to_string(events.size()) + " events");
    }
    fs_.info = {{"features", features_path}};
    return fs_;
  }
  if (!partition_path.empty()) {
    BinPartition p = partition_from_json(json::parse(read_file(partition_path)));
    fs_.features = extract_feature_matrix(events.windows, p);
    fs_.info = {{"partition", partition_path}, {"achieved_bins", p.bin_count()}};
    fs_.partition = std::move(p);
    return fs_;
  }
  const BinMethod method = config.experiment.methods.front();
  const Index bins = config.experiment.bin_counts.front();
  BinnedFeatures b = bin_events(events.windows, method, bins);
  fs_.features = std::move(b.features);
  fs_.info = {{"method", to_string(method)}, {"bins", bins}, {"achieved_bins", b.partition.bin_count()}};
  fs_.partition = std::move(b.partition);
  return fs_;
}

// ---- synth ----

int cmd_synth(const CommonFlags& f, std::optional<int> subjects, std::ostream& out) {
  AppConfig c = resolve_config(f);
  if (subjects) {
    c.synthetic_subjects = *subjects;
    c.datasets.clear();
    c.validate();
  }
  const fs::path dir = f.out;
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(c));
  write_signal_f32(dir / "template.f32", SampledSignal(nominal_event(c.synth), c.synth.rate_hz, "g"));
  std::mutex m;
  parallel_for(c.synthetic_subjects, f.jobs, [&](int s) {
    write_synth_subject(c, s, dir);
    std::lock_guard<std::mutex> lock(m);
    out << "wrote " << (dir / subject_name(s)).string() << " (" << c.synth.trials << " trials)\n";
  });
  return kExitOk;
}

// ---- pipeline ----

struct PipelineFlags {
  std::vector<std::string> recordings;
  std::string templ;
  std::vector<Index> template_range;
  std::string subject = "s01";
};

int cmd_pipeline(const CommonFlags& f, const PipelineFlags& p, std::ostream& out, std::ostream& err) {
  AppConfig c = load_app_config(f.config);
  if (f.seed) set_seed(c, *f.seed);
  c.experiment.methods = {f.method.empty() ? BinMethod::AdaptiveWidth : parse_method(f.method)};
  c.experiment.bin_counts = f.bins.empty() ? std::vector<Index>{16} : parse_bin_list(f.bins);
  c.validate();

  std::vector<RecordingInput> recs;
  for (const auto& r : p.recordings) recs.push_back(read_recording_dir(r));
  Eigen::VectorXd templ;
  if (!p.templ.empty()) {
    templ = read_signal(p.templ).samples();
  } else if (p.template_range.size() == 2) {
    templ = cut_template(recs.front().scg, p.template_range[0], p.template_range[1]);
  } else {
    throw ParameterError("pipeline: give --template or --template-range BEGIN END");
  }

  PreprocessStats stats;
  const EventTable events = preprocess(recs, templ, p.subject, c.pipeline, &stats);
  const fs::path dir = f.out;
  fs::create_directories(dir);
  write_event_dataset(dir, events);
  for (const auto& w : stats.warnings) err << "warning: " << w << '\n';

  out << "detected " << stats.detected << " events (" << stats.dropped << " dropped at the recording end)\n";
  if (stats.truth_total > 0) {
    out << "ground truth: " << stats.truth_matched << "/" << stats.truth_total << " onsets within +-"
        << kOnsetTolerance << " samples\n";
  }
  out << "labels: " << stats.hlv << " HLV, " << stats.llv << " LLV\n";

  json partitions = json::array();
  for (BinMethod m : c.experiment.methods) {
    for (Index b : c.experiment.bin_counts) {
      BinnedFeatures binned = bin_events(events.windows, m, b);
      const std::string stem = cell_stem(m, b);
      write_json(dir / ("partition_" + stem + ".json"), partition_to_json(binned.partition));
      write_feature_csv(dir / ("features_" + stem + ".csv"), binned.features);
      json entry = {{"method", to_string(m)}, {"bins", b}, {"achieved_bins", binned.partition.bin_count()}};
      out << stem << ": " << binned.partition.bin_count() << " bins";
      if (binned.variability) {
        const auto& v = *binned.variability;
        write_json(dir / ("variability_" + stem + ".json"), variability_to_json(v));
        out << ", variability: " << v.violations.size() << " (event, bin) pairs above " << fmt(v.tolerance, "%.2f")
            << " x T, worst ratio " << fmt(v.worst_ratio, "%.3f");
        entry["variability_violations"] = v.violations.size();
      }
      out << '\n';
      partitions.push_back(entry);
    }
  }
  write_json(dir / "pipeline.json", {{"stats", stats.to_json()}, {"partitions", partitions}, {"config", to_json(c)}});
  return kExitOk;
}

// ---- bin ----

int cmd_bin(const CommonFlags& f, const std::string& events_path, std::ostream& out) {
  AppConfig c = resolve_config(f);
  const EventTable events = read_event_dataset(events_path);
  const fs::path dir = f.out;
  fs::create_directories(dir);
  for (BinMethod m : c.experiment.methods) {
    for (Index b : c.experiment.bin_counts) {
      BinnedFeatures binned = bin_events(events.windows, m, b);
      const std::string stem = cell_stem(m, b);
      write_json(dir / ("partition_" + stem + ".json"), partition_to_json(binned.partition));
      write_feature_csv(dir / ("features_" + stem + ".csv"), binned.features);
      out << stem << ": " << binned.partition.bin_count() << " bins";
      if (binned.variability) {
        write_json(dir / ("variability_" + stem + ".json"), variability_to_json(*binned.variability));
        out << ", " << binned.variability->violations.size() << " variability violations";
      }
      out << '\n';
    }
  }
  return kExitOk;
}

// ---- train / evaluate ----

struct ModelFlags {
  std::string events;
  std::string features;
  std::string partition;
  std::string model;
  std::optional<double> cost;
  std::optional<double> gamma;
};

AppConfig model_config(const CommonFlags& f) {
  AppConfig c = load_app_config(f.config);
  if (f.seed) set_seed(c, *f.seed);
  c.experiment.methods = {f.method.empty() ? BinMethod::AdaptiveWidth : parse_method(f.method)};
  if (!f.bins.empty()) c.experiment.bin_counts = parse_bin_list(f.bins);
  else c.experiment.bin_counts = {16};
  c.validate();
  return c;
}

// Grid search unless both hyperparameters are fixed on the command line.
GridResult select_cell(const FeatureSource& src, const EventTable& events, const ModelFlags& mf, const AppConfig& c,
                       std::vector<double>& costs, std::vector<double>& gammas) {
  costs = mf.cost ? std::vector<double>{*mf.cost} : c.experiment.cost_grid;
  gammas = mf.gamma ? std::vector<double>{*mf.gamma} : c.experiment.gamma_grid;
  return grid_search(src.features, events.labels, c.experiment.k, costs, gammas, fold_seed(c.seed, 0),
                     c.experiment.solver);
}

int cmd_train(const CommonFlags& f, const ModelFlags& mf, std::ostream& out) {
  const AppConfig c = model_config(f);
  const EventTable events = read_event_dataset(mf.events);
  const FeatureSource src = resolve_features(events, mf.features, mf.partition, c);
  std::vector<double> costs;
  std::vector<double> gammas;
  double cost = mf.cost.value_or(0.0);
  double gamma = mf.gamma.value_or(0.0);
  json selection = nullptr;
  if (!mf.cost || !mf.gamma) {
    const GridResult grid = select_cell(src, events, mf, c, costs, gammas);
    cost = grid.best.cost;
    gamma = grid.best.gamma;
    selection = {{"cv", cv_to_json(grid.best)}, {"grid", grid_to_json(grid, costs, gammas)},
                 {"seed", fold_seed(c.seed, 0)}, {"k", c.experiment.k}};
    out << "grid search: cost " << format_double(cost) << ", gamma " << format_double(gamma) << ", CV accuracy "
        << fmt(grid.best.mean_accuracy) << '\n';
  }
  TrainedModel model = fit_model(src.features, events.labels, cost, gamma, c.experiment.solver);
  model.partition = src.partition;
  json j = model_to_json(model);
  j["features"] = src.info;
  j["selection"] = selection;
  j["config"] = to_json(c);
  write_json(f.out, j);
  out << "trained on " << events.size() << " events: " << model.svm.support_samples.rows()
      << " support vectors, solver iterations " << model.svm.diagnostics.iterations << ", KKT violation "
      << fmt(model.svm.diagnostics.kkt_violation, "%.2e") << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& f, const ModelFlags& mf, std::ostream& out) {
  const AppConfig c = model_config(f);
  const EventTable events = read_event_dataset(mf.events);
  json report;
  if (!mf.model.empty()) {
    const TrainedModel model = model_from_json(json::parse(read_file(mf.model)));
    std::string partition_path = mf.partition;
    FeatureSource src;
    if (mf.features.empty() && partition_path.empty() && model.partition) {
      src.features = extract_feature_matrix(events.windows, *model.partition);
      src.info = {{"partition", "model"}, {"achieved_bins", model.partition->bin_count()}};
    } else {
      src = resolve_features(events, mf.features, partition_path, c);
    }
    if (src.features.cols() != model.scaler.mean.size()) {
      throw ParameterError("evaluate: features have " + std::to_string(src.features.cols()) +
                           " columns but the model expects " + std::to_string(model.scaler.mean.size()));
    }
    ConfusionCounts counts;
    for (Index i = 0; i < events.size(); ++i) {
      counts.add(events.labels[static_cast<std::size_t>(i)], predict(model, src.features.row(i).transpose()).label);
    }
    const Metrics m = compute_metrics(counts);
    report = {{"mode", "held_out"}, {"model", mf.model}, {"features", src.info}, {"positive_class", "HLV"},
              {"counts", counts_to_json(counts)}, {"metrics", metrics_to_json(m)}};
    out << "accuracy " << fmt(m.accuracy) << ", f1 " << fmt(m.f1) << " on " << events.size() << " events\n";
  } else {
    const FeatureSource src = resolve_features(events, mf.features, mf.partition, c);
    std::vector<double> costs;
    std::vector<double> gammas;
    const GridResult grid = select_cell(src, events, mf, c, costs, gammas);
    report = {{"mode", "cross_validation"},
              {"features", src.info},
              {"k", c.experiment.k},
              {"seed", fold_seed(c.seed, 0)},
              {"selected", cv_to_json(grid.best)},
              {"grid", grid_to_json(grid, costs, gammas)}};
    out << "cost " << format_double(grid.best.cost) << ", gamma " << format_double(grid.best.gamma)
        << ": accuracy " << fmt(grid.best.mean_accuracy) << " +- " << fmt(grid.best.accuracy_sd) << ", pooled f1 "
        << fmt(grid.best.pooled_metrics.f1) << '\n';
  }
  report["config"] = to_json(c);
  write_json(f.out, report);
  return kExitOk;
}

// ---- experiment ----

int cmd_experiment(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const AppConfig c = resolve_config(f);
  const ExperimentRun run = run_experiment(c, f.out, f.jobs, err);
  out << summary_table(run.summary, c.experiment);
  out << run.cells.size() << " cells (" << run.cells_computed << " computed, "
      << run.cells.size() - static_cast<std::size_t>(run.cells_computed) << " restored); results in " << f.out << '\n';
  return kExitOk;
}

void add_common(CLI::App* app, CommonFlags& f, bool needs_out, bool with_jobs) {
  app->add_option("--config", f.config, "JSON configuration file");
  app->add_option("--seed", f.seed, "master seed (overrides the config)");
  if (with_jobs) app->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  auto* o = app->add_option("--out", f.out, "output path");
  if (needs_out) o->required();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive-width binning of seismocardiogram events and lung-volume phase classification"};
  app.require_subcommand(1);

  CommonFlags synth_f, pipe_f, bin_f, train_f, eval_f, exp_f;
  std::optional<int> synth_subjects;
  auto* synth = app.add_subcommand("synth", "generate synthetic recordings with ground truth");
  add_common(synth, synth_f, true, true);
  synth->add_option("--subjects", synth_subjects, "number of synthetic subjects")->check(CLI::PositiveNumber);

  PipelineFlags pf;
  auto* pipe = app.add_subcommand("pipeline", "filter, detect, segment, label and bin recordings of one subject");
  add_common(pipe, pipe_f, true, false);
  pipe->add_option("--recording", pf.recordings, "recording directory (scg and volume signals); repeatable")
      ->required();
  pipe->add_option("--template", pf.templ, "template signal file");
  pipe->add_option("--template-range", pf.template_range, "cut the template from samples [BEGIN, END) of the first recording")
      ->expected(2);
  pipe->add_option("--subject", pf.subject, "subject identifier");
  pipe->add_option("--method", pipe_f.method, "ew or aw (default aw)");
  pipe->add_option("--bins", pipe_f.bins, "comma-separated bin counts (default 16)");

  std::string bin_events_path;
  auto* bin = app.add_subcommand("bin", "fit partitions and extract bin-mean features from a labeled dataset");
  add_common(bin, bin_f, true, false);
  bin->add_option("--events", bin_events_path, "labeled-event dataset (.jsonl)")->required();
  bin->add_option("--method", bin_f.method, "ew or aw");
  bin->add_option("--bins", bin_f.bins, "comma-separated bin counts");

  ModelFlags train_m, eval_m;
  auto add_model_flags = [](CLI::App* a, CommonFlags& f, ModelFlags& m) {
    a->add_option("--events", m.events, "labeled-event dataset (.jsonl)")->required();
    a->add_option("--features", m.features, "feature CSV aligned with the dataset rows");
    a->add_option("--partition", m.partition, "partition JSON used to extract features");
    a->add_option("--method", f.method, "ew or aw, when fitting a partition (default aw)");
    a->add_option("--bins", f.bins, "bin count when fitting a partition (default 16)");
    a->add_option("--cost", m.cost, "fix C instead of searching the grid")->check(CLI::PositiveNumber);
    a->add_option("--gamma", m.gamma, "fix gamma instead of searching the grid")->check(CLI::PositiveNumber);
  };
  auto* train = app.add_subcommand("train", "train an RBF SVM on a labeled dataset");
  add_common(train, train_f, true, false);
  add_model_flags(train, train_f, train_m);

  auto* eval = app.add_subcommand("evaluate", "cross-validate, or score a trained model on a dataset");
  add_common(eval, eval_f, true, false);
  add_model_flags(eval, eval_f, eval_m);
  eval->add_option("--model", eval_m.model, "trained model JSON (held-out evaluation)");

  auto* exp = app.add_subcommand("experiment", "subject x method x bins sweep with grid search and k-fold CV");
  add_common(exp, exp_f, true, true);
  exp->add_option("--method", exp_f.method, "restrict to ew or aw");
  exp->add_option("--bins", exp_f.bins, "comma-separated bin counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(synth_f, synth_subjects, out);
    if (*pipe) return cmd_pipeline(pipe_f, pf, out, err);
    if (*bin) return cmd_bin(bin_f, bin_events_path, out);
    if (*train) return cmd_train(train_f, train_m, out);
    if (*eval) return cmd_evaluate(eval_f, eval_m, out);
    if (*exp) return cmd_experiment(exp_f, out, err);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "error: invalid JSON input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const EmptyResultError& e) {
    err << "error: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace scgbin::cli
