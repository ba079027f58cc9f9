#include "scgbin/cli/experiment.hpp"

#include "scgbin/binning_io.hpp"
#include "scgbin/cli/pipeline.hpp"
#include "scgbin/cli/reports.hpp"
#include "scgbin/cli/svg_plot.hpp"
#include "scgbin/error.hpp"
#include "scgbin/evaluation.hpp"
#include "scgbin/events_io.hpp"
#include "scgbin/rng.hpp"
#include "scgbin/text_io.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace scgbin::cli {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const CellResult& r) {
  return {{"subject", r.subject},     {"method", to_string(r.method)}, {"bins", r.bins},
          {"accuracy", r.accuracy},   {"f1", r.f1},                    {"accuracy_sd", r.accuracy_sd},
          {"f1_sd", r.f1_sd},         {"cost", r.cost},                {"gamma", r.gamma},
          {"achieved_bins", r.achieved_bins}, {"seed", r.seed},        {"detail", r.detail}};
}

CellResult cell_from_json(const json& j) {
  try {
    CellResult r;
    r.subject = j.at("subject").get<std::string>();
    r.method = parse_method(j.at("method").get<std::string>());
    r.bins = j.at("bins").get<Index>();
    r.accuracy = j.at("accuracy").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.accuracy_sd = j.at("accuracy_sd").get<double>();
    r.f1_sd = j.at("f1_sd").get<double>();
    r.cost = j.at("cost").get<double>();
    r.gamma = j.at("gamma").get<double>();
    r.achieved_bins = j.at("achieved_bins").get<Index>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.detail = j.value("detail", json::object());
    return r;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("cell result: ") + e.what());
  }
}

std::uint64_t fold_seed(std::uint64_t master_seed, int subject_index) {
  return derive_seed(master_seed, 0x666f6c6400000000ULL + static_cast<std::uint64_t>(subject_index));
}

CellResult run_cell(const EventTable& events, const std::string& subject, BinMethod method, Index bins,
                    const ExperimentOptions& options, std::uint64_t seed) {
  BinnedFeatures binned = bin_events(events.windows, method, bins);
  const GridResult grid =
      grid_search(binned.features, events.labels, options.k, options.cost_grid, options.gamma_grid, seed, options.solver);
  const CvResult& best = grid.best;

  CellResult r;
  r.subject = subject;
  r.method = method;
  r.bins = bins;
  r.accuracy = best.mean_accuracy;
  r.f1 = best.pooled_metrics.f1;
  r.accuracy_sd = best.accuracy_sd;
  r.f1_sd = best.f1_sd;
  r.cost = best.cost;
  r.gamma = best.gamma;
  r.achieved_bins = binned.partition.bin_count();
  r.seed = seed;

  long iterations = 0;
  for (const auto& cell : grid.cells) {
    for (const auto& f : cell.folds) iterations += f.iterations;
  }
  json partition = {{"achieved_bins", r.achieved_bins},
                    {"alpha", binned.partition.alpha() ? json(*binned.partition.alpha()) : json(nullptr)},
                    {"threshold", binned.partition.threshold() ? json(*binned.partition.threshold()) : json(nullptr)}};
  if (binned.variability) {
    partition["variability"] = {{"violations", binned.variability->violations.size()},
                                {"events_checked", binned.variability->events_checked},
                                {"worst_ratio", binned.variability->worst_ratio}};
  }
  r.detail = {{"events", events.size()},
              {"selected", cv_to_json(best)},
              {"grid", grid_to_json(grid, options.cost_grid, options.gamma_grid)},
              {"solver_iterations", iterations},
              {"partition", partition}};
  return r;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  if (count <= 0) return;
  const int threads = std::max(1, std::min(jobs, count));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<SummaryRow> summarize(std::span<const CellResult> cells, const ExperimentOptions& options) {
  std::vector<SummaryRow> rows;
  for (BinMethod m : options.methods) {
    for (Index b : options.bin_counts) {
      std::vector<double> acc;
      std::vector<double> f1;
      double acc_var = 0.0;
      double f1_var = 0.0;
      double achieved = 0.0;
      for (const auto& c : cells) {
        if (c.method != m || c.bins != b) continue;
        acc.push_back(c.accuracy);
        f1.push_back(c.f1);
        acc_var += c.accuracy_sd * c.accuracy_sd;
        f1_var += c.f1_sd * c.f1_sd;
        achieved += static_cast<double>(c.achieved_bins);
      }
      if (acc.empty()) continue;
      const double n = static_cast<double>(acc.size());
      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      rows.push_back({m, b, static_cast<int>(acc.size()), mean(acc), sample_sd(acc), std::sqrt(acc_var / n), mean(f1),
                      sample_sd(f1), std::sqrt(f1_var / n), achieved / n});
    }
  }
  return rows;
}

std::string results_csv(std::span<const CellResult> cells) {
  std::string out = "subject,method,bins,accuracy,f1,accuracy_sd,f1_sd,cost,gamma,achieved_bins,seed\n";
  for (const auto& c : cells) {
    out += c.subject + ',' + to_string(c.method) + ',' + std::to_string(c.bins) + ',' + format_double(c.accuracy) +
           ',' + format_double(c.f1) + ',' + format_double(c.accuracy_sd) + ',' + format_double(c.f1_sd) + ',' +
           format_double(c.cost) + ',' + format_double(c.gamma) + ',' + std::to_string(c.achieved_bins) + ',' +
           std::to_string(c.seed) + '\n';
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out =
      "method,bins,subjects,accuracy_mean,accuracy_sd_subjects,accuracy_sd_folds,f1_mean,f1_sd_subjects,"
      "f1_sd_folds,achieved_bins_mean\n";
  for (const auto& r : rows) {
    out += to_string(r.method) + ',' + std::to_string(r.bins) + ',' + std::to_string(r.subjects) + ',' +
           format_double(r.accuracy_mean) + ',' + format_double(r.accuracy_sd_subjects) + ',' +
           format_double(r.accuracy_sd_folds) + ',' + format_double(r.f1_mean) + ',' +
           format_double(r.f1_sd_subjects) + ',' + format_double(r.f1_sd_folds) + ',' +
           format_double(r.achieved_bins_mean) + '\n';
  }
  return out;
}

std::string trend_csv(std::span<const SummaryRow> rows) {
  std::string out = "bins,method,accuracy_mean,accuracy_sd,f1_mean,f1_sd\n";
  for (const auto& r : rows) {
    out += std::to_string(r.bins) + ',' + to_string(r.method) + ',' + format_double(r.accuracy_mean) + ',' +
           format_double(r.accuracy_sd_subjects) + ',' + format_double(r.f1_mean) + ',' +
           format_double(r.f1_sd_subjects) + '\n';
  }
  return out;
}

namespace {

std::string pm(double mean, double sd) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, sd);
  return buf;
}

std::string upper(BinMethod m) { return m == BinMethod::EqualWidth ? "EW" : "AW"; }

}  // namespace

std::string summary_table(std::span<const SummaryRow> rows, const ExperimentOptions& options) {
  std::map<std::pair<int, Index>, const SummaryRow*> by_key;
  for (const auto& r : rows) by_key[{static_cast<int>(r.method), r.bins}] = &r;

  std::string head = "| Bins |";
  std::string rule = "|---:|";
  for (const char* metric : {"Acc.", "F1"}) {
    for (BinMethod m : options.methods) {
      head += std::string(" ") + metric + ' ' + upper(m) + " |";
      rule += "---|";
    }
  }
  std::string out = head + '\n' + rule + '\n';
  for (Index b : options.bin_counts) {
    std::string line = "| " + std::to_string(b) + " |";
    for (int metric = 0; metric < 2; ++metric) {
      for (BinMethod m : options.methods) {
        const auto it = by_key.find({static_cast<int>(m), b});
        if (it == by_key.end()) {
          line += " - |";
          continue;
        }
        const SummaryRow& r = *it->second;
        line += ' ' + (metric == 0 ? pm(r.accuracy_mean, r.accuracy_sd_subjects) : pm(r.f1_mean, r.f1_sd_subjects)) +
                " |";
      }
    }
    out += line + '\n';
  }
  out += "\nMean ± sample sd across subjects; pooled within-subject fold sds are in summary.csv.\n";
  return out;
}

namespace {

json config_echo_for_cells(const json& resolved) {
  // Method and bin lists select which cells run; they do not change a cell.
  json j = resolved;
  j["experiment"].erase("methods");
  j["experiment"].erase("bin_counts");
  return j;
}

std::string cell_file_name(const std::string& subject, BinMethod m, Index bins) {
  return subject + "_" + cell_stem(m, bins) + ".json";
}

std::optional<json> load_tagged(const fs::path& path, std::uint64_t hash) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    json j = json::parse(read_file(path));
    if (j.value("config_hash", std::uint64_t{0}) != hash) return std::nullopt;
    return j;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

}  // namespace

ExperimentRun run_experiment(const AppConfig& config, const fs::path& out, int jobs, std::ostream& log) {
  config.validate();
  const json resolved = to_json(config);
  const std::uint64_t hash = config_hash(config_echo_for_cells(resolved));
  const fs::path cell_dir = out / "cells";
  fs::create_directories(cell_dir);
  write_file_atomic(out / "config.json", resolved.dump(2) + "\n");

  std::mutex log_mutex;
  auto say = [&](const std::string& line) {
    std::lock_guard<std::mutex> lock(log_mutex);
    log << line << '\n' << std::flush;
  };

  const int n_subjects = config.subject_count();
  std::vector<std::string> names(static_cast<std::size_t>(n_subjects));
  for (int s = 0; s < n_subjects; ++s) names[static_cast<std::size_t>(s)] = subject_name(s);

  struct CellTask {
    int subject;
    BinMethod method;
    Index bins;
  };
  std::vector<CellTask> tasks;
  for (int s = 0; s < n_subjects; ++s) {
    for (BinMethod m : config.experiment.methods) {
      for (Index b : config.experiment.bin_counts) tasks.push_back({s, m, b});
    }
  }

  std::vector<std::optional<CellResult>> results(tasks.size());
  std::vector<char> subject_needed(static_cast<std::size_t>(n_subjects), 0);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    const auto& name = names[static_cast<std::size_t>(task.subject)];
    if (auto j = load_tagged(cell_dir / cell_file_name(name, task.method, task.bins), hash)) {
      results[t] = cell_from_json(j->at("result"));
    } else {
      subject_needed[static_cast<std::size_t>(task.subject)] = 1;
    }
  }

  // Stage 1: events for every subject that still has cells to run.
  std::vector<EventTable> events(static_cast<std::size_t>(n_subjects));
  std::vector<json> subject_stats(static_cast<std::size_t>(n_subjects));
  parallel_for(n_subjects, jobs, [&](int s) {
    const auto k = static_cast<std::size_t>(s);
    const fs::path stats_path = cell_dir / (names[k] + ".subject.json");
    if (!subject_needed[k]) {
      if (auto j = load_tagged(stats_path, hash)) {
        subject_stats[k] = j->at("stats");
        return;
      }
    }
    PreprocessStats stats;
    if (config.datasets.empty()) {
      events[k] = synth_subject(config, s, &stats);
    } else {
      events[k] = read_event_dataset(config.datasets[k]);
      stats.detected = events[k].size();
      for (VolumeClass l : events[k].labels) ++(l == VolumeClass::HLV ? stats.hlv : stats.llv);
    }
    subject_stats[k] = stats.to_json();
    subject_stats[k]["subject"] = names[k];
    write_file_atomic(stats_path, json{{"config_hash", hash}, {"stats", subject_stats[k]}}.dump(1) + "\n");
    say(names[k] + ": " + std::to_string(events[k].size()) + " events (" + std::to_string(stats.hlv) + " HLV, " +
        std::to_string(stats.llv) + " LLV)");
    for (const auto& w : stats.warnings) say("warning: " + w);
  });

  // Stage 2: cells.
  std::vector<std::size_t> pending;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!results[t]) pending.push_back(t);
  }
  std::atomic<int> done{0};
  parallel_for(static_cast<int>(pending.size()), jobs, [&](int p) {
    const std::size_t t = pending[static_cast<std::size_t>(p)];
    const auto& task = tasks[t];
    const auto k = static_cast<std::size_t>(task.subject);
    CellResult r = run_cell(events[k], names[k], task.method, task.bins, config.experiment,
                            fold_seed(config.seed, task.subject));
    write_file_atomic(cell_dir / cell_file_name(names[k], task.method, task.bins),
                      json{{"config_hash", hash}, {"config", resolved}, {"result", to_json(r)}}.dump(1) + "\n");
    char buf[160];
    std::snprintf(buf, sizeof buf, "[%d/%zu] %s %s %lld: accuracy %.4f, f1 %.4f", ++done, pending.size(),
                  names[k].c_str(), to_string(task.method).c_str(), static_cast<long long>(task.bins), r.accuracy, r.f1);
    say(buf);
    results[t] = std::move(r);
  });

  ExperimentRun run;
  run.cells_computed = static_cast<int>(pending.size());
  run.cells.reserve(tasks.size());
  for (auto& r : results) run.cells.push_back(std::move(*r));
  run.summary = summarize(run.cells, config.experiment);

  write_file_atomic(out / "results.csv", results_csv(run.cells));
  write_file_atomic(out / "summary.csv", summary_csv(run.summary));
  write_file_atomic(out / "trend.csv", trend_csv(run.summary));
  write_file_atomic(out / "table.md", summary_table(run.summary, config.experiment));
  write_file_atomic(out / "trend.svg", trend_svg(run.summary, config.experiment));
  write_file_atomic(out / "subjects.json", json{{"config", resolved}, {"subjects", subject_stats}}.dump(1) + "\n");
  return run;
}

}  // namespace scgbin::cli
