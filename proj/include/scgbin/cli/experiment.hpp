#pragma once

// The subject x method x bin-count sweep: grid search with k-fold CV per cell,
// per-cell result files for resumption, and the aggregate tables and plot.

#include "scgbin/cli/config.hpp"
#include "scgbin/events.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace scgbin::cli {

struct CellResult {
  std::string subject;
  BinMethod method = BinMethod::EqualWidth;
  Index bins = 0;
  double accuracy = 0.0;     ///< mean fold accuracy of the selected grid cell
  double f1 = 0.0;           ///< F1 from the pooled confusion counts
  double accuracy_sd = 0.0;  ///< sample sd across folds
  double f1_sd = 0.0;        ///< sample sd of per-fold F1
  double cost = 0.0;
  double gamma = 0.0;
  Index achieved_bins = 0;
  std::uint64_t seed = 0;    ///< fold-assignment seed
  nlohmann::json detail;     ///< folds, pooled counts, grid, partition summary
};

nlohmann::json to_json(const CellResult& r);
CellResult cell_from_json(const nlohmann::json& j);

/// Fold seed for a subject; shared by every method and bin count of that
/// subject so all its cells see identical folds.
std::uint64_t fold_seed(std::uint64_t master_seed, int subject_index);

/// Bins the events, runs the grid search and packs the selected cell.
CellResult run_cell(const EventTable& events, const std::string& subject, BinMethod method, Index bins,
                    const ExperimentOptions& options, std::uint64_t seed);

/// Runs `count` tasks on up to `jobs` threads. Each task index runs exactly
/// once; the first failure (lowest index) is rethrown after all threads stop.
void parallel_for(int count, int jobs, const std::function<void(int)>& task);

struct SummaryRow {
  BinMethod method;
  Index bins;
  int subjects;
  double accuracy_mean;
  double accuracy_sd_subjects;  ///< sample sd of per-subject accuracies
  double accuracy_sd_folds;     ///< pooled within-subject fold sd, sqrt(mean of variances)
  double f1_mean;
  double f1_sd_subjects;
  double f1_sd_folds;
  double achieved_bins_mean;
};

/// One row per (method, bins) in the configured order.
std::vector<SummaryRow> summarize(std::span<const CellResult> cells, const ExperimentOptions& options);

std::string results_csv(std::span<const CellResult> cells);
std::string summary_csv(std::span<const SummaryRow> rows);
/// Accuracy and F1 against bin count: bins,method,accuracy_mean,accuracy_sd,f1_mean,f1_sd.
std::string trend_csv(std::span<const SummaryRow> rows);
/// Markdown table with one row per bin count and mean +- sd columns per method.
std::string summary_table(std::span<const SummaryRow> rows, const ExperimentOptions& options);

struct ExperimentRun {
  std::vector<CellResult> cells;
  std::vector<SummaryRow> summary;
  int cells_computed = 0;  ///< cells not restored from an earlier run
};

/// Writes into `out`: config.json, cells/<subject>_<method>_<bins>.json
/// (atomically, as each cell finishes), results.csv, summary.csv, table.md,
/// trend.csv, trend.svg and subjects.json. Cell files whose config hash
/// matches are reused.
ExperimentRun run_experiment(const AppConfig& config, const std::filesystem::path& out, int jobs, std::ostream& log);

}  // namespace scgbin::cli
