#pragma once

#include "scgbin/cli/experiment.hpp"

#include <span>
#include <string>

namespace scgbin::cli {

/// Line chart of mean accuracy (solid) and F1 (dashed) against log2(bins),
/// one colour per method.
std::string trend_svg(std::span<const SummaryRow> rows, const ExperimentOptions& options);

}  // namespace scgbin::cli
