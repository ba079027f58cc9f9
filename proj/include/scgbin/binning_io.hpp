#pragma once

#include "scgbin/binning.hpp"

#include <json.hpp>

#include <filesystem>

namespace scgbin {

/// `{"length": L, "boundaries": [...], "alpha": a|null, "threshold": t|null}`
nlohmann::json partition_to_json(const BinPartition& p);
BinPartition partition_from_json(const nlohmann::json& j);

nlohmann::json variability_to_json(const VariabilityReport& r);

/// One row per event, header `bin_0,...,bin_{B-1}`.
void write_feature_csv(const std::filesystem::path& path, const Eigen::MatrixXd& features);
Eigen::MatrixXd read_feature_csv(const std::filesystem::path& path);

}  // namespace scgbin
