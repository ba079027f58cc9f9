#include "scgbin/binning_io.hpp"

#include "scgbin/text_io.hpp"

#include <cmath>

namespace scgbin {

using nlohmann::json;

json partition_to_json(const BinPartition& p) {
  json j;
  j["length"] = p.length();
  j["boundaries"] = p.boundaries();
  j["alpha"] = p.alpha() ? json(*p.alpha()) : json(nullptr);
  j["threshold"] = p.threshold() ? json(*p.threshold()) : json(nullptr);
  return j;
}

BinPartition partition_from_json(const json& j) {
  try {
    auto bounds = j.at("boundaries").get<std::vector<Index>>();
    std::optional<double> alpha;
    std::optional<double> threshold;
    if (j.contains("alpha") && !j["alpha"].is_null()) alpha = j["alpha"].get<double>();
    if (j.contains("threshold") && !j["threshold"].is_null()) threshold = j["threshold"].get<double>();
    BinPartition p(std::move(bounds), alpha, threshold);
    if (j.contains("length") && j["length"].get<Index>() != p.length()) {
      throw ParameterError("partition: 'length' does not match the last boundary");
    }
    return p;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("partition: ") + e.what());
  }
}

json variability_to_json(const VariabilityReport& r) {
  json j;
  j["threshold"] = r.threshold;
  j["tolerance"] = r.tolerance;
  j["events_checked"] = r.events_checked;
  j["violation_count"] = r.violations.size();
  j["worst_ratio"] = std::isfinite(r.worst_ratio) ? json(r.worst_ratio) : json("inf");
  j["worst_event"] = r.worst_event;
  j["worst_bin"] = r.worst_bin;
  json list = json::array();
  for (const auto& v : r.violations) {
    list.push_back({{"event", v.event},
                    {"bin", v.bin},
                    {"std", v.std},
                    {"ratio", std::isfinite(v.ratio) ? json(v.ratio) : json("inf")}});
  }
  j["violations"] = std::move(list);
  return j;
}

void write_feature_csv(const std::filesystem::path& path, const Eigen::MatrixXd& features) {
  std::string out;
  for (Index c = 0; c < features.cols(); ++c) {
    if (c) out += ',';
    out += "bin_" + std::to_string(c);
  }
  out += '\n';
  for (Index r = 0; r < features.rows(); ++r) {
    for (Index c = 0; c < features.cols(); ++c) {
      if (c) out += ',';
      out += format_double(features(r, c));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Eigen::MatrixXd read_feature_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  Index cols = -1;
  bool header = true;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (header) {
      cols = static_cast<Index>(fields.size());
      for (Index c = 0; c < cols; ++c) {
        if (trim(fields[static_cast<std::size_t>(c)]) != "bin_" + std::to_string(c)) {
          throw ParameterError(path.string() + ": expected header bin_0..bin_{B-1}");
        }
      }
      header = false;
      continue;
    }
    if (static_cast<Index>(fields.size()) != cols) throw ParameterError(path.string() + ": ragged feature row");
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, "feature"));
    rows.push_back(std::move(row));
  }
  if (cols < 1) throw ParameterError(path.string() + ": empty feature file");
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index c = 0; c < cols; ++c) m(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace scgbin
