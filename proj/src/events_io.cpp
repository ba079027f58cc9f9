#include "scgbin/events_io.hpp"

#include "scgbin/error.hpp"
#include "scgbin/signal_io.hpp"
#include "scgbin/text_io.hpp"

#include <json.hpp>

#include <map>

namespace scgbin {

using nlohmann::json;

void write_event_dataset(const std::filesystem::path& dir, const EventTable& table, const std::string& stem) {
  const std::string samples_file = stem + ".f32";
  std::string lines;
  for (Index i = 0; i < table.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    json j = {{"subject", table.subjects[k]},
              {"onset", table.onsets[k]},
              {"label", std::string(to_string(table.labels[k]))},
              {"volume", table.volumes[k]},
              {"samples_file", samples_file},
              {"row", i}};
    lines += j.dump();
    lines += '\n';
  }
  write_matrix_f32(dir / samples_file, table.windows, table.rate_hz);
  write_file_atomic(dir / (stem + ".jsonl"), lines);
}

EventTable read_event_dataset(const std::filesystem::path& jsonl_path) {
  const std::string text = read_file(jsonl_path);
  const auto base = jsonl_path.parent_path();
  std::map<std::string, EventMatrix> matrices;
  std::map<std::string, double> rates;
  EventTable t;
  std::vector<Eigen::VectorXd> rows;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto file = j.at("samples_file").get<std::string>();
      if (!matrices.contains(file)) {
        double rate = 0.0;
        matrices[file] = read_matrix_f32(base / file, &rate);
        rates[file] = rate;
      }
      const EventMatrix& m = matrices[file];
      const auto row = j.at("row").get<Index>();
      if (row < 0 || row >= m.rows()) throw ParameterError(jsonl_path.string() + ": row out of range");
      rows.emplace_back(m.row(row).transpose());
      t.rate_hz = rates[file];
      const auto label = j.at("label").get<std::string>();
      if (label != "HLV" && label != "LLV") throw ParameterError(jsonl_path.string() + ": label must be HLV or LLV");
      t.labels.push_back(label == "HLV" ? VolumeClass::HLV : VolumeClass::LLV);
      t.onsets.push_back(j.at("onset").get<Index>());
      t.volumes.push_back(j.value("volume", 0.0));
      t.subjects.push_back(j.value("subject", std::string{}));
    } catch (const json::exception& e) {
      throw ParameterError(jsonl_path.string() + ": " + e.what());
    }
  }
  if (rows.empty()) throw ParameterError(jsonl_path.string() + ": no events");
  t.windows = stack_events(rows);
  return t;
}

}  // namespace scgbin
