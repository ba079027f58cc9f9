#include "scgbin/cli/config.hpp"

#include "scgbin/error.hpp"
#include "scgbin/text_io.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace scgbin::cli {

using nlohmann::json;

std::string to_string(BinMethod m) { return m == BinMethod::EqualWidth ? "ew" : "aw"; }

BinMethod parse_method(std::string_view text) {
  if (text == "ew" || text == "equal_width") return BinMethod::EqualWidth;
  if (text == "aw" || text == "adaptive_width") return BinMethod::AdaptiveWidth;
  throw ParameterError("method: expected 'ew' or 'aw', got '" + std::string(text) + "'");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ParameterError("config: unknown field '" + where + key + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* name, T& target, const std::string& where) {
  if (!j.contains(name)) return;
  try {
    j.at(name).get_to(target);
  } catch (const json::exception&) {
    throw ParameterError("config: '" + where + name + "' has the wrong type");
  }
}

void require(bool ok, const std::string& field, const char* rule) {
  if (!ok) throw ParameterError("config: '" + field + "' " + rule);
}

}  // namespace

void AppConfig::validate() const {
  synth.validate();
  require(synthetic_subjects >= 1 || !datasets.empty(), "subjects", "must be >= 1 or a non-empty list of datasets");
  require(pipeline.lowpass_hz > 0.0, "pipeline.lowpass_hz", "must be > 0");
  require(pipeline.window_length >= 2, "pipeline.window_length", "must be >= 2");
  require(pipeline.detect.min_separation_s > 0.0, "pipeline.min_separation_s", "must be > 0");
  require(pipeline.detect.corr_threshold > 0.0 && pipeline.detect.corr_threshold <= 1.0, "pipeline.corr_threshold",
          "must lie in (0, 1]");
  require(pipeline.label.detrend_window_s > 0.0, "pipeline.detrend_window_s", "must be > 0");
  require(!experiment.bin_counts.empty(), "experiment.bin_counts", "must not be empty");
  for (Index b : experiment.bin_counts) {
    require(b >= 1 && b <= pipeline.window_length, "experiment.bin_counts", "entries must lie in [1, window_length]");
  }
  require(!experiment.methods.empty(), "experiment.methods", "must not be empty");
  require(experiment.k >= 2, "experiment.k", "must be >= 2");
  require(!experiment.cost_grid.empty(), "experiment.cost_grid", "must not be empty");
  require(!experiment.gamma_grid.empty(), "experiment.gamma_grid", "must not be empty");
  for (double c : experiment.cost_grid) require(c > 0.0 && std::isfinite(c), "experiment.cost_grid", "entries must be > 0");
  for (double g : experiment.gamma_grid) {
    require(g > 0.0 && std::isfinite(g), "experiment.gamma_grid", "entries must be > 0");
  }
  require(experiment.solver.tolerance > 0.0, "experiment.tolerance", "must be > 0");
  require(experiment.solver.max_iterations >= 1, "experiment.max_iterations", "must be >= 1");
}

int AppConfig::subject_count() const {
  return datasets.empty() ? synthetic_subjects : static_cast<int>(datasets.size());
}

AppConfig app_config_from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("config: expected a JSON object");
  reject_unknown(j, {"seed", "subjects", "synth", "pipeline", "experiment"}, "");
  AppConfig c;
  read_field(j, "seed", c.seed, "");

  if (j.contains("subjects")) {
    const json& s = j["subjects"];
    if (s.is_number_integer()) {
      c.synthetic_subjects = s.get<int>();
    } else if (s.is_array()) {
      for (const auto& p : s) {
        if (!p.is_string()) throw ParameterError("config: 'subjects' entries must be dataset paths");
        c.datasets.push_back(p.get<std::string>());
      }
      require(!c.datasets.empty(), "subjects", "list must not be empty");
    } else {
      throw ParameterError("config: 'subjects' must be a count or a list of dataset paths");
    }
  }

  if (j.contains("synth")) {
    const json& s = j["synth"];
    if (!s.is_object()) throw ParameterError("config: 'synth' must be an object");
    std::set<std::string> known;
    const json defaults = to_json(SynthConfig{});
    for (const auto& [key, value] : defaults.items()) known.insert(key);
    reject_unknown(s, known, "synth.");
    c.synth = synth_config_from_json(s);
  }

  if (j.contains("pipeline")) {
    const json& p = j["pipeline"];
    if (!p.is_object()) throw ParameterError("config: 'pipeline' must be an object");
    reject_unknown(p, {"lowpass_hz", "window_length", "min_separation_s", "corr_threshold", "detrend_window_s"},
                   "pipeline.");
    read_field(p, "lowpass_hz", c.pipeline.lowpass_hz, "pipeline.");
    read_field(p, "window_length", c.pipeline.window_length, "pipeline.");
    read_field(p, "min_separation_s", c.pipeline.detect.min_separation_s, "pipeline.");
    read_field(p, "corr_threshold", c.pipeline.detect.corr_threshold, "pipeline.");
    read_field(p, "detrend_window_s", c.pipeline.label.detrend_window_s, "pipeline.");
  }

  if (j.contains("experiment")) {
    const json& e = j["experiment"];
    if (!e.is_object()) throw ParameterError("config: 'experiment' must be an object");
    reject_unknown(e, {"bin_counts", "methods", "k", "cost_grid", "gamma_grid", "tolerance", "max_iterations"},
                   "experiment.");
    read_field(e, "bin_counts", c.experiment.bin_counts, "experiment.");
    read_field(e, "k", c.experiment.k, "experiment.");
    read_field(e, "cost_grid", c.experiment.cost_grid, "experiment.");
    read_field(e, "gamma_grid", c.experiment.gamma_grid, "experiment.");
    read_field(e, "tolerance", c.experiment.solver.tolerance, "experiment.");
    read_field(e, "max_iterations", c.experiment.solver.max_iterations, "experiment.");
    if (e.contains("methods")) {
      std::vector<std::string> names;
      read_field(e, "methods", names, "experiment.");
      c.experiment.methods.clear();
      for (const auto& n : names) c.experiment.methods.push_back(parse_method(n));
    }
  }

  set_seed(c, c.seed);
  c.validate();
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  if (path.empty()) {
    AppConfig c;
    set_seed(c, c.seed);
    return c;
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParameterError(path.string() + ": invalid JSON: " + e.what());
  }
  return app_config_from_json(j);
}

json to_json(const AppConfig& c) {
  json methods = json::array();
  for (BinMethod m : c.experiment.methods) methods.push_back(to_string(m));
  json subjects = c.datasets.empty() ? json(c.synthetic_subjects) : json(c.datasets);
  return {{"seed", c.seed},
          {"subjects", subjects},
          {"synth", to_json(c.synth)},
          {"pipeline",
           {{"lowpass_hz", c.pipeline.lowpass_hz},
            {"window_length", c.pipeline.window_length},
            {"min_separation_s", c.pipeline.detect.min_separation_s},
            {"corr_threshold", c.pipeline.detect.corr_threshold},
            {"detrend_window_s", c.pipeline.label.detrend_window_s}}},
          {"experiment",
           {{"bin_counts", c.experiment.bin_counts},
            {"methods", methods},
            {"k", c.experiment.k},
            {"cost_grid", c.experiment.cost_grid},
            {"gamma_grid", c.experiment.gamma_grid},
            {"tolerance", c.experiment.solver.tolerance},
            {"max_iterations", c.experiment.solver.max_iterations}}}};
}

void set_seed(AppConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.synth.seed = seed;
}

std::vector<Index> parse_bin_list(std::string_view text) {
  std::vector<Index> out;
  for (std::string_view part : split(text, ',')) {
    part = trim(part);
    Index v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || v < 1) {
      throw ParameterError("bins: expected comma-separated positive integers, got '" + std::string(text) + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ParameterError("bins: empty list");
  return out;
}

std::uint64_t config_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace scgbin::cli
