#include "scgbin/signal_io.hpp"

#include "scgbin/error.hpp"
#include "scgbin/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace scgbin {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "f32 IO assumes a little-endian host");

std::vector<float> read_floats(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() % sizeof(float) != 0) {
    throw ParameterError(path.string() + ": size is not a multiple of 4 bytes");
  }
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

void write_floats(const std::filesystem::path& path, const double* data, Index n) {
  std::string bytes(static_cast<std::size_t>(n) * sizeof(float), '\0');
  for (Index i = 0; i < n; ++i) {
    const auto f = static_cast<float>(data[i]);
    std::memcpy(bytes.data() + i * sizeof(float), &f, sizeof(float));
  }
  write_file_atomic(path, bytes);
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& f32_path) {
  auto p = f32_path;
  p.replace_extension(".json");
  return p;
}

SampledSignal read_signal_csv(const std::filesystem::path& path, std::string unit) {
  const std::string text = read_file(path);
  std::vector<double> times;
  std::vector<double> values;
  bool header = true;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (header) {
      if (line != "time_s,value") throw ParameterError(path.string() + ": expected header 'time_s,value'");
      header = false;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 2) {
      throw ParameterError(path.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
    }
    times.push_back(parse_double(fields[0], "time_s"));
    values.push_back(parse_double(fields[1], "value"));
  }
  if (values.size() < 2) throw ParameterError(path.string() + ": need at least 2 rows to infer the rate");

  std::vector<double> steps(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) steps[i] = times[i + 1] - times[i];
  std::vector<double> sorted = steps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(median > 0.0)) throw ParameterError(path.string() + ": time column must increase");
  for (double s : steps) {
    if (std::abs(s - median) > 1e-4 * median) {
      throw ParameterError(path.string() + ": non-uniform sampling");
    }
  }
  Eigen::VectorXd samples = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
  return SampledSignal(std::move(samples), 1.0 / median, std::move(unit));
}

void write_signal_csv(const std::filesystem::path& path, const SampledSignal& signal) {
  std::string out = "time_s,value\n";
  for (Index i = 0; i < signal.size(); ++i) {
    out += format_double(static_cast<double>(i) / signal.rate_hz());
    out += ',';
    out += format_double(signal[i]);
    out += '\n';
  }
  write_file_atomic(path, out);
}

SampledSignal read_signal_f32(const std::filesystem::path& path) {
  const json meta = read_json(sidecar_path(path));
  if (!meta.contains("rate_hz") || !meta["rate_hz"].is_number()) {
    throw ParameterError(sidecar_path(path).string() + ": missing numeric 'rate_hz'");
  }
  const auto floats = read_floats(path);
  Eigen::VectorXd samples(static_cast<Index>(floats.size()));
  for (std::size_t i = 0; i < floats.size(); ++i) samples[static_cast<Index>(i)] = floats[i];
  return SampledSignal(std::move(samples), meta["rate_hz"].get<double>(), meta.value("unit", std::string{}));
}

void write_signal_f32(const std::filesystem::path& path, const SampledSignal& signal) {
  write_floats(path, signal.samples().data(), signal.size());
  const json meta = {{"rate_hz", signal.rate_hz()}, {"unit", signal.unit()}};
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

SampledSignal read_signal(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".csv") return read_signal_csv(path);
  if (ext == ".f32") return read_signal_f32(path);
  throw ParameterError(path.string() + ": unsupported signal format (use .csv or .f32)");
}

void write_signal(const std::filesystem::path& path, const SampledSignal& signal) {
  const auto ext = path.extension();
  if (ext == ".csv") return write_signal_csv(path, signal);
  if (ext == ".f32") return write_signal_f32(path, signal);
  throw ParameterError(path.string() + ": unsupported signal format (use .csv or .f32)");
}

void write_matrix_f32(const std::filesystem::path& path, const EventMatrix& m, double rate_hz) {
  write_floats(path, m.data(), m.size());
  const json meta = {{"rows", m.rows()}, {"cols", m.cols()}, {"rate_hz", rate_hz}};
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

EventMatrix read_matrix_f32(const std::filesystem::path& path, double* rate_hz) {
  const json meta = read_json(sidecar_path(path));
  const auto rows = meta.at("rows").get<Index>();
  const auto cols = meta.at("cols").get<Index>();
  const auto floats = read_floats(path);
  if (static_cast<Index>(floats.size()) != rows * cols) {
    throw ParameterError(path.string() + ": size does not match rows x cols in sidecar");
  }
  EventMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = floats[static_cast<std::size_t>(i)];
  if (rate_hz) *rate_hz = meta.value("rate_hz", 0.0);
  return m;
}

}  // namespace scgbin
