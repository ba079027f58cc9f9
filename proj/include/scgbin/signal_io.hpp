#pragma once

#include "scgbin/signal.hpp"
#include "scgbin/types.hpp"

#include <filesystem>

namespace scgbin {

/// CSV with header `time_s,value`. The rate is the reciprocal of the median
/// time step; every step must match it to 1 part in 1e4.
SampledSignal read_signal_csv(const std::filesystem::path& path, std::string unit = {});
void write_signal_csv(const std::filesystem::path& path, const SampledSignal& signal);

/// Little-endian float32 samples plus a JSON sidecar `{"rate_hz": r, "unit": u}`.
SampledSignal read_signal_f32(const std::filesystem::path& path);
void write_signal_f32(const std::filesystem::path& path, const SampledSignal& signal);

/// The sidecar of `x.f32` is `x.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& f32_path);

/// Dispatches on extension: `.csv` or `.f32`.
SampledSignal read_signal(const std::filesystem::path& path);
void write_signal(const std::filesystem::path& path, const SampledSignal& signal);

/// Raw float32 matrix (row-major) with sidecar `{"rows", "cols", "rate_hz"}`.
void write_matrix_f32(const std::filesystem::path& path, const EventMatrix& m, double rate_hz);
EventMatrix read_matrix_f32(const std::filesystem::path& path, double* rate_hz = nullptr);

}  // namespace scgbin
