#pragma once

#include "scgbin/events.hpp"

#include <filesystem>

namespace scgbin {

/// Writes `<dir>/<stem>.jsonl` (one object per event: subject, onset, label,
/// volume, samples_file, row) and the windows as `<dir>/<stem>.f32` with its
/// JSON sidecar.
void write_event_dataset(const std::filesystem::path& dir, const EventTable& table,
                         const std::string& stem = "events");

/// Reads a dataset from its `.jsonl` index; rows are resolved relative to it.
EventTable read_event_dataset(const std::filesystem::path& jsonl_path);

}  // namespace scgbin
