#pragma once

#include <Eigen/Core>

#include <string_view>

namespace scgbin {

using Eigen::Index;

/// Events stacked one per row; each row is a contiguous window.
using EventMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Lung-volume class of an event. The numeric value is the SVM target sign.
enum class VolumeClass : int { LLV = -1, HLV = +1 };

inline double sign_of(VolumeClass c) { return static_cast<double>(static_cast<int>(c)); }

inline std::string_view to_string(VolumeClass c) { return c == VolumeClass::HLV ? "HLV" : "LLV"; }

}  // namespace scgbin
