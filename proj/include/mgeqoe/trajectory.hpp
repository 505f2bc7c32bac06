#pragma once

#include <string_view>
#include <vector>

#include "mgeqoe/core.hpp"

namespace mgeqoe {

enum class CoordinateKind { Cartesian, MGeqoe };

constexpr std::string_view to_string(CoordinateKind kind) {
  return kind == CoordinateKind::Cartesian ? "cartesian" : "mgeqoe";
}

inline std::optional<CoordinateKind> parse_kind(std::string_view s) {
  if (s == "cartesian") return CoordinateKind::Cartesian;
  if (s == "mgeqoe") return CoordinateKind::MGeqoe;
  return std::nullopt;
}

/// Time-tagged states of one coordinate kind, canonical units.
struct Trajectory {
  CoordinateKind kind = CoordinateKind::Cartesian;
  Body center = Body::Earth;
  std::vector<double> epochs;
  std::vector<Vec6> states;

  std::size_t size() const { return epochs.size(); }
  bool empty() const { return epochs.empty(); }

  void validate() const {
    if (epochs.size() != states.size()) fail(ErrorCode::InvalidArgument, "trajectory epoch/state count mismatch");
    for (std::size_t i = 1; i < epochs.size(); ++i) {
      if (!(epochs[i] > epochs[i - 1])) fail(ErrorCode::InvalidArgument, "trajectory epochs not strictly increasing");
    }
    for (const auto& s : states) {
      if (!s.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite trajectory state");
    }
  }
};

}  // namespace mgeqoe
