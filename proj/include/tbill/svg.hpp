#pragma once

#include <string>

#include "tbill/geometry.hpp"

namespace tbill {

/// Standalone SVG of a trajectory: tiles P_0..P_{n-1} as filled paths with
/// colors cycling per tile, and the path itself as a polyline through the
/// start point and the n side crossings. A trajectory with a single state
/// gives one tile and no polyline.
std::string render_svg(const CyclicPolygon& polygon, const Trajectory& trajectory);

void render_svg(const CyclicPolygon& polygon, const Trajectory& trajectory, const std::string& path);

}  // namespace tbill
