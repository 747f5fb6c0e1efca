#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "tbill/rng.hpp"

namespace tbill {

using Point = std::complex<double>;

/// Relative tolerance for corner hits and breakpoints.
inline constexpr double kBoundaryEps = 1e-12;

/// Polygon inscribed in a circle, described by the arc lengths its sides
/// subtend. Sides are labelled 1..N clockwise; vertex k sits at clockwise arc
/// cumulative[k] from vertex 0, and side k joins vertex k-1 to vertex k
/// (side N closes back onto vertex 0).
struct CyclicPolygon {
  std::vector<double> arcs;        ///< a_1..a_N with a_1+...+a_{N-1} = 1
  std::vector<double> cumulative;  ///< c_0 = 0, ..., c_{N-1} = 1, c_N = 1 + a_N
  double radius = 0.0;

  int n_sides() const { return static_cast<int>(arcs.size()); }
  double circumference() const { return cumulative.back(); }
  double longest_arc() const { return arcs.back(); }

  /// Vertex j (0-based, taken mod N) relative to the center, for a tile whose
  /// vertex 0 lies on the positive real axis.
  Point vertex(int j) const;

  /// Largest distance between two vertices.
  double diameter() const;
};

/// Normalizes the arcs so the first N-1 sum to 1 and fixes the radius.
CyclicPolygon build_polygon(std::vector<double> arcs);

/// Rigid placement of a tile: vertex j is at center + rotation * vertex(j).
/// Tiles only ever differ by point reflections, which preserve orientation,
/// so a unit complex rotation is enough.
struct Placement {
  Point center{0.0, 0.0};
  Point rotation{1.0, 0.0};
};

struct TrajectoryState {
  Placement tile;
  Point offset;     ///< position relative to tile.center
  Point direction;  ///< unit vector
  double x = 0.0;   ///< clockwise arc from vertex 0 to the forward end of the chord
  double tau = 0.0;
  std::int64_t step_index = 0;
  int entered_side = 0;  ///< side crossed to reach this tile, 0 for the start

  Point position() const { return tile.center + offset; }
};

struct Trajectory {
  std::vector<Point> points;
  std::vector<int> sides_crossed;
  std::vector<TrajectoryState> states;
  std::optional<std::int64_t> terminated_at_corner;
};

/// Start state on tile 0 (center 0, vertex 0 on the positive real axis) from a
/// point strictly inside the tile and a direction.
TrajectoryState initial_state(const CyclicPolygon& polygon, Point start, Point direction);

/// Start state synthesized from the arc coordinate x0 and chord parameter tau.
/// Tile 0 is rotated by exp(-i x0 / r) and the start point is the midpoint of
/// the chord segment inside the tile.
TrajectoryState initial_state(const CyclicPolygon& polygon, double x0, double tau);

/// Moves to the next tile. Throws CornerHit if the exit point is a vertex.
TrajectoryState step(const TrajectoryState& state, const CyclicPolygon& polygon);

/// Arc length from the entry end to the forward end of the chord supporting
/// the current segment, measured clockwise.
double chord_parameter(const TrajectoryState& state, const CyclicPolygon& polygon);

/// The x coordinate recomputed from the geometry of the state.
double arc_coordinate(const TrajectoryState& state, const CyclicPolygon& polygon);

Trajectory simulate(const CyclicPolygon& polygon, Point start, Point direction, std::int64_t n_steps);
Trajectory simulate(const CyclicPolygon& polygon, double x0, double tau, std::int64_t n_steps);
Trajectory simulate(const CyclicPolygon& polygon, const TrajectoryState& start, std::int64_t n_steps);

/// Polygon together with a start satisfying the half-circle and chord
/// conditions: a_N drawn uniformly in (1, 4), tau in (1, a_N), x0 in (0, 1).
struct BilliardSample {
  CyclicPolygon polygon;
  double x0 = 0.0;
  double tau = 0.0;
};

BilliardSample random_billiard(int n_sides, SplitMix64& rng);

/// Circular distance on a circle of circumference L.
double circular_distance(double a, double b, double L);

}  // namespace tbill
