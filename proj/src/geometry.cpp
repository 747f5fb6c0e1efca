#include "tbill/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tbill/errors.hpp"

namespace tbill {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dot(Point a, Point b) { return a.real() * b.real() + a.imag() * b.imag(); }

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

struct Chord {
  Point forward;
  Point backward;
};

Chord chord_through(Point p, Point d, double r) {
  double b = dot(d, p);
  double c = std::norm(p) - r * r;
  double disc = std::max(b * b - c, 0.0);
  double s = std::sqrt(disc);
  return {p + (-b + s) * d, p + (-b - s) * d};
}

// Parameter range [t_in, t_out] of the line p + t d inside the placed tile.
std::pair<double, double> clip_to_tile(const CyclicPolygon& P, Point rot, Point p, Point d) {
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  const int N = P.n_sides();
  for (int k = 1; k <= N; ++k) {
    Point a = rot * P.vertex(k - 1);
    Point n = Point(0, 1) * (rot * P.vertex(k) - a);
    double nd = dot(n, d);
    double t = dot(n, a - p) / nd;
    if (nd > 0.0) t_out = std::min(t_out, t);
    else if (nd < 0.0) t_in = std::max(t_in, t);
  }
  return {t_in, t_out};
}

void fill_chord_coordinates(TrajectoryState& s, const CyclicPolygon& P) {
  s.x = arc_coordinate(s, P);
  s.tau = chord_parameter(s, P);
}

}  // namespace

Point CyclicPolygon::vertex(int j) const {
  const int N = n_sides();
  j = ((j % N) + N) % N;
  return std::polar(radius, -cumulative[static_cast<std::size_t>(j)] / radius);
}

double CyclicPolygon::diameter() const {
  double best = 0.0;
  for (int i = 0; i < n_sides(); ++i)
    for (int j = i + 1; j < n_sides(); ++j) best = std::max(best, std::abs(vertex(i) - vertex(j)));
  return best;
}

CyclicPolygon build_polygon(std::vector<double> arcs) {
  const int N = static_cast<int>(arcs.size());
  if (N < 5) throw Error(ErrorKind::InvalidArgument, "need at least 5 arcs, got " + std::to_string(N));
  for (double a : arcs)
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorKind::NonPositiveArc, "arcs must be positive and finite");
  for (int k = 0; k + 1 < N; ++k)
    if (!(arcs[static_cast<std::size_t>(k)] < arcs.back()))
      throw Error(ErrorKind::NonMaximalLastArc, "the last arc must be the strict maximum");

  double sum = 0.0;
  for (int k = 0; k + 1 < N; ++k) sum += arcs[static_cast<std::size_t>(k)];
  for (double& a : arcs) a /= sum;

  CyclicPolygon P;
  P.arcs = std::move(arcs);
  P.cumulative.assign(static_cast<std::size_t>(N) + 1, 0.0);
  for (int k = 1; k < N; ++k)
    P.cumulative[static_cast<std::size_t>(k)] = P.cumulative[static_cast<std::size_t>(k) - 1] + P.arcs[static_cast<std::size_t>(k) - 1];
  P.cumulative[static_cast<std::size_t>(N) - 1] = 1.0;
  P.cumulative[static_cast<std::size_t>(N)] = 1.0 + P.arcs.back();
  P.radius = (1.0 + P.arcs.back()) / kTwoPi;
  return P;
}

double arc_coordinate(const TrajectoryState& s, const CyclicPolygon& P) {
  Chord c = chord_through(s.offset, s.direction, P.radius);
  return P.radius * wrap_angle(std::arg(s.tile.rotation) - std::arg(c.forward));
}

double chord_parameter(const TrajectoryState& s, const CyclicPolygon& P) {
  Chord c = chord_through(s.offset, s.direction, P.radius);
  return P.radius * wrap_angle(std::arg(c.backward) - std::arg(c.forward));
}

TrajectoryState initial_state(const CyclicPolygon& P, Point start, Point direction) {
  if (std::abs(direction) == 0.0) throw Error(ErrorKind::InvalidArgument, "direction must be nonzero");
  TrajectoryState s;
  s.offset = start;
  s.direction = direction / std::abs(direction);
  auto [t_in, t_out] = clip_to_tile(P, s.tile.rotation, start, s.direction);
  double eps = kBoundaryEps * P.radius;
  if (!(t_in < -eps && t_out > eps)) throw Error(ErrorKind::InvalidArgument, "start point must lie strictly inside tile 0");
  fill_chord_coordinates(s, P);
  return s;
}

TrajectoryState initial_state(const CyclicPolygon& P, double x0, double tau) {
  const double r = P.radius;
  const double L = P.circumference();
  if (!(x0 >= 0.0 && x0 < L)) throw Error(ErrorKind::InvalidArgument, "x0 must lie in [0, 1 + a_N)");
  if (!(tau > 0.0 && tau < L)) throw Error(ErrorKind::TauOutOfRange, "tau must lie in (0, 1 + a_N)");
  TrajectoryState s;
  s.tile.rotation = std::polar(1.0, -x0 / r);
  Point o = std::polar(r, -2.0 * x0 / r);
  Point A = std::polar(r, (tau - 2.0 * x0) / r);
  Point d = (o - A) / std::abs(o - A);
  auto [t_in, t_out] = clip_to_tile(P, s.tile.rotation, A, d);
  if (!(t_in < t_out)) throw Error(ErrorKind::InvalidArgument, "chord misses tile 0");
  s.offset = A + 0.5 * (t_in + t_out) * d;
  s.direction = d;
  s.x = x0;
  s.tau = tau;
  return s;
}

TrajectoryState step(const TrajectoryState& s, const CyclicPolygon& P) {
  const int N = P.n_sides();
  const Point rot = s.tile.rotation;
  const Point p = s.offset;
  const Point d = s.direction;

  double best = std::numeric_limits<double>::infinity();
  int side = 0;
  Point normal;
  for (int k = 1; k <= N; ++k) {
    Point a = rot * P.vertex(k - 1);
    Point n = Point(0, 1) * (rot * P.vertex(k) - a);  // outward for a clockwise polygon
    double nd = dot(n, d);
    if (nd <= 0.0) continue;
    double t = dot(n, a - p) / nd;
    if (t < best) {
      best = t;
      side = k;
      normal = n;
    }
  }
  if (side == 0) throw Error(ErrorKind::InvalidArgument, "direction leaves no side", s.step_index);

  Point qa = P.vertex(side - 1);
  Point qb = P.vertex(side);
  Point exit = p + best * d;
  double eps = kBoundaryEps * P.radius;
  if (std::abs(exit - rot * qa) < eps || std::abs(exit - rot * qb) < eps)
    throw Error(ErrorKind::CornerHit, "trajectory hits a vertex", s.step_index + 1);

  TrajectoryState next;
  Point shift = rot * (qa + qb);
  next.tile.center = s.tile.center + shift;
  next.tile.rotation = -rot;
  next.offset = exit - shift;
  Point nh = normal / std::abs(normal);
  Point refracted = 2.0 * dot(d, nh) * nh - d;
  next.direction = refracted / std::abs(refracted);
  next.step_index = s.step_index + 1;
  next.entered_side = side;
  fill_chord_coordinates(next, P);
  return next;
}

Trajectory simulate(const CyclicPolygon& P, const TrajectoryState& start, std::int64_t n_steps) {
  if (n_steps < 1) throw Error(ErrorKind::InvalidArgument, "n_steps must be at least 1");
  Trajectory tr;
  tr.points.reserve(static_cast<std::size_t>(n_steps) + 1);
  tr.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  tr.sides_crossed.reserve(static_cast<std::size_t>(n_steps));
  tr.points.push_back(start.position());
  tr.states.push_back(start);
  TrajectoryState s = start;
  for (std::int64_t i = 0; i < n_steps; ++i) {
    try {
      s = step(s, P);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CornerHit) throw;
      tr.terminated_at_corner = e.step();
      break;
    }
    tr.points.push_back(s.position());
    tr.sides_crossed.push_back(s.entered_side);
    tr.states.push_back(s);
  }
  return tr;
}

Trajectory simulate(const CyclicPolygon& P, Point start, Point direction, std::int64_t n_steps) {
  return simulate(P, initial_state(P, start, direction), n_steps);
}

Trajectory simulate(const CyclicPolygon& P, double x0, double tau, std::int64_t n_steps) {
  return simulate(P, initial_state(P, x0, tau), n_steps);
}

BilliardSample random_billiard(int n_sides, SplitMix64& rng) {
  std::vector<double> arcs = rng.simplex(n_sides - 1);
  double aN = rng.uniform(1.0, 4.0);
  arcs.push_back(aN);
  BilliardSample b{build_polygon(std::move(arcs)), 0.0, 0.0};
  b.tau = rng.uniform(1.0, aN);
  b.x0 = rng.uniform(0.0, 1.0);
  return b;
}

double circular_distance(double a, double b, double L) {
  double d = std::fmod(std::abs(a - b), L);
  return std::min(d, L - d);
}

}  // namespace tbill
