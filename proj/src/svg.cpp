#include "tbill/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "tbill/errors.hpp"
#include "tbill/serialize.hpp"

namespace tbill {

namespace {

constexpr std::array<const char*, 6> kPalette = {"#8ecae6", "#ffb703", "#a7c957", "#f4a261", "#cdb4db", "#90be6d"};

std::string fmt(double v) {
  // Six decimals keeps files small and identical across runs.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

Point tile_vertex(const CyclicPolygon& P, const Placement& t, int j) { return t.center + t.rotation * P.vertex(j); }

// Where the segment of state s leaves its tile through `side`.
Point crossing(const CyclicPolygon& P, const TrajectoryState& s, int side) {
  Point a = tile_vertex(P, s.tile, side - 1);
  Point b = tile_vertex(P, s.tile, side);
  Point p = s.position();
  Point d = s.direction;
  Point e = b - a;
  double denom = d.real() * e.imag() - d.imag() * e.real();
  if (std::abs(denom) < 1e-300) return 0.5 * (a + b);
  Point w = a - p;
  double t = (w.real() * e.imag() - w.imag() * e.real()) / denom;
  return p + t * d;
}

}  // namespace

std::string render_svg(const CyclicPolygon& P, const Trajectory& tr) {
  if (tr.states.empty()) throw Error(ErrorKind::InvalidArgument, "trajectory has no states");
  const std::size_t n_steps = tr.states.size() - 1;
  const std::size_t n_tiles = std::max<std::size_t>(1, n_steps);

  std::vector<Point> line;
  if (n_steps > 0) {
    line.push_back(tr.states[0].position());
    for (std::size_t i = 0; i < n_steps; ++i) line.push_back(crossing(P, tr.states[i], tr.states[i + 1].entered_side));
  }

  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  auto grow = [&](Point z) {
    // SVG's y axis points down.
    xmin = std::min(xmin, z.real());
    xmax = std::max(xmax, z.real());
    ymin = std::min(ymin, -z.imag());
    ymax = std::max(ymax, -z.imag());
  };
  for (std::size_t i = 0; i < n_tiles; ++i)
    for (int j = 0; j < P.n_sides(); ++j) grow(tile_vertex(P, tr.states[i].tile, j));
  for (Point z : line) grow(z);
  const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin);
  const double stroke = 0.004 * std::max(xmax - xmin, ymax - ymin);

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + fmt(xmin - pad) + " " + fmt(ymin - pad) + " " +
         fmt(xmax - xmin + 2 * pad) + " " + fmt(ymax - ymin + 2 * pad) + "\">\n";
  out += "<g stroke=\"#333333\" stroke-width=\"" + fmt(stroke / 2) + "\" fill-opacity=\"0.35\">\n";
  for (std::size_t i = 0; i < n_tiles; ++i) {
    out += "<path class=\"tile\" fill=\"" + std::string(kPalette[i % kPalette.size()]) + "\" d=\"";
    for (int j = 0; j < P.n_sides(); ++j) {
      Point v = tile_vertex(P, tr.states[i].tile, j);
      out += (j == 0 ? "M" : " L") + fmt(v.real()) + " " + fmt(-v.imag());
    }
    out += " Z\"/>\n";
  }
  out += "</g>\n";
  if (!line.empty()) {
    out += "<polyline class=\"trajectory\" fill=\"none\" stroke=\"#d62828\" stroke-width=\"" + fmt(stroke) +
           "\" points=\"";
    for (std::size_t i = 0; i < line.size(); ++i)
      out += (i ? " " : "") + fmt(line[i].real()) + "," + fmt(-line[i].imag());
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

void render_svg(const CyclicPolygon& P, const Trajectory& tr, const std::string& path) {
  write_text(path, render_svg(P, tr));
}

}  // namespace tbill
