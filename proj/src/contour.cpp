#include "bendloss/contour.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>
#include <unordered_set>

namespace bendloss {
namespace {

using PixelSet = std::unordered_set<Point, PointHash>;

// Moore neighborhood in counter-clockwise order on screen (y grows downward),
// starting east. Consecutive entries differ by one axis step, which the
// tracer relies on when it derives the next backtrack direction.
constexpr std::array<Point, 8> kCcwDirs = {
    {{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

int dir_index(Point d) {
  for (int i = 0; i < 8; ++i)
    if (kCcwDirs[i] == d) return i;
  return -1;
}

constexpr int kWest = 4;

struct TraceState {
  Point pos;
  int backtrack;  // index into kCcwDirs pointing at the background pixel we came past
  friend bool operator==(const TraceState&, const TraceState&) = default;
};

std::uint64_t state_key(const TraceState& s) {
  return ((static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.pos.y)) << 32) ^
          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.pos.x)) << 3)) |
         static_cast<std::uint64_t>(s.backtrack);
}

/// One Moore step: sweep the neighborhood counter-clockwise starting just
/// past the backtrack direction; the first component pixel found is the next
/// contour pixel, and the neighbor tested right before it (background by
/// construction) becomes the new backtrack.
bool moore_step(const PixelSet& component, TraceState& s) {
  for (int step = 1; step <= 8; ++step) {
    const int j = (s.backtrack + step) & 7;
    const Point n{s.pos.x + kCcwDirs[j].x, s.pos.y + kCcwDirs[j].y};
    if (component.contains(n)) {
      const int prev = (j + 7) & 7;
      const Point back{s.pos.x + kCcwDirs[prev].x, s.pos.y + kCcwDirs[prev].y};
      s.backtrack = dir_index({back.x - n.x, back.y - n.y});
      s.pos = n;
      return true;
    }
  }
  return false;  // isolated pixel
}

/// Full boundary walk of one component. The deterministic state machine
/// (pixel, backtrack) eventually cycles; one period of that cycle is exactly
/// the closed boundary walk (Jacob's criterion expressed as state recurrence).
std::vector<Point> trace_component(const PixelSet& component, Point start) {
  TraceState state{start, kWest};
  {
    TraceState probe = state;
    if (!moore_step(component, probe)) return {start};  // single-pixel component
  }

  std::unordered_map<std::uint64_t, std::size_t> first_seen;
  std::vector<TraceState> walk;
  for (;;) {
    moore_step(component, state);
    const auto [it, inserted] = first_seen.try_emplace(state_key(state), walk.size());
    if (!inserted) {
      std::vector<Point> cycle;
      cycle.reserve(walk.size() - it->second);
      for (std::size_t i = it->second; i < walk.size(); ++i) cycle.push_back(walk[i].pos);

      // Fixed start: rotate so the walk begins at the topmost-then-leftmost pixel.
      std::size_t best = 0;
      for (std::size_t i = 1; i < cycle.size(); ++i)
        if (raster_less(cycle[i], cycle[best])) best = i;
      std::rotate(cycle.begin(), cycle.begin() + static_cast<std::ptrdiff_t>(best), cycle.end());
      return cycle;
    }
    walk.push_back(state);
  }
}

std::vector<std::vector<Point>> split_components(const std::vector<Point>& pixels) {
  PixelSet remaining(pixels.begin(), pixels.end());
  std::vector<std::vector<Point>> components;
  for (const Point& seed : pixels) {  // row-major => deterministic discovery order
    if (!remaining.contains(seed)) continue;
    std::vector<Point> component;
    std::vector<Point> stack{seed};
    remaining.erase(seed);
    while (!stack.empty()) {
      const Point p = stack.back();
      stack.pop_back();
      component.push_back(p);
      for (const Point& d : kCcwDirs) {
        const Point n{p.x + d.x, p.y + d.y};
        if (auto it = remaining.find(n); it != remaining.end()) {
          remaining.erase(it);
          stack.push_back(n);
        }
      }
    }
    components.push_back(std::move(component));
  }
  return components;
}

/// Contour-adjacent coordinates per slot: the cyclic predecessor and
/// successor, unioned over every slot the coordinate occupies. Coordinates
/// the walk passes more than once (spurs, shared segments) therefore get more
/// than two neighbors and feed the minimum-over-combinations rule downstream.
std::vector<std::vector<Point>> neighbor_sets_of(const std::vector<Point>& points) {
  const std::size_t m = points.size();
  std::unordered_map<Point, std::vector<Point>, PointHash> by_coord;
  for (std::size_t i = 0; i < m; ++i) {
    auto& set = by_coord[points[i]];
    for (const Point& n : {points[(i + m - 1) % m], points[(i + 1) % m]}) {
      if (n == points[i]) continue;  // single-point contour
      if (std::find(set.begin(), set.end(), n) == set.end()) set.push_back(n);
    }
  }
  for (auto& [coord, set] : by_coord) std::sort(set.begin(), set.end(), raster_less);

  std::vector<std::vector<Point>> sets(m);
  for (std::size_t i = 0; i < m; ++i) sets[i] = by_coord.at(points[i]);
  return sets;
}

}  // namespace

ContourSet trace_contours(const LabelMap& labels) {
  ContourSet out;
  for (const auto& [id, pixels] : instances_of(labels)) {
    const auto components = split_components(pixels);
    if (components.size() > 1)
      out.diagnostics.push_back("instance " + std::to_string(id) + " has " +
                                std::to_string(components.size()) +
                                " connected components; tracing each separately");
    for (const auto& component : components) {
      const PixelSet member(component.begin(), component.end());
      Point start = component.front();
      for (const Point& p : component)
        if (raster_less(p, start)) start = p;

      Contour contour;
      contour.instance_id = id;
      contour.points = trace_component(member, start);
      contour.neighbor_sets = neighbor_sets_of(contour.points);
      out.total_points += contour.points.size();
      out.contours.push_back(std::move(contour));
    }
  }
  return out;
}

std::pair<Point, Point> extended_neighbors(const Contour& contour, std::size_t index,
                                           std::size_t k) {
  const std::size_t m = contour.points.size();
  if (index >= m) throw std::invalid_argument("extended_neighbors: index out of range");
  if (k < 1 || k >= m)
    throw std::invalid_argument("extended_neighbors: arc distance must satisfy 1 <= k < length");
  return {contour.points[(index + m - k) % m], contour.points[(index + k) % m]};
}

}  // namespace bendloss
