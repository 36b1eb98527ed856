#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bendloss/grid.hpp"

namespace bendloss {

/// Closed boundary walk of one connected component of an instance.
///
/// points is the cyclic Moore-tracing sequence: consecutive points (cyclically)
/// are 8-neighbors, the walk starts at the topmost-then-leftmost boundary
/// pixel and runs counter-clockwise in image coordinates. One-pixel-wide spurs
/// are walked out and back, so a coordinate may occupy several sequence slots.
///
/// neighbor_sets[i] holds the contour-adjacent coordinates of points[i]: the
/// cyclic predecessor and successor, unioned over every slot the coordinate
/// occupies (sorted in raster order). Coordinates the walk visits twice —
/// spurs, segments shared between touching shapes — therefore carry more than
/// two neighbors; a spur tip carries exactly one.
struct Contour {
  std::uint32_t instance_id = 0;
  std::vector<Point> points;
  std::vector<std::vector<Point>> neighbor_sets;
};

struct ContourSet {
  std::vector<Contour> contours;   // ascending instance id, then component discovery order
  std::size_t total_points = 0;    // sum of member sequence lengths
  std::vector<std::string> diagnostics;
};

/// Traces the outer boundary of every connected component of every instance.
/// Instances fragmented into several 8-connected components get one contour
/// per component, all tagged with the instance id, plus a diagnostic.
ContourSet trace_contours(const LabelMap& labels);

/// Points k steps before and after `index` in cyclic order.
/// Requires 1 <= k < contour length.
std::pair<Point, Point> extended_neighbors(const Contour& contour, std::size_t index,
                                           std::size_t k);

}  // namespace bendloss
