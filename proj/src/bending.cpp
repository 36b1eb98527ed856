#include "bendloss/bending.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace bendloss {
namespace {

/// Inside-test for a point given in doubled coordinates (sx, sy) = 2 * m.
/// Integer midpoints test one pixel; half-integer coordinates test the 2 or 4
/// pixels the midpoint touches and count inside when any of them is inside.
/// Out-of-image pixels count as outside.
bool doubled_midpoint_inside(const BinaryMask& mask, int sx, int sy) {
  const auto hit = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < grid_width(mask) && y < grid_height(mask) && mask(y, x) != 0;
  };
  const int x0 = sx >> 1;  // floor division of doubled coordinates
  const int y0 = sy >> 1;
  const bool half_x = (sx & 1) != 0;
  const bool half_y = (sy & 1) != 0;
  for (int dy = 0; dy <= (half_y ? 1 : 0); ++dy)
    for (int dx = 0; dx <= (half_x ? 1 : 0); ++dx)
      if (hit(x0 + dx, y0 + dy)) return true;
  return false;
}

double bending_energy(const Eigen::Vector2d& v_prev, const Eigen::Vector2d& v_next, bool concave,
                      const BendingParams& params) {
  const double kappa = curvature(v_prev, v_next, params.kappa_cap);
  const double weight = concave ? params.mu : 1.0;
  return kappa * kappa * weight / (v_next.norm() + v_prev.norm());
}

Eigen::Vector2d to_vec(Point p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }

/// Mean with a canonical (sorted) summation order, so that permuting the
/// terms — as dihedral transforms of the input do — cannot change the result
/// even at the last bit.
double sorted_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  return sum / static_cast<double>(values.size());
}

}  // namespace

double sharpest_kappa() { return 2.0 * (std::sqrt(2.0) + 1.0); }

void BendingParams::validate() const {
  if (!(mu >= 1.0)) throw std::invalid_argument("bending: mu must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("bending: alpha must be >= 0");
  if (concavity_extent < 1) throw std::invalid_argument("bending: concavity extent must be >= 1");
  if (!(kappa_cap > 0.0)) throw std::invalid_argument("bending: kappa cap must be positive");
}

double curvature(const Eigen::Vector2d& v_prev, const Eigen::Vector2d& v_next, double cap) {
  const double n_prev = v_prev.norm();
  const double n_next = v_next.norm();
  if (n_prev == 0.0 || n_next == 0.0)
    throw std::invalid_argument("curvature: zero-length edge vector");
  const double denom = n_prev * n_next + v_prev.dot(v_next);
  if (denom <= 0.0) return cap;  // exact reversal
  const double cross = v_prev.x() * v_next.y() - v_prev.y() * v_next.x();
  return 2.0 * std::abs(cross) / denom;
}

bool is_concave(const Contour& contour, std::size_t index, int k, const BinaryMask& mask) {
  const std::size_t m = contour.points.size();
  if (k < 1) throw std::invalid_argument("is_concave: arc distance must be >= 1");
  if (m <= 2 * static_cast<std::size_t>(k)) return false;  // too short: convex by definition
  const auto [before, after] = extended_neighbors(contour, index, static_cast<std::size_t>(k));
  return !doubled_midpoint_inside(mask, before.x + after.x, before.y + after.y);
}

PointBending point_bending(const Contour& contour, std::size_t index, const BendingParams& params,
                           const BinaryMask& mask) {
  params.validate();
  const std::size_t m = contour.points.size();
  if (index >= m) throw std::invalid_argument("point_bending: index out of range");

  PointBending result;
  result.point = contour.points[index];
  if (m <= 2) {  // curvature undefined; fragments carry no energy
    const Point n = contour.points[(index + 1) % m];
    result.chosen_neighbors = {n, n};
    return result;
  }

  const std::vector<Point>& neighbors = contour.neighbor_sets[index];
  const Point c = result.point;

  // delta for extents > 1 no longer depends on the pair; compute it once.
  const int k = params.concavity_extent;
  const bool fixed_delta =
      k > 1 && (m > 2 * static_cast<std::size_t>(k) ? is_concave(contour, index, k, mask) : false);

  std::vector<std::pair<Point, Point>> pairs;
  if (neighbors.size() == 1) {
    pairs.emplace_back(neighbors[0], neighbors[0]);  // spur tip: out-and-back reversal
  } else {
    for (std::size_t a = 0; a < neighbors.size(); ++a)
      for (std::size_t b = a + 1; b < neighbors.size(); ++b)
        pairs.emplace_back(neighbors[a], neighbors[b]);
  }

  bool first = true;
  for (const auto& [na, nb] : pairs) {
    const Eigen::Vector2d v_prev = to_vec(c) - to_vec(na);
    const Eigen::Vector2d v_next = to_vec(nb) - to_vec(c);
    const bool concave =
        k == 1 ? !doubled_midpoint_inside(mask, na.x + nb.x, na.y + nb.y) : fixed_delta;
    const double energy = bending_energy(v_prev, v_next, concave, params);
    if (first || energy < result.energy) {
      first = false;
      result.energy = energy;
      result.kappa = curvature(v_prev, v_next, params.kappa_cap);
      result.concave = concave;
      result.chosen_neighbors = {na, nb};
    }
  }
  return result;
}

BendingReport bending_loss(const LabelMap& labels, const BendingParams& params) {
  params.validate();
  const ContourSet traced = trace_contours(labels);
  const auto instances = instances_of(labels);

  BendingReport report;
  report.diagnostics = traced.diagnostics;
  report.per_point.reserve(traced.total_points);

  // One reusable mask, set and cleared per instance; total cost stays linear
  // in the image regardless of the instance count.
  BinaryMask mask(labels.rows(), labels.cols());
  mask.setZero();
  std::vector<double> energies;
  energies.reserve(traced.total_points);

  std::size_t ci = 0;
  for (const auto& [id, pixels] : instances) {
    for (const Point& p : pixels) mask(p.y, p.x) = 1;
    for (; ci < traced.contours.size() && traced.contours[ci].instance_id == id; ++ci) {
      const Contour& contour = traced.contours[ci];
      if (params.concavity_extent > 1 && contour.points.size() > 2 &&
          contour.points.size() <= 2 * static_cast<std::size_t>(params.concavity_extent))
        report.diagnostics.push_back(
            "instance " + std::to_string(id) +
            ": contour too short for the concavity extent; points treated as convex");
      for (std::size_t i = 0; i < contour.points.size(); ++i) {
        report.per_point.push_back(point_bending(contour, i, params, mask));
        energies.push_back(report.per_point.back().energy);
      }
    }
    for (const Point& p : pixels) mask(p.y, p.x) = 0;
  }
  report.loss = sorted_mean(std::move(energies));
  return report;
}

double BendingReport::max_energy() const {
  double best = 0.0;
  for (const PointBending& p : per_point) best = std::max(best, p.energy);
  return best;
}

std::vector<CurvePattern> pattern_table(const BendingParams& params) {
  params.validate();
  constexpr std::array<Point, 8> offsets = {
      {{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

  std::vector<CurvePattern> table;
  for (std::size_t a = 0; a < offsets.size(); ++a)
    for (std::size_t b = a + 1; b < offsets.size(); ++b) {
      CurvePattern p;
      p.prev_neighbor = offsets[a];
      p.next_neighbor = offsets[b];
      const Eigen::Vector2d v_prev = -to_vec(offsets[a]);
      const Eigen::Vector2d v_next = to_vec(offsets[b]);
      p.convex_energy = bending_energy(v_prev, v_next, false, params);
      p.concave_energy = bending_energy(v_prev, v_next, true, params);
      table.push_back(p);
    }

  // Group ids follow ascending convex energy.
  std::vector<double> levels;
  for (const CurvePattern& p : table) {
    bool known = false;
    for (double v : levels) known |= std::abs(v - p.convex_energy) < 1e-9;
    if (!known) levels.push_back(p.convex_energy);
  }
  std::sort(levels.begin(), levels.end());
  for (CurvePattern& p : table)
    for (std::size_t g = 0; g < levels.size(); ++g)
      if (std::abs(levels[g] - p.convex_energy) < 1e-9) p.group = static_cast<int>(g) + 1;
  return table;
}

PolygonBending polygon_bending_gradient(const std::vector<Eigen::Vector2d>& vertices,
                                        const std::vector<bool>& concave,
                                        const BendingParams& params) {
  params.validate();
  const std::size_t n = vertices.size();
  if (n < 3) throw std::invalid_argument("polygon bending: need at least 3 vertices");
  if (concave.size() != n)
    throw std::invalid_argument("polygon bending: one concavity flag per vertex required");

  PolygonBending out;
  out.gradient.assign(n, Eigen::Vector2d::Zero());
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = vertices[(i + n - 1) % n];
    const Eigen::Vector2d& c = vertices[i];
    const Eigen::Vector2d& b = vertices[(i + 1) % n];
    const Eigen::Vector2d v1 = c - a;
    const Eigen::Vector2d v2 = b - c;
    const double n1 = v1.norm();
    const double n2 = v2.norm();
    if (n1 == 0.0 || n2 == 0.0)
      throw std::invalid_argument("polygon bending: coincident consecutive vertices");
    const double den = n1 * n2 + v1.dot(v2);
    if (den <= 0.0) throw std::invalid_argument("polygon bending: exact reversal at a vertex");

    const double w = concave[i] ? params.mu : 1.0;
    const double cr = v1.x() * v2.y() - v1.y() * v2.x();
    const double s = n1 + n2;

    // BE = 4 w cr^2 / (den^2 s); kappa = 2|cr|/den.
    const double be = 4.0 * w * cr * cr / (den * den * s);
    out.loss += be * inv_n;

    const double d_cr = 8.0 * w * cr / (den * den * s);
    const double d_den = -8.0 * w * cr * cr / (den * den * den * s);
    const double d_s = -4.0 * w * cr * cr / (den * den * s * s);

    const Eigen::Vector2d g_v1 = d_cr * Eigen::Vector2d(v2.y(), -v2.x()) +
                                 d_den * ((n2 / n1) * v1 + v2) + d_s * (v1 / n1);
    const Eigen::Vector2d g_v2 = d_cr * Eigen::Vector2d(-v1.y(), v1.x()) +
                                 d_den * ((n1 / n2) * v2 + v1) + d_s * (v2 / n2);

    out.gradient[(i + n - 1) % n] -= inv_n * g_v1;
    out.gradient[i] += inv_n * (g_v1 - g_v2);
    out.gradient[(i + 1) % n] += inv_n * g_v2;
  }
  return out;
}

}  // namespace bendloss
