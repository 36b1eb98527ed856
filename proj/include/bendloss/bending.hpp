#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bendloss/contour.hpp"
#include "bendloss/grid.hpp"

namespace bendloss {

/// 2(sqrt(2)+1): the sharpest curvature any 8-neighborhood pattern can
/// produce; exact reversals (one-pixel spurs) are capped to it.
double sharpest_kappa();

struct BendingParams {
  double mu = 20.0;                    // concave point weight
  double alpha = 1.0;                  // regularizer weight in the total loss
  int concavity_extent = 1;            // arc distance of the mid-point test
  double kappa_cap = sharpest_kappa(); // curvature assigned to exact reversals

  void validate() const;  // mu >= 1, alpha >= 0, concavity_extent >= 1, cap > 0
};

struct PointBending {
  Point point;
  double kappa = 0.0;     // curvature, 1/pixels
  bool concave = false;   // delta flag of the chosen combination
  double energy = 0.0;    // BE at this slot, >= 0
  std::pair<Point, Point> chosen_neighbors{};  // pair realizing the minimum
};

struct BendingReport {
  std::vector<PointBending> per_point;  // contour order, then slot order
  double loss = 0.0;                    // mean energy over all slots
  std::vector<std::string> diagnostics;

  double max_energy() const;
};

/// Discrete curvature of the corner formed by edge vectors v_prev, v_next:
/// 2|v_prev x v_next| / (|v_prev||v_next| + v_prev . v_next).
/// An exact reversal makes the denominator vanish; the result is then `cap`.
double curvature(const Eigen::Vector2d& v_prev, const Eigen::Vector2d& v_next, double cap);

/// Mid-point test at arc distance k: the point is concave when the midpoint
/// of its two extended neighbors falls outside the instance mask.
/// A midpoint with half-integer coordinates counts as inside when any of the
/// pixels it touches is inside, which keeps the result exact under all eight
/// dihedral transforms and biases ties toward the cheaper convex penalty.
/// Contours too short for the test (length <= 2k) are convex by definition.
bool is_concave(const Contour& contour, std::size_t index, int k, const BinaryMask& instance_mask);

/// Bending energy of one contour slot: minimum of
/// kappa^2 ((1-delta) + delta mu) / (|v_next| + |v_prev|) over all unordered
/// pairs of distinct contour neighbors, delta recomputed per pair from that
/// pair's midpoint. Slots whose neighbor set is a single coordinate are
/// one-pixel spur tips: the reversal pair applies with kappa capped.
/// Contours of length <= 2 carry zero energy.
PointBending point_bending(const Contour& contour, std::size_t index, const BendingParams& params,
                           const BinaryMask& instance_mask);

/// Traces the map and evaluates point_bending everywhere.
/// loss is the mean energy over all contour slots (0 for empty foreground).
BendingReport bending_loss(const LabelMap& labels, const BendingParams& params = {});

/// One of the 28 unordered neighbor-pair configurations around a center pixel.
struct CurvePattern {
  Point prev_neighbor;     // offset of the first neighbor from the center
  Point next_neighbor;     // offset of the second
  double convex_energy = 0.0;
  double concave_energy = 0.0;
  int group = 0;           // 1..5, ascending convex energy
};

/// All 28 patterns with their convex/concave energies; exactly five distinct
/// convex values occur, which defines the five groups.
std::vector<CurvePattern> pattern_table(const BendingParams& params = {});

struct PolygonBending {
  double loss = 0.0;
  std::vector<Eigen::Vector2d> gradient;  // d loss / d vertex
};

/// Continuous-coordinate bending loss of a closed polygon with fixed
/// concavity flags, with analytic partial derivatives with respect to every
/// vertex. Consecutive coincident vertices and exact reversals are rejected.
PolygonBending polygon_bending_gradient(const std::vector<Eigen::Vector2d>& vertices,
                                        const std::vector<bool>& concave,
                                        const BendingParams& params = {});

}  // namespace bendloss
