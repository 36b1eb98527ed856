#include "bendloss/losses.hpp"

#include <algorithm>
#include <cmath>

namespace bendloss {
namespace {

// Reductions run left-to-right in row-major order so results are
// bit-reproducible across builds and thread counts.

void require_probability(const FloatMap& pred, const char* what) {
  for (Eigen::Index y = 0; y < pred.rows(); ++y)
    for (Eigen::Index x = 0; x < pred.cols(); ++x)
      if (!(pred(y, x) >= 0.0f && pred(y, x) <= 1.0f))
        throw std::invalid_argument(std::string(what) + ": prediction outside [0,1]");
}

void require_pair_shapes(const FloatMapPair& d, const FloatMapPair& d_star, const char* what) {
  require_same_shape(d.horizontal, d.vertical, what);
  require_same_shape(d_star.horizontal, d_star.vertical, what);
  require_same_shape(d.horizontal, d_star.horizontal, what);
}

/// Central difference with replicate borders along x (axis = 0) or y (axis = 1).
double central_diff(const FloatMap& m, Eigen::Index y, Eigen::Index x, int axis) {
  if (axis == 0) {
    const Eigen::Index xl = std::max<Eigen::Index>(x - 1, 0);
    const Eigen::Index xr = std::min<Eigen::Index>(x + 1, m.cols() - 1);
    return (static_cast<double>(m(y, xr)) - static_cast<double>(m(y, xl))) / 2.0;
  }
  const Eigen::Index yu = std::max<Eigen::Index>(y - 1, 0);
  const Eigen::Index yd = std::min<Eigen::Index>(y + 1, m.rows() - 1);
  return (static_cast<double>(m(yd, x)) - static_cast<double>(m(yu, x))) / 2.0;
}

}  // namespace

double cross_entropy(const FloatMap& pred, const BinaryMask& truth) {
  require_same_shape(pred, truth, "cross_entropy");
  require_probability(pred, "cross_entropy");
  const auto n = static_cast<double>(pred.size());
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index y = 0; y < pred.rows(); ++y)
    for (Eigen::Index x = 0; x < pred.cols(); ++x)
      if (truth(y, x) != 0)
        sum += std::log(std::clamp(static_cast<double>(pred(y, x)), kProbEpsilon, 1.0));
  return -sum / n;
}

double dice_loss(const FloatMap& pred, const BinaryMask& truth) {
  require_same_shape(pred, truth, "dice_loss");
  require_probability(pred, "dice_loss");
  double inter = 0.0, pred_sum = 0.0, truth_sum = 0.0;
  for (Eigen::Index y = 0; y < pred.rows(); ++y)
    for (Eigen::Index x = 0; x < pred.cols(); ++x) {
      const double p = pred(y, x);
      pred_sum += p;
      if (truth(y, x) != 0) {
        truth_sum += 1.0;
        inter += p;
      }
    }
  const double denom = pred_sum + truth_sum;
  if (denom == 0.0) return 0.0;  // empty vs empty: perfect match
  return 1.0 - 2.0 * inter / denom;
}

double inst_loss(const FloatMap& pred, const BinaryMask& truth) {
  return cross_entropy(pred, truth) + dice_loss(pred, truth);
}

double mse(const FloatMapPair& d, const FloatMapPair& d_star) {
  require_pair_shapes(d, d_star, "mse");
  const auto n = static_cast<double>(d.horizontal.size()) * 2.0;
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (auto channel : {&FloatMapPair::horizontal, &FloatMapPair::vertical}) {
    const FloatMap& a = d.*channel;
    const FloatMap& b = d_star.*channel;
    for (Eigen::Index y = 0; y < a.rows(); ++y)
      for (Eigen::Index x = 0; x < a.cols(); ++x) {
        const double diff = static_cast<double>(a(y, x)) - static_cast<double>(b(y, x));
        sum += diff * diff;
      }
  }
  return sum / n;
}

double msge(const FloatMapPair& d, const FloatMapPair& d_star, const BinaryMask& region) {
  require_pair_shapes(d, d_star, "msge");
  require_same_shape(d.horizontal, region, "msge");

  const FloatMap dh = d.horizontal - d_star.horizontal;
  const FloatMap dv = d.vertical - d_star.vertical;

  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index y = 0; y < dh.rows(); ++y)
    for (Eigen::Index x = 0; x < dh.cols(); ++x) {
      if (region(y, x) == 0) continue;
      const double gx = central_diff(dh, y, x, 0);
      const double gy = central_diff(dv, y, x, 1);
      sum += gx * gx + gy * gy;
      ++count;
    }
  if (count == 0) return 0.0;
  return sum / static_cast<double>(count);
}

double dist_loss(const FloatMapPair& d, const FloatMapPair& d_star, const BinaryMask& region) {
  return mse(d, d_star) + 2.0 * msge(d, d_star, region);
}

LossBreakdown total_loss(double l_inst, double l_hv, double l_ohv, double l_be, double alpha) {
  for (double v : {l_inst, l_hv, l_ohv, l_be, alpha})
    if (!std::isfinite(v)) throw std::invalid_argument("total_loss: non-finite component");
  LossBreakdown out;
  out.l_inst = l_inst;
  out.l_hv = l_hv;
  out.l_ohv = l_ohv;
  out.l_be = l_be;
  out.alpha = alpha;
  out.total = l_inst + l_hv + l_ohv + alpha * l_be;
  return out;
}

}  // namespace bendloss
