#pragma once

#include "bendloss/grid.hpp"

namespace bendloss {

/// Probabilities are clamped to [kProbEpsilon, 1] before the log so the
/// cross-entropy is defined at 0 and parity checks are reproducible.
inline constexpr double kProbEpsilon = 1e-7;

/// -(1/n) sum I*_i log(I_i) over all pixels.
double cross_entropy(const FloatMap& pred, const BinaryMask& truth);

/// 1 - 2 sum(I I*) / (sum I + sum I*); both-empty inputs are a perfect match (0).
double dice_loss(const FloatMap& pred, const BinaryMask& truth);

/// cross_entropy + dice_loss.
double inst_loss(const FloatMap& pred, const BinaryMask& truth);

/// Mean squared difference over both channels jointly (n = 2 H W).
double mse(const FloatMapPair& d, const FloatMapPair& d_star);

/// Mean squared gradient error over the region: central differences with
/// replicate borders, x-derivative of the horizontal channel plus
/// y-derivative of the vertical channel. Empty region yields 0.
double msge(const FloatMapPair& d, const FloatMapPair& d_star, const BinaryMask& region);

/// mse + 2 * msge.
double dist_loss(const FloatMapPair& d, const FloatMapPair& d_star, const BinaryMask& region);

struct LossBreakdown {
  double l_inst = 0.0;
  double l_hv = 0.0;
  double l_ohv = 0.0;
  double l_be = 0.0;
  double alpha = 0.0;
  double total = 0.0;  // l_inst + l_hv + l_ohv + alpha * l_be, in this order
};

/// Composes the total loss from its components; rejects non-finite inputs.
LossBreakdown total_loss(double l_inst, double l_hv, double l_ohv, double l_be, double alpha);

}  // namespace bendloss
