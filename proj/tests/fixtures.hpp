#pragma once

// Synthetic inputs shared by the test suites.

#include <algorithm>
#include <cstdint>
#include <random>

#include "bendloss/grid.hpp"

namespace fixtures {

using bendloss::FloatMap;
using bendloss::FloatMapPair;
using bendloss::LabelMap;
using bendloss::Point;

inline LabelMap blank(int h, int w) {
  LabelMap m(h, w);
  m.setZero();
  return m;
}

inline void draw_rect(LabelMap& m, int x0, int y0, int x1, int y1, std::uint32_t id) {
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) m(y, x) = id;
}

inline void draw_disc(LabelMap& m, int cx, int cy, int r, std::uint32_t id) {
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m(y, x) = id;
}

/// Filled 4x4 square in an 8x8 grid; its contour has 12 boundary pixels.
inline LabelMap square4() {
  LabelMap m = blank(8, 8);
  draw_rect(m, 1, 1, 4, 4, 1);
  return m;
}

// Two discs of radius 11 centered 16 pixels apart; they overlap, and the
// union pinches at the two waist pixels where the circles cross.
inline constexpr int kDiscRadius = 11;
inline constexpr Point kDiscCenterA{17, 17};
inline constexpr Point kDiscCenterB{33, 17};

inline LabelMap merged_discs() {
  LabelMap m = blank(36, 52);
  draw_disc(m, kDiscCenterA.x, kDiscCenterA.y, kDiscRadius, 1);
  draw_disc(m, kDiscCenterB.x, kDiscCenterB.y, kDiscRadius, 1);
  return m;
}

/// Same pixels as merged_discs, split into two instances by nearest center.
inline LabelMap separated_discs() {
  LabelMap m = merged_discs();
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x) {
      if (m(y, x) == 0) continue;
      const int da = (x - kDiscCenterA.x) * (x - kDiscCenterA.x) +
                     (y - kDiscCenterA.y) * (y - kDiscCenterA.y);
      const int db = (x - kDiscCenterB.x) * (x - kDiscCenterB.x) +
                     (y - kDiscCenterB.y) * (y - kDiscCenterB.y);
      m(y, x) = da <= db ? 1 : 2;
    }
  return m;
}

/// Two discs side by side, touching along a flat vertical contact (ids 1, 2).
inline LabelMap touching_discs() {
  LabelMap m = blank(48, 72);
  draw_disc(m, 22, 23, 14, 1);
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      if ((x - 50) * (x - 50) + (y - 23) * (y - 23) <= 14 * 14 && m(y, x) == 0) m(y, x) = 2;
  return m;
}

inline LabelMap isolated_disc() {
  LabelMap m = blank(40, 40);
  draw_disc(m, 20, 20, 13, 1);
  return m;
}

/// Random blob map: up to max_instances rectangles and discs, later shapes
/// overwriting earlier ones, so instances may touch, fragment or vanish.
inline LabelMap random_label_map_sized(std::mt19937& rng, int h, int w, int max_instances = 6) {
  const int max_side = std::max(h, w);
  LabelMap m = blank(h, w);
  std::uniform_int_distribution<int> count(0, max_instances);
  const int n = count(rng);
  for (int id = 1; id <= n; ++id) {
    std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
    if (rng() % 2 == 0) {
      const int x0 = px(rng), y0 = py(rng);
      std::uniform_int_distribution<int> ext(0, 7);
      const int x1 = std::min(w - 1, x0 + ext(rng));
      const int y1 = std::min(h - 1, y0 + ext(rng));
      draw_rect(m, x0, y0, x1, y1, static_cast<std::uint32_t>(id));
    } else {
      std::uniform_int_distribution<int> radius(1, std::max(2, max_side / 6));
      const int cx = px(rng), cy = py(rng), r = radius(rng);
      for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
        for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x)
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
            m(y, x) = static_cast<std::uint32_t>(id);
    }
  }
  return m;
}

inline LabelMap random_label_map(std::mt19937& rng, int max_side, int max_instances = 6) {
  std::uniform_int_distribution<int> side(4, max_side);
  const int h = side(rng);
  const int w = side(rng);
  return random_label_map_sized(rng, h, w, max_instances);
}

inline FloatMap uniform_float_map(std::mt19937& rng, int h, int w, float lo = -1.0f,
                                  float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  FloatMap m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(y, x) = dist(rng);
  return m;
}

inline FloatMap constant_map(int h, int w, float v) {
  FloatMap m(h, w);
  m.setConstant(v);
  return m;
}

}  // namespace fixtures
