#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace bendloss {

/// Dense row-major grid. Row index is y (grows downward), column index is x,
/// origin at the top-left pixel, matching raster image convention.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Instance id grid: 0 is background, any id > 0 names an instance.
/// Ids need not be contiguous.
using LabelMap = Grid<std::uint32_t>;

/// Grid restricted to {0, 1}.
using BinaryMask = Grid<std::uint8_t>;

/// Finite-valued grid (probability maps, distance maps, energies).
/// NaN and infinities are rejected at construction, see make_float_map().
using FloatMap = Grid<float>;

/// Integer pixel coordinate: x is the column, y is the row.
struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Row-major pixel order: by row, then by column.
inline bool raster_less(Point a, Point b) {
  return a.y != b.y ? a.y < b.y : a.x < b.x;
}

struct PointHash {
  std::size_t operator()(Point p) const noexcept {
    const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.y)) << 32) |
                     static_cast<std::uint32_t>(p.x);
    return std::hash<std::uint64_t>{}(key);
  }
};

template <typename Scalar>
int grid_height(const Grid<Scalar>& g) {
  return static_cast<int>(g.rows());
}

template <typename Scalar>
int grid_width(const Grid<Scalar>& g) {
  return static_cast<int>(g.cols());
}

template <typename Scalar>
bool in_bounds(const Grid<Scalar>& g, Point p) {
  return p.x >= 0 && p.y >= 0 && p.x < grid_width(g) && p.y < grid_height(g);
}

/// Bounds-checked access. Out-of-range indices are a caller bug, never a wrap.
template <typename Scalar>
Scalar at(const Grid<Scalar>& g, Point p) {
  if (!in_bounds(g, p)) throw std::out_of_range("grid access out of range");
  return g(p.y, p.x);
}

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

/// Horizontal/vertical map pair; both grids share dimensions.
struct FloatMapPair {
  FloatMap horizontal;
  FloatMap vertical;
};

/// Throws if any value is NaN or infinite.
void validate_float_map(const FloatMap& m);

/// Construction gate for FloatMap: rejects non-finite values.
inline FloatMap make_float_map(FloatMap values) {
  validate_float_map(values);
  return values;
}

FloatMapPair make_float_map_pair(FloatMap horizontal, FloatMap vertical);

/// Throws if any value is outside {0, 1}.
void validate_binary_mask(const BinaryMask& m);

inline BinaryMask foreground_of(const LabelMap& labels) {
  return (labels != 0u).cast<std::uint8_t>();
}

/// Pixels of every instance, keyed by id in ascending order; pixel lists are
/// in row-major order. Background (id 0) never appears.
std::map<std::uint32_t, std::vector<Point>> instances_of(const LabelMap& labels);

// ---------------------------------------------------------------------------
// Dihedral transforms. Used by symmetry properties and tests; rot90cw rotates
// the image a quarter turn clockwise on screen (y grows downward).

template <typename Scalar>
Grid<Scalar> rot90cw(const Grid<Scalar>& g) {
  Grid<Scalar> out(g.cols(), g.rows());
  const int h = grid_height(g);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = g(h - 1 - c, r);
  return out;
}

/// Point image under rot90cw of an h-row grid.
inline Point rot90cw_point(Point p, int h) { return {h - 1 - p.y, p.x}; }

template <typename Scalar>
Grid<Scalar> flip_horizontal(const Grid<Scalar>& g) {
  return g.rowwise().reverse();
}

inline Point flip_horizontal_point(Point p, int w) { return {w - 1 - p.x, p.y}; }

/// k in [0, 8): k & 3 quarter turns clockwise, then a horizontal flip if k >= 4.
template <typename Scalar>
Grid<Scalar> dihedral_transform(const Grid<Scalar>& g, int k) {
  Grid<Scalar> out = g;
  for (int i = 0; i < (k & 3); ++i) out = rot90cw(out);
  if (k & 4) out = flip_horizontal(out);
  return out;
}

}  // namespace bendloss
