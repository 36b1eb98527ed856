#include "bendloss/grid.hpp"

namespace bendloss {

void validate_float_map(const FloatMap& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (!std::isfinite(m(r, c)))
        throw std::invalid_argument("float map contains a non-finite value");
}

FloatMapPair make_float_map_pair(FloatMap horizontal, FloatMap vertical) {
  require_same_shape(horizontal, vertical, "float map pair");
  validate_float_map(horizontal);
  validate_float_map(vertical);
  return {std::move(horizontal), std::move(vertical)};
}

void validate_binary_mask(const BinaryMask& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) > 1) throw std::invalid_argument("binary mask contains a value outside {0,1}");
}

std::map<std::uint32_t, std::vector<Point>> instances_of(const LabelMap& labels) {
  std::map<std::uint32_t, std::vector<Point>> out;
  for (int y = 0; y < grid_height(labels); ++y)
    for (int x = 0; x < grid_width(labels); ++x) {
      const std::uint32_t id = labels(y, x);
      if (id != 0) out[id].push_back({x, y});
    }
  return out;
}

}  // namespace bendloss
