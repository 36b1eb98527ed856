#include "bendloss/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <queue>
#include <tuple>

namespace bendloss {
namespace {

constexpr std::array<Point, 8> kNeighbors8 = {
    {{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

/// Per-channel ridge map: min-max normalized and inverted, so the most
/// negative derivative maps to 1. Constant input maps to 0.
FloatMap ridge_normalize(const Grid<double>& g) {
  const double lo = g.minCoeff();
  const double hi = g.maxCoeff();
  FloatMap out(g.rows(), g.cols());
  if (hi <= lo) {
    out.setZero();
    return out;
  }
  const double span = hi - lo;
  for (Eigen::Index y = 0; y < g.rows(); ++y)
    for (Eigen::Index x = 0; x < g.cols(); ++x)
      out(y, x) = static_cast<float>((hi - g(y, x)) / span);
  return out;
}

/// 3x3 Sobel derivative with replicate borders; axis 0 is d/dx, 1 is d/dy.
Grid<double> sobel(const FloatMap& m, int axis) {
  const int h = grid_height(m);
  const int w = grid_width(m);
  const auto px = [&](int y, int x) {
    return static_cast<double>(m(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)));
  };
  Grid<double> out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (axis == 0) {
        out(y, x) = (px(y - 1, x + 1) + 2.0 * px(y, x + 1) + px(y + 1, x + 1)) -
                    (px(y - 1, x - 1) + 2.0 * px(y, x - 1) + px(y + 1, x - 1));
      } else {
        out(y, x) = (px(y + 1, x - 1) + 2.0 * px(y + 1, x) + px(y + 1, x + 1)) -
                    (px(y - 1, x - 1) + 2.0 * px(y - 1, x) + px(y - 1, x + 1));
      }
    }
  return out;
}

struct InstanceStats {
  double cx = 0.0, cy = 0.0;
  double min_dx = 0.0, max_dx = 0.0;
  double min_dy = 0.0, max_dy = 0.0;
};

double side_normalized(double offset, double min_off, double max_off) {
  if (offset < 0.0) return min_off < 0.0 ? offset / -min_off : 0.0;
  if (offset > 0.0) return max_off > 0.0 ? offset / max_off : 0.0;
  return 0.0;
}

}  // namespace

std::set<std::uint32_t> identify_overlapped(const LabelMap& gt) {
  std::set<std::uint32_t> out;
  const int h = grid_height(gt);
  const int w = grid_width(gt);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::uint32_t id = gt(y, x);
      if (id == 0) continue;
      // Forward half-neighborhood suffices; adjacency is symmetric.
      for (const Point d : {Point{1, 0}, Point{1, 1}, Point{0, 1}, Point{-1, 1}}) {
        const int nx = x + d.x, ny = y + d.y;
        if (nx < 0 || nx >= w || ny >= h) continue;
        const std::uint32_t other = gt(ny, nx);
        if (other != 0 && other != id) {
          out.insert(id);
          out.insert(other);
        }
      }
    }
  return out;
}

LabelMap connected_components(const BinaryMask& mask) {
  const int h = grid_height(mask);
  const int w = grid_width(mask);
  LabelMap labels(h, w);
  labels.setZero();
  std::uint32_t next = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask(y, x) == 0 || labels(y, x) != 0) continue;
      ++next;
      std::vector<Point> stack{{x, y}};
      labels(y, x) = next;
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        for (const Point& d : kNeighbors8) {
          const Point n{p.x + d.x, p.y + d.y};
          if (n.x < 0 || n.y < 0 || n.x >= w || n.y >= h) continue;
          if (mask(n.y, n.x) == 0 || labels(n.y, n.x) != 0) continue;
          labels(n.y, n.x) = next;
          stack.push_back(n);
        }
      }
    }
  return labels;
}

HvGroundTruth hv_ground_truth(const LabelMap& gt, const std::set<std::uint32_t>& overlapped_ids) {
  const auto instances = instances_of(gt);
  for (std::uint32_t id : overlapped_ids)
    if (!instances.contains(id))
      throw std::invalid_argument("overlapped id " + std::to_string(id) +
                                  " is not a ground-truth instance");

  FloatMap h(gt.rows(), gt.cols()), v(gt.rows(), gt.cols());
  FloatMap ho(gt.rows(), gt.cols()), vo(gt.rows(), gt.cols());
  h.setZero();
  v.setZero();
  ho.setZero();
  vo.setZero();

  for (const auto& [id, pixels] : instances) {
    InstanceStats st;
    for (const Point& p : pixels) {
      st.cx += p.x;
      st.cy += p.y;
    }
    st.cx /= static_cast<double>(pixels.size());
    st.cy /= static_cast<double>(pixels.size());
    for (const Point& p : pixels) {
      st.min_dx = std::min(st.min_dx, p.x - st.cx);
      st.max_dx = std::max(st.max_dx, p.x - st.cx);
      st.min_dy = std::min(st.min_dy, p.y - st.cy);
      st.max_dy = std::max(st.max_dy, p.y - st.cy);
    }
    const bool overlapped = overlapped_ids.contains(id);
    for (const Point& p : pixels) {
      const auto hx = static_cast<float>(side_normalized(p.x - st.cx, st.min_dx, st.max_dx));
      const auto vy = static_cast<float>(side_normalized(p.y - st.cy, st.min_dy, st.max_dy));
      h(p.y, p.x) = hx;
      v(p.y, p.x) = vy;
      if (overlapped) {
        ho(p.y, p.x) = hx;
        vo(p.y, p.x) = vy;
      }
    }
  }
  return {{std::move(h), std::move(v)}, {std::move(ho), std::move(vo)}};
}

FloatMap sobel_energy(const FloatMapPair& hv) {
  require_same_shape(hv.horizontal, hv.vertical, "sobel_energy");
  const FloatMap rx = ridge_normalize(sobel(hv.horizontal, 0));
  const FloatMap ry = ridge_normalize(sobel(hv.vertical, 1));
  FloatMap energy = rx.max(ry);
  for (Eigen::Index y = 0; y < energy.rows(); ++y)
    for (Eigen::Index x = 0; x < energy.cols(); ++x)
      if (hv.horizontal(y, x) == 0.0f && hv.vertical(y, x) == 0.0f) energy(y, x) = 0.0f;
  return energy;
}

void PostprocessParams::validate() const {
  if (!(prob_threshold > 0.0 && prob_threshold < 1.0))
    throw std::invalid_argument("postprocess: prob threshold must lie in (0,1)");
  if (!(contour_threshold > 0.0 && contour_threshold < 1.0))
    throw std::invalid_argument("postprocess: contour threshold must lie in (0,1)");
  if (min_marker_area < 1) throw std::invalid_argument("postprocess: marker area must be >= 1");
}

PostprocessResult watershed_postprocess(const FloatMap& prob, const FloatMapPair& hv,
                                        const PostprocessParams& params) {
  params.validate();
  require_same_shape(prob, hv.horizontal, "watershed_postprocess");
  require_same_shape(hv.horizontal, hv.vertical, "watershed_postprocess");

  const int h = grid_height(prob);
  const int w = grid_width(prob);

  PostprocessResult result;
  result.labels = LabelMap(h, w);
  result.labels.setZero();

  const BinaryMask q =
      (prob >= static_cast<float>(params.prob_threshold)).cast<std::uint8_t>();
  if ((q != 0).count() == 0) return result;  // nothing segmented

  const FloatMap energy = sobel_energy(hv);

  // Markers: components of the foreground away from the ridge.
  const auto seed_ok = [&](int y, int x) {
    return q(y, x) != 0 && energy(y, x) <= static_cast<float>(params.contour_threshold);
  };
  Grid<std::uint8_t> seen(h, w);
  seen.setZero();
  std::uint32_t next_label = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (seen(y, x) || !seed_ok(y, x)) continue;
      std::vector<Point> component;
      std::vector<Point> stack{{x, y}};
      seen(y, x) = 1;
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        component.push_back(p);
        for (const Point& d : kNeighbors8) {
          const Point n{p.x + d.x, p.y + d.y};
          if (n.x < 0 || n.y < 0 || n.x >= w || n.y >= h) continue;
          if (seen(n.y, n.x) || !seed_ok(n.y, n.x)) continue;
          seen(n.y, n.x) = 1;
          stack.push_back(n);
        }
      }
      if (component.size() < static_cast<std::size_t>(params.min_marker_area)) continue;
      ++next_label;
      for (const Point& p : component) result.labels(p.y, p.x) = next_label;
    }

  if (next_label == 0) {
    result.labels = q.cast<std::uint32_t>();
    result.diagnostics.push_back("no markers found; returning the foreground as one instance");
    return result;
  }

  // Priority flood: grow markers over q, cheapest energy first. Ties resolve
  // by row-major pixel order, then label, so reruns are byte-identical.
  using Entry = std::tuple<float, std::int64_t, std::uint32_t>;  // energy, pixel index, label
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  const auto push_neighbors = [&](int y, int x, std::uint32_t label) {
    for (const Point& d : kNeighbors8) {
      const int nx = x + d.x, ny = y + d.y;
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      if (q(ny, nx) == 0 || result.labels(ny, nx) != 0) continue;
      frontier.emplace(energy(ny, nx), static_cast<std::int64_t>(ny) * w + nx, label);
    }
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (result.labels(y, x) != 0) push_neighbors(y, x, result.labels(y, x));
  while (!frontier.empty()) {
    const auto [e, idx, label] = frontier.top();
    frontier.pop();
    const int y = static_cast<int>(idx / w);
    const int x = static_cast<int>(idx % w);
    if (result.labels(y, x) != 0) continue;
    result.labels(y, x) = label;
    push_neighbors(y, x, label);
  }

  // Foreground components without a marker are unreachable by the flood;
  // hand them to the nearest labeled pixel by 8-connected grid distance
  // (breadth-first from all labeled pixels, fixed order).
  bool leftovers = false;
  for (int y = 0; y < h && !leftovers; ++y)
    for (int x = 0; x < w && !leftovers; ++x) leftovers = q(y, x) != 0 && result.labels(y, x) == 0;
  if (leftovers) {
    LabelMap nearest(h, w);
    nearest.setZero();
    std::deque<Point> queue;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (result.labels(y, x) != 0) {
          nearest(y, x) = result.labels(y, x);
          queue.push_back({x, y});
        }
    while (!queue.empty()) {
      const Point p = queue.front();
      queue.pop_front();
      for (const Point& d : kNeighbors8) {
        const Point n{p.x + d.x, p.y + d.y};
        if (n.x < 0 || n.y < 0 || n.x >= w || n.y >= h || nearest(n.y, n.x) != 0) continue;
        nearest(n.y, n.x) = nearest(p.y, p.x);
        queue.push_back(n);
      }
    }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (q(y, x) != 0 && result.labels(y, x) == 0) result.labels(y, x) = nearest(y, x);
  }
  return result;
}

}  // namespace bendloss
