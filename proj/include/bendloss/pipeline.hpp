#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "bendloss/grid.hpp"

namespace bendloss {

/// Ids of instances touching another instance under 8-connectivity. Erasing
/// ids would fuse each such group into one connected component.
std::set<std::uint32_t> identify_overlapped(const LabelMap& gt);

/// 8-connected components of a mask, labeled 1..K in row-major discovery order.
LabelMap connected_components(const BinaryMask& mask);

/// Centroid-offset distance maps. For each instance, the horizontal value is
/// the x offset from the instance centroid, the negative and positive sides
/// normalized independently into [-1, 0] and [0, 1]; vertical analogous in y.
/// Background is exactly 0. overlapped_only keeps the same values on the
/// overlapped instances and zeroes everything else.
struct HvGroundTruth {
  FloatMapPair all_nuclei;
  FloatMapPair overlapped_only;
};

HvGroundTruth hv_ground_truth(const LabelMap& gt, const std::set<std::uint32_t>& overlapped_ids);

/// Boundary-ridge energy of a distance-map pair. A 3x3 Sobel x-derivative of
/// the horizontal channel and y-derivative of the vertical channel (replicate
/// borders) are each min-max normalized and inverted so that the strong
/// negative spikes at instance boundaries and touching lines map near 1,
/// while the smooth interior ramps map near 0; a constant channel yields 0.
/// The energy is the pixelwise maximum of the two channels, zeroed where both
/// channels are exactly 0 (pixels carrying no distance information), so the
/// peaks sit on the instances rather than on adjacent background.
FloatMap sobel_energy(const FloatMapPair& hv);

struct PostprocessParams {
  double prob_threshold = 0.5;
  double contour_threshold = 0.4;  // applied to the sobel_energy ridge map
  int min_marker_area = 10;        // pixels

  void validate() const;  // thresholds in (0,1), area >= 1
};

struct PostprocessResult {
  LabelMap labels;
  std::vector<std::string> diagnostics;
};

/// Marker-controlled watershed instance recovery:
/// foreground q = prob >= prob_threshold; markers are the 8-connected
/// components of q minus the ridge (energy > contour_threshold) with at least
/// min_marker_area pixels, labeled 1..K in discovery order; a priority flood
/// of the energy surface grows the markers over q (lowest energy first, ties
/// by row-major pixel order); q pixels in components without any marker take
/// the label of the nearest labeled pixel (8-connected grid distance).
/// When q is non-empty but no marker survives, q becomes a single instance
/// and a diagnostic is emitted.
PostprocessResult watershed_postprocess(const FloatMap& prob, const FloatMapPair& hv,
                                        const PostprocessParams& params = {});

// ---------------------------------------------------------------------------
// Patch extraction and merging. Patches of patch_size^2 pixels are placed so
// that their centered stride^2 windows tile the input; reads outside the
// input are mirrored.

struct PatchIndex {
  int height = 0;  // original grid size
  int width = 0;
  int patch_size = 270;
  int stride = 80;
  std::vector<Point> origins;  // window origins, row-major tile order
};

/// Reflects i into [0, n) (mirror with the edge sample included).
inline int mirror_index(int i, int n) {
  const int period = 2 * n;
  int j = i % period;
  if (j < 0) j += period;
  return j < n ? j : period - 1 - j;
}

template <typename Scalar>
struct PatchSet {
  std::vector<Grid<Scalar>> patches;
  PatchIndex index;
};

template <typename Scalar>
PatchSet<Scalar> extract_patches(const Grid<Scalar>& src, int patch_size = 270, int stride = 80) {
  if (src.rows() < 1 || src.cols() < 1)
    throw std::invalid_argument("extract_patches: empty input");
  if (stride < 1 || patch_size < stride || (patch_size - stride) % 2 != 0)
    throw std::invalid_argument("extract_patches: patch/stride geometry invalid");

  const int h = grid_height(src);
  const int w = grid_width(src);
  const int margin = (patch_size - stride) / 2;
  const int tiles_y = (h + stride - 1) / stride;
  const int tiles_x = (w + stride - 1) / stride;

  PatchSet<Scalar> out;
  out.index = {h, w, patch_size, stride, {}};
  out.index.origins.reserve(static_cast<std::size_t>(tiles_y) * tiles_x);
  for (int ty = 0; ty < tiles_y; ++ty)
    for (int tx = 0; tx < tiles_x; ++tx) {
      const Point origin{tx * stride, ty * stride};
      out.index.origins.push_back(origin);
      Grid<Scalar> patch(patch_size, patch_size);
      for (int y = 0; y < patch_size; ++y) {
        const int sy = mirror_index(origin.y - margin + y, h);
        for (int x = 0; x < patch_size; ++x)
          patch(y, x) = src(sy, mirror_index(origin.x - margin + x, w));
      }
      out.patches.push_back(std::move(patch));
    }
  return out;
}

/// Reassembles stride-sized output windows onto the original canvas.
template <typename Scalar>
Grid<Scalar> merge_patches(const std::vector<Grid<Scalar>>& windows, const PatchIndex& index) {
  if (windows.size() != index.origins.size())
    throw std::invalid_argument("merge_patches: expected " +
                                std::to_string(index.origins.size()) + " windows, got " +
                                std::to_string(windows.size()));
  const int stride = index.stride;
  const int tiles_y = (index.height + stride - 1) / stride;
  const int tiles_x = (index.width + stride - 1) / stride;

  Grid<Scalar> canvas(tiles_y * stride, tiles_x * stride);
  canvas.setZero();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].rows() != stride || windows[i].cols() != stride)
      throw std::invalid_argument("merge_patches: window " + std::to_string(i) +
                                  " is not stride-sized");
    canvas.block(index.origins[i].y, index.origins[i].x, stride, stride) = windows[i];
  }
  return canvas.topLeftCorner(index.height, index.width);
}

/// Central stride-sized window of a full patch.
template <typename Scalar>
Grid<Scalar> center_window(const Grid<Scalar>& patch, const PatchIndex& index) {
  const int margin = (index.patch_size - index.stride) / 2;
  if (patch.rows() != index.patch_size || patch.cols() != index.patch_size)
    throw std::invalid_argument("center_window: patch has wrong dimensions");
  return patch.block(margin, margin, index.stride, index.stride);
}

}  // namespace bendloss
