#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "bendloss/grid.hpp"

namespace bendloss {

/// Unique IoU > tau matching between ground-truth and predicted instances.
struct MatchedPair {
  std::uint32_t gt_id = 0;
  std::uint32_t pred_id = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;  // ascending gt id
  std::vector<std::uint32_t> unmatched_gt;
  std::vector<std::uint32_t> unmatched_pred;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Aggregated Jaccard Index. Every ground-truth instance selects the
/// prediction with the largest Jaccard (ties to the smaller prediction id;
/// the selection also happens at Jaccard 0 whenever predictions exist);
/// intersections and unions accumulate and never-selected predictions add
/// their full area to the denominator.
double aji(const LabelMap& gt, const LabelMap& pred);

/// Instance-blind foreground Dice; empty vs empty is 1.
double dice_global(const LabelMap& gt, const LabelMap& pred);

struct PanopticResult {
  MatchResult match;
  double rq = 0.0;
  double sq = 0.0;
  double pq = 0.0;
};

/// IoU > 0.5 matching (provably one-to-one), RQ = TP/(TP + FP/2 + FN/2),
/// SQ = mean IoU of matched pairs, PQ = RQ * SQ. No instances at all on
/// either side counts as perfect agreement.
PanopticResult panoptic(const LabelMap& gt, const LabelMap& pred);

/// AJI restricted to the overlapped ground-truth instances. The argmax
/// prediction may serve several instances and no unmatched-prediction
/// penalty applies. Absent when no instance is overlapped.
std::optional<double> ajio(const LabelMap& gt, const LabelMap& pred,
                           const std::set<std::uint32_t>& overlapped_ids);

/// Fraction of overlapped ground-truth instances recovered by some
/// prediction with Jaccard strictly above tau. Absent when none overlap.
std::optional<double> acco(const LabelMap& gt, const LabelMap& pred,
                           const std::set<std::uint32_t>& overlapped_ids, double tau = 0.5);

/// Raw tallies behind the report; they allow pooled dataset aggregation.
struct EvalCounts {
  std::size_t n_gt = 0;          // N
  std::size_t n_pred = 0;        // M
  std::size_t n_overlapped = 0;  // O
  std::size_t matched_overlapped = 0;

  std::uint64_t aji_intersection = 0;
  std::uint64_t aji_union = 0;  // includes unmatched-prediction areas
  std::uint64_t dice_intersection = 0;
  std::uint64_t dice_total = 0;  // |G| + |S|
  std::size_t tp = 0, fp = 0, fn = 0;
  double sq_iou_sum = 0.0;
  std::uint64_t ajio_intersection = 0;
  std::uint64_t ajio_union = 0;
};

struct MetricsReport {
  double aji = 0.0;
  double dice = 0.0;
  double rq = 0.0;
  double sq = 0.0;
  double pq = 0.0;
  std::optional<double> ajio;  // absent iff no overlapped instances
  std::optional<double> acco;
  double tau = 0.5;
  EvalCounts counts;
};

/// The full battery. When overlapped_ids is not supplied it is derived from
/// the ground truth via pipeline adjacency (see identify_overlapped).
MetricsReport evaluate(const LabelMap& gt, const LabelMap& pred,
                       const std::optional<std::set<std::uint32_t>>& overlapped_ids = {},
                       double tau = 0.5);

}  // namespace bendloss
