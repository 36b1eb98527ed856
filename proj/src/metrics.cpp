#include "bendloss/metrics.hpp"

#include <map>
#include <utility>

#include "bendloss/pipeline.hpp"

namespace bendloss {
namespace {

/// Pixel-count bookkeeping for one gt/pred map pair.
struct Contingency {
  std::map<std::uint32_t, std::uint64_t> gt_area;
  std::map<std::uint32_t, std::uint64_t> pred_area;
  // (gt id, pred id) -> overlap pixels; ordered, so iteration is by ascending
  // gt id then ascending pred id.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> inter;

  std::uint64_t union_size(std::uint32_t g, std::uint32_t p, std::uint64_t i) const {
    return gt_area.at(g) + pred_area.at(p) - i;
  }
};

Contingency tally(const LabelMap& gt, const LabelMap& pred) {
  require_same_shape(gt, pred, "metrics");
  Contingency c;
  for (Eigen::Index y = 0; y < gt.rows(); ++y)
    for (Eigen::Index x = 0; x < gt.cols(); ++x) {
      const std::uint32_t g = gt(y, x);
      const std::uint32_t p = pred(y, x);
      if (g != 0) ++c.gt_area[g];
      if (p != 0) ++c.pred_area[p];
      if (g != 0 && p != 0) ++c.inter[{g, p}];
    }
  return c;
}

/// True when i1/u1 > i2/u2, compared exactly in integers.
bool jaccard_greater(std::uint64_t i1, std::uint64_t u1, std::uint64_t i2, std::uint64_t u2) {
  return i1 * u2 > i2 * u1;
}

struct Selection {
  std::uint32_t pred_id = 0;
  std::uint64_t inter = 0;
  std::uint64_t union_ = 0;
  bool any = false;
};

/// The argmax-Jaccard prediction for one ground-truth instance; ties resolve
/// to the smaller prediction id, and when nothing intersects the smallest
/// prediction id is still selected (Jaccard 0), matching the reference
/// implementation of the metric.
Selection select_best(const Contingency& c, std::uint32_t g,
                      const std::vector<std::pair<std::uint32_t, std::uint64_t>>& candidates) {
  Selection best;
  for (const auto& [p, i] : candidates) {
    const std::uint64_t u = c.union_size(g, p, i);
    if (!best.any || jaccard_greater(i, u, best.inter, best.union_)) {
      best = {p, i, u, true};
    }
  }
  if (!best.any && !c.pred_area.empty()) {
    const auto& [p, area] = *c.pred_area.begin();
    best = {p, 0, c.gt_area.at(g) + area, true};
  }
  return best;
}

std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::uint64_t>>> candidates_by_gt(
    const Contingency& c) {
  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::uint64_t>>> out;
  for (const auto& [key, i] : c.inter) out[key.first].emplace_back(key.second, i);
  return out;
}

void check_overlapped_ids(const Contingency& c, const std::set<std::uint32_t>& overlapped) {
  for (std::uint32_t id : overlapped)
    if (!c.gt_area.contains(id))
      throw std::invalid_argument("overlapped id " + std::to_string(id) +
                                  " is not a ground-truth instance");
}

std::size_t count_matched_overlapped(const Contingency& c,
                                     const std::set<std::uint32_t>& overlapped, double tau) {
  const auto candidates = candidates_by_gt(c);
  std::size_t matched = 0;
  for (std::uint32_t g : overlapped) {
    const auto it = candidates.find(g);
    if (it == candidates.end()) continue;
    for (const auto& [p, i] : it->second) {
      const std::uint64_t u = c.union_size(g, p, i);
      if (static_cast<double>(i) / static_cast<double>(u) > tau) {
        ++matched;
        break;
      }
    }
  }
  return matched;
}

struct AjiTotals {
  std::uint64_t intersection = 0;
  std::uint64_t union_total = 0;
};

AjiTotals aji_totals(const Contingency& c) {
  const auto candidates = candidates_by_gt(c);
  static const std::vector<std::pair<std::uint32_t, std::uint64_t>> kNone;

  AjiTotals t;
  std::set<std::uint32_t> used;
  for (const auto& [g, area] : c.gt_area) {
    const auto it = candidates.find(g);
    const Selection best = select_best(c, g, it == candidates.end() ? kNone : it->second);
    if (best.any) {
      t.intersection += best.inter;
      t.union_total += best.union_;
      used.insert(best.pred_id);
    } else {
      t.union_total += area;  // no predictions exist at all
    }
  }
  for (const auto& [p, area] : c.pred_area)
    if (!used.contains(p)) t.union_total += area;
  return t;
}

}  // namespace

double aji(const LabelMap& gt, const LabelMap& pred) {
  const Contingency c = tally(gt, pred);
  const AjiTotals t = aji_totals(c);
  if (t.union_total == 0) return 1.0;  // empty vs empty
  return static_cast<double>(t.intersection) / static_cast<double>(t.union_total);
}

double dice_global(const LabelMap& gt, const LabelMap& pred) {
  require_same_shape(gt, pred, "dice_global");
  std::uint64_t inter = 0, total = 0;
  for (Eigen::Index y = 0; y < gt.rows(); ++y)
    for (Eigen::Index x = 0; x < gt.cols(); ++x) {
      const bool g = gt(y, x) != 0;
      const bool p = pred(y, x) != 0;
      total += static_cast<std::uint64_t>(g) + static_cast<std::uint64_t>(p);
      inter += static_cast<std::uint64_t>(g && p);
    }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

PanopticResult panoptic(const LabelMap& gt, const LabelMap& pred) {
  const Contingency c = tally(gt, pred);

  PanopticResult out;
  std::set<std::uint32_t> matched_gt, matched_pred;
  for (const auto& [key, i] : c.inter) {
    const std::uint64_t u = c.union_size(key.first, key.second, i);
    if (2 * i > u) {  // IoU > 0.5, exact; such pairs are provably unique
      out.match.pairs.push_back(
          {key.first, key.second, static_cast<double>(i) / static_cast<double>(u)});
      matched_gt.insert(key.first);
      matched_pred.insert(key.second);
    }
  }
  for (const auto& [g, area] : c.gt_area)
    if (!matched_gt.contains(g)) out.match.unmatched_gt.push_back(g);
  for (const auto& [p, area] : c.pred_area)
    if (!matched_pred.contains(p)) out.match.unmatched_pred.push_back(p);

  out.match.tp = out.match.pairs.size();
  out.match.fn = c.gt_area.size() - out.match.tp;
  out.match.fp = c.pred_area.size() - out.match.tp;

  if (c.gt_area.empty() && c.pred_area.empty()) {
    out.rq = out.sq = out.pq = 1.0;  // nothing to find, nothing predicted
    return out;
  }
  const double tp = static_cast<double>(out.match.tp);
  out.rq = tp / (tp + 0.5 * static_cast<double>(out.match.fp + out.match.fn));
  if (out.match.tp > 0) {
    double iou_sum = 0.0;
    for (const MatchedPair& p : out.match.pairs) iou_sum += p.iou;
    out.sq = iou_sum / tp;
  }
  out.pq = out.rq * out.sq;
  return out;
}

std::optional<double> ajio(const LabelMap& gt, const LabelMap& pred,
                           const std::set<std::uint32_t>& overlapped_ids) {
  const Contingency c = tally(gt, pred);
  check_overlapped_ids(c, overlapped_ids);
  if (overlapped_ids.empty()) return std::nullopt;

  const auto candidates = candidates_by_gt(c);
  static const std::vector<std::pair<std::uint32_t, std::uint64_t>> kNone;

  std::uint64_t inter = 0, uni = 0;
  for (std::uint32_t g : overlapped_ids) {
    const auto it = candidates.find(g);
    const Selection best = select_best(c, g, it == candidates.end() ? kNone : it->second);
    if (best.any) {
      inter += best.inter;
      uni += best.union_;
    } else {
      uni += c.gt_area.at(g);
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<double> acco(const LabelMap& gt, const LabelMap& pred,
                           const std::set<std::uint32_t>& overlapped_ids, double tau) {
  const Contingency c = tally(gt, pred);
  check_overlapped_ids(c, overlapped_ids);
  if (overlapped_ids.empty()) return std::nullopt;
  return static_cast<double>(count_matched_overlapped(c, overlapped_ids, tau)) /
         static_cast<double>(overlapped_ids.size());
}

MetricsReport evaluate(const LabelMap& gt, const LabelMap& pred,
                       const std::optional<std::set<std::uint32_t>>& overlapped_ids, double tau) {
  require_same_shape(gt, pred, "evaluate");
  const std::set<std::uint32_t> overlapped =
      overlapped_ids ? *overlapped_ids : identify_overlapped(gt);

  const Contingency c = tally(gt, pred);
  check_overlapped_ids(c, overlapped);

  MetricsReport r;
  r.tau = tau;
  r.aji = aji(gt, pred);
  r.dice = dice_global(gt, pred);
  const PanopticResult pan = panoptic(gt, pred);
  r.rq = pan.rq;
  r.sq = pan.sq;
  r.pq = pan.pq;
  r.ajio = ajio(gt, pred, overlapped);
  r.acco = acco(gt, pred, overlapped, tau);

  r.counts.n_gt = c.gt_area.size();
  r.counts.n_pred = c.pred_area.size();
  r.counts.n_overlapped = overlapped.size();
  r.counts.matched_overlapped = count_matched_overlapped(c, overlapped, tau);

  const AjiTotals aji_t = aji_totals(c);
  r.counts.aji_intersection = aji_t.intersection;
  r.counts.aji_union = aji_t.union_total;

  std::uint64_t dice_inter = 0, dice_total = 0;
  for (Eigen::Index y = 0; y < gt.rows(); ++y)
    for (Eigen::Index x = 0; x < gt.cols(); ++x) {
      const bool g = gt(y, x) != 0;
      const bool p = pred(y, x) != 0;
      dice_total += static_cast<std::uint64_t>(g) + static_cast<std::uint64_t>(p);
      dice_inter += static_cast<std::uint64_t>(g && p);
    }
  r.counts.dice_intersection = dice_inter;
  r.counts.dice_total = dice_total;

  r.counts.tp = pan.match.tp;
  r.counts.fp = pan.match.fp;
  r.counts.fn = pan.match.fn;
  for (const MatchedPair& p : pan.match.pairs) r.counts.sq_iou_sum += p.iou;

  if (!overlapped.empty()) {
    const auto candidates = candidates_by_gt(c);
    static const std::vector<std::pair<std::uint32_t, std::uint64_t>> kNone;
    for (std::uint32_t g : overlapped) {
      const auto it = candidates.find(g);
      const Selection best = select_best(c, g, it == candidates.end() ? kNone : it->second);
      if (best.any) {
        r.counts.ajio_intersection += best.inter;
        r.counts.ajio_union += best.union_;
      } else {
        r.counts.ajio_union += c.gt_area.at(g);
      }
    }
  }
  return r;
}

}  // namespace bendloss
