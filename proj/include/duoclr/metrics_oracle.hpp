#pragma once

#include <set>
#include <vector>

#include "duoclr/metrics.hpp"

namespace duoclr {

// Deliberately naive re-implementations of every metric, built on explicit
// frame sets and quadratic scans. They share no code paths with the fast
// versions and exist purely as cross-check twins for tests.

inline double oracle_segment_iou(int a_start, int a_end, int b_start, int b_end) {
  std::set<int> a, b;
  for (int t = a_start; t < a_end; ++t) a.insert(t);
  for (int t = b_start; t < b_end; ++t) b.insert(t);
  std::set<int> inter, uni(a);
  for (int t : b) {
    if (a.count(t)) inter.insert(t);
    uni.insert(t);
  }
  return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

namespace oracle_detail {

// AP by direct definition: for each recall level hit, scan every prefix
// for the best precision achievable at that recall or beyond.
inline double ap_by_definition(const std::vector<int>& hits, std::size_t positives) {
  if (positives == 0) return 0.0;
  double ap = 0.0;
  int tp_here = 0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    tp_here += hits[k];
    if (!hits[k]) continue;
    double best = 0.0;
    int tp = 0;
    for (std::size_t m = 0; m < hits.size(); ++m) {
      tp += hits[m];
      if (tp >= tp_here) {
        const double prec = static_cast<double>(tp) / static_cast<double>(m + 1);
        if (prec > best) best = prec;
      }
    }
    ap += best / static_cast<double>(positives);
  }
  return ap;
}

}  // namespace oracle_detail

inline double oracle_map_at_iou(std::vector<ScoredSegment> preds,
                                const std::vector<GtSegment>& gts, double threshold) {
  require(!gts.empty(), "empty reference");
  std::set<int> class_set;
  for (const auto& g : gts) class_set.insert(g.action_class);

  // Selection-sort the predictions by the documented ordering.
  const auto precedes = [](const ScoredSegment& b, const ScoredSegment& a) {
    if (b.confidence != a.confidence) return b.confidence > a.confidence;
    if (b.start != a.start) return b.start < a.start;
    if (b.video_id != a.video_id) return b.video_id < a.video_id;
    if (b.end != a.end) return b.end < a.end;
    return b.action_class < a.action_class;
  };
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = i + 1; j < preds.size(); ++j)
      if (precedes(preds[j], preds[i])) std::swap(preds[i], preds[j]);

  double ap_sum = 0.0;
  for (int cls : class_set) {
    std::vector<GtSegment> cls_gts;
    for (const auto& g : gts)
      if (g.action_class == cls) cls_gts.push_back(g);
    std::vector<bool> matched(cls_gts.size(), false);
    std::vector<int> hits;
    for (const auto& p : preds) {
      if (p.action_class != cls) continue;
      // Enumerate every unmatched candidate and keep the best IoU.
      int best = -1;
      double best_iou = -1.0;
      for (std::size_t g = 0; g < cls_gts.size(); ++g) {
        if (matched[g] || cls_gts[g].video_id != p.video_id) continue;
        const double iou =
            oracle_segment_iou(p.start, p.end, cls_gts[g].start, cls_gts[g].end);
        if (iou >= threshold && iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) matched[static_cast<std::size_t>(best)] = true;
      hits.push_back(best >= 0 ? 1 : 0);
    }
    ap_sum += oracle_detail::ap_by_definition(hits, cls_gts.size());
  }
  return ap_sum / static_cast<double>(class_set.size());
}

inline double oracle_frame_accuracy(const std::vector<std::vector<int>>& pred,
                                    const std::vector<std::vector<int>>& gt) {
  double correct = 0.0, total = 0.0;
  for (std::size_t v = 0; v < pred.size(); ++v)
    for (std::size_t t = 0; t < pred[v].size(); ++t) {
      total += 1.0;
      correct += pred[v][t] == gt[v][t] ? 1.0 : 0.0;
    }
  require(total > 0.0, "empty reference");
  return correct / total;
}

inline double oracle_mean_iou(const std::vector<std::vector<int>>& pred,
                              const std::vector<std::vector<int>>& gt) {
  std::set<int> classes;
  for (const auto& video : gt)
    for (int c : video) classes.insert(c);
  require(!classes.empty(), "empty reference");
  double sum = 0.0;
  for (int cls : classes) {
    // Frame identities as (video, frame) pairs collected into sets.
    std::set<std::pair<std::size_t, std::size_t>> p_set, g_set, inter, uni;
    for (std::size_t v = 0; v < pred.size(); ++v)
      for (std::size_t t = 0; t < pred[v].size(); ++t) {
        if (pred[v][t] == cls) p_set.insert({v, t});
        if (gt[v][t] == cls) g_set.insert({v, t});
      }
    for (const auto& x : p_set) {
      if (g_set.count(x)) inter.insert(x);
      uni.insert(x);
    }
    for (const auto& x : g_set) uni.insert(x);
    sum += static_cast<double>(inter.size()) / static_cast<double>(uni.size());
  }
  return sum / static_cast<double>(classes.size());
}

inline double oracle_per_frame_map(const Tensor& scores, const Tensor& targets) {
  const int n = scores.dim(0), k_len = scores.dim(1);
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < k_len; ++k) {
    std::size_t positives = 0;
    for (int t = 0; t < n; ++t)
      if (targets.at(t, k) > 0.5) ++positives;
    if (positives == 0) continue;
    // Rank by score with index as tie-break, via repeated selection.
    std::vector<int> remaining;
    for (int t = 0; t < n; ++t) remaining.push_back(t);
    std::vector<int> hits;
    while (!remaining.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < remaining.size(); ++i)
        if (scores.at(remaining[i], k) > scores.at(remaining[best], k) ||
            (scores.at(remaining[i], k) == scores.at(remaining[best], k) &&
             remaining[i] < remaining[best]))
          best = i;
      hits.push_back(targets.at(remaining[best], k) > 0.5 ? 1 : 0);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    sum += oracle_detail::ap_by_definition(hits, positives);
    ++counted;
  }
  require(counted > 0, "empty reference");
  return sum / counted;
}

}  // namespace duoclr
