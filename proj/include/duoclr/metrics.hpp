#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "duoclr/dataset.hpp"
#include "duoclr/segmentation.hpp"

namespace duoclr {

// A detected segment: confidence is the mean winning-class score over the
// covered frames.
struct ScoredSegment {
  int action_class = 0;
  int start = 0;
  int end = 0;
  double confidence = 0.0;
  std::int64_t video_id = 0;
};

// A ground-truth segment tagged with its owning video.
struct GtSegment {
  int action_class = 0;
  int start = 0;
  int end = 0;
  std::int64_t video_id = 0;
};

inline double segment_iou(int a_start, int a_end, int b_start, int b_end) {
  const int inter = std::max(0, std::min(a_end, b_end) - std::max(a_start, b_start));
  const int uni = (a_end - a_start) + (b_end - b_start) - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

// Run-length decoding of multiclass frame predictions; background runs
// are dropped.
inline std::vector<ScoredSegment> frames_to_segments(const FramePredictions& pred,
                                                     int background,
                                                     std::int64_t video_id) {
  require(pred.task_kind == TaskKind::multiclass,
          "frames_to_segments needs multiclass predictions");
  const auto labels = hard_labels(pred);
  std::vector<ScoredSegment> out;
  const int t_len = static_cast<int>(labels.size());
  int start = 0;
  for (int t = 1; t <= t_len; ++t) {
    if (t < t_len && labels[static_cast<std::size_t>(t)] == labels[static_cast<std::size_t>(start)]) continue;
    const int cls = labels[static_cast<std::size_t>(start)];
    if (cls != background) {
      double conf = 0.0;
      for (int u = start; u < t; ++u) conf += pred.scores.at(u, cls);
      out.push_back({cls, start, t, conf / (t - start), video_id});
    }
    start = t;
  }
  return out;
}

namespace detail {

// All-points AP from a confidence-ordered hit list and the positive count.
inline double average_precision(const std::vector<int>& hits, std::size_t positives) {
  if (positives == 0) return 0.0;
  std::vector<double> precision(hits.size());
  int tp = 0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    tp += hits[k];
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  // Precision envelope: best precision at this recall level or beyond.
  for (std::size_t k = hits.size(); k-- > 1;)
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  for (std::size_t k = 0; k < hits.size(); ++k)
    if (hits[k]) ap += precision[k] / static_cast<double>(positives);
  return ap;
}

}  // namespace detail

// Segmental mAP: pooled confidence ranking per class, greedy highest-IoU
// matching against unmatched same-video ground truths at the threshold,
// mean AP over classes with at least one ground truth.
inline double map_at_iou(std::vector<ScoredSegment> preds,
                         const std::vector<GtSegment>& gts, double threshold) {
  require(threshold > 0.0 && threshold <= 1.0, "threshold out of range");
  require(!gts.empty(), "empty reference");
  std::vector<int> classes;
  for (const auto& g : gts)
    if (std::find(classes.begin(), classes.end(), g.action_class) == classes.end())
      classes.push_back(g.action_class);
  std::sort(classes.begin(), classes.end());

  // The trailing keys only make the order total; they never affect a
  // per-class AP beyond fixing the order of otherwise-identical entries.
  std::sort(preds.begin(), preds.end(), [](const ScoredSegment& a, const ScoredSegment& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.start != b.start) return a.start < b.start;
    if (a.video_id != b.video_id) return a.video_id < b.video_id;
    if (a.end != b.end) return a.end < b.end;
    return a.action_class < b.action_class;
  });

  double ap_sum = 0.0;
  for (int cls : classes) {
    std::vector<const GtSegment*> cls_gts;
    for (const auto& g : gts)
      if (g.action_class == cls) cls_gts.push_back(&g);
    std::vector<bool> matched(cls_gts.size(), false);
    std::vector<int> hits;
    for (const auto& p : preds) {
      if (p.action_class != cls) continue;
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < cls_gts.size(); ++g) {
        if (matched[g] || cls_gts[g]->video_id != p.video_id) continue;
        const double iou =
            segment_iou(p.start, p.end, cls_gts[g]->start, cls_gts[g]->end);
        if (iou >= threshold && iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) {
        matched[static_cast<std::size_t>(best)] = true;
        hits.push_back(1);
      } else {
        hits.push_back(0);
      }
    }
    ap_sum += detail::average_precision(hits, cls_gts.size());
  }
  return ap_sum / static_cast<double>(classes.size());
}

// Pooled fraction of frames whose predicted label matches the target.
inline double frame_accuracy(const std::vector<std::vector<int>>& pred,
                             const std::vector<std::vector<int>>& gt) {
  require(pred.size() == gt.size(), "prediction/reference count mismatch");
  std::size_t total = 0, correct = 0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    require(pred[v].size() == gt[v].size(), "prediction/reference length mismatch");
    for (std::size_t t = 0; t < pred[v].size(); ++t) {
      ++total;
      if (pred[v][t] == gt[v][t]) ++correct;
    }
  }
  require(total > 0, "empty reference");
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Per-class IoU of frame sets pooled over videos, averaged over the
// classes that appear in the reference.
inline double mean_iou(const std::vector<std::vector<int>>& pred,
                       const std::vector<std::vector<int>>& gt) {
  require(pred.size() == gt.size(), "prediction/reference count mismatch");
  std::vector<int> classes;
  for (const auto& video : gt)
    for (int c : video)
      if (std::find(classes.begin(), classes.end(), c) == classes.end())
        classes.push_back(c);
  require(!classes.empty(), "empty reference");
  std::sort(classes.begin(), classes.end());
  double sum = 0.0;
  for (int cls : classes) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t v = 0; v < pred.size(); ++v) {
      require(pred[v].size() == gt[v].size(), "prediction/reference length mismatch");
      for (std::size_t t = 0; t < pred[v].size(); ++t) {
        const bool in_pred = pred[v][t] == cls;
        const bool in_gt = gt[v][t] == cls;
        if (in_pred && in_gt) ++inter;
        if (in_pred || in_gt) ++uni;
      }
    }
    sum += static_cast<double>(inter) / static_cast<double>(uni);
  }
  return sum / static_cast<double>(classes.size());
}

// Per-frame mAP for multilabel tasks: rank pooled frames per class
// (ties broken by frame order), all-points AP, mean over classes with
// at least one positive frame.
inline double per_frame_map(const Tensor& scores, const Tensor& targets) {
  require(scores.same_shape(targets), "prediction/reference length mismatch");
  require(scores.rank() == 2, "per_frame_map: rank-2 input expected");
  const int n = scores.dim(0), k_len = scores.dim(1);
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < k_len; ++k) {
    std::size_t positives = 0;
    for (int t = 0; t < n; ++t)
      if (targets.at(t, k) > 0.5) ++positives;
    if (positives == 0) continue;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) order[static_cast<std::size_t>(t)] = t;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scores.at(a, k) > scores.at(b, k);
    });
    std::vector<int> hits;
    hits.reserve(order.size());
    for (int t : order) hits.push_back(targets.at(t, k) > 0.5 ? 1 : 0);
    sum += detail::average_precision(hits, positives);
    ++counted;
  }
  require(counted > 0, "empty reference");
  return sum / counted;
}

// JSON report plus CSV mirror, both with 6-decimal values.
inline void write_report(const std::string& json_path, const std::string& csv_path,
                         const std::vector<std::pair<std::string, double>>& metrics,
                         const std::string& split) {
  char num[32];
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path);
  js << "{";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    std::snprintf(num, sizeof(num), "%.6f", metrics[i].second);
    js << (i ? "," : "") << "\"" << metrics[i].first << "\":" << num;
  }
  js << "}\n";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot open " + csv_path);
  csv << "metric,split,value\n";
  for (const auto& [name, value] : metrics) {
    std::snprintf(num, sizeof(num), "%.6f", value);
    csv << name << "," << split << "," << num << "\n";
  }
}

}  // namespace duoclr
