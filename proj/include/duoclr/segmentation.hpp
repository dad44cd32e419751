#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "duoclr/dataset.hpp"
#include "duoclr/encoder.hpp"
#include "duoclr/pretrain.hpp"

namespace duoclr {

// Frame-wise affine head (a 1x1 temporal convolution). Multiclass heads
// reserve one extra background column at the last index; the manifest's K
// counts foreground classes only.
struct SegmentationHead {
  TaskKind task_kind = TaskKind::multiclass;
  int num_classes = 0;  // foreground classes K
  ParamStore params;

  int width() const {
    return task_kind == TaskKind::multiclass ? num_classes + 1 : num_classes;
  }
  int background() const { return num_classes; }
};

inline SegmentationHead init_segmentation_head(int c2, int num_classes,
                                               TaskKind task_kind) {
  require(num_classes >= 1, "num_classes must be positive");
  SegmentationHead head;
  head.task_kind = task_kind;
  head.num_classes = num_classes;
  head.params.add("seg.w", Tensor({c2, head.width()}));
  head.params.add("seg.b", Tensor({head.width()}));
  return head;
}

// Softmax probabilities (multiclass, rows sum to 1) or sigmoid
// activations (multilabel), one row per frame.
struct FramePredictions {
  TaskKind task_kind = TaskKind::multiclass;
  Tensor scores;  // (T, width)
};

namespace detail {

inline Tensor head_logits(const SegmentationHead& head, const Tensor& features) {
  const int t_len = features.dim(0);
  const int c2 = features.dim(1);
  const Tensor& w = head.params.values[0];
  const Tensor& b = head.params.values[1];
  require(w.dim(0) == c2, "checkpoint/config mismatch: c2");
  Tensor logits({t_len, head.width()});
  for (int t = 0; t < t_len; ++t)
    for (int k = 0; k < head.width(); ++k) logits.at(t, k) = b.at(k);
  acc_ab(features.data(), w.data(), logits.data(), t_len, c2, head.width());
  return logits;
}

inline void activate_rows(Tensor& logits, TaskKind kind) {
  const int t_len = logits.dim(0), k_len = logits.dim(1);
  for (int t = 0; t < t_len; ++t) {
    double* row = logits.data() + static_cast<std::size_t>(t) * k_len;
    if (kind == TaskKind::multiclass) {
      double mx = row[0];
      for (int k = 1; k < k_len; ++k) mx = std::max(mx, row[k]);
      double s = 0.0;
      for (int k = 0; k < k_len; ++k) s += row[k] = std::exp(row[k] - mx);
      for (int k = 0; k < k_len; ++k) row[k] /= s;
    } else {
      for (int k = 0; k < k_len; ++k) row[k] = 1.0 / (1.0 + std::exp(-row[k]));
    }
  }
}

}  // namespace detail

// One full-sequence encoder pass, then the frame-wise head — no sliding
// windows anywhere.
inline FramePredictions segment_forward(const EncoderState& f,
                                        const SegmentationHead& head,
                                        const UntrimmedVideo& video) {
  FramePredictions pred;
  pred.task_kind = head.task_kind;
  pred.scores = detail::head_logits(head, extract_features_plain(f, video.sequence));
  detail::activate_rows(pred.scores, head.task_kind);
  return pred;
}

// Multiclass hard labels: per-frame argmax (first maximum wins).
inline std::vector<int> hard_labels(const FramePredictions& pred) {
  const int t_len = pred.scores.dim(0), k_len = pred.scores.dim(1);
  std::vector<int> labels(static_cast<std::size_t>(t_len), 0);
  for (int t = 0; t < t_len; ++t) {
    int best = 0;
    for (int k = 1; k < k_len; ++k)
      if (pred.scores.at(t, k) > pred.scores.at(t, best)) best = k;
    labels[static_cast<std::size_t>(t)] = best;
  }
  return labels;
}

// Multilabel hard labels: per-class threshold 0.5.
inline Tensor thresholded_labels(const FramePredictions& pred) {
  Tensor out(pred.scores.shape);
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.v[i] = pred.scores.v[i] >= 0.5 ? 1.0 : 0.0;
  return out;
}

// Multiclass targets: covering segment's class per frame, background for
// uncovered frames.
inline std::vector<int> multiclass_frame_labels(const UntrimmedVideo& video,
                                                int background) {
  std::vector<int> labels(static_cast<std::size_t>(video.sequence.frames), background);
  for (const auto& s : video.segments)
    for (int t = s.start; t < s.end; ++t) labels[static_cast<std::size_t>(t)] = s.action_class;
  return labels;
}

// Multilabel targets: union of covering segments as a multi-hot matrix.
inline Tensor multilabel_frame_targets(const UntrimmedVideo& video, int num_classes) {
  Tensor out({video.sequence.frames, num_classes});
  for (const auto& s : video.segments)
    for (int t = s.start; t < s.end; ++t) out.at(t, s.action_class) = 1.0;
  return out;
}

enum class EvalMode { linear, finetune };

inline EvalMode parse_eval_mode(const std::string& s) {
  if (s == "linear") return EvalMode::linear;
  if (s == "finetune") return EvalMode::finetune;
  throw ValidationError("unknown mode: " + s);
}

// Deterministic subsample of ceil(fraction * N) items.
inline std::vector<std::size_t> subsample_indices(std::size_t n, double fraction,
                                                  std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "fraction out of range");
  require(n > 0, "empty subsample");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, 0x53554253u /* "SUBS" */));
  rng.shuffle(idx);
  const auto take = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  idx.resize(std::max<std::size_t>(1, std::min(take, n)));
  return idx;
}

// Trains the head (and, in finetune mode, the encoder) with per-video SGD
// steps. Linear mode caches features once — the encoder is never touched.
inline SegmentationHead train_head(EncoderState& f,
                                   const std::vector<const UntrimmedVideo*>& videos,
                                   EvalMode mode, TaskKind task_kind, int num_classes,
                                   double fraction, int epochs, double lr,
                                   std::uint64_t seed) {
  require(epochs >= 1, "epochs and batch_size must be positive");
  const auto chosen = subsample_indices(videos.size(), fraction, seed);
  SegmentationHead head = init_segmentation_head(f.config.c2, num_classes, task_kind);
  SgdNesterov opt_head{lr}, opt_f{lr};
  Rng rng(derive_seed(seed, 0x484540u /* head-train stream */));

  std::vector<Tensor> cached;  // linear mode: frozen features per video
  if (mode == EvalMode::linear)
    for (std::size_t i : chosen)
      cached.push_back(extract_features_plain(f, videos[i]->sequence));

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<std::size_t> order(chosen.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t oi : order) {
      const UntrimmedVideo& video = *videos[chosen[oi]];
      Tape tape;
      auto head_vars = lift_params(tape, head.params, true);
      Var feats;
      std::vector<Var> f_vars;
      if (mode == EvalMode::linear) {
        feats = tape.input(cached[oi], false);
      } else {
        f_vars = lift_params(tape, f.params, true);
        Var x = tape.input(sequence_tensor(video.sequence), false);
        feats = extract_features(tape, f, f_vars, x);
      }
      Var logits = tape.linear(feats, head_vars[0], head_vars[1]);
      Var loss = task_kind == TaskKind::multiclass
                     ? tape.softmax_ce_rows(
                           logits, multiclass_frame_labels(video, head.background()))
                     : tape.bce_logits_mean(
                           logits, multilabel_frame_targets(video, num_classes));
      tape.backward(loss);
      opt_head.step(head.params, head_vars);
      if (mode == EvalMode::finetune) opt_f.step(f.params, f_vars);
    }
  }
  return head;
}

// Prediction dump: one JSON line per video, scores rounded to 6 decimals.
inline void dump_predictions(std::ostream& os, std::int64_t video_id,
                             const Tensor& scores) {
  char num[32];
  os << "{\"video_id\":" << video_id << ",\"scores\":[";
  const int t_len = scores.dim(0), k_len = scores.dim(1);
  for (int t = 0; t < t_len; ++t) {
    os << (t ? ",[" : "[");
    for (int k = 0; k < k_len; ++k) {
      std::snprintf(num, sizeof(num), "%.6f", scores.at(t, k));
      os << (k ? "," : "") << num;
    }
    os << "]";
  }
  os << "]}\n";
}

inline std::map<std::int64_t, Tensor> load_predictions(std::istream& is) {
  std::map<std::int64_t, Tensor> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad prediction line: ") + e.what());
    }
    const auto id = j.at("video_id").get<std::int64_t>();
    const auto& rows = j.at("scores");
    require(!rows.empty() && !rows[0].empty(), "bad prediction line: empty scores");
    Tensor scores({static_cast<int>(rows.size()), static_cast<int>(rows[0].size())});
    for (std::size_t t = 0; t < rows.size(); ++t) {
      require(rows[t].size() == rows[0].size(), "bad prediction line: ragged scores");
      for (std::size_t k = 0; k < rows[t].size(); ++k)
        scores.at(static_cast<int>(t), static_cast<int>(k)) = rows[t][k].get<double>();
    }
    require(out.emplace(id, std::move(scores)).second,
            "duplicate video id in predictions");
  }
  require(!out.empty(), "empty prediction file");
  return out;
}

}  // namespace duoclr
