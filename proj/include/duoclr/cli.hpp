#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "duoclr/dataset.hpp"
#include "duoclr/metrics.hpp"
#include "duoclr/pretrain.hpp"
#include "duoclr/segmentation.hpp"
#include "duoclr/synth.hpp"

namespace duoclr {

// Thrown for missing/contradictory command arguments (exit code 2).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// The full configuration union: pretraining, encoder, evaluation settings
// and file paths. Every field has a default; files may set any subset;
// unknown keys are rejected with their path.
struct RunConfig {
  PretrainConfig pre;
  EncoderConfig enc;
  bool baseline = false;
  std::string eval_mode = "linear";
  std::string eval_task = "multiclass";
  double eval_fraction = 1.0;
  int eval_epochs = 10;
  double eval_lr = 0.05;
  std::uint64_t eval_seed = 1;
  std::string path_data, path_checkpoint, path_report, path_log, path_predictions;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& known,
                                const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError("unknown key: " + prefix + key);
  }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  detail::reject_unknown_keys(
      j,
      {"granularity", "alpha", "tau", "class_bank_capacity",
       "permutation_bank_capacity", "momentum", "p_same", "supervised",
       "augmentations", "epochs", "batch_size", "learning_rate", "seed",
       "cpc_weight", "baseline", "encoder", "eval", "paths"},
      "");
  detail::maybe(j, "granularity", c.pre.granularity);
  detail::maybe(j, "alpha", c.pre.alpha);
  detail::maybe(j, "tau", c.pre.tau);
  detail::maybe(j, "class_bank_capacity", c.pre.class_bank_capacity);
  detail::maybe(j, "permutation_bank_capacity", c.pre.permutation_bank_capacity);
  detail::maybe(j, "momentum", c.pre.momentum);
  detail::maybe(j, "p_same", c.pre.p_same);
  detail::maybe(j, "supervised", c.pre.supervised);
  detail::maybe(j, "epochs", c.pre.epochs);
  detail::maybe(j, "batch_size", c.pre.batch_size);
  detail::maybe(j, "learning_rate", c.pre.learning_rate);
  detail::maybe(j, "seed", c.pre.seed);
  detail::maybe(j, "cpc_weight", c.pre.cpc_weight);
  detail::maybe(j, "baseline", c.baseline);
  if (j.contains("augmentations")) {
    c.pre.aug_shuffle = c.pre.aug_warp = c.pre.aug_shear = c.pre.aug_crop = false;
    for (const auto& a : j.at("augmentations")) {
      const std::string name = a.get<std::string>();
      if (name == "shuffle") c.pre.aug_shuffle = true;
      else if (name == "warp") c.pre.aug_warp = true;
      else if (name == "shear") c.pre.aug_shear = true;
      else if (name == "crop") c.pre.aug_crop = true;
      else throw ValidationError("unknown key: augmentations." + name);
    }
  }
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    detail::reject_unknown_keys(
        e, {"c1", "c2", "c3", "gcn_blocks", "tcn_layers", "tcn_kernel"}, "encoder.");
    detail::maybe(e, "c1", c.enc.c1);
    detail::maybe(e, "c2", c.enc.c2);
    detail::maybe(e, "c3", c.enc.c3);
    detail::maybe(e, "gcn_blocks", c.enc.gcn_blocks);
    detail::maybe(e, "tcn_layers", c.enc.tcn_layers);
    detail::maybe(e, "tcn_kernel", c.enc.tcn_kernel);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    detail::reject_unknown_keys(
        e, {"mode", "task", "fraction", "epochs", "learning_rate", "seed"}, "eval.");
    detail::maybe(e, "mode", c.eval_mode);
    detail::maybe(e, "task", c.eval_task);
    detail::maybe(e, "fraction", c.eval_fraction);
    detail::maybe(e, "epochs", c.eval_epochs);
    detail::maybe(e, "learning_rate", c.eval_lr);
    detail::maybe(e, "seed", c.eval_seed);
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    detail::reject_unknown_keys(
        p, {"data", "checkpoint", "report", "log", "predictions"}, "paths.");
    detail::maybe(p, "data", c.path_data);
    detail::maybe(p, "checkpoint", c.path_checkpoint);
    detail::maybe(p, "report", c.path_report);
    detail::maybe(p, "log", c.path_log);
    detail::maybe(p, "predictions", c.path_predictions);
  }
  c.pre.validate();
  c.enc.validate();
  parse_eval_mode(c.eval_mode);
  parse_task_kind(c.eval_task);
  require(c.eval_fraction > 0.0 && c.eval_fraction <= 1.0, "fraction out of range");
  require(c.eval_epochs >= 1, "epochs and batch_size must be positive");
  require(c.eval_lr > 0.0, "learning rate must be positive");
  return c;
}

inline nlohmann::json run_config_json(const RunConfig& c) {
  nlohmann::json augs = nlohmann::json::array();
  if (c.pre.aug_shuffle) augs.push_back("shuffle");
  if (c.pre.aug_warp) augs.push_back("warp");
  if (c.pre.aug_shear) augs.push_back("shear");
  if (c.pre.aug_crop) augs.push_back("crop");
  return {
      {"granularity", c.pre.granularity},
      {"alpha", c.pre.alpha},
      {"tau", c.pre.tau},
      {"class_bank_capacity", c.pre.class_bank_capacity},
      {"permutation_bank_capacity", c.pre.permutation_bank_capacity},
      {"momentum", c.pre.momentum},
      {"p_same", c.pre.p_same},
      {"supervised", c.pre.supervised},
      {"augmentations", augs},
      {"epochs", c.pre.epochs},
      {"batch_size", c.pre.batch_size},
      {"learning_rate", c.pre.learning_rate},
      {"seed", c.pre.seed},
      {"cpc_weight", c.pre.cpc_weight},
      {"baseline", c.baseline},
      {"encoder",
       {{"c1", c.enc.c1}, {"c2", c.enc.c2}, {"c3", c.enc.c3},
        {"gcn_blocks", c.enc.gcn_blocks}, {"tcn_layers", c.enc.tcn_layers},
        {"tcn_kernel", c.enc.tcn_kernel}}},
      {"eval",
       {{"mode", c.eval_mode}, {"task", c.eval_task}, {"fraction", c.eval_fraction},
        {"epochs", c.eval_epochs}, {"learning_rate", c.eval_lr},
        {"seed", c.eval_seed}}},
      {"paths",
       {{"data", c.path_data}, {"checkpoint", c.path_checkpoint},
        {"report", c.path_report}, {"log", c.path_log},
        {"predictions", c.path_predictions}}}};
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad config " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

inline void write_resolved_config(const RunConfig& c, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  f << run_config_json(c).dump(2) << "\n";
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  int classes = 5;
  int clips_per_class = 20;
  int frames = 48;
  int untrimmed = 0;
  int actions_per_video = 3;
  double noise = 0.05;
  std::string task = "multiclass";
  std::uint64_t seed = 1;
  double test_fraction = 0.5;  // untrimmed videos held out as the test split
  bool force = false;
};

inline void cmd_synth(const SynthArgs& a, std::ostream& out_stream) {
  require(a.classes >= 1 && a.clips_per_class >= 1, "num_classes must be positive");
  require(a.frames >= 8, "clip too short");
  require(a.untrimmed >= 0 && a.actions_per_video >= 1, "actions_per_video must be positive");
  require(a.actions_per_video <= a.classes, "actions per video exceeds class count");
  require(a.test_fraction >= 0.0 && a.test_fraction <= 1.0, "fraction out of range");
  const TaskKind task = parse_task_kind(a.task);
  if (std::filesystem::exists(a.out) &&
      !std::filesystem::is_empty(a.out) && !a.force)
    throw ValidationError("output directory not empty (use --force): " + a.out);

  Dataset d;
  d.num_classes = a.classes;
  for (int cls = 0; cls < a.classes; ++cls)
    for (int i = 0; i < a.clips_per_class; ++i) {
      const std::int64_t id = static_cast<std::int64_t>(cls) * a.clips_per_class + i;
      TrimmedClip c = synth_trimmed(
          cls, a.frames, a.noise,
          derive_seed(derive_seed(a.seed, 1), static_cast<std::uint64_t>(id)),
          derive_seed(derive_seed(a.seed, 2), static_cast<std::uint64_t>(id)));
      c.clip_id = id;
      c.split = "train";
      d.clips.push_back(std::move(c));
    }
  const auto n_test = static_cast<int>(std::llround(a.test_fraction * a.untrimmed));
  for (int i = 0; i < a.untrimmed; ++i) {
    Rng pick(derive_seed(derive_seed(a.seed, 3), static_cast<std::uint64_t>(i)));
    std::vector<int> classes(static_cast<std::size_t>(a.classes));
    for (int k = 0; k < a.classes; ++k) classes[static_cast<std::size_t>(k)] = k;
    for (int k = 0; k < a.actions_per_video; ++k) {
      const auto j = k + static_cast<std::size_t>(pick.uniform_index(
          static_cast<std::uint64_t>(a.classes - k)));
      std::swap(classes[static_cast<std::size_t>(k)], classes[j]);
    }
    classes.resize(static_cast<std::size_t>(a.actions_per_video));
    UntrimmedVideo v = synth_untrimmed(
        classes, a.frames, a.noise,
        derive_seed(derive_seed(a.seed, 4), static_cast<std::uint64_t>(i)), task);
    v.video_id = 100000 + i;
    v.split = i < a.untrimmed - n_test ? "train" : "test";
    d.videos.push_back(std::move(v));
  }
  save_dataset(d, a.out);
  out_stream << "synth: wrote " << a.classes * a.clips_per_class
             << " trimmed clips and " << a.untrimmed << " untrimmed videos to "
             << a.out << "\n";
}

// ------------------------------------------------------------- pretrain

struct PretrainArgs {
  std::optional<std::string> data, config_path, out, log_path;
  bool baseline = false;
};

inline void cmd_pretrain(const PretrainArgs& a, std::ostream& out_stream) {
  RunConfig cfg = a.config_path ? load_run_config(*a.config_path) : RunConfig{};
  if (a.data) cfg.path_data = *a.data;
  if (a.out) cfg.path_checkpoint = *a.out;
  if (a.baseline) cfg.baseline = true;
  if (a.log_path) cfg.path_log = *a.log_path;
  if (cfg.path_data.empty()) throw UsageError("missing --data");
  if (cfg.path_checkpoint.empty()) throw UsageError("missing --out");
  if (cfg.path_log.empty()) cfg.path_log = cfg.path_checkpoint + ".log.jsonl";

  const Dataset data =
      load_dataset((std::filesystem::path(cfg.path_data) / "manifest.json").string());
  PretrainResult res =
      cfg.baseline
          ? train_baseline_recognition(data, cfg.enc, cfg.pre.epochs,
                                       cfg.pre.learning_rate, cfg.pre.seed)
          : pretrain(data, cfg.pre, cfg.enc);
  save_checkpoint(res.encoder, cfg.path_checkpoint);
  {
    std::ofstream log(cfg.path_log);
    if (!log) throw IoError("cannot open " + cfg.path_log);
    for (const auto& line : res.log) log << line.dump() << "\n";
  }
  write_resolved_config(cfg, cfg.path_checkpoint + ".resolved.json");
  out_stream << "pretrain: wrote " << cfg.path_checkpoint << " ("
             << (cfg.baseline ? "baseline" : "duoclr") << ", "
             << cfg.pre.epochs << " epochs)\n";
}

// -------------------------------------------------------------- evalseg

namespace detail {

inline std::vector<const UntrimmedVideo*> videos_of(const Dataset& d, TaskKind task,
                                                    const std::string& split) {
  std::vector<const UntrimmedVideo*> out;
  for (const auto& v : d.videos)
    if (v.task_kind == task && v.split == split) out.push_back(&v);
  return out;
}

}  // namespace detail

// Metrics for multiclass segmentation from per-video score matrices.
inline std::vector<std::pair<std::string, double>> multiclass_metrics(
    const std::vector<const UntrimmedVideo*>& videos,
    const std::vector<Tensor>& scores, int num_classes) {
  std::vector<ScoredSegment> pred_segments;
  std::vector<GtSegment> gt_segments;
  std::vector<std::vector<int>> pred_labels, gt_labels;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    require(scores[v].dim(1) == num_classes + 1, "prediction width mismatch");
    FramePredictions fp;
    fp.task_kind = TaskKind::multiclass;
    fp.scores = scores[v];
    const auto segs = frames_to_segments(fp, num_classes, videos[v]->video_id);
    pred_segments.insert(pred_segments.end(), segs.begin(), segs.end());
    for (const auto& s : videos[v]->segments)
      gt_segments.push_back({s.action_class, s.start, s.end, videos[v]->video_id});
    pred_labels.push_back(hard_labels(fp));
    gt_labels.push_back(multiclass_frame_labels(*videos[v], num_classes));
  }
  return {{"mAP@0.1", map_at_iou(pred_segments, gt_segments, 0.1)},
          {"mAP@0.5", map_at_iou(pred_segments, gt_segments, 0.5)},
          {"Acc", frame_accuracy(pred_labels, gt_labels)},
          {"mIoU", mean_iou(pred_labels, gt_labels)}};
}

// Per-frame mAP over all test frames pooled, for multilabel segmentation.
inline std::vector<std::pair<std::string, double>> multilabel_metrics(
    const std::vector<const UntrimmedVideo*>& videos,
    const std::vector<Tensor>& scores, int num_classes) {
  int total = 0;
  for (const auto* v : videos) total += v->sequence.frames;
  Tensor pooled({total, num_classes}), targets({total, num_classes});
  int at = 0;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    require(scores[v].dim(1) == num_classes, "prediction width mismatch");
    const Tensor tgt = multilabel_frame_targets(*videos[v], num_classes);
    for (int t = 0; t < videos[v]->sequence.frames; ++t, ++at)
      for (int k = 0; k < num_classes; ++k) {
        pooled.at(at, k) = scores[v].at(t, k);
        targets.at(at, k) = tgt.at(t, k);
      }
  }
  return {{"per_frame_mAP", per_frame_map(pooled, targets)}};
}

// Report writer shared by evalseg and metrics: JSON object of 6-decimal
// metric values (plus optional encoder hash) and a CSV mirror.
inline void write_eval_report(const std::string& json_path,
                              const std::vector<std::pair<std::string, double>>& metrics,
                              const std::string& split,
                              const std::string& encoder_hash) {
  char num[32];
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path);
  js << "{";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    std::snprintf(num, sizeof(num), "%.6f", metrics[i].second);
    js << (i ? "," : "") << "\"" << metrics[i].first << "\":" << num;
  }
  if (!encoder_hash.empty())
    js << (metrics.empty() ? "" : ",") << "\"encoder_hash\":\"" << encoder_hash << "\"";
  js << "}\n";
  const std::string csv_path =
      std::filesystem::path(json_path).replace_extension(".csv").string();
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot open " + csv_path);
  csv << "metric,split,value\n";
  for (const auto& [name, value] : metrics) {
    std::snprintf(num, sizeof(num), "%.6f", value);
    csv << name << "," << split << "," << num << "\n";
  }
  if (!encoder_hash.empty())
    csv << "encoder_hash," << split << "," << encoder_hash << "\n";
}

struct EvalArgs {
  std::optional<std::string> data, ckpt, mode, task, out, pred_path, config_path;
  std::optional<double> fraction;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
};

struct EvalOutcome {
  std::vector<std::pair<std::string, double>> metrics;
  std::string encoder_hash;
};

// Core evaluation pipeline: train the head on the train split (optionally
// fine-tuning F), predict every test video in one pass each, dump
// predictions, compute the task's metric set.
inline EvalOutcome evaluate_segmentation(EncoderState& f, const Dataset& data,
                                         EvalMode mode, TaskKind task,
                                         double fraction, int epochs, double lr,
                                         std::uint64_t seed,
                                         const std::string& pred_path) {
  const auto train_videos = detail::videos_of(data, task, "train");
  const auto test_videos = detail::videos_of(data, task, "test");
  require(!train_videos.empty(), "empty subsample");
  require(!test_videos.empty(), "empty reference");
  const SegmentationHead head = train_head(f, train_videos, mode, task,
                                           data.num_classes, fraction, epochs, lr, seed);
  std::vector<Tensor> scores;
  for (const auto* v : test_videos)
    scores.push_back(segment_forward(f, head, *v).scores);
  if (!pred_path.empty()) {
    std::ofstream pf(pred_path);
    if (!pf) throw IoError("cannot open " + pred_path);
    for (std::size_t v = 0; v < test_videos.size(); ++v)
      dump_predictions(pf, test_videos[v]->video_id, scores[v]);
  }
  EvalOutcome out;
  out.metrics = task == TaskKind::multiclass
                    ? multiclass_metrics(test_videos, scores, data.num_classes)
                    : multilabel_metrics(test_videos, scores, data.num_classes);
  out.encoder_hash = encoder_hash(f);
  return out;
}

inline void cmd_evalseg(const EvalArgs& a, std::ostream& out_stream) {
  RunConfig cfg = a.config_path ? load_run_config(*a.config_path) : RunConfig{};
  if (a.data) cfg.path_data = *a.data;
  if (a.ckpt) cfg.path_checkpoint = *a.ckpt;
  if (a.out) cfg.path_report = *a.out;
  if (a.mode) cfg.eval_mode = *a.mode;
  if (a.task) cfg.eval_task = *a.task;
  if (a.fraction) cfg.eval_fraction = *a.fraction;
  if (a.seed) cfg.eval_seed = *a.seed;
  if (a.epochs) cfg.eval_epochs = *a.epochs;
  if (a.lr) cfg.eval_lr = *a.lr;
  if (cfg.path_data.empty()) throw UsageError("missing --data");
  if (cfg.path_checkpoint.empty()) throw UsageError("missing --ckpt");
  if (cfg.path_report.empty()) throw UsageError("missing --out");
  if (cfg.path_predictions.empty())
    cfg.path_predictions = a.pred_path
                               ? *a.pred_path
                               : cfg.path_report + ".pred.jsonl";
  else if (a.pred_path)
    cfg.path_predictions = *a.pred_path;
  const EvalMode mode = parse_eval_mode(cfg.eval_mode);
  const TaskKind task = parse_task_kind(cfg.eval_task);
  require(cfg.eval_fraction > 0.0 && cfg.eval_fraction <= 1.0, "fraction out of range");

  const Dataset data =
      load_dataset((std::filesystem::path(cfg.path_data) / "manifest.json").string());
  EncoderState f = load_checkpoint(cfg.path_checkpoint);
  const EvalOutcome outcome =
      evaluate_segmentation(f, data, mode, task, cfg.eval_fraction, cfg.eval_epochs,
                            cfg.eval_lr, cfg.eval_seed, cfg.path_predictions);
  write_eval_report(cfg.path_report, outcome.metrics, "test", outcome.encoder_hash);
  write_resolved_config(cfg, cfg.path_report + ".resolved.json");
  out_stream << "evalseg: wrote " << cfg.path_report << "\n";
}

// -------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string pred, gt, task = "multiclass", out;
};

inline void cmd_metrics(const MetricsArgs& a, std::ostream& out_stream) {
  const TaskKind task = parse_task_kind(a.task);
  std::ifstream pf(a.pred);
  if (!pf) throw IoError("cannot open " + a.pred);
  const auto preds = load_predictions(pf);
  const Dataset data = load_dataset(a.gt);
  const auto gt_videos = detail::videos_of(data, task, "test");
  require(!gt_videos.empty(), "empty reference");

  std::string missing;
  for (const auto* v : gt_videos)
    if (!preds.count(v->video_id)) missing += " " + std::to_string(v->video_id);
  std::string extra;
  for (const auto& [id, s] : preds) {
    (void)s;
    bool found = false;
    for (const auto* v : gt_videos) found = found || v->video_id == id;
    if (!found) extra += " " + std::to_string(id);
  }
  if (!missing.empty() || !extra.empty())
    throw ValidationError("id mismatch between predictions and reference:" +
                          (missing.empty() ? "" : " missing" + missing) +
                          (extra.empty() ? "" : " unexpected" + extra));

  std::vector<Tensor> scores;
  for (const auto* v : gt_videos) {
    const Tensor& s = preds.at(v->video_id);
    require(s.dim(0) == v->sequence.frames, "prediction/reference length mismatch");
    scores.push_back(s);
  }
  const auto metrics = task == TaskKind::multiclass
                           ? multiclass_metrics(gt_videos, scores, data.num_classes)
                           : multilabel_metrics(gt_videos, scores, data.num_classes);
  write_eval_report(a.out, metrics, "test", "");
  out_stream << "metrics: wrote " << a.out << "\n";
}

}  // namespace duoclr
