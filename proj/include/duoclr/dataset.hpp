#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "duoclr/skeleton.hpp"

namespace duoclr {

enum class TaskKind { multiclass, multilabel };

inline std::string task_kind_name(TaskKind k) {
  return k == TaskKind::multiclass ? "multiclass" : "multilabel";
}

inline TaskKind parse_task_kind(const std::string& s) {
  if (s == "multiclass") return TaskKind::multiclass;
  if (s == "multilabel") return TaskKind::multilabel;
  throw ValidationError("unknown task_kind: " + s);
}

// One single-action clip, optionally labeled.
struct TrimmedClip {
  SkeletonSequence sequence;
  std::optional<int> action_label;
  std::int64_t clip_id = 0;
  std::string split = "train";
};

// Half-open frame range [start, end) tagged with an action class.
struct SegmentAnnotation {
  int action_class = 0;
  int start = 0;
  int end = 0;
};

// A long video with per-segment annotations.
struct UntrimmedVideo {
  SkeletonSequence sequence;
  std::vector<SegmentAnnotation> segments;
  TaskKind task_kind = TaskKind::multiclass;
  std::int64_t video_id = 0;
  std::string split = "train";
};

struct Dataset {
  int num_classes = 0;
  std::vector<TrimmedClip> clips;
  std::vector<UntrimmedVideo> videos;
};

inline void validate_clip(const TrimmedClip& c, int num_classes) {
  c.sequence.validate();
  if (c.action_label)
    require(*c.action_label >= 0 && *c.action_label < num_classes,
            "label out of range");
}

inline void validate_video(const UntrimmedVideo& v, int num_classes) {
  v.sequence.validate();
  for (const auto& s : v.segments) {
    require(s.action_class >= 0 && s.action_class < num_classes,
            "label out of range");
    require(s.start >= 0 && s.start < s.end && s.end <= v.sequence.frames,
            "segment out of bounds");
  }
  if (v.task_kind == TaskKind::multiclass) {
    for (std::size_t i = 0; i < v.segments.size(); ++i)
      for (std::size_t j = i + 1; j < v.segments.size(); ++j) {
        const auto& a = v.segments[i];
        const auto& b = v.segments[j];
        require(a.end <= b.start || b.end <= a.start,
                "overlap in multiclass annotation");
      }
  }
}

inline void validate_dataset(const Dataset& d) {
  require(d.num_classes >= 1, "num_classes must be positive");
  for (const auto& c : d.clips) validate_clip(c, d.num_classes);
  for (const auto& v : d.videos) validate_video(v, d.num_classes);
}

// Manifest schema: {"num_classes": K, "entries": [{id, path, kind,
// split, label?, segments?: [{class,start,end}], task_kind?}]}.
// Paths are resolved relative to the manifest's directory.
inline Dataset load_dataset(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw IoError("cannot open " + manifest_path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad manifest " + manifest_path + ": " + e.what());
  }
  require(j.is_object() && j.contains("num_classes") && j.contains("entries"),
          "bad manifest: missing num_classes or entries");
  Dataset d;
  d.num_classes = j.at("num_classes").get<int>();
  require(d.num_classes >= 1, "num_classes must be positive");
  const auto base = std::filesystem::path(manifest_path).parent_path();
  for (const auto& e : j.at("entries")) {
    const std::string kind = e.at("kind").get<std::string>();
    const std::string rel = e.at("path").get<std::string>();
    const std::string path = (base / rel).string();
    if (kind == "trimmed") {
      TrimmedClip c;
      c.sequence = load_skeleton(path);
      c.clip_id = e.at("id").get<std::int64_t>();
      if (e.contains("label")) c.action_label = e.at("label").get<int>();
      if (e.contains("split")) c.split = e.at("split").get<std::string>();
      validate_clip(c, d.num_classes);
      d.clips.push_back(std::move(c));
    } else if (kind == "untrimmed") {
      UntrimmedVideo v;
      v.sequence = load_skeleton(path);
      v.video_id = e.at("id").get<std::int64_t>();
      if (e.contains("task_kind"))
        v.task_kind = parse_task_kind(e.at("task_kind").get<std::string>());
      if (e.contains("split")) v.split = e.at("split").get<std::string>();
      for (const auto& s : e.value("segments", nlohmann::json::array())) {
        SegmentAnnotation a;
        a.action_class = s.at("class").get<int>();
        a.start = s.at("start").get<int>();
        a.end = s.at("end").get<int>();
        v.segments.push_back(a);
      }
      validate_video(v, d.num_classes);
      d.videos.push_back(std::move(v));
    } else {
      throw ValidationError("unknown entry kind: " + kind);
    }
  }
  return d;
}

// Writes every sequence as an SKL1 file plus manifest.json into dir.
inline void save_dataset(const Dataset& d, const std::string& dir) {
  validate_dataset(d);
  std::filesystem::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  char name[64];
  for (const auto& c : d.clips) {
    std::snprintf(name, sizeof(name), "trimmed_%06lld.skl",
                  static_cast<long long>(c.clip_id));
    save_skeleton(c.sequence, (std::filesystem::path(dir) / name).string());
    nlohmann::json e = {{"id", c.clip_id}, {"path", name}, {"kind", "trimmed"},
                        {"split", c.split}};
    if (c.action_label) e["label"] = *c.action_label;
    entries.push_back(e);
  }
  for (const auto& v : d.videos) {
    std::snprintf(name, sizeof(name), "untrimmed_%06lld.skl",
                  static_cast<long long>(v.video_id));
    save_skeleton(v.sequence, (std::filesystem::path(dir) / name).string());
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : v.segments)
      segs.push_back({{"class", s.action_class}, {"start", s.start}, {"end", s.end}});
    entries.push_back({{"id", v.video_id}, {"path", name}, {"kind", "untrimmed"},
                       {"task_kind", task_kind_name(v.task_kind)},
                       {"split", v.split}, {"segments", segs}});
  }
  nlohmann::json j = {{"num_classes", d.num_classes}, {"entries", entries}};
  std::ofstream f(std::filesystem::path(dir) / "manifest.json");
  if (!f) throw IoError("cannot write manifest in " + dir);
  f << j.dump(2) << "\n";
}

// Slices a multiclass video into one clip per annotated segment.
inline std::vector<TrimmedClip> trim_untrimmed(const UntrimmedVideo& video) {
  require(video.task_kind == TaskKind::multiclass,
          "cannot trim overlapping annotations");
  std::vector<TrimmedClip> out;
  out.reserve(video.segments.size());
  for (std::size_t i = 0; i < video.segments.size(); ++i) {
    const auto& s = video.segments[i];
    require(s.start >= 0 && s.start < s.end && s.end <= video.sequence.frames,
            "segment out of bounds");
    TrimmedClip c;
    c.sequence = SkeletonSequence(s.end - s.start, video.sequence.joints,
                                  video.sequence.coords);
    std::copy(video.sequence.data.begin() +
                  static_cast<std::ptrdiff_t>(s.start) * video.sequence.joints *
                      video.sequence.coords,
              video.sequence.data.begin() +
                  static_cast<std::ptrdiff_t>(s.end) * video.sequence.joints *
                      video.sequence.coords,
              c.sequence.data.begin());
    c.action_label = s.action_class;
    c.clip_id = static_cast<std::int64_t>(i);
    c.split = video.split;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace duoclr
