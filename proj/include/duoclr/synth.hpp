#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "duoclr/augment.hpp"
#include "duoclr/dataset.hpp"
#include "duoclr/rng.hpp"
#include "duoclr/skeleton.hpp"

namespace duoclr {

namespace detail {

// Sample a uniform direction on the unit sphere.
inline std::array<double, 3> unit_direction(Rng& rng) {
  std::array<double, 3> d{};
  double norm = 0.0;
  while (norm < 1e-6) {
    for (int c = 0; c < 3; ++c) d[static_cast<std::size_t>(c)] = rng.normal();
    norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  }
  for (int c = 0; c < 3; ++c) d[static_cast<std::size_t>(c)] /= norm;
  return d;
}

// Per-joint motion signature of one action class: a whole-body posture
// shift shared by every joint (lean, crouch, reach — actions differ in
// where the body as a whole sits, and a signal all joints share is the
// only static one that survives joint-average pooling), a per-joint stance
// offset on top of it, plus amplitude, phase and a unit direction for the
// oscillation. All a pure function of the class index.
struct ClassSignature {
  std::array<double, 3> posture{};               // whole body, shared shift
  std::vector<std::array<double, 3>> stance;     // per joint, static offset
  std::vector<double> amplitude;                 // per joint, [0.12, 0.3]
  std::vector<double> phase;                     // per joint, [0, 2pi)
  std::vector<std::array<double, 3>> direction;  // per joint, unit vectors
  double frequency = 0.0;                        // cycles per clip
};

// Row-convention rotation from yaw (about y), pitch (about x), roll (about z).
inline std::array<std::array<double, 3>, 3> rotation_ypr(double yaw, double pitch,
                                                         double roll) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cr = std::cos(roll), sr = std::sin(roll);
  // Column-convention M = Ry * Rx * Rz; row-convention result is M^T.
  const double m[3][3] = {
      {cy * cr + sy * sp * sr, -cy * sr + sy * sp * cr, sy * cp},
      {cp * sr, cp * cr, -sp},
      {-sy * cr + cy * sp * sr, sy * sr + cy * sp * cr, cy * cp},
  };
  std::array<std::array<double, 3>, 3> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m[j][i];
  return r;
}

// Whole-body posture directions sit on a fixed constellation (two poles and
// an equatorial triangle, pairwise cosine <= 0) under one seeded global
// rotation: independently drawn directions can land nearly parallel, which
// would merge two classes at the whole-body level by bad luck.
inline std::array<double, 3> posture_direction(int action_class) {
  static const double kVertices[5][3] = {{0.0, 0.0, 1.0},
                                         {0.0, 0.0, -1.0},
                                         {1.0, 0.0, 0.0},
                                         {-0.5, 0.8660254037844386, 0.0},
                                         {-0.5, -0.8660254037844386, 0.0}};
  Rng rng(derive_seed(0x5349474eu /* "SIGN" */, 0x504f53u /* "POS" */));
  const auto rot = rotation_ypr(rng.uniform(0.0, 2.0 * M_PI), rng.uniform(-0.5, 0.5),
                                rng.uniform(0.0, 2.0 * M_PI));
  const double* v = kVertices[action_class % 5];
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c)
    out[static_cast<std::size_t>(c)] =
        v[0] * rot[0][static_cast<std::size_t>(c)] + v[1] * rot[1][static_cast<std::size_t>(c)] +
        v[2] * rot[2][static_cast<std::size_t>(c)];
  return out;
}

inline ClassSignature class_signature(int action_class, int joints) {
  ClassSignature s;
  s.frequency = 0.5 + 0.35 * action_class;
  Rng rng(derive_seed(0x5349474eu /* "SIGN" */, static_cast<std::uint64_t>(action_class)));
  const auto lean = posture_direction(action_class);
  for (int c = 0; c < 3; ++c) s.posture[static_cast<std::size_t>(c)] = 0.3 * lean[static_cast<std::size_t>(c)];
  for (int v = 0; v < joints; ++v) {
    std::array<double, 3> st{};
    for (int c = 0; c < 3; ++c) st[static_cast<std::size_t>(c)] = rng.uniform(-0.2, 0.2);
    s.stance.push_back(st);
    s.amplitude.push_back(rng.uniform(0.12, 0.3));
    s.phase.push_back(rng.uniform(0.0, 2.0 * M_PI));
    s.direction.push_back(unit_direction(rng));
  }
  return s;
}

// Per-clip performer variation: a fixed skeleton-wide scale and a small
// static per-joint build offset. Two renditions of one action are the same
// motion worn by different bodies; the offsets persist over every frame.
struct PerformerJitter {
  double scale = 1.0;
  std::vector<std::array<double, 3>> build;  // per joint, static
};

inline PerformerJitter draw_performer(Rng& rng, int joints) {
  PerformerJitter p;
  p.scale = rng.uniform(0.95, 1.05);
  for (int v = 0; v < joints; ++v) {
    std::array<double, 3> b{};
    for (int c = 0; c < 3; ++c) b[static_cast<std::size_t>(c)] = rng.uniform(-0.06, 0.06);
    p.build.push_back(b);
  }
  return p;
}

// Camera jitter is kept an order of magnitude below the motion signal so a
// frame-level readout stays feasible: the encoder must absorb the nuisance,
// not solve full view invariance from a few hundred clips. Translation is
// small because capture pipelines root-center the skeleton before encoding.
inline SimilarityTransform draw_camera(Rng& rng) {
  const double yaw = rng.uniform(-0.35, 0.35);
  const double pitch = rng.uniform(-0.1, 0.1);
  const double roll = rng.uniform(-0.1, 0.1);
  SimilarityTransform tr;
  tr.rotation = rotation_ypr(yaw, pitch, roll);
  for (int c = 0; c < 3; ++c) tr.translation[static_cast<std::size_t>(c)] = rng.uniform(-0.08, 0.08);
  tr.scale = rng.uniform(0.9, 1.1);
  return tr;
}

// Rest pose + class motion (+ optional overlaid second class) + noise,
// then one camera transform over the whole clip.
inline SkeletonSequence synth_frames(int action_class, std::optional<int> overlay_class,
                                     int frames, double noise_sigma,
                                     std::uint64_t camera_seed,
                                     std::uint64_t motion_seed) {
  require(action_class >= 0, "label out of range");
  require(frames >= 8, "clip too short");
  const auto pose = default_rest_pose();
  const int joints = static_cast<int>(pose.size());
  const auto sig = class_signature(action_class, joints);
  std::optional<ClassSignature> sig2;
  if (overlay_class) sig2 = class_signature(*overlay_class, joints);

  SkeletonSequence x(frames, joints, 3);
  Rng noise(motion_seed);
  const auto body = draw_performer(noise, joints);
  for (int t = 0; t < frames; ++t) {
    const double u = static_cast<double>(t) / frames;
    for (int v = 0; v < joints; ++v) {
      const double w = sig.amplitude[static_cast<std::size_t>(v)] *
                       std::sin(2.0 * M_PI * sig.frequency * u +
                                sig.phase[static_cast<std::size_t>(v)]);
      std::array<double, 3> p{};
      for (int c = 0; c < 3; ++c)
        p[static_cast<std::size_t>(c)] = pose[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] +
                                         sig.posture[static_cast<std::size_t>(c)] +
                                         sig.stance[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] +
                                         body.build[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] +
                                         w * sig.direction[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)];
      if (sig2) {
        const double w2 = sig2->amplitude[static_cast<std::size_t>(v)] *
                          std::sin(2.0 * M_PI * sig2->frequency * u +
                                   sig2->phase[static_cast<std::size_t>(v)]);
        for (int c = 0; c < 3; ++c)
          p[static_cast<std::size_t>(c)] += sig2->posture[static_cast<std::size_t>(c)] +
                                            sig2->stance[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] +
                                            w2 * sig2->direction[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)];
      }
      for (int c = 0; c < 3; ++c)
        x.at(t, v, c) = static_cast<float>(body.scale * p[static_cast<std::size_t>(c)] +
                                           (noise_sigma > 0.0 ? noise.normal(0.0, noise_sigma) : 0.0));
    }
  }
  Rng cam(camera_seed);
  return apply_similarity(x, draw_camera(cam));
}

}  // namespace detail

inline TrimmedClip synth_trimmed(int action_class, int frames, double noise_sigma,
                                 std::uint64_t camera_seed, std::uint64_t motion_seed) {
  TrimmedClip c;
  c.sequence = detail::synth_frames(action_class, std::nullopt, frames, noise_sigma,
                                    camera_seed, motion_seed);
  c.action_label = action_class;
  return c;
}

// One clip per listed class, each under its own camera, joined with
// warp_pair so the result stays view-consistent. Multilabel videos overlay
// a second concurrent class on a segment with probability 0.5.
inline UntrimmedVideo synth_untrimmed(const std::vector<int>& class_list,
                                      int per_action_t, double noise_sigma,
                                      std::uint64_t seed, TaskKind task_kind) {
  require(!class_list.empty(), "empty class_list");
  Rng overlay_rng(derive_seed(seed, 0x4f56u /* "OV" */));
  std::vector<SkeletonSequence> clips;
  UntrimmedVideo video;
  video.task_kind = task_kind;
  for (std::size_t k = 0; k < class_list.size(); ++k) {
    const int cls = class_list[k];
    std::optional<int> overlay;
    if (task_kind == TaskKind::multilabel && overlay_rng.bernoulli(0.5)) {
      std::vector<int> others;
      for (int c : class_list)
        if (c != cls && std::find(others.begin(), others.end(), c) == others.end())
          others.push_back(c);
      if (!others.empty())
        overlay = others[overlay_rng.uniform_index(others.size())];
    }
    clips.push_back(detail::synth_frames(
        cls, overlay, per_action_t, noise_sigma,
        derive_seed(seed, 0x10000u + k), derive_seed(seed, 0x20000u + k)));
    const int start = static_cast<int>(k) * per_action_t;
    video.segments.push_back({cls, start, start + per_action_t});
    if (overlay) video.segments.push_back({*overlay, start, start + per_action_t});
  }
  SkeletonSequence running = clips[0];
  for (std::size_t k = 1; k < clips.size(); ++k)
    running = warp_pair(running, clips[k]);
  video.sequence = std::move(running);
  return video;
}

}  // namespace duoclr
