#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "duoclr/common.hpp"

namespace duoclr {

// A skeleton clip: T frames of V joints with C spatial coordinates each,
// stored frame-major as float32 (the on-disk precision).
struct SkeletonSequence {
  int frames = 0;  // T
  int joints = 0;  // V
  int coords = 0;  // C, fixed to 3
  std::vector<float> data;  // frames * joints * coords

  SkeletonSequence() = default;
  SkeletonSequence(int t, int v, int c)
      : frames(t), joints(v), coords(c),
        data(static_cast<std::size_t>(t) * v * c, 0.0f) {}

  float& at(int t, int v, int c) {
    return data[(static_cast<std::size_t>(t) * joints + v) * coords + c];
  }
  float at(int t, int v, int c) const {
    return data[(static_cast<std::size_t>(t) * joints + v) * coords + c];
  }

  void validate() const {
    require(frames >= 1 && joints >= 2, "corrupt file");
    require(coords == 3, "unsupported spatial dimension");
    require(data.size() == static_cast<std::size_t>(frames) * joints * coords,
            "corrupt file");
    for (float x : data) require(std::isfinite(x), "non-finite data");
  }
};

// Binary layout: "SKL1", then T, V, C as u32 little-endian, then
// T*V*C float32 little-endian values in frame-major order.
inline void save_skeleton(const SkeletonSequence& s, const std::string& path) {
  s.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<unsigned char> buf;
  buf.reserve(16 + s.data.size() * 4);
  buf.push_back('S'); buf.push_back('K'); buf.push_back('L'); buf.push_back('1');
  put_u32le(buf, static_cast<std::uint32_t>(s.frames));
  put_u32le(buf, static_cast<std::uint32_t>(s.joints));
  put_u32le(buf, static_cast<std::uint32_t>(s.coords));
  for (float x : s.data) put_f32le(buf, x);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("write failed for " + path);
}

inline SkeletonSequence load_skeleton(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  require(buf.size() >= 4 && buf[0] == 'S' && buf[1] == 'K' && buf[2] == 'L' &&
              buf[3] == '1',
          "not a skeleton file");
  require(buf.size() >= 16, "corrupt file");
  std::size_t off = 4;
  SkeletonSequence s;
  s.frames = static_cast<int>(get_u32le(buf.data() + off)); off += 4;
  s.joints = static_cast<int>(get_u32le(buf.data() + off)); off += 4;
  s.coords = static_cast<int>(get_u32le(buf.data() + off)); off += 4;
  require(s.frames >= 1 && s.joints >= 2, "corrupt file");
  require(s.coords == 3, "unsupported spatial dimension");
  const std::size_t n =
      static_cast<std::size_t>(s.frames) * s.joints * s.coords;
  require(buf.size() == 16 + n * 4, "corrupt file");
  s.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.data[i] = get_f32le(buf.data() + off + i * 4);
  for (float x : s.data) require(std::isfinite(x), "non-finite data");
  return s;
}

// Undirected joint connectivity plus the symmetric-normalized adjacency
// with self loops used by graph convolutions.
struct SkeletonGraph {
  int joints = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> norm_adj;  // joints x joints, row-major

  void build() {
    require(joints >= 1, "graph/sequence mismatch");
    std::vector<double> a(static_cast<std::size_t>(joints) * joints, 0.0);
    for (int j = 0; j < joints; ++j) a[static_cast<std::size_t>(j) * joints + j] = 1.0;
    for (auto [u, w] : edges) {
      require(u >= 0 && u < joints && w >= 0 && w < joints && u != w,
              "graph/sequence mismatch");
      a[static_cast<std::size_t>(u) * joints + w] = 1.0;
      a[static_cast<std::size_t>(w) * joints + u] = 1.0;
    }
    std::vector<double> dinv(static_cast<std::size_t>(joints), 0.0);
    for (int i = 0; i < joints; ++i) {
      double deg = 0.0;
      for (int j = 0; j < joints; ++j) deg += a[static_cast<std::size_t>(i) * joints + j];
      dinv[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
    }
    norm_adj.assign(static_cast<std::size_t>(joints) * joints, 0.0);
    for (int i = 0; i < joints; ++i)
      for (int j = 0; j < joints; ++j)
        norm_adj[static_cast<std::size_t>(i) * joints + j] =
            dinv[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i) * joints + j] *
            dinv[static_cast<std::size_t>(j)];
  }
};

// 16-joint body used throughout: pelvis(0), spine(1), chest(2), head(3),
// left arm 4-6, right arm 7-9, left leg 10-12, right leg 13-15.
inline SkeletonGraph default_skeleton_graph() {
  SkeletonGraph g;
  g.joints = 16;
  g.edges = {{0, 1}, {1, 2}, {2, 3},
             {2, 4}, {4, 5}, {5, 6},
             {2, 7}, {7, 8}, {8, 9},
             {0, 10}, {10, 11}, {11, 12},
             {0, 13}, {13, 14}, {14, 15}};
  g.build();
  return g;
}

// Resting pose for the default graph, used by the synthetic generator.
// Slight depth offsets keep the pose non-planar.
inline std::vector<std::array<double, 3>> default_rest_pose() {
  return {
      {0.00, 0.00, 0.00},   // pelvis
      {0.00, 0.25, 0.02},   // spine
      {0.00, 0.50, 0.00},   // chest
      {0.00, 0.75, 0.03},   // head
      {-0.20, 0.50, 0.01},  // l shoulder
      {-0.40, 0.30, 0.05},  // l elbow
      {-0.55, 0.10, 0.08},  // l wrist
      {0.20, 0.50, 0.01},   // r shoulder
      {0.40, 0.30, 0.05},   // r elbow
      {0.55, 0.10, 0.08},   // r wrist
      {-0.12, -0.05, 0.00}, // l hip
      {-0.14, -0.45, 0.04}, // l knee
      {-0.15, -0.85, 0.02}, // l ankle
      {0.12, -0.05, 0.00},  // r hip
      {0.14, -0.45, 0.04},  // r knee
      {0.15, -0.85, 0.02},  // r ankle
  };
}

}  // namespace duoclr
