#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "duoclr/rng.hpp"
#include "duoclr/skeleton.hpp"

namespace duoclr {

// Row-vector convention throughout: a joint x maps to s * (x * R + t).
struct SimilarityTransform {
  std::array<std::array<double, 3>, 3> rotation{};
  std::array<double, 3> translation{};
  double scale = 1.0;

  static SimilarityTransform identity() {
    SimilarityTransform tr;
    for (int i = 0; i < 3; ++i) tr.rotation[i][i] = 1.0;
    return tr;
  }

  std::array<double, 3> apply(const std::array<double, 3>& x) const {
    std::array<double, 3> y{};
    for (int j = 0; j < 3; ++j) {
      double a = translation[j];
      for (int i = 0; i < 3; ++i) a += x[i] * rotation[i][j];
      y[j] = scale * a;
    }
    return y;
  }

  void validate() const {
    require(scale > 0.0, "scale must be positive");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += rotation[k][i] * rotation[k][j];
        require(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-9,
                "rotation not orthogonal");
      }
    const auto& r = rotation;
    const double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                       r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                       r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    require(std::abs(det - 1.0) < 1e-9, "rotation not proper");
  }
};

using Frame = std::vector<std::array<double, 3>>;  // V joints

inline Frame frame_of(const SkeletonSequence& s, int t) {
  Frame f(static_cast<std::size_t>(s.joints));
  for (int v = 0; v < s.joints; ++v)
    for (int c = 0; c < 3; ++c) f[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] = s.at(t, v, c);
  return f;
}

// Least-squares similarity transform taking source joints onto target
// joints (Umeyama closed form, reflection-corrected). Minimizes
// sum_v || s*(source_v*R + t) - target_v ||^2.
inline SimilarityTransform estimate_similarity_transform(const Frame& target,
                                                         const Frame& source) {
  require(target.size() == source.size(), "graph/sequence mismatch");
  const int n = static_cast<int>(source.size());
  require(n >= 3, "degenerate frame");

  Eigen::Vector3d mu_x = Eigen::Vector3d::Zero();  // source mean
  Eigen::Vector3d mu_y = Eigen::Vector3d::Zero();  // target mean
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < 3; ++c) {
      mu_x[c] += source[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)];
      mu_y[c] += target[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)];
    }
  mu_x /= n;
  mu_y /= n;

  // Cross-covariance (column convention: y' = R_col x') and source variance.
  Eigen::Matrix3d sigma_xy = Eigen::Matrix3d::Zero();
  double var_x = 0.0;
  for (int v = 0; v < n; ++v) {
    Eigen::Vector3d dx, dy;
    for (int c = 0; c < 3; ++c) {
      dx[c] = source[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] - mu_x[c];
      dy[c] = target[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] - mu_y[c];
    }
    sigma_xy += dy * dx.transpose();
    var_x += dx.squaredNorm();
  }
  sigma_xy /= n;
  var_x /= n;

  // Rank of the centered source must be >= 2 for a well-posed rotation.
  {
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (int v = 0; v < n; ++v) {
      Eigen::Vector3d dx;
      for (int c = 0; c < 3; ++c)
        dx[c] = source[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] - mu_x[c];
      scatter += dx * dx.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
    const double lead = es.eigenvalues()[2];
    require(es.eigenvalues()[1] > 1e-12 * std::max(1.0, lead), "degenerate frame");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      sigma_xy, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d vt = svd.matrixV().transpose();
  Eigen::Vector3d d = svd.singularValues();
  Eigen::Vector3d sgn(1.0, 1.0, 1.0);
  if (u.determinant() * vt.determinant() < 0.0) sgn[2] = -1.0;
  Eigen::Matrix3d r_col = u * sgn.asDiagonal() * vt;
  const double scale = (d[0] * sgn[0] + d[1] * sgn[1] + d[2] * sgn[2]) / var_x;
  require(scale > 0.0, "degenerate frame");
  Eigen::Vector3d t_col = mu_y - scale * r_col * mu_x;

  // Convert to the row-vector form y = s*(x*R + t): R = R_col^T, t = t_col/s.
  SimilarityTransform tr;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) tr.rotation[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = r_col(j, i);
  tr.scale = scale;
  for (int j = 0; j < 3; ++j) tr.translation[static_cast<std::size_t>(j)] = t_col[j] / scale;
  return tr;
}

inline SkeletonSequence apply_similarity(const SkeletonSequence& x,
                                         const SimilarityTransform& tr) {
  SkeletonSequence y(x.frames, x.joints, x.coords);
  for (int t = 0; t < x.frames; ++t)
    for (int v = 0; v < x.joints; ++v) {
      std::array<double, 3> p{};
      for (int c = 0; c < 3; ++c) p[static_cast<std::size_t>(c)] = x.at(t, v, c);
      const auto q = tr.apply(p);
      for (int c = 0; c < 3; ++c) y.at(t, v, c) = static_cast<float>(q[static_cast<std::size_t>(c)]);
    }
  return y;
}

// Aligns x_j's first frame onto x_i's last frame and concatenates.
// The x_i prefix is copied verbatim.
inline SkeletonSequence warp_pair(const SkeletonSequence& x_i,
                                  const SkeletonSequence& x_j) {
  require(x_i.joints == x_j.joints && x_i.coords == x_j.coords,
          "graph/sequence mismatch");
  const auto tr = estimate_similarity_transform(frame_of(x_i, x_i.frames - 1),
                                                frame_of(x_j, 0));
  SkeletonSequence out(x_i.frames + x_j.frames, x_i.joints, x_i.coords);
  std::copy(x_i.data.begin(), x_i.data.end(), out.data.begin());
  const SkeletonSequence warped = apply_similarity(x_j, tr);
  std::copy(warped.data.begin(), warped.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(x_i.data.size()));
  return out;
}

// One clip slot: the identity is a class label in supervised mode or a
// clip id in unsupervised mode.
struct Slot {
  std::int64_t identity = 0;
  const SkeletonSequence* clip = nullptr;
};

// A multi-action sequence assembled from G slots in permuted order.
struct MultiActionPermutation {
  SkeletonSequence frames;
  std::vector<std::int64_t> permutation;          // slot identities, in order
  std::vector<std::pair<int, int>> boundaries;    // [start, end) per slot
  int granularity = 0;
};

namespace detail {
// Resolves permutation entries to slot indices, enforcing bijectivity.
inline std::vector<int> resolve_permutation(const std::vector<Slot>& slots,
                                            const std::vector<std::int64_t>& perm) {
  require(perm.size() == slots.size(), "not a permutation");
  std::vector<int> order;
  std::vector<bool> used(slots.size(), false);
  for (std::int64_t id : perm) {
    int found = -1;
    for (std::size_t s = 0; s < slots.size(); ++s)
      if (slots[s].identity == id) { found = static_cast<int>(s); break; }
    require(found >= 0, "unknown slot");
    require(!used[static_cast<std::size_t>(found)], "not a permutation");
    used[static_cast<std::size_t>(found)] = true;
    order.push_back(found);
  }
  return order;
}
}  // namespace detail

// Concatenates the slots in permutation order without touching coordinates.
inline MultiActionPermutation shuffle(const std::vector<Slot>& slots,
                                      const std::vector<std::int64_t>& perm) {
  require(!slots.empty(), "not a permutation");
  const auto order = detail::resolve_permutation(slots, perm);
  const int joints = slots[0].clip->joints;
  const int coords = slots[0].clip->coords;
  int total = 0;
  for (const auto& s : slots) {
    require(s.clip->joints == joints && s.clip->coords == coords,
            "graph/sequence mismatch");
    total += s.clip->frames;
  }
  MultiActionPermutation m;
  m.frames = SkeletonSequence(total, joints, coords);
  m.permutation = perm;
  m.granularity = static_cast<int>(slots.size());
  int at = 0;
  for (int idx : order) {
    const SkeletonSequence& c = *slots[static_cast<std::size_t>(idx)].clip;
    std::copy(c.data.begin(), c.data.end(),
              m.frames.data.begin() +
                  static_cast<std::ptrdiff_t>(at) * joints * coords);
    m.boundaries.emplace_back(at, at + c.frames);
    at += c.frames;
  }
  return m;
}

// Shuffle, then fold warp_pair left to right: slot 1 anchors the camera
// configuration and each later slot is aligned to the running result.
inline MultiActionPermutation shuffle_and_warp(const std::vector<Slot>& slots,
                                               const std::vector<std::int64_t>& perm) {
  MultiActionPermutation m = shuffle(slots, perm);
  const auto order = detail::resolve_permutation(slots, perm);
  SkeletonSequence running = *slots[static_cast<std::size_t>(order[0])].clip;
  for (std::size_t k = 1; k < order.size(); ++k)
    running = warp_pair(running, *slots[static_cast<std::size_t>(order[k])].clip);
  m.frames = std::move(running);
  return m;
}

// Random unit-diagonal shear applied to every joint (row convention x*M).
inline std::array<std::array<double, 3>, 3> draw_shear_matrix(Rng& rng,
                                                              double range = 0.3) {
  std::array<std::array<double, 3>, 3> m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          i == j ? 1.0 : rng.uniform(-range, range);
  return m;
}

inline SkeletonSequence apply_shear(const SkeletonSequence& x,
                                    const std::array<std::array<double, 3>, 3>& m) {
  SkeletonSequence y(x.frames, x.joints, x.coords);
  for (int t = 0; t < x.frames; ++t)
    for (int v = 0; v < x.joints; ++v)
      for (int j = 0; j < 3; ++j) {
        double a = 0.0;
        for (int i = 0; i < 3; ++i)
          a += static_cast<double>(x.at(t, v, i)) * m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        y.at(t, v, j) = static_cast<float>(a);
      }
  return y;
}

inline SkeletonSequence shear(const SkeletonSequence& x, std::uint64_t seed,
                              double range = 0.3) {
  Rng rng(seed);
  return apply_shear(x, draw_shear_matrix(rng, range));
}

// Resamples the window [start, start+len) back to x's frame count by
// linear interpolation along time.
inline SkeletonSequence crop_window(const SkeletonSequence& x, int start, int len) {
  require(len >= 1 && start >= 0 && start + len <= x.frames, "bad crop window");
  SkeletonSequence y(x.frames, x.joints, x.coords);
  const int t_out = x.frames;
  for (int t = 0; t < t_out; ++t) {
    double pos = start;
    if (t_out > 1) pos = start + static_cast<double>(t) * (len - 1) / (t_out - 1);
    int lo = static_cast<int>(std::floor(pos));
    if (lo > start + len - 1) lo = start + len - 1;
    const int hi = std::min(lo + 1, start + len - 1);
    const double frac = pos - lo;
    for (int v = 0; v < x.joints; ++v)
      for (int c = 0; c < 3; ++c) {
        const double a = x.at(lo, v, c);
        const double b = x.at(hi, v, c);
        y.at(t, v, c) = static_cast<float>(a + frac * (b - a));
      }
  }
  return y;
}

inline SkeletonSequence crop(const SkeletonSequence& x, std::uint64_t seed,
                             double min_ratio = 0.6) {
  require(x.frames >= 8, "clip too short");
  Rng rng(seed);
  const double rho = rng.uniform(min_ratio, 1.0);
  const int len = static_cast<int>(std::ceil(rho * x.frames));
  const int start = static_cast<int>(rng.uniform_index(
      static_cast<std::uint64_t>(x.frames - len + 1)));
  return crop_window(x, start, len);
}

}  // namespace duoclr
