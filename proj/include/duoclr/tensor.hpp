#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Core>

#include "duoclr/common.hpp"

namespace duoclr {

// Dense row-major array of doubles, rank 1..3. All model math runs in
// double so gradient checks against central differences are meaningful.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::initializer_list<int> s) : shape(s) { v.assign(numel(), 0.0); }
  explicit Tensor(const std::vector<int>& s) : shape(s) { v.assign(numel(), 0.0); }

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }

  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  double& at(int i) { return v[static_cast<std::size_t>(i)]; }
  double at(int i) const { return v[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * dim(1) + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * dim(1) + j]; }
  double& at(int i, int j, int k) {
    return v[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  double at(int i, int j, int k) const {
    return v[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
  }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

namespace detail {
using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}  // namespace detail

// C(m x n) += A(m x k) * B(k x n)
inline void acc_ab(const double* A, const double* B, double* C, int m, int k, int n) {
  detail::MatMap(C, m, n).noalias() +=
      detail::ConstMatMap(A, m, k) * detail::ConstMatMap(B, k, n);
}

// C(m x n) += A(m x k) * B(n x k)^T
inline void acc_abt(const double* A, const double* B, double* C, int m, int k, int n) {
  detail::MatMap(C, m, n).noalias() +=
      detail::ConstMatMap(A, m, k) * detail::ConstMatMap(B, n, k).transpose();
}

// C(k x n) += A(m x k)^T * B(m x n)
inline void acc_atb(const double* A, const double* B, double* C, int m, int k, int n) {
  detail::MatMap(C, k, n).noalias() +=
      detail::ConstMatMap(A, m, k).transpose() * detail::ConstMatMap(B, m, n);
}

}  // namespace duoclr
