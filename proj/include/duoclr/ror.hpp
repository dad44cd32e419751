#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "duoclr/autodiff.hpp"
#include "duoclr/cpc.hpp"
#include "duoclr/encoder.hpp"

namespace duoclr {

inline std::int64_t factorial(int n) {
  require(n >= 0 && n <= 20, "granularity out of range");
  std::int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// 0-based lexicographic rank of a permutation of {0..n-1} (Lehmer code).
inline std::int64_t lex_rank(const std::vector<int>& sigma) {
  const int n = static_cast<int>(sigma.size());
  std::int64_t rank = 0;
  for (int k = 0; k < n; ++k) {
    int smaller = 0;
    for (int j = k + 1; j < n; ++j)
      if (sigma[static_cast<std::size_t>(j)] < sigma[static_cast<std::size_t>(k)]) ++smaller;
    rank += smaller * factorial(n - 1 - k);
  }
  return rank;
}

inline std::vector<int> lex_unrank(std::int64_t rank, int n) {
  require(rank >= 0 && rank < factorial(n), "index out of range");
  std::vector<int> pool;
  for (int i = 0; i < n; ++i) pool.push_back(i);
  std::vector<int> sigma;
  for (int k = n - 1; k >= 0; --k) {
    const std::int64_t f = factorial(k);
    const auto pick = static_cast<std::size_t>(rank / f);
    rank %= f;
    sigma.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return sigma;
}

struct MappingLabel {
  std::int64_t index = 0;
  int granularity = 0;
};

// sigma(k) = position of perm_i[k] within perm_j; the label is sigma's
// lexicographic rank. perm_i == perm_j maps to index 0.
inline MappingLabel mapping_index(const std::vector<std::int64_t>& perm_i,
                                  const std::vector<std::int64_t>& perm_j) {
  require(perm_i.size() == perm_j.size(), "mismatched permutations");
  const int g = static_cast<int>(perm_i.size());
  std::vector<int> sigma;
  for (int k = 0; k < g; ++k) {
    int pos = -1;
    for (int m = 0; m < g; ++m)
      if (perm_j[static_cast<std::size_t>(m)] == perm_i[static_cast<std::size_t>(k)]) { pos = m; break; }
    require(pos >= 0, "mismatched permutations");
    sigma.push_back(pos);
  }
  // A repeated position would mean duplicate identities on either side.
  std::vector<int> seen(static_cast<std::size_t>(g), 0);
  for (int p : sigma) {
    require(!seen[static_cast<std::size_t>(p)], "mismatched permutations");
    seen[static_cast<std::size_t>(p)] = 1;
  }
  return {lex_rank(sigma), g};
}

// Inverse of mapping_index for a fixed perm_j.
inline std::vector<std::int64_t> mapping_from_index(const MappingLabel& label,
                                                    const std::vector<std::int64_t>& perm_j) {
  require(label.granularity == static_cast<int>(perm_j.size()),
          "mismatched permutations");
  const auto sigma = lex_unrank(label.index, label.granularity);
  std::vector<std::int64_t> perm_i;
  for (int p : sigma) perm_i.push_back(perm_j[static_cast<std::size_t>(p)]);
  return perm_i;
}

// Fully connected classifier over positional encodings: R^(C3*G^2) -> R^(G!).
struct RORHead {
  int granularity = 0;
  ParamStore params;
};

// Zero weights give exactly uniform logits, so the loss starts at log(G!).
inline RORHead init_ror_head(int c3, int granularity) {
  require(granularity >= 1, "granularity out of range");
  RORHead head;
  head.granularity = granularity;
  const int in = c3 * granularity * granularity;
  const auto out = static_cast<int>(factorial(granularity));
  head.params.add("ror.w", Tensor({in, out}));
  head.params.add("ror.b", Tensor({out}));
  return head;
}

// Eq.-10 positional encodings: |z_i^(n) - z_j^(m)| blocks, n-major with n
// in perm_i order and m in perm_j order.
inline Var positional_encoding(Tape& tape, const Projections& proj_i,
                               const Projections& proj_j) {
  require(proj_i.locals.size() == proj_j.locals.size(), "mismatched permutations");
  std::vector<Var> blocks;
  for (Var zi : proj_i.locals)
    for (Var zj : proj_j.locals) blocks.push_back(tape.abs_diff(zi, zj));
  return tape.concat(blocks);
}

// Softmax cross-entropy of the head's logits against the mapping label.
inline Var ror_loss(Tape& tape, const RORHead& head, const std::vector<Var>& head_vars,
                    Var pe, const MappingLabel& label) {
  require(label.granularity == head.granularity, "mismatched permutations");
  Var logits = tape.linear(pe, head_vars[static_cast<std::size_t>(head.params.index_of("ror.w"))],
                           head_vars[static_cast<std::size_t>(head.params.index_of("ror.b"))]);
  return tape.softmax_ce(logits, static_cast<int>(label.index));
}

}  // namespace duoclr
