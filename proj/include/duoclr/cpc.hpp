#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "duoclr/autodiff.hpp"
#include "duoclr/encoder.hpp"

namespace duoclr {

// FIFO queue of detached embeddings serving as contrastive negatives.
struct MemoryBank {
  std::size_t capacity = 0;
  std::deque<std::vector<double>> queue;

  explicit MemoryBank(std::size_t cap = 0) : capacity(cap) {}

  void enqueue(std::vector<double> z) {
    queue.push_back(std::move(z));
    if (queue.size() > capacity) queue.pop_front();
  }

  std::size_t size() const { return queue.size(); }
};

// Class-keyed negative banks plus the global permutation bank.
struct BankSet {
  std::size_t class_capacity = 684;
  std::size_t permutation_capacity = 32768;
  std::map<std::int64_t, MemoryBank> class_banks;
  MemoryBank permutation_bank{32768};

  BankSet() = default;
  BankSet(std::size_t class_cap, std::size_t perm_cap)
      : class_capacity(class_cap), permutation_capacity(perm_cap),
        permutation_bank(perm_cap) {}

  MemoryBank& class_bank(std::int64_t key) {
    auto it = class_banks.find(key);
    if (it == class_banks.end())
      it = class_banks.emplace(key, MemoryBank(class_capacity)).first;
    return it->second;
  }
};

// Eq.-7-style InfoNCE with explicit negatives (detached constants).
inline Var instance_loss(Tape& tape, Var anchor, Var key,
                         std::vector<std::vector<double>> negatives, double tau) {
  return tape.info_nce(anchor, key, std::move(negatives), tau);
}

// Same loss with negatives drawn from the permutation bank's contents.
inline Var permutation_loss(Tape& tape, Var anchor, Var key,
                            const MemoryBank& bank, double tau) {
  std::vector<std::vector<double>> negs(bank.queue.begin(), bank.queue.end());
  return tape.info_nce(anchor, key, std::move(negs), tau);
}

namespace detail {

inline void require_same_identity_set(std::vector<std::int64_t> a,
                                      std::vector<std::int64_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  require(a == b, "mismatched permutations");
}

}  // namespace detail

struct CpcResult {
  Var loss = nullptr;
  int lambda_used = 0;  // 1: instance branch, 0: permutation branch
};

// lambda-gated combination: the instance branch fires when the two
// permutations differ, the permutation branch when they coincide. In
// supervised mode negatives for anchor n come from the union of class
// banks keyed m != n; in unsupervised mode class banks do not persist and
// the other slots of the momentum view stand in for them.
inline CpcResult cpc_loss(Tape& tape, const Projections& proj_i,
                          const Projections& proj_j, const BankSet& banks,
                          const std::vector<std::int64_t>& perm_i,
                          const std::vector<std::int64_t>& perm_j, double tau,
                          bool supervised) {
  detail::require_same_identity_set(perm_i, perm_j);
  require(proj_i.locals.size() == perm_i.size() &&
              proj_j.locals.size() == perm_j.size(),
          "mismatched permutations");
  CpcResult out;
  out.lambda_used = perm_i == perm_j ? 0 : 1;
  if (out.lambda_used == 0) {
    out.loss = permutation_loss(tape, proj_i.global, proj_j.global,
                                banks.permutation_bank, tau);
    return out;
  }
  Var total = nullptr;
  for (std::size_t n = 0; n < perm_i.size(); ++n) {
    const std::int64_t ident = perm_i[n];
    // z_j^(n): the momentum-side local for the same slot identity.
    std::size_t jpos = 0;
    while (perm_j[jpos] != ident) ++jpos;
    std::vector<std::vector<double>> negatives;
    if (supervised) {
      for (const auto& [key, bank] : banks.class_banks) {
        if (key == ident) continue;
        negatives.insert(negatives.end(), bank.queue.begin(), bank.queue.end());
      }
    } else {
      for (std::size_t m = 0; m < perm_j.size(); ++m)
        if (perm_j[m] != ident) negatives.push_back(proj_j.locals[m]->val.v);
    }
    Var term = instance_loss(tape, proj_i.locals[n], proj_j.locals[static_cast<std::size_t>(jpos)],
                             std::move(negatives), tau);
    total = total ? tape.add(total, term) : term;
  }
  out.loss = total;
  return out;
}

// Enqueues the momentum-side locals into their class banks and the global
// into the permutation bank. Values are copied — nothing downstream can
// write back into a bank.
inline void update_banks(BankSet& banks, const Projections& proj_j,
                         const std::vector<std::int64_t>& perm_j) {
  require(proj_j.locals.size() == perm_j.size(), "mismatched permutations");
  for (std::size_t m = 0; m < perm_j.size(); ++m)
    banks.class_bank(perm_j[m]).enqueue(proj_j.locals[m]->val.v);
  banks.permutation_bank.enqueue(proj_j.global->val.v);
}

}  // namespace duoclr
