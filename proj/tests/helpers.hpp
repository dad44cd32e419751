#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "duoclr/autodiff.hpp"
#include "duoclr/rng.hpp"
#include "duoclr/tensor.hpp"

namespace testutil {

// Fresh scratch directory under the system temp root, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("duoclr_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

// Central finite differences against the tape's reverse pass. The builder
// receives the mutable input tensors (lifted with needs_grad) and must
// return a scalar loss; it is re-invoked from scratch per evaluation.
using LossBuilder =
    std::function<duoclr::Var(duoclr::Tape&, const std::vector<duoclr::Var>&)>;

struct GradcheckReport {
  double max_err = 0.0;      // worst |analytic - fd| / max(|a|, |fd|, floor)
  std::size_t checked = 0;
};

inline GradcheckReport gradcheck(std::vector<duoclr::Tensor> inputs,
                                 const LossBuilder& build, double step = 1e-6,
                                 double floor = 1e-3) {
  using namespace duoclr;
  const auto eval = [&](const std::vector<Tensor>& vals) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : vals) vars.push_back(tape.input(t, false));
    return build(tape, vars)->val.v[0];
  };

  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.input(t, true));
  Var loss = build(tape, vars);
  tape.backward(loss);

  GradcheckReport rep;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = 0; j < inputs[i].numel(); ++j) {
      auto plus = inputs;
      auto minus = inputs;
      plus[i].v[j] += step;
      minus[i].v[j] -= step;
      const double fd = (eval(plus) - eval(minus)) / (2.0 * step);
      const double an = vars[i]->grad.v[j];
      const double err =
          std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), floor});
      if (err > rep.max_err) rep.max_err = err;
      ++rep.checked;
    }
  return rep;
}

inline duoclr::Tensor random_tensor(const std::vector<int>& shape, duoclr::Rng& rng,
                                    double lo = -1.0, double hi = 1.0) {
  duoclr::Tensor t(shape);
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

}  // namespace testutil
