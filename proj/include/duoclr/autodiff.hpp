#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "duoclr/tensor.hpp"

namespace duoclr {

// Reverse-mode autodiff over a linear tape. Nodes flagged needs_grad=false
// (momentum-encoder activations, constants) get value-only treatment: no
// gradient buffer, no backward closure — gradients stop at them by
// construction rather than by convention.
class Tape {
 public:
  struct Node {
    Tensor val;
    Tensor grad;  // allocated only when needs_grad
    bool needs_grad = false;
    std::function<void()> back;
  };
  using Var = Node*;

  Var input(Tensor t, bool needs_grad) {
    Var n = alloc(std::move(t), needs_grad);
    return n;
  }

  // y = x + b per row, x viewed as (rows x cin) whatever its rank.
  Var linear(Var x, Var w, Var b) {
    const int cin = w->val.dim(0);
    const int cout = w->val.dim(1);
    require(last_dim(x->val) == cin, "linear: width mismatch");
    require(b->val.numel() == static_cast<std::size_t>(cout), "linear: bias mismatch");
    const int rows = static_cast<int>(x->val.numel()) / cin;
    std::vector<int> oshape = x->val.shape;
    oshape.back() = cout;
    Tensor out(oshape);
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < cout; ++j) out.v[static_cast<std::size_t>(r) * cout + j] = b->val.v[static_cast<std::size_t>(j)];
    acc_ab(x->val.data(), w->val.data(), out.data(), rows, cin, cout);
    Var o = alloc(std::move(out), x->needs_grad || w->needs_grad || b->needs_grad);
    if (o->needs_grad)
      o->back = [x, w, b, o, rows, cin, cout] {
        if (x->needs_grad)
          acc_abt(o->grad.data(), w->val.data(), x->grad.data(), rows, cout, cin);
        if (w->needs_grad)
          acc_atb(x->val.data(), o->grad.data(), w->grad.data(), rows, cin, cout);
        if (b->needs_grad)
          for (int r = 0; r < rows; ++r)
            for (int j = 0; j < cout; ++j)
              b->grad.v[static_cast<std::size_t>(j)] += o->grad.v[static_cast<std::size_t>(r) * cout + j];
      };
    return o;
  }

  // Per-frame mix over the joint axis: out[t] = adj * x[t], x is (T,V,C).
  Var graph_mix(Var x, const Tensor& adj) {
    require(x->val.rank() == 3, "graph_mix: rank-3 input expected");
    const int t_len = x->val.dim(0), v_len = x->val.dim(1), c_len = x->val.dim(2);
    require(adj.rank() == 2 && adj.dim(0) == v_len && adj.dim(1) == v_len,
            "graph/sequence mismatch");
    Tensor out(x->val.shape);
    for (int t = 0; t < t_len; ++t)
      acc_ab(adj.data(), x->val.data() + frame_off(t, v_len, c_len),
             out.data() + frame_off(t, v_len, c_len), v_len, v_len, c_len);
    Var o = alloc(std::move(out), x->needs_grad);
    if (o->needs_grad) {
      Tensor adj_t({adj.dim(0), adj.dim(1)});
      for (int i = 0; i < v_len; ++i)
        for (int j = 0; j < v_len; ++j) adj_t.at(i, j) = adj.at(j, i);
      o->back = [x, o, adj_t = std::move(adj_t), t_len, v_len, c_len] {
        for (int t = 0; t < t_len; ++t)
          acc_ab(adj_t.data(), o->grad.data() + frame_off(t, v_len, c_len),
                 x->grad.data() + frame_off(t, v_len, c_len), v_len, v_len, c_len);
      };
    }
    return o;
  }

  // Temporal convolution with symmetric same-padding; x is (T,V,Cin) or
  // (T,Cin) (treated as V=1); w is (K,Cin,Cout), K odd; weights shared
  // across joints.
  Var temporal_conv(Var x, Var w, Var b, int dilation) {
    require(w->val.rank() == 3, "temporal_conv: kernel rank");
    const bool joint = x->val.rank() == 3;
    const int t_len = x->val.dim(0);
    const int v_len = joint ? x->val.dim(1) : 1;
    const int k_len = w->val.dim(0), cin = w->val.dim(1), cout = w->val.dim(2);
    require(k_len % 2 == 1, "temporal_conv: kernel must be odd");
    require(last_dim(x->val) == cin, "temporal_conv: width mismatch");
    require(b->val.numel() == static_cast<std::size_t>(cout), "temporal_conv: bias mismatch");
    std::vector<int> oshape = x->val.shape;
    oshape.back() = cout;
    Tensor out(oshape);
    for (std::size_t i = 0; i < out.numel(); ++i)
      out.v[i] = b->val.v[i % cout];
    const int half = k_len / 2;
    for (int t = 0; t < t_len; ++t)
      for (int k = 0; k < k_len; ++k) {
        const int src = t + (k - half) * dilation;
        if (src < 0 || src >= t_len) continue;
        acc_ab(x->val.data() + frame_off(src, v_len, cin),
               w->val.data() + static_cast<std::size_t>(k) * cin * cout,
               out.data() + frame_off(t, v_len, cout), v_len, cin, cout);
      }
    Var o = alloc(std::move(out), x->needs_grad || w->needs_grad || b->needs_grad);
    if (o->needs_grad)
      o->back = [x, w, b, o, t_len, v_len, k_len, cin, cout, half, dilation] {
        for (int t = 0; t < t_len; ++t)
          for (int k = 0; k < k_len; ++k) {
            const int src = t + (k - half) * dilation;
            if (src < 0 || src >= t_len) continue;
            if (x->needs_grad)
              acc_abt(o->grad.data() + frame_off(t, v_len, cout),
                      w->val.data() + static_cast<std::size_t>(k) * cin * cout,
                      x->grad.data() + frame_off(src, v_len, cin), v_len, cout, cin);
            if (w->needs_grad)
              acc_atb(x->val.data() + frame_off(src, v_len, cin),
                      o->grad.data() + frame_off(t, v_len, cout),
                      w->grad.data() + static_cast<std::size_t>(k) * cin * cout,
                      v_len, cin, cout);
          }
        if (b->needs_grad)
          for (std::size_t i = 0; i < o->grad.numel(); ++i)
            b->grad.v[i % cout] += o->grad.v[i];
      };
    return o;
  }

  Var relu(Var x) {
    Tensor out(x->val.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
      out.v[i] = x->val.v[i] > 0.0 ? x->val.v[i] : 0.0;
    Var o = alloc(std::move(out), x->needs_grad);
    if (o->needs_grad)
      o->back = [x, o] {
        for (std::size_t i = 0; i < o->grad.numel(); ++i)
          if (x->val.v[i] > 0.0) x->grad.v[i] += o->grad.v[i];
      };
    return o;
  }

  Var add(Var a, Var b) {
    require(a->val.same_shape(b->val), "add: shape mismatch");
    Tensor out(a->val.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] = a->val.v[i] + b->val.v[i];
    Var o = alloc(std::move(out), a->needs_grad || b->needs_grad);
    if (o->needs_grad)
      o->back = [a, b, o] {
        if (a->needs_grad)
          for (std::size_t i = 0; i < o->grad.numel(); ++i) a->grad.v[i] += o->grad.v[i];
        if (b->needs_grad)
          for (std::size_t i = 0; i < o->grad.numel(); ++i) b->grad.v[i] += o->grad.v[i];
      };
    return o;
  }

  // out = a + alpha * b, elementwise over identical shapes.
  Var add_scaled(Var a, Var b, double alpha) {
    require(a->val.same_shape(b->val), "add_scaled: shape mismatch");
    Tensor out(a->val.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
      out.v[i] = a->val.v[i] + alpha * b->val.v[i];
    Var o = alloc(std::move(out), a->needs_grad || b->needs_grad);
    if (o->needs_grad)
      o->back = [a, b, o, alpha] {
        if (a->needs_grad)
          for (std::size_t i = 0; i < o->grad.numel(); ++i) a->grad.v[i] += o->grad.v[i];
        if (b->needs_grad)
          for (std::size_t i = 0; i < o->grad.numel(); ++i)
            b->grad.v[i] += alpha * o->grad.v[i];
      };
    return o;
  }

  Var scale(Var a, double s) {
    Tensor out(a->val.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] = s * a->val.v[i];
    Var o = alloc(std::move(out), a->needs_grad);
    if (o->needs_grad)
      o->back = [a, o, s] {
        for (std::size_t i = 0; i < o->grad.numel(); ++i) a->grad.v[i] += s * o->grad.v[i];
      };
    return o;
  }

  // (T,V,C) -> (T,C), mean over the joint axis.
  Var mean_joints(Var x) {
    require(x->val.rank() == 3, "mean_joints: rank-3 input expected");
    const int t_len = x->val.dim(0), v_len = x->val.dim(1), c_len = x->val.dim(2);
    Tensor out({t_len, c_len});
    for (int t = 0; t < t_len; ++t)
      for (int v = 0; v < v_len; ++v)
        for (int c = 0; c < c_len; ++c) out.at(t, c) += x->val.at(t, v, c) / v_len;
    Var o = alloc(std::move(out), x->needs_grad);
    if (o->needs_grad)
      o->back = [x, o, t_len, v_len, c_len] {
        for (int t = 0; t < t_len; ++t)
          for (int v = 0; v < v_len; ++v)
            for (int c = 0; c < c_len; ++c)
              x->grad.at(t, v, c) += o->grad.at(t, c) / v_len;
      };
    return o;
  }

  // Mean of rows [start, end) of a (T,C) input -> (C).
  Var mean_rows(Var x, int start, int end) {
    require(x->val.rank() == 2, "mean_rows: rank-2 input expected");
    require(start >= 0 && start < end && end <= x->val.dim(0), "empty slot");
    const int c_len = x->val.dim(1);
    const double inv = 1.0 / (end - start);
    Tensor out({c_len});
    for (int t = start; t < end; ++t)
      for (int c = 0; c < c_len; ++c) out.at(c) += x->val.at(t, c) * inv;
    Var o = alloc(std::move(out), x->needs_grad);
    if (o->needs_grad)
      o->back = [x, o, start, end, c_len, inv] {
        for (int t = start; t < end; ++t)
          for (int c = 0; c < c_len; ++c) x->grad.at(t, c) += o->grad.at(c) * inv;
      };
    return o;
  }

  // Elementwise |a - b| with the zero subgradient at kinks.
  Var abs_diff(Var a, Var b) {
    require(a->val.same_shape(b->val), "abs_diff: shape mismatch");
    Tensor out(a->val.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
      out.v[i] = std::abs(a->val.v[i] - b->val.v[i]);
    Var o = alloc(std::move(out), a->needs_grad || b->needs_grad);
    if (o->needs_grad)
      o->back = [a, b, o] {
        for (std::size_t i = 0; i < o->grad.numel(); ++i) {
          const double d = a->val.v[i] - b->val.v[i];
          const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
          if (a->needs_grad) a->grad.v[i] += s * o->grad.v[i];
          if (b->needs_grad) b->grad.v[i] -= s * o->grad.v[i];
        }
      };
    return o;
  }

  // Concatenates rank-1 blocks into one rank-1 vector.
  Var concat(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat: empty");
    int total = 0;
    bool ng = false;
    for (Var p : parts) {
      total += static_cast<int>(p->val.numel());
      ng = ng || p->needs_grad;
    }
    Tensor out({total});
    int at = 0;
    for (Var p : parts) {
      std::copy(p->val.v.begin(), p->val.v.end(), out.v.begin() + at);
      at += static_cast<int>(p->val.numel());
    }
    Var o = alloc(std::move(out), ng);
    if (o->needs_grad)
      o->back = [parts, o] {
        int at = 0;
        for (Var p : parts) {
          const int n = static_cast<int>(p->val.numel());
          if (p->needs_grad)
            for (int i = 0; i < n; ++i) p->grad.v[static_cast<std::size_t>(i)] += o->grad.v[static_cast<std::size_t>(at + i)];
          at += n;
        }
      };
    return o;
  }

  // InfoNCE over cosine/tau logits: -log( e(a,key) / (e(a,key) + sum_k
  // e(a,neg_k)) ). Negatives are detached constants; gradients reach the
  // anchor and (when it carries gradients) the key.
  Var info_nce(Var anchor, Var key, std::vector<std::vector<double>> negatives,
               double tau) {
    const int c_len = static_cast<int>(anchor->val.numel());
    require(static_cast<int>(key->val.numel()) == c_len, "info_nce: width mismatch");
    for (const auto& n : negatives)
      require(static_cast<int>(n.size()) == c_len, "info_nce: width mismatch");
    const std::size_t kn = negatives.size();
    std::vector<double> logits(kn + 1);
    logits[0] = cosine_tau(anchor->val.v.data(), key->val.v.data(), c_len, tau);
    for (std::size_t k = 0; k < kn; ++k)
      logits[k + 1] = cosine_tau(anchor->val.v.data(), negatives[k].data(), c_len, tau);
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - mx);
    Tensor out({1});
    out.v[0] = mx + std::log(denom) - logits[0];
    Var o = alloc(std::move(out), anchor->needs_grad || key->needs_grad);
    if (o->needs_grad)
      o->back = [anchor, key, negatives = std::move(negatives),
                 logits = std::move(logits), mx, denom, o, c_len, tau] {
        const double g = o->grad.v[0];
        // dL/dlogit_k = softmax_k - [k == 0]
        for (std::size_t k = 0; k < logits.size(); ++k) {
          const double w = std::exp(logits[k] - mx) / denom - (k == 0 ? 1.0 : 0.0);
          if (w == 0.0) continue;
          const double* other = k == 0 ? key->val.v.data() : negatives[k - 1].data();
          if (anchor->needs_grad)
            add_cosine_grad(anchor->grad.v.data(), anchor->val.v.data(), other,
                            c_len, tau, g * w);
          if (k == 0 && key->needs_grad)
            add_cosine_grad(key->grad.v.data(), key->val.v.data(),
                            anchor->val.v.data(), c_len, tau, g * w);
        }
      };
    return o;
  }

  // Softmax cross-entropy of a rank-1 logit vector against one class index.
  Var softmax_ce(Var logits, int target) {
    const int k_len = static_cast<int>(logits->val.numel());
    require(target >= 0 && target < k_len, "softmax_ce: target out of range");
    Tensor out({1});
    out.v[0] = lse(logits->val.v.data(), k_len) - logits->val.v[static_cast<std::size_t>(target)];
    Var o = alloc(std::move(out), logits->needs_grad);
    if (o->needs_grad)
      o->back = [logits, o, target, k_len] {
        const double g = o->grad.v[0];
        const double m = lse(logits->val.v.data(), k_len);
        for (int k = 0; k < k_len; ++k)
          logits->grad.v[static_cast<std::size_t>(k)] +=
              g * (std::exp(logits->val.v[static_cast<std::size_t>(k)] - m) - (k == target ? 1.0 : 0.0));
      };
    return o;
  }

  // Mean softmax cross-entropy over the rows of a (T,K) logit matrix.
  Var softmax_ce_rows(Var logits, std::vector<int> targets) {
    require(logits->val.rank() == 2, "softmax_ce_rows: rank-2 input expected");
    const int t_len = logits->val.dim(0), k_len = logits->val.dim(1);
    require(static_cast<int>(targets.size()) == t_len, "softmax_ce_rows: label count");
    Tensor out({1});
    for (int t = 0; t < t_len; ++t) {
      const int y = targets[static_cast<std::size_t>(t)];
      require(y >= 0 && y < k_len, "label out of range");
      const double* row = logits->val.data() + static_cast<std::size_t>(t) * k_len;
      out.v[0] += (lse(row, k_len) - row[y]) / t_len;
    }
    Var o = alloc(std::move(out), logits->needs_grad);
    if (o->needs_grad)
      o->back = [logits, o, targets = std::move(targets), t_len, k_len] {
        const double g = o->grad.v[0] / t_len;
        for (int t = 0; t < t_len; ++t) {
          const double* row = logits->val.data() + static_cast<std::size_t>(t) * k_len;
          double* grow = logits->grad.data() + static_cast<std::size_t>(t) * k_len;
          const double m = lse(row, k_len);
          for (int k = 0; k < k_len; ++k)
            grow[k] += g * (std::exp(row[k] - m) -
                            (k == targets[static_cast<std::size_t>(t)] ? 1.0 : 0.0));
        }
      };
    return o;
  }

  // Mean binary cross-entropy with logits against a {0,1} target tensor.
  Var bce_logits_mean(Var logits, const Tensor& targets) {
    require(logits->val.same_shape(targets), "bce: shape mismatch");
    const std::size_t n = logits->val.numel();
    Tensor out({1});
    for (std::size_t i = 0; i < n; ++i) {
      const double l = logits->val.v[i];
      const double y = targets.v[i];
      out.v[0] += (std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)))) /
                  static_cast<double>(n);
    }
    Var o = alloc(std::move(out), logits->needs_grad);
    if (o->needs_grad)
      o->back = [logits, o, targets, n] {
        const double g = o->grad.v[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double l = logits->val.v[i];
          const double sig = 1.0 / (1.0 + std::exp(-l));
          logits->grad.v[i] += g * (sig - targets.v[i]);
        }
      };
    return o;
  }

  // Seeds d(loss)/d(loss)=1 and replays the tape in reverse.
  void backward(Var loss) {
    require(loss->val.numel() == 1, "backward: loss must be scalar");
    require(loss->needs_grad, "backward: loss carries no gradient");
    loss->grad.v[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if ((*it)->needs_grad && (*it)->back) (*it)->back();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;

  Var alloc(Tensor val, bool needs_grad) {
    auto n = std::make_unique<Node>();
    n->val = std::move(val);
    n->needs_grad = needs_grad;
    if (needs_grad) n->grad = Tensor(n->val.shape);
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
  }

  static int last_dim(const Tensor& t) { return t.shape.back(); }

  static std::size_t frame_off(int t, int v, int c) {
    return static_cast<std::size_t>(t) * v * c;
  }

  static double lse(const double* x, int n) {
    double mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(x[i] - mx);
    return mx + std::log(s);
  }

  static double norm(const double* x, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * x[i];
    return std::sqrt(s);
  }

  static double cosine_tau(const double* a, const double* b, int n, double tau) {
    const double na = norm(a, n), nb = norm(b, n);
    require(na > 0.0 && nb > 0.0, "zero vector");
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += a[i] * b[i];
    return dot / (na * nb * tau);
  }

  // d/da of cosine(a,b)/tau, scaled by coeff, accumulated into out.
  static void add_cosine_grad(double* out, const double* a, const double* b,
                              int n, double tau, double coeff) {
    const double na = norm(a, n), nb = norm(b, n);
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += a[i] * b[i];
    const double inv = coeff / (tau * na * nb);
    const double proj = dot / (na * na);
    for (int i = 0; i < n; ++i) out[i] += inv * (b[i] - proj * a[i]);
  }
};

using Var = Tape::Var;

}  // namespace duoclr
