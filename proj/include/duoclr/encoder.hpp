#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "duoclr/autodiff.hpp"
#include "duoclr/rng.hpp"
#include "duoclr/skeleton.hpp"
#include "duoclr/tensor.hpp"

namespace duoclr {

struct EncoderConfig {
  int c1 = 64;          // visual channel width
  int c2 = 64;          // temporal channel width
  int c3 = 128;         // projection dimension
  int gcn_blocks = 3;   // L_g
  int tcn_layers = 6;   // L_t
  int tcn_kernel = 3;
  SkeletonGraph graph = default_skeleton_graph();

  void validate() const {
    require(c1 >= 1 && c2 >= 1 && c3 >= 1, "encoder widths must be positive");
    require(gcn_blocks >= 1 && tcn_layers >= 1, "encoder depths must be positive");
    require(tcn_kernel >= 1 && tcn_kernel % 2 == 1, "tcn kernel must be odd");
    require(graph.joints >= 2, "graph/sequence mismatch");
  }

  bool operator==(const EncoderConfig& o) const {
    return c1 == o.c1 && c2 == o.c2 && c3 == o.c3 && gcn_blocks == o.gcn_blocks &&
           tcn_layers == o.tcn_layers && tcn_kernel == o.tcn_kernel &&
           graph.joints == o.graph.joints && graph.edges == o.graph.edges;
  }
};

// Kernel width of the per-joint temporal convolution inside GCN blocks.
inline constexpr int kGcnTemporalKernel = 9;

// Ordered, named parameter arrays. Registration order doubles as the
// initialization draw order and the checkpoint payload order.
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Tensor> values;

  int add(const std::string& name, Tensor t) {
    names.push_back(name);
    values.push_back(std::move(t));
    return static_cast<int>(values.size()) - 1;
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw ValidationError("unknown parameter: " + name);
  }

  Tensor& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  const Tensor& operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return values.size(); }
};

namespace detail {

inline void kaiming_fill(Tensor& t, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (double& x : t.v) x = rng.uniform(-bound, bound);
}

}  // namespace detail

// The feature extractor F = TCN o GCN plus the shared projection MLP.
struct EncoderState {
  EncoderConfig config;
  ParamStore params;
};

// Declares every parameter in a fixed order; weights get fan-in-scaled
// uniform init, biases start at zero. Temporal kernels use a width-squared
// fan: skeleton signals are smooth, so the K taps see nearly identical
// inputs and add coherently rather than in quadrature — the extra factor K
// keeps the activation scale flat through the stack (there is no
// normalization layer to absorb a per-block gain).
inline EncoderState init_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EncoderState st;
  st.config = cfg;
  Rng rng(derive_seed(seed, 0x454e43u /* "ENC" */));
  for (int b = 0; b < cfg.gcn_blocks; ++b) {
    const int in = b == 0 ? 3 : cfg.c1;
    Tensor w({in, cfg.c1});
    detail::kaiming_fill(w, in, rng);
    st.params.add("gcn" + std::to_string(b) + ".spatial.w", std::move(w));
    Tensor tw({kGcnTemporalKernel, cfg.c1, cfg.c1});
    detail::kaiming_fill(tw, kGcnTemporalKernel * kGcnTemporalKernel * cfg.c1, rng);
    st.params.add("gcn" + std::to_string(b) + ".tconv.w", std::move(tw));
    st.params.add("gcn" + std::to_string(b) + ".tconv.b", Tensor({cfg.c1}));
  }
  {
    Tensor w({cfg.c1, cfg.c2});
    detail::kaiming_fill(w, cfg.c1, rng);
    st.params.add("tcn.proj.w", std::move(w));
    st.params.add("tcn.proj.b", Tensor({cfg.c2}));
  }
  for (int l = 0; l < cfg.tcn_layers; ++l) {
    Tensor cw({cfg.tcn_kernel, cfg.c2, cfg.c2});
    detail::kaiming_fill(cw, cfg.tcn_kernel * cfg.tcn_kernel * cfg.c2, rng);
    st.params.add("tcn" + std::to_string(l) + ".conv.w", std::move(cw));
    st.params.add("tcn" + std::to_string(l) + ".conv.b", Tensor({cfg.c2}));
    Tensor pw({cfg.c2, cfg.c2});
    detail::kaiming_fill(pw, cfg.c2, rng);
    st.params.add("tcn" + std::to_string(l) + ".pw.w", std::move(pw));
    st.params.add("tcn" + std::to_string(l) + ".pw.b", Tensor({cfg.c2}));
  }
  {
    Tensor w1({cfg.c2, cfg.c2});
    detail::kaiming_fill(w1, cfg.c2, rng);
    st.params.add("mlp.w1", std::move(w1));
    st.params.add("mlp.b1", Tensor({cfg.c2}));
    Tensor w2({cfg.c2, cfg.c3});
    detail::kaiming_fill(w2, cfg.c2, rng);
    st.params.add("mlp.w2", std::move(w2));
    st.params.add("mlp.b2", Tensor({cfg.c3}));
  }
  return st;
}

// Expected parameter shapes for a config; used to audit loaded checkpoints.
inline void audit_encoder_shapes(const EncoderState& st) {
  const EncoderState fresh = init_encoder(st.config, 0);
  require(st.params.size() == fresh.params.size(), "parameter set mismatch");
  for (std::size_t i = 0; i < st.params.size(); ++i) {
    require(st.params.names[i] == fresh.params.names[i],
            "parameter name mismatch: " + st.params.names[i]);
    require(st.params.values[i].shape == fresh.params.values[i].shape,
            "parameter shape mismatch: " + st.params.names[i]);
  }
}

// Tape handles for every parameter of a store, in store order.
inline std::vector<Var> lift_params(Tape& tape, const ParamStore& store,
                                    bool needs_grad) {
  std::vector<Var> vars;
  vars.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i)
    vars.push_back(tape.input(store.values[i], needs_grad));
  return vars;
}

inline Tensor sequence_tensor(const SkeletonSequence& x) {
  Tensor t({x.frames, x.joints, x.coords});
  for (std::size_t i = 0; i < t.numel(); ++i) t.v[i] = static_cast<double>(x.data[i]);
  return t;
}

// GCN blocks -> joint mean: (T,V,3) -> (T,C1), temporal length preserved.
inline Var gcn_forward(Tape& tape, const EncoderState& st,
                       const std::vector<Var>& pv, Var x) {
  const auto& cfg = st.config;
  require(x->val.dim(1) == cfg.graph.joints, "graph/sequence mismatch");
  Tensor adj({cfg.graph.joints, cfg.graph.joints});
  adj.v = cfg.graph.norm_adj;
  for (int b = 0; b < cfg.gcn_blocks; ++b) {
    const std::string p = "gcn" + std::to_string(b);
    Var mixed = tape.graph_mix(x, adj);
    Tensor zero_bias({cfg.c1});
    Var s = tape.relu(tape.linear(mixed, pv[static_cast<std::size_t>(st.params.index_of(p + ".spatial.w"))],
                                  tape.input(zero_bias, false)));
    Var y = tape.temporal_conv(s, pv[static_cast<std::size_t>(st.params.index_of(p + ".tconv.w"))],
                               pv[static_cast<std::size_t>(st.params.index_of(p + ".tconv.b"))], 1);
    x = x->val.dim(2) == cfg.c1 ? tape.add(x, y) : y;
  }
  return tape.mean_joints(x);
}

// Dilated residual stack: (T,C1) -> (T,C2), dilation 2^l at layer l.
inline Var tcn_forward(Tape& tape, const EncoderState& st,
                       const std::vector<Var>& pv, Var h) {
  const auto& cfg = st.config;
  Var x = tape.linear(h, pv[static_cast<std::size_t>(st.params.index_of("tcn.proj.w"))],
                      pv[static_cast<std::size_t>(st.params.index_of("tcn.proj.b"))]);
  for (int l = 0; l < cfg.tcn_layers; ++l) {
    const std::string p = "tcn" + std::to_string(l);
    Var d = tape.relu(tape.temporal_conv(
        x, pv[static_cast<std::size_t>(st.params.index_of(p + ".conv.w"))],
        pv[static_cast<std::size_t>(st.params.index_of(p + ".conv.b"))], 1 << l));
    Var pw = tape.linear(d, pv[static_cast<std::size_t>(st.params.index_of(p + ".pw.w"))],
                         pv[static_cast<std::size_t>(st.params.index_of(p + ".pw.b"))]);
    x = tape.add(x, pw);
  }
  return x;
}

inline Var extract_features(Tape& tape, const EncoderState& st,
                            const std::vector<Var>& pv, Var x) {
  return tcn_forward(tape, st, pv, gcn_forward(tape, st, pv, x));
}

// Shared two-layer MLP applied to a pooled (C2) vector.
inline Var project_vector(Tape& tape, const EncoderState& st,
                          const std::vector<Var>& pv, Var pooled) {
  Var a = tape.relu(tape.linear(pooled, pv[static_cast<std::size_t>(st.params.index_of("mlp.w1"))],
                                pv[static_cast<std::size_t>(st.params.index_of("mlp.b1"))]));
  return tape.linear(a, pv[static_cast<std::size_t>(st.params.index_of("mlp.w2"))],
                     pv[static_cast<std::size_t>(st.params.index_of("mlp.b2"))]);
}

struct Projections {
  std::vector<Var> locals;  // one per slot, in boundary order
  Var global = nullptr;
};

// Locals pool over each slot's frames, the global pools over all frames;
// one shared MLP serves both paths.
inline Projections project(Tape& tape, const EncoderState& st,
                           const std::vector<Var>& pv, Var h,
                           const std::vector<std::pair<int, int>>& boundaries) {
  Projections out;
  for (const auto& [s, e] : boundaries)
    out.locals.push_back(project_vector(tape, st, pv, tape.mean_rows(h, s, e)));
  out.global = project_vector(tape, st, pv, tape.mean_rows(h, 0, h->val.dim(0)));
  return out;
}

// Value-only encoder pass (no gradient bookkeeping).
inline Tensor extract_features_plain(const EncoderState& st, const SkeletonSequence& x) {
  Tape tape;
  Var in = tape.input(sequence_tensor(x), false);
  auto pv = lift_params(tape, st.params, false);
  return extract_features(tape, st, pv, in)->val;
}

// cosine(a,b)/tau on plain vectors.
inline double similarity(const std::vector<double>& a, const std::vector<double>& b,
                         double tau) {
  require(a.size() == b.size(), "similarity: width mismatch");
  require(tau > 0.0, "temperature must be positive");
  double na = 0.0, nb = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
    dot += a[i] * b[i];
  }
  require(na > 0.0 && nb > 0.0, "zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb) * tau);
}

// p_target <- m * p_target + (1-m) * p_source, every parameter.
inline void momentum_update(EncoderState& target, const EncoderState& source,
                            double m) {
  require(target.config == source.config, "config mismatch");
  require(m >= 0.0 && m < 1.0, "momentum must lie in [0,1)");
  require(target.params.size() == source.params.size(), "parameter set mismatch");
  for (std::size_t i = 0; i < target.params.size(); ++i) {
    auto& t = target.params.values[i].v;
    const auto& s = source.params.values[i].v;
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = m * t[j] + (1.0 - m) * s[j];
  }
}

inline nlohmann::json encoder_config_json(const EncoderConfig& cfg) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [u, v] : cfg.graph.edges) edges.push_back({u, v});
  return {{"c1", cfg.c1}, {"c2", cfg.c2}, {"c3", cfg.c3},
          {"gcn_blocks", cfg.gcn_blocks}, {"tcn_layers", cfg.tcn_layers},
          {"tcn_kernel", cfg.tcn_kernel},
          {"graph", {{"joints", cfg.graph.joints}, {"edges", edges}}}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig cfg;
  cfg.c1 = j.at("c1").get<int>();
  cfg.c2 = j.at("c2").get<int>();
  cfg.c3 = j.at("c3").get<int>();
  cfg.gcn_blocks = j.at("gcn_blocks").get<int>();
  cfg.tcn_layers = j.at("tcn_layers").get<int>();
  cfg.tcn_kernel = j.at("tcn_kernel").get<int>();
  cfg.graph = SkeletonGraph{};
  cfg.graph.joints = j.at("graph").at("joints").get<int>();
  for (const auto& e : j.at("graph").at("edges"))
    cfg.graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  cfg.graph.build();
  cfg.validate();
  return cfg;
}

// Checkpoint container: "DCK1", u32 header length, JSON header (config +
// named shapes), then all payloads as little-endian doubles in order.
inline void save_checkpoint(const EncoderState& st, const std::string& path) {
  nlohmann::json dir = nlohmann::json::array();
  for (std::size_t i = 0; i < st.params.size(); ++i)
    dir.push_back({{"name", st.params.names[i]}, {"shape", st.params.values[i].shape}});
  nlohmann::json header = {{"config", encoder_config_json(st.config)}, {"params", dir}};
  const std::string hs = header.dump();
  std::vector<unsigned char> buf;
  buf.push_back('D'); buf.push_back('C'); buf.push_back('K'); buf.push_back('1');
  put_u32le(buf, static_cast<std::uint32_t>(hs.size()));
  buf.insert(buf.end(), hs.begin(), hs.end());
  for (const auto& t : st.params.values)
    for (double x : t.v) put_f64le(buf, x);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("write failed for " + path);
}

inline EncoderState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  require(buf.size() >= 8 && buf[0] == 'D' && buf[1] == 'C' && buf[2] == 'K' &&
              buf[3] == '1',
          "not a checkpoint file");
  const std::uint32_t hlen = get_u32le(buf.data() + 4);
  require(buf.size() >= 8 + hlen, "corrupt file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.begin() + 8, buf.begin() + 8 + hlen);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("corrupt file: ") + e.what());
  }
  EncoderState st;
  st.config = encoder_config_from_json(header.at("config"));
  std::size_t off = 8 + hlen;
  for (const auto& p : header.at("params")) {
    Tensor t(p.at("shape").get<std::vector<int>>());
    require(buf.size() >= off + t.numel() * 8, "corrupt file");
    for (std::size_t i = 0; i < t.numel(); ++i) {
      t.v[i] = get_f64le(buf.data() + off);
      off += 8;
    }
    st.params.add(p.at("name").get<std::string>(), std::move(t));
  }
  require(off == buf.size(), "corrupt file");
  audit_encoder_shapes(st);
  return st;
}

// FNV-1a over the payload bytes, for freeze audits in reports.
inline std::string encoder_hash(const EncoderState& st) {
  std::vector<unsigned char> buf;
  for (const auto& t : st.params.values)
    for (double x : t.v) put_f64le(buf, x);
  return hex64(fnv1a64(buf.data(), buf.size()));
}

}  // namespace duoclr
