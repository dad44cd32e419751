#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "duoclr/augment.hpp"
#include "duoclr/cpc.hpp"
#include "duoclr/dataset.hpp"
#include "duoclr/encoder.hpp"
#include "duoclr/ror.hpp"

namespace duoclr {

struct PretrainConfig {
  int granularity = 3;
  double alpha = 0.5;                   // ROR weight
  double tau = 0.07;
  int class_bank_capacity = 684;
  int permutation_bank_capacity = 32768;
  double momentum = 0.999;
  double p_same = 0.5;                  // P(perm_j == perm_i)
  bool supervised = true;
  bool aug_shuffle = true;
  bool aug_warp = true;
  bool aug_shear = false;
  bool aug_crop = false;
  int epochs = 10;
  int batch_size = 8;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
  double cpc_weight = 1.0;              // 0 disables CPC for ROR-only ablations

  void validate() const {
    require(granularity >= 1, "granularity out of range");
    require(tau > 0.0, "temperature must be positive");
    require(alpha >= 0.0, "alpha must be nonnegative");
    require(cpc_weight >= 0.0, "cpc_weight must be nonnegative");
    require(p_same >= 0.0 && p_same <= 1.0, "p_same must lie in [0,1]");
    require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0,1)");
    require(class_bank_capacity >= 1 && permutation_bank_capacity >= 1,
            "bank capacity must be positive");
    require(epochs >= 1 && batch_size >= 1, "epochs and batch_size must be positive");
    require(learning_rate > 0.0, "learning rate must be positive");
  }
};

// SGD with Nesterov momentum: v <- mu*v + g; p <- p - lr*(g + mu*v).
struct SgdNesterov {
  double lr = 0.01;
  double mu = 0.9;
  // The network has no normalization layers, so weight growth feeds feature
  // growth feeds gradient growth; without a global-norm clip a handful of
  // bad steps is unrecoverable.
  double clip_norm = 10.0;
  std::vector<Tensor> velocity;

  explicit SgdNesterov(double lr_ = 0.01, double mu_ = 0.9) : lr(lr_), mu(mu_) {}

  void step(ParamStore& store, const std::vector<Var>& vars) {
    require(vars.size() == store.size(), "optimizer/store mismatch");
    if (velocity.empty())
      for (const auto& t : store.values) velocity.emplace_back(t.shape);
    double sq = 0.0;
    for (const Var& var : vars)
      for (double g : var->grad.v) sq += g * g;
    const double scale = (clip_norm > 0.0 && sq > clip_norm * clip_norm)
                             ? clip_norm / std::sqrt(sq)
                             : 1.0;
    for (std::size_t i = 0; i < store.size(); ++i) {
      auto& p = store.values[i].v;
      auto& v = velocity[i].v;
      const auto& g = vars[i]->grad.v;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = scale * g[j];
        v[j] = mu * v[j] + gj;
        p[j] -= lr * (gj + mu * v[j]);
      }
    }
  }
};

struct SampledClip {
  std::int64_t identity = 0;  // class label (supervised) or clip id
  const TrimmedClip* clip = nullptr;
};

// Supervised: G distinct classes, one uniform clip each, identities =
// labels. Unsupervised: G distinct clips, identities = clip ids.
inline std::vector<SampledClip> sample_clip_set(const Dataset& data, int g,
                                                bool supervised, Rng& rng) {
  require(g >= 1, "granularity out of range");
  std::vector<SampledClip> out;
  if (supervised) {
    std::vector<std::int64_t> classes;
    for (const auto& c : data.clips)
      if (c.action_label &&
          std::find(classes.begin(), classes.end(), *c.action_label) == classes.end())
        classes.push_back(*c.action_label);
    std::sort(classes.begin(), classes.end());
    require(static_cast<int>(classes.size()) >= g, "too few classes");
    for (int k = 0; k < g; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng.uniform_index(classes.size() - k));
      std::swap(classes[static_cast<std::size_t>(k)], classes[pick]);
    }
    classes.resize(static_cast<std::size_t>(g));
    for (std::int64_t cls : classes) {
      std::vector<const TrimmedClip*> pool;
      for (const auto& c : data.clips)
        if (c.action_label && *c.action_label == cls) pool.push_back(&c);
      out.push_back({cls, pool[rng.uniform_index(pool.size())]});
    }
  } else {
    require(static_cast<int>(data.clips.size()) >= g, "too few clips");
    std::vector<std::size_t> idx(data.clips.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int k = 0; k < g; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng.uniform_index(idx.size() - k));
      std::swap(idx[static_cast<std::size_t>(k)], idx[pick]);
    }
    for (int k = 0; k < g; ++k)
      out.push_back({data.clips[idx[static_cast<std::size_t>(k)]].clip_id,
                     &data.clips[idx[static_cast<std::size_t>(k)]]});
  }
  return out;
}

// The two composed views of one clip set plus their permutations.
struct ViewPair {
  MultiActionPermutation h_i, h_j;
  std::vector<std::int64_t> perm_i, perm_j;
};

namespace detail {

// Uniform permutation of the identities via their sorted base order.
inline std::vector<std::int64_t> draw_permutation(
    const std::vector<std::int64_t>& identities, Rng& rng) {
  std::vector<std::int64_t> base = identities;
  std::sort(base.begin(), base.end());
  const auto g = static_cast<int>(base.size());
  const auto rank = static_cast<std::int64_t>(rng.uniform_index(
      static_cast<std::uint64_t>(factorial(g))));
  return mapping_from_index({rank, g}, base);
}

// Uniform permutation distinct from perm_i (requires G! > 1).
inline std::vector<std::int64_t> draw_other_permutation(
    const std::vector<std::int64_t>& perm_i, Rng& rng) {
  std::vector<std::int64_t> base = perm_i;
  std::sort(base.begin(), base.end());
  const auto g = static_cast<int>(base.size());
  std::vector<int> sigma;
  for (std::int64_t id : perm_i)
    for (int m = 0; m < g; ++m)
      if (base[static_cast<std::size_t>(m)] == id) { sigma.push_back(m); break; }
  const std::int64_t rank_i = lex_rank(sigma);
  auto r = static_cast<std::int64_t>(rng.uniform_index(
      static_cast<std::uint64_t>(factorial(g) - 1)));
  if (r >= rank_i) ++r;
  return mapping_from_index({r, g}, base);
}

// Per-clip shear/crop for one view, in set order.
inline std::vector<SkeletonSequence> augment_view(const std::vector<SampledClip>& set,
                                                  const PretrainConfig& cfg, Rng& rng) {
  std::vector<SkeletonSequence> seqs;
  seqs.reserve(set.size());
  for (const auto& s : set) {
    SkeletonSequence x = s.clip->sequence;
    if (cfg.aug_shear) x = apply_shear(x, draw_shear_matrix(rng));
    if (cfg.aug_crop) {
      const double rho = rng.uniform(0.6, 1.0);
      const int len = static_cast<int>(std::ceil(rho * x.frames));
      const int start = static_cast<int>(rng.uniform_index(
          static_cast<std::uint64_t>(x.frames - len + 1)));
      x = crop_window(x, start, len);
    }
    seqs.push_back(std::move(x));
  }
  return seqs;
}

inline MultiActionPermutation compose_view(const std::vector<SampledClip>& set,
                                           const std::vector<SkeletonSequence>& seqs,
                                           const std::vector<std::int64_t>& perm,
                                           bool warp) {
  std::vector<Slot> slots;
  for (std::size_t k = 0; k < set.size(); ++k)
    slots.push_back({set[k].identity, &seqs[k]});
  return warp ? shuffle_and_warp(slots, perm) : shuffle(slots, perm);
}

}  // namespace detail

// Draws the permutation pair (p_same gate) and composes both views.
// Disabling shuffle pins both permutations to the sampled set order.
inline ViewPair build_views(const std::vector<SampledClip>& set,
                            const PretrainConfig& cfg, Rng& rng) {
  std::vector<std::int64_t> identities;
  for (const auto& s : set) identities.push_back(s.identity);
  ViewPair vp;
  if (cfg.aug_shuffle) {
    vp.perm_i = detail::draw_permutation(identities, rng);
    if (rng.bernoulli(cfg.p_same) || factorial(static_cast<int>(set.size())) == 1)
      vp.perm_j = vp.perm_i;
    else
      vp.perm_j = detail::draw_other_permutation(vp.perm_i, rng);
  } else {
    vp.perm_i = identities;
    vp.perm_j = identities;
  }
  const auto seqs_i = detail::augment_view(set, cfg, rng);
  const auto seqs_j = detail::augment_view(set, cfg, rng);
  vp.h_i = detail::compose_view(set, seqs_i, vp.perm_i, cfg.aug_warp);
  vp.h_j = detail::compose_view(set, seqs_j, vp.perm_j, cfg.aug_warp);
  return vp;
}

// One step's loss graph; owns the tape so Var handles stay valid.
struct LossGraph {
  Tape tape;
  std::vector<Var> f_vars, head_vars;
  Projections proj_i, proj_j;
  CpcResult cpc;
  Var ror = nullptr;
  Var total = nullptr;
  MappingLabel label;
};

// Builds L = cpc_weight * L_CPC + alpha * L_ROR for a fixed view pair.
// The momentum encoder's branch carries no gradients.
inline void build_losses(LossGraph& lg, const EncoderState& f,
                         const EncoderState& fbar, const RORHead& head,
                         const BankSet& banks, const ViewPair& vp,
                         const PretrainConfig& cfg) {
  lg.f_vars = lift_params(lg.tape, f.params, true);
  lg.head_vars = lift_params(lg.tape, head.params, true);
  Var x_i = lg.tape.input(sequence_tensor(vp.h_i.frames), false);
  Var h_i = extract_features(lg.tape, f, lg.f_vars, x_i);
  lg.proj_i = project(lg.tape, f, lg.f_vars, h_i, vp.h_i.boundaries);

  auto fbar_vars = lift_params(lg.tape, fbar.params, false);
  Var x_j = lg.tape.input(sequence_tensor(vp.h_j.frames), false);
  Var h_j = extract_features(lg.tape, fbar, fbar_vars, x_j);
  lg.proj_j = project(lg.tape, fbar, fbar_vars, h_j, vp.h_j.boundaries);

  lg.cpc = cpc_loss(lg.tape, lg.proj_i, lg.proj_j, banks, vp.perm_i, vp.perm_j,
                    cfg.tau, cfg.supervised);
  lg.label = mapping_index(vp.perm_i, vp.perm_j);
  Var pe = positional_encoding(lg.tape, lg.proj_i, lg.proj_j);
  lg.ror = ror_loss(lg.tape, head, lg.head_vars, pe, lg.label);
  lg.total = lg.tape.add_scaled(lg.tape.scale(lg.cpc.loss, cfg.cpc_weight),
                                lg.ror, cfg.alpha);
}

struct StepReport {
  double loss_cpc = 0.0, loss_ror = 0.0, loss_total = 0.0;
  int lambda_used = 0;
  MappingLabel label;
};

// All mutable pretraining state: both encoders, head, banks, optimizer
// velocities and the run's RNG stream.
struct PretrainRun {
  PretrainConfig cfg;
  EncoderState f, fbar;
  RORHead head;
  BankSet banks;
  SgdNesterov opt_f, opt_head;
  Rng rng{1};
};

inline PretrainRun make_pretrain_run(const PretrainConfig& cfg,
                                     const EncoderConfig& enc_cfg) {
  cfg.validate();
  PretrainRun run;
  run.cfg = cfg;
  run.f = init_encoder(enc_cfg, derive_seed(cfg.seed, 0x46u /* "F" */));
  run.fbar = run.f;
  run.head = init_ror_head(enc_cfg.c3, cfg.granularity);
  run.banks = BankSet(static_cast<std::size_t>(cfg.class_bank_capacity),
                      static_cast<std::size_t>(cfg.permutation_bank_capacity));
  run.opt_f.lr = cfg.learning_rate;
  run.opt_head.lr = cfg.learning_rate;
  run.rng = Rng(derive_seed(cfg.seed, 0x505254u /* "PRT" */));
  return run;
}

// One DuoCLR update on one clip set: losses, SGD on F and the ROR head,
// momentum update of F-bar, then bank maintenance from the momentum side.
inline StepReport pretrain_step(PretrainRun& run, const std::vector<SampledClip>& set) {
  require(static_cast<int>(set.size()) == run.cfg.granularity,
          "clip set size must equal granularity");
  const ViewPair vp = build_views(set, run.cfg, run.rng);
  LossGraph lg;
  build_losses(lg, run.f, run.fbar, run.head, run.banks, vp, run.cfg);
  lg.tape.backward(lg.total);
  run.opt_f.step(run.f.params, lg.f_vars);
  run.opt_head.step(run.head.params, lg.head_vars);
  momentum_update(run.fbar, run.f, run.cfg.momentum);
  update_banks(run.banks, lg.proj_j, vp.perm_j);
  if (!run.cfg.supervised) run.banks.class_banks.clear();  // only M persists
  StepReport rep;
  rep.loss_cpc = lg.cpc.loss->val.v[0];
  rep.loss_ror = lg.ror->val.v[0];
  rep.loss_total = lg.total->val.v[0];
  rep.lambda_used = lg.cpc.lambda_used;
  rep.label = lg.label;
  return rep;
}

struct PretrainResult {
  EncoderState encoder;
  std::vector<nlohmann::json> log;  // one JSON object per epoch
};

// Epoch loop: |clips| / (G * batch_size) batches per epoch, batch_size
// independent clip sets per batch, one pretrain_step per set.
inline PretrainResult pretrain(const Dataset& data, const PretrainConfig& cfg,
                               const EncoderConfig& enc_cfg) {
  cfg.validate();
  require(!data.clips.empty(), "too few clips");
  PretrainRun run = make_pretrain_run(cfg, enc_cfg);
  const int steps = std::max<int>(
      1, static_cast<int>(data.clips.size()) / (cfg.granularity * cfg.batch_size));
  PretrainResult res;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double sum_cpc = 0.0, sum_ror = 0.0, sum_total = 0.0;
    int count = 0;
    for (int s = 0; s < steps; ++s)
      for (int b = 0; b < cfg.batch_size; ++b) {
        const auto set =
            sample_clip_set(data, cfg.granularity, cfg.supervised, run.rng);
        const StepReport rep = pretrain_step(run, set);
        sum_cpc += rep.loss_cpc;
        sum_ror += rep.loss_ror;
        sum_total += rep.loss_total;
        ++count;
      }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back({{"epoch", epoch},
                       {"mean_cpc", sum_cpc / count},
                       {"mean_ror", sum_ror / count},
                       {"mean_total", sum_total / count},
                       {"wall_seconds", wall}});
  }
  res.encoder = std::move(run.f);
  return res;
}

// Baseline-I: plain supervised recognition on single clips, no
// augmentation; the classifier head is discarded, only F is returned.
inline PretrainResult train_baseline_recognition(const Dataset& data,
                                                 const EncoderConfig& enc_cfg,
                                                 int epochs, double lr,
                                                 std::uint64_t seed,
                                                 int batch_size = 8) {
  require(epochs >= 1 && batch_size >= 1, "epochs and batch_size must be positive");
  std::vector<const TrimmedClip*> clips;
  for (const auto& c : data.clips)
    if (c.action_label) clips.push_back(&c);
  require(!clips.empty(), "unlabeled dataset");
  EncoderState f = init_encoder(enc_cfg, derive_seed(seed, 0x46u /* "F" */));
  ParamStore cls;
  cls.add("cls.w", Tensor({enc_cfg.c2, data.num_classes}));
  cls.add("cls.b", Tensor({data.num_classes}));
  SgdNesterov opt_f{lr}, opt_cls{lr};
  Rng rng(derive_seed(seed, 0x4249u /* "BI" */));
  PretrainResult res;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(clips.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    double sum_loss = 0.0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop = std::min(order.size(), at + static_cast<std::size_t>(batch_size));
      Tape tape;
      auto f_vars = lift_params(tape, f.params, true);
      auto cls_vars = lift_params(tape, cls, true);
      Var batch_loss = nullptr;
      for (std::size_t k = at; k < stop; ++k) {
        const TrimmedClip& c = *clips[order[k]];
        Var x = tape.input(sequence_tensor(c.sequence), false);
        Var h = extract_features(tape, f, f_vars, x);
        Var pooled = tape.mean_rows(h, 0, h->val.dim(0));
        Var logits = tape.linear(pooled, cls_vars[0], cls_vars[1]);
        Var loss = tape.softmax_ce(logits, *c.action_label);
        batch_loss = batch_loss ? tape.add(batch_loss, loss) : loss;
      }
      batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(stop - at));
      tape.backward(batch_loss);
      opt_f.step(f.params, f_vars);
      opt_cls.step(cls, cls_vars);
      sum_loss += batch_loss->val.v[0] * static_cast<double>(stop - at);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back({{"epoch", epoch},
                       {"mean_loss", sum_loss / static_cast<double>(order.size())},
                       {"wall_seconds", wall}});
  }
  res.encoder = std::move(f);
  return res;
}

}  // namespace duoclr
