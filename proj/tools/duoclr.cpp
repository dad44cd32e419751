// Command-line front end: synth | pretrain | evalseg | metrics.
//
// Exit codes: 0 success, 2 usage error, 3 validation error, 4 runtime
// failure (I/O, internal).

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "duoclr/cli.hpp"

namespace {

// CLI11 stores into concrete objects; mirror optional flags through these.
template <typename T>
void bind_optional(CLI::App* app, const std::string& flag, T& slot,
                   std::optional<T>& out, const std::string& desc) {
  app->add_option(flag, slot, desc)->each([&slot, &out](const std::string&) {
    out = slot;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"duoclr: contrastive skeleton pretraining and segmentation"};
  app.require_subcommand(1);

  duoclr::SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "generate a synthetic dataset");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--classes", synth.classes, "number of action classes");
  s->add_option("--clips-per-class", synth.clips_per_class, "trimmed clips per class");
  s->add_option("--frames", synth.frames, "frames per trimmed clip");
  s->add_option("--untrimmed", synth.untrimmed, "number of untrimmed videos");
  s->add_option("--actions-per-video", synth.actions_per_video,
                "actions per untrimmed video");
  s->add_option("--noise", synth.noise, "per-joint Gaussian noise sigma");
  s->add_option("--task", synth.task, "multiclass|multilabel");
  s->add_option("--seed", synth.seed, "RNG seed");
  s->add_option("--test-fraction", synth.test_fraction,
                "fraction of untrimmed videos held out as the test split");
  s->add_flag("--force", synth.force, "overwrite a non-empty output directory");

  duoclr::PretrainArgs pre;
  std::string pre_data, pre_config, pre_out, pre_log;
  CLI::App* p = app.add_subcommand("pretrain", "pretrain an encoder");
  bind_optional(p, "--data", pre_data, pre.data, "dataset directory");
  bind_optional(p, "--config", pre_config, pre.config_path, "config JSON file");
  bind_optional(p, "--out", pre_out, pre.out, "checkpoint output path");
  bind_optional(p, "--log", pre_log, pre.log_path, "training log path (JSON lines)");
  p->add_flag("--baseline", pre.baseline,
              "train the supervised recognition baseline instead");

  duoclr::EvalArgs ev;
  std::string ev_data, ev_ckpt, ev_mode, ev_task, ev_out, ev_pred, ev_config;
  double ev_fraction = 1.0, ev_lr = 0.05;
  std::uint64_t ev_seed = 1;
  int ev_epochs = 10;
  CLI::App* e = app.add_subcommand("evalseg", "evaluate segmentation transfer");
  bind_optional(e, "--data", ev_data, ev.data, "dataset directory");
  bind_optional(e, "--ckpt", ev_ckpt, ev.ckpt, "encoder checkpoint");
  bind_optional(e, "--mode", ev_mode, ev.mode, "linear|finetune");
  bind_optional(e, "--task", ev_task, ev.task, "multiclass|multilabel");
  bind_optional(e, "--fraction", ev_fraction, ev.fraction,
                "fraction of train videos used for the head");
  bind_optional(e, "--seed", ev_seed, ev.seed, "RNG seed");
  bind_optional(e, "--epochs", ev_epochs, ev.epochs, "head training epochs");
  bind_optional(e, "--lr", ev_lr, ev.lr, "head learning rate");
  bind_optional(e, "--out", ev_out, ev.out, "report JSON path (CSV written beside)");
  bind_optional(e, "--pred", ev_pred, ev.pred_path, "prediction dump path");
  bind_optional(e, "--config", ev_config, ev.config_path, "config JSON file");

  duoclr::MetricsArgs met;
  CLI::App* m = app.add_subcommand("metrics", "recompute metrics from a dump");
  m->add_option("--pred", met.pred, "prediction dump (JSON lines)")->required();
  m->add_option("--gt", met.gt, "reference manifest JSON")->required();
  m->add_option("--task", met.task, "multiclass|multilabel");
  m->add_option("--out", met.out, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) duoclr::cmd_synth(synth, std::cout);
    if (p->parsed()) duoclr::cmd_pretrain(pre, std::cout);
    if (e->parsed()) duoclr::cmd_evalseg(ev, std::cout);
    if (m->parsed()) duoclr::cmd_metrics(met, std::cout);
  } catch (const duoclr::UsageError& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return 2;
  } catch (const duoclr::ValidationError& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 4;
  }
  return 0;
}
