// Command-line front end over the shared library.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lnm/lnm.h"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> degree;
  std::optional<int> timesteps;
  std::optional<std::string> out;
  std::optional<std::string> checkpoint;
};

void add_common(CLI::App *cmd, Options &o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->required();
  cmd->add_option("--seed", o.seed, "seed for initialisation and shuffling");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--degree", o.degree,
                  "polynomial degree of every spiking layer (reduce: target degree)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--timesteps", o.timesteps, "simulation timesteps")->check(CLI::PositiveNumber);
  cmd->add_option("--checkpoint", o.checkpoint, "checkpoint to load before running");
}

int report(lnm_status st) {
  if (st != LNM_OK)
    std::fprintf(stderr, "lnm_cli: %s\n", lnm_last_error());
  return static_cast<int>(st);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Spiking networks with learnable polynomial neuron dynamics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lnm_version());

  Options o;
  const char *names[] = {"train", "eval", "grad-check", "energy", "dump-models", "reduce"};
  const char *help[] = {
      "train and write metrics.csv, checkpoint.lnm and config.json",
      "top-1 accuracy on the validation split, written to eval.csv",
      "compare analytic and finite-difference gradients (exit 1 on mismatch)",
      "per-layer energy estimate, written to energy.csv and energy_summary.csv",
      "write f(u) of every spiking layer to models.csv",
      "reduce the polynomial degree, writing reduced.lnm and reduction.csv",
  };
  for (int i = 0; i < 6; ++i)
    add_common(app.add_subcommand(names[i], help[i]), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : LNM_ERR_CONFIG;
  }

  lnm_session *raw = nullptr;
  if (lnm_status st = lnm_session_create(o.config.c_str(), &raw))
    return report(st);
  std::unique_ptr<lnm_session, decltype(&lnm_session_destroy)> s(raw, lnm_session_destroy);

  lnm_status st = LNM_OK;
  if (o.seed)
    st = lnm_session_set_seed(s.get(), *o.seed);
  if (!st && o.timesteps)
    st = lnm_session_set_timesteps(s.get(), *o.timesteps);
  if (!st && o.degree)
    st = lnm_session_set_degree(s.get(), *o.degree);
  if (!st && o.out)
    st = lnm_session_set_output_dir(s.get(), o.out->c_str());
  if (!st && o.checkpoint)
    st = lnm_session_set_checkpoint(s.get(), o.checkpoint->c_str());
  if (st)
    return report(st);

  const std::string cmd = app.get_subcommands().front()->get_name();
  const std::string dir = lnm_session_output_dir(s.get());
  double value = 0.0;
  if (cmd == "train") {
    st = lnm_train(s.get(), &value);
    if (!st)
      std::printf("best val top-1 %.4f; outputs in %s\n", value, dir.c_str());
  } else if (cmd == "eval") {
    st = lnm_eval(s.get(), &value);
    if (!st)
      std::printf("top-1 %.4f\n", value);
  } else if (cmd == "grad-check") {
    st = lnm_grad_check(s.get(), &value);
    if (st == LNM_OK || st == LNM_CHECK_FAILED)
      std::printf("max relative error %.3e: %s\n", value, st ? "FAIL" : "ok");
  } else if (cmd == "energy") {
    st = lnm_energy(s.get(), &value);
    if (!st)
      std::printf("LNM overhead over LIF %.3f%%\n", value);
  } else if (cmd == "dump-models") {
    st = lnm_dump_models(s.get());
    if (!st)
      std::printf("wrote %s/models.csv\n", dir.c_str());
  } else {
    st = lnm_reduce(s.get(), &value);
    if (!st)
      std::printf("max reduction error %.3e; wrote %s/reduced.lnm\n", value, dir.c_str());
  }
  return report(st);
}
