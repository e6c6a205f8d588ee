#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "analysis/analysis.hpp"
#include "io/config.hpp"
#include "io/files.hpp"
#include "stbp/stbp.hpp"
#include "training/training.hpp"

namespace lnm {

// Command-line overrides, applied on top of the parsed config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> timesteps;
  std::optional<int> degree;  // spiking degree; target degree for reduce
  std::optional<std::string> output_dir;
  std::optional<std::string> checkpoint;
};

enum class Command { train, eval, grad_check, energy, dump_models, reduce };
Command parse_command(const std::string &name);
const char *to_string(Command c);

RunConfig effective_config(RunConfig cfg, const Overrides &o, Command c);

// Table renderers; each output CSV has a header row.
CsvWriter metrics_table(const Metrics &m, const Network &net);
CsvWriter energy_table(const EnergyReport &r);
CsvWriter energy_summary_table(const EnergyReport &r);
CsvWriter models_table(const std::vector<ModelDumpRow> &rows);
CsvWriter grad_check_table(const CheckReport &r);

// The network a non-training command operates on: freshly built from the
// config seed, then overwritten by cfg.checkpoint when one is set.
Network load_network(const RunConfig &cfg);

struct TrainOutcome {
  Metrics metrics;
  Network best;
};
// Writes metrics.csv, checkpoint.lnm (best validation epoch) and the
// effective config.json into cfg.output_dir.
TrainOutcome run_train(const RunConfig &cfg);

// Top-1 on the validation split (the training split when there is none);
// writes eval.csv.
EvalResult run_eval(const RunConfig &cfg);

// Writes grad_check.csv.
CheckReport run_grad_check(const RunConfig &cfg);

// Firing rates from up to energy.samples validation samples; writes
// energy.csv and energy_summary.csv.
EnergyReport run_energy(const RunConfig &cfg);

// Writes models.csv.
std::vector<ModelDumpRow> run_dump_models(const RunConfig &cfg);

struct ReductionRow {
  std::size_t layer = 0;
  int from_degree = 0;
  int to_degree = 0;
  double max_error = 0.0;
  double rms_error = 0.0;
  std::vector<double> theta;
};
// Reduces every spiking layer above the target degree; writes reduction.csv
// and reduced.lnm, plus reduction_effect.csv with the largest logit change
// the substitution causes on held-out samples.
std::vector<ReductionRow> run_reduce(const RunConfig &cfg);

} // namespace lnm
