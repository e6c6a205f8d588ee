#include "app/commands.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "io/checkpoint.hpp"
#include "io/dataset.hpp"

namespace lnm {

namespace {

constexpr struct {
  Command c;
  const char *name;
} kCommands[] = {
    {Command::train, "train"},
    {Command::eval, "eval"},
    {Command::grad_check, "grad-check"},
    {Command::energy, "energy"},
    {Command::dump_models, "dump-models"},
    {Command::reduce, "reduce"},
};

std::filesystem::path out_path(const RunConfig &cfg, const char *file) {
  return std::filesystem::path(cfg.output_dir) / file;
}

const Dataset &eval_split(const DataSplit &split) {
  return split.val.size() > 0 ? split.val : split.train;
}

std::vector<std::size_t> first_n(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = i;
  return idx;
}

} // namespace

Command parse_command(const std::string &name) {
  for (const auto &c : kCommands)
    if (name == c.name)
      return c.c;
  throw ConfigError("unknown command \"" + name + "\"");
}

const char *to_string(Command c) {
  for (const auto &k : kCommands)
    if (k.c == c)
      return k.name;
  return "?";
}

RunConfig effective_config(RunConfig cfg, const Overrides &o, Command c) {
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.timesteps) {
    if (*o.timesteps < 1)
      throw ConfigError("--timesteps must be >= 1");
    cfg.network.timesteps = *o.timesteps;
  }
  if (o.degree) {
    if (*o.degree < 1)
      throw ConfigError("--degree must be >= 1");
    if (c == Command::reduce)
      cfg.reduce.target_degree = *o.degree;
    else
      for (auto &l : cfg.network.layers)
        if (l.kind == LayerKind::spiking)
          l.degree = *o.degree;
  }
  if (o.output_dir)
    cfg.output_dir = *o.output_dir;
  if (o.checkpoint)
    cfg.checkpoint = *o.checkpoint;
  return cfg;
}

CsvWriter metrics_table(const Metrics &m, const Network &net) {
  std::vector<std::string> header{"epoch",     "lr_weights", "lr_lnm",
                                  "train_loss", "train_acc", "val_acc"};
  std::vector<std::pair<std::size_t, int>> spiking;  // layer, degree
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    if (net.layers[l].spec.kind == LayerKind::spiking)
      spiking.emplace_back(l, net.layers[l].neuron.params.degree());
  for (auto [l, d] : spiking)
    header.push_back("fr_layer" + std::to_string(l));
  for (auto [l, d] : spiking)
    for (int k = 0; k <= d; ++k)
      header.push_back("theta_layer" + std::to_string(l) + "_" + std::to_string(k));

  CsvWriter csv(header);
  for (const auto &e : m.epochs) {
    csv.cell(e.epoch).cell(e.lr_weights).cell(e.lr_lnm);
    csv.cell(e.train_loss).cell(e.train_acc).cell(e.val_acc);
    for (double fr : e.firing_rates)
      csv.cell(fr);
    for (const auto &theta : e.theta)
      for (double c : theta)
        csv.cell(c);
    csv.end_row();
  }
  return csv;
}

CsvWriter energy_table(const EnergyReport &r) {
  CsvWriter csv({"layer", "op_ac", "op_mac", "fr", "e_lif", "e_lnm", "kind", "op_mac_lnm"});
  for (const auto &row : r.layers) {
    csv.cell(row.layer).cell(row.op_ac).cell(row.op_mac_lif).cell(row.fr);
    csv.cell(row.e_lif).cell(row.e_lnm).cell(row.kind).cell(row.op_mac_lnm);
    csv.end_row();
  }
  return csv;
}

CsvWriter energy_summary_table(const EnergyReport &r) {
  CsvWriter csv({"total_lif_pj", "total_lnm_pj", "overhead_percent"});
  csv.cell(r.total_lif).cell(r.total_lnm).cell(r.overhead_percent()).end_row();
  return csv;
}

CsvWriter models_table(const std::vector<ModelDumpRow> &rows) {
  CsvWriter csv({"layer", "u", "f"});
  for (const auto &r : rows)
    csv.cell(r.layer).cell(r.u).cell(r.f).end_row();
  return csv;
}

CsvWriter grad_check_table(const CheckReport &r) {
  CsvWriter csv({"tensor", "checked", "excluded", "max_rel_error", "worst_index", "flagged",
                 "passed"});
  for (const auto &g : r.groups) {
    csv.cell(g.name).cell(g.checked).cell(g.excluded).cell(g.max_rel_error);
    csv.cell(g.worst_index).cell(g.flagged.size()).cell(g.passed ? 1 : 0).end_row();
  }
  return csv;
}

Network load_network(const RunConfig &cfg) {
  Rng rng(cfg.seed);
  Network net = build(cfg.network, rng);
  if (!cfg.checkpoint.empty())
    apply_checkpoint(net, load_checkpoint(cfg.checkpoint));
  return net;
}

TrainOutcome run_train(const RunConfig &cfg) {
  const DataSplit data = load_dataset(cfg.dataset, cfg.network);
  Rng rng(cfg.seed);
  Network net = build(cfg.network, rng);
  if (!cfg.checkpoint.empty())
    apply_checkpoint(net, load_checkpoint(cfg.checkpoint));
  TrainResult r = train(std::move(net), data.train, &data.val, cfg.train, rng);
  metrics_table(r.metrics, r.network).save(out_path(cfg, "metrics.csv"));
  save_checkpoint(out_path(cfg, "checkpoint.lnm"), r.network,
                  static_cast<std::uint64_t>(r.metrics.best_epoch), rng.state());
  write_file_atomic(out_path(cfg, "config.json"), to_json_text(cfg));
  return {std::move(r.metrics), std::move(r.network)};
}

EvalResult run_eval(const RunConfig &cfg) {
  const DataSplit data = load_dataset(cfg.dataset, cfg.network);
  const Network net = load_network(cfg);
  const Dataset &split = eval_split(data);
  const EvalResult r = evaluate(net, split, cfg.train.batch_size, cfg.train.label_smoothing);
  CsvWriter csv({"split", "samples", "top1", "loss"});
  csv.cell(data.val.size() > 0 ? "val" : "train").cell(split.size()).cell(r.top1).cell(r.loss);
  csv.end_row();
  csv.save(out_path(cfg, "eval.csv"));
  return r;
}

CheckReport run_grad_check(const RunConfig &cfg) {
  const DataSplit data = load_dataset(cfg.dataset, cfg.network);
  const Network net = load_network(cfg);
  const std::size_t B = std::min(cfg.grad_check.batch, data.train.size());
  if (B == 0)
    throw DataError("grad-check needs at least one training sample");
  const auto idx = first_n(B);
  const Batch batch = make_batch(data.train, idx, net.spec.timesteps);
  CheckOptions opts;
  opts.h = cfg.grad_check.h;
  opts.tol = cfg.grad_check.tol;
  opts.label_smoothing = cfg.train.label_smoothing;
  opts.max_entries_per_tensor = cfg.grad_check.max_entries;
  opts.seed = cfg.seed;
  const CheckReport r = grad_check(net, batch, opts);
  grad_check_table(r).save(out_path(cfg, "grad_check.csv"));
  return r;
}

EnergyReport run_energy(const RunConfig &cfg) {
  const DataSplit data = load_dataset(cfg.dataset, cfg.network);
  const Network net = load_network(cfg);
  const Dataset &split = eval_split(data);
  const std::size_t n = std::min(cfg.energy.samples, split.size());
  if (n == 0)
    throw DataError("energy needs at least one sample to measure firing rates");
  SpikeStats stats;
  const std::size_t chunk = std::max<std::size_t>(1, cfg.train.batch_size);
  for (std::size_t start = 0; start < n; start += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(n, start + chunk); ++i)
      idx.push_back(i);
    const Batch batch = make_batch(split, idx, net.spec.timesteps);
    stats.merge(forward(net, batch.inputs, {SpikeMode::hard, false}).stats);
  }
  const EnergyReport r = energy_report(net, stats, cfg.energy.model());
  energy_table(r).save(out_path(cfg, "energy.csv"));
  energy_summary_table(r).save(out_path(cfg, "energy_summary.csv"));
  return r;
}

std::vector<ModelDumpRow> run_dump_models(const RunConfig &cfg) {
  const Network net = load_network(cfg);
  auto rows = dump_models(net, cfg.dump.samples);
  models_table(rows).save(out_path(cfg, "models.csv"));
  return rows;
}

std::vector<ReductionRow> run_reduce(const RunConfig &cfg) {
  Network net = load_network(cfg);
  const Network original = net;
  const int target = cfg.reduce.target_degree;
  if (target < 1)
    throw ConfigError("reduce.target_degree must be >= 1");
  std::vector<ReductionRow> rows;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Layer &layer = net.layers[l];
    if (layer.spec.kind != LayerKind::spiking)
      continue;
    ReductionRow row;
    row.layer = l;
    row.from_degree = layer.neuron.params.degree();
    if (row.from_degree > target) {
      const Reduction red = reduce_degree(layer.neuron.params, target, cfg.reduce.samples);
      layer.neuron.params = red.params;
      layer.spec.degree = target;
      net.spec.layers[l].degree = target;
      row.max_error = red.max_error;
      row.rms_error = red.rms_error;
    }
    row.to_degree = layer.neuron.params.degree();
    const auto c = layer.neuron.params.coeffs();
    row.theta.assign(c.begin(), c.end());
    rows.push_back(std::move(row));
  }

  std::size_t width = 0;
  for (const auto &r : rows)
    width = std::max(width, r.theta.size());
  std::vector<std::string> header{"layer", "from_degree", "to_degree", "max_error",
                                  "rms_error"};
  for (std::size_t k = 0; k < width; ++k)
    header.push_back("theta_" + std::to_string(k));
  CsvWriter csv(header);
  for (const auto &r : rows) {
    csv.cell(r.layer).cell(r.from_degree).cell(r.to_degree).cell(r.max_error).cell(r.rms_error);
    for (std::size_t k = 0; k < width; ++k)
      k < r.theta.size() ? csv.cell(r.theta[k]) : csv.cell(std::string_view{});
    csv.end_row();
  }
  csv.save(out_path(cfg, "reduction.csv"));

  // How far the substitution moves the logits on held-out samples.
  const DataSplit data = load_dataset(cfg.dataset, cfg.network);
  const Dataset &split = eval_split(data);
  const std::size_t n = std::min(cfg.energy.samples, split.size());
  double shift = 0.0;
  std::size_t agree = 0;
  if (n > 0) {
    const auto idx = first_n(n);
    const Batch batch = make_batch(split, idx, net.spec.timesteps);
    const Tensor before = forward(original, batch.inputs, {SpikeMode::hard, false}).logits;
    const Tensor after = forward(net, batch.inputs, {SpikeMode::hard, false}).logits;
    for (std::size_t i = 0; i < before.size(); ++i)
      shift = std::max(shift, std::abs(after[i] - before[i]));
    const std::size_t m = before.dim(1);
    for (std::size_t b = 0; b < n; ++b) {
      const double *x = before.data() + b * m, *y = after.data() + b * m;
      agree += std::max_element(x, x + m) - x == std::max_element(y, y + m) - y;
    }
  }
  CsvWriter effect({"samples", "max_abs_logit_change", "prediction_agreement"});
  effect.cell(n).cell(shift).cell(n ? static_cast<double>(agree) / static_cast<double>(n) : 1.0);
  effect.end_row();
  effect.save(out_path(cfg, "reduction_effect.csv"));
  save_checkpoint(out_path(cfg, "reduced.lnm"), net, 0, Rng(cfg.seed).state());
  return rows;
}

} // namespace lnm
