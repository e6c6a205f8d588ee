// End-to-end acceptance run: one PASS/FAIL line per criterion, plus CSV
// artifacts (ablation, energy) under the directory given as argv[1].

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "analysis/analysis.hpp"
#include "core/error.hpp"
#include "io/dataset.hpp"
#include "io/files.hpp"
#include "neuron/neuron.hpp"
#include "reference_lif.hpp"
#include "stbp/stbp.hpp"
#include "support.hpp"
#include "training/training.hpp"

using namespace lnm;
using namespace lnm::test;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_out;

// ---------------------------------------------------------------- 1
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  std::size_t checked = 0, excluded = 0, theta_checked = 0, failures = 0;
  double worst = 0.0;
  const int nets = 24;
  for (int n = 0; n < nets; ++n) {
    NetworkSpec s;
    s.input_shape = {2 + rng.below(5)};
    const std::size_t hidden = 1 + rng.below(2);
    for (std::size_t h = 0; h < hidden; ++h) {
      s.layers.push_back(dense(2 + rng.below(15)));
      s.layers.push_back(spiking(1 + static_cast<int>(rng.below(4))));
      if (rng.bernoulli(0.5))
        s.layers.back().surrogate = {SurrogateKind::triangle, 0.6 + rng.uniform()};
    }
    s.layers.push_back(decoder());
    s.timesteps = 1 + static_cast<int>(rng.below(5));
    s.num_classes = 2 + rng.below(3);
    Network net = build(s, rng);
    for (auto &l : net.layers) {
      if (l.spec.kind == LayerKind::dense)
        for (double &b : l.bias.values())
          b = rng.uniform(0.0, 0.4);
      if (l.spec.kind == LayerKind::spiking) {
        auto c = l.neuron.params.mutable_coeffs();
        for (std::size_t k = 1; k < c.size(); ++k)
          c[k] += rng.uniform(-0.3, 0.3);
      }
    }
    const std::size_t B = 3;
    Shape shape{static_cast<std::size_t>(s.timesteps), B, s.input_shape[0]};
    Batch batch{random_tensor(shape, rng, 0.0, 1.5), {}};
    for (std::size_t b = 0; b < B; ++b)
      batch.labels.push_back(static_cast<int>(rng.below(s.num_classes)));
    CheckOptions o;
    o.h = 1e-5;
    o.tol = 1e-4;
    o.label_smoothing = n % 3 == 0 ? 0.1 : 0.0;
    const CheckReport r = grad_check(net, batch, o);
    failures += !r.passed;
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    excluded += r.excluded;
    for (const auto &g : r.groups)
      if (g.name.find("theta") != std::string::npos)
        theta_checked += g.checked;
  }
  const double secs = seconds_since(t0);
  const bool pass = failures == 0 && theta_checked > 0 && secs < 120.0;
  return {pass, std::to_string(nets) + " networks, " + std::to_string(checked) +
                    " entries compared (" + std::to_string(theta_checked) + " theta, " +
                    std::to_string(excluded) + " excluded at kinks), max rel error " +
                    fmt("%.2e", worst) + " (tol 1e-4), " + std::to_string(failures) +
                    " failing, " + fmt("%.1f", secs) + " s (limit 120 s)"};
}

// ---------------------------------------------------------------- 2
Outcome lif_parity() {
  // two-hidden-layer LIF network trained by the engine and by the
  // stand-alone reference
  SyntheticTemporalParams p{8, 600, 6, 0.1, 77};
  const Dataset data = gen_synthetic_temporal(p);
  NetworkSpec s;
  s.input_shape = {16};
  s.layers = {dense(32), spiking(1), dense(24), spiking(1), decoder()};
  s.timesteps = 6;
  s.num_classes = 8;
  Rng init(5);
  const Network net = build(s, init);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 32;
  cfg.lr_weights = 0.1;
  cfg.lr_lnm = 0.0;
  cfg.momentum = 0.9;
  cfg.weight_decay = 5e-4;
  cfg.warmup_epochs = 1;
  Rng a(99), b(99);
  const TrainResult r = train(net, data, nullptr, cfg, a);
  ref::Mlp m = ref::from_network(net);
  const std::vector<double> losses = ref::train(m, data, cfg, b);
  std::size_t same_epochs = 0;
  for (std::size_t e = 0; e < losses.size(); ++e)
    same_epochs += r.metrics.epochs[e].train_loss == losses[e];
  const bool weights = ref::same_weights(m, r.last);
  const bool pass = same_epochs == losses.size() && weights && a.state() == b.state();
  return {pass, std::to_string(same_epochs) + "/" + std::to_string(losses.size()) +
                    " epoch losses bit-identical, final weights " +
                    (weights ? "bit-identical" : "DIFFER") + ", final loss " +
                    fmt("%.6f", losses.back())};
}

// ---------------------------------------------------------------- 3
double power_sum(const std::vector<double> &theta, double u) {
  double s = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k)
    s += theta[k] * std::pow(u, static_cast<double>(k));
  return s;
}

Outcome horner_equivalence() {
  Rng rng(3);
  const int pairs = 100000;
  double worst = 0.0;
  long bad_counts = 0;
  for (int i = 0; i < pairs; ++i) {
    const int degree = 1 + i % 6;
    std::vector<double> theta(static_cast<std::size_t>(degree) + 1, 0.0);
    for (std::size_t k = 1; k < theta.size(); ++k)
      theta[k] = rng.uniform(-2, 2);
    const double u = rng.uniform(-1, 1);
    const double h = eval_poly_horner(LnmParams(theta), Tensor::from({u}))[0];
    const double n = power_sum(theta, u);
    // relative to the magnitude of the summed terms, the scale at which
    // either evaluation order rounds
    double scale = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k)
      scale += std::abs(theta[k]) * std::pow(std::abs(u), static_cast<double>(k));
    worst = std::max(worst, std::abs(h - n) / std::max(scale, 1e-300));
    Counted::reset();
    horner(std::span<const double>(theta), Counted(u));
    bad_counts += Counted::muls != degree || Counted::adds != degree;
  }
  const bool pass = worst <= 1e-14 && bad_counts == 0;
  return {pass, std::to_string(pairs) + " pairs, degrees 1-6, max rel difference " +
                    fmt("%.2e", worst) + " (tol 1e-14), " + std::to_string(bad_counts) +
                    " evaluations off the N-multiply/N-add count"};
}

// ---------------------------------------------------------------- 4
Outcome constraint_persistence() {
  const Dataset data = gen_synthetic_temporal({8, 320, 6, 0.1, 4});
  NetworkSpec s;
  s.input_shape = {16};
  s.layers = {dense(32), spiking(3), dense(32), spiking(4), decoder()};
  s.timesteps = 6;
  s.num_classes = 8;
  Rng rng(8);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 32;
  cfg.lr_lnm = 0.05;
  std::size_t steps = 0, violations = 0;
  double moved = 0.0;
  train(build(s, rng), data, nullptr, cfg, rng, [&](const Network &n, std::size_t) {
    ++steps;
    for (const auto &l : n.layers)
      if (l.spec.kind == LayerKind::spiking) {
        violations += l.neuron.params[0] != 0.0 || eval_poly(l.neuron.params, 0.0) != 0.0;
        moved = std::max(moved, std::abs(l.neuron.params[2]));
      }
  });
  const bool pass = violations == 0 && steps == 50u * 10u && moved > 0.0;
  return {pass, std::to_string(steps) + " optimizer steps over 50 epochs, " +
                    std::to_string(violations) + " with f(0) != 0 (max |theta_2| reached " +
                    fmt("%.3g", moved) + ")"};
}

// ---------------------------------------------------------------- 5
Outcome energy() {
  const EnergyModel m;
  bool exact = layer_energy({1e6, 0, 0.5, false}, 2, m) == 900000.0 &&
               layer_energy({1e6, 0, 0.0, false}, 5, m) == 0.0 &&
               layer_energy({0, 1e3, 0.3, false}, 1, m) == 4600.0 &&
               layer_energy({5000, 150, 0.2, false}, 4, m) == 4.0 * (0.2 * 0.9 * 5000 + 4.6 * 150) &&
               synaptic_ops(100, 50) == 5000.0 && lnm_update_macs(50, 3) == 150.0 &&
               lif_update_macs(50, m) == 50.0;

  // mini CNN: two conv-spiking blocks, a dense-spiking block, the decoder
  NetworkSpec s;
  s.input_shape = {3, 16, 16};
  s.layers = {conv(64, 3, 1, 1), spiking(3), pool(2),    conv(128, 3, 1, 1), spiking(3),
              pool(2),           flatten(),  dense(256), spiking(3),         decoder()};
  s.timesteps = 4;
  s.num_classes = 10;
  Rng rng(15);
  const Network net = build(s, rng);
  const Tensor images = random_tensor({16, 3, 16, 16}, rng, 0.0, 1.0);
  const ForwardResult fr =
      forward(net, encode_static(images, s.timesteps), {SpikeMode::hard, false});
  const EnergyReport rep = energy_report(net, fr.stats, m);

  CsvWriter csv({"layer", "kind", "op_ac", "op_mac_lif", "op_mac_lnm", "fr", "e_lif_pj",
                 "e_lnm_pj"});
  std::string rates;
  for (const auto &r : rep.layers) {
    csv.cell(r.layer).cell(r.kind).cell(r.op_ac).cell(r.op_mac_lif).cell(r.op_mac_lnm).cell(r.fr)
        .cell(r.e_lif).cell(r.e_lnm);
    csv.end_row();
    if (r.kind == "spiking")
      rates += (rates.empty() ? "" : "/") + fmt("%.3f", r.fr);
  }
  csv.save(g_out / "energy_desk_cnn.csv");
  const double pct = rep.overhead_percent();
  const bool pass = exact && pct > 0.0 && pct < 10.0;
  return {pass, std::string("hand-substituted energies ") + (exact ? "exact" : "MISMATCH") +
                    "; degree-3 overhead on the mini CNN " + fmt("%.2f", pct) +
                    "% (LIF " + fmt("%.4g", rep.total_lif * 1e-6) + " uJ, LNM " +
                    fmt("%.4g", rep.total_lnm * 1e-6) + " uJ per sample, firing rates " +
                    rates + "); target (0, 10)%"};
}

// ---------------------------------------------------------------- 6
Outcome ablation() {
  const auto t0 = Clock::now();
  Rng seeds(1);
  const Dataset train_set = gen_synthetic_temporal({8, 2000, 6, 0.1, seeds.next_u64()});
  const Dataset val_set = gen_synthetic_temporal({8, 500, 6, 0.1, seeds.next_u64()});
  struct Variant {
    std::string name;
    int degree;
    double lr_lnm;
  };
  const std::vector<Variant> variants{
      {"lif_frozen", 1, 0.0}, {"lnm_1", 1, 0.05}, {"lnm_2", 2, 0.05},
      {"lnm_3", 3, 0.05},     {"lnm_5", 5, 0.05}};
  const std::vector<std::uint64_t> run_seeds{11, 22, 33};

  CsvWriter csv({"variant", "degree", "lr_lnm", "seed_0", "seed_1", "seed_2", "mean_top1",
                 "std_top1"});
  std::map<std::string, double> mean;
  std::string summary;
  for (const auto &v : variants) {
    std::vector<double> acc;
    for (std::uint64_t seed : run_seeds) {
      NetworkSpec s;
      s.input_shape = {16};
      s.layers = {dense(64), spiking(v.degree), dense(64), spiking(v.degree), decoder()};
      s.timesteps = 6;
      s.num_classes = 8;
      Rng rng(seed);
      TrainConfig cfg;
      cfg.epochs = 30;
      cfg.batch_size = 32;
      cfg.lr_weights = 0.1;
      cfg.lr_lnm = v.lr_lnm;
      cfg.momentum = 0.9;
      cfg.weight_decay = 5e-4;
      const TrainResult r = train(build(s, rng), train_set, &val_set, cfg, rng);
      acc.push_back(r.metrics.best_val_acc);
    }
    double mu = 0.0, var = 0.0;
    for (double a : acc)
      mu += a / acc.size();
    for (double a : acc)
      var += (a - mu) * (a - mu) / (acc.size() - 1);
    mean[v.name] = mu;
    csv.cell(v.name).cell(v.degree).cell(v.lr_lnm);
    for (double a : acc)
      csv.cell(a);
    csv.cell(mu).cell(std::sqrt(var));
    csv.end_row();
    summary += (summary.empty() ? "" : ", ") + v.name + " " + fmt("%.1f", 100 * mu) + "+-" +
               fmt("%.1f", 100 * std::sqrt(var));
  }
  csv.save(g_out / "ablation.csv");
  const double secs = seconds_since(t0);
  const bool pass = mean["lnm_3"] >= mean["lif_frozen"] - 0.005 && secs < 1800.0;
  return {pass, "val top-1 % over 3 seeds: " + summary + "; LNM-3 minus LIF " +
                    fmt("%+.1f", 100 * (mean["lnm_3"] - mean["lif_frozen"])) +
                    " pp (need >= -0.5), " + fmt("%.0f", secs) + " s (limit 1800 s); " +
                    (g_out / "ablation.csv").string()};
}

// ---------------------------------------------------------------- 7
std::vector<long double> ls_oracle(const std::vector<double> &theta, int d, int samples) {
  std::vector<std::vector<long double>> A(d, std::vector<long double>(d + 1, 0.0L));
  for (int j = 0; j < samples; ++j) {
    const long double u = -1.0L + 2.0L * j / (samples - 1);
    long double f = 0.0L;
    for (std::size_t k = 0; k < theta.size(); ++k)
      f += theta[k] * std::pow(u, static_cast<long double>(k));
    for (int a = 0; a < d; ++a) {
      const long double pa = std::pow(u, static_cast<long double>(a + 1));
      for (int b = 0; b < d; ++b)
        A[a][b] += pa * std::pow(u, static_cast<long double>(b + 1));
      A[a][d] += pa * f;
    }
  }
  for (int c = 0; c < d; ++c) {
    int piv = c;
    for (int r = c + 1; r < d; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c]))
        piv = r;
    std::swap(A[c], A[piv]);
    for (int r = 0; r < d; ++r)
      if (r != c) {
        const long double f = A[r][c] / A[c][c];
        for (int k = c; k <= d; ++k)
          A[r][k] -= f * A[c][k];
      }
  }
  std::vector<long double> x(d + 1, 0.0L);
  for (int a = 0; a < d; ++a)
    x[a + 1] = A[a][d] / A[a][a];
  return x;
}

Outcome degree_reduction() {
  Rng rng(12);
  int nonmono_rms = 0, nonmono_max = 0, inexact_full = 0, inexact_trailing = 0;
  double oracle_gap = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const int D = 2 + t % 5;
    std::vector<double> c(D + 1, 0.0);
    for (int k = 1; k <= D; ++k)
      c[k] = rng.uniform(-1, 1);
    double prev_rms = INFINITY, prev_max = INFINITY;
    for (int d = 1; d <= D; ++d) {
      const Reduction r = reduce_degree(LnmParams(c), d);
      const auto x = ls_oracle(c, d, kReductionSamples);
      for (int k = 1; k <= d; ++k)
        oracle_gap = std::max(oracle_gap, std::abs(r.params[k] - static_cast<double>(x[k])));
      nonmono_rms += r.rms_error > prev_rms + 1e-15;
      nonmono_max += r.max_error > prev_max + 1e-15;
      prev_rms = r.rms_error;
      prev_max = r.max_error;
      if (d == D) {
        double gap = 0.0;
        for (int k = 0; k <= D; ++k)
          gap = std::max(gap, std::abs(r.params[k] - c[k]));
        inexact_full += gap > 1e-12;
      }
    }
    // pad with zeros below the top: degree D+2 with two trailing zeros
    std::vector<double> padded = c;
    padded.push_back(0.0);
    padded.push_back(0.0);
    const Reduction r = reduce_degree(LnmParams(padded), D);
    double gap = r.max_error;
    for (int k = 0; k <= D; ++k)
      gap = std::max(gap, std::abs(r.params[k] - c[k]));
    inexact_trailing += gap > 1e-12;
  }
  // Least squares minimises the residual norm, so that is the error whose
  // monotonicity is guaranteed; the grid max-abs deviation is reported only.
  const bool pass = nonmono_rms == 0 && inexact_full == 0 &&
                    inexact_trailing == 0 && oracle_gap < 1e-9;
  return {pass, std::to_string(trials) + " polynomials of degree 2-6: least-squares error rises with target degree in " +
                    std::to_string(nonmono_rms) + " cases (max-abs deviation, not minimised, in " +
                    std::to_string(nonmono_max) + "), " + std::to_string(inexact_full) + " inexact at full degree, " +
                    std::to_string(inexact_trailing) +
                    " inexact with trailing zeros (tol 1e-12), max gap to long-double oracle " +
                    fmt("%.1e", oracle_gap)};
}

// ---------------------------------------------------------------- 8
int run_cli(const std::string &args) {
  const std::string cmd = std::string(LNM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path &dir) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      const auto bytes = read_file(e.path());
      files[fs::relative(e.path(), dir).string()] = std::string(bytes.begin(), bytes.end());
    }
  return files;
}

Outcome determinism() {
  const fs::path root = g_out / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "config.json";
  std::ofstream(cfg) << R"({
  "seed": 21,
  "network": {"input_shape": [16], "timesteps": 6, "num_classes": 8,
    "layers": [{"kind": "dense", "units": 32}, {"kind": "spiking", "degree": 3},
               {"kind": "dense", "units": 32}, {"kind": "spiking", "degree": 3},
               {"kind": "decoder"}]},
  "train": {"epochs": 4, "batch_size": 32, "lr_lnm": 0.05},
  "dataset": {"kind": "synthetic_temporal", "classes": 8, "train_samples": 256,
              "val_samples": 64, "noise": 0.1, "seed": 3},
  "grad_check": {"batch": 2, "max_entries": 16},
  "energy": {"samples": 64}
})";
  const std::string common = " --config " + cfg.string() + " --seed 21";
  const fs::path out = root / "out";
  const std::string ck = " --checkpoint " + (root / "checkpoint.lnm").string();
  // each command twice into the same directory, wiping it in between
  int bad_exit = 0;
  std::size_t files = 0, differing = 0;
  for (const char *cmd : {"train", "eval", "grad-check", "energy", "dump-models", "reduce"}) {
    const bool is_train = std::string(cmd) == "train";
    const std::string args = std::string(cmd) + common + (is_train ? "" : ck) + " --out " +
                             out.string();
    std::map<std::string, std::string> first;
    for (int run = 0; run < 2; ++run) {
      fs::remove_all(out);
      bad_exit += run_cli(args) != 0;
      const auto snap = snapshot(out);
      if (run == 0) {
        first = snap;
        continue;
      }
      files += first.size();
      for (const auto &[name, bytes] : first) {
        const auto it = snap.find(name);
        differing += it == snap.end() || it->second != bytes;
      }
      differing += snap.size() > first.size() ? snap.size() - first.size() : 0;
    }
    if (is_train)
      fs::copy_file(out / "checkpoint.lnm", root / "checkpoint.lnm",
                    fs::copy_options::overwrite_existing);
  }
  const bool pass = bad_exit == 0 && differing == 0 && files >= 11;
  return {pass, "6 commands x 2 runs, " + std::to_string(files) + " output files compared, " +
                    std::to_string(differing) + " differing, " + std::to_string(bad_exit) +
                    " non-zero exits"};
}

} // namespace

int main(int argc, char **argv) {
  g_out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(g_out);
  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"LIF parity", lif_parity},
      {"Horner equivalence", horner_equivalence},
      {"constraint persistence", constraint_persistence},
      {"energy formula and overhead", energy},
      {"LNM ablation", ablation},
      {"degree reduction", degree_reduction},
      {"CLI determinism", determinism}};
  int failed = 0;
  std::string summary;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    char head[96];
    std::snprintf(head, sizeof head, "[%s] criterion %zu %s: ", o.pass ? "PASS" : "FAIL", i + 1,
                  criteria[i].first);
    const std::string line = head + o.detail + " [" + fmt("%.1f", seconds_since(t0)) + " s]\n";
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    summary += line;
  }
  summary += std::to_string(criteria.size() - failed) + " of " +
             std::to_string(criteria.size()) + " criteria passed\n";
  std::fputs(summary.substr(summary.rfind('\n', summary.size() - 2) + 1).c_str(), stdout);
  write_file_atomic(g_out / "summary.txt", summary);
  return failed == 0 ? 0 : 1;
}
