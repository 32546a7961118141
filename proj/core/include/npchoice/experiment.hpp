#pragma once

// Experiment harness behind the command-line tool: simulated instances, static and dynamic
// fits, held-out evaluation, grid sweeps and the curvature probe. Everything is seeded from one
// master seed so repeated runs produce identical files.
//
// An instance directory holds
//   truth.json  train.json  test.json  p_train.csv  p_test.csv
// and fits add model.json, trace.csv and summary.csv next to them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npchoice/core.hpp"
#include "npchoice/distance.hpp"
#include "npchoice/dual.hpp"
#include "npchoice/fit.hpp"
#include "npchoice/sim.hpp"

namespace npchoice {

namespace fs = std::filesystem;

enum class Algo { kFrankWolfe, kDual };

Algo parse_algo(const std::string& name);  // "fw" | "dual"; ConfigError otherwise
std::string algo_name(Algo algo);

// nullopt stands for κ = ∞ (exact probabilities every iteration).
using Kappa = std::optional<std::int64_t>;
Kappa parse_kappa(const std::string& text);  // positive integer, "inf" or "∞"
std::string kappa_label(const Kappa& kappa);

struct ExperimentConfig {
  int n = 10;  // products; instances carry n + 1 items
  int K_mix = 5;
  double L = 5.0;
  int m_train = 20;
  int m_test = 100;
  // Assortments reserved for training; train sets for every m ≤ train_pool are prefixes of the
  // same pool, and the test set is the same for all of them.
  int train_pool = 50;
  int n_instances = 10;
  std::string distance = "l2";
  Algo algo = Algo::kDual;
  int T = 10000;
  std::optional<double> stop_train_mae = 0.001;
  std::int64_t initial_observations = 2000;
  std::uint64_t seed = 0;
  // Sweep grid. Empty lists fall back to the scalar fields above; an empty kappa list means
  // static fits on the exact train vector.
  std::vector<int> m_list;
  std::vector<std::string> distances;
  std::vector<Kappa> kappas;
  int threads = 0;  // 0: hardware concurrency

  // Throws ConfigError on an invalid grid or when train_pool + m_test exceeds the number of
  // distinct assortments.
  void validate() const;
};

// Reads the keys above from a JSON object; unknown keys are a ConfigError. "kappas" entries
// are integers or the string "inf"; "stop_train_mae": null disables the stopping rule.
ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base = {});

struct GeneratedInstance {
  MixedMNL truth;
  Instance train;
  Instance test;
  ChoiceVector p_train;
  ChoiceVector p_test;
};

// Instance `index` of the experiment; depends only on (seed, index, n, K_mix, L, train_pool,
// m_test) apart from the train prefix length m_train.
GeneratedInstance generate_instance(const ExperimentConfig& cfg, int index);

void write_instance_dir(const fs::path& dir, const GeneratedInstance& g);
GeneratedInstance read_instance_dir(const fs::path& dir);

struct FitSpec {
  Algo algo = Algo::kDual;
  DistanceSpec distance = DistanceSpec::l2();
  int T = 10000;
  std::optional<double> stop_train_mae = 0.001;
  bool dynamic = false;
  Kappa kappa;  // dynamic only
  std::int64_t initial_observations = 2000;
  std::uint64_t seed = 0;  // observation stream seed, dynamic only

  // Throws ConfigError for fw with a distance of infinite curvature or dual with a non-norm.
  void validate() const;
};

struct FitOutcome {
  FitResult fit;
  std::optional<DualFit> dual;  // certificate details for dual runs
  double wall_seconds = 0.0;
};

FitOutcome run_fit(const GeneratedInstance& g, const FitSpec& spec);

struct Summary {
  std::string algo;
  std::string distance;
  std::string kappa;  // "static" for static fits
  int m_train = 0;
  int iterations = 0;
  int sparsity = 0;
  double train_mae = 0.0;
  std::optional<double> test_mae;
  std::int64_t observations = 0;
  bool stopped_by_rule = false;
  double certificate = 0.0;        // dual only, else 0
  double certificate_bound = 0.0;  // dual only, else 0
  double wall_seconds = 0.0;
};

Summary summarize(const GeneratedInstance& g, const FitSpec& spec, const FitOutcome& out);
std::string summary_header();
std::string summary_row(const Summary& s);

// Test-set metrics of a model: MAE(p_test, p̂_test) and support size. Throws ConfigError for
// an empty model or one ranking a different number of items.
struct EvalRow {
  double test_mae = 0.0;
  int sparsity = 0;
};
EvalRow evaluate_model(const GeneratedInstance& g, const SparseModel& model);

// --- commands --------------------------------------------------------------------------

// Writes out_dir/instance_000 ... one directory per instance. Returns the directories.
std::vector<fs::path> cmd_generate(const ExperimentConfig& cfg, const fs::path& out_dir);

// Fit on the instance in `dir`; writes model.json, trace.csv, summary.csv into out_dir
// (default: `dir`).
Summary cmd_fit(const fs::path& dir, const FitSpec& spec, const fs::path& out_dir);

// Appends (or creates) `results_csv` with one row when given.
EvalRow cmd_evaluate(const fs::path& dir, const fs::path& model_file,
                     const std::optional<fs::path>& results_csv);

struct SweepCell {
  int m_train = 0;
  std::string distance;
  std::string kappa;
  int instances = 0;
  double mae_test = 0.0;
  double num_rankings = 0.0;
  double iterations = 0.0;
  double train_mae = 0.0;
};

struct SweepResult {
  std::vector<Summary> runs;  // (m, distance, kappa, instance) order
  std::vector<SweepCell> cells;
};

// Runs generate → fit → evaluate over m_list × distances × kappas × instances in a thread
// pool. Aggregation is sorted by cell key, so the output does not depend on scheduling.
SweepResult run_sweep(const ExperimentConfig& cfg);
std::string sweep_csv(const SweepResult& r);
std::string runs_csv(const SweepResult& r);
// Writes sweep.csv and runs.csv into out_dir.
SweepResult cmd_sweep(const ExperimentConfig& cfg, const fs::path& out_dir);

enum class ProbeBase { kData, kNearVertex };
ProbeBase parse_probe_base(const std::string& name);  // "p" | "near-vertex"

struct ProbeRow {
  double alpha = 0.0;
  double ratio = 0.0;
};

// Curvature ratios for the train data of `g` along the segment towards a random vertex s.
// kData expands at x = p. kNearVertex expands at x = (1 − 1e-5)·a(σ') + 1e-5·p for another
// random vertex σ', where some coordinates of x are tiny while p is not.
std::vector<ProbeRow> run_probe(const GeneratedInstance& g, const DistanceSpec& spec,
                                const std::vector<double>& alphas, ProbeBase base,
                                std::uint64_t seed);
std::string probe_csv(const std::vector<ProbeRow>& rows);

}  // namespace npchoice
