// npchoice: simulate, fit and evaluate non-parametric choice models.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "npchoice/errors.hpp"
#include "npchoice/experiment.hpp"
#include "npchoice/io.hpp"
#include "npchoice/oracle.hpp"

namespace {

using namespace npchoice;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void warn_no_buy(const Instance& inst, const std::string& what) {
  if (inst.inserted_no_buy()) {
    std::cerr << "warning: " << what << ": added the no-buy item 1 to assortments lacking it\n";
  }
}

// Flags shared by several subcommands. Values are applied on top of the --config file only when
// given on the command line.
struct Flags {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;

  int n = 0, k_mix = 0, m_train = 0, m_test = 0, train_pool = 0, instances = 0, T = 0;
  double L = 0.0, stop = 0.0;
  bool no_stop = false;
  std::string algo, distance;
  std::vector<int> m_list;
  std::vector<std::string> distances, kappas;
  std::int64_t initial = 0;
  int threads = 0;

  std::string instance_dir, model_file, results, kappa = "inf", costs, method = "bnb", export_ip;
  std::string base = "p";
  std::vector<double> alphas{1e-1, 1e-2, 1e-3, 1e-4};
};

struct Bound {
  CLI::Option* seed = nullptr;
  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> setters;
};

void add_experiment_flags(CLI::App* cmd, Flags& f, Bound& b, bool grid) {
  auto add = [&](CLI::Option* opt, std::function<void(ExperimentConfig&)> set) {
    b.setters.emplace_back(opt, std::move(set));
  };
  add(cmd->add_option("--n", f.n, "Number of products (instances add the no-buy item)"),
      [&f](ExperimentConfig& c) { c.n = f.n; });
  add(cmd->add_option("--kmix", f.k_mix, "Mixture components of the ground truth"),
      [&f](ExperimentConfig& c) { c.K_mix = f.k_mix; });
  add(cmd->add_option("--L", f.L, "Utility boost of the four favoured options"),
      [&f](ExperimentConfig& c) { c.L = f.L; });
  add(cmd->add_option("--m-train", f.m_train, "Training assortments"),
      [&f](ExperimentConfig& c) { c.m_train = f.m_train; });
  add(cmd->add_option("--m-test", f.m_test, "Test assortments"),
      [&f](ExperimentConfig& c) { c.m_test = f.m_test; });
  add(cmd->add_option("--train-pool", f.train_pool, "Assortments reserved for training"),
      [&f](ExperimentConfig& c) { c.train_pool = f.train_pool; });
  add(cmd->add_option("--instances", f.instances, "Number of simulated instances"),
      [&f](ExperimentConfig& c) { c.n_instances = f.instances; });
  if (!grid) return;
  add(cmd->add_option("--algo", f.algo, "fw or dual"),
      [&f](ExperimentConfig& c) { c.algo = parse_algo(f.algo); });
  add(cmd->add_option("--T", f.T, "Iteration budget"), [&f](ExperimentConfig& c) { c.T = f.T; });
  add(cmd->add_option("--stop-mae,--stop", f.stop, "Stop once train MAE reaches this value"),
      [&f](ExperimentConfig& c) { c.stop_train_mae = f.stop; });
  add(cmd->add_flag("--no-stop", f.no_stop, "Always run the full budget"),
      [](ExperimentConfig& c) { c.stop_train_mae.reset(); });
  add(cmd->add_option("--m-list", f.m_list, "Training sizes to sweep")->delimiter(','),
      [&f](ExperimentConfig& c) { c.m_list = f.m_list; });
  add(cmd->add_option("--distances", f.distances, "Distances to sweep (l1,l2,linf,sql2)")
          ->delimiter(','),
      [&f](ExperimentConfig& c) { c.distances = f.distances; });
  add(cmd->add_option("--kappas", f.kappas, "Batch sizes for dynamic fits; inf for exact data")
          ->delimiter(','),
      [&f](ExperimentConfig& c) {
        c.kappas.clear();
        for (const auto& k : f.kappas) c.kappas.push_back(parse_kappa(k));
      });
  add(cmd->add_option("--initial", f.initial, "Observations before the first iteration"),
      [&f](ExperimentConfig& c) { c.initial_observations = f.initial; });
  add(cmd->add_option("--threads", f.threads, "Worker threads (0: all cores)"),
      [&f](ExperimentConfig& c) { c.threads = f.threads; });
}

ExperimentConfig build_config(const Flags& f, const Bound& b) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = config_from_json(io::read_text(f.config));
  if (b.seed && b.seed->count() > 0) cfg.seed = f.seed;
  for (const auto& [opt, set] : b.setters) {
    if (opt->count() > 0) set(cfg);
  }
  return cfg;
}

FitSpec fit_spec(const Flags& f, const Instance& train, bool dynamic, const ExperimentConfig& cfg) {
  FitSpec spec;
  spec.algo = f.algo.empty() ? cfg.algo : parse_algo(f.algo);
  spec.distance = DistanceSpec::parse(f.distance.empty() ? cfg.distance : f.distance, train.m());
  spec.T = f.T > 0 ? f.T : cfg.T;
  spec.stop_train_mae = f.no_stop ? std::nullopt
                        : f.stop > 0.0 ? std::optional<double>(f.stop)
                                       : cfg.stop_train_mae;
  spec.dynamic = dynamic;
  if (dynamic) {
    spec.kappa = parse_kappa(f.kappa);
    spec.initial_observations = f.initial > 0 ? f.initial : cfg.initial_observations;
    spec.seed = cfg.seed;
  }
  return spec;
}

int run(int argc, char** argv) {
  CLI::App app{"Estimate non-parametric (ranking-based) choice models from choice data"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  Bound bound;
  bound.seed = app.add_option("--seed", f.seed, "Master seed")->capture_default_str();
  app.add_option("--out", f.out, "Output directory (or file for probe/oracle)");
  app.add_option("--config", f.config, "JSON file with experiment settings")
      ->check(CLI::ExistingFile);

  auto* generate = app.add_subcommand("generate", "Simulate ground truths and train/test instances");
  add_experiment_flags(generate, f, bound, false);

  auto* fit_static = app.add_subcommand("fit-static", "Fit on the exact train vector of an instance");
  fit_static->alias("fit");
  auto* fit_dynamic =
      app.add_subcommand("fit-dynamic", "Fit while observations arrive in batches of kappa");
  for (auto* cmd : {fit_static, fit_dynamic}) {
    cmd->add_option("--instance", f.instance_dir, "Instance directory from generate")->required();
    cmd->add_option("--algo", f.algo, "fw or dual");
    cmd->add_option("--distance", f.distance, "l1, l2, linf (dual) or sql2 (fw)");
    cmd->add_option("--T", f.T, "Iteration budget");
    cmd->add_option("--stop-mae,--stop", f.stop, "Stop once train MAE reaches this value");
    cmd->add_flag("--no-stop", f.no_stop, "Always run the full budget");
  }
  fit_dynamic->add_option("--kappa", f.kappa, "Observations per iteration, or inf")
      ->capture_default_str();
  fit_dynamic->add_option("--initial", f.initial, "Observations before the first iteration");

  auto* evaluate = app.add_subcommand("evaluate", "Test-set MAE and sparsity of a fitted model");
  evaluate->add_option("--instance", f.instance_dir, "Instance directory")->required();
  evaluate->add_option("--model", f.model_file, "Model JSON from a fit")->required();
  evaluate->add_option("--results", f.results, "Append the row to this CSV");

  auto* sweep = app.add_subcommand("sweep", "Generate, fit and evaluate over a grid");
  add_experiment_flags(sweep, f, bound, true);

  auto* probe = app.add_subcommand("probe", "Curvature ratios of a distance along a segment");
  probe->add_option("--instance", f.instance_dir, "Instance directory")->required();
  probe->add_option("--distance", f.distance, "l1, l2, linf, sql2 or wkl")->required();
  probe->add_option("--alphas", f.alphas, "Step lengths in (0, 1]")->delimiter(',');
  probe->add_option("--base", f.base, "Expansion point: p or near-vertex")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Minimize <a(sigma), c> over rankings");
  oracle->add_option("--instance", f.instance_dir, "Instance JSON")->required();
  oracle->add_option("--cost,--costs", f.costs, "CSV assortment_id,item,cost")->required();
  oracle->add_option("--method", f.method, "bnb or enum")->capture_default_str();
  oracle->add_option("--export-ip", f.export_ip, "Also write the integer program (LP format)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const ExperimentConfig cfg = build_config(f, bound);
  const std::string out = f.out;

  if (*generate) {
    const auto dirs = cmd_generate(cfg, out.empty() ? "instances" : out);
    for (const auto& d : dirs) std::cout << d.string() << "\n";
  } else if (*fit_static || *fit_dynamic) {
    const GeneratedInstance g = read_instance_dir(f.instance_dir);
    warn_no_buy(g.train, "train.json");
    const FitSpec spec = fit_spec(f, g.train, static_cast<bool>(*fit_dynamic), cfg);
    const Summary s = cmd_fit(f.instance_dir, spec, out.empty() ? f.instance_dir : out);
    std::cout << summary_header() << "\n" << summary_row(s) << "\n";
  } else if (*evaluate) {
    const auto results =
        f.results.empty() ? std::nullopt : std::optional<fs::path>(f.results);
    const EvalRow row = cmd_evaluate(f.instance_dir, f.model_file, results);
    std::cout << "MAE_test,num_rankings\n" << io::format_real(row.test_mae) << "," << row.sparsity
              << "\n";
  } else if (*sweep) {
    const SweepResult r = cmd_sweep(cfg, out.empty() ? "sweep" : out);
    std::cout << sweep_csv(r);
  } else if (*probe) {
    const GeneratedInstance g = read_instance_dir(f.instance_dir);
    const auto rows = run_probe(g, DistanceSpec::parse(f.distance, g.train.m()), f.alphas,
                                parse_probe_base(f.base), cfg.seed);
    const std::string csv = probe_csv(rows);
    if (out.empty()) {
      std::cout << csv;
    } else {
      io::write_text(out, csv);
    }
  } else if (*oracle) {
    const Instance inst = io::read_instance(f.instance_dir);
    warn_no_buy(inst, f.instance_dir);
    const auto costs = io::read_costs(f.costs, inst);
    OracleResult r;
    if (f.method == "bnb") {
      r = solve_bnb(inst, costs);
    } else if (f.method == "enum") {
      r = solve_enum(inst, costs);
    } else {
      throw ConfigError("unknown oracle method '" + f.method + "' (expected bnb or enum)");
    }
    if (!f.export_ip.empty()) export_ip(inst, costs, f.export_ip);
    std::string ranking;
    for (int item : r.ranking.order()) {
      ranking += (ranking.empty() ? "" : " ") + std::to_string(item);
    }
    std::cout << "ranking,value,nodes\n"
              << ranking << "," << io::format_real(r.value) << "," << r.nodes_explored << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const npchoice::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const npchoice::RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
