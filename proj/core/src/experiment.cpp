#include "npchoice/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "npchoice/errors.hpp"
#include "npchoice/frank_wolfe.hpp"
#include "npchoice/io.hpp"
#include "npchoice/random.hpp"

namespace npchoice {
namespace {

using nlohmann::json;

// Seed streams derived from (master seed, instance index).
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kAssortmentStream = 2;
constexpr std::uint64_t kObservationStream = 3;

double distinct_assortments(int n_products) {
  double total = 0.0;
  for (int s = 1; s <= n_products / 2; ++s) {
    double c = 1.0;
    for (int i = 1; i <= s; ++i) c = c * (n_products - s + i) / i;
    total += c;
  }
  return total;
}

std::string fmt(double v) { return io::format_real(v); }

Ranking random_ranking(int n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 1);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  return Ranking(std::move(order));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

Algo parse_algo(const std::string& name) {
  if (name == "fw") return Algo::kFrankWolfe;
  if (name == "dual") return Algo::kDual;
  throw ConfigError("unknown algorithm '" + name + "' (expected fw or dual)");
}

std::string algo_name(Algo algo) { return algo == Algo::kFrankWolfe ? "fw" : "dual"; }

Kappa parse_kappa(const std::string& text) {
  if (text == "inf" || text == "∞" || text == "infinity") return std::nullopt;
  try {
    size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size() && v >= 1) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("batch size must be a positive integer or 'inf', got '" + text + "'");
}

std::string kappa_label(const Kappa& kappa) { return kappa ? std::to_string(*kappa) : "inf"; }

void ExperimentConfig::validate() const {
  if (n < 3) throw ConfigError("need n >= 3 products");
  if (K_mix < 1) throw ConfigError("need K_mix >= 1");
  if (!(L > 0.0)) throw ConfigError("need L > 0");
  if (n_instances < 1) throw ConfigError("need n_instances >= 1");
  if (m_test < 1) throw ConfigError("need m_test >= 1");
  if (T < 1) throw ConfigError("need T >= 1");
  if (stop_train_mae && !(*stop_train_mae > 0.0)) throw ConfigError("stop_train_mae must be > 0");
  if (initial_observations < 0) throw ConfigError("initial_observations must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  std::vector<int> ms = m_list.empty() ? std::vector<int>{m_train} : m_list;
  for (int m : ms) {
    if (m < 1 || m > train_pool) {
      throw ConfigError("m_train " + std::to_string(m) + " must lie in [1, train_pool = " +
                        std::to_string(train_pool) + "]");
    }
  }
  if (train_pool + m_test > distinct_assortments(n)) {
    throw ConfigError("train_pool + m_test = " + std::to_string(train_pool + m_test) +
                      " exceeds the " +
                      std::to_string(static_cast<long long>(distinct_assortments(n))) +
                      " distinct assortments of at most n/2 products");
  }
  for (const auto& d : distances.empty() ? std::vector<std::string>{distance} : distances) {
    FitSpec spec;
    spec.algo = algo;
    spec.distance = DistanceSpec::parse(d, 1);
    spec.validate();
  }
}

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n") cfg.n = v.get<int>();
      else if (key == "K_mix") cfg.K_mix = v.get<int>();
      else if (key == "L") cfg.L = v.get<double>();
      else if (key == "m_train") cfg.m_train = v.get<int>();
      else if (key == "m_test") cfg.m_test = v.get<int>();
      else if (key == "train_pool") cfg.train_pool = v.get<int>();
      else if (key == "n_instances") cfg.n_instances = v.get<int>();
      else if (key == "distance") cfg.distance = v.get<std::string>();
      else if (key == "algo") cfg.algo = parse_algo(v.get<std::string>());
      else if (key == "T") cfg.T = v.get<int>();
      else if (key == "stop_train_mae") {
        cfg.stop_train_mae = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      } else if (key == "initial_observations") cfg.initial_observations = v.get<std::int64_t>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "m_list") cfg.m_list = v.get<std::vector<int>>();
      else if (key == "distances") cfg.distances = v.get<std::vector<std::string>>();
      else if (key == "kappas") {
        cfg.kappas.clear();
        for (const auto& k : v) {
          cfg.kappas.push_back(k.is_string() ? parse_kappa(k.get<std::string>())
                                             : parse_kappa(std::to_string(k.get<long long>())));
        }
      } else if (key == "threads") cfg.threads = v.get<int>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

GeneratedInstance generate_instance(const ExperimentConfig& cfg, int index) {
  const auto truth_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index), kTruthStream);
  const auto sets_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index), kAssortmentStream);
  MixedMNL truth = gen_mmnl(cfg.n, cfg.K_mix, cfg.L, truth_seed);
  auto sets = sample_assortments(cfg.n, cfg.train_pool + cfg.m_test, sets_seed);
  std::vector<std::vector<int>> train(sets.begin(), sets.begin() + cfg.m_train);
  std::vector<std::vector<int>> test(sets.begin() + cfg.train_pool, sets.end());
  GeneratedInstance g{std::move(truth), Instance::build(cfg.n + 1, std::move(train)),
                      Instance::build(cfg.n + 1, std::move(test)), {}, {}};
  g.p_train = exact_choice_vector(g.truth, g.train);
  g.p_test = exact_choice_vector(g.truth, g.test);
  return g;
}

void write_instance_dir(const fs::path& dir, const GeneratedInstance& g) {
  io::write_ground_truth(dir / "truth.json", g.truth);
  io::write_instance(dir / "train.json", g.train);
  io::write_instance(dir / "test.json", g.test);
  io::write_choice_vector(dir / "p_train.csv", g.train, g.p_train);
  io::write_choice_vector(dir / "p_test.csv", g.test, g.p_test);
}

GeneratedInstance read_instance_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not an instance directory: " + dir.string());
  GeneratedInstance g{io::read_ground_truth(dir / "truth.json"),
                      io::read_instance(dir / "train.json"), io::read_instance(dir / "test.json"),
                      {}, {}};
  if (g.train.n() != g.truth.products() + 1 || g.test.n() != g.train.n()) {
    throw ConfigError(dir.string() + ": ground truth and instances disagree on the item count");
  }
  g.p_train = io::read_choice_vector(dir / "p_train.csv", g.train);
  g.p_test = io::read_choice_vector(dir / "p_test.csv", g.test);
  g.p_train.model_consistent = g.p_test.model_consistent = true;
  return g;
}

void FitSpec::validate() const {
  if (algo == Algo::kFrankWolfe) {
    FwConfig cfg;
    cfg.T = T;
    cfg.stop_train_mae = stop_train_mae;
    cfg.distance = distance;
    cfg.validate();
  } else {
    DualConfig cfg;
    cfg.T = T;
    cfg.stop_train_mae = stop_train_mae;
    cfg.distance = distance;
    cfg.validate();
  }
}

FitOutcome run_fit(const GeneratedInstance& g, const FitSpec& spec) {
  spec.validate();
  std::unique_ptr<DataSource> source;
  if (spec.dynamic) {
    StreamConfig sc;
    sc.initial_observations = spec.initial_observations;
    sc.batch = spec.kappa;
    sc.seed = spec.seed;
    source = make_data_source(g.truth, g.train, sc);
  } else {
    source = std::make_unique<StaticSource>(g.train, g.p_train);
  }

  FitOutcome out;
  const auto start = std::chrono::steady_clock::now();
  if (spec.algo == Algo::kFrankWolfe) {
    FwConfig cfg;
    cfg.T = spec.T;
    cfg.stop_train_mae = spec.stop_train_mae;
    cfg.distance = spec.distance;
    out.fit = fw_run(g.train, cfg, *source);
  } else {
    DualConfig cfg;
    cfg.T = spec.T;
    cfg.stop_train_mae = spec.stop_train_mae;
    cfg.distance = spec.distance;
    out.dual = dual_run(g.train, cfg, *source);
    out.fit = out.dual->fit;
  }
  out.wall_seconds = seconds_since(start);
  return out;
}

EvalRow evaluate_model(const GeneratedInstance& g, const SparseModel& model) {
  if (model.support.empty()) throw ConfigError("model has an empty support");
  for (const auto& wr : model.support) {
    if (wr.ranking.n() != g.test.n()) {
      throw ConfigError("model ranks " + std::to_string(wr.ranking.n()) +
                        " items but the instance has " + std::to_string(g.test.n()));
    }
  }
  const ChoiceVector prediction = predict(g.test, model);
  return {mae(g.p_test.values, prediction.values), model.sparsity()};
}

Summary summarize(const GeneratedInstance& g, const FitSpec& spec, const FitOutcome& out) {
  Summary s;
  s.algo = algo_name(spec.algo);
  s.distance = spec.distance.name();
  s.kappa = spec.dynamic ? kappa_label(spec.kappa) : "static";
  s.m_train = g.train.m();
  s.iterations = out.fit.iterations_used;
  s.sparsity = out.fit.model.sparsity();
  s.train_mae = out.fit.train_mae;
  s.test_mae = evaluate_model(g, out.fit.model).test_mae;
  s.observations = out.fit.observations_used;
  s.stopped_by_rule = out.fit.stopped_by_rule;
  if (out.dual) {
    s.certificate = out.dual->certificate;
    s.certificate_bound = out.dual->certificate_bound;
  }
  s.wall_seconds = out.wall_seconds;
  return s;
}

std::string summary_header() {
  return "algo,distance,kappa,train_m,iterations,num_rankings,train_MAE,MAE_test,observations,"
         "stopped_by_rule,certificate,certificate_bound,wall_seconds";
}

std::string summary_row(const Summary& s) {
  std::ostringstream out;
  out << s.algo << "," << s.distance << "," << s.kappa << "," << s.m_train << "," << s.iterations
      << "," << s.sparsity << "," << fmt(s.train_mae) << ","
      << (s.test_mae ? fmt(*s.test_mae) : std::string()) << "," << s.observations << ","
      << (s.stopped_by_rule ? 1 : 0) << "," << fmt(s.certificate) << ","
      << fmt(s.certificate_bound) << "," << fmt(s.wall_seconds);
  return out.str();
}

std::vector<fs::path> cmd_generate(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::vector<fs::path> dirs;
  for (int i = 0; i < cfg.n_instances; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "instance_%03d", i);
    const fs::path dir = out_dir / name;
    write_instance_dir(dir, generate_instance(cfg, i));
    dirs.push_back(dir);
  }
  return dirs;
}

Summary cmd_fit(const fs::path& dir, const FitSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const GeneratedInstance g = read_instance_dir(dir);
  const FitOutcome out = run_fit(g, spec);
  const Summary s = summarize(g, spec, out);
  io::write_model(out_dir / "model.json", out.fit.model);
  if (spec.algo == Algo::kFrankWolfe) {
    io::write_fw_trace(out_dir / "trace.csv", out.fit.trace);
  } else {
    io::write_dual_trace(out_dir / "trace.csv", out.fit.trace);
  }
  io::write_text(out_dir / "summary.csv", summary_header() + "\n" + summary_row(s) + "\n");
  return s;
}

EvalRow cmd_evaluate(const fs::path& dir, const fs::path& model_file,
                     const std::optional<fs::path>& results_csv) {
  const GeneratedInstance g = read_instance_dir(dir);
  const EvalRow row = evaluate_model(g, io::read_model(model_file));
  if (results_csv) {
    const bool fresh = !fs::exists(*results_csv);
    if (results_csv->has_parent_path()) fs::create_directories(results_csv->parent_path());
    std::ofstream file(*results_csv, std::ios::app);
    if (!file) throw RuntimeError("cannot open " + results_csv->string() + " for appending");
    if (fresh) file << "instance,model,MAE_test,num_rankings\n";
    file << dir.string() << "," << model_file.string() << "," << fmt(row.test_mae) << ","
         << row.sparsity << "\n";
    if (!file) throw RuntimeError("failed writing " + results_csv->string());
  }
  return row;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<int> ms = cfg.m_list.empty() ? std::vector<int>{cfg.m_train} : cfg.m_list;
  const std::vector<std::string> ds =
      cfg.distances.empty() ? std::vector<std::string>{cfg.distance} : cfg.distances;
  const bool dynamic = !cfg.kappas.empty();
  const std::vector<Kappa> ks = dynamic ? cfg.kappas : std::vector<Kappa>{std::nullopt};

  struct Task {
    int m;
    std::string distance;
    Kappa kappa;
    int instance;
  };
  std::vector<Task> tasks;
  for (int m : ms) {
    for (const auto& d : ds) {
      for (const auto& k : ks) {
        for (int i = 0; i < cfg.n_instances; ++i) tasks.push_back({m, d, k, i});
      }
    }
  }

  SweepResult result;
  result.runs.resize(tasks.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (size_t t = next++; t < tasks.size(); t = next++) {
      try {
        const Task& task = tasks[t];
        ExperimentConfig local = cfg;
        local.m_train = task.m;
        const GeneratedInstance g = generate_instance(local, task.instance);
        FitSpec spec;
        spec.algo = cfg.algo;
        spec.distance = DistanceSpec::parse(task.distance, g.train.m());
        spec.T = cfg.T;
        spec.stop_train_mae = cfg.stop_train_mae;
        spec.dynamic = dynamic;
        spec.kappa = task.kappa;
        spec.initial_observations = cfg.initial_observations;
        spec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(task.instance),
                                kObservationStream);
        result.runs[t] = summarize(g, spec, run_fit(g, spec));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  // Tasks are laid out cell by cell, so consecutive blocks of n_instances form one cell.
  for (size_t start = 0; start < tasks.size(); start += cfg.n_instances) {
    SweepCell cell;
    const Summary& first = result.runs[start];
    cell.m_train = first.m_train;
    cell.distance = first.distance;
    cell.kappa = first.kappa;
    cell.instances = cfg.n_instances;
    for (int i = 0; i < cfg.n_instances; ++i) {
      const Summary& s = result.runs[start + i];
      cell.mae_test += *s.test_mae;
      cell.num_rankings += s.sparsity;
      cell.iterations += s.iterations;
      cell.train_mae += s.train_mae;
    }
    cell.mae_test /= cfg.n_instances;
    cell.num_rankings /= cfg.n_instances;
    cell.iterations /= cfg.n_instances;
    cell.train_mae /= cfg.n_instances;
    result.cells.push_back(cell);
  }
  std::stable_sort(result.cells.begin(), result.cells.end(),
                   [](const SweepCell& a, const SweepCell& b) {
                     return std::tie(a.m_train, a.distance) < std::tie(b.m_train, b.distance);
                   });
  return result;
}

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream out;
  out << "train_m,labels,kappa,instances,MAE_test,num_rankings,iterations,train_MAE\n";
  for (const auto& c : r.cells) {
    out << c.m_train << "," << c.distance << "," << c.kappa << "," << c.instances << ","
        << fmt(c.mae_test) << "," << fmt(c.num_rankings) << "," << fmt(c.iterations) << ","
        << fmt(c.train_mae) << "\n";
  }
  return out.str();
}

std::string runs_csv(const SweepResult& r) {
  // Wall time is left out so the file is reproducible.
  std::ostringstream out;
  out << "algo,labels,kappa,train_m,iterations,num_rankings,train_MAE,MAE_test,observations,"
         "stopped_by_rule,certificate,certificate_bound\n";
  for (const auto& s : r.runs) {
    out << s.algo << "," << s.distance << "," << s.kappa << "," << s.m_train << ","
        << s.iterations << "," << s.sparsity << "," << fmt(s.train_mae) << ","
        << fmt(*s.test_mae) << "," << s.observations << "," << (s.stopped_by_rule ? 1 : 0)
        << "," << fmt(s.certificate) << "," << fmt(s.certificate_bound) << "\n";
  }
  return out.str();
}

SweepResult cmd_sweep(const ExperimentConfig& cfg, const fs::path& out_dir) {
  SweepResult r = run_sweep(cfg);
  io::write_text(out_dir / "sweep.csv", sweep_csv(r));
  io::write_text(out_dir / "runs.csv", runs_csv(r));
  return r;
}

ProbeBase parse_probe_base(const std::string& name) {
  if (name == "p") return ProbeBase::kData;
  if (name == "near-vertex") return ProbeBase::kNearVertex;
  throw ConfigError("unknown probe base '" + name + "' (expected p or near-vertex)");
}

std::vector<ProbeRow> run_probe(const GeneratedInstance& g, const DistanceSpec& spec,
                                const std::vector<double>& alphas, ProbeBase base,
                                std::uint64_t seed) {
  if (alphas.empty()) throw ConfigError("probe needs at least one alpha");
  const Instance& inst = g.train;
  Rng rng(seed);
  const Ranking target = random_ranking(inst.n(), rng);
  const ChoiceVector s = vertex(inst, target);

  ProbeOptions options;
  if (base == ProbeBase::kNearVertex) {
    Ranking other = random_ranking(inst.n(), rng);
    while (other == target) other = random_ranking(inst.n(), rng);
    constexpr double kEps = 1e-5;
    const ChoiceVector a = vertex(inst, other);
    std::vector<double> x(inst.size());
    for (int k = 0; k < inst.size(); ++k) x[k] = (1.0 - kEps) * a[k] + kEps * g.p_train[k];
    options.base = std::move(x);
  }
  const auto ratios =
      curvature_probe(spec, inst, g.p_train.values, s.values, alphas, full_mask(inst), options);
  std::vector<ProbeRow> rows;
  for (size_t i = 0; i < alphas.size(); ++i) rows.push_back({alphas[i], ratios[i]});
  return rows;
}

std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::ostringstream out;
  out << "alpha,ratio\n";
  for (const auto& r : rows) out << fmt(r.alpha) << "," << fmt(r.ratio) << "\n";
  return out.str();
}

}  // namespace npchoice
