#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "npchoice/errors.hpp"
#include "npchoice/experiment.hpp"
#include "npchoice/io.hpp"
#include "npchoice/oracle.hpp"
#include "support/gen.hpp"

namespace npchoice {
namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("npchoice_experiment_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 6;
  cfg.K_mix = 3;
  cfg.m_train = 5;
  cfg.m_test = 10;
  cfg.train_pool = 10;
  cfg.n_instances = 2;
  cfg.T = 2000;
  cfg.seed = 17;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NPCHOICE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Io, RoundTrips) {
  TempDir tmp;
  Rng rng(61);
  const Instance inst = testing::random_instance(rng, 5, 6);
  io::write_instance(tmp.path() / "inst.json", inst);
  const Instance back = io::read_instance(tmp.path() / "inst.json");
  EXPECT_EQ(back.assortments(), inst.assortments());

  const auto p = testing::random_point(rng, inst);
  io::write_choice_vector(tmp.path() / "p.csv", inst, p);
  EXPECT_EQ(io::read_choice_vector(tmp.path() / "p.csv", inst).values, p.values);

  const auto c = testing::random_vector(rng, inst.size(), -1, 1);
  io::write_costs(tmp.path() / "c.csv", inst, c);
  EXPECT_EQ(io::read_costs(tmp.path() / "c.csv", inst), c);

  const SparseModel model = testing::random_model(rng, 5, 4);
  io::write_model(tmp.path() / "m.json", model);
  const SparseModel mb = io::read_model(tmp.path() / "m.json");
  ASSERT_EQ(mb.support.size(), model.support.size());
  for (size_t i = 0; i < mb.support.size(); ++i) {
    EXPECT_EQ(mb.support[i].ranking, model.support[i].ranking);
    EXPECT_EQ(mb.support[i].weight, model.support[i].weight);
  }

  const MixedMNL truth = gen_mmnl(6, 3, 5.0, 2);
  io::write_ground_truth(tmp.path() / "t.json", truth);
  const MixedMNL tb = io::read_ground_truth(tmp.path() / "t.json");
  EXPECT_EQ(tb.weights, truth.weights);
  EXPECT_EQ(tb.utilities, truth.utilities);
  EXPECT_EQ(tb.intensity, truth.intensity);

  std::vector<Observation> obs{{1, 0}, {inst.assortment(1).back(), 1}};
  io::write_observations(tmp.path() / "o.csv", obs);
  const auto ob = io::read_observations(tmp.path() / "o.csv", inst);
  ASSERT_EQ(ob.size(), 2u);
  EXPECT_EQ(ob[1].item, obs[1].item);
  EXPECT_EQ(ob[1].assortment, 1);
}

TEST(Io, Errors) {
  TempDir tmp;
  const Instance inst = Instance::build(3, {{1, 2}, {1, 2, 3}});
  io::write_text(tmp.path() / "c.csv", "assortment_id,item,cost\n1,2,0.5\n");
  EXPECT_EQ(io::read_costs(tmp.path() / "c.csv", inst), (std::vector<double>{0, 0.5, 0, 0, 0}));
  io::write_text(tmp.path() / "bad.csv", "assortment_id,item,cost\n1,3,0.5\n");
  EXPECT_THROW(io::read_costs(tmp.path() / "bad.csv", inst), ConfigError);
  io::write_text(tmp.path() / "ragged.csv", "a,b\n1\n");
  EXPECT_THROW(io::read_csv(tmp.path() / "ragged.csv"), ConfigError);
  io::write_text(tmp.path() / "p.csv", "assortment_id,item,prob\n1,1,1\n");
  EXPECT_THROW(io::read_choice_vector(tmp.path() / "p.csv", inst), ConfigError);
  EXPECT_THROW(io::read_text(tmp.path() / "missing.json"), ConfigError);
  EXPECT_THROW(io::write_text(tmp.path(), "x"), RuntimeError);
}

TEST(Config, FromJson) {
  const auto cfg = config_from_json(
      R"({"n": 8, "m_list": [10, 20], "distances": ["l1", "l2"], "kappas": [50, "inf"],
          "stop_train_mae": null, "algo": "fw", "distance": "sql2", "seed": 4})");
  EXPECT_EQ(cfg.n, 8);
  EXPECT_EQ(cfg.m_list, (std::vector<int>{10, 20}));
  ASSERT_EQ(cfg.kappas.size(), 2u);
  EXPECT_EQ(cfg.kappas[0], Kappa(50));
  EXPECT_EQ(cfg.kappas[1], std::nullopt);
  EXPECT_FALSE(cfg.stop_train_mae.has_value());
  EXPECT_EQ(cfg.algo, Algo::kFrankWolfe);
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_THROW(config_from_json(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(config_from_json("not json"), ConfigError);
  EXPECT_EQ(parse_kappa("inf"), std::nullopt);
  EXPECT_EQ(parse_kappa("∞"), std::nullopt);
  EXPECT_EQ(parse_kappa("50"), Kappa(50));
  EXPECT_THROW(parse_kappa("0"), ConfigError);
  EXPECT_THROW(parse_kappa("x"), ConfigError);
  EXPECT_THROW(parse_algo("sgd"), ConfigError);
}

TEST(Config, Validation) {
  ExperimentConfig cfg = small_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.m_train = 11;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.m_test = 40;  // 6 products offer only 41 subsets of size ≤ 3
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.algo = Algo::kFrankWolfe;
  cfg.distance = "l1";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Generate, DeterministicFiles) {
  TempDir a, b;
  const auto da = cmd_generate(small_config(), a.path());
  const auto db = cmd_generate(small_config(), b.path());
  ASSERT_EQ(da.size(), 2u);
  EXPECT_EQ(da[0].filename(), "instance_000");
  for (size_t i = 0; i < da.size(); ++i) {
    for (const char* f : {"truth.json", "train.json", "test.json", "p_train.csv", "p_test.csv"}) {
      EXPECT_EQ(slurp(da[i] / f), slurp(db[i] / f)) << f;
      EXPECT_FALSE(slurp(da[i] / f).empty());
    }
  }
  EXPECT_NE(slurp(da[0] / "p_train.csv"), slurp(da[1] / "p_train.csv"));
}

TEST(Generate, TrainSetsArePrefixesOfOnePool) {
  ExperimentConfig cfg = small_config();
  const auto full = [&] {
    cfg.m_train = 10;
    return generate_instance(cfg, 0);
  }();
  cfg.m_train = 4;
  const auto part = generate_instance(cfg, 0);
  EXPECT_EQ(part.train.m(), 4);
  EXPECT_EQ(full.test.assortments(), part.test.assortments());
  for (int j = 0; j < 4; ++j) {
    const auto a = part.train.assortment(j);
    const auto b = full.train.assortment(j);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
  EXPECT_EQ(part.train.n(), 7);
  EXPECT_EQ(part.test.m(), 10);
  EXPECT_EQ(part.p_train.values, exact_choice_vector(part.truth, part.train).values);
}

TEST(Generate, DirectoryRoundTrip) {
  TempDir tmp;
  const auto g = generate_instance(small_config(), 1);
  write_instance_dir(tmp.path(), g);
  const auto back = read_instance_dir(tmp.path());
  EXPECT_EQ(back.p_train.values, g.p_train.values);
  EXPECT_EQ(back.p_test.values, g.p_test.values);
  EXPECT_EQ(back.truth.utilities, g.truth.utilities);
}

TEST(Fit, DualL2StopsAtTheThreshold) {
  const auto g = generate_instance(small_config(), 0);
  FitSpec spec;
  spec.T = 5000;
  const FitOutcome out = run_fit(g, spec);
  ASSERT_TRUE(out.dual.has_value());
  EXPECT_TRUE(out.fit.stopped_by_rule);
  EXPECT_LE(out.fit.train_mae, 0.001);
  EXPECT_NEAR(mae(g.p_train.values, predict(g.train, out.fit.model).values), out.fit.train_mae,
              1e-12);
  const Summary s = summarize(g, spec, out);
  EXPECT_EQ(s.kappa, "static");
  EXPECT_EQ(s.sparsity, out.fit.model.sparsity());
  EXPECT_LE(s.certificate, s.certificate_bound);
}

TEST(Fit, FrankWolfeRejectsL1) {
  const auto g = generate_instance(small_config(), 0);
  FitSpec spec;
  spec.algo = Algo::kFrankWolfe;
  spec.distance = DistanceSpec::l1();
  EXPECT_THROW(run_fit(g, spec), ConfigError);
  spec.algo = Algo::kDual;
  spec.distance = DistanceSpec::squared_l2();
  EXPECT_THROW(run_fit(g, spec), ConfigError);
}

TEST(Fit, DynamicCountsObservations) {
  const auto g = generate_instance(small_config(), 0);
  FitSpec spec;
  spec.dynamic = true;
  spec.kappa = 50;
  spec.T = 40;
  spec.stop_train_mae.reset();
  spec.seed = 3;
  const FitOutcome out = run_fit(g, spec);
  EXPECT_EQ(out.fit.iterations_used, 40);
  EXPECT_EQ(out.fit.observations_used, 2000 + 50 * 39);
  const FitOutcome again = run_fit(g, spec);
  EXPECT_EQ(again.fit.prediction.values, out.fit.prediction.values);
}

TEST(Evaluate, ExactModelScoresZero) {
  Rng rng(62);
  auto g = generate_instance(small_config(), 0);
  const SparseModel model = testing::random_model(rng, 7, 3);
  g.p_test = predict(g.test, model);
  const EvalRow row = evaluate_model(g, model);
  EXPECT_EQ(row.test_mae, 0.0);
  EXPECT_EQ(row.sparsity, 3);
  EXPECT_THROW(evaluate_model(g, SparseModel{}), ConfigError);
  EXPECT_THROW(evaluate_model(g, testing::random_model(rng, 6, 2)), ConfigError);
}

TEST(Commands, FitThenEvaluate) {
  TempDir tmp;
  const auto dirs = cmd_generate(small_config(), tmp.path());
  FitSpec spec;
  const Summary s = cmd_fit(dirs[0], spec, tmp.path() / "fit");
  for (const char* f : {"model.json", "trace.csv", "summary.csv"}) {
    EXPECT_TRUE(fs::exists(tmp.path() / "fit" / f)) << f;
  }
  const auto trace = io::read_csv(tmp.path() / "fit" / "trace.csv");
  EXPECT_EQ(trace.header,
            (std::vector<std::string>{"t", "train_mae", "certificate_running", "sparsity"}));
  EXPECT_EQ(static_cast<int>(trace.rows.size()), s.iterations);
  const auto results = tmp.path() / "results.csv";
  const EvalRow row = cmd_evaluate(dirs[0], tmp.path() / "fit" / "model.json", results);
  cmd_evaluate(dirs[0], tmp.path() / "fit" / "model.json", results);
  EXPECT_NEAR(row.test_mae, *s.test_mae, 1e-15);
  const auto table = io::read_csv(results);
  EXPECT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.header,
            (std::vector<std::string>{"instance", "model", "MAE_test", "num_rankings"}));

  FitSpec fw;
  fw.algo = Algo::kFrankWolfe;
  fw.distance = DistanceSpec::squared_l2();
  cmd_fit(dirs[0], fw, tmp.path() / "fw");
  EXPECT_EQ(io::read_csv(tmp.path() / "fw" / "trace.csv").header,
            (std::vector<std::string>{"t", "objective", "sparsity"}));
}

TEST(Sweep, IndependentOfThreadCount) {
  ExperimentConfig cfg = small_config();
  cfg.m_list = {3, 6};
  cfg.distances = {"l1", "l2", "linf"};
  cfg.T = 300;
  cfg.threads = 1;
  const SweepResult one = run_sweep(cfg);
  cfg.threads = 4;
  const SweepResult four = run_sweep(cfg);
  EXPECT_EQ(sweep_csv(one), sweep_csv(four));
  EXPECT_EQ(runs_csv(one), runs_csv(four));
  ASSERT_EQ(one.cells.size(), 6u);
  EXPECT_EQ(one.cells[0].m_train, 3);
  EXPECT_EQ(one.cells[0].distance, "l1");
  EXPECT_EQ(one.cells[5].m_train, 6);
  EXPECT_EQ(one.cells[5].distance, "linf");
}

TEST(Sweep, SingleCellMatchesFitAndEvaluate) {
  ExperimentConfig cfg = small_config();
  cfg.n_instances = 1;
  cfg.T = 500;
  const SweepResult r = run_sweep(cfg);
  ASSERT_EQ(r.runs.size(), 1u);
  const auto g = generate_instance(cfg, 0);
  FitSpec spec;
  spec.T = 500;
  const FitOutcome out = run_fit(g, spec);
  EXPECT_EQ(*r.runs[0].test_mae, evaluate_model(g, out.fit.model).test_mae);
  EXPECT_EQ(r.cells[0].mae_test, *r.runs[0].test_mae);
  EXPECT_EQ(r.runs[0].iterations, out.fit.iterations_used);
}

TEST(Sweep, DynamicCellsCarryKappaLabels) {
  ExperimentConfig cfg = small_config();
  cfg.n_instances = 1;
  cfg.T = 100;
  cfg.kappas = {Kappa(50), std::nullopt};
  const SweepResult r = run_sweep(cfg);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_EQ(r.cells[0].kappa, "50");
  EXPECT_EQ(r.cells[1].kappa, kappa_label(std::nullopt));
}

TEST(Probe, RatiosAreReported) {
  const auto g = generate_instance(small_config(), 0);
  const std::vector<double> alphas{1e-1, 1e-2, 1e-3};
  const auto rows = run_probe(g, DistanceSpec::l1(), alphas, ProbeBase::kData, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[2].ratio, rows[0].ratio);
  const auto wkl = run_probe(g, DistanceSpec::parse("wkl", g.train.m()), {1e-3},
                             ProbeBase::kNearVertex, 1);
  EXPECT_GT(wkl[0].ratio, 1e3);
  EXPECT_EQ(probe_csv(rows).substr(0, 12), "alpha,ratio\n");
  EXPECT_THROW(parse_probe_base("mid"), ConfigError);
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  const std::string out = (tmp.path() / "inst").string();
  EXPECT_EQ(run_cli("generate --n 6 --kmix 3 --m-train 5 --m-test 10 --train-pool 10 "
                    "--instances 1 --seed 3 --out " + out),
            0);
  const std::string inst = out + "/instance_000";
  EXPECT_TRUE(fs::exists(inst + "/p_train.csv"));
  EXPECT_EQ(run_cli("fit-static --instance " + inst + " --T 300 --out " + tmp.path().string() + "/fit"), 0);
  EXPECT_EQ(run_cli("evaluate --instance " + inst + " --model " + tmp.path().string() +
                    "/fit/model.json"),
            0);
  EXPECT_EQ(run_cli("fit-dynamic --instance " + inst + " --kappa 50 --T 30 --out " +
                    tmp.path().string() + "/dyn"),
            0);
  EXPECT_EQ(run_cli("probe --instance " + inst + " --distance l2"), 0);

  // Configuration errors.
  EXPECT_EQ(run_cli("fit-static --instance " + inst + " --algo fw --distance l1"), 2);
  EXPECT_EQ(run_cli("generate --n 2 --out " + out), 2);
  EXPECT_EQ(run_cli("fit-static --instance " + inst + " --bogus"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("fit-dynamic --instance " + inst + " --kappa 0"), 2);
  io::write_text(tmp.path() / "empty.json", R"({"n": 7, "support": []})");
  EXPECT_EQ(run_cli("evaluate --instance " + inst + " --model " + (tmp.path() / "empty.json").string()), 2);

  // Runtime error: the exported model cannot be written to a directory.
  const Instance small = Instance::build(3, {{1, 2}, {1, 2, 3}});
  io::write_instance(tmp.path() / "small.json", small);
  io::write_costs(tmp.path() / "c.csv", small, {0.5, 0.2, 0.1, 0.4, 0.3});
  const std::string oracle = "oracle --instance " + (tmp.path() / "small.json").string() +
                             " --cost " + (tmp.path() / "c.csv").string();
  EXPECT_EQ(run_cli(oracle), 0);
  EXPECT_EQ(run_cli(oracle + " --method enum"), 0);
  EXPECT_EQ(run_cli(oracle + " --method lp"), 2);
  EXPECT_EQ(run_cli(oracle + " --export-ip " + tmp.path().string()), 3);
}

}  // namespace
}  // namespace npchoice
