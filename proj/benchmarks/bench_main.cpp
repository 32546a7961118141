#include <benchmark/benchmark.h>

#include "npchoice/dual.hpp"
#include "npchoice/frank_wolfe.hpp"
#include "npchoice/oracle.hpp"
#include "npchoice/sim.hpp"
#include "support/gen.hpp"

namespace {

using namespace npchoice;

// Instances shaped like the simulation study: n products plus no-buy, m sampled assortments.
struct Setup {
  Instance inst;
  std::vector<double> costs;
  ChoiceVector p;

  Setup(int products, int m, std::uint64_t seed)
      : inst(Instance::build(products + 1, sample_assortments(products, m, seed))) {
    Rng rng(seed);
    costs = testing::random_vector(rng, inst.size(), -1, 1);
    p = exact_choice_vector(gen_mmnl(products, 5, 5.0, seed), inst);
  }
};

void BM_OracleBnb(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1);
  std::int64_t nodes = 0;
  for (auto _ : state) {
    const auto r = solve_bnb(s.inst, s.costs);
    nodes += r.nodes_explored;
    benchmark::DoNotOptimize(r.value);
  }
  state.counters["nodes"] = benchmark::Counter(static_cast<double>(nodes),
                                               benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_OracleBnb)->Args({6, 10})->Args({9, 20})->Args({10, 20})->Args({10, 50});

void BM_OracleEnum(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_enum(s.inst, s.costs).value);
}
BENCHMARK(BM_OracleEnum)->Args({6, 10})->Args({7, 20})->Unit(benchmark::kMillisecond);

void BM_FrankWolfeStep(benchmark::State& state) {
  const Setup s(10, static_cast<int>(state.range(0)), 2);
  const auto x = vertex(s.inst, Ranking::identity(s.inst.n()));
  const auto mask = full_mask(s.inst);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fw_step(s.inst, x, s.p, mask, 5, DistanceSpec::squared_l2()).gamma);
  }
}
BENCHMARK(BM_FrankWolfeStep)->Arg(20)->Arg(50);

void BM_DualStep(benchmark::State& state) {
  const Setup s(10, static_cast<int>(state.range(0)), 3);
  const auto mask = full_mask(s.inst);
  const DistanceSpec spec = DistanceSpec::l2();
  DualState warm = dual_init(s.inst);
  for (int t = 0; t < 50; ++t) warm = dual_step(s.inst, std::move(warm), s.p, mask, spec, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dual_step(s.inst, warm, s.p, mask, spec, 0.01).t);
  }
}
BENCHMARK(BM_DualStep)->Arg(20)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
