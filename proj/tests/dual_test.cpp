#include <gtest/gtest.h>

#include <cmath>

#include "npchoice/dual.hpp"
#include "npchoice/errors.hpp"
#include "support/gen.hpp"

namespace npchoice {
namespace {

using testing::random_instance;
using testing::random_point;
using testing::random_vector;

Instance small() { return Instance::build(3, {{1, 2}, {1, 2, 3}}); }

std::vector<DistanceSpec> norms() {
  return {DistanceSpec::l1(), DistanceSpec::l2(), DistanceSpec::linf()};
}

TEST(DualConfig, Validation) {
  DualConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.distance = DistanceSpec::squared_l2();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.distance = DistanceSpec::weighted_kl(std::vector<double>{1.0});
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = DualConfig{};
  cfg.T = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = DualConfig{};
  cfg.omega = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = DualConfig{};
  cfg.gradient_bound = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(DualConfig, StepSize) {
  const Instance inst = small();
  DualConfig cfg;
  cfg.T = 100;
  // Ω = ½ and G = √(2m) = 2.
  EXPECT_DOUBLE_EQ(cfg.step_size(inst), std::sqrt(1.0 / 100) / 2.0);
  cfg.distance = DistanceSpec::l1();
  // Ω = N/2 = 2.5.
  EXPECT_DOUBLE_EQ(cfg.step_size(inst), std::sqrt(5.0 / 100) / 2.0);
  const double g = cfg.step_size(inst);
  EXPECT_NEAR(regret_bound(2.5, 2.0, g, 100), 2.0 * std::sqrt(5.0 / 100), 1e-15);
}

TEST(DualStep, HandExample) {
  const Instance inst = small();
  const ChoiceVector p{{0, 1, 0, 0, 1}, true};
  const DualState s =
      dual_step(inst, dual_init(inst), p, full_mask(inst), DistanceSpec::l1(), 0.1);
  // y¹ = 0 so the oracle returns the identity; g = a(identity) − p.
  const std::vector<double> expected{0.1, -0.1, 0.1, 0.0, -0.1};
  ASSERT_EQ(s.y.size(), expected.size());
  for (size_t k = 0; k < expected.size(); ++k) EXPECT_DOUBLE_EQ(s.y[k], expected[k]);
  EXPECT_EQ(s.t, 1);
  EXPECT_EQ(s.played_sum, 0.0);
  EXPECT_EQ(s.estimate(), (std::vector<double>{1, 0, 1, 0, 0}));
  EXPECT_EQ(s.model.sparsity(), 1);
  EXPECT_THROW(dual_step(inst, dual_init(inst), p, full_mask(inst), DistanceSpec::l1(), 0.0),
               ConfigError);
  EXPECT_THROW(dual_step(inst, dual_init(inst), p, full_mask(inst), DistanceSpec::squared_l2(), 0.1),
               ConfigError);
}

TEST(DualStep, ProjectionKeepsIterateInTheBall) {
  const Instance inst = small();
  const ChoiceVector p{{0, 1, 0, 0, 1}, true};
  const std::vector<double> g{1, -1, 1, 0, -1};
  // L1: box clip.
  auto s = dual_step(inst, dual_init(inst), p, full_mask(inst), DistanceSpec::l1(), 10.0);
  EXPECT_EQ(s.y, g);
  // L2: radial scaling onto the unit sphere.
  s = dual_step(inst, dual_init(inst), p, full_mask(inst), DistanceSpec::l2(), 10.0);
  for (size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(s.y[k], g[k] / 2.0, 1e-15);
  // Linf: ℓ1 ball, equal magnitudes shrink evenly.
  s = dual_step(inst, dual_init(inst), p, full_mask(inst), DistanceSpec::linf(), 10.0);
  for (size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(s.y[k], g[k] / 4.0, 1e-15);
}

TEST(DualStep, MaskedBlocksAreIgnored) {
  const Instance inst = small();
  const ChoiceVector p{{0, 1, 0, 0, 1}, true};
  const BlockMask mask{false, true};
  const auto s = dual_step(inst, dual_init(inst), p, mask, DistanceSpec::l1(), 0.1);
  EXPECT_EQ(s.y[0], 0.0);
  EXPECT_EQ(s.y[1], 0.0);
  EXPECT_DOUBLE_EQ(s.y[2], 0.1);
  EXPECT_DOUBLE_EQ(s.g_sum[4], -1.0);
  EXPECT_EQ(s.g_sum[0], 0.0);
  // z_sum still counts the whole vertex.
  EXPECT_EQ(s.z_sum[0], 1.0);
}

TEST(Certificate, FirstIterationIsTheDistanceOfTheFirstVertex) {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance inst = random_instance(rng, static_cast<int>(rng.uniform_int(3, 7)), 6);
    const auto p = random_point(rng, inst);
    for (const auto& spec : norms()) {
      const auto s = dual_step(inst, dual_init(inst), p, full_mask(inst), spec, 0.05);
      const auto z = vertex(inst, Ranking::identity(inst.n()));
      EXPECT_NEAR(regret_certificate(s, spec), value(spec, inst, z.values, p.values, full_mask(inst)),
                  1e-12);
    }
  }
  EXPECT_THROW(regret_certificate(dual_init(small()), DistanceSpec::l2()), ConfigError);
}

// max over Y of (1/t) Σ <g^s, y − y^s>, found by brute force: box corners for L1, the 2N
// signed unit vectors for Linf, and dense sampling of the sphere for L2.
TEST(Certificate, AgreesWithSearchOverTheDualBall) {
  const Instance inst = small();
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p1 = random_point(rng, inst, 3);
    const auto p2 = random_point(rng, inst, 3);
    for (const auto& spec : norms()) {
      DualState s = dual_init(inst);
      std::vector<std::vector<double>> gs, ys;
      for (const auto& p : {p1, p2}) {
        ys.push_back(s.y);
        const DualState before = s;
        s = dual_step(inst, s, p, full_mask(inst), spec, 0.3);
        std::vector<double> g(5);
        for (int k = 0; k < 5; ++k) g[k] = s.z_sum[k] - before.z_sum[k] - p[k];
        gs.push_back(g);
      }
      auto avg_regret = [&](const std::vector<double>& y) {
        double r = 0.0;
        for (size_t i = 0; i < gs.size(); ++i) {
          for (int k = 0; k < 5; ++k) r += gs[i][k] * (y[k] - ys[i][k]);
        }
        return r / gs.size();
      };
      double best = -1e300;
      if (spec.kind() == DistanceKind::kL1) {
        for (int mask = 0; mask < 32; ++mask) {
          std::vector<double> y(5);
          for (int k = 0; k < 5; ++k) y[k] = (mask >> k & 1) ? 1.0 : -1.0;
          best = std::max(best, avg_regret(y));
        }
      } else if (spec.kind() == DistanceKind::kLinf) {
        for (int k = 0; k < 5; ++k) {
          for (double sgn : {-1.0, 1.0}) {
            std::vector<double> y(5, 0.0);
            y[k] = sgn;
            best = std::max(best, avg_regret(y));
          }
        }
      } else {
        for (int draw = 0; draw < 200000; ++draw) {
          auto y = random_vector(rng, 5, -1, 1);
          double norm = 0.0;
          for (double v : y) norm += v * v;
          norm = std::sqrt(norm);
          for (double& v : y) v /= norm;
          best = std::max(best, avg_regret(y));
        }
      }
      const double cert = regret_certificate(s, spec);
      if (spec.kind() == DistanceKind::kL2) {
        EXPECT_LE(best, cert + 1e-12);
        EXPECT_GE(best, cert - 0.02);
      } else {
        EXPECT_NEAR(best, cert, 1e-12) << spec.name();
      }
    }
  }
}

TEST(DualRun, CertificateWithinBoundProperty) {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = random_instance(rng, static_cast<int>(rng.uniform_int(3, 7)),
                                          static_cast<int>(rng.uniform_int(1, 10)));
    const auto p = random_point(rng, inst);
    for (const auto& spec : norms()) {
      DualConfig cfg;
      cfg.distance = spec;
      cfg.T = static_cast<int>(rng.uniform_int(1, 300));
      if (trial % 2 == 0) cfg.stop_train_mae.reset();
      StaticSource src(inst, p);
      const DualFit f = dual_run(inst, cfg, src);
      EXPECT_LE(f.certificate, f.certificate_bound + 1e-9);
      EXPECT_GE(f.certificate, -1e-12);
      for (const auto& row : f.fit.trace) {
        EXPECT_LE(row.certificate,
                  regret_bound(f.omega, f.gradient_bound, f.step_size, row.t) + 1e-9);
        EXPECT_LE(row.sparsity, row.t);
      }
      if (!cfg.stop_train_mae) {
        EXPECT_EQ(f.fit.iterations_used, cfg.T);
      }
    }
  }
}

// Static data: avg played ≤ best played ≤ min D ≤ D(x̄, p) = avg played + certificate. With p in
// the polytope min D = 0.
TEST(DualRun, WeakDualitySandwichProperty) {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = random_instance(rng, static_cast<int>(rng.uniform_int(3, 6)), 5);
    const auto p = random_point(rng, inst);
    for (const auto& spec : norms()) {
      DualConfig cfg;
      cfg.distance = spec;
      cfg.T = 200;
      cfg.stop_train_mae.reset();
      StaticSource src(inst, p);
      const DualFit f = dual_run(inst, cfg, src);
      const double d = value(spec, inst, f.fit.prediction.values, p.values, full_mask(inst));
      EXPECT_LE(f.best_dual_value, 1e-12);
      EXPECT_LE(d, f.certificate + 1e-9);
      EXPECT_LE(d - f.certificate, f.best_dual_value + 1e-9);
    }
  }
}

TEST(DualRun, L1ReachesTheGuaranteedAccuracy) {
  const Instance inst = small();
  Rng rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_point(rng, inst, 3);
    DualConfig cfg;
    cfg.distance = DistanceSpec::l1();
    cfg.T = 2000;
    cfg.stop_train_mae.reset();
    StaticSource src(inst, p);
    const DualFit f = dual_run(inst, cfg, src);
    // G √(2Ω/T) = 2 √(5/2000) = 0.1.
    EXPECT_NEAR(f.certificate_bound, 0.1, 1e-12);
    EXPECT_LE(value(cfg.distance, inst, f.fit.prediction.values, p.values, full_mask(inst)), 0.1);
  }
}

TEST(DualRun, ReplayOfConstantDataMatchesStatic) {
  Rng rng(46);
  const Instance inst = random_instance(rng, 6, 8);
  const auto p = random_point(rng, inst);
  DualConfig cfg;
  cfg.T = 150;
  cfg.stop_train_mae.reset();
  StaticSource fixed(inst, p);
  ReplaySource replay(std::vector<Snapshot>(150, Snapshot{p, full_mask(inst), 0}));
  const DualFit a = dual_run(inst, cfg, fixed);
  const DualFit b = dual_run(inst, cfg, replay);
  EXPECT_EQ(a.certificate, b.certificate);
  EXPECT_EQ(a.fit.prediction.values, b.fit.prediction.values);
  ASSERT_EQ(a.fit.trace.size(), b.fit.trace.size());
  for (size_t i = 0; i < a.fit.trace.size(); ++i) {
    EXPECT_EQ(a.fit.trace[i].train_mae, b.fit.trace[i].train_mae);
  }
}

TEST(DualRun, StopRuleAndEmptySource) {
  Rng rng(47);
  const Instance inst = random_instance(rng, 5, 6);
  const auto p = random_point(rng, inst);
  StaticSource src(inst, p);
  const DualFit f = dual_run(inst, DualConfig{}, src);
  ASSERT_TRUE(f.fit.stopped_by_rule);
  EXPECT_LE(f.fit.train_mae, 0.001);
  EXPECT_EQ(static_cast<int>(f.fit.trace.size()), f.fit.iterations_used);
  for (size_t i = 0; i + 1 < f.fit.trace.size(); ++i) EXPECT_GT(f.fit.trace[i].train_mae, 0.001);
  ReplaySource empty({});
  EXPECT_THROW(dual_run(inst, DualConfig{}, empty), ConfigError);
}

}  // namespace
}  // namespace npchoice
