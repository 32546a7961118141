#pragma once

// Primal estimation by Frank-Wolfe over the choice polytope, for static data (the same p every
// iteration) or a stream of data vectors p^t. Only distances with a finite curvature constant
// are accepted, which in this library means SquaredL2.

#include <optional>

#include "npchoice/core.hpp"
#include "npchoice/distance.hpp"
#include "npchoice/fit.hpp"

namespace npchoice {

struct FwConfig {
  int T = 10000;  // x^1 plus at most T − 1 steps
  std::optional<double> stop_train_mae = 0.001;
  DistanceSpec distance = DistanceSpec::squared_l2();
  std::optional<Ranking> init;  // identity when unset

  // Throws ConfigError for T < 1, a non-positive threshold, or a distance whose curvature
  // constant is infinite (plain norms, weighted KL).
  void validate() const;
};

struct FwStep {
  ChoiceVector next;  // x^{t+1}
  Ranking chosen;     // vertex z^t
  double gamma = 0.0;
  double oracle_value = 0.0;
};

// One iteration: z^t = argmin over X of <∇D(x^t, p^t), z>, then x^{t+1} = (1 − γ)x^t + γ z^t
// with γ = 2/(t + 1). `hint` only warm-starts the oracle.
FwStep fw_step(const Instance& inst, const ChoiceVector& x, const ChoiceVector& p,
               const BlockMask& mask, int t, const DistanceSpec& spec,
               const Ranking* hint = nullptr);

// Runs fw_step for t = 1..T−1, stopping early once MAE(p̄^t, x^{t+1}) reaches the threshold,
// where p̄^t averages the data vectors drawn so far. Throws ConfigError when the source is empty.
FitResult fw_run(const Instance& inst, const FwConfig& cfg, DataSource& data);

}  // namespace npchoice
