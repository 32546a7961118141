#pragma once

// Dual estimation by regret minimization. For a norm distance, D(x, p) = max over the unit dual
// ball Y of <x − p, y>, so the estimation problem becomes maximizing the concave
// f(y, p) = min over X of <z, y> − <y, p>. Each iteration plays y^t, lets the oracle answer
// z^t = argmin <z, y^t>, and moves y by projected (Euclidean) ascent along z^t − p^t. The
// average of the answers z^t is the primal estimate; the realized regret of the played y^t
// bounds its optimality gap.

#include <optional>
#include <vector>

#include "npchoice/core.hpp"
#include "npchoice/distance.hpp"
#include "npchoice/fit.hpp"

namespace npchoice {

struct DualConfig {
  int T = 10000;
  std::optional<double> stop_train_mae = 0.001;
  DistanceSpec distance = DistanceSpec::l2();
  // Set width of Y and Euclidean gradient bound; default to set_width() and gradient_bound().
  std::optional<double> omega;
  std::optional<double> gradient_bound;

  // Throws ConfigError for T < 1, non-positive constants or a non-norm distance.
  void validate() const;
  double omega_for(const Instance& inst) const;
  double gradient_bound_for(const Instance& inst) const;
  // √(2Ω/T) / G, applied to unweighted gradients.
  double step_size(const Instance& inst) const;
};

struct DualState {
  std::vector<double> y;       // current dual point, inside Y
  std::vector<double> z_sum;   // Σ z^t
  std::vector<double> g_sum;   // Σ (z^t − p^t) on masked-in blocks
  double played_sum = 0.0;     // Σ f^t(y^t) = Σ <z^t − p^t, y^t>
  double best_played = 0.0;    // max_t f^t(y^t)
  int t = 0;
  ModelBuilder model;          // chosen rankings, weight 1 per selection
  std::optional<Ranking> last;

  // x^t = z_sum / t.
  std::vector<double> estimate() const;
};

DualState dual_init(const Instance& inst);

// One iteration with step size gamma > 0.
DualState dual_step(const Instance& inst, DualState state, const ChoiceVector& p,
                    const BlockMask& mask, const DistanceSpec& spec, double gamma);

// max over Y of (1/t) Σ f^t(y) − (1/t) Σ f^t(y^t) = ‖ḡ‖ − played_sum / t. Throws ConfigError
// for an empty history or a non-norm distance.
double regret_certificate(const DualState& state, const DistanceSpec& spec);

// Average-regret guarantee of projected ascent with constant step `gamma` after t steps from
// y^1 = 0: Ω/(γ t) + γ G²/2. With γ = √(2Ω/T)/G and t = T this is G √(2Ω/T).
double regret_bound(double omega, double gradient_bound, double gamma, int t);

struct DualFit {
  FitResult fit;
  double certificate = 0.0;
  double certificate_bound = 0.0;  // regret_bound at the iterations actually run
  double step_size = 0.0;
  double omega = 0.0;
  double gradient_bound = 0.0;
  double best_dual_value = 0.0;  // max_t f^t(y^t); a lower bound on min D for static data
};

// Runs up to T iterations from y^1 = 0, stopping once MAE(p̄^t, x^t) reaches the threshold.
// Throws ConfigError when the source is empty.
DualFit dual_run(const Instance& inst, const DualConfig& cfg, DataSource& data);

}  // namespace npchoice
