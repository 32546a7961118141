#include "npchoice/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npchoice/errors.hpp"
#include "npchoice/oracle.hpp"

namespace npchoice {

void DualConfig::validate() const {
  if (T < 1) throw ConfigError("dual solver needs T >= 1");
  if (stop_train_mae && !(*stop_train_mae > 0.0)) {
    throw ConfigError("stopping threshold must be positive");
  }
  if (!distance.supports_dual()) {
    throw ConfigError("dual solver needs a norm distance (l1, l2, linf), got '" +
                      distance.name() + "'");
  }
  if (omega && !(*omega > 0.0)) throw ConfigError("set width must be positive");
  if (gradient_bound && !(*gradient_bound > 0.0)) throw ConfigError("gradient bound must be positive");
}

double DualConfig::omega_for(const Instance& inst) const {
  return omega ? *omega : set_width(distance, inst.size());
}

double DualConfig::gradient_bound_for(const Instance& inst) const {
  return gradient_bound ? *gradient_bound : npchoice::gradient_bound(inst);
}

double DualConfig::step_size(const Instance& inst) const {
  return std::sqrt(2.0 * omega_for(inst) / T) / gradient_bound_for(inst);
}

std::vector<double> DualState::estimate() const {
  std::vector<double> x(z_sum.size(), 0.0);
  if (t == 0) return x;
  for (size_t k = 0; k < x.size(); ++k) x[k] = z_sum[k] / t;
  return x;
}

DualState dual_init(const Instance& inst) {
  DualState s;
  s.y.assign(inst.size(), 0.0);
  s.z_sum.assign(inst.size(), 0.0);
  s.g_sum.assign(inst.size(), 0.0);
  s.best_played = -std::numeric_limits<double>::infinity();
  return s;
}

DualState dual_step(const Instance& inst, DualState state, const ChoiceVector& p,
                    const BlockMask& mask, const DistanceSpec& spec, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("step size must be positive");
  if (!spec.supports_dual()) throw ConfigError("dual step needs a norm distance");

  std::vector<double> cost(inst.size(), 0.0);
  for (int j = 0; j < inst.m(); ++j) {
    if (!mask[j]) continue;
    for (int k = inst.offset(j); k < inst.offset(j + 1); ++k) cost[k] = state.y[k];
  }
  const OracleResult answer =
      solve_bnb(inst, cost, state.last ? &*state.last : nullptr);
  const ChoiceVector z = vertex(inst, answer.ranking);

  std::vector<double> g(inst.size(), 0.0);
  double played = 0.0;
  for (int j = 0; j < inst.m(); ++j) {
    if (!mask[j]) continue;
    for (int k = inst.offset(j); k < inst.offset(j + 1); ++k) {
      g[k] = z[k] - p[k];
      played += g[k] * state.y[k];
    }
  }
  for (int k = 0; k < inst.size(); ++k) {
    state.z_sum[k] += z[k];
    state.g_sum[k] += g[k];
    g[k] = state.y[k] + gamma * g[k];
  }
  state.y = dual_project(spec, g);
  state.played_sum += played;
  state.best_played = std::max(state.best_played, played);
  state.model.add(answer.ranking, 1.0);
  state.last = answer.ranking;
  ++state.t;
  return state;
}

double regret_certificate(const DualState& state, const DistanceSpec& spec) {
  if (state.t == 0) throw ConfigError("regret certificate needs at least one iteration");
  if (!spec.is_norm()) throw ConfigError("regret certificate is only defined for norm distances");
  std::vector<double> mean(state.g_sum.size());
  for (size_t k = 0; k < mean.size(); ++k) mean[k] = state.g_sum[k] / state.t;
  return primal_norm(spec.kind(), mean) - state.played_sum / state.t;
}

double regret_bound(double omega, double gradient_bound, double gamma, int t) {
  return omega / (gamma * t) + 0.5 * gamma * gradient_bound * gradient_bound;
}

DualFit dual_run(const Instance& inst, const DualConfig& cfg, DataSource& data) {
  cfg.validate();
  DualFit out;
  out.omega = cfg.omega_for(inst);
  out.gradient_bound = cfg.gradient_bound_for(inst);
  out.step_size = cfg.step_size(inst);

  FitResult& result = out.fit;
  RunningAverage average(inst);
  DualState state = dual_init(inst);

  for (int t = 1; t <= cfg.T; ++t) {
    auto snapshot = data.next();
    if (!snapshot) {
      if (t == 1) throw ConfigError("data source yielded no data");
      break;
    }
    average.add(*snapshot);
    ++result.data_snapshots_used;
    result.observations_used = snapshot->observations;

    state = dual_step(inst, std::move(state), snapshot->p, snapshot->mask, cfg.distance,
                      out.step_size);
    result.iterations_used = t;

    TraceRow row;
    row.t = t;
    row.train_mae = masked_mae(inst, average.mean(), state.estimate(), average.mask());
    row.certificate = regret_certificate(state, cfg.distance);
    row.sparsity = state.model.sparsity();
    result.trace.push_back(row);
    result.train_mae = row.train_mae;

    if (cfg.stop_train_mae && row.train_mae <= *cfg.stop_train_mae) {
      result.stopped_by_rule = true;
      break;
    }
  }

  out.certificate = regret_certificate(state, cfg.distance);
  out.certificate_bound = regret_bound(out.omega, out.gradient_bound, out.step_size, state.t);
  out.best_dual_value = state.best_played;
  result.model = state.model.build();
  result.prediction = predict(inst, result.model);
  return out;
}

}  // namespace npchoice
