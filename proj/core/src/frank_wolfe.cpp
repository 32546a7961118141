#include "npchoice/frank_wolfe.hpp"

#include "npchoice/errors.hpp"
#include "npchoice/oracle.hpp"

namespace npchoice {

void FwConfig::validate() const {
  if (T < 1) throw ConfigError("Frank-Wolfe needs T >= 1");
  if (stop_train_mae && !(*stop_train_mae > 0.0)) {
    throw ConfigError("stopping threshold must be positive");
  }
  if (!distance.supports_fw()) {
    throw ConfigError("Frank-Wolfe cannot use distance '" + distance.name() +
                      "': its curvature constant is infinite; use sql2");
  }
}

FwStep fw_step(const Instance& inst, const ChoiceVector& x, const ChoiceVector& p,
               const BlockMask& mask, int t, const DistanceSpec& spec, const Ranking* hint) {
  if (t < 1) throw ConfigError("Frank-Wolfe iterations start at t = 1");
  const auto grad = subgradient(spec, inst, x.values, p.values, mask);
  OracleResult vertex_choice = solve_bnb(inst, grad, hint);
  const ChoiceVector z = vertex(inst, vertex_choice.ranking);

  const double gamma = 2.0 / (t + 1.0);
  ChoiceVector next{std::vector<double>(x.size()), true};
  for (size_t k = 0; k < x.size(); ++k) next[k] = (1.0 - gamma) * x[k] + gamma * z[k];
  return {std::move(next), std::move(vertex_choice.ranking), gamma, vertex_choice.value};
}

FitResult fw_run(const Instance& inst, const FwConfig& cfg, DataSource& data) {
  cfg.validate();
  const Ranking start = cfg.init ? *cfg.init : Ranking::identity(inst.n());

  auto snapshot = data.next();
  if (!snapshot) throw ConfigError("data source yielded no data");

  FitResult result;
  RunningAverage average(inst);
  ModelBuilder model;
  model.add(start, 1.0);
  ChoiceVector x = vertex(inst, start);
  Ranking last = start;

  average.add(*snapshot);
  result.data_snapshots_used = 1;
  result.observations_used = snapshot->observations;
  result.train_mae = masked_mae(inst, average.mean(), x.values, average.mask());

  for (int t = 1; t <= cfg.T - 1; ++t) {
    if (t > 1) {
      snapshot = data.next();
      if (!snapshot) break;
      average.add(*snapshot);
      ++result.data_snapshots_used;
      result.observations_used = snapshot->observations;
    }
    FwStep step = fw_step(inst, x, snapshot->p, snapshot->mask, t, cfg.distance, &last);
    model.scale(1.0 - step.gamma);
    model.add(step.chosen, step.gamma);
    x = std::move(step.next);
    last = std::move(step.chosen);
    result.iterations_used = t;

    TraceRow row;
    row.t = t;
    row.objective = value(cfg.distance, inst, x.values, snapshot->p.values, snapshot->mask);
    row.train_mae = masked_mae(inst, average.mean(), x.values, average.mask());
    row.sparsity = model.sparsity();
    result.trace.push_back(row);
    result.train_mae = row.train_mae;

    if (cfg.stop_train_mae && row.train_mae <= *cfg.stop_train_mae) {
      result.stopped_by_rule = true;
      break;
    }
  }

  result.model = model.build();
  result.prediction = predict(inst, result.model);
  return result;
}

}  // namespace npchoice
