#include "npchoice/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "npchoice/errors.hpp"

namespace npchoice {

Instance Instance::build(int n, std::vector<std::vector<int>> assortments) {
  if (n < 2) throw ConfigError("instance needs at least 2 items, got " + std::to_string(n));
  if (assortments.empty()) throw ConfigError("instance needs at least one assortment");

  Instance inst;
  inst.n_ = n;
  std::set<std::vector<int>> seen;
  for (size_t j = 0; j < assortments.size(); ++j) {
    auto& set = assortments[j];
    if (set.empty()) throw ConfigError("assortment " + std::to_string(j + 1) + " is empty");
    for (int item : set) {
      if (item < 1 || item > n) {
        throw ConfigError("assortment " + std::to_string(j + 1) + " has item " +
                          std::to_string(item) + " outside [1, " + std::to_string(n) + "]");
      }
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    if (set.front() != kNoBuyItem) {
      set.insert(set.begin(), kNoBuyItem);
      inst.inserted_no_buy_ = true;
    }
    if (!seen.insert(set).second) {
      throw ConfigError("assortment " + std::to_string(j + 1) + " duplicates an earlier one");
    }
  }

  inst.sets_ = std::move(assortments);
  const int m = static_cast<int>(inst.sets_.size());
  inst.table_.assign(static_cast<size_t>(m) * (n + 1), -1);
  for (int j = 0; j < m; ++j) {
    for (int item : inst.sets_[j]) {
      inst.table_[static_cast<size_t>(j) * (n + 1) + item] = static_cast<int>(inst.items_.size());
      inst.items_.push_back(item);
      inst.owner_.push_back(j);
    }
    inst.offsets_.push_back(static_cast<int>(inst.items_.size()));
  }
  return inst;
}

Ranking::Ranking(std::vector<int> order) : order_(std::move(order)) {
  const int n = static_cast<int>(order_.size());
  std::vector<bool> hit(n + 1, false);
  for (int item : order_) {
    if (item < 1 || item > n || hit[item]) {
      throw ConfigError("ranking is not a permutation of 1.." + std::to_string(n));
    }
    hit[item] = true;
  }
}

Ranking Ranking::identity(int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 1);
  return Ranking(std::move(order));
}

std::vector<int> Ranking::positions() const {
  std::vector<int> pos(order_.size() + 1, 0);
  for (size_t k = 0; k < order_.size(); ++k) pos[order_[k]] = static_cast<int>(k);
  return pos;
}

void SparseModel::validate(int n) const {
  if (support.empty()) throw ConfigError("model has empty support");
  double sum = 0.0;
  std::set<std::vector<int>> seen;
  for (const auto& [ranking, weight] : support) {
    if (ranking.n() != n) {
      throw ConfigError("model ranking has " + std::to_string(ranking.n()) + " items, expected " +
                        std::to_string(n));
    }
    if (!(weight > 0.0)) throw ConfigError("model weights must be positive");
    if (!seen.insert(ranking.order()).second) throw ConfigError("model repeats a ranking");
    sum += weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("model weights sum to " + std::to_string(sum));
}

int top_choice(const Instance& inst, std::span<const int> positions, int j) {
  int best = -1;
  int best_pos = inst.n() + 1;
  for (int item : inst.assortment(j)) {
    if (positions[item] < best_pos) {
      best_pos = positions[item];
      best = item;
    }
  }
  return inst.pair_index(j, best);
}

ChoiceVector vertex(const Instance& inst, const Ranking& r) {
  if (r.n() != inst.n()) {
    throw ConfigError("ranking over " + std::to_string(r.n()) + " items used with an instance of " +
                      std::to_string(inst.n()));
  }
  const auto pos = r.positions();
  ChoiceVector out{std::vector<double>(inst.size(), 0.0), true};
  for (int j = 0; j < inst.m(); ++j) out[top_choice(inst, pos, j)] = 1.0;
  return out;
}

ChoiceVector predict(const Instance& inst, const SparseModel& model) {
  ChoiceVector out{std::vector<double>(inst.size(), 0.0), true};
  for (const auto& [ranking, weight] : model.support) {
    if (ranking.n() != inst.n()) throw ConfigError("model does not match instance item count");
    const auto pos = ranking.positions();
    for (int j = 0; j < inst.m(); ++j) out[top_choice(inst, pos, j)] += weight;
  }
  return out;
}

void record_observations(EmpiricalStats& stats, const Instance& inst,
                         std::span<const Observation> obs) {
  for (const auto& o : obs) {
    if (o.assortment < 0 || o.assortment >= inst.m()) {
      throw ConfigError("observation references unknown assortment " +
                        std::to_string(o.assortment + 1));
    }
    if (o.item < 1 || o.item > inst.n() || !inst.contains(o.assortment, o.item)) {
      throw ConfigError("item " + std::to_string(o.item) + " is not offered in assortment " +
                        std::to_string(o.assortment + 1));
    }
  }
  for (const auto& o : obs) {
    ++stats.counts_pair[inst.pair_index(o.assortment, o.item)];
    ++stats.counts_assort[o.assortment];
  }
  stats.total += static_cast<std::int64_t>(obs.size());
}

MaskedChoice empirical_probs(const Instance& inst, const EmpiricalStats& stats) {
  MaskedChoice out{{std::vector<double>(inst.size(), 0.0), false}, BlockMask(inst.m(), false)};
  for (int j = 0; j < inst.m(); ++j) {
    const auto shown = stats.counts_assort[j];
    if (shown == 0) continue;
    out.mask[j] = true;
    for (int k = inst.offset(j); k < inst.offset(j + 1); ++k) {
      out.p[k] = static_cast<double>(stats.counts_pair[k]) / static_cast<double>(shown);
    }
  }
  return out;
}

double mae(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ConfigError("mae: length mismatch " + std::to_string(p.size()) + " vs " +
                      std::to_string(q.size()));
  }
  if (p.empty()) return 0.0;
  double sum = 0.0;
  for (size_t k = 0; k < p.size(); ++k) sum += std::abs(p[k] - q[k]);
  return sum / static_cast<double>(p.size());
}

double masked_mae(const Instance& inst, std::span<const double> p, std::span<const double> q,
                  const BlockMask& mask) {
  double sum = 0.0;
  int count = 0;
  for (int j = 0; j < inst.m(); ++j) {
    if (!mask[j]) continue;
    for (int k = inst.offset(j); k < inst.offset(j + 1); ++k) sum += std::abs(p[k] - q[k]);
    count += inst.block_size(j);
  }
  return count == 0 ? 0.0 : sum / count;
}

double block_sum_error(const Instance& inst, std::span<const double> x) {
  double worst = 0.0;
  for (int j = 0; j < inst.m(); ++j) {
    double s = 0.0;
    for (int k = inst.offset(j); k < inst.offset(j + 1); ++k) s += x[k];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

}  // namespace npchoice
