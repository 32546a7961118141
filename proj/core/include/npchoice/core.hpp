#pragma once

// Problem instances, rankings, choice vectors and empirical statistics.
//
// Items are 1-based (item 1 is the no-buy option and belongs to every assortment).
// Assortments are 0-based internally; file formats use 1-based assortment ids.
// Every length-N vector is laid out assortment-major, item-ascending within an assortment.

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace npchoice {

constexpr int kNoBuyItem = 1;

class Instance {
 public:
  // Builds an instance over items 1..n. The no-buy item is inserted into any assortment
  // lacking it and every assortment is sorted. Throws ConfigError for n < 2, empty sets,
  // items outside [n] and duplicate assortments.
  static Instance build(int n, std::vector<std::vector<int>> assortments);

  int n() const { return n_; }
  int m() const { return static_cast<int>(offsets_.size()) - 1; }
  // Total number of (item, assortment) pairs.
  int size() const { return offsets_.back(); }

  std::span<const int> assortment(int j) const {
    return {items_.data() + offsets_[j], static_cast<size_t>(block_size(j))};
  }
  int offset(int j) const { return offsets_[j]; }
  int block_size(int j) const { return offsets_[j + 1] - offsets_[j]; }

  // Flat pair index of item i in assortment j, or -1 when i is not a member.
  int pair_index(int j, int item) const { return table_[static_cast<size_t>(j) * (n_ + 1) + item]; }
  bool contains(int j, int item) const { return pair_index(j, item) >= 0; }
  int item_at(int k) const { return items_[k]; }
  int assortment_of(int k) const { return owner_[k]; }

  const std::vector<std::vector<int>>& assortments() const { return sets_; }

  // Whether build() had to insert the no-buy item anywhere.
  bool inserted_no_buy() const { return inserted_no_buy_; }

 private:
  Instance() = default;

  int n_ = 0;
  std::vector<std::vector<int>> sets_;
  std::vector<int> offsets_{0};
  std::vector<int> items_;
  std::vector<int> owner_;
  std::vector<int> table_;
  bool inserted_no_buy_ = false;
};

inline Instance build_instance(int n, std::vector<std::vector<int>> assortments) {
  return Instance::build(n, std::move(assortments));
}

// A strict preference order, most preferred item first.
class Ranking {
 public:
  Ranking() = default;
  // Throws ConfigError unless `order` is a permutation of 1..order.size().
  explicit Ranking(std::vector<int> order);

  static Ranking identity(int n);

  const std::vector<int>& order() const { return order_; }
  int n() const { return static_cast<int>(order_.size()); }
  // position()[i] is the rank of item i (0 = top); index 0 unused.
  std::vector<int> positions() const;

  auto operator<=>(const Ranking&) const = default;
  bool operator==(const Ranking&) const = default;

 private:
  std::vector<int> order_;
};

struct ChoiceVector {
  std::vector<double> values;
  // Set when the vector is a convex combination of vertices (every block sums to 1).
  bool model_consistent = false;

  size_t size() const { return values.size(); }
  double operator[](size_t k) const { return values[k]; }
  double& operator[](size_t k) { return values[k]; }
};

// Per-assortment flag; false blocks carry no data and are ignored by the solvers.
using BlockMask = std::vector<bool>;

inline BlockMask full_mask(const Instance& inst) { return BlockMask(inst.m(), true); }

struct WeightedRanking {
  Ranking ranking;
  double weight = 0.0;
};

struct SparseModel {
  std::vector<WeightedRanking> support;

  int sparsity() const { return static_cast<int>(support.size()); }
  // Throws ConfigError unless weights are positive, sum to 1 within 1e-9, rankings are
  // distinct and each ranks exactly n items.
  void validate(int n) const;
};

struct Observation {
  int item = 0;
  int assortment = 0;  // 0-based
};

class EmpiricalStats {
 public:
  explicit EmpiricalStats(const Instance& inst)
      : counts_pair(inst.size(), 0), counts_assort(inst.m(), 0) {}

  std::vector<std::int64_t> counts_pair;    // per flat pair index
  std::vector<std::int64_t> counts_assort;  // per assortment
  std::int64_t total = 0;
};

struct MaskedChoice {
  ChoiceVector p;
  BlockMask mask;
};

// a(σ): one per assortment at the member ranked highest by r.
ChoiceVector vertex(const Instance& inst, const Ranking& r);

// Index (flat pair index) of the member of assortment j chosen under r, given r.positions().
int top_choice(const Instance& inst, std::span<const int> positions, int j);

ChoiceVector predict(const Instance& inst, const SparseModel& model);

// Validates the whole batch before mutating; throws ConfigError when an item is not offered.
void record_observations(EmpiricalStats& stats, const Instance& inst,
                         std::span<const Observation> obs);

MaskedChoice empirical_probs(const Instance& inst, const EmpiricalStats& stats);

// Mean absolute error over all coordinates.
double mae(std::span<const double> p, std::span<const double> q);
inline double mae(const ChoiceVector& p, const ChoiceVector& q) { return mae(p.values, q.values); }

// Mean absolute error restricted to masked-in blocks (0 when nothing is masked in).
double masked_mae(const Instance& inst, std::span<const double> p, std::span<const double> q,
                  const BlockMask& mask);

// Max over blocks of |Σ_i x_ij − 1|.
double block_sum_error(const Instance& inst, std::span<const double> x);

}  // namespace npchoice
