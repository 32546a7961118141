#pragma once

// Mixed multinomial-logit ground truth and observation streams.
//
// A MixedMNL is indexed like the simulation literature: index 0 is the no-choice option and
// 1..n are products. In an Instance the no-choice option is item 1 and product k is item k + 1.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "npchoice/core.hpp"
#include "npchoice/fit.hpp"
#include "npchoice/random.hpp"

namespace npchoice {

struct MixedMNL {
  std::vector<double> weights;                 // one per segment, sums to 1
  std::vector<std::vector<double>> utilities;  // [segment][0..n], all > 0
  double intensity = 0.0;

  int segments() const { return static_cast<int>(weights.size()); }
  int products() const { return utilities.empty() ? 0 : static_cast<int>(utilities[0].size()) - 1; }
  // Throws ConfigError on shape mismatch, non-positive utilities or weights not summing to 1.
  void validate() const;
};

inline int product_to_item(int product) { return product + 1; }
inline int item_to_product(int item) { return item - 1; }

// Per segment: q_i ~ U(0, 1) for i = 0..n; four distinct indices get utility L·q_i, the rest
// q_i / 10. Mixing weights are uniform on the simplex. Throws ConfigError when n + 1 < 4,
// segments < 1 or intensity <= 0.
MixedMNL gen_mmnl(int n_products, int segments, double intensity, std::uint64_t seed);

// Choice probabilities when the given products are offered: element 0 is the no-choice option,
// then the products in the order given. Throws ConfigError for unknown products.
std::vector<double> mmnl_probs(const MixedMNL& model, std::span<const int> products);

// `count` distinct assortments: size s uniform on 1..⌊n/2⌋, then s distinct products uniformly,
// redrawing duplicates. Returned as Instance item sets including the no-buy item. Throws
// ConfigError when fewer than `count` distinct subsets exist.
std::vector<std::vector<int>> sample_assortments(int n_products, int count, std::uint64_t seed);

// Exact probabilities for every pair of `inst`, which must have products() + 1 items.
ChoiceVector exact_choice_vector(const MixedMNL& model, const Instance& inst);

// Displays an assortment uniformly at random and samples the consumer's choice.
Observation draw_observation(const MixedMNL& model, const Instance& inst, Rng& rng);

struct StreamConfig {
  std::int64_t initial_observations = 2000;
  std::optional<std::int64_t> batch = 50;  // nullopt: exact probabilities every iteration
  std::uint64_t seed = 0;
  bool record = false;  // keep every drawn observation for auditing

  void validate() const;
};

// Accumulates observations into empirical statistics: the first snapshot holds
// initial_observations draws, each later one `batch` more.
class StreamSource : public DataSource {
 public:
  StreamSource(MixedMNL model, const Instance& inst, StreamConfig cfg);

  std::optional<Snapshot> next() override;

  const EmpiricalStats& stats() const { return stats_; }
  const std::vector<Observation>& recorded() const { return recorded_; }

 private:
  void draw(std::int64_t count);

  MixedMNL model_;
  const Instance* inst_;
  StreamConfig cfg_;
  Rng rng_;
  EmpiricalStats stats_;
  std::vector<std::vector<double>> cdf_;
  std::vector<Observation> recorded_;
  std::optional<ChoiceVector> exact_;
  bool started_ = false;
};

// Replays recorded observations with the same initial/batch schedule.
class ObservationReplaySource : public DataSource {
 public:
  ObservationReplaySource(const Instance& inst, std::vector<Observation> obs,
                          std::int64_t initial_observations, std::int64_t batch);

  std::optional<Snapshot> next() override;

 private:
  const Instance* inst_;
  std::vector<Observation> obs_;
  std::int64_t initial_;
  std::int64_t batch_;
  size_t pos_ = 0;
  EmpiricalStats stats_;
  bool started_ = false;
};

std::unique_ptr<DataSource> make_data_source(const MixedMNL& model, const Instance& inst,
                                             const StreamConfig& cfg);

}  // namespace npchoice
