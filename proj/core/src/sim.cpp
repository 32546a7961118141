#include "npchoice/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "npchoice/errors.hpp"

namespace npchoice {
namespace {

constexpr int kBoosted = 4;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Products of an instance block (skipping the no-buy item at its front).
std::vector<int> block_products(const Instance& inst, int j) {
  std::vector<int> products;
  for (int item : inst.assortment(j)) {
    if (item != kNoBuyItem) products.push_back(item_to_product(item));
  }
  return products;
}

void check_instance(const MixedMNL& model, const Instance& inst) {
  if (inst.n() != model.products() + 1) {
    throw ConfigError("instance has " + std::to_string(inst.n()) + " items but the model has " +
                      std::to_string(model.products()) + " products plus no-buy");
  }
}

}  // namespace

void MixedMNL::validate() const {
  if (weights.empty() || weights.size() != utilities.size()) {
    throw ConfigError("mixed MNL needs one utility vector per segment weight");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("mixed MNL weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("mixed MNL weights must sum to 1");
  for (const auto& u : utilities) {
    if (u.size() != utilities[0].size() || u.size() < 2) {
      throw ConfigError("mixed MNL utility vectors must share a length >= 2");
    }
    for (double v : u) {
      if (!(v > 0.0)) throw ConfigError("mixed MNL utilities must be positive");
    }
  }
}

MixedMNL gen_mmnl(int n_products, int segments, double intensity, std::uint64_t seed) {
  if (n_products + 1 < kBoosted) {
    throw ConfigError("need at least " + std::to_string(kBoosted - 1) + " products to boost " +
                      std::to_string(kBoosted) + " utilities");
  }
  if (segments < 1) throw ConfigError("need at least one segment");
  if (!(intensity > 0.0)) throw ConfigError("intensity must be positive");

  Rng rng(seed);
  MixedMNL model;
  model.intensity = intensity;
  for (int k = 0; k < segments; ++k) {
    std::vector<double> q(n_products + 1);
    for (double& v : q) {
      do {
        v = rng.uniform();
      } while (v == 0.0);
    }
    // Partial Fisher-Yates picks the boosted indices.
    std::vector<int> idx(n_products + 1);
    std::iota(idx.begin(), idx.end(), 0);
    for (int b = 0; b < kBoosted; ++b) {
      const auto pick = rng.uniform_int(b, n_products);
      std::swap(idx[b], idx[pick]);
    }
    std::vector<double> u(n_products + 1);
    for (int i = 0; i <= n_products; ++i) u[i] = q[i] / 10.0;
    for (int b = 0; b < kBoosted; ++b) u[idx[b]] = intensity * q[idx[b]];
    model.utilities.push_back(std::move(u));
  }
  std::vector<double> w(segments);
  double total = 0.0;
  for (double& v : w) {
    v = rng.exponential();
    total += v;
  }
  for (double& v : w) v /= total;
  model.weights = std::move(w);
  return model;
}

std::vector<double> mmnl_probs(const MixedMNL& model, std::span<const int> products) {
  const int n = model.products();
  for (int product : products) {
    if (product < 1 || product > n) {
      throw ConfigError("unknown product " + std::to_string(product));
    }
  }
  std::vector<double> probs(products.size() + 1, 0.0);
  for (int k = 0; k < model.segments(); ++k) {
    const auto& u = model.utilities[k];
    double denom = u[0];
    for (int product : products) denom += u[product];
    probs[0] += model.weights[k] * u[0] / denom;
    for (size_t a = 0; a < products.size(); ++a) {
      probs[a + 1] += model.weights[k] * u[products[a]] / denom;
    }
  }
  return probs;
}

std::vector<std::vector<int>> sample_assortments(int n_products, int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("need at least one assortment");
  const int max_size = n_products / 2;
  if (max_size < 1) throw ConfigError("need at least two products to sample assortments");
  double available = 0.0;
  for (int s = 1; s <= max_size; ++s) available += binomial(n_products, s);
  if (count > available) {
    throw ConfigError("only " + std::to_string(static_cast<long long>(available)) +
                      " distinct assortments exist, " + std::to_string(count) + " requested");
  }

  Rng rng(seed);
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> out;
  std::vector<int> pool(n_products);
  while (static_cast<int>(out.size()) < count) {
    const int size = static_cast<int>(rng.uniform_int(1, max_size));
    std::iota(pool.begin(), pool.end(), 1);
    for (int b = 0; b < size; ++b) {
      const auto pick = rng.uniform_int(b, n_products - 1);
      std::swap(pool[b], pool[pick]);
    }
    std::vector<int> items{kNoBuyItem};
    for (int b = 0; b < size; ++b) items.push_back(product_to_item(pool[b]));
    std::sort(items.begin(), items.end());
    if (seen.insert(items).second) out.push_back(std::move(items));
  }
  return out;
}

ChoiceVector exact_choice_vector(const MixedMNL& model, const Instance& inst) {
  check_instance(model, inst);
  ChoiceVector out{std::vector<double>(inst.size(), 0.0), true};
  for (int j = 0; j < inst.m(); ++j) {
    const auto probs = mmnl_probs(model, block_products(inst, j));
    // Block order is item-ascending, so the no-buy entry comes first.
    std::copy(probs.begin(), probs.end(), out.values.begin() + inst.offset(j));
  }
  return out;
}

Observation draw_observation(const MixedMNL& model, const Instance& inst, Rng& rng) {
  check_instance(model, inst);
  const int j = static_cast<int>(rng.uniform_int(0, inst.m() - 1));
  const auto probs = mmnl_probs(model, block_products(inst, j));
  const double u = rng.uniform();
  double acc = 0.0;
  size_t pick = probs.size() - 1;
  for (size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) {
      pick = a;
      break;
    }
  }
  return {inst.assortment(j)[pick], j};
}

void StreamConfig::validate() const {
  if (initial_observations < 0) throw ConfigError("initial observations must be >= 0");
  if (batch && *batch < 1) throw ConfigError("batch size must be >= 1 (omit for exact data)");
}

StreamSource::StreamSource(MixedMNL model, const Instance& inst, StreamConfig cfg)
    : model_(std::move(model)), inst_(&inst), cfg_(cfg), rng_(cfg.seed), stats_(inst) {
  cfg_.validate();
  model_.validate();
  check_instance(model_, inst);
  if (!cfg_.batch) {
    exact_ = exact_choice_vector(model_, inst);
    return;
  }
  for (int j = 0; j < inst.m(); ++j) {
    auto probs = mmnl_probs(model_, block_products(inst, j));
    std::partial_sum(probs.begin(), probs.end(), probs.begin());
    cdf_.push_back(std::move(probs));
  }
}

void StreamSource::draw(std::int64_t count) {
  // Same sampling scheme as draw_observation, with the per-assortment CDFs cached.
  std::vector<Observation> batch;
  batch.reserve(static_cast<size_t>(count));
  for (std::int64_t d = 0; d < count; ++d) {
    const int j = static_cast<int>(rng_.uniform_int(0, inst_->m() - 1));
    const auto& cdf = cdf_[j];
    const double u = rng_.uniform();
    size_t pick = cdf.size() - 1;
    for (size_t a = 0; a < cdf.size(); ++a) {
      if (u < cdf[a]) {
        pick = a;
        break;
      }
    }
    batch.push_back({inst_->assortment(j)[pick], j});
  }
  record_observations(stats_, *inst_, batch);
  if (cfg_.record) recorded_.insert(recorded_.end(), batch.begin(), batch.end());
}

std::optional<Snapshot> StreamSource::next() {
  if (exact_) return Snapshot{*exact_, full_mask(*inst_), 0};
  draw(started_ ? *cfg_.batch : cfg_.initial_observations);
  started_ = true;
  auto probs = empirical_probs(*inst_, stats_);
  return Snapshot{std::move(probs.p), std::move(probs.mask), stats_.total};
}

ObservationReplaySource::ObservationReplaySource(const Instance& inst, std::vector<Observation> obs,
                                                 std::int64_t initial_observations,
                                                 std::int64_t batch)
    : inst_(&inst), obs_(std::move(obs)), initial_(initial_observations), batch_(batch), stats_(inst) {
  if (initial_ < 0 || batch_ < 1) throw ConfigError("replay needs initial >= 0 and batch >= 1");
}

std::optional<Snapshot> ObservationReplaySource::next() {
  const std::int64_t want = started_ ? batch_ : initial_;
  if (started_ && pos_ >= obs_.size()) return std::nullopt;
  const size_t end = std::min(obs_.size(), pos_ + static_cast<size_t>(want));
  record_observations(stats_, *inst_, std::span<const Observation>(obs_).subspan(pos_, end - pos_));
  pos_ = end;
  started_ = true;
  auto probs = empirical_probs(*inst_, stats_);
  return Snapshot{std::move(probs.p), std::move(probs.mask), stats_.total};
}

std::unique_ptr<DataSource> make_data_source(const MixedMNL& model, const Instance& inst,
                                             const StreamConfig& cfg) {
  return std::make_unique<StreamSource>(model, inst, cfg);
}

}  // namespace npchoice
