#pragma once

// Pieces shared by the Frank-Wolfe and dual estimators: data sources that yield one data
// vector p^t per iteration, the running average of those vectors, sparse-model bookkeeping
// and the fit result.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "npchoice/core.hpp"

namespace npchoice {

struct Snapshot {
  ChoiceVector p;
  BlockMask mask;
  std::int64_t observations = 0;  // observations behind p; 0 for exact vectors
};

class DataSource {
 public:
  virtual ~DataSource() = default;
  // The data vector for the next solver iteration, or nullopt once the source is exhausted.
  virtual std::optional<Snapshot> next() = 0;
};

// Yields the same snapshot forever.
class StaticSource : public DataSource {
 public:
  explicit StaticSource(Snapshot snapshot) : snapshot_(std::move(snapshot)) {}
  StaticSource(const Instance& inst, ChoiceVector p)
      : snapshot_{std::move(p), full_mask(inst), 0} {}

  std::optional<Snapshot> next() override { return snapshot_; }

 private:
  Snapshot snapshot_;
};

// Yields a fixed list of snapshots, then nothing.
class ReplaySource : public DataSource {
 public:
  explicit ReplaySource(std::vector<Snapshot> snapshots) : snapshots_(std::move(snapshots)) {}

  std::optional<Snapshot> next() override {
    if (pos_ >= snapshots_.size()) return std::nullopt;
    return snapshots_[pos_++];
  }

 private:
  std::vector<Snapshot> snapshots_;
  size_t pos_ = 0;
};

// Average of the data vectors seen so far. A block is averaged over the snapshots in which it
// was observed and is masked in once observed at least once.
class RunningAverage {
 public:
  explicit RunningAverage(const Instance& inst)
      : inst_(&inst), sum_(inst.size(), 0.0), seen_(inst.m(), 0) {}

  void add(const Snapshot& s);
  std::vector<double> mean() const;
  BlockMask mask() const;
  int count() const { return count_; }

 private:
  const Instance* inst_;
  std::vector<double> sum_;
  std::vector<int> seen_;
  int count_ = 0;
};

// Finitely supported distribution over rankings under construction. Adding a ranking that is
// already in the support accumulates onto its weight.
class ModelBuilder {
 public:
  void scale(double factor);
  void add(const Ranking& r, double weight);
  int sparsity() const;
  // Drops non-positive weights and renormalizes to sum 1.
  SparseModel build() const;

 private:
  std::map<std::vector<int>, size_t> index_;
  std::vector<Ranking> rankings_;
  std::vector<double> weights_;
};

struct TraceRow {
  int t = 0;
  double objective = 0.0;    // D(x^{t+1}, p^t) for Frank-Wolfe
  double train_mae = 0.0;    // MAE(p̄^t, current estimate)
  double certificate = 0.0;  // running regret certificate (dual only)
  int sparsity = 0;
};

struct FitResult {
  SparseModel model;
  ChoiceVector prediction;
  int iterations_used = 0;
  std::vector<TraceRow> trace;
  int data_snapshots_used = 0;
  std::int64_t observations_used = 0;
  double train_mae = 0.0;
  bool stopped_by_rule = false;
};

}  // namespace npchoice
