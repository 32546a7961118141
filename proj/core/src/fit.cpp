#include "npchoice/fit.hpp"

#include <algorithm>
#include <numeric>

#include "npchoice/errors.hpp"

namespace npchoice {

void RunningAverage::add(const Snapshot& s) {
  if (static_cast<int>(s.p.size()) != inst_->size() || static_cast<int>(s.mask.size()) != inst_->m()) {
    throw ConfigError("snapshot does not match the instance");
  }
  for (int j = 0; j < inst_->m(); ++j) {
    if (!s.mask[j]) continue;
    ++seen_[j];
    for (int k = inst_->offset(j); k < inst_->offset(j + 1); ++k) sum_[k] += s.p[k];
  }
  ++count_;
}

std::vector<double> RunningAverage::mean() const {
  std::vector<double> out(sum_.size(), 0.0);
  for (int j = 0; j < inst_->m(); ++j) {
    if (seen_[j] == 0) continue;
    for (int k = inst_->offset(j); k < inst_->offset(j + 1); ++k) out[k] = sum_[k] / seen_[j];
  }
  return out;
}

BlockMask RunningAverage::mask() const {
  BlockMask mask(inst_->m());
  for (int j = 0; j < inst_->m(); ++j) mask[j] = seen_[j] > 0;
  return mask;
}

void ModelBuilder::scale(double factor) {
  for (double& w : weights_) w *= factor;
}

void ModelBuilder::add(const Ranking& r, double weight) {
  auto [it, inserted] = index_.try_emplace(r.order(), rankings_.size());
  if (inserted) {
    rankings_.push_back(r);
    weights_.push_back(weight);
  } else {
    weights_[it->second] += weight;
  }
}

int ModelBuilder::sparsity() const {
  return static_cast<int>(std::count_if(weights_.begin(), weights_.end(),
                                        [](double w) { return w > 0.0; }));
}

SparseModel ModelBuilder::build() const {
  SparseModel model;
  double total = 0.0;
  for (size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] > 0.0) total += weights_[k];
  }
  if (!(total > 0.0)) throw RuntimeError("model has no positive weight");
  for (size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] > 0.0) model.support.push_back({rankings_[k], weights_[k] / total});
  }
  return model;
}

}  // namespace npchoice
