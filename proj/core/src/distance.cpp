#include "npchoice/distance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "npchoice/errors.hpp"

namespace npchoice {
namespace {

template <typename F>
void for_masked(const Instance& inst, const BlockMask& mask, F&& f) {
  for (int j = 0; j < inst.m(); ++j) {
    if (!mask[j]) continue;
    for (int k = inst.offset(j); k < inst.offset(j + 1); ++k) f(j, k);
  }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::vector<double> masked_kl_weights(const DistanceSpec& spec, const Instance& inst,
                                      const BlockMask& mask) {
  const auto& w = spec.weights();
  if (static_cast<int>(w.size()) != inst.m()) {
    throw ConfigError("weighted KL has " + std::to_string(w.size()) + " weights for " +
                      std::to_string(inst.m()) + " assortments");
  }
  double total = 0.0;
  for (int j = 0; j < inst.m(); ++j) {
    if (mask[j]) total += w[j];
  }
  std::vector<double> out(inst.m(), 0.0);
  if (total <= 0.0) return out;
  for (int j = 0; j < inst.m(); ++j) {
    if (mask[j]) out[j] = w[j] / total;
  }
  return out;
}

void check_dims(const Instance& inst, std::span<const double> x, std::span<const double> p,
                const BlockMask& mask) {
  if (static_cast<int>(x.size()) != inst.size() || static_cast<int>(p.size()) != inst.size() ||
      static_cast<int>(mask.size()) != inst.m()) {
    throw ConfigError("distance: vector sizes do not match the instance");
  }
}

}  // namespace

DistanceSpec DistanceSpec::weighted_kl(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weighted KL weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("weighted KL weights must not all be zero");
  for (double& w : weights) w /= total;
  DistanceSpec spec(DistanceKind::kWeightedKL);
  spec.weights_ = std::move(weights);
  return spec;
}

DistanceSpec DistanceSpec::weighted_kl(const EmpiricalStats& stats) {
  std::vector<double> w(stats.counts_assort.begin(), stats.counts_assort.end());
  return weighted_kl(std::move(w));
}

DistanceSpec DistanceSpec::parse(std::string_view name, int m) {
  if (name == "l1") return l1();
  if (name == "l2") return l2();
  if (name == "linf") return linf();
  if (name == "sql2") return squared_l2();
  if (name == "wkl") {
    if (m < 1) throw ConfigError("wkl needs the assortment count");
    return weighted_kl(std::vector<double>(m, 1.0));
  }
  throw ConfigError("unknown distance '" + std::string(name) + "' (expected l1, l2, linf, sql2, wkl)");
}

std::string DistanceSpec::name() const {
  switch (kind_) {
    case DistanceKind::kL1: return "l1";
    case DistanceKind::kL2: return "l2";
    case DistanceKind::kLinf: return "linf";
    case DistanceKind::kSquaredL2: return "sql2";
    case DistanceKind::kWeightedKL: return "wkl";
  }
  return "?";
}

bool DistanceSpec::is_norm() const {
  return kind_ == DistanceKind::kL1 || kind_ == DistanceKind::kL2 || kind_ == DistanceKind::kLinf;
}

double value(const DistanceSpec& spec, const Instance& inst, std::span<const double> x,
             std::span<const double> p, const BlockMask& mask) {
  check_dims(inst, x, p, mask);
  switch (spec.kind()) {
    case DistanceKind::kL1: {
      double s = 0.0;
      for_masked(inst, mask, [&](int, int k) { s += std::abs(x[k] - p[k]); });
      return s;
    }
    case DistanceKind::kL2: {
      double s = 0.0;
      for_masked(inst, mask, [&](int, int k) { s += (x[k] - p[k]) * (x[k] - p[k]); });
      return std::sqrt(s);
    }
    case DistanceKind::kLinf: {
      double s = 0.0;
      for_masked(inst, mask, [&](int, int k) { s = std::max(s, std::abs(x[k] - p[k])); });
      return s;
    }
    case DistanceKind::kSquaredL2: {
      double s = 0.0;
      for_masked(inst, mask, [&](int, int k) { s += (x[k] - p[k]) * (x[k] - p[k]); });
      return 0.5 * s;
    }
    case DistanceKind::kWeightedKL: {
      const auto w = masked_kl_weights(spec, inst, mask);
      double s = 0.0;
      bool infinite = false;
      for_masked(inst, mask, [&](int j, int k) {
        if (p[k] <= 0.0 || w[j] == 0.0) return;  // 0 log 0 = 0
        if (x[k] <= 0.0) {
          infinite = true;
          return;
        }
        s += w[j] * p[k] * std::log(p[k] / x[k]);
      });
      return infinite ? std::numeric_limits<double>::infinity() : s;
    }
  }
  return 0.0;
}

std::vector<double> subgradient(const DistanceSpec& spec, const Instance& inst,
                                std::span<const double> x, std::span<const double> p,
                                const BlockMask& mask) {
  check_dims(inst, x, p, mask);
  std::vector<double> g(inst.size(), 0.0);
  switch (spec.kind()) {
    case DistanceKind::kL1:
      for_masked(inst, mask, [&](int, int k) { g[k] = sign(x[k] - p[k]); });
      break;
    case DistanceKind::kL2: {
      const double norm = value(spec, inst, x, p, mask);
      if (norm > 0.0) for_masked(inst, mask, [&](int, int k) { g[k] = (x[k] - p[k]) / norm; });
      break;
    }
    case DistanceKind::kLinf: {
      int arg = -1;
      double best = 0.0;
      for_masked(inst, mask, [&](int, int k) {
        const double d = std::abs(x[k] - p[k]);
        if (d > best) {
          best = d;
          arg = k;
        }
      });
      if (arg >= 0) g[arg] = sign(x[arg] - p[arg]);
      break;
    }
    case DistanceKind::kSquaredL2:
      for_masked(inst, mask, [&](int, int k) { g[k] = x[k] - p[k]; });
      break;
    case DistanceKind::kWeightedKL: {
      const auto w = masked_kl_weights(spec, inst, mask);
      for_masked(inst, mask, [&](int j, int k) {
        if (p[k] <= 0.0 || w[j] == 0.0) return;
        if (x[k] <= 0.0) {
          throw RuntimeError("weighted KL subgradient undefined: x is 0 where p is positive");
        }
        g[k] = -w[j] * p[k] / x[k];
      });
      break;
    }
  }
  return g;
}

double primal_norm(DistanceKind kind, std::span<const double> d) {
  switch (kind) {
    case DistanceKind::kL1:
      return std::accumulate(d.begin(), d.end(), 0.0,
                             [](double a, double v) { return a + std::abs(v); });
    case DistanceKind::kLinf:
      return std::accumulate(d.begin(), d.end(), 0.0,
                             [](double a, double v) { return std::max(a, std::abs(v)); });
    default:
      return std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0));
  }
}

double dual_norm(DistanceKind kind, std::span<const double> y) {
  switch (kind) {
    case DistanceKind::kL1: return primal_norm(DistanceKind::kLinf, y);
    case DistanceKind::kLinf: return primal_norm(DistanceKind::kL1, y);
    case DistanceKind::kL2: return primal_norm(DistanceKind::kL2, y);
    default: throw ConfigError("dual norm is only defined for norm distances");
  }
}

double conjugate_value(const DistanceSpec& spec, const Instance& inst, std::span<const double> y,
                       std::span<const double> p, const BlockMask& mask) {
  if (!spec.is_norm()) throw ConfigError("conjugate is only implemented for norm distances");
  check_dims(inst, y, p, mask);
  if (dual_norm(spec.kind(), y) > 1.0 + 1e-9) {
    throw ConfigError("conjugate evaluated outside the dual ball; project first");
  }
  double s = 0.0;
  for_masked(inst, mask, [&](int, int k) { s += y[k] * p[k]; });
  return s;
}

std::vector<double> project_l1_ball(std::span<const double> y, double radius) {
  std::vector<double> out(y.begin(), y.end());
  double norm1 = 0.0;
  for (double v : y) norm1 += std::abs(v);
  if (norm1 <= radius) return out;

  // Soft threshold at τ where Σ max(|y_i| − τ, 0) = radius.
  std::vector<double> mags(y.size());
  std::transform(y.begin(), y.end(), mags.begin(), [](double v) { return std::abs(v); });
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (size_t k = 0; k < mags.size(); ++k) {
    cumsum += mags[k];
    const double candidate = (cumsum - radius) / static_cast<double>(k + 1);
    if (mags[k] - candidate > 0.0) tau = candidate;
  }
  for (double& v : out) v = sign(v) * std::max(std::abs(v) - tau, 0.0);
  return out;
}

std::vector<double> dual_project(const DistanceSpec& spec, std::span<const double> y) {
  switch (spec.kind()) {
    case DistanceKind::kL1: {
      std::vector<double> out(y.begin(), y.end());
      for (double& v : out) v = std::clamp(v, -1.0, 1.0);
      return out;
    }
    case DistanceKind::kL2: {
      std::vector<double> out(y.begin(), y.end());
      const double norm = primal_norm(DistanceKind::kL2, y);
      if (norm > 1.0) {
        for (double& v : out) v /= norm;
      }
      return out;
    }
    case DistanceKind::kLinf:
      return project_l1_ball(y, 1.0);
    default:
      throw ConfigError("dual projection is only defined for norm distances");
  }
}

double set_width(const DistanceSpec& spec, int dim) {
  switch (spec.kind()) {
    case DistanceKind::kL1: return 0.5 * dim;  // ℓ∞ ball: corner has ½‖y‖² = dim/2
    case DistanceKind::kL2:
    case DistanceKind::kLinf: return 0.5;
    default: throw ConfigError("set width is only defined for norm distances");
  }
}

double gradient_bound(const Instance& inst) { return std::sqrt(2.0 * inst.m()); }
double diameter_bound(const Instance& inst) { return std::sqrt(2.0 * inst.m()); }

std::vector<double> curvature_probe(const DistanceSpec& spec, const Instance& inst,
                                    std::span<const double> p, std::span<const double> s,
                                    std::span<const double> alphas, const BlockMask& mask,
                                    const ProbeOptions& options) {
  const std::vector<double> x = options.base ? *options.base : std::vector<double>(p.begin(), p.end());
  const std::vector<double> g =
      options.selection ? *options.selection : subgradient(spec, inst, x, p, mask);
  const double base_value = value(spec, inst, x, p, mask);

  std::vector<double> ratios;
  ratios.reserve(alphas.size());
  std::vector<double> moved(x.size());
  for (double alpha : alphas) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("probe step must lie in (0, 1]");
    double slope = 0.0;
    for (size_t k = 0; k < x.size(); ++k) {
      moved[k] = (1.0 - alpha) * x[k] + alpha * s[k];
      slope += (s[k] - x[k]) * g[k];
    }
    const double gap = value(spec, inst, moved, p, mask) - base_value - alpha * slope;
    ratios.push_back(gap / (alpha * alpha));
  }
  return ratios;
}

}  // namespace npchoice
