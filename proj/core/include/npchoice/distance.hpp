#pragma once

// Distance measures D(x, p) between model choice probabilities x and data p.
//
// Norm kinds (L1, L2, Linf) support the dual solver: their conjugate on the unit dual ball Y
// is D*(y, p) = <y, p>. SquaredL2 (½‖x − p‖²) is the only kind with a finite Frank-Wolfe
// curvature constant. WeightedKL is Σ_j w_j KL(p_j, x_j) and only exposes value/subgradient.
//
// All functions act on masked-in blocks only; masked-out coordinates contribute nothing and
// receive zero subgradient.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npchoice/core.hpp"

namespace npchoice {

enum class DistanceKind { kL1, kL2, kLinf, kSquaredL2, kWeightedKL };

class DistanceSpec {
 public:
  static DistanceSpec l1() { return DistanceSpec(DistanceKind::kL1); }
  static DistanceSpec l2() { return DistanceSpec(DistanceKind::kL2); }
  static DistanceSpec linf() { return DistanceSpec(DistanceKind::kLinf); }
  static DistanceSpec squared_l2() { return DistanceSpec(DistanceKind::kSquaredL2); }
  // Per-assortment weights; renormalized over the masked-in assortments when used.
  static DistanceSpec weighted_kl(std::vector<double> weights);
  // Weights proportional to how often each assortment was displayed (q_j).
  static DistanceSpec weighted_kl(const EmpiricalStats& stats);
  // Accepts the CLI names l1, l2, linf, sql2, wkl. A wkl spec parsed this way has uniform
  // weights over `m` assortments.
  static DistanceSpec parse(std::string_view name, int m = 0);

  DistanceKind kind() const { return kind_; }
  const std::vector<double>& weights() const { return weights_; }
  std::string name() const;

  bool is_norm() const;
  bool supports_fw() const { return kind_ == DistanceKind::kSquaredL2; }
  bool supports_dual() const { return is_norm(); }

 private:
  explicit DistanceSpec(DistanceKind kind) : kind_(kind) {}

  DistanceKind kind_;
  std::vector<double> weights_;
};

// D(x, p). WeightedKL returns +infinity when some p_ij > 0 meets x_ij = 0.
double value(const DistanceSpec& spec, const Instance& inst, std::span<const double> x,
             std::span<const double> p, const BlockMask& mask);

// A deterministic subgradient of D(·, p) at x. L1 uses 0 on ties, Linf puts unit mass on the
// first maximal |x − p| coordinate, L2 returns 0 at x = p. WeightedKL throws RuntimeError
// when x_ij = 0 while p_ij > 0.
std::vector<double> subgradient(const DistanceSpec& spec, const Instance& inst,
                                std::span<const double> x, std::span<const double> p,
                                const BlockMask& mask);

// ‖d‖ for the norm of a norm kind (SquaredL2 uses the Euclidean norm).
double primal_norm(DistanceKind kind, std::span<const double> d);
// ‖y‖_* for the dual norm: ℓ∞ for L1, ℓ2 for L2, ℓ1 for Linf.
double dual_norm(DistanceKind kind, std::span<const double> y);

// D*(y, p) = <y, p> on masked-in coordinates. Throws ConfigError if y is outside Y
// (tolerance 1e-9) or the kind is not a norm.
double conjugate_value(const DistanceSpec& spec, const Instance& inst, std::span<const double> y,
                       std::span<const double> p, const BlockMask& mask);

// Euclidean projection onto the unit dual ball Y of a norm kind.
std::vector<double> dual_project(const DistanceSpec& spec, std::span<const double> y);
std::vector<double> project_l1_ball(std::span<const double> y, double radius = 1.0);

// Set width Ω = max ω − min ω of Y under ω(y) = ½‖y‖₂², for a problem of dimension `dim`.
double set_width(const DistanceSpec& spec, int dim);

// Euclidean bound on ‖z − p‖₂ for z a vertex and p with probability blocks: √(2m).
double gradient_bound(const Instance& inst);
// ℓ2 diameter bound of the choice polytope: √(2m).
double diameter_bound(const Instance& inst);

struct ProbeOptions {
  // Point the expansion is taken at; defaults to p.
  std::optional<std::vector<double>> base;
  // Subgradient selection at the base point; defaults to subgradient(spec, base, p).
  std::optional<std::vector<double>> selection;
};

// (1/α²)[D(x + α(s − x), p) − D(x, p) − α<s − x, g>] for every α in `alphas`; x is the base
// point (p unless overridden). Throws ConfigError for α outside (0, 1].
std::vector<double> curvature_probe(const DistanceSpec& spec, const Instance& inst,
                                    std::span<const double> p, std::span<const double> s,
                                    std::span<const double> alphas, const BlockMask& mask,
                                    const ProbeOptions& options = {});

}  // namespace npchoice
