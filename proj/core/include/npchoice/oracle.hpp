#pragma once

// Exact linear minimization over the choice polytope: argmin over rankings σ of <a(σ), c>.
//
// Ties are broken towards the lexicographically smallest preference order, so every solver
// here returns the same ranking for the same input.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "npchoice/core.hpp"

namespace npchoice {

struct OracleResult {
  Ranking ranking;
  double value = 0.0;  // <vertex(ranking), c>, summed in pair-index order
  std::int64_t nodes_explored = 0;
};

// <a(σ), c> accumulated assortment by assortment. Every solver reports values through this
// function, so equal vertices always produce bit-identical values.
double ranking_cost(const Instance& inst, std::span<const double> c, const Ranking& r);

// Exhaustive search over all n! rankings. Throws ConfigError when n exceeds `max_items`.
OracleResult solve_enum(const Instance& inst, std::span<const double> c, int max_items = 10);

// Depth-first branch-and-bound over preference-order prefixes. A node fixes the top items; an
// assortment's cost is fixed once its first member is placed and every undetermined assortment
// is bounded by its cheapest member. `hint` (e.g. the previous solution of a slowly changing
// cost vector) only seeds the incumbent; the result does not depend on it.
OracleResult solve_bnb(const Instance& inst, std::span<const double> c,
                       const Ranking* hint = nullptr);

// Lower bound used by solve_bnb at the node whose placed items are `prefix` (top first).
double bnb_lower_bound(const Instance& inst, std::span<const double> c,
                       std::span<const int> prefix);

// Linear-ordering integer program in CPLEX LP format: precedence binaries x_i_k (i ranked
// above k) with antisymmetry and transitivity rows, plus top-choice binaries t_j_i per pair
// tied to precedence so that the objective equals <a(σ), c>.
std::string ip_model_text(const Instance& inst, std::span<const double> c);
// Throws RuntimeError when the file cannot be written.
void export_ip(const Instance& inst, std::span<const double> c, const std::filesystem::path& path);

}  // namespace npchoice
