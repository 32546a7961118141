#include "npchoice/oracle.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "npchoice/errors.hpp"

namespace npchoice {
namespace {

void check_costs(const Instance& inst, std::span<const double> c) {
  if (static_cast<int>(c.size()) != inst.size()) {
    throw ConfigError("cost vector has " + std::to_string(c.size()) + " entries, instance has " +
                      std::to_string(inst.size()) + " pairs");
  }
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Search state for solve_bnb. Bounds are summed in assortment order with the same per-block
// terms a leaf would use, so a bound never exceeds the value of any leaf below it, even in
// floating point (rounded addition is monotone).
class BranchAndBound {
 public:
  BranchAndBound(const Instance& inst, std::span<const double> c)
      : inst_(inst),
        c_(c),
        n_(inst.n()),
        m_(inst.m()),
        top_(m_, -1),
        cheapest_(m_),
        placed_(n_ + 1, false),
        open_count_(n_ + 1, 0),
        by_item_(n_ + 1) {
    for (int j = 0; j < m_; ++j) {
      double lo = c_[inst.offset(j)];
      for (int k = inst.offset(j); k < inst.offset(j + 1); ++k) lo = std::min(lo, c_[k]);
      cheapest_[j] = lo;
      for (int item : inst.assortment(j)) {
        by_item_[item].push_back(j);
        ++open_count_[item];
      }
    }
    undetermined_ = m_;
    prefix_.reserve(n_);
  }

  void seed(const Ranking& r) {
    const double v = ranking_cost(inst_, c_, r);
    if (!has_incumbent_ || v < best_value_ || (v == best_value_ && r.order() < best_order_)) {
      best_value_ = v;
      best_order_ = r.order();
      has_incumbent_ = true;
    }
  }

  void place(int item) {
    placed_[item] = true;
    prefix_.push_back(item);
    for (int j : by_item_[item]) {
      if (top_[j] >= 0) continue;
      top_[j] = inst_.pair_index(j, item);
      --undetermined_;
      closed_.push_back(j);
      for (int member : inst_.assortment(j)) --open_count_[member];
    }
    marks_.push_back(closed_.size());
  }

  void unplace() {
    marks_.pop_back();
    const size_t keep = marks_.empty() ? 0 : marks_.back();
    while (closed_.size() > keep) {
      const int j = closed_.back();
      closed_.pop_back();
      top_[j] = -1;
      ++undetermined_;
      for (int member : inst_.assortment(j)) ++open_count_[member];
    }
    placed_[prefix_.back()] = false;
    prefix_.pop_back();
  }

  double bound() const {
    double s = 0.0;
    for (int j = 0; j < m_; ++j) s += top_[j] >= 0 ? c_[top_[j]] : cheapest_[j];
    return s;
  }

  void search() {
    ++nodes_;
    const double lb = bound();
    if (undetermined_ == 0) {
      leaf(lb);
      return;
    }
    if (lb > best_value_) return;
    if (lb == best_value_ && prefix_after_incumbent()) return;
    for (int item = 1; item <= n_; ++item) {
      if (placed_[item]) continue;
      const bool idle = open_count_[item] == 0;
      place(item);
      search();
      unplace();
      // Placing an idle item changes no top choice; it dominates every larger sibling.
      if (idle) break;
    }
  }

  OracleResult result() const {
    Ranking r(best_order_);
    return {r, ranking_cost(inst_, c_, r), nodes_};
  }

 private:
  void leaf(double value) {
    if (value > best_value_) return;
    std::vector<int> order = prefix_;
    for (int item = 1; item <= n_; ++item) {
      if (!placed_[item]) order.push_back(item);
    }
    if (value < best_value_ || order < best_order_) {
      best_value_ = value;
      best_order_ = std::move(order);
    }
  }

  // True when every completion of the current prefix sorts after the incumbent.
  bool prefix_after_incumbent() const {
    for (size_t k = 0; k < prefix_.size(); ++k) {
      if (prefix_[k] != best_order_[k]) return prefix_[k] > best_order_[k];
    }
    return false;
  }

  const Instance& inst_;
  std::span<const double> c_;
  int n_;
  int m_;
  std::vector<int> top_;
  std::vector<double> cheapest_;
  std::vector<bool> placed_;
  std::vector<int> open_count_;
  std::vector<std::vector<int>> by_item_;
  std::vector<int> prefix_;
  std::vector<int> closed_;
  std::vector<size_t> marks_;
  int undetermined_ = 0;

  bool has_incumbent_ = false;
  double best_value_ = 0.0;
  std::vector<int> best_order_;
  std::int64_t nodes_ = 0;
};

}  // namespace

double ranking_cost(const Instance& inst, std::span<const double> c, const Ranking& r) {
  check_costs(inst, c);
  if (r.n() != inst.n()) throw ConfigError("ranking size does not match the instance");
  const auto pos = r.positions();
  double s = 0.0;
  for (int j = 0; j < inst.m(); ++j) s += c[top_choice(inst, pos, j)];
  return s;
}

OracleResult solve_enum(const Instance& inst, std::span<const double> c, int max_items) {
  check_costs(inst, c);
  if (inst.n() > max_items) {
    throw ConfigError("enumeration limited to " + std::to_string(max_items) + " items, instance has " +
                      std::to_string(inst.n()));
  }
  std::vector<int> order(inst.n());
  std::iota(order.begin(), order.end(), 1);
  std::vector<int> pos(inst.n() + 1);
  std::vector<int> best_order = order;
  double best = 0.0;
  bool first = true;
  std::int64_t count = 0;
  do {
    ++count;
    for (int k = 0; k < inst.n(); ++k) pos[order[k]] = k;
    double s = 0.0;
    for (int j = 0; j < inst.m(); ++j) s += c[top_choice(inst, pos, j)];
    // Permutations arrive in lexicographic order, so strict improvement keeps the lex-min optimum.
    if (first || s < best) {
      best = s;
      best_order = order;
      first = false;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  Ranking r(best_order);
  return {r, ranking_cost(inst, c, r), count};
}

OracleResult solve_bnb(const Instance& inst, std::span<const double> c, const Ranking* hint) {
  check_costs(inst, c);
  BranchAndBound bb(inst, c);
  bb.seed(Ranking::identity(inst.n()));
  if (hint != nullptr && hint->n() == inst.n()) bb.seed(*hint);
  bb.search();
  return bb.result();
}

double bnb_lower_bound(const Instance& inst, std::span<const double> c,
                       std::span<const int> prefix) {
  check_costs(inst, c);
  BranchAndBound bb(inst, c);
  for (int item : prefix) bb.place(item);
  return bb.bound();
}

std::string ip_model_text(const Instance& inst, std::span<const double> c) {
  check_costs(inst, c);
  const int n = inst.n();
  auto x = [](int i, int k) { return "x_" + std::to_string(i) + "_" + std::to_string(k); };
  auto t = [](int j, int i) { return "t_" + std::to_string(j + 1) + "_" + std::to_string(i); };

  std::ostringstream out;
  out << "\\ Ranking subproblem: linear-ordering formulation with top-choice indicators\n";
  out << "\\ items " << n << ", assortments " << inst.m() << ", pairs " << inst.size() << "\n";
  out << "Minimize\n obj:";
  for (int k = 0; k < inst.size(); ++k) {
    const double v = c[k];
    out << (v < 0 ? " - " : " + ") << fmt_double(std::abs(v)) << " "
        << t(inst.assortment_of(k), inst.item_at(k));
  }
  out << "\nSubject To\n";
  for (int i = 1; i <= n; ++i) {
    for (int k = i + 1; k <= n; ++k) {
      out << " anti_" << i << "_" << k << ": " << x(i, k) << " + " << x(k, i) << " = 1\n";
    }
  }
  for (int i = 1; i <= n; ++i) {
    for (int k = 1; k <= n; ++k) {
      for (int l = 1; l <= n; ++l) {
        if (i == k || k == l || i == l) continue;
        out << " trans_" << i << "_" << k << "_" << l << ": " << x(i, k) << " + " << x(k, l)
            << " - " << x(i, l) << " <= 1\n";
      }
    }
  }
  for (int j = 0; j < inst.m(); ++j) {
    out << " pick_" << j + 1 << ":";
    bool first = true;
    for (int i : inst.assortment(j)) {
      out << (first ? " " : " + ") << t(j, i);
      first = false;
    }
    out << " = 1\n";
    for (int i : inst.assortment(j)) {
      for (int k : inst.assortment(j)) {
        if (i == k) continue;
        out << " top_" << j + 1 << "_" << i << "_" << k << ": " << t(j, i) << " - " << x(i, k)
            << " <= 0\n";
      }
    }
  }
  out << "Binary\n";
  for (int i = 1; i <= n; ++i) {
    for (int k = 1; k <= n; ++k) {
      if (i != k) out << " " << x(i, k) << "\n";
    }
  }
  for (int k = 0; k < inst.size(); ++k) out << " " << t(inst.assortment_of(k), inst.item_at(k)) << "\n";
  out << "End\n";
  return out.str();
}

void export_ip(const Instance& inst, std::span<const double> c, const std::filesystem::path& path) {
  const std::string text = ip_model_text(inst, c);
  std::ofstream file(path);
  if (!file) throw RuntimeError("cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw RuntimeError("failed writing " + path.string());
}

}  // namespace npchoice
