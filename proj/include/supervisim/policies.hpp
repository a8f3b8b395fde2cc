#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "supervisim/core.hpp"
#include "supervisim/rng.hpp"

namespace supervisim {

/// Pending reports available in one month: backlog plus new arrivals,
/// ordered by (arrival_month, id).
class CandidatePool {
 public:
  CandidatePool() = default;

  explicit CandidatePool(std::vector<Report> reports) : reports_(std::move(reports)) {
    for (const auto& r : reports_)
      if (r.processed()) throw ValidationError("pool", "contains a processed report");
    std::sort(reports_.begin(), reports_.end(), arrival_order);
  }

  std::span<const Report> reports() const noexcept { return reports_; }
  std::size_t size() const noexcept { return reports_.size(); }
  bool empty() const noexcept { return reports_.empty(); }
  const Report& operator[](std::size_t i) const { return reports_[i]; }

  double total_cost() const {
    double sum = 0.0;
    for (const auto& r : reports_) sum += r.supervision_cost;
    return sum;
  }

  static bool arrival_order(const Report& a, const Report& b) {
    if (a.arrival_month != b.arrival_month) return a.arrival_month < b.arrival_month;
    return a.id < b.id;
  }

 private:
  std::vector<Report> reports_;
};

/// Triage order: priority descending, then earlier arrival, then smaller id.
inline bool triage_order(const Report& a, const Report& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.arrival_month != b.arrival_month) return a.arrival_month < b.arrival_month;
  return a.id < b.id;
}

namespace detail {

inline void require_capacity(double capacity) {
  if (!(capacity > 0.0)) throw ValidationError("capacity", "must be > 0");
}

/// Greedy pass over `order`, taking each report that still fits. With
/// `stop_at_first_miss` the pass ends at the first report that does not fit.
inline Selection take_in_order(const CandidatePool& pool, std::span<const std::size_t> order,
                               double capacity, bool stop_at_first_miss) {
  Selection sel;
  for (std::size_t idx : order) {
    const Report& r = pool[idx];
    if (sel.total_cost + r.supervision_cost <= capacity) {
      sel.ids.push_back(r.id);
      sel.total_cost += r.supervision_cost;
    } else if (stop_at_first_miss) {
      break;
    }
  }
  return sel;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace detail

/// First come, first served. Blocking mode stops at the head-of-line report
/// that does not fit; skip mode passes over it and keeps going.
inline Selection select_fifo(const CandidatePool& pool, double capacity, bool skip_mode = false) {
  detail::require_capacity(capacity);
  const auto order = detail::iota_indices(pool.size());
  return detail::take_in_order(pool, order, capacity, !skip_mode);
}

/// Uniform shuffle, then the longest prefix of the shuffled order that fits.
inline Selection select_random(const CandidatePool& pool, double capacity, RngStream& rng) {
  detail::require_capacity(capacity);
  auto order = detail::iota_indices(pool.size());
  // Fisher-Yates with our own uniform draws: std::shuffle's draw pattern is
  // library-specific.
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  return detail::take_in_order(pool, order, capacity, true);
}

/// Greedy approximation of the budgeted priority arg-max.
inline Selection select_priority(const CandidatePool& pool, double capacity) {
  detail::require_capacity(capacity);
  auto order = detail::iota_indices(pool.size());
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return triage_order(pool[a], pool[b]); });
  return detail::take_in_order(pool, order, capacity, false);
}

/// Diversity weight 1 / (1 + n), n = already-selected reports of the same type.
inline double diversity_score(int same_type_selected) {
  return 1.0 / (1.0 + static_cast<double>(std::max(0, same_type_selected)));
}

inline double diversity_score(const Report& report, std::span<const Report> already_selected) {
  int n = 0;
  for (const auto& s : already_selected)
    if (s.risk_type == report.risk_type) ++n;
  return diversity_score(n);
}

/// Sequential greedy on priority x diversity weight.
///
/// Within a risk type every candidate shares the same weight, so the best
/// candidate of a type is its highest-triage report that still fits. Residual
/// capacity only shrinks, so a report that does not fit now never will; each
/// per-type cursor therefore only moves forward.
inline Selection select_diversity(const CandidatePool& pool, double capacity) {
  detail::require_capacity(capacity);

  struct TypeQueue {
    std::vector<std::size_t> members;  // triage order
    std::size_t cursor = 0;
    int selected = 0;
  };
  std::map<RiskType, TypeQueue> queues;
  for (std::size_t i = 0; i < pool.size(); ++i) queues[pool[i].risk_type].members.push_back(i);
  for (auto& [rt, q] : queues)
    std::sort(q.members.begin(), q.members.end(),
              [&](std::size_t a, std::size_t b) { return triage_order(pool[a], pool[b]); });

  Selection sel;
  for (;;) {
    TypeQueue* best_queue = nullptr;
    double best_score = -1.0;
    for (auto& [rt, q] : queues) {
      while (q.cursor < q.members.size() &&
             sel.total_cost + pool[q.members[q.cursor]].supervision_cost > capacity)
        ++q.cursor;
      if (q.cursor == q.members.size()) continue;
      const Report& cand = pool[q.members[q.cursor]];
      const double score = cand.priority * diversity_score(q.selected);
      if (best_queue == nullptr || score > best_score ||
          (score == best_score && triage_order(cand, pool[best_queue->members[best_queue->cursor]]))) {
        best_queue = &q;
        best_score = score;
      }
    }
    if (best_queue == nullptr) break;
    const Report& chosen = pool[best_queue->members[best_queue->cursor++]];
    sel.ids.push_back(chosen.id);
    sel.total_cost += chosen.supervision_cost;
    ++best_queue->selected;
  }
  return sel;
}

inline constexpr std::size_t kOracleMaxPool = 20;

/// Exact budgeted arg-max of total priority by enumerating all subsets.
/// Ties go to the lexicographically smallest sorted id set. Test oracle only.
inline Selection knapsack_oracle(const CandidatePool& pool, double capacity) {
  detail::require_capacity(capacity);
  const std::size_t n = pool.size();
  if (n > kOracleMaxPool)
    throw ValidationError("pool", "exhaustive oracle limited to " +
                                      std::to_string(kOracleMaxPool) + " reports");

  // Indices sorted by id so the bit pattern of a mask maps to a sorted id set.
  auto by_id = detail::iota_indices(n);
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return pool[a].id < pool[b].id; });

  auto ids_of = [&](std::uint32_t mask) {
    std::vector<ReportId> ids;
    for (std::size_t k = 0; k < n; ++k)
      if (mask & (1u << k)) ids.push_back(pool[by_id[k]].id);
    return ids;
  };

  std::uint32_t best_mask = 0;
  double best_value = 0.0;
  const std::uint32_t end = n == 0 ? 1u : (1u << n);
  for (std::uint32_t mask = 1; mask < end; ++mask) {
    double cost = 0.0, value = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) {
        cost += pool[by_id[k]].supervision_cost;
        value += pool[by_id[k]].priority;
      }
    }
    if (cost > capacity) continue;
    if (value > best_value || (value == best_value && ids_of(mask) < ids_of(best_mask))) {
      best_value = value;
      best_mask = mask;
    }
  }

  Selection sel;
  for (std::size_t k = 0; k < n; ++k) {
    if (best_mask & (1u << k)) {
      sel.ids.push_back(pool[by_id[k]].id);
      sel.total_cost += pool[by_id[k]].supervision_cost;
    }
  }
  return sel;
}

/// Dispatches to the configured policy.
inline Selection select(Policy policy, const CandidatePool& pool, double capacity, RngStream& rng,
                        bool fifo_skip_mode = false) {
  switch (policy) {
    case Policy::non_prioritised: return select_fifo(pool, capacity, fifo_skip_mode);
    case Policy::random: return select_random(pool, capacity, rng);
    case Policy::priority: return select_priority(pool, capacity);
    case Policy::diversity: return select_diversity(pool, capacity);
  }
  return {};
}

/// Sum of priorities of the selected ids.
inline double total_priority(const CandidatePool& pool, const Selection& sel) {
  double sum = 0.0;
  for (ReportId id : sel.ids)
    for (const auto& r : pool.reports())
      if (r.id == id) sum += r.priority;
  return sum;
}

}  // namespace supervisim
