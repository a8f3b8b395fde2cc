#pragma once

#include <chrono>
#include <vector>

#include "supervisim/ingest.hpp"
#include "supervisim/rng.hpp"

namespace supervisim::testing {

/// Toxicity-flagged conversations spread over `months` calendar months
/// starting 2023-04. Scores are Beta-like skewed draws; turns in 1..20.
inline std::vector<ReplayRecord> synthetic_corpus(std::size_t n, std::uint64_t seed, int months = 12) {
  using namespace std::chrono;
  RngStream rng(seed, 0, "corpus");
  std::vector<ReplayRecord> out;
  out.reserve(n);
  const sys_days start = year{2023} / April / 1;
  for (std::size_t i = 0; i < n; ++i) {
    ReplayRecord r;
    r.record_id = "conv-" + std::to_string(i);
    const int month = static_cast<int>(rng.uniform() * months);
    const sys_days first = sys_days{year_month_day{start} + std::chrono::months{month}};
    r.timestamp = first + days{static_cast<int>(rng.uniform() * 28)} + seconds{static_cast<int>(rng.uniform() * 86400)};
    r.dialogue_turns = 1 + static_cast<int>(rng.uniform() * 20);
    for (auto cat : kScoreCategories) {
      const double u = rng.uniform();
      r.scores[std::string(cat)] = u * u * u;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace supervisim::testing
