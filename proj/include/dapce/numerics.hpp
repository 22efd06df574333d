#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace dapce {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline constexpr std::size_t kReductionBlock = 4096;

/// Deterministic sum: compensated sums over fixed blocks of kReductionBlock
/// elements, combined by a pairwise tree. The result depends only on the
/// element order, never on how a caller partitions work.
template <typename Fn>
double blocked_sum(std::size_t n, Fn&& term) {
  if (n == 0) return 0.0;
  std::vector<double> partials;
  partials.reserve(n / kReductionBlock + 1);
  for (std::size_t start = 0; start < n; start += kReductionBlock) {
    const std::size_t stop = std::min(n, start + kReductionBlock);
    CompensatedSum acc;
    for (std::size_t i = start; i < stop; ++i) acc.add(term(i));
    partials.push_back(acc.value());
  }
  while (partials.size() > 1) {
    std::vector<double> next;
    next.reserve((partials.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < partials.size(); i += 2) next.push_back(partials[i] + partials[i + 1]);
    if (partials.size() % 2 == 1) next.push_back(partials.back());
    partials.swap(next);
  }
  return partials.front();
}

inline double blocked_sum(std::span<const double> values) {
  return blocked_sum(values.size(), [&](std::size_t i) { return values[i]; });
}

inline double sign_or_zero(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace dapce
