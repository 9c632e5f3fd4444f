#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace xps {

/// Welford accumulator with Chan's pairwise merge.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningStats& other) noexcept {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    m2_ += other.m2_ + delta * delta * (na * nb / n);
    n_ += other.n_;
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept {
    return n_ ? mean_ : std::numeric_limits<double>::quiet_NaN();
  }
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : std::numeric_limits<double>::quiet_NaN();
  }
  double stddev() const noexcept { return std::sqrt(variance()); }
  /// Standard error of the mean: sample std / sqrt(count).
  double sem() const noexcept { return stddev() / std::sqrt(static_cast<double>(n_)); }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace xps
