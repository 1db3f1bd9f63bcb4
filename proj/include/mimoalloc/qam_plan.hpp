#pragma once

#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mimoalloc/errors.hpp"

namespace mimoalloc {

/// 1 (deactivated) or a power of four.
constexpr bool is_qam_size(std::uint64_t m) {
  return m == 1 || (m >= 4 && std::has_single_bit(m) && std::countr_zero(m) % 2 == 0);
}

constexpr int bits_per_symbol(std::uint64_t m) { return std::countr_zero(m); }

/// Per-subchannel square-QAM sizes; M = 1 marks a deactivated subchannel.
class QamPlan {
 public:
  QamPlan() = default;

  explicit QamPlan(std::vector<std::uint64_t> sizes) : sizes_(std::move(sizes)) {
    for (std::size_t i = 0; i < sizes_.size(); ++i) check(i, sizes_[i]);
  }

  static QamPlan deactivated(std::size_t m) { return QamPlan(std::vector<std::uint64_t>(m, 1)); }

  std::size_t size() const { return sizes_.size(); }
  std::uint64_t order(std::size_t i) const { return sizes_.at(i); }
  int bits(std::size_t i) const { return bits_per_symbol(sizes_.at(i)); }
  bool active(std::size_t i) const { return sizes_.at(i) > 1; }
  const std::vector<std::uint64_t>& sizes() const { return sizes_; }

  void set(std::size_t i, std::uint64_t m) {
    check(i, m);
    sizes_.at(i) = m;
  }

  /// Total bits per channel use.
  long long rate() const {
    return std::accumulate(sizes_.begin(), sizes_.end(), 0LL,
                           [](long long acc, std::uint64_t m) { return acc + bits_per_symbol(m); });
  }

  std::size_t active_count() const {
    std::size_t c = 0;
    for (auto m : sizes_) c += m > 1 ? 1 : 0;
    return c;
  }

  friend bool operator==(const QamPlan&, const QamPlan&) = default;

 private:
  static void check(std::size_t i, std::uint64_t m) {
    if (!is_qam_size(m)) {
      throw DomainError("QamPlan: size " + std::to_string(m) + " on subchannel " + std::to_string(i) +
                        " is neither 1 nor a power of 4");
    }
  }

  std::vector<std::uint64_t> sizes_;
};

}  // namespace mimoalloc
