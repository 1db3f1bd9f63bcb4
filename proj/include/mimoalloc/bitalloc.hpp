#pragma once

// Greedy 2-bit adjustment of QAM sizes to an exact target rate. While the
// plan carries too few bits, the subchannel with the lowest BER is quadrupled;
// while it carries too many, the one with the highest BER is quartered, and a
// subchannel reaching M = 1 is switched off (BER sentinel 0).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mimoalloc/errors.hpp"
#include "mimoalloc/qam.hpp"
#include "mimoalloc/qam_plan.hpp"

namespace mimoalloc {

/// Largest constellation the increase branch may produce (4^15).
inline constexpr std::uint64_t kMaxQamSize = std::uint64_t{1} << 30;

/// Worst BER over subchannels with M >= 4; 0 when none is active.
inline double worst_case_ber(const QamPlan& plan, std::span<const double> eta, std::span<const double> p) {
  if (plan.size() != eta.size() || p.size() != eta.size()) throw DomainError("worst_case_ber: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan.active(i)) worst = std::max(worst, ber_analytic(plan.order(i), p[i], eta[i]));
  }
  return worst;
}

class BitAllocator {
 public:
  BitAllocator(QamPlan plan, std::span<const double> eta, std::span<const double> p, long long target_rate)
      : plan_(std::move(plan)), eta_(eta.begin(), eta.end()), p_(p.begin(), p.end()), target_(target_rate) {
    if (target_rate < 0 || target_rate % 2 != 0) {
      throw DomainError("bit_allocate: target rate must be even and nonnegative, got " + std::to_string(target_rate));
    }
    if (plan_.size() != eta_.size() || p_.size() != eta_.size()) throw DomainError("bit_allocate: length mismatch");

    surplus_ = plan_.rate() - target_;
    ber_.assign(plan_.size(), 0.0);
    for (std::size_t i = 0; i < plan_.size(); ++i) {
      if (plan_.active(i)) ber_[i] = ber_analytic(plan_.order(i), p_[i], eta_[i]);
    }
    for (std::size_t i = 0; i < plan_.size(); ++i) {
      if (surplus_ < 0 ? upgradable(i) : plan_.active(i)) heap_.push_back(i);
    }
    std::make_heap(heap_.begin(), heap_.end(), Order{this});
    comparisons_ = 0;
  }

  bool done() const { return surplus_ == 0; }
  /// Bits above target (negative while bits are missing).
  long long surplus() const { return surplus_; }
  const QamPlan& plan() const { return plan_; }
  std::span<const double> ber() const { return ber_; }
  std::size_t steps() const { return steps_; }
  /// Comparisons spent in the priority structure since construction.
  std::size_t comparisons() const { return comparisons_; }

  /// One 2-bit move; returns the subchannel it touched.
  std::size_t step() {
    if (done()) throw DomainError("bit_allocate: target rate already reached");
    if (heap_.empty()) {
      throw InfeasibleRateError("bit_allocate: no subchannel can take more bits (missing " +
                                std::to_string(-surplus_) + " bits)");
    }
    std::pop_heap(heap_.begin(), heap_.end(), Order{this});
    const std::size_t t = heap_.back();
    heap_.pop_back();

    if (surplus_ < 0) {
      plan_.set(t, plan_.order(t) * 4);
      ber_[t] = ber_analytic(plan_.order(t), p_[t], eta_[t]);
      if (upgradable(t)) push(t);
      surplus_ += 2;
    } else {
      plan_.set(t, plan_.order(t) / 4);
      if (plan_.active(t)) {
        ber_[t] = ber_analytic(plan_.order(t), p_[t], eta_[t]);
        push(t);
      } else {
        ber_[t] = 0.0;
      }
      surplus_ -= 2;
    }
    ++steps_;
    return t;
  }

  const QamPlan& run() {
    while (!done()) step();
    return plan_;
  }

 private:
  // Heap order: the top is the argmin of (ber, index) while bits are missing
  // and the argmax of ber (lowest index on ties) while bits are in excess.
  struct Order {
    BitAllocator* self;
    bool operator()(std::size_t a, std::size_t b) const {
      ++self->comparisons_;
      const double x = self->ber_[a];
      const double y = self->ber_[b];
      if (self->surplus_ < 0) return x > y || (x == y && a > b);
      return x < y || (x == y && a > b);
    }
  };

  bool upgradable(std::size_t i) const {
    return plan_.active(i) && p_[i] > 0.0 && plan_.order(i) < kMaxQamSize;
  }

  void push(std::size_t i) {
    heap_.push_back(i);
    std::push_heap(heap_.begin(), heap_.end(), Order{this});
  }

  QamPlan plan_;
  std::vector<double> eta_;
  std::vector<double> p_;
  long long target_;
  long long surplus_ = 0;
  std::vector<double> ber_;
  std::vector<std::size_t> heap_;
  std::size_t steps_ = 0;
  std::size_t comparisons_ = 0;
};

struct BitAllocStats {
  std::size_t steps = 0;
  std::size_t comparisons = 0;
};

/// Adjusts `plan` to carry exactly `target_rate` bits per channel use.
inline QamPlan bit_allocate(const QamPlan& plan, std::span<const double> eta, std::span<const double> p,
                            long long target_rate, BitAllocStats* stats = nullptr) {
  BitAllocator alloc(plan, eta, p, target_rate);
  alloc.run();
  if (stats) *stats = {alloc.steps(), alloc.comparisons()};
  return alloc.plan();
}

}  // namespace mimoalloc
