#pragma once

// Square Gray-mapped QAM, the per-subchannel BER approximation, capacity
// expressions and adaptive QAM sizing rules.

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mimoalloc/channel.hpp"
#include "mimoalloc/errors.hpp"
#include "mimoalloc/numerics.hpp"
#include "mimoalloc/power.hpp"
#include "mimoalloc/qam_plan.hpp"

namespace mimoalloc {

constexpr std::uint64_t gray_encode(std::uint64_t v) { return v ^ (v >> 1); }

constexpr std::uint64_t gray_decode(std::uint64_t g) {
  for (std::uint64_t shift = 1; shift < 64; shift <<= 1) g ^= g >> shift;
  return g;
}

/// Square M-QAM with per-dimension levels (2l - sqrt(M) - 1) sqrt(3/(M-1)),
/// so that E[Re^2] = E[Im^2] = 1. A symbol label has log2(M) bits: the high
/// half selects the in-phase level, the low half the quadrature level, each
/// through a binary-reflected Gray code.
class Constellation {
 public:
  explicit Constellation(std::uint64_t M) : M_(M) {
    if (M < 4 || !is_qam_size(M)) throw DomainError("Constellation: M must be a power of 4, at least 4");
    if (M > (std::uint64_t{1} << 40)) throw DomainError("Constellation: M too large to tabulate");
    half_bits_ = bits_per_symbol(M) / 2;
    side_ = std::uint64_t{1} << half_bits_;
    scale_ = std::sqrt(3.0 / static_cast<double>(M - 1));
    levels_.resize(side_);
    for (std::uint64_t l = 0; l < side_; ++l) {
      levels_[l] = (2.0 * static_cast<double>(l) + 1.0 - static_cast<double>(side_)) * scale_;
    }
  }

  std::uint64_t size() const { return M_; }
  int bits() const { return 2 * half_bits_; }
  std::span<const double> levels() const { return levels_; }

  /// Level index (0 = most negative) carrying a per-dimension Gray label.
  std::uint64_t level_of(std::uint64_t dim_label) const { return gray_decode(dim_label); }

  std::complex<double> map(std::uint64_t label) const {
    const std::uint64_t mask = side_ - 1;
    return {levels_[level_of((label >> half_bits_) & mask)], levels_[level_of(label & mask)]};
  }

  /// Nearest point per dimension, returned as its label.
  std::uint64_t slice(std::complex<double> y) const {
    return (gray_encode(nearest_level(y.real())) << half_bits_) | gray_encode(nearest_level(y.imag()));
  }

  std::complex<double> modulate(std::span<const std::uint8_t> bits) const {
    if (static_cast<int>(bits.size()) != this->bits()) {
      throw DomainError("modulate: expected " + std::to_string(this->bits()) + " bits, got " +
                        std::to_string(bits.size()));
    }
    std::uint64_t label = 0;
    for (auto b : bits) label = (label << 1) | (b ? 1u : 0u);
    return map(label);
  }

  std::vector<std::uint8_t> demodulate(std::complex<double> y) const {
    const std::uint64_t label = slice(y);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(bits()));
    for (int i = 0; i < bits(); ++i) out[static_cast<std::size_t>(i)] = (label >> (bits() - 1 - i)) & 1u;
    return out;
  }

 private:
  std::uint64_t nearest_level(double x) const {
    if (!std::isfinite(x)) return x > 0 ? side_ - 1 : 0;
    const double pos = std::round((x / scale_ + static_cast<double>(side_) - 1.0) / 2.0);
    if (pos <= 0.0) return 0;
    if (pos >= static_cast<double>(side_ - 1)) return side_ - 1;
    return static_cast<std::uint64_t>(pos);
  }

  std::uint64_t M_;
  int half_bits_ = 0;
  std::uint64_t side_ = 0;
  double scale_ = 0.0;
  std::vector<double> levels_;
};

inline std::complex<double> modulate(std::span<const std::uint8_t> bits, std::uint64_t M) {
  return Constellation(M).modulate(bits);
}

inline std::vector<std::uint8_t> demodulate(std::complex<double> y, std::uint64_t M) {
  return Constellation(M).demodulate(y);
}

/// Gray-mapped square QAM bit error rate at SNR p/eta (SER divided by bits
/// per symbol, union-bound form).
inline double ber_analytic(std::uint64_t M, double p, double eta) {
  if (M < 4 || !is_qam_size(M)) throw DomainError("ber_analytic: M must be a power of 4, at least 4");
  if (!(p >= 0.0) || !(eta > 0.0)) throw DomainError("ber_analytic: requires p >= 0 and eta > 0");
  const double m = static_cast<double>(M);
  const double prefactor = 4.0 / std::log2(m) * (1.0 - 1.0 / std::sqrt(m));
  return prefactor * numerics::q_function(std::sqrt(p / eta * 3.0 / (m - 1.0)));
}

namespace detail {

inline void check_lengths(std::size_t a, std::size_t b, const char* who) {
  if (a != b) throw DomainError(std::string(who) + ": length mismatch");
}

}  // namespace detail

/// Gaussian-input capacity sum log2(1 + p_i/eta_i).
inline double capacity_gaussian(std::span<const double> eta, std::span<const double> p) {
  detail::check_lengths(eta.size(), p.size(), "capacity_gaussian");
  double c = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) c += std::log2(1.0 + p[i] / eta[i]);
  return c;
}

inline double capacity_gaussian(const SubchannelProfile& profile, const PowerAllocation& alloc) {
  return capacity_gaussian(profile.eta, alloc.p);
}

/// Approximate QAM-input capacity sum [log2(1 + r_i) - log2(1 + r_i/M_i)],
/// r_i = p_i/eta_i. Real-valued sizes are accepted; M <= 1 or p = 0 adds 0.
inline double capacity_qam(std::span<const double> eta, std::span<const double> p, std::span<const double> sizes) {
  detail::check_lengths(eta.size(), p.size(), "capacity_qam");
  detail::check_lengths(eta.size(), sizes.size(), "capacity_qam");
  double c = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (sizes[i] <= 1.0 || p[i] <= 0.0) continue;
    const double r = p[i] / eta[i];
    c += std::log2(1.0 + r) - std::log2(1.0 + r / sizes[i]);
  }
  return c;
}

inline double capacity_qam(std::span<const double> eta, std::span<const double> p, const QamPlan& plan) {
  std::vector<double> sizes(plan.sizes().begin(), plan.sizes().end());
  return capacity_qam(eta, p, sizes);
}

inline double capacity_qam(const SubchannelProfile& profile, const PowerAllocation& alloc, const QamPlan& plan) {
  return capacity_qam(profile.eta, alloc.p, plan);
}

/// Capacity estimate sum (log2(1 + p_i/eta_i) - 1)_+ under M_i ~ p_i/eta_i.
inline double capacity_lemma4(std::span<const double> eta, std::span<const double> p) {
  detail::check_lengths(eta.size(), p.size(), "capacity_lemma4");
  double c = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) c += std::max(0.0, std::log2(1.0 + p[i] / eta[i]) - 1.0);
  return c;
}

inline double capacity_lemma4(const SubchannelProfile& profile, const PowerAllocation& alloc) {
  return capacity_lemma4(profile.eta, alloc.p);
}

/// Power of four nearest to `ratio` in the log domain; 1 below ratio 2.
inline std::uint64_t nearest_qam_size(double ratio) {
  if (!(ratio >= 2.0)) return 1;
  const double exponent = std::round(std::log2(ratio) / 2.0);
  if (exponent >= 31.0) return std::uint64_t{1} << 62;
  return std::uint64_t{1} << (2 * static_cast<int>(exponent));
}

/// Sizes M_i ~ p_i/eta_i from a waterfilling allocation.
inline QamPlan aqam_from_wf(std::span<const double> eta, const PowerAllocation& alloc) {
  detail::check_lengths(eta.size(), alloc.size(), "aqam_from_wf");
  std::vector<std::uint64_t> sizes(eta.size(), 1);
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (alloc.p[i] > 0.0) sizes[i] = nearest_qam_size(alloc.p[i] / eta[i]);
  }
  return QamPlan(std::move(sizes));
}

inline QamPlan aqam_from_wf(const SubchannelProfile& profile, const PowerAllocation& alloc) {
  return aqam_from_wf(profile.eta, alloc);
}

/// Sizes M_i ~ 1 + p_i/(eta_i Gamma) for a target symbol error rate.
inline QamPlan aqam_palomar(std::span<const double> eta, const PowerAllocation& alloc, double target_ser) {
  detail::check_lengths(eta.size(), alloc.size(), "aqam_palomar");
  const double gap = ser_gap(target_ser);
  std::vector<std::uint64_t> sizes(eta.size(), 1);
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (alloc.p[i] > 0.0) sizes[i] = nearest_qam_size(1.0 + alloc.p[i] / (eta[i] * gap));
  }
  return QamPlan(std::move(sizes));
}

inline QamPlan aqam_palomar(const SubchannelProfile& profile, const PowerAllocation& alloc, double target_ser) {
  return aqam_palomar(profile.eta, alloc, target_ser);
}

}  // namespace mimoalloc
