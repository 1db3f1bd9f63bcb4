#pragma once

// Power allocation over parallel subchannels: waterfilling (WF), the
// closed-form mercury/waterfilling approximation (MWF), BER-minimizing
// error/waterfilling (EWF) and the SER-gap waterfilling (SER_WF).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mimoalloc/channel.hpp"
#include "mimoalloc/errors.hpp"
#include "mimoalloc/numerics.hpp"
#include "mimoalloc/qam_plan.hpp"

namespace mimoalloc {

enum class Policy { wf, mwf, ewf, ser_wf };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::wf: return "wf";
    case Policy::mwf: return "mwf";
    case Policy::ewf: return "ewf";
    case Policy::ser_wf: return "ser_wf";
  }
  return "?";
}

struct PowerAllocation {
  std::vector<double> p;
  double lambda = 0.0;  // Lagrange multiplier of the budget constraint
  std::vector<bool> active;
  Policy policy = Policy::wf;

  std::size_t size() const { return p.size(); }
  double total() const { return std::accumulate(p.begin(), p.end(), 0.0); }
};

namespace detail {

inline void check_eta(std::span<const double> eta, const char* who) {
  if (eta.empty()) throw DomainError(std::string(who) + ": empty profile");
  for (double e : eta) {
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError(std::string(who) + ": noise powers must be finite and positive");
  }
}

inline void check_budget(double P, const char* who) {
  if (!(P > 0.0) || !std::isfinite(P)) throw DomainError(std::string(who) + ": power budget must be finite and positive");
}

inline void check_plan(std::span<const double> eta, const QamPlan& plan, const char* who) {
  if (plan.size() != eta.size()) throw DomainError(std::string(who) + ": plan and profile lengths differ");
}

// Exact active-set solution of p_i = (level - w_i)_+ with sum p_i = P.
inline PowerAllocation waterfill_weighted(std::span<const double> weights, double P, Policy policy) {
  const std::size_t m = weights.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] < weights[b]; });

  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t k = 0; k < m; ++k) prefix[k + 1] = prefix[k] + weights[order[k]];

  double level = P + weights[order[0]];
  for (std::size_t k = m; k >= 1; --k) {
    const double candidate = (P + prefix[k]) / static_cast<double>(k);
    if (candidate > weights[order[k - 1]]) {
      level = candidate;
      break;
    }
  }

  PowerAllocation out{std::vector<double>(m, 0.0), level, std::vector<bool>(m, false), policy};
  for (std::size_t i = 0; i < m; ++i) {
    if (weights[i] < level) {
      out.p[i] = level - weights[i];
      out.active[i] = true;
    }
  }
  return out;
}

inline std::vector<std::size_t> eligible_channels(const QamPlan& plan) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan.active(i)) idx.push_back(i);
  }
  return idx;
}

// Solves sum_i p_i(lambda) = P over log(lambda) in [lo, hi], with every p_i
// decreasing in lambda. Residual is measured relative to P.
template <class PowerAt>
double solve_log_multiplier(PowerAt&& power_at, double log_lo, double log_hi, double P,
                            const numerics::Tolerance& tol, const char* who) {
  auto residual = [&](double t) { return (power_at(t) - P) / P; };
  try {
    return numerics::bisect(residual, log_lo, log_hi, tol);
  } catch (const BracketingError& e) {
    throw ConvergenceError(std::string(who) + ": multiplier bracket [exp(" + std::to_string(log_lo) + "), exp(" +
                           std::to_string(log_hi) + ")] does not straddle the budget: " + e.what());
  }
}

}  // namespace detail

/// Classical waterfilling p_i = (lambda - eta_i)_+.
inline PowerAllocation waterfill(std::span<const double> eta, double P) {
  detail::check_eta(eta, "waterfill");
  detail::check_budget(P, "waterfill");
  return detail::waterfill_weighted(eta, P, Policy::wf);
}

inline PowerAllocation waterfill(const SubchannelProfile& profile, double P) { return waterfill(profile.eta, P); }

/// SNR gap Gamma = (2/3) ln(2 / SER) of the SER-targeted QAM sizing rule.
inline double ser_gap(double target_ser) {
  if (!(target_ser > 0.0 && target_ser < 1.0)) throw DomainError("target SER must lie in (0, 1)");
  return (2.0 / 3.0) * std::log(2.0 / target_ser);
}

/// Waterfilling on gap-scaled noise: p_i = (lambda - Gamma * eta_i)_+.
inline PowerAllocation ser_waterfill(std::span<const double> eta, double target_ser, double P) {
  detail::check_eta(eta, "ser_waterfill");
  detail::check_budget(P, "ser_waterfill");
  const double gap = ser_gap(target_ser);
  std::vector<double> scaled(eta.begin(), eta.end());
  for (double& e : scaled) e *= gap;
  return detail::waterfill_weighted(scaled, P, Policy::ser_wf);
}

inline PowerAllocation ser_waterfill(const SubchannelProfile& profile, double target_ser, double P) {
  return ser_waterfill(profile.eta, target_ser, P);
}

/// Closed-form MWF power of one subchannel at multiplier lambda:
/// (eta/2) (sqrt((M-1)^2 + 4(M-1)/(eta lambda)) - M - 1)_+ .
inline double mwf_power(double eta, double M, double lambda) {
  const double a = M - 1.0;
  const double excess = 4.0 * a / (eta * lambda) - 4.0 * M;  // D^2 - (M+1)^2
  if (!(excess > 0.0)) return 0.0;
  const double D = std::sqrt(a * a + 4.0 * a / (eta * lambda));
  return 0.5 * eta * excess / (D + M + 1.0);
}

/// Multiplier at which one MWF subchannel receives exactly power x.
inline double mwf_multiplier_at(double eta, double M, double x) {
  return (M - 1.0) / (x * x / eta + (M + 1.0) * x + M * eta);
}

inline PowerAllocation mercury_waterfill(std::span<const double> eta, const QamPlan& plan, double P,
                                         const numerics::Tolerance& tol = {}) {
  detail::check_eta(eta, "mercury_waterfill");
  detail::check_budget(P, "mercury_waterfill");
  detail::check_plan(eta, plan, "mercury_waterfill");
  const auto idx = detail::eligible_channels(plan);
  if (idx.empty()) throw DomainError("mercury_waterfill: no subchannel with M >= 4");

  const auto share = P / static_cast<double>(idx.size());
  double lam_lo = 0.0;
  double lam_hi = 0.0;
  for (auto i : idx) {
    const double M = static_cast<double>(plan.order(i));
    lam_lo = std::max(lam_lo, mwf_multiplier_at(eta[i], M, P));
    lam_hi = std::max(lam_hi, mwf_multiplier_at(eta[i], M, share));
  }

  auto total_at = [&](double t) {
    const double lam = std::exp(t);
    double s = 0.0;
    for (auto i : idx) s += mwf_power(eta[i], static_cast<double>(plan.order(i)), lam);
    return s;
  };
  const double log_lam = idx.size() == 1
                             ? std::log(lam_lo)
                             : detail::solve_log_multiplier(total_at, std::log(lam_lo), std::log(lam_hi), P, tol,
                                                            "mercury_waterfill");

  const double lam = std::exp(log_lam);
  PowerAllocation out{std::vector<double>(eta.size(), 0.0), lam, std::vector<bool>(eta.size(), false), Policy::mwf};
  for (auto i : idx) {
    out.p[i] = idx.size() == 1 ? P : mwf_power(eta[i], static_cast<double>(plan.order(i)), lam);
    out.active[i] = out.p[i] > 0.0;
  }
  return out;
}

inline PowerAllocation mercury_waterfill(const SubchannelProfile& profile, const QamPlan& plan, double P,
                                         const numerics::Tolerance& tol = {}) {
  return mercury_waterfill(profile.eta, plan, P, tol);
}

/// Coefficients of the Lambert-W form of the EWF solution, p = W((A lambda)^-2) / B.
struct EwfCoefficients {
  double B = 0.0;
  double A = 0.0;

  static EwfCoefficients of(double eta, double M) {
    const double B = 3.0 / ((M - 1.0) * eta);
    const double sqrtM = std::sqrt(M);
    const double A = std::sqrt(2.0 * std::numbers::pi * M) * std::log2(M) / (2.0 * B * (sqrtM - 1.0));
    return {B, A};
  }

  double power_at_log(double log_lambda) const {
    return numerics::lambert_w0_of_log(-2.0 * (std::log(A) + log_lambda)) / B;
  }

  /// log(lambda) at which this subchannel receives power x.
  double log_multiplier_at(double x) const {
    const double w = x * B;
    return -std::log(A) - 0.5 * (std::log(w) + w);
  }
};

inline PowerAllocation error_waterfill(std::span<const double> eta, const QamPlan& plan, double P,
                                       const numerics::Tolerance& tol = {}) {
  detail::check_eta(eta, "error_waterfill");
  detail::check_budget(P, "error_waterfill");
  detail::check_plan(eta, plan, "error_waterfill");
  const auto idx = detail::eligible_channels(plan);
  if (idx.empty()) throw DomainError("error_waterfill: no subchannel with M >= 4");

  std::vector<EwfCoefficients> coef;
  coef.reserve(idx.size());
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = -std::numeric_limits<double>::infinity();
  const double share = P / static_cast<double>(idx.size());
  for (auto i : idx) {
    coef.push_back(EwfCoefficients::of(eta[i], static_cast<double>(plan.order(i))));
    t_lo = std::max(t_lo, coef.back().log_multiplier_at(P));
    t_hi = std::max(t_hi, coef.back().log_multiplier_at(share));
  }

  auto total_at = [&](double t) {
    double s = 0.0;
    for (const auto& c : coef) s += c.power_at_log(t);
    return s;
  };
  const double t = idx.size() == 1 ? t_lo : detail::solve_log_multiplier(total_at, t_lo, t_hi, P, tol, "error_waterfill");

  PowerAllocation out{std::vector<double>(eta.size(), 0.0), std::exp(t), std::vector<bool>(eta.size(), false),
                      Policy::ewf};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.p[idx[k]] = idx.size() == 1 ? P : coef[k].power_at_log(t);
    out.active[idx[k]] = out.p[idx[k]] > 0.0;
  }
  return out;
}

inline PowerAllocation error_waterfill(const SubchannelProfile& profile, const QamPlan& plan, double P,
                                       const numerics::Tolerance& tol = {}) {
  return error_waterfill(profile.eta, plan, P, tol);
}

/// Number of subchannels with zero power.
inline std::size_t count_deactivated(const PowerAllocation& alloc) {
  return static_cast<std::size_t>(std::count(alloc.p.begin(), alloc.p.end(), 0.0));
}

/// Number of subchannels with zero power or M = 1.
inline std::size_t count_deactivated(const PowerAllocation& alloc, const QamPlan& plan) {
  if (plan.size() != alloc.size()) throw DomainError("count_deactivated: plan and allocation lengths differ");
  std::size_t k = 0;
  for (std::size_t i = 0; i < alloc.size(); ++i) k += (alloc.p[i] == 0.0 || !plan.active(i)) ? 1 : 0;
  return k;
}

}  // namespace mimoalloc
