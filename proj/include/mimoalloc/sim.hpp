#pragma once

// End-to-end SVD-precoded link: plan construction, Monte Carlo BER trials and
// the two experiment drivers (capacity versus deactivated subchannels, BER
// versus SNR).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mimoalloc/bitalloc.hpp"
#include "mimoalloc/channel.hpp"
#include "mimoalloc/errors.hpp"
#include "mimoalloc/parallel.hpp"
#include "mimoalloc/power.hpp"
#include "mimoalloc/qam.hpp"

namespace mimoalloc {

enum class AqamRule { lemma4, palomar };
enum class Precoder { full_svd, truncated_svd };

inline const char* to_string(AqamRule r) { return r == AqamRule::lemma4 ? "lemma4" : "palomar"; }
inline const char* to_string(Precoder p) { return p == Precoder::full_svd ? "full_svd" : "truncated_svd"; }
inline const char* to_string(ProfileSource s) { return s == ProfileSource::empirical ? "empirical" : "asymptotic"; }

inline double noise_variance_for(double power, double snr_db) { return power / std::pow(10.0, snr_db / 10.0); }

struct LinkConfig {
  int n = 32;
  double power = 64.0;
  double snr_db = 10.0;
  long long rate = 0;
  Policy allocator = Policy::ewf;
  AqamRule aqam = AqamRule::lemma4;
  std::optional<double> target_ser;
  Precoder precoder = Precoder::full_svd;
  ProfileSource profile = ProfileSource::empirical;

  double noise_variance() const { return noise_variance_for(power, snr_db); }

  bool needs_target_ser() const { return aqam == AqamRule::palomar || allocator == Policy::ser_wf; }

  void validate() const {
    if (n < 1) throw ConfigError("n must be positive");
    if (!(power > 0.0) || !std::isfinite(power)) throw ConfigError("power must be positive");
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
    if (rate < 0 || rate % 2 != 0) throw ConfigError("rate must be an even nonnegative integer, got " + std::to_string(rate));
    if (needs_target_ser() && !target_ser) {
      throw ConfigError(std::string("target_ser is required with allocator=") + to_string(allocator) +
                        " and aqam=" + to_string(aqam));
    }
    if (target_ser && !(*target_ser > 0.0 && *target_ser < 1.0)) throw ConfigError("target_ser must lie in (0, 1)");
  }
};

struct LinkPlan {
  PowerAllocation alloc;
  QamPlan plan;
  std::size_t k_opt = 0;
  BitAllocStats bitalloc;

  /// Subchannels that carry data: M >= 4 and positive power.
  bool carries(std::size_t i) const { return plan.active(i) && alloc.p[i] > 0.0; }

  /// Smallest prefix of subchannels containing every data-carrying one.
  int precoding_rank() const {
    int r = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (carries(i)) r = static_cast<int>(i) + 1;
    }
    return r;
  }
};

namespace detail {

inline PowerAllocation zero_allocation(std::size_t m, Policy policy) {
  return {std::vector<double>(m, 0.0), 0.0, std::vector<bool>(m, false), policy};
}

inline PowerAllocation allocate_on_active(Policy policy, std::span<const double> eta, const QamPlan& plan, double P,
                                          std::optional<double> target_ser) {
  if (plan.active_count() == 0) return zero_allocation(eta.size(), policy);
  switch (policy) {
    case Policy::mwf: return mercury_waterfill(eta, plan, P);
    case Policy::ewf: return error_waterfill(eta, plan, P);
    case Policy::wf:
    case Policy::ser_wf: {
      std::vector<std::size_t> idx;
      std::vector<double> sub;
      for (std::size_t i = 0; i < plan.size(); ++i) {
        if (plan.active(i)) {
          idx.push_back(i);
          sub.push_back(eta[i]);
        }
      }
      const auto part = policy == Policy::wf ? waterfill(sub, P) : ser_waterfill(sub, *target_ser, P);
      auto out = zero_allocation(eta.size(), policy);
      out.lambda = part.lambda;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        out.p[idx[k]] = part.p[k];
        out.active[idx[k]] = part.active[k];
      }
      return out;
    }
  }
  return zero_allocation(eta.size(), policy);
}

}  // namespace detail

/// Power allocation, QAM sizes and deactivation count for one profile:
/// initial waterfilling, adaptive QAM sizing, re-allocation for the chosen
/// policy, bit allocation to the target rate, and a final re-allocation on
/// the resulting sizes.
inline LinkPlan build_plan(const LinkConfig& config, const SubchannelProfile& profile) {
  config.validate();
  const std::span<const double> eta = profile.eta;
  const double P = config.power;

  const auto initial =
      config.aqam == AqamRule::palomar ? ser_waterfill(eta, *config.target_ser, P) : waterfill(eta, P);
  QamPlan plan = config.aqam == AqamRule::palomar ? aqam_palomar(eta, initial, *config.target_ser)
                                                  : aqam_from_wf(eta, initial);

  PowerAllocation alloc;
  switch (config.allocator) {
    case Policy::wf:
      alloc = config.aqam == AqamRule::lemma4 ? initial : waterfill(eta, P);
      break;
    case Policy::ser_wf:
      alloc = config.aqam == AqamRule::palomar ? initial : ser_waterfill(eta, *config.target_ser, P);
      break;
    case Policy::mwf:
    case Policy::ewf:
      alloc = detail::allocate_on_active(config.allocator, eta, plan, P, config.target_ser);
      break;
  }

  LinkPlan out;
  out.plan = bit_allocate(plan, eta, alloc.p, config.rate, &out.bitalloc);
  out.alloc = detail::allocate_on_active(config.allocator, eta, out.plan, P, config.target_ser);
  out.k_opt = count_deactivated(out.alloc, out.plan);
  return out;
}

/// Plan on the asymptotic (quarter-circle) profile of the configured link.
inline LinkPlan build_asymptotic_plan(const LinkConfig& config) {
  return build_plan(config, asymptotic_profile(config.n, config.noise_variance()));
}

/// U_r^H (sqrt(n) H V_r s_hat + z): the first r subchannel outputs.
inline CVector received_subchannels(const CMatrix& H, const SvdFactors& f, int rank, const CVector& s_hat,
                                    const CVector& noise) {
  const double root_n = std::sqrt(static_cast<double>(H.rows()));
  const CVector x = f.V.leftCols(rank) * s_hat.head(rank);
  const CVector y = root_n * (H * x) + noise;
  return f.U.leftCols(rank).adjoint() * y;
}

struct TrialOutcome {
  std::uint64_t bits_sent = 0;
  std::uint64_t bit_errors = 0;
  int k_used = 0;  // precoding rank
  std::size_t k_opt = 0;
  std::vector<std::uint64_t> per_channel_errors;
  double tx_energy = 0.0;  // sum of ||x||^2 over the symbol vectors
  std::size_t symbol_vectors = 0;
};

namespace detail {

inline constexpr std::uint64_t kDataStream = 0x5eed'da7a'0000'0000ull;

}  // namespace detail

/// One channel realization carrying `symbol_vectors` independent symbol
/// vectors. For the asymptotic profile the plan is taken from `precomputed`
/// (built on demand when null); for the empirical profile it is rebuilt from
/// this realization's singular values.
inline TrialOutcome run_ber_trial(const LinkConfig& config, const LinkPlan* precomputed, std::uint64_t master_seed,
                                  std::uint64_t trial, std::size_t symbol_vectors) {
  config.validate();
  const int n = config.n;
  const double sigma2 = config.noise_variance();
  const CMatrix H = sample_channel(n, master_seed, trial).H;

  LinkPlan plan;
  SvdFactors factors;
  if (config.profile == ProfileSource::asymptotic) {
    plan = precomputed ? *precomputed : build_asymptotic_plan(config);
    const int rank = plan.precoding_rank();
    if (rank > 0) factors = config.precoder == Precoder::truncated_svd ? truncated_svd(H, rank) : svd(H);
  } else if (config.precoder == Precoder::full_svd) {
    factors = svd(H);
    plan = build_plan(config, profile_from_svd(factors, sigma2));
  } else {
    plan = build_plan(config, profile_from_singular_values(n, singular_values(H), sigma2));
    const int rank = plan.precoding_rank();
    if (rank > 0) factors = truncated_svd(H, rank);
  }
  if (plan.plan.size() != static_cast<std::size_t>(n)) throw DomainError("run_ber_trial: plan size differs from n");

  TrialOutcome out;
  out.k_opt = plan.k_opt;
  out.k_used = plan.precoding_rank();
  out.per_channel_errors.assign(static_cast<std::size_t>(n), 0);
  if (out.k_used == 0) return out;
  const int rank = out.k_used;

  std::vector<std::size_t> carriers;
  std::map<std::uint64_t, Constellation> tables;
  for (std::size_t i = 0; i < static_cast<std::size_t>(rank); ++i) {
    if (plan.carries(i)) {
      carriers.push_back(i);
      tables.try_emplace(plan.plan.order(i), plan.plan.order(i));
    }
  }
  std::vector<const Constellation*> table(static_cast<std::size_t>(rank), nullptr);
  std::vector<double> amplitude(static_cast<std::size_t>(rank), 0.0);
  std::vector<double> gain(static_cast<std::size_t>(rank), 0.0);
  for (auto i : carriers) {
    table[i] = &tables.at(plan.plan.order(i));
    amplitude[i] = std::sqrt(plan.alloc.p[i] / 2.0);
    gain[i] = std::sqrt(static_cast<double>(n)) * factors.singular_values(static_cast<Eigen::Index>(i)) * amplitude[i];
  }

  auto rng = keyed_engine(master_seed ^ detail::kDataStream, trial);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2 / 2.0));
  std::vector<std::uint64_t> labels(static_cast<std::size_t>(rank), 0);
  CVector s_hat = CVector::Zero(rank);
  CVector z(n);
  for (std::size_t v = 0; v < symbol_vectors; ++v) {
    for (auto i : carriers) {
      labels[i] = rng() & (table[i]->size() - 1);
      s_hat(static_cast<Eigen::Index>(i)) = amplitude[i] * table[i]->map(labels[i]);
    }
    for (int j = 0; j < n; ++j) {
      const double re = noise(rng);
      const double im = noise(rng);
      z(j) = {re, im};
    }
    const CVector x = factors.V.leftCols(rank) * s_hat;
    out.tx_energy += x.squaredNorm();
    const CVector y = std::sqrt(static_cast<double>(n)) * (H * x) + z;
    const CVector y_sub = factors.U.leftCols(rank).adjoint() * y;
    for (auto i : carriers) {
      const auto rx = table[i]->slice(y_sub(static_cast<Eigen::Index>(i)) / gain[i]);
      const auto errors = static_cast<std::uint64_t>(std::popcount(rx ^ labels[i]));
      out.per_channel_errors[i] += errors;
      out.bit_errors += errors;
      out.bits_sent += static_cast<std::uint64_t>(table[i]->bits());
    }
  }
  out.symbol_vectors = symbol_vectors;
  return out;
}

template <class Row>
struct ExperimentResult {
  std::vector<Row> rows;
};

/// Half-width of the 95% normal-approximation interval for a binomial
/// proportion, with a 1/(2N) continuity term so that zero counts still get a
/// nonzero width.
inline double binomial_ci95(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) return 0.0;
  const double N = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / N;
  return 1.959963984540054 * std::sqrt(phat * (1.0 - phat) / N) + 0.5 / N;
}

// ---------------------------------------------------------------------------
// Capacity versus number of deactivated subchannels

enum class CapacityScheme { gaussian, mwf, ewf, lemma4, palomar };

inline const char* to_string(CapacityScheme s) {
  switch (s) {
    case CapacityScheme::gaussian: return "gaussian";
    case CapacityScheme::mwf: return "mwf";
    case CapacityScheme::ewf: return "ewf";
    case CapacityScheme::lemma4: return "lemma4";
    case CapacityScheme::palomar: return "palomar";
  }
  return "?";
}

/// Rate metric of one scheme after switching off the k weakest subchannels
/// of an ascending noise profile.
inline double capacity_at_k(std::span<const double> eta, int k, double P, CapacityScheme scheme,
                            double target_ser = 1e-3) {
  if (k < 0 || k >= static_cast<int>(eta.size())) throw DomainError("capacity_at_k: k out of range");
  const auto kept = eta.first(eta.size() - static_cast<std::size_t>(k));
  if (scheme == CapacityScheme::palomar) {
    const auto alloc = ser_waterfill(kept, target_ser, P);
    return capacity_qam(kept, alloc.p, aqam_palomar(kept, alloc, target_ser));
  }
  const auto wf = waterfill(kept, P);
  switch (scheme) {
    case CapacityScheme::gaussian: return capacity_gaussian(kept, wf.p);
    case CapacityScheme::lemma4: return capacity_lemma4(kept, wf.p);
    case CapacityScheme::mwf:
    case CapacityScheme::ewf: {
      const auto plan = aqam_from_wf(kept, wf);
      if (plan.active_count() == 0) return 0.0;
      const auto alloc =
          scheme == CapacityScheme::mwf ? mercury_waterfill(kept, plan, P) : error_waterfill(kept, plan, P);
      return capacity_qam(kept, alloc.p, plan);
    }
    default: break;
  }
  return 0.0;
}

struct CapacityExperiment {
  int n = 32;
  double power = 64.0;
  double snr_db = 10.0;
  std::vector<int> k_grid;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  std::vector<CapacityScheme> schemes{CapacityScheme::gaussian, CapacityScheme::mwf, CapacityScheme::ewf,
                                      CapacityScheme::lemma4};
  double target_ser = 1e-3;  // used by the palomar scheme
};

struct CapacityRow {
  int k = 0;
  std::string scheme;
  double mean_capacity = 0.0;
  double ci95 = 0.0;
  std::size_t trials = 0;
};

inline ExperimentResult<CapacityRow> capacity_vs_k(const CapacityExperiment& exp, std::size_t threads = 1) {
  if (exp.trials == 0) throw DomainError("capacity_vs_k: trials must be positive");
  for (int k : exp.k_grid) {
    if (k < 0 || k >= exp.n) throw DomainError("capacity_vs_k: k_grid entries must lie in [0, n)");
  }
  const double sigma2 = noise_variance_for(exp.power, exp.snr_db);
  const std::size_t cells = exp.k_grid.size() * exp.schemes.size();
  std::vector<double> values(exp.trials * cells, 0.0);

  parallel_for(exp.trials, threads, [&](std::size_t t) {
    const CMatrix H = sample_channel(exp.n, exp.seed, t).H;
    const auto profile = profile_from_singular_values(exp.n, singular_values(H), sigma2);
    for (std::size_t a = 0; a < exp.k_grid.size(); ++a) {
      for (std::size_t b = 0; b < exp.schemes.size(); ++b) {
        values[t * cells + a * exp.schemes.size() + b] =
            capacity_at_k(profile.eta, exp.k_grid[a], exp.power, exp.schemes[b], exp.target_ser);
      }
    }
  });

  ExperimentResult<CapacityRow> result;
  const double T = static_cast<double>(exp.trials);
  for (std::size_t a = 0; a < exp.k_grid.size(); ++a) {
    for (std::size_t b = 0; b < exp.schemes.size(); ++b) {
      double sum = 0.0;
      double sq = 0.0;
      for (std::size_t t = 0; t < exp.trials; ++t) {
        const double v = values[t * cells + a * exp.schemes.size() + b];
        sum += v;
        sq += v * v;
      }
      const double mean = sum / T;
      const double var = exp.trials > 1 ? std::max(0.0, (sq - T * mean * mean) / (T - 1.0)) : 0.0;
      result.rows.push_back({exp.k_grid[a], to_string(exp.schemes[b]), mean, 1.959963984540054 * std::sqrt(var / T),
                             exp.trials});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// BER versus SNR

struct BerScheme {
  std::string name;
  Policy allocator = Policy::ewf;
  AqamRule aqam = AqamRule::lemma4;
  Precoder precoder = Precoder::truncated_svd;
  ProfileSource profile = ProfileSource::asymptotic;
};

inline std::string default_scheme_name(Precoder precoder, Policy allocator, AqamRule aqam) {
  std::string name = precoder == Precoder::truncated_svd ? "tsvd" : "svd";
  name += "-";
  name += to_string(allocator);
  if (aqam == AqamRule::palomar) name += "-palomar";
  return name;
}

struct BerSweepOptions {
  std::uint64_t seed = 1;
  std::size_t min_trials = 64;     // channel realizations per point, at least
  std::uint64_t min_errors = 100;  // stop once this many bit errors are seen
  std::uint64_t max_bits = 100'000'000;
  std::size_t symbol_vectors = 64;  // per realization
  std::size_t batch = 32;           // realizations between stopping checks
  std::size_t threads = 1;
};

struct BerRow {
  double snr_db = 0.0;
  std::string scheme;
  double ber = 0.0;
  double ci95 = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  double k_opt = 0.0;  // mean over realizations
  std::size_t trials = 0;
};

/// Monte Carlo BER of one scheme at one SNR. Realizations are keyed by
/// (seed, trial index) and processed in fixed batches, so the outcome does
/// not depend on the thread count.
inline BerRow ber_point(const LinkConfig& config, const BerSweepOptions& opt, const std::string& name) {
  config.validate();
  if (opt.batch == 0 || opt.symbol_vectors == 0) throw DomainError("ber_point: batch and symbol_vectors must be positive");
  std::optional<LinkPlan> precomputed;
  if (config.profile == ProfileSource::asymptotic) precomputed = build_asymptotic_plan(config);

  BerRow row;
  row.snr_db = config.snr_db;
  row.scheme = name;
  double k_sum = 0.0;
  std::vector<TrialOutcome> batch(opt.batch);
  while (true) {
    const std::size_t first = row.trials;
    parallel_for(opt.batch, opt.threads, [&](std::size_t b) {
      batch[b] = run_ber_trial(config, precomputed ? &*precomputed : nullptr, opt.seed, first + b, opt.symbol_vectors);
    });
    for (const auto& t : batch) {
      row.bits += t.bits_sent;
      row.errors += t.bit_errors;
      k_sum += static_cast<double>(t.k_opt);
    }
    row.trials += opt.batch;
    if (row.bits == 0) break;  // nothing is transmitted at this rate
    if (row.bits >= opt.max_bits) break;
    if (row.trials >= opt.min_trials && row.errors >= opt.min_errors) break;
  }
  row.ber = row.bits ? static_cast<double>(row.errors) / static_cast<double>(row.bits) : 0.0;
  row.ci95 = binomial_ci95(row.errors, row.bits);
  row.k_opt = k_sum / static_cast<double>(row.trials);
  return row;
}

inline ExperimentResult<BerRow> ber_sweep(const LinkConfig& base, std::span<const BerScheme> schemes,
                                          std::span<const double> snr_grid_db, const BerSweepOptions& opt) {
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i) {
    if (!(snr_grid_db[i] > snr_grid_db[i - 1])) throw DomainError("ber_sweep: SNR grid must be ascending");
  }
  ExperimentResult<BerRow> result;
  for (double snr : snr_grid_db) {
    for (const auto& s : schemes) {
      LinkConfig cfg = base;
      cfg.snr_db = snr;
      cfg.allocator = s.allocator;
      cfg.aqam = s.aqam;
      cfg.precoder = s.precoder;
      cfg.profile = s.profile;
      result.rows.push_back(ber_point(cfg, opt, s.name));
    }
  }
  return result;
}

}  // namespace mimoalloc
