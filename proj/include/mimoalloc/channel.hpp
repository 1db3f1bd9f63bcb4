#pragma once

// Random channel generation, full/truncated SVD and subchannel noise profiles.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mimoalloc/errors.hpp"
#include "mimoalloc/numerics.hpp"

namespace mimoalloc {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Random stream keyed by (seed, stream index). Streams for distinct keys are
/// independent of each other and of the order in which they are created.
inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6d696d6fu};
  return std::mt19937_64(seq);
}

struct ChannelRealization {
  int n = 0;
  CMatrix H;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

/// Draws an n x n matrix with i.i.d. CN(0, 1/n) entries.
inline ChannelRealization sample_channel(int n, std::uint64_t seed, std::uint64_t index = 0) {
  if (n < 1) throw DomainError("sample_channel: n must be positive");
  auto rng = keyed_engine(seed, index);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 / n));
  ChannelRealization out{n, CMatrix(n, n), seed, index};
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      out.H(i, j) = {re, im};
    }
  }
  return out;
}

/// H ~= U diag(singular_values) V^H restricted to the leading `rank` pairs.
struct SvdFactors {
  int n = 0;     // dimension of the factored matrix
  int rank = 0;  // number of retained singular triplets
  CMatrix U;     // n x rank
  Eigen::VectorXd singular_values;
  CMatrix V;     // n x rank

  CMatrix reconstruct() const {
    return U * singular_values.cast<std::complex<double>>().asDiagonal() * V.adjoint();
  }
};

namespace detail {

inline void require_finite(const CMatrix& H, const char* who) {
  if (H.rows() != H.cols()) throw DomainError(std::string(who) + ": square matrix required");
  if (H.rows() == 0) throw DomainError(std::string(who) + ": empty matrix");
  if (!H.allFinite()) throw DomainError(std::string(who) + ": non-finite entries");
}

// Fixes the per-triplet phase freedom: the largest-magnitude entry of each
// right singular vector is made real and positive, and U follows.
inline void normalize_phases(SvdFactors& f) {
  for (int c = 0; c < f.rank; ++c) {
    Eigen::Index row = 0;
    f.V.col(c).cwiseAbs().maxCoeff(&row);
    const auto pivot = f.V(row, c);
    if (std::abs(pivot) == 0.0) continue;
    const auto phase = std::conj(pivot) / std::abs(pivot);
    f.V.col(c) *= phase;
    f.U.col(c) *= phase;
  }
}

}  // namespace detail

/// Full SVD (divide and conquer bidiagonalization).
inline SvdFactors svd(const CMatrix& H) {
  detail::require_finite(H, "svd");
  Eigen::BDCSVD<CMatrix> dec(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const int n = static_cast<int>(H.rows());
  SvdFactors f{n, n, dec.matrixU(), dec.singularValues(), dec.matrixV()};
  detail::normalize_phases(f);
  return f;
}

/// Singular values only, descending.
inline Eigen::VectorXd singular_values(const CMatrix& H) {
  detail::require_finite(H, "singular_values");
  return Eigen::BDCSVD<CMatrix>(H).singularValues();
}

/// Leading k singular triplets.
///
/// For k < n the right vectors come from the Hermitian eigenproblem of H^H H
/// and only the k retained left vectors are formed (u_i = H v_i / s_i), so the
/// discarded directions never get a full left basis.
inline SvdFactors truncated_svd(const CMatrix& H, int k) {
  detail::require_finite(H, "truncated_svd");
  const int n = static_cast<int>(H.rows());
  if (k < 1 || k > n) throw DomainError("truncated_svd: rank must satisfy 1 <= k <= n");
  if (k == n) return svd(H);

  CMatrix gram(n, n);
  gram.triangularView<Eigen::Lower>() = H.adjoint() * H;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);  // reads the lower triangle
  SvdFactors f;
  f.n = n;
  f.rank = k;
  f.V = eig.eigenvectors().rightCols(k).rowwise().reverse();
  f.singular_values = eig.eigenvalues().tail(k).reverse().cwiseMax(0.0).cwiseSqrt();
  f.U = H * f.V;
  for (int c = 0; c < k; ++c) {
    const double s = f.singular_values(c);
    if (s > 0.0) f.U.col(c) /= s;
  }
  detail::normalize_phases(f);
  return f;
}

/// Keeps the first k triplets of an existing factorization.
inline SvdFactors leading(const SvdFactors& full, int k) {
  if (k < 1 || k > full.rank) throw DomainError("leading: rank out of range");
  return {full.n, k, full.U.leftCols(k), full.singular_values.head(k), full.V.leftCols(k)};
}

enum class ProfileSource { empirical, asymptotic };

/// Normalized noise powers eta_i = noise_variance / (n * gain_i^2), ascending.
struct SubchannelProfile {
  int n = 0;
  std::vector<double> eta;
  double noise_variance = 0.0;
  ProfileSource source = ProfileSource::empirical;

  std::size_t size() const { return eta.size(); }
};

inline std::vector<double> eta_from_gains(int n, const Eigen::VectorXd& gains, double noise_variance) {
  std::vector<double> eta(static_cast<std::size_t>(gains.size()));
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    const double g = gains(i);
    if (!(g > 0.0)) throw DegenerateChannelError("zero singular value on subchannel " + std::to_string(i));
    eta[static_cast<std::size_t>(i)] = noise_variance / (n * g * g);
  }
  return eta;
}

inline SubchannelProfile profile_from_singular_values(int n, const Eigen::VectorXd& gains, double noise_variance) {
  if (!(noise_variance > 0.0)) throw DomainError("profile: noise variance must be positive");
  return {n, eta_from_gains(n, gains, noise_variance), noise_variance, ProfileSource::empirical};
}

inline SubchannelProfile profile_from_svd(const SvdFactors& factors, double noise_variance) {
  return profile_from_singular_values(factors.n, factors.singular_values, noise_variance);
}

/// Gains at the quarter-circle quantiles 1 - (i - 1/2)/n, i = 1..n.
inline Eigen::VectorXd asymptotic_gains(int n) {
  if (n < 2) throw DomainError("asymptotic_profile: n must be at least 2");
  Eigen::VectorXd gains(n);
  for (int i = 0; i < n; ++i) {
    gains(i) = numerics::quarter_circle_quantile(1.0 - (i + 0.5) / n);
  }
  return gains;
}

inline SubchannelProfile asymptotic_profile(int n, double noise_variance) {
  if (!(noise_variance > 0.0)) throw DomainError("asymptotic_profile: noise variance must be positive");
  return {n, eta_from_gains(n, asymptotic_gains(n), noise_variance), noise_variance, ProfileSource::asymptotic};
}

}  // namespace mimoalloc
