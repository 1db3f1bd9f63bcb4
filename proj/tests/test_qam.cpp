#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "mimoalloc/qam.hpp"

using namespace mimoalloc;

namespace {

std::vector<std::uint8_t> label_bits(std::uint64_t label, int bits) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(bits));
  for (int i = 0; i < bits; ++i) out[static_cast<std::size_t>(i)] = (label >> (bits - 1 - i)) & 1u;
  return out;
}

}  // namespace

TEST(QamPlan, Validation) {
  EXPECT_NO_THROW(QamPlan({1, 4, 16, 64, 1024}));
  EXPECT_THROW(QamPlan({2}), DomainError);
  EXPECT_THROW(QamPlan({8}), DomainError);
  EXPECT_THROW(QamPlan({0}), DomainError);
  const QamPlan p({1, 4, 64});
  EXPECT_EQ(p.rate(), 8);
  EXPECT_EQ(p.active_count(), 2u);
  EXPECT_EQ(p.bits(0), 0);
  EXPECT_FALSE(p.active(0));
}

TEST(Constellation, Qpsk) {
  const Constellation c(4);
  EXPECT_EQ(c.bits(), 2);
  std::vector<std::complex<double>> pts;
  for (std::uint64_t l = 0; l < 4; ++l) pts.push_back(c.map(l));
  for (auto z : pts) {
    EXPECT_NEAR(std::abs(z.real()), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(z.imag()), 1.0, 1e-15);
  }
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) EXPECT_GT(std::abs(pts[a] - pts[b]), 1.0);
  }
}

TEST(Constellation, Sixteen) {
  const Constellation c(16);
  const double s = 1.0 / std::sqrt(5.0);
  const double expect[] = {-3 * s, -s, s, 3 * s};
  ASSERT_EQ(c.levels().size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(c.levels()[static_cast<std::size_t>(i)], expect[i], 1e-15);
}

TEST(Constellation, UnitEnergyPerDimension) {
  for (std::uint64_t M = 4; M <= (std::uint64_t{1} << 20); M *= 4) {
    const Constellation c(M);
    double e = 0.0;
    for (double l : c.levels()) e += l * l;
    EXPECT_NEAR(e / static_cast<double>(c.levels().size()), 1.0, 1e-12) << "M=" << M;
  }
  EXPECT_THROW(Constellation(1), DomainError);
  EXPECT_THROW(Constellation(8), DomainError);
}

TEST(Constellation, GrayAdjacency) {
  for (std::uint64_t M = 4; M <= 1024; M *= 4) {
    const Constellation c(M);
    const int half = c.bits() / 2;
    const std::uint64_t side = std::uint64_t{1} << half;
    // Per-dimension label of each level index.
    std::vector<std::uint64_t> label_at(side);
    for (std::uint64_t g = 0; g < side; ++g) label_at[c.level_of(g)] = g;
    for (std::uint64_t l = 1; l < side; ++l) {
      EXPECT_EQ(std::popcount(label_at[l] ^ label_at[l - 1]), 1) << "M=" << M << " level " << l;
    }
    // And through the full complex map: I neighbors and Q neighbors.
    for (std::uint64_t label = 0; label < M; ++label) {
      const auto z = c.map(label);
      for (std::uint64_t other = 0; other < M; ++other) {
        const auto w = c.map(other);
        const double spacing = 2.0 * std::sqrt(3.0 / static_cast<double>(M - 1));
        if (std::abs(std::abs(z - w) - spacing) < 1e-9) {
          EXPECT_EQ(std::popcount(label ^ other), 1);
        }
      }
    }
  }
}

TEST(Constellation, RoundTrip) {
  for (std::uint64_t M = 4; M <= 1024; M *= 4) {
    const Constellation c(M);
    for (std::uint64_t label = 0; label < M; ++label) {
      const auto bits = label_bits(label, c.bits());
      EXPECT_EQ(c.demodulate(c.modulate(bits)), bits);
      EXPECT_EQ(demodulate(modulate(bits, M), M), bits);
    }
  }
}

TEST(Constellation, SmallPerturbationKeepsBits) {
  const Constellation c(64);
  const double half_spacing = std::sqrt(3.0 / 63.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.99 * half_spacing, 0.99 * half_spacing);
  for (std::uint64_t label = 0; label < 64; ++label) {
    const auto bits = label_bits(label, 6);
    const auto z = c.modulate(bits) + std::complex<double>(u(rng), u(rng));
    EXPECT_EQ(c.demodulate(z), bits);
  }
}

TEST(Constellation, NeighborErrorFlipsOneBitPerDimension) {
  const Constellation c(256);
  const double spacing = 2.0 * std::sqrt(3.0 / 255.0);
  for (std::uint64_t label = 0; label < 256; ++label) {
    const auto z = c.map(label);
    for (double dx : {-spacing, spacing}) {
      for (double dy : {-spacing, spacing}) {
        const auto y = z + std::complex<double>(dx, dy);
        const double edge = c.levels().back() + 1e-9;
        if (std::abs(y.real()) > edge || std::abs(y.imag()) > edge) continue;  // off the grid
        EXPECT_EQ(std::popcount(c.slice(y) ^ label), 2);
      }
    }
  }
}

TEST(Constellation, WrongLengthRejected) {
  const std::vector<std::uint8_t> bits(3, 0);
  EXPECT_THROW(modulate(bits, 16), DomainError);
}

TEST(Gray, RoundTrip) {
  for (std::uint64_t v = 0; v < 4096; ++v) {
    EXPECT_EQ(gray_decode(gray_encode(v)), v);
    if (v) {
      EXPECT_EQ(std::popcount(gray_encode(v) ^ gray_encode(v - 1)), 1);
    }
  }
}

TEST(BerAnalytic, Examples) {
  EXPECT_DOUBLE_EQ(ber_analytic(4, 0.0, 0.7), 0.5);
  EXPECT_NEAR(ber_analytic(4, 4.0, 1.0), numerics::q_function(2.0), 1e-16);
  EXPECT_NEAR(ber_analytic(4, 4.0, 1.0), 0.0227501, 1e-7);
  EXPECT_NEAR(ber_analytic(16, 20.0, 1.0), 0.75 * numerics::q_function(2.0), 1e-16);
  EXPECT_NEAR(ber_analytic(16, 20.0, 1.0), 0.0170626, 1e-7);
  EXPECT_THROW(ber_analytic(1, 1.0, 1.0), DomainError);
  EXPECT_THROW(ber_analytic(4, -1.0, 1.0), DomainError);
}

TEST(BerAnalytic, Monotone) {
  for (std::uint64_t M = 4; M <= 4096; M *= 4) {
    double prev = 1.0;
    for (double p = 0.01; p < 1e4; p *= 1.3) {
      const double b = ber_analytic(M, p, 1.0);
      if (b == 0.0) break;
      EXPECT_LT(b, prev);
      prev = b;
    }
  }
  // Increasing in M while the Q argument stays at or above 1.
  for (double r : {10.0, 100.0, 1000.0}) {
    double prev = 0.0;
    for (std::uint64_t M = 4; 3.0 * r / static_cast<double>(M - 1) >= 1.0; M *= 4) {
      const double b = ber_analytic(M, r, 1.0);
      EXPECT_GT(b, prev) << "r=" << r << " M=" << M;
      prev = b;
    }
  }
}

TEST(BerAnalytic, PrefactorDominatesNearZeroSnr) {
  // The 4/log2(M) prefactor wins once Q saturates near 1/2.
  EXPECT_LT(ber_analytic(64, 1.0, 1.0), ber_analytic(16, 1.0, 1.0));
  EXPECT_LT(ber_analytic(1024, 10.0, 1.0), ber_analytic(256, 10.0, 1.0));
}

TEST(Capacity, Gaussian) {
  EXPECT_EQ(capacity_gaussian(std::vector<double>{1, 2}, std::vector<double>{0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(capacity_gaussian(std::vector<double>{0.5}, std::vector<double>{1.5}), 2.0);
  EXPECT_NEAR(capacity_gaussian(std::vector<double>{0.5, 1.0}, std::vector<double>{1.25, 0.75}),
              std::log2(3.5) + std::log2(1.75), 1e-15);
  EXPECT_NEAR(std::log2(3.5) + std::log2(1.75), 2.6147, 1e-4);
}

TEST(Capacity, QamLimitsAndIdentity) {
  const std::vector<double> eta{0.2, 0.5, 1.0};
  const std::vector<double> p{3.0, 1.0, 2.0};
  const std::vector<double> huge(3, 1e18);
  EXPECT_NEAR(capacity_qam(eta, p, huge), capacity_gaussian(eta, p), 1e-12);

  std::vector<double> exact(3);
  for (int i = 0; i < 3; ++i) exact[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] / eta[static_cast<std::size_t>(i)];
  double expect = 0.0;
  for (double r : exact) expect += std::log2(1.0 + r) - 1.0;
  EXPECT_NEAR(capacity_qam(eta, p, exact), expect, 3e-12);

  const std::vector<double> p0{0.0, 1.0, 0.5};
  const std::vector<double> sizes{16, 16, 16};
  const std::vector<double> p_only{0.0, 0.0, 0.0};
  EXPECT_EQ(capacity_qam(eta, p_only, sizes), 0.0);
  EXPECT_NEAR(capacity_qam(eta, p0, sizes),
              capacity_qam(std::vector<double>{0.5, 1.0}, std::vector<double>{1.0, 0.5}, std::vector<double>{16, 16}),
              1e-15);
}

TEST(Capacity, QamBounds) {
  std::mt19937_64 rng(12);
  std::lognormal_distribution<double> d(0.0, 1.5);
  std::uniform_int_distribution<int> e(0, 6);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> eta(6), p(6);
    std::vector<std::uint64_t> sizes(6);
    for (int i = 0; i < 6; ++i) {
      const auto k = static_cast<std::size_t>(i);
      eta[k] = d(rng);
      p[k] = d(rng);
      sizes[k] = std::uint64_t{1} << (2 * e(rng));
    }
    const QamPlan plan(sizes);
    const double c = capacity_qam(eta, p, plan);
    EXPECT_LE(c, capacity_gaussian(eta, p) + 1e-12);
    EXPECT_LE(c, static_cast<double>(plan.rate()) + 1e-12);
  }
}

TEST(Capacity, Lemma4Estimate) {
  EXPECT_NEAR(capacity_lemma4(std::vector<double>{1, 1}, std::vector<double>{3, 7}), 3.0, 1e-15);
  EXPECT_EQ(capacity_lemma4(std::vector<double>{1, 1}, std::vector<double>{0, 0}), 0.0);
}

TEST(Aqam, FromWaterfill) {
  EXPECT_EQ(nearest_qam_size(4.0), 4u);
  EXPECT_EQ(nearest_qam_size(1.9), 1u);
  const double ratios[] = {3, 7, 9, 30};
  const std::uint64_t expect[] = {4, 4, 16, 16};
  for (int i = 0; i < 4; ++i) {
    const auto M = nearest_qam_size(ratios[i]);
    EXPECT_EQ(M, expect[i]);
    EXPECT_LE(std::abs(std::log(static_cast<double>(M)) / std::log(4.0) - std::log(ratios[i]) / std::log(4.0)), 0.5);
  }
  PowerAllocation a{{4.0, 0.0, 1.0}, 5.0, {true, false, true}, Policy::wf};
  const auto plan = aqam_from_wf(std::vector<double>{1.0, 5.0, 4.0}, a);
  EXPECT_EQ(plan.sizes(), (std::vector<std::uint64_t>{4, 1, 1}));
  EXPECT_THROW(aqam_from_wf(std::vector<double>{1.0}, a), DomainError);
}

TEST(Aqam, Palomar) {
  const double gap = ser_gap(1e-3);
  PowerAllocation a{{0.0, 15.0 * gap}, 1.0, {false, true}, Policy::ser_wf};
  const auto plan = aqam_palomar(std::vector<double>{1.0, 1.0}, a, 1e-3);
  EXPECT_EQ(plan.order(0), 1u);
  EXPECT_EQ(plan.order(1), 16u);
}
