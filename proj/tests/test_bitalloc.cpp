#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mimoalloc/bitalloc.hpp"

using namespace mimoalloc;

namespace {

// Minimum worst-case BER over every sequence of `moves` quarterings.
double exhaustive_decrease(const QamPlan& plan, const std::vector<double>& eta, const std::vector<double>& p,
                           int moves) {
  if (moves == 0) return worst_case_ber(plan, eta, p);
  double best = 2.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!plan.active(i)) continue;
    QamPlan next = plan;
    next.set(i, plan.order(i) / 4);
    best = std::min(best, exhaustive_decrease(next, eta, p, moves - 1));
  }
  return best;
}

// True when quartering lowers the BER at every size this channel can pass through.
bool quartering_helps(std::uint64_t M, double p, double eta) {
  for (; M >= 16; M /= 4) {
    if (!(ber_analytic(M / 4, p, eta) < ber_analytic(M, p, eta))) return false;
  }
  return true;
}

}  // namespace

TEST(BitAllocate, AlreadyAtRate) {
  const QamPlan plan({16, 4, 1});
  const std::vector<double> eta{0.1, 0.2, 0.3};
  const std::vector<double> p{1.0, 1.0, 0.0};
  BitAllocStats stats;
  EXPECT_EQ(bit_allocate(plan, eta, p, 6, &stats), plan);
  EXPECT_EQ(stats.steps, 0u);
}

TEST(BitAllocate, IncreaseLowestBer) {
  const std::vector<double> eta{0.01, 0.1};
  const std::vector<double> p{1.0, 1.0};
  ASSERT_LT(ber_analytic(16, p[0], eta[0]), ber_analytic(16, p[1], eta[1]));
  EXPECT_EQ(bit_allocate(QamPlan({16, 16}), eta, p, 10).sizes(), (std::vector<std::uint64_t>{64, 16}));
}

TEST(BitAllocate, DecreaseDeactivates) {
  const std::vector<double> eta{0.1, 1.0};
  const std::vector<double> p{1.0, 1.0};
  BitAllocator a(QamPlan({4, 4}), eta, p, 2);
  EXPECT_EQ(a.step(), 1u);
  EXPECT_TRUE(a.done());
  EXPECT_EQ(a.plan().sizes(), (std::vector<std::uint64_t>{4, 1}));
  EXPECT_EQ(a.ber()[1], 0.0);
}

TEST(BitAllocate, DecreaseMatchesExhaustiveSearch) {
  std::mt19937_64 rng(31);
  std::lognormal_distribution<double> d(-1.0, 1.0);
  std::uniform_int_distribution<int> e(1, 4);
  int checked = 0;
  for (int t = 0; t < 400; ++t) {
    std::vector<double> eta(3), p(3);
    std::vector<std::uint64_t> sizes(3);
    for (int i = 0; i < 3; ++i) {
      eta[static_cast<std::size_t>(i)] = d(rng);
      p[static_cast<std::size_t>(i)] = 1.0 + d(rng);
      sizes[static_cast<std::size_t>(i)] = std::uint64_t{1} << (2 * e(rng));
    }
    const QamPlan plan(sizes);
    const long long R = 6;
    if (plan.rate() <= R) continue;
    bool regular = true;
    for (std::size_t i = 0; i < 3; ++i) regular = regular && quartering_helps(sizes[i], p[i], eta[i]);
    if (!regular) continue;
    ++checked;
    const auto out = bit_allocate(plan, eta, p, R);
    EXPECT_EQ(out.rate(), R);
    const int moves = static_cast<int>((plan.rate() - R) / 2);
    EXPECT_DOUBLE_EQ(worst_case_ber(out, eta, p), exhaustive_decrease(plan, eta, p, moves)) << "trial " << t;
  }
  EXPECT_GT(checked, 100);
}

TEST(BitAllocate, RateExactness) {
  std::mt19937_64 rng(32);
  std::lognormal_distribution<double> d(-2.0, 1.0);
  std::uniform_int_distribution<int> e(0, 5);
  std::uniform_int_distribution<int> rate(0, 15);  // channel 0 alone can carry 30 bits
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(t % 12);
    std::vector<double> eta(m), p(m);
    std::vector<std::uint64_t> sizes(m);
    for (std::size_t i = 0; i < m; ++i) {
      eta[i] = d(rng);
      p[i] = 1.0;
      sizes[i] = std::uint64_t{1} << (2 * e(rng));
    }
    sizes[0] = 4;  // at least one channel can grow
    const long long R = 2 * rate(rng);
    EXPECT_EQ(bit_allocate(QamPlan(sizes), eta, p, R).rate(), R);
  }
}

TEST(BitAllocate, DeactivatedChannelNeverReselected) {
  const std::vector<double> eta{0.01, 0.02, 0.5, 1.0};
  const std::vector<double> p(4, 1.0);
  BitAllocator a(QamPlan({64, 64, 16, 4}), eta, p, 4);
  std::vector<bool> off(4, false);
  while (!a.done()) {
    const auto t = a.step();
    EXPECT_FALSE(off[t]);
    off[t] = !a.plan().active(t);
  }
}

TEST(BitAllocate, Errors) {
  const std::vector<double> eta{0.1};
  const std::vector<double> p{1.0};
  EXPECT_THROW(bit_allocate(QamPlan({4}), eta, p, 3), DomainError);
  EXPECT_THROW(bit_allocate(QamPlan({4}), eta, p, -2), DomainError);
  // Only a deactivated channel: nothing can be upgraded.
  EXPECT_THROW(bit_allocate(QamPlan({1}), eta, p, 2), InfeasibleRateError);
  // Zero power is not upgradable either.
  EXPECT_THROW(bit_allocate(QamPlan({4}), eta, std::vector<double>{0.0}, 4), InfeasibleRateError);
  // Cap at 4^15.
  EXPECT_NO_THROW(bit_allocate(QamPlan({4}), eta, p, 30));
  EXPECT_THROW(bit_allocate(QamPlan({4}), eta, p, 32), InfeasibleRateError);
}

TEST(BitAllocate, ComparisonBound) {
  std::mt19937_64 rng(33);
  std::lognormal_distribution<double> d(-2.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 2 + static_cast<std::size_t>(t % 64);
    std::vector<double> eta(m), p(m, 1.0);
    for (double& x : eta) x = d(rng);
    const QamPlan plan(std::vector<std::uint64_t>(m, 16));
    const long long R = t % 2 ? plan.rate() + 2 * static_cast<long long>(m) : plan.rate() / 2 + (plan.rate() / 2) % 2;
    BitAllocStats s;
    bit_allocate(plan, eta, p, R, &s);
    const double half_b = std::abs(static_cast<double>(plan.rate() - R)) / 2.0;
    EXPECT_LE(static_cast<double>(s.comparisons), 4.0 * half_b * std::log2(static_cast<double>(m)));
  }
}

TEST(WorstCaseBer, Examples) {
  const std::vector<double> eta{0.1, 0.2};
  const std::vector<double> p{1.0, 1.0};
  EXPECT_EQ(worst_case_ber(QamPlan({1, 1}), eta, p), 0.0);
  EXPECT_DOUBLE_EQ(worst_case_ber(QamPlan({16, 1}), eta, p), ber_analytic(16, 1.0, 0.1));
  // Construct powers so the two BERs are 0.01 and 0.001 for QPSK.
  auto power_for = [](double target) {
    return std::pow(numerics::bisect([&](double x) { return numerics::q_function(x) - target; }, 0.0, 10.0, {}), 2);
  };
  const std::vector<double> q{power_for(0.01), power_for(0.001)};
  EXPECT_NEAR(worst_case_ber(QamPlan({4, 4}), std::vector<double>{1.0, 1.0}, q), 0.01, 1e-9);
}
