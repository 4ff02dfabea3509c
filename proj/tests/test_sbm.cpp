#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mitk/counterexample.hpp"
#include "mitk/discrete.hpp"
#include "mitk/sbm.hpp"

namespace {

using namespace mitk;

constexpr double kLog2 = 0.69314718055994530942;

// Independent estimate of the Poissonized MI: draw S, Poisson lengths and
// binomial counts, then average the exact log-likelihood ratio
//   log P(K | S, L) - log(P(K | 0, L)/2 + P(K | 1, L)/2).
// Its mean is the MI; the binomial coefficients cancel in the ratio.
struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

McEstimate monte_carlo_mi(const SbmParams& p, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double nd = static_cast<double>(p.n);
  const double rho[2] = {p.p0 / nd, p.p1 / nd};
  std::poisson_distribution<long> len1(nd * p.t1), len2(nd * p.t2);
  std::bernoulli_distribution coin(0.5);
  auto loglik = [](long k, long l, double r) {
    double v = 0.0;
    if (k > 0) v += r == 0.0 ? -INFINITY : static_cast<double>(k) * std::log(r);
    if (l - k > 0) v += r == 1.0 ? -INFINITY : static_cast<double>(l - k) * std::log1p(-r);
    return v;
  };
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const int s = coin(rng) ? 1 : 0;
    const long l1 = p.t1 > 0 ? len1(rng) : 0;
    const long l2 = p.t2 > 0 ? len2(rng) : 0;
    // Channel 2 uses the mirrored rate q_s = p_{1-s}.
    const long k1 = std::binomial_distribution<long>(l1, rho[s])(rng);
    const long k2 = std::binomial_distribution<long>(l2, rho[1 - s])(rng);
    const double ll0 = loglik(k1, l1, rho[0]) + loglik(k2, l2, rho[1]);
    const double ll1 = loglik(k1, l1, rho[1]) + loglik(k2, l2, rho[0]);
    const double x = (s ? ll1 : ll0) - (log_add_exp(ll0, ll1) - std::log(2.0));
    sum += x;
    sum2 += x * x;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  return {mean, std::sqrt((sum2 / n - mean * mean) / (n - 1.0))};
}

// I(S; L1 outputs of channel 1, L2 of channel 2) over all raw binary outcomes.
double raw_block_mi(std::int64_t l1, std::int64_t l2, const SbmParams& p) {
  const double nd = static_cast<double>(p.n);
  const auto c1 = bernoulli_channel(p.p0 / nd, p.p1 / nd);
  const auto c2 = bernoulli_channel(p.p1 / nd, p.p0 / nd);
  std::vector<DiscreteChannel<>> chans;
  for (std::int64_t i = 0; i < l1; ++i) chans.push_back(c1);
  for (std::int64_t i = 0; i < l2; ++i) chans.push_back(c2);
  if (chans.empty()) return 0.0;
  const auto t = observe_through(SignalDist<>::bernoulli(0.5), chans);
  Axes rest;
  for (std::size_t a = 1; a < t.rank(); ++a) rest.push_back(a);
  return mutual_information(t, {0}, rest);
}

TEST(PoissonPmf, KnownValues) {
  EXPECT_EQ(poisson_pmf(0.0, 0), 1.0);
  EXPECT_EQ(poisson_pmf(0.0, 3), 0.0);
  EXPECT_EQ(poisson_pmf(2.0, -1), 0.0);
  EXPECT_NEAR(poisson_pmf(1.0, 0), std::exp(-1.0), 1e-16);
  EXPECT_NEAR(poisson_pmf(4.0, 2), std::exp(-4.0) * 8.0, 1e-15);
  EXPECT_THROW(poisson_pmf(-1.0, 0), DomainError);
}

TEST(PoissonPmf, DerivativeIdentity) {
  const double h = 1e-4, t = 0.7;
  for (std::int64_t l : {0, 1, 3, 7}) {
    const double fd = (poisson_pmf(t + h, l) - poisson_pmf(t - h, l)) / (2 * h);
    EXPECT_NEAR(fd, poisson_pmf(t, l - 1) - poisson_pmf(t, l), 1e-8) << l;
  }
}

TEST(PoissonCut, TailBelowCapAndHardCap) {
  for (double lambda : {0.3, 5.0, 50.0, 200.0}) {
    const PoissonCut c = poisson_cut(lambda, {});
    EXPECT_LE(c.tail, 1e-12);
    double mass = 0.0;
    for (double p : c.pmf) mass += p;
    EXPECT_NEAR(mass + c.tail, 1.0, 1e-13);
    EXPECT_GT(c.tail_mean, 0.0);
  }
  EXPECT_THROW(poisson_cut(1000.0, {}), HardCapExceeded);
  EXPECT_THROW(poisson_cut(1.0, {1e-3, 500}), InvalidArgument);
  EXPECT_THROW(poisson_cut(1.0, {1e-12, 0}), InvalidArgument);
}

TEST(BlockMi, NoObservations) {
  EXPECT_EQ(block_mi(0, 0, {3.0, 1.0, 50, 0.0, 0.0}), 0.0);
}

TEST(BlockMi, SingleObservationsMatchDiscreteCore) {
  for (std::int64_t n : {4, 50, 1000}) {
    const SbmParams p{3.0, 1.0, n, 0.0, 0.0};
    const double nd = static_cast<double>(n);
    const auto t = observe_through(SignalDist<>::bernoulli(0.5),
                                   {bernoulli_channel(3.0 / nd, 1.0 / nd), bernoulli_channel(1.0 / nd, 3.0 / nd)});
    EXPECT_NEAR(block_mi(1, 1, p), mutual_information(t, {0}, {1, 2}), 1e-15) << n;
  }
}

TEST(BlockMi, SufficientStatisticMatchesRawEnumeration) {
  for (const SbmParams& p : {SbmParams{3.0, 1.0, 10, 0, 0}, SbmParams{0.0, 2.0, 5, 0, 0},
                             SbmParams{4.0, 4.0, 8, 0, 0}, SbmParams{1.3, 0.2, 3, 0, 0}}) {
    for (std::int64_t l1 = 0; l1 <= 10; ++l1)
      for (std::int64_t l2 = 0; l1 + l2 <= 10; l2 += 3)
        EXPECT_NEAR(block_mi(l1, l2, p), raw_block_mi(l1, l2, p), 1e-13)
            << p.p0 << ' ' << p.p1 << ' ' << l1 << ' ' << l2;
  }
}

TEST(BlockMi, RangeMonotonicityAndMirrorSymmetry) {
  const SbmParams p{5.0, 0.5, 20, 0.0, 0.0};
  const BlockMiTable in(p.p0, p.p1, p.n, 30, 30);
  for (std::int64_t a = 0; a <= 30; ++a) {
    for (std::int64_t b = 0; b <= 30; ++b) {
      EXPECT_GE(in(a, b), 0.0);
      EXPECT_LE(in(a, b), kLog2);
      EXPECT_NEAR(in(a, b), in(b, a), 1e-14);
      if (a < 30) {
        EXPECT_GE(in(a + 1, b), in(a, b) - 1e-12);
      }
    }
  }
  EXPECT_THROW(in(31, 0), InvalidArgument);
}

TEST(BlockMi, RejectsBadParameters) {
  EXPECT_THROW(block_mi(1, 1, {3.0, 1.0, 2, 0, 0}), RateOutOfRange);
  EXPECT_THROW(block_mi(1, 1, {3.0, 1.0, 0, 0, 0}), InvalidArgument);
  EXPECT_THROW(block_mi(-1, 1, {3.0, 1.0, 10, 0, 0}), InvalidArgument);
}

TEST(PoissonizedMi, ZeroTimeIsExactlyZero) {
  const SeriesValue v = poissonized_mi({3.0, 1.0, 100, 0.0, 0.0});
  EXPECT_EQ(v.value, 0.0);
  EXPECT_EQ(v.truncation_bound, 0.0);
}

TEST(PoissonizedMi, EqualRatesCarryNoInformation) {
  const SeriesValue v = poissonized_mi({2.0, 2.0, 100, 0.3, 0.4});
  EXPECT_LE(std::abs(v.value), v.truncation_bound + 1e-15);
}

TEST(PoissonizedMi, HardCap) {
  EXPECT_THROW(poissonized_mi({3.0, 1.0, 1000, 1.0, 0.1}), HardCapExceeded);
}

TEST(PoissonizedMi, AgreesWithMonteCarlo) {
  const SbmParams sets[] = {{3.0, 1.0, 100, 0.5, 0.5},
                            {3.0, 1.0, 100, 0.1, 0.1},
                            {2.0, 0.0, 50, 0.3, 0.6},
                            {5.0, 1.0, 20, 1.0, 0.2},
                            {0.8, 0.2, 10, 2.0, 2.0}};
  std::uint64_t seed = 100;
  for (const auto& p : sets) {
    const SeriesValue v = poissonized_mi(p);
    const McEstimate mc = monte_carlo_mi(p, 1'000'000, seed++);
    EXPECT_LE(std::abs(v.value - mc.mean), 3.0 * mc.stderr_ + v.truncation_bound)
        << p.p0 << ' ' << p.p1 << ' ' << p.n << ' ' << p.t1 << ' ' << p.t2 << " series " << v.value
        << " mc " << mc.mean << " +- " << mc.stderr_;
  }
}

TEST(HessianEntries, EqualRatesGiveZero) {
  const HessianEntries h = hessian_entries({1.5, 1.5, 100, 0.2, 0.1});
  EXPECT_LE(std::abs(h.h11), h.slack + 1e-12);
  EXPECT_LE(std::abs(h.h12), h.slack + 1e-12);
  EXPECT_LE(std::abs(h.h22), h.slack + 1e-12);
}

TEST(HessianEntries, NonpositiveOnRandomParameters) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> rate(0.0, 4.0), time(0.0, 0.3);
  std::uniform_int_distribution<std::int64_t> size(10, 150);
  for (int k = 0; k < 15; ++k) {
    const SbmParams p{rate(rng), rate(rng), size(rng), time(rng), time(rng)};
    const HessianEntries h = hessian_entries(p);
    const double nd = static_cast<double>(p.n);
    for (double e : {h.h11, h.h12, h.h22}) {
      EXPECT_LE(e, h.slack);
      EXPECT_LE(e, 1e-8 * nd * nd);
    }
  }
}

TEST(HessianEntries, MatchFiniteDifferencesOfSeries) {
  const SbmParams p{3.0, 1.0, 100, 0.1, 0.1};
  const HessianEntries h = hessian_entries(p);
  const double step = 1e-3 / static_cast<double>(p.n);
  double bound = 0.0;
  auto f = [&](double t1, double t2) {
    SbmParams q = p;
    q.t1 = t1;
    q.t2 = t2;
    const SeriesValue v = poissonized_mi(q);
    bound = std::max(bound, v.truncation_bound);
    return v.value;
  };
  const double f00 = f(p.t1, p.t2);
  const double fd11 = (f(p.t1 + step, p.t2) - 2 * f00 + f(p.t1 - step, p.t2)) / (step * step);
  const double fd22 = (f(p.t1, p.t2 + step) - 2 * f00 + f(p.t1, p.t2 - step)) / (step * step);
  const double fd12 = (f(p.t1 + step, p.t2 + step) - f(p.t1 + step, p.t2 - step) -
                       f(p.t1 - step, p.t2 + step) + f(p.t1 - step, p.t2 - step)) /
                      (4 * step * step);
  const double tol = std::max(1e-6 * 100.0 * 100.0, 10.0 * bound / (step * step));
  EXPECT_NEAR(h.h11, fd11, tol);
  EXPECT_NEAR(h.h22, fd22, tol);
  EXPECT_NEAR(h.h12, fd12, tol);
}

TEST(HessianEntries, QuadraticFormAtZeroMatchesGapKernel) {
  for (std::int64_t n : {50, 100, 1000}) {
    const SbmParams p{3.0, 1.0, n, 0.0, 0.0};
    const HessianEntries h = hessian_entries(p);
    EXPECT_NEAR(h.h11 + h.h22 - 2.0 * h.h12, quadratic_form_at_zero(p), 1e-8) << n;
  }
}

TEST(HessianEntries, InvariantUnderAddedLinearTerm) {
  // A term a t1 + b t2 + c on the Poissonized surface corresponds to
  // (a L1 + b L2) / N + c on the lattice, since E[L_i] = N t_i.
  const SbmParams p{3.0, 1.0, 100, 0.1, 0.05};
  const PoissonCuts cuts = poisson_cuts(p, {});
  const BlockMiTable in(p.p0, p.p1, p.n, cuts.first.max_l + 2, cuts.second.max_l + 2);
  const double nd = static_cast<double>(p.n);
  const HessianEntries base = hessian_series(cuts, p.n, in);
  for (auto [a, b, c] : {std::tuple{1.0, -2.0, 0.5}, {-7.5, 3.0, 0.0}, {0.0, 100.0, -3.0}}) {
    auto shifted = [&](std::int64_t l1, std::int64_t l2) {
      return in(l1, l2) + (a * static_cast<double>(l1) + b * static_cast<double>(l2)) / nd + c;
    };
    // The surface itself moves by exactly a t1 + b t2 + c (up to truncation).
    EXPECT_NEAR(poisson_series(cuts, shifted) - poisson_series(cuts, in), a * p.t1 + b * p.t2 + c, 1e-9);
    const HessianEntries h = hessian_series(cuts, p.n, shifted);
    const double q0 = base.h11 + base.h22 - 2.0 * base.h12;
    const double q1 = h.h11 + h.h22 - 2.0 * h.h12;
    EXPECT_NEAR(q0, q1, 1e-9 * nd * nd + 4.0 * base.slack);
  }
}

TEST(Nonpositivity, EqualRatesGiveZeros) {
  const NonpositivityTriple d = nonpositivity_triple(2, 3, {1.0, 1.0, 10, 0, 0});
  EXPECT_NEAR(d.d1, 0.0, 1e-15);
  EXPECT_NEAR(d.d2, 0.0, 1e-15);
  EXPECT_NEAR(d.d12, 0.0, 1e-15);
}

TEST(Nonpositivity, SmallGrid) {
  const SbmParams p{3.0, 1.0, 50, 0, 0};
  for (std::int64_t a = 0; a < 5; ++a) {
    for (std::int64_t b = 0; b < 4; ++b) {
      const NonpositivityTriple d = nonpositivity_triple(a, b, p);
      EXPECT_LE(d.d1, 1e-12);
      EXPECT_LE(d.d2, 1e-12);
      EXPECT_LE(d.d12, 1e-12);
    }
  }
}

TEST(Nonpositivity, RandomParametersOnEightByEightGrid) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> rate(0.0, 5.0);
  std::uniform_int_distribution<std::int64_t> size(5, 300);
  for (int k = 0; k < 10; ++k) {
    const SbmParams p{rate(rng), rate(rng), size(rng), 0, 0};
    for (std::int64_t a = 0; a < 8; ++a) {
      for (std::int64_t b = 0; b < 8; ++b) {
        const NonpositivityTriple d = nonpositivity_triple(a, b, p);
        EXPECT_LE(std::max({d.d1, d.d2, d.d12}), 1e-12) << k << ' ' << a << ' ' << b;
      }
    }
  }
}

// -I(X1;X2 | K1, K2) from the table of (S, K1, K2, X1, X2), where K counts
// ones among the first L observations and X is the next observation.
double minus_conditional_mi(std::int64_t l1, std::int64_t l2, const SbmParams& p) {
  const double nd = static_cast<double>(p.n);
  const double r1[2] = {p.p0 / nd, p.p1 / nd};
  const double r2[2] = {p.p1 / nd, p.p0 / nd};
  auto binom = [](std::int64_t k, std::int64_t l, double r) {
    return std::exp(std::lgamma(l + 1.0) - std::lgamma(k + 1.0) - std::lgamma(l - k + 1.0)) *
           std::pow(r, static_cast<double>(k)) * std::pow(1.0 - r, static_cast<double>(l - k));
  };
  const std::vector<std::size_t> shape = {2, static_cast<std::size_t>(l1 + 1),
                                          static_cast<std::size_t>(l2 + 1), 2, 2};
  std::vector<double> mass;
  for (int s = 0; s < 2; ++s)
    for (std::int64_t k1 = 0; k1 <= l1; ++k1)
      for (std::int64_t k2 = 0; k2 <= l2; ++k2)
        for (int x1 = 0; x1 < 2; ++x1)
          for (int x2 = 0; x2 < 2; ++x2)
            mass.push_back(0.5 * binom(k1, l1, r1[s]) * binom(k2, l2, r2[s]) *
                           (x1 ? r1[s] : 1 - r1[s]) * (x2 ? r2[s] : 1 - r2[s]));
  const JointTable<> t(shape, mass);
  return -conditional_mi(t.marginal({1, 2, 3, 4}), {2}, {3}, {0, 1});
}

TEST(Nonpositivity, MixedDifferenceIsMinusConditionalMi) {
  for (const SbmParams& p : {SbmParams{3.0, 1.0, 50, 0, 0}, SbmParams{0.0, 4.0, 20, 0, 0}}) {
    for (auto [a, b] : {std::pair<std::int64_t, std::int64_t>{0, 0}, {3, 1}, {5, 6}, {2, 9}}) {
      EXPECT_NEAR(nonpositivity_triple(a, b, p).d12, minus_conditional_mi(a, b, p), 1e-10);
    }
  }
}

TEST(QuadraticForm, EqualRatesGiveZero) {
  EXPECT_NEAR(quadratic_form_at_zero({2.0, 2.0, 100, 0, 0}), 0.0, 1e-12);
}

TEST(QuadraticForm, ConvergesToClosedForm) {
  const double limit = limit_hessian_combination(3.0, 1.0);
  double prev = INFINITY;
  for (std::int64_t n : {100, 1000, 10000}) {
    const double q = quadratic_form_at_zero({3.0, 1.0, n, 0, 0});
    const double err = std::abs(q - limit);
    EXPECT_LT(err, prev) << n;
    EXPECT_GE(q, 1.0 / 24.0 - err) << n;
    prev = err;
  }
  EXPECT_LT(prev / limit, 0.01);
  EXPECT_GT(quadratic_form_at_zero({3.0, 1.0, 10000, 0, 0}), 0.0);
}

TEST(JFunction, BasicValuesAndSymmetry) {
  EXPECT_EQ(j_function(0.0, 0, 0, 3.0, 1.0), 0.0);
  for (double s : {-0.7, 0.0, 0.3, 2.0})
    for (std::int64_t a = 0; a < 4; ++a)
      for (std::int64_t b = 0; b < 4; ++b)
        EXPECT_NEAR(j_function(s, a, b, 3.0, 1.0), j_function(-s, b, a, 3.0, 1.0), 1e-14);
  EXPECT_THROW(j_function(0.0, 1, 1, 0.0, 0.0), DomainError);
}

TEST(JFunction, ZeroRateConvention) {
  EXPECT_EQ(j_function(0.2, 2, 3, 0.0, 1.5), -INFINITY);
  EXPECT_TRUE(std::isfinite(j_function(0.2, 2, 0, 0.0, 1.5)));
  EXPECT_TRUE(std::isfinite(j_function(0.2, 0, 3, 0.0, 1.5)));
  // 0^0 = 1: J(s, 0, 0) = log cosh(s a).
  EXPECT_NEAR(j_function(0.4, 0, 0, 0.0, 1.5), std::log(std::cosh(0.4 * 0.75)), 1e-15);
}

TEST(JFunction, TaylorCoefficientsMatchDifferences) {
  const double h = 1e-4;
  for (auto [p0, p1] : {std::pair{3.0, 1.0}, {0.8, 0.2}, {0.0, 2.0}}) {
    for (auto [a, b] : {std::pair<std::int64_t, std::int64_t>{2, 1}, {0, 0}, {1, 3}, {4, 0}}) {
      if (p0 == 0.0 && a > 0 && b > 0) continue;
      auto j = [&](double s) { return j_function(s, a, b, p0, p1); };
      const JTaylor c = j_taylor_coefficients(a, b, p0, p1);
      EXPECT_NEAR(c.value, j(0.0), 1e-14);
      EXPECT_NEAR(c.first, (j(h) - j(-h)) / (2 * h), 1e-8);
      EXPECT_NEAR(c.second, (j(h) - 2 * j(0.0) + j(-h)) / (h * h), 1e-6);
    }
  }
}

TEST(JFunction, TaylorCoefficientsMatchDifferencesTightly) {
  // Wider step with Richardson for the second derivative.
  const double h = 1e-2;
  auto j = [](double s) { return j_function(s, 2, 1, 3.0, 1.0); };
  auto d2 = [&](double k) { return (j(k) - 2 * j(0.0) + j(-k)) / (k * k); };
  const double second = (4.0 * d2(h / 2) - d2(h)) / 3.0;
  EXPECT_NEAR(j_taylor_coefficients(2, 1, 3.0, 1.0).second, second, 1e-8);
}

TEST(Phi, ZeroAtOrigin) {
  EXPECT_EQ(phi_function(0.0, 0.0, 3.0, 1.0).value, 0.0);
  EXPECT_EQ(psi_function(0.0, 0.0, 3.0, 1.0).value, 0.0);
}

TEST(Phi, EqualRatesCollapse) {
  for (double p : {0.5, 1.0, 2.5}) {
    for (auto [t1, t2] : {std::pair{0.3, 0.1}, {1.0, 2.0}}) {
      const SeriesValue v = phi_function(t1, t2, p, p);
      EXPECT_NEAR(v.value, (t1 + t2) * p * std::log(p), 1e-12 + v.truncation_bound);
    }
  }
}

TEST(Phi, SymmetricInTimes) {
  for (auto [t1, t2] : {std::pair{0.2, 0.7}, {1.5, 0.1}}) {
    const SeriesValue a = phi_function(t1, t2, 3.0, 1.0);
    const SeriesValue b = phi_function(t2, t1, 3.0, 1.0);
    EXPECT_NEAR(a.value, b.value, 1e-13 + a.truncation_bound + b.truncation_bound);
  }
}

TEST(Phi, TruncationBoundCoversTighterEvaluation) {
  const TruncationPolicy loose{1e-6, 500}, tight{1e-15, 500};
  for (auto [t1, t2] : {std::pair{0.5, 0.8}, {2.0, 3.0}}) {
    const SeriesValue a = phi_function(t1, t2, 3.0, 1.0, loose);
    const SeriesValue b = phi_function(t1, t2, 3.0, 1.0, tight);
    EXPECT_LE(std::abs(a.value - b.value), a.truncation_bound + b.truncation_bound);
    EXPECT_GT(a.truncation_bound, 0.0);
  }
}

TEST(Phi, InfiniteTermWithWeightIsAnError) {
  auto broken = [](double, std::int64_t, std::int64_t, double, double) { return -INFINITY; };
  EXPECT_THROW(phi_function(0.1, 0.1, 3.0, 1.0, {}, broken), DomainError);
  // With p0 = 0 every -inf term has zero weight.
  EXPECT_NO_THROW(phi_function(0.5, 0.5, 0.0, 2.0));
}

TEST(Psi, LinearOffsetFromPhi) {
  const double phi = phi_function(0.2, 0.3, 3.0, 1.0).value;
  EXPECT_NEAR(psi_function(0.2, 0.3, 3.0, 1.0).value, phi - 1.0, 1e-14);
  for (auto [t1, t2] : {std::pair{0.1, 0.0}, {0.4, 0.9}}) {
    const double d = psi_function(t1, t2, 2.0, 0.5).value - phi_function(t1, t2, 2.0, 0.5).value;
    EXPECT_NEAR(d, -(t1 + t2) * 1.25, 1e-14);
  }
}

TEST(LimitCombination, ClosedFormProperties) {
  EXPECT_NEAR(limit_hessian_combination(0.7, 0.7), 0.0, 1e-15);
  EXPECT_GE(limit_hessian_combination(3.0, 1.0), 1.0 / 24.0);
  EXPECT_THROW(limit_hessian_combination(0.0, 0.0), DegenerateChannel);
  // 100-point grid of (p0, p1) in (0, 4]^2.
  for (int i = 1; i <= 10; ++i) {
    for (int j = 1; j <= 10; ++j) {
      const double p0 = 0.4 * i, p1 = 0.4 * j;
      const double v = limit_hessian_combination(p0, p1);
      EXPECT_EQ(v, taylor_gap_closed_form(p0, p1));
      if (i != j) {
        EXPECT_GT(v, 0.0);
      }
      EXPECT_GE(v, sextic_bound(p0, p1) - 1e-15);
    }
  }
}

TEST(LimitCombination, AssembledFromJTermsMatchesClosedForm) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> rate(0.0, 5.0);
  for (int k = 0; k < 50; ++k) {
    const double p0 = rate(rng), p1 = rate(rng);
    const double want = limit_hessian_combination(p0, p1);
    EXPECT_NEAR(limit_hessian_from_j_terms(p0, p1), want, 1e-12 * std::max(1.0, (p0 + p1) * (p0 + p1)));
  }
  EXPECT_NEAR(limit_hessian_from_j_terms(1.0, 0.0), limit_hessian_combination(1.0, 0.0), 1e-14);
  EXPECT_NEAR(limit_hessian_from_j_terms(0.0, 2.0), limit_hessian_combination(0.0, 2.0), 1e-13);
}

TEST(LimitCombination, PhiFiniteDifferencesExtrapolate) {
  for (auto [p0, p1] : {std::pair{3.0, 1.0}, {0.8, 0.2}, {1.0, 0.0}, {2.0, 0.5}, {0.5, 1.5}}) {
    const FdCombination fd = phi_hessian_combination_fd(p0, p1, 1e-2);
    const double closed = limit_hessian_combination(p0, p1);
    EXPECT_LT(std::abs(fd.extrapolated - closed) / closed, 0.01) << p0 << ' ' << p1;
    // Extrapolation improves on both raw stencils.
    EXPECT_LT(std::abs(fd.extrapolated - closed), std::abs(fd.fine - closed));
  }
}

TEST(LimitCombination, SignFlippedJIsDetected) {
  auto flipped = [](double s, std::int64_t a, std::int64_t b, double p0, double p1) {
    return -j_function(s, a, b, p0, p1);
  };
  const FdCombination fd = phi_hessian_combination_fd(3.0, 1.0, 1e-2, {}, flipped);
  EXPECT_GT(std::abs(fd.extrapolated - limit_hessian_combination(3.0, 1.0)), 0.5 * 0.042);
}

}  // namespace
