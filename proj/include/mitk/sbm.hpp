#pragma once

// Poissonized two-community observation model. S ~ Ber(1/2); channel 1 emits
// Ber(p_S / N), channel 2 emits Ber(q_S / N) with q = (p1, p0). Observation
// counts are Poisson(N t1) and Poisson(N t2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "mitk/counterexample.hpp"
#include "mitk/errors.hpp"
#include "mitk/numeric.hpp"

namespace mitk {

struct SbmParams {
  double p0 = 0.0;
  double p1 = 0.0;
  std::int64_t n = 1;
  double t1 = 0.0;
  double t2 = 0.0;

  void validate() const {
    if (n < 1) throw InvalidArgument("SbmParams: N must be a positive integer");
    for (double p : {p0, p1}) {
      if (!std::isfinite(p) || p < 0.0 || p > static_cast<double>(n))
        throw RateOutOfRange("SbmParams: p/N must lie in [0, 1]");
    }
    for (double t : {t1, t2}) {
      if (!std::isfinite(t) || t < 0.0) throw DomainError("SbmParams: t1, t2 must be >= 0");
    }
  }
};

struct TruncationPolicy {
  double tail_mass_cap = 1e-12;  // per Poisson factor
  std::int64_t hard_cap = 500;   // max L per axis

  void validate() const {
    if (!(tail_mass_cap > 0.0 && tail_mass_cap <= 1e-6))
      throw InvalidArgument("TruncationPolicy: tail_mass_cap must lie in (0, 1e-6]");
    if (hard_cap < 1) throw InvalidArgument("TruncationPolicy: hard_cap must be >= 1");
  }
};

/// e^{-t} t^L / L!, with pi(t, -1) = 0 and pi(0, 0) = 1.
inline double poisson_pmf(double t, std::int64_t l) {
  if (!(t >= 0.0)) throw DomainError("poisson_pmf: t must be >= 0");
  if (l < 0) return 0.0;
  if (t == 0.0) return l == 0 ? 1.0 : 0.0;
  const auto x = static_cast<double>(l);
  return std::exp(-t + x * std::log(t) - std::lgamma(x + 1.0));
}

/// Smallest cut M with P(L > M) <= cap for L ~ Poisson(lambda).
struct PoissonCut {
  std::int64_t max_l = 0;
  double tail = 0.0;       // P(L > max_l)
  double tail_mean = 0.0;  // E[L; L > max_l]
  std::vector<double> pmf; // pi(lambda, L) for L = 0..max_l
};

inline PoissonCut poisson_cut(double lambda, const TruncationPolicy& trunc) {
  trunc.validate();
  PoissonCut cut;
  if (lambda == 0.0) {
    cut.pmf = {1.0};
    return cut;
  }
  // Beyond this point the pmf is far below any representable tail cap.
  const auto far = static_cast<std::int64_t>(std::ceil(lambda + 50.0 * std::sqrt(lambda + 1.0) + 60.0));
  std::vector<double> pmf(static_cast<std::size_t>(far) + 1);
  for (std::int64_t l = 0; l <= far; ++l) pmf[static_cast<std::size_t>(l)] = poisson_pmf(lambda, l);
  // suffix[l] = P(L >= l), summed from the far end so small tails stay accurate.
  std::vector<double> suffix(pmf.size() + 1, 0.0);
  for (std::size_t l = pmf.size(); l-- > 0;) suffix[l] = suffix[l + 1] + pmf[l];
  std::int64_t m = 0;
  while (m < far && suffix[static_cast<std::size_t>(m) + 1] > trunc.tail_mass_cap) ++m;
  if (m > trunc.hard_cap)
    throw HardCapExceeded("poisson_cut: required truncation exceeds hard_cap");
  cut.max_l = m;
  cut.tail = suffix[static_cast<std::size_t>(m) + 1];
  // E[L; L > M] = lambda P(L >= M).
  cut.tail_mean = lambda * suffix[static_cast<std::size_t>(m)];
  pmf.resize(static_cast<std::size_t>(m) + 1);
  cut.pmf = std::move(pmf);
  return cut;
}

namespace sbm_detail {

// log Bin(k; L, rho) for k = 0..L, -inf for impossible counts.
inline std::vector<double> log_binomial_row(std::int64_t l, double rho) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> row(static_cast<std::size_t>(l) + 1);
  const double lf = std::lgamma(static_cast<double>(l) + 1.0);
  for (std::int64_t k = 0; k <= l; ++k) {
    const auto kd = static_cast<double>(k);
    const auto rest = static_cast<double>(l - k);
    double v = lf - std::lgamma(kd + 1.0) - std::lgamma(rest + 1.0);
    if (k > 0) v = rho == 0.0 ? kNegInf : v + kd * std::log(rho);
    if (l - k > 0) v = rho == 1.0 ? kNegInf : v + rest * std::log1p(-rho);
    row[static_cast<std::size_t>(k)] = v;
  }
  return row;
}

// Contribution of one sufficient-statistic cell with log-likelihoods la0, la1
// under S = 0, 1:  m [(1+r) log(1+r) + (1-r) log(1-r)] / 2,
// m = (a0+a1)/2, r = (a0-a1)/(a0+a1) = tanh((la0-la1)/2).
inline double cell_information(double la0, double la1) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (la0 == kNegInf && la1 == kNegInf) return 0.0;
  const double lm = log_add_exp(la0, la1) - std::log(2.0);
  const double r = (la0 == kNegInf) ? -1.0 : (la1 == kNegInf) ? 1.0 : std::tanh(0.5 * (la0 - la1));
  double v = 0.0;
  if (r > -1.0) v += (1.0 + r) * std::log1p(r);
  if (r < 1.0) v += (1.0 - r) * std::log1p(-r);
  return 0.5 * std::exp(lm) * v;
}

}  // namespace sbm_detail

/// I_N(L1, L2) on the grid 0..max1 x 0..max2, computed over the binomial
/// sufficient statistic (K1, K2).
class BlockMiTable {
 public:
  BlockMiTable(double p0, double p1, std::int64_t n, std::int64_t max1, std::int64_t max2)
      : max1_(max1), max2_(max2) {
    SbmParams{p0, p1, n, 0.0, 0.0}.validate();
    const double rho0 = p0 / static_cast<double>(n);
    const double rho1 = p1 / static_cast<double>(n);
    const std::int64_t top = std::max(max1, max2);
    for (std::int64_t l = 0; l <= top; ++l) {
      lb0_.push_back(sbm_detail::log_binomial_row(l, rho0));
      lb1_.push_back(sbm_detail::log_binomial_row(l, rho1));
    }
    values_.assign(static_cast<std::size_t>((max1 + 1) * (max2 + 1)), 0.0);
    for (std::int64_t l1 = 0; l1 <= max1; ++l1)
      for (std::int64_t l2 = 0; l2 <= max2; ++l2)
        values_[index(l1, l2)] = compute(l1, l2);
  }

  double operator()(std::int64_t l1, std::int64_t l2) const {
    if (l1 < 0 || l2 < 0 || l1 > max1_ || l2 > max2_)
      throw InvalidArgument("BlockMiTable: index outside the table");
    return values_[index(l1, l2)];
  }
  std::int64_t max1() const { return max1_; }
  std::int64_t max2() const { return max2_; }

 private:
  std::size_t index(std::int64_t l1, std::int64_t l2) const {
    return static_cast<std::size_t>(l1 * (max2_ + 1) + l2);
  }

  // Channel 1 has rate p_S/N, channel 2 rate q_S/N = p_{1-S}/N.
  double compute(std::int64_t l1, std::int64_t l2) const {
    const auto& x0 = lb0_[static_cast<std::size_t>(l1)];  // K1 | S=0
    const auto& x1 = lb1_[static_cast<std::size_t>(l1)];  // K1 | S=1
    const auto& y0 = lb1_[static_cast<std::size_t>(l2)];  // K2 | S=0
    const auto& y1 = lb0_[static_cast<std::size_t>(l2)];  // K2 | S=1
    CompensatedSum<double> acc;
    for (std::size_t k1 = 0; k1 < x0.size(); ++k1)
      for (std::size_t k2 = 0; k2 < y0.size(); ++k2)
        acc += sbm_detail::cell_information(x0[k1] + y0[k2], x1[k1] + y1[k2]);
    return std::clamp(acc.value(), 0.0, std::log(2.0));
  }

  std::int64_t max1_;
  std::int64_t max2_;
  std::vector<std::vector<double>> lb0_;
  std::vector<std::vector<double>> lb1_;
  std::vector<double> values_;
};

/// I_N(L1, L2) = I(S; first L1 outputs of channel 1, first L2 of channel 2).
inline double block_mi(std::int64_t l1, std::int64_t l2, const SbmParams& params) {
  if (l1 < 0 || l2 < 0) throw InvalidArgument("block_mi: L1, L2 must be >= 0");
  return BlockMiTable(params.p0, params.p1, params.n, l1, l2)(l1, l2);
}

struct SeriesValue {
  double value = 0.0;
  double truncation_bound = 0.0;
};

/// Poisson(N t1) x Poisson(N t2) cuts for a parameter set.
struct PoissonCuts {
  PoissonCut first;
  PoissonCut second;
};

inline PoissonCuts poisson_cuts(const SbmParams& params, const TruncationPolicy& trunc) {
  params.validate();
  const double nd = static_cast<double>(params.n);
  return {poisson_cut(nd * params.t1, trunc), poisson_cut(nd * params.t2, trunc)};
}

/// sum_{L1,L2} pi(N t1, L1) pi(N t2, L2) in(L1, L2) over the truncated
/// grid, L1-major. `in` is any surface on the (L1, L2) lattice.
template <class Surface>
double poisson_series(const PoissonCuts& cuts, const Surface& in) {
  CompensatedSum<double> acc;
  for (std::int64_t l1 = 0; l1 <= cuts.first.max_l; ++l1)
    for (std::int64_t l2 = 0; l2 <= cuts.second.max_l; ++l2)
      acc += cuts.first.pmf[static_cast<std::size_t>(l1)] *
             cuts.second.pmf[static_cast<std::size_t>(l2)] * in(l1, l2);
  return acc.value();
}

/// sum_{L1,L2} pi(N t1, L1) pi(N t2, L2) I_N(L1, L2), truncated per policy.
/// The omitted mass is at most log 2 (tail1 + tail2) since I_N <= log 2.
inline SeriesValue poissonized_mi(const SbmParams& params, const TruncationPolicy& trunc = {}) {
  const PoissonCuts cuts = poisson_cuts(params, trunc);
  const BlockMiTable table(params.p0, params.p1, params.n, cuts.first.max_l, cuts.second.max_l);
  return {poisson_series(cuts, table), std::log(2.0) * (cuts.first.tail + cuts.second.tail)};
}

/// Second t-derivatives of the Poissonized MI, as N^2-weighted Poisson series
/// of second differences of I_N. Each difference is bounded by log 2 in
/// magnitude, so slack = N^2 log 2 (tail1 + tail2).
struct HessianEntries {
  double h11 = 0.0;
  double h12 = 0.0;
  double h22 = 0.0;
  double slack = 0.0;
};

/// Hessian series for an arbitrary lattice surface; `in` must be defined up
/// to (max_l + 2) on each axis.
template <class Surface>
HessianEntries hessian_series(const PoissonCuts& cuts, std::int64_t n, const Surface& in) {
  auto d11 = [&](std::int64_t a, std::int64_t b) {
    return in(a + 2, b) - 2.0 * in(a + 1, b) + in(a, b);
  };
  auto d22 = [&](std::int64_t a, std::int64_t b) {
    return in(a, b + 2) - 2.0 * in(a, b + 1) + in(a, b);
  };
  auto d12 = [&](std::int64_t a, std::int64_t b) {
    return in(a + 1, b + 1) - in(a + 1, b) - in(a, b + 1) + in(a, b);
  };
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  return {n2 * poisson_series(cuts, d11), n2 * poisson_series(cuts, d12),
          n2 * poisson_series(cuts, d22),
          n2 * std::log(2.0) * (cuts.first.tail + cuts.second.tail)};
}

inline HessianEntries hessian_entries(const SbmParams& params, const TruncationPolicy& trunc = {}) {
  const PoissonCuts cuts = poisson_cuts(params, trunc);
  const BlockMiTable in(params.p0, params.p1, params.n, cuts.first.max_l + 2, cuts.second.max_l + 2);
  return hessian_series(cuts, params.n, in);
}

/// Second differences of I_N at (L1, L2); each is minus a conditional MI.
struct NonpositivityTriple {
  double d1 = 0.0;
  double d2 = 0.0;
  double d12 = 0.0;
};

inline NonpositivityTriple nonpositivity_triple(std::int64_t l1, std::int64_t l2,
                                                const SbmParams& params) {
  if (l1 < 0 || l2 < 0) throw InvalidArgument("nonpositivity_triple: L1, L2 must be >= 0");
  const BlockMiTable in(params.p0, params.p1, params.n, l1 + 2, l2 + 2);
  return {in(l1 + 2, l2) - 2.0 * in(l1 + 1, l2) + in(l1, l2),
          in(l1, l2 + 2) - 2.0 * in(l1, l2 + 1) + in(l1, l2),
          in(l1 + 1, l2 + 1) - in(l1 + 1, l2) - in(l1, l2 + 1) + in(l1, l2)};
}

/// N^2 [2 I(X1;X2) - I(X1;X1') - I(X2;X2')] for single observations, through
/// the exact gap kernel at eps = 1/N. This is h11 + h22 - 2 h12 at t = 0.
inline double quadratic_form_at_zero(const SbmParams& params) {
  params.validate();
  const double nd = static_cast<double>(params.n);
  const GapReport r = bernoulli_gap(BernoulliPairParams::symmetric(params.p0, params.p1, 1.0 / nd));
  return nd * nd * r.delta_q2;
}

/// J(s, L1, L2) = log[ e^{-s a} p1^L1 p0^L2 / 2 + e^{s a} p0^L1 p1^L2 / 2 ],
/// a = (p1 - p0)/2, with 0^0 = 1. May return -inf.
inline double j_function(double s, std::int64_t l1, std::int64_t l2, double p0, double p1) {
  if (!(p0 >= 0.0 && p1 >= 0.0) || !(p0 + p1 > 0.0))
    throw DomainError("j_function: need p0, p1 >= 0 and p0 + p1 > 0");
  if (l1 < 0 || l2 < 0) throw InvalidArgument("j_function: L1, L2 must be >= 0");
  auto xlogp = [](std::int64_t l, double p) {
    if (l == 0) return 0.0;
    return p == 0.0 ? -std::numeric_limits<double>::infinity() : static_cast<double>(l) * std::log(p);
  };
  const double a = 0.5 * (p1 - p0);
  const double la = -s * a + xlogp(l1, p1) + xlogp(l2, p0);
  const double lb = s * a + xlogp(l1, p0) + xlogp(l2, p1);
  return log_add_exp(la, lb) - std::log(2.0);
}

/// J(0), dJ/ds(0), d^2J/ds^2(0). With A = p1^L1 p0^L2, B = p0^L1 p1^L2:
///   J(0) = log((A+B)/2),  J'(0) = -(p1-p0)/2 (A-B)/(A+B),
///   J''(0) = (p1-p0)^2 AB / (A+B)^2.
struct JTaylor {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

inline JTaylor j_taylor_coefficients(std::int64_t l1, std::int64_t l2, double p0, double p1) {
  const double value = j_function(0.0, l1, l2, p0, p1);
  if (value == -std::numeric_limits<double>::infinity()) return {value, 0.0, 0.0};
  auto xlogp = [](std::int64_t l, double p) {
    if (l == 0) return 0.0;
    return p == 0.0 ? -std::numeric_limits<double>::infinity() : static_cast<double>(l) * std::log(p);
  };
  const double la = xlogp(l1, p1) + xlogp(l2, p0);
  const double lb = xlogp(l1, p0) + xlogp(l2, p1);
  const double half = (la == lb) ? 0.0 : 0.5 * (la - lb);
  const double ratio = std::tanh(half);          // (A-B)/(A+B)
  const double c = std::cosh(half);
  const double prod = std::isinf(c) ? 0.0 : 0.25 / (c * c);  // AB/(A+B)^2
  const double d = p1 - p0;
  return {value, -0.5 * d * ratio, d * d * prod};
}

/// Evaluates J for the phi series; swappable for fault injection.
struct StandardJ {
  double operator()(double s, std::int64_t l1, std::int64_t l2, double p0, double p1) const {
    return j_function(s, l1, l2, p0, p1);
  }
};

/// phi(t1,t2) = 1/2 sum (pi(p1 t1,L1) pi(p0 t2,L2) + pi(p0 t1,L1) pi(p1 t2,L2)) J(t1-t2,L1,L2).
///
/// Truncation bound: |J(s,L1,L2)| <= log 2 + |s (p1-p0)|/2 + (L1+L2) c with
/// c = max |log p| over the nonzero rates, integrated against the omitted
/// Poisson mass of each mixture component.
template <class JFn = StandardJ>
SeriesValue phi_function(double t1, double t2, double p0, double p1,
                         const TruncationPolicy& trunc = {}, JFn jfn = {}) {
  if (!(t1 >= 0.0 && t2 >= 0.0)) throw DomainError("phi_function: t1, t2 must be >= 0");
  if (!(p0 >= 0.0 && p1 >= 0.0) || !(p0 + p1 > 0.0) || !std::isfinite(p0) || !std::isfinite(p1))
    throw DomainError("phi_function: need finite p0, p1 >= 0 with p0 + p1 > 0");
  const PoissonCut a1 = poisson_cut(p1 * t1, trunc);
  const PoissonCut a2 = poisson_cut(p0 * t2, trunc);
  const PoissonCut b1 = poisson_cut(p0 * t1, trunc);
  const PoissonCut b2 = poisson_cut(p1 * t2, trunc);
  const std::int64_t m1 = std::max(a1.max_l, b1.max_l);
  const std::int64_t m2 = std::max(a2.max_l, b2.max_l);
  auto weight = [](const PoissonCut& c, std::int64_t l) {
    return l <= c.max_l ? c.pmf[static_cast<std::size_t>(l)] : 0.0;
  };
  const double s = t1 - t2;
  CompensatedSum<double> acc;
  for (std::int64_t l1 = 0; l1 <= m1; ++l1) {
    for (std::int64_t l2 = 0; l2 <= m2; ++l2) {
      const double w = 0.5 * (weight(a1, l1) * weight(a2, l2) + weight(b1, l1) * weight(b2, l2));
      if (w == 0.0) continue;
      const double j = jfn(s, l1, l2, p0, p1);
      if (!std::isfinite(j))
        throw DomainError("phi_function: infinite J term carries positive Poisson weight");
      acc += w * j;
    }
  }
  double c = 0.0;
  for (double p : {p0, p1})
    if (p > 0.0) c = std::max(c, std::abs(std::log(p)));
  const double c0 = std::log(2.0) + 0.5 * std::abs(s * (p1 - p0));
  auto component = [&](const PoissonCut& x, const PoissonCut& y, double lx, double ly) {
    return c0 * (x.tail + y.tail) + c * (x.tail_mean + ly * x.tail + y.tail_mean + lx * y.tail);
  };
  const double bound = 0.5 * (component(a1, a2, p1 * t1, p0 * t2) + component(b1, b2, p0 * t1, p1 * t2));
  return {acc.value(), bound};
}

/// psi(t1,t2) = -(t1+t2)(p0+p1)/2 + phi(t1,t2).
template <class JFn = StandardJ>
SeriesValue psi_function(double t1, double t2, double p0, double p1,
                         const TruncationPolicy& trunc = {}, JFn jfn = {}) {
  SeriesValue phi = phi_function(t1, t2, p0, p1, trunc, jfn);
  phi.value += -0.5 * (t1 + t2) * (p0 + p1);
  return phi;
}

/// (2 d1 d2 - d1^2 - d2^2) phi at (0,0), in closed form.
inline double limit_hessian_combination(double p0, double p1) {
  return taylor_gap_closed_form(p0, p1);
}

/// The same combination assembled term by term from the Poisson-weight
/// derivatives at t = 0 (only L1, L2 <= 2 survive) and the Taylor
/// coefficients of J. Writing delta = d1 - d2, and since J depends on t1 - t2,
///   (2 d1 d2 - d1^2 - d2^2)(w J) = -[(delta^2 w) J + 4 (delta w) J' + 4 w J''].
inline double limit_hessian_from_j_terms(double p0, double p1) {
  if (!(p0 >= 0.0 && p1 >= 0.0) || !(p0 + p1 > 0.0))
    throw DegenerateChannel("limit_hessian_from_j_terms: need p0 + p1 > 0");
  auto kd = [](std::int64_t l, std::int64_t at) { return l == at ? 1.0 : 0.0; };
  auto d0 = [&](std::int64_t l) { return kd(l, 0); };
  auto d1 = [&](std::int64_t l) { return kd(l, 1) - kd(l, 0); };
  auto d2 = [&](std::int64_t l) { return kd(l, 2) - 2.0 * kd(l, 1) + kd(l, 0); };
  CompensatedSum<double> acc;
  for (std::int64_t l1 = 0; l1 <= 2; ++l1) {
    for (std::int64_t l2 = 0; l2 <= 2; ++l2) {
      double w = 0.0, dw = 0.0, ddw = 0.0;
      // Component rates (on t1, on t2): (p1, p0) and (p0, p1), each weighted 1/2.
      for (auto [r1, r2] : {std::pair{p1, p0}, std::pair{p0, p1}}) {
        const double w_1 = r1 * d1(l1) * d0(l2);
        const double w_2 = r2 * d0(l1) * d1(l2);
        const double w_11 = r1 * r1 * d2(l1) * d0(l2);
        const double w_22 = r2 * r2 * d0(l1) * d2(l2);
        const double w_12 = r1 * r2 * d1(l1) * d1(l2);
        w += 0.5 * d0(l1) * d0(l2);
        dw += 0.5 * (w_1 - w_2);
        ddw += 0.5 * (w_11 - 2.0 * w_12 + w_22);
      }
      if (w == 0.0 && dw == 0.0 && ddw == 0.0) continue;
      const JTaylor j = j_taylor_coefficients(l1, l2, p0, p1);
      if (!std::isfinite(j.value))
        throw DomainError("limit_hessian_from_j_terms: infinite J term with nonzero weight");
      acc += -(ddw * j.value + 4.0 * dw * j.first + 4.0 * w * j.second);
    }
  }
  return acc.value();
}

/// One-sided finite-difference estimate of (2 d1 d2 - d1^2 - d2^2) phi at (0,0).
struct FdCombination {
  double coarse = 0.0;        // stencil at step h
  double fine = 0.0;          // stencil at step h/2
  double extrapolated = 0.0;  // 2 fine - coarse
};

namespace sbm_detail {

// First-order one-sided stencils from the corner (0,0).
template <class JFn>
double corner_combination(double h, double p0, double p1, const TruncationPolicy& trunc, JFn jfn) {
  auto f = [&](double a, double b) { return phi_function(a, b, p0, p1, trunc, jfn).value; };
  const double f00 = f(0.0, 0.0);
  const double d11 = (f(2 * h, 0.0) - 2.0 * f(h, 0.0) + f00) / (h * h);
  const double d22 = (f(0.0, 2 * h) - 2.0 * f(0.0, h) + f00) / (h * h);
  const double d12 = (f(h, h) - f(h, 0.0) - f(0.0, h) + f00) / (h * h);
  return 2.0 * d12 - d11 - d22;
}

}  // namespace sbm_detail

inline constexpr double kPhiFdStep = 1e-2;

template <class JFn = StandardJ>
FdCombination phi_hessian_combination_fd(double p0, double p1, double h = kPhiFdStep,
                                         const TruncationPolicy& trunc = {}, JFn jfn = {}) {
  if (!(h > 0.0)) throw InvalidArgument("phi_hessian_combination_fd: step must be > 0");
  FdCombination out;
  out.coarse = sbm_detail::corner_combination(h, p0, p1, trunc, jfn);
  out.fine = sbm_detail::corner_combination(0.5 * h, p0, p1, trunc, jfn);
  out.extrapolated = 2.0 * out.fine - out.coarse;
  return out;
}

}  // namespace mitk
