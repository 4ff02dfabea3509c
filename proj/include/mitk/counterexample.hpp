#pragma once

// Two-channel information gaps. With X1, X1' ~ P1(.|S) and X2, X2' ~ P2(.|S)
// conditionally independent given S, the gap
//   2 I(X1;X2) - I(X1;X1') - I(X2;X2')
// is <= 0 for Gaussian channels; positive values are counterexamples for
// general channels. Bernoulli channels with rates eps * p_s give a gap of
// order eps^2 with an explicit limit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <thread>
#include <vector>

#include "mitk/discrete.hpp"
#include "mitk/double_double.hpp"
#include "mitk/errors.hpp"
#include "mitk/numeric.hpp"

namespace mitk {

/// Rates of P1(.|s) = Ber(eps p_s) and P2(.|s) = Ber(eps q_s).
struct BernoulliPairParams {
  double p0 = 0.0;
  double p1 = 0.0;
  double q0 = 0.0;
  double q1 = 0.0;
  double epsilon = 1.0;

  /// Throws RateOutOfRange unless eps > 0 and every eps * rate is in [0, 1].
  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw RateOutOfRange("BernoulliPairParams: epsilon must be finite and > 0");
    for (double r : {p0, p1, q0, q1}) {
      if (!std::isfinite(r) || r < 0.0 || epsilon * r > 1.0)
        throw RateOutOfRange("BernoulliPairParams: eps * rate must lie in [0, 1]");
    }
  }

  /// The configuration q0 = p1, q1 = p0 used throughout the small-rate analysis.
  static BernoulliPairParams symmetric(double p0, double p1, double epsilon) {
    return {p0, p1, p1, p0, epsilon};
  }
};

/// All values in nats. delta_q2 > 0 (equivalently delta_q1 > 0) is a violation.
struct GapReport {
  double i_x1x2 = 0.0;
  double i_x1x1p = 0.0;
  double i_x2x2p = 0.0;
  double delta_q2 = 0.0;  // 2 I(X1;X2) - I(X1;X1') - I(X2;X2')
  double delta_q1 = 0.0;  // I(S;(X1,X1')) + I(S;(X2,X2')) - 2 I(S;(X1,X2))
  double identity_residual = 0.0;
};

/// Binary-output channel whose row s is Ber(rate_s), outputs labelled {0, 1}.
template <Real T = double>
DiscreteChannel<T> bernoulli_channel(double rate0, double rate1) {
  for (double r : {rate0, rate1})
    if (!(r >= 0.0 && r <= 1.0)) throw RateOutOfRange("bernoulli_channel: rate outside [0, 1]");
  return DiscreteChannel<T>({{T(1.0) - T(rate0), T(rate0)}, {T(1.0) - T(rate1), T(rate1)}});
}

/// Builds the (S, X_i, X'_j) tables and fills every GapReport field. The
/// identity residual is the largest deviation from
///   I(S;(X_i,X'_j)) = I(S;X_i) + I(S;X_j) - I(X_i;X'_j).
template <Real T>
GapReport gap_report(const SignalDist<T>& signal, const DiscreteChannel<T>& p1,
                     const DiscreteChannel<T>& p2) {
  const JointTable<T> t11 = observe_through<T>(signal, {p1, p1});
  const JointTable<T> t22 = observe_through<T>(signal, {p2, p2});
  const JointTable<T> t12 = observe_through<T>(signal, {p1, p2});

  struct Pair {
    T cross, s_joint, s_first, s_second;
  };
  auto measure = [](const JointTable<T>& t) {
    return Pair{mutual_information(t.marginal({1, 2}), {0}, {1}),
                mutual_information(t, {0}, {1, 2}),
                mutual_information(t.marginal({0, 1}), {0}, {1}),
                mutual_information(t.marginal({0, 2}), {0}, {1})};
  };
  const Pair m11 = measure(t11);
  const Pair m22 = measure(t22);
  const Pair m12 = measure(t12);

  GapReport r;
  r.i_x1x2 = to_double(m12.cross);
  r.i_x1x1p = to_double(m11.cross);
  r.i_x2x2p = to_double(m22.cross);
  r.delta_q2 = to_double(T(2.0) * m12.cross - m11.cross - m22.cross);
  r.delta_q1 = to_double(m11.s_joint + m22.s_joint - T(2.0) * m12.s_joint);
  for (const Pair* m : {&m11, &m22, &m12}) {
    const double res =
        std::abs(to_double(m->s_joint - m->s_first - m->s_second + m->cross));
    r.identity_residual = std::max(r.identity_residual, res);
  }
  return r;
}

/// gap_report for S ~ Ber(1/2) and the scaled Bernoulli pair, evaluated in T.
/// eps * rate is formed in T so the double-double path sees exact products.
template <Real T>
GapReport bernoulli_gap_in(const BernoulliPairParams& params) {
  params.validate();
  auto channel = [&](double r0, double r1) {
    const T a = T(params.epsilon) * T(r0);
    const T b = T(params.epsilon) * T(r1);
    return DiscreteChannel<T>({{T(1.0) - a, a}, {T(1.0) - b, b}});
  };
  return gap_report<T>(SignalDist<T>::bernoulli(0.5), channel(params.p0, params.p1),
                       channel(params.q0, params.q1));
}

/// Below this epsilon the Bernoulli gap is evaluated in double-double.
inline constexpr double kExtendedPrecisionEpsilon = 1e-2;

inline GapReport bernoulli_gap(const BernoulliPairParams& params) {
  if (params.epsilon < kExtendedPrecisionEpsilon) return bernoulli_gap_in<DoubleDouble>(params);
  return bernoulli_gap_in<double>(params);
}

/// g(t) = t + (1-t)/2 log(1-t) - (1+t)/2 log(1+t) on [0, 1], g(1) = 1 - log 2.
/// For t <= 1/2 the alternating logs cancel badly, so the power series
///   g(t) = sum_{k>=1} t^{2k+1} / (2k (2k+1))
/// is summed instead; every term is positive, so g(t) >= t^3/6 holds exactly.
inline double g_function(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("g_function: t must lie in [0, 1]");
  if (t == 0.0) return 0.0;
  if (t == 1.0) return 1.0 - std::log(2.0);
  if (t <= 0.5) {
    const double t2 = t * t;
    double power = t * t2;
    std::vector<double> terms;
    for (int k = 1; k < 200; ++k) {
      const double term = power / (2.0 * k * (2.0 * k + 1.0));
      terms.push_back(term);
      if (term < 1e-18 * terms.front()) break;
      power *= t2;
    }
    double sum = 0.0;
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) sum += *it;  // smallest first
    return sum;
  }
  return t + 0.5 * (1.0 - t) * std::log1p(-t) - 0.5 * (1.0 + t) * std::log1p(t);
}

/// Limit of Delta(eps)/eps^2 for the symmetric configuration q0 = p1, q1 = p0:
///   F = (p0-p1)^2 + 2 p0 p1 log(1-tau) - (p0^2+p1^2) log(1+tau),
///   tau = (p0-p1)^2 / (p0+p1)^2,
/// evaluated as F = (p0+p1)^2 g(tau).
inline double taylor_gap_closed_form(double p0, double p1) {
  if (!(p0 >= 0.0 && p1 >= 0.0) || !std::isfinite(p0) || !std::isfinite(p1))
    throw DomainError("taylor_gap_closed_form: rates must be finite and >= 0");
  if (p0 + p1 == 0.0) throw DegenerateChannel("taylor_gap_closed_form: p0 = p1 = 0");
  const double s = p0 + p1;
  const double d = p0 - p1;
  const double tau = std::min(1.0, (d * d) / (s * s));
  return s * s * g_function(tau);
}

/// The lower bound (p0-p1)^6 / (6 (p0+p1)^4); zero when p0 = p1 = 0.
inline double sextic_bound(double p0, double p1) {
  const double s = p0 + p1;
  if (s == 0.0) return 0.0;
  const double d = p0 - p1;
  const double d2 = d * d;
  return d2 * d2 * d2 / (6.0 * s * s * s * s);
}

/// Contour function (p0-p1)^6 / (p0+p1)^4 drawn over the gap heatmap.
inline double contour_value(double p0, double p1) { return 6.0 * sextic_bound(p0, p1); }

struct ConvergenceRow {
  double epsilon = 0.0;
  double scaled_gap = 0.0;  // Delta(eps) / eps^2
  double limit = 0.0;       // F(p0, p1)
  double relative_error = 0.0;
  double delta = 0.0;       // Delta(eps) itself
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// Relative error never grows by more than 10% from one epsilon to the next
  /// smaller one.
  bool converging = true;
};

inline constexpr double kMonotoneSlack = 0.10;

/// Exact Delta(eps) for the symmetric configuration at each eps, compared
/// with the closed-form limit. eps_list is processed in the given order and
/// expected to decrease.
inline ConvergenceTable taylor_convergence_check(double p0, double p1,
                                                 const std::vector<double>& eps_list) {
  if (p0 == p1) throw DegenerateChannel("taylor_convergence_check: p0 = p1 gives F = 0");
  const double limit = taylor_gap_closed_form(p0, p1);
  ConvergenceTable table;
  for (double eps : eps_list) {
    const GapReport g = bernoulli_gap(BernoulliPairParams::symmetric(p0, p1, eps));
    ConvergenceRow row;
    row.epsilon = eps;
    row.delta = g.delta_q2;
    row.scaled_gap = g.delta_q2 / (eps * eps);
    row.limit = limit;
    row.relative_error = std::abs(row.scaled_gap - limit) / std::abs(limit);
    if (!table.rows.empty() &&
        row.relative_error > (1.0 + kMonotoneSlack) * table.rows.back().relative_error)
      table.converging = false;
    table.rows.push_back(row);
  }
  return table;
}

struct TaylorITerms {
  double i1 = 0.0;
  double i2 = 0.0;
  double i3 = 0.0;
  double i4 = 0.0;
  double total = 0.0;
};

namespace detail {

// weight * log(num / den) with the 0 log(.) = 0 convention.
template <Real T>
T weighted_log(const T& weight, const T& num, const T& den) {
  using std::log;
  if (!(weight > T(0.0))) return T(0.0);
  return weight * log(num / den);
}

}  // namespace detail

/// I(X1;X2) split into its four output cells (x1, x2) = (0,0), (1,0), (0,1),
/// (1,1), each written as weight * log(ratio) in terms of the scaled rates.
template <Real T = double>
TaylorITerms taylor_i_terms(const BernoulliPairParams& prm) {
  prm.validate();
  const T e(prm.epsilon), p0(prm.p0), p1(prm.p1), q0(prm.q0), q1(prm.q1);
  const T one(1.0), two(2.0), half(0.5), quarter(0.25);
  const T a0 = one - e * p0, a1 = one - e * p1;  // P(X1 = 0 | s)
  const T b0 = one - e * q0, b1 = one - e * q1;  // P(X2 = 0 | s)

  const T i1 = detail::weighted_log<T>(half * (a0 * b0 + a1 * b1), half * a0 * b0 + half * a1 * b1,
                                       quarter * (two - e * p0 - e * p1) * (two - e * q0 - e * q1));
  const T i2 = detail::weighted_log<T>(half * e * (p0 * b0 + p1 * b1),
                                       half * e * p0 * b0 + half * e * p1 * b1,
                                       quarter * e * (p0 + p1) * (two - e * q0 - e * q1));
  const T i3 = detail::weighted_log<T>(half * e * (q0 * a0 + q1 * a1),
                                       half * e * q0 * a0 + half * e * q1 * a1,
                                       quarter * e * (two - e * p0 - e * p1) * (q0 + q1));
  const T i4 = detail::weighted_log<T>(half * e * e * (p0 * q0 + p1 * q1),
                                       half * e * e * p0 * q0 + half * e * e * p1 * q1,
                                       quarter * e * e * (p0 + p1) * (q0 + q1));
  return {to_double(i1), to_double(i2), to_double(i3), to_double(i4),
          to_double(i1 + i2 + i3 + i4)};
}

struct SweepRow {
  double p0 = 0.0;
  double p1 = 0.0;
  double epsilon = 0.0;
  double delta_q2 = 0.0;
  double contour = 0.0;
};

/// n points evenly spaced on [lo, hi] (both ends included).
inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) g[0] = lo;
  for (std::size_t i = 0; n > 1 && i < n; ++i)
    g[i] = (i + 1 == n) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

/// delta_q2 over grid_p0 x grid_p1 (row-major, p0 outer) for the symmetric
/// configuration. Cells are independent; `threads` workers fill disjoint
/// slots, so output never depends on scheduling.
inline std::vector<SweepRow> sweep_heatmap(const std::vector<double>& grid_p0,
                                           const std::vector<double>& grid_p1, double epsilon,
                                           unsigned threads = 1) {
  if (grid_p0.empty() || grid_p1.empty()) throw InvalidArgument("sweep_heatmap: empty grid");
  for (const auto* grid : {&grid_p0, &grid_p1})
    for (double p : *grid) BernoulliPairParams::symmetric(p, p, epsilon).validate();

  std::vector<SweepRow> rows(grid_p0.size() * grid_p1.size());
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double p0 = grid_p0[k / grid_p1.size()];
      const double p1 = grid_p1[k % grid_p1.size()];
      const GapReport g = bernoulli_gap(BernoulliPairParams::symmetric(p0, p1, epsilon));
      rows[k] = {p0, p1, epsilon, g.delta_q2, contour_value(p0, p1)};
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows.size())));
  if (threads == 1) {
    fill(0, rows.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (rows.size() + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(rows.size(), begin + chunk);
      if (begin < end) pool.emplace_back(fill, begin, end);
    }
  }
  return rows;
}

/// CSV with header `p0,p1,epsilon,delta_q2,contour`, 17 significant digits.
inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "p0,p1,epsilon,delta_q2,contour\n";
  for (const auto& r : rows)
    out << format_real(r.p0) << ',' << format_real(r.p1) << ',' << format_real(r.epsilon) << ','
        << format_real(r.delta_q2) << ',' << format_real(r.contour) << '\n';
}

}  // namespace mitk
