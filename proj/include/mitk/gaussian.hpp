#pragma once

// Mutual information between a finite-support signal S and the output of an
// additive Gaussian channel X(t) = sqrt(t) f(S) + W, W ~ N(0, I_d).
//
// With x = g(s) + w and g = sqrt(t) f,
//   log p(x|s) / p(x) = -log sum_{s'} P(s') exp(-<g(s)-g(s'), w> - |g(s)-g(s')|^2 / 2),
// so I(S;X) is a finite mixture of standard-normal expectations. Only the
// affine span of {g(s)} matters; the noise orthogonal to it is independent of
// everything else and is projected away before integrating.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mitk/discrete.hpp"
#include "mitk/errors.hpp"
#include "mitk/gauss_hermite.hpp"
#include "mitk/numeric.hpp"

namespace mitk {

/// Signal embedding f: S -> R^d, one row per signal symbol.
class GaussianChannelSpec {
 public:
  explicit GaussianChannelSpec(Eigen::MatrixXd f) : f_(std::move(f)) {
    if (f_.rows() < 1 || f_.cols() < 1)
      throw InvalidArgument("GaussianChannelSpec: need at least one symbol and d >= 1");
    if (!f_.allFinite()) throw InvalidArgument("GaussianChannelSpec: entries must be finite");
  }

  static GaussianChannelSpec scalar(const std::vector<double>& values) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t s = 0; s < values.size(); ++s) f(static_cast<Eigen::Index>(s), 0) = values[s];
    return GaussianChannelSpec(std::move(f));
  }

  const Eigen::MatrixXd& f() const { return f_; }
  std::size_t dim() const { return static_cast<std::size_t>(f_.cols()); }
  std::size_t alphabet() const { return static_cast<std::size_t>(f_.rows()); }

 private:
  Eigen::MatrixXd f_;
};

/// f stacked with itself: observing X and an independent copy X'.
inline GaussianChannelSpec two_copy(const GaussianChannelSpec& spec) {
  Eigen::MatrixXd g(spec.f().rows(), 2 * spec.f().cols());
  g << spec.f(), spec.f();
  return GaussianChannelSpec(std::move(g));
}

enum class Method { quadrature, montecarlo };

struct Budget {
  double tolerance = 1e-12;     // quadrature: stop when refinement changes less than this
  std::size_t max_nodes = 512;  // quadrature: nodes per dimension
  std::size_t samples = 0;      // Monte Carlo sample count
  std::optional<std::uint64_t> seed;
  double error_cap = std::numeric_limits<double>::infinity();
};

/// value in nats; error is a quadrature refinement delta or an MC standard error.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

namespace gaussian_detail {

inline constexpr std::size_t kMonteCarloChunk = std::size_t{1} << 16;
inline constexpr std::size_t kFirstQuadratureLevel = 16;

// Coordinates of the points g(s) in an orthonormal basis of their affine span.
inline Eigen::MatrixXd reduce_to_span(const Eigen::MatrixXd& g) {
  Eigen::MatrixXd centered = g.rowwise() - g.row(0);
  if (centered.cols() == 0 || centered.norm() == 0.0) return Eigen::MatrixXd(g.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > 1e-13 * sv[0]) ++rank;
  return centered * svd.matrixV().leftCols(rank);
}

// -log sum_{s'} P(s') exp(-<d, w> - |d|^2/2), d = y(s) - y(s').
class Integrand {
 public:
  Integrand(std::span<const double> probs, Eigen::MatrixXd y) : y_(std::move(y)) {
    for (std::size_t s = 0; s < probs.size(); ++s) {
      if (probs[s] > 0.0) {
        support_.push_back(static_cast<Eigen::Index>(s));
        weight_.push_back(probs[s]);
        log_weight_.push_back(std::log(probs[s]));
      }
    }
    exps_.resize(support_.size());
  }

  std::size_t support() const { return support_.size(); }
  Eigen::Index dim() const { return y_.cols(); }
  double weight(std::size_t k) const { return weight_[k]; }

  double operator()(std::size_t k, const Eigen::VectorXd& w) {
    const auto row = y_.row(support_[k]);
    for (std::size_t j = 0; j < support_.size(); ++j) {
      const Eigen::RowVectorXd d = row - y_.row(support_[j]);
      exps_[j] = log_weight_[j] - d.dot(w) - 0.5 * d.squaredNorm();
    }
    return -log_sum_exp(exps_);
  }

 private:
  Eigen::MatrixXd y_;
  std::vector<Eigen::Index> support_;
  std::vector<double> weight_;
  std::vector<double> log_weight_;
  std::vector<double> exps_;
};

inline std::pair<double, double> quadrature_level(Integrand& h, std::size_t n) {
  const GaussHermiteRule& rule = gauss_hermite(n);
  CompensatedSum<double> acc;
  double abs_sum = 0.0;
  Eigen::VectorXd w(h.dim());
  for (std::size_t k = 0; k < h.support(); ++k) {
    if (h.dim() == 1) {
      for (std::size_t a = 0; a < n; ++a) {
        w[0] = rule.nodes[a];
        const double term = h.weight(k) * rule.weights[a] * h(k, w);
        acc += term;
        abs_sum += std::abs(term);
      }
    } else {
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          w[0] = rule.nodes[a];
          w[1] = rule.nodes[b];
          const double term = h.weight(k) * rule.weights[a] * rule.weights[b] * h(k, w);
          acc += term;
          abs_sum += std::abs(term);
        }
      }
    }
  }
  return {acc.value(), abs_sum};
}

inline Estimate integrate_quadrature(Integrand& h, const Budget& budget) {
  if (h.dim() > 2)
    throw InvalidArgument("gaussian_mi: quadrature needs an effective dimension <= 2");
  const std::size_t cap = std::max(budget.max_nodes, 2 * kFirstQuadratureLevel);
  auto [prev, abs_prev] = quadrature_level(h, kFirstQuadratureLevel);
  Estimate est{prev, std::numeric_limits<double>::infinity()};
  for (std::size_t n = 2 * kFirstQuadratureLevel; n <= cap; n *= 2) {
    auto [cur, abs_cur] = quadrature_level(h, n);
    const double roundoff = 100.0 * std::numeric_limits<double>::epsilon() * abs_cur;
    est = {cur, std::abs(cur - prev) + roundoff};
    if (std::abs(cur - prev) <= budget.tolerance) break;
    prev = cur;
  }
  return est;
}

inline Estimate integrate_monte_carlo(Integrand& h, std::span<const double> probs,
                                      const Budget& budget) {
  if (!budget.seed) throw InvalidArgument("gaussian_mi: Monte Carlo requires an explicit seed");
  if (budget.samples < 2) throw InvalidArgument("gaussian_mi: Monte Carlo requires >= 2 samples");
  // Map support index -> probability for inverse-CDF sampling of S.
  std::vector<double> cdf;
  double run = 0.0;
  for (double p : probs)
    if (p > 0.0) cdf.push_back(run += p);
  cdf.back() = 1.0;

  const std::uint64_t seed = *budget.seed;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  Eigen::VectorXd w(h.dim());
  for (std::size_t chunk = 0; count < budget.samples; ++chunk) {
    // Each chunk owns a generator seeded from (seed, chunk): results do not
    // depend on how chunks are scheduled.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = std::min(kMonteCarloChunk, budget.samples - count);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = unif(rng);
      const auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = normal(rng);
      const double x = h(std::min(k, cdf.size() - 1), w);
      ++count;
      const double delta = x - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (x - mean);
    }
  }
  const double var = m2 / static_cast<double>(count - 1);
  return {mean, std::sqrt(var / static_cast<double>(count))};
}

}  // namespace gaussian_detail

/// I(S; g(S) + W) for an already scaled embedding g (rows = signal symbols).
inline Estimate embedding_mi(const SignalDist<>& signal, const Eigen::MatrixXd& g, Method method,
                             const Budget& budget) {
  if (static_cast<std::size_t>(g.rows()) != signal.size())
    throw AlphabetMismatch("gaussian_mi: embedding rows differ from signal alphabet size");
  Eigen::MatrixXd y = gaussian_detail::reduce_to_span(g);
  Estimate est{0.0, 0.0};
  if (y.cols() > 0) {
    gaussian_detail::Integrand h(signal.probs(), std::move(y));
    est = method == Method::quadrature
              ? gaussian_detail::integrate_quadrature(h, budget)
              : gaussian_detail::integrate_monte_carlo(h, signal.probs(), budget);
  } else if (method == Method::montecarlo && !budget.seed) {
    throw InvalidArgument("gaussian_mi: Monte Carlo requires an explicit seed");
  }
  if (est.error > budget.error_cap)
    throw BudgetTooSmall("gaussian_mi: error estimate exceeds the caller's cap");
  if (method == Method::quadrature) est.value = std::clamp(est.value, 0.0, entropy(signal));
  return est;
}

/// I(S; sqrt(t) f(S) + W).
inline Estimate gaussian_mi(const SignalDist<>& signal, const GaussianChannelSpec& spec, double t,
                            Method method, const Budget& budget) {
  if (!(t >= 0.0)) throw DomainError("gaussian_mi: t must be >= 0");
  if (t == 0.0) return {0.0, 0.0};
  return embedding_mi(signal, std::sqrt(t) * spec.f(), method, budget);
}

/// I(S; (sqrt(tA) fA(S) + WA, sqrt(tB) fB(S) + WB)) with independent noises.
inline Estimate joint_gaussian_mi(const SignalDist<>& signal, const GaussianChannelSpec& a,
                                  const GaussianChannelSpec& b, double t_a, double t_b,
                                  Method method, const Budget& budget) {
  if (!(t_a >= 0.0 && t_b >= 0.0)) throw DomainError("joint_gaussian_mi: t must be >= 0");
  if (a.alphabet() != b.alphabet())
    throw AlphabetMismatch("joint_gaussian_mi: specs over different alphabets");
  if (t_a == 0.0 && t_b == 0.0) return {0.0, 0.0};
  Eigen::MatrixXd g(a.f().rows(), a.f().cols() + b.f().cols());
  g << std::sqrt(t_a) * a.f(), std::sqrt(t_b) * b.f();
  return embedding_mi(signal, g, method, budget);
}

struct Q1Margin {
  double margin = 0.0;  // 2 I(1,1) - I(2,0) - I(0,2); >= 0 for Gaussian channels
  double error = 0.0;   // combined error estimate of the three terms
};

inline Q1Margin q1_gaussian_check(const SignalDist<>& signal, const GaussianChannelSpec& a,
                                  const GaussianChannelSpec& b, Method method,
                                  const Budget& budget) {
  const Estimate i11 = joint_gaussian_mi(signal, a, b, 1.0, 1.0, method, budget);
  const Estimate i20 = joint_gaussian_mi(signal, a, b, 2.0, 0.0, method, budget);
  const Estimate i02 = joint_gaussian_mi(signal, a, b, 0.0, 2.0, method, budget);
  return {2.0 * i11.value - i20.value - i02.value, 2.0 * i11.error + i20.error + i02.error};
}

/// K[i][j] = |E[fbar_i(S) fbar_j(S)^T]|_F^2, fbar the centered embedding.
struct CenteredGram {
  Eigen::MatrixXd k;
  double min_eigenvalue = 0.0;
  double trace = 0.0;

  bool positive_semidefinite(double rel_tol = 1e-10) const {
    return min_eigenvalue >= -rel_tol * std::max(trace, 0.0);
  }
};

inline Eigen::MatrixXd centered_embedding(const SignalDist<>& signal,
                                          const GaussianChannelSpec& spec) {
  if (spec.alphabet() != signal.size())
    throw AlphabetMismatch("centered_gram: spec alphabet differs from signal");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(spec.f().cols());
  for (std::size_t s = 0; s < signal.size(); ++s)
    mean += signal[s] * spec.f().row(static_cast<Eigen::Index>(s));
  return spec.f().rowwise() - mean;
}

inline CenteredGram centered_gram(const SignalDist<>& signal,
                                  const std::vector<GaussianChannelSpec>& specs) {
  const auto n = static_cast<Eigen::Index>(specs.size());
  std::vector<Eigen::MatrixXd> bar;
  for (const auto& spec : specs) bar.push_back(centered_embedding(signal, spec));
  Eigen::VectorXd p(static_cast<Eigen::Index>(signal.size()));
  for (std::size_t s = 0; s < signal.size(); ++s) p[static_cast<Eigen::Index>(s)] = signal[s];

  CenteredGram gram;
  gram.k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const Eigen::MatrixXd cross = bar[i].transpose() * p.asDiagonal() * bar[j];
      gram.k(i, j) = gram.k(j, i) = cross.squaredNorm();
    }
  }
  gram.trace = gram.k.trace();
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram.k, Eigen::EigenvaluesOnly);
    gram.min_eigenvalue = solver.eigenvalues().minCoeff();
  }
  return gram;
}

struct PsdLimitRow {
  std::size_t i = 0;
  std::size_t j = 0;
  double t = 0.0;
  double scaled_mi = 0.0;  // t^-2 I(X_i(t); X'_j(t))
  double error = 0.0;      // t^-2 times the combined MI error
  double gram = 0.0;       // K[i][j]
};

struct PsdLimitPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double gram = 0.0;
  double limit = 0.0;        // extrapolated lim t^-2 I(X_i;X'_j)
  double c_star = 0.0;       // limit / K[i][j], NaN when K[i][j] = 0
  double uncertainty = 0.0;  // spread of the last two extrapolants, relative to K when defined
};

struct PsdLimitReport {
  CenteredGram gram;
  std::vector<PsdLimitRow> rows;
  std::vector<PsdLimitPair> pairs;
};

/// Linear-in-t Richardson extrapolation of r(t) to t = 0 over consecutive
/// pairs; returns (last extrapolant, spread of the last two).
inline std::pair<double, double> richardson_to_zero(const std::vector<double>& t,
                                                    const std::vector<double>& r) {
  if (t.size() == 1) return {r[0], std::numeric_limits<double>::infinity()};
  std::vector<double> ext;
  for (std::size_t k = 0; k + 1 < t.size(); ++k)
    ext.push_back((t[k] * r[k + 1] - t[k + 1] * r[k]) / (t[k] - t[k + 1]));
  const double last = ext.back();
  const double spread = ext.size() > 1 ? std::abs(last - ext[ext.size() - 2]) : std::abs(last - r.back());
  return {last, spread};
}

/// t^-2 I(X_i(t); X'_j(t)) along a decreasing t grid, via
///   I(X_i;X'_j) = I(S;X_i) + I(S;X_j) - I(S;(X_i,X'_j)),
/// compared with the centered Gram matrix.
inline PsdLimitReport psd_limit_check(const SignalDist<>& signal,
                                      const std::vector<GaussianChannelSpec>& specs,
                                      const std::vector<double>& t_list, Method method,
                                      const Budget& budget) {
  if (t_list.empty()) throw InvalidArgument("psd_limit_check: empty t grid");
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    if (!(t_list[k] > 0.0)) throw InvalidArgument("psd_limit_check: t values must be > 0");
    if (k > 0 && !(t_list[k] < t_list[k - 1]))
      throw InvalidArgument("psd_limit_check: t grid must be strictly decreasing");
  }
  PsdLimitReport report;
  report.gram = centered_gram(signal, specs);
  std::vector<std::vector<Estimate>> single(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (double t : t_list) single[i].push_back(gaussian_mi(signal, specs[i], t, method, budget));

  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = i; j < specs.size(); ++j) {
      const double kij = report.gram.k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      std::vector<double> scaled;
      for (std::size_t k = 0; k < t_list.size(); ++k) {
        const double t = t_list[k];
        const Estimate joint = joint_gaussian_mi(signal, specs[i], specs[j], t, t, method, budget);
        const double mi = single[i][k].value + single[j][k].value - joint.value;
        const double err = single[i][k].error + single[j][k].error + joint.error;
        report.rows.push_back({i, j, t, mi / (t * t), err / (t * t), kij});
        scaled.push_back(mi / (t * t));
      }
      auto [limit, spread] = richardson_to_zero(t_list, scaled);
      PsdLimitPair pair{i, j, kij, limit, std::numeric_limits<double>::quiet_NaN(), spread};
      if (kij > 1e-12 * std::max(report.gram.trace, 1e-300)) {
        pair.c_star = limit / kij;
        pair.uncertainty = spread / kij;
      }
      report.pairs.push_back(pair);
    }
  }
  return report;
}

struct DerivativeCheck {
  double numeric = 0.0;   // Richardson one-sided derivative of I(S;X(t)) at 0+
  double analytic = 0.0;  // (1/2) E|fbar(S)|^2
};

inline constexpr double kImmseStep = 1e-3;

inline DerivativeCheck immse_derivative_check(const SignalDist<>& signal,
                                              const GaussianChannelSpec& spec, Method method,
                                              const Budget& budget, double h = kImmseStep) {
  const Estimate i1 = gaussian_mi(signal, spec, h, method, budget);
  const Estimate i2 = gaussian_mi(signal, spec, 2.0 * h, method, budget);
  DerivativeCheck out;
  // I(0) = 0, so I(h)/h = I'(0) + h I''(0)/2 + ...; eliminate the O(h) term.
  out.numeric = 2.0 * i1.value / h - i2.value / (2.0 * h);
  const Eigen::MatrixXd bar = centered_embedding(signal, spec);
  for (std::size_t s = 0; s < signal.size(); ++s)
    out.analytic += 0.5 * signal[s] * bar.row(static_cast<Eigen::Index>(s)).squaredNorm();
  return out;
}

}  // namespace mitk
