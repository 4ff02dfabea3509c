#pragma once

// Named self-checks over every module. A check passes when
// margin >= -tolerance; margins are signed so that larger is safer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mitk/counterexample.hpp"
#include "mitk/discrete.hpp"
#include "mitk/errors.hpp"
#include "mitk/gaussian.hpp"
#include "mitk/random.hpp"
#include "mitk/sbm.hpp"

namespace mitk {

struct CheckResult {
  std::string name;
  bool passed = false;
  double margin = 0.0;
  double tolerance = 0.0;
};

struct VerifyOptions {
  std::vector<std::string> only;  // empty: run everything
  bool flip_j_sign = false;       // mutation test for the limit-combination check
  std::uint64_t seed = 20240917;
};

namespace verify_detail {

inline CheckResult make(std::string name, double margin, double tolerance) {
  return {std::move(name), margin >= -tolerance, margin, tolerance};
}

// max residual of the identity I(S;(X,X')) = I(S;X) + I(S;X') - I(X;X').
inline CheckResult lemma(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t ns = sampling::random_size(rng, 2, 4);
    const auto signal = sampling::random_signal(rng, ns);
    const auto p1 = sampling::random_channel(rng, ns, sampling::random_size(rng, 2, 4));
    const auto p2 = sampling::random_channel(rng, ns, sampling::random_size(rng, 2, 4));
    worst = std::max(worst, gap_report(signal, p1, p2).identity_residual);
  }
  return make("lemma", -worst, 1e-10);
}

inline CheckResult g_bound(const VerifyOptions&) {
  double margin = std::numeric_limits<double>::infinity();
  constexpr int kPoints = 10000;
  for (int k = 0; k < kPoints; ++k) {
    const double t = static_cast<double>(k) / (kPoints - 1);
    margin = std::min(margin, g_function(t) - t * t * t / 6.0);
  }
  margin = std::min(margin, -std::abs(g_function(1.0) - (1.0 - std::log(2.0))));
  margin = std::min(margin, -std::abs(g_function(0.0)));
  return make("g-bound", margin, 1e-12);
}

// Second differences of I_N on an 8x8 grid for random (p0, p1, N), plus the
// sign of the Hessian entries at a few interior points.
inline CheckResult nonpositivity(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed + 1);
  std::uniform_real_distribution<double> rate(0.0, 4.0);
  std::uniform_int_distribution<std::int64_t> size(10, 200);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 10; ++k) {
    const SbmParams p{rate(rng), rate(rng), size(rng), 0.0, 0.0};
    const BlockMiTable in(p.p0, p.p1, p.n, 9, 9);
    for (std::int64_t a = 0; a < 8; ++a) {
      for (std::int64_t b = 0; b < 8; ++b) {
        worst = std::max({worst, in(a + 2, b) - 2.0 * in(a + 1, b) + in(a, b),
                          in(a, b + 2) - 2.0 * in(a, b + 1) + in(a, b),
                          in(a + 1, b + 1) - in(a + 1, b) - in(a, b + 1) + in(a, b)});
      }
    }
  }
  for (double t : {0.0, 0.05, 0.1}) {
    const SbmParams p{3.0, 1.0, 100, t, t};
    const HessianEntries h = hessian_entries(p);
    worst = std::max(worst, std::max({h.h11, h.h12, h.h22}) - h.slack);
  }
  return make("nonpositivity", -worst, 1e-12);
}

inline CheckResult psd(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed + 2);
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    const std::size_t ns = sampling::random_size(rng, 2, 4);
    const auto signal = sampling::random_signal(rng, ns);
    std::vector<GaussianChannelSpec> specs;
    const std::size_t n = sampling::random_size(rng, 1, 4);
    for (std::size_t i = 0; i < n; ++i)
      specs.push_back(sampling::random_spec(rng, ns, sampling::random_size(rng, 1, 3)));
    const CenteredGram g = centered_gram(signal, specs);
    if (g.trace > 0.0) margin = std::min(margin, g.min_eigenvalue / g.trace);
  }
  return make("psd", margin, 1e-10);
}

// 2 I(1,1) - I(2,0) - I(0,2) >= -3 sigma for random scalar pairs.
inline CheckResult q1_gaussian(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed + 3);
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const std::size_t ns = sampling::random_size(rng, 2, 3);
    const auto signal = sampling::random_signal(rng, ns);
    const auto a = sampling::random_spec(rng, ns, 1);
    const auto b = sampling::random_spec(rng, ns, 1);
    const Q1Margin m = q1_gaussian_check(signal, a, b, Method::quadrature, Budget{});
    margin = std::min(margin, m.margin + 3.0 * m.error);
  }
  return make("q1-gaussian", margin, 0.0);
}

// h11 against a central second difference of the Poissonized MI in t1.
inline CheckResult hessian_consistency(const VerifyOptions&) {
  const SbmParams p{3.0, 1.0, 100, 0.1, 0.1};
  const HessianEntries h = hessian_entries(p);
  const double step = 1e-3 / static_cast<double>(p.n);
  auto at = [&](double t1) {
    SbmParams q = p;
    q.t1 = t1;
    return poissonized_mi(q);
  };
  const SeriesValue lo = at(p.t1 - step), mid = at(p.t1), hi = at(p.t1 + step);
  const double fd = (hi.value - 2.0 * mid.value + lo.value) / (step * step);
  const double bound = std::max({lo.truncation_bound, mid.truncation_bound, hi.truncation_bound});
  const double n2 = static_cast<double>(p.n * p.n);
  const double tol = std::max(1e-6 * n2, 10.0 * bound / (step * step));
  return make("hessian-consistency", -std::abs(h.h11 - fd), tol);
}

// Extrapolated one-sided differences of phi against the closed form, and the
// closed form against the sextic lower bound, over five rate pairs.
inline CheckResult limit_combination(const VerifyOptions& opt) {
  static const std::pair<double, double> kPairs[] = {
      {3.0, 1.0}, {0.8, 0.2}, {1.0, 0.0}, {2.0, 0.5}, {0.5, 1.5}};
  double worst = 0.0;
  for (auto [p0, p1] : kPairs) {
    const double closed = limit_hessian_combination(p0, p1);
    double fd = 0.0;
    if (opt.flip_j_sign) {
      auto flipped = [](double s, std::int64_t l1, std::int64_t l2, double a, double b) {
        return -j_function(s, l1, l2, a, b);
      };
      fd = phi_hessian_combination_fd(p0, p1, kPhiFdStep, TruncationPolicy{}, flipped).extrapolated;
    } else {
      fd = phi_hessian_combination_fd(p0, p1).extrapolated;
    }
    worst = std::max(worst, std::abs(fd - closed) / closed);
    // Bound violations count as a full failure of the relative criterion.
    if (closed < sextic_bound(p0, p1)) worst = std::max(worst, 1.0);
  }
  return make("limit-combination", -worst, 0.01);
}

}  // namespace verify_detail

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "lemma", "g-bound", "nonpositivity", "psd", "q1-gaussian", "hessian-consistency",
      "limit-combination"};
  return names;
}

inline std::vector<CheckResult> run_checks(const VerifyOptions& opt = {}) {
  using Fn = std::function<CheckResult(const VerifyOptions&)>;
  const std::vector<std::pair<std::string, Fn>> all = {
      {"lemma", verify_detail::lemma},
      {"g-bound", verify_detail::g_bound},
      {"nonpositivity", verify_detail::nonpositivity},
      {"psd", verify_detail::psd},
      {"q1-gaussian", verify_detail::q1_gaussian},
      {"hessian-consistency", verify_detail::hessian_consistency},
      {"limit-combination", verify_detail::limit_combination}};
  for (const auto& name : opt.only) {
    if (std::find(check_names().begin(), check_names().end(), name) == check_names().end())
      throw InvalidArgument("unknown check: " + name);
  }
  std::vector<CheckResult> out;
  for (const auto& [name, fn] : all) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), name) == opt.only.end())
      continue;
    out.push_back(fn(opt));
  }
  return out;
}

}  // namespace mitk
