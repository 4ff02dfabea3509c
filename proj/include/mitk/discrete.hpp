#pragma once

// Exact probability and information computations over finite alphabets.
// Every quantity downstream reduces to operations on a dense JointTable.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mitk/double_double.hpp"
#include "mitk/errors.hpp"
#include "mitk/numeric.hpp"

namespace mitk {

using Axes = std::vector<std::size_t>;

inline constexpr double kMassTolerance = 1e-12;

namespace detail {

template <Real T>
void check_probability_vector(std::span<const T> p, const char* what) {
  if (p.empty()) throw InvalidDistribution(std::string(what) + ": empty alphabet");
  CompensatedSum<T> total;
  for (const T& x : p) {
    const double v = to_double(x);
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidDistribution(std::string(what) + ": entries must be finite and >= 0");
    total += x;
  }
  if (std::abs(to_double(total.value()) - 1.0) > kMassTolerance)
    throw InvalidDistribution(std::string(what) + ": entries must sum to 1");
}

}  // namespace detail

/// Law of the signal S over a finite alphabet {0, ..., n-1}.
template <Real T = double>
class SignalDist {
 public:
  explicit SignalDist(std::vector<T> probs) : probs_(std::move(probs)) {
    detail::check_probability_vector<T>(probs_, "SignalDist");
  }

  static SignalDist uniform(std::size_t n) {
    if (n == 0) throw InvalidDistribution("SignalDist: empty alphabet");
    return SignalDist(std::vector<T>(n, T(1.0) / T(static_cast<double>(n))));
  }
  static SignalDist point_mass(std::size_t n, std::size_t at) {
    if (at >= n) throw InvalidArgument("SignalDist::point_mass: index outside alphabet");
    std::vector<T> p(n, T(0.0));
    p[at] = T(1.0);
    return SignalDist(std::move(p));
  }
  /// Ber(p) on {0, 1}: P(S = 1) = p.
  static SignalDist bernoulli(double p) {
    return SignalDist(std::vector<T>{T(1.0) - T(p), T(p)});
  }

  std::size_t size() const { return probs_.size(); }
  const T& operator[](std::size_t s) const { return probs_[s]; }
  std::span<const T> probs() const { return probs_; }

  template <Real U>
  SignalDist<U> cast() const {
    std::vector<U> out;
    out.reserve(probs_.size());
    for (const T& x : probs_) out.emplace_back(U(to_double(x)));
    return SignalDist<U>(std::move(out));
  }

 private:
  std::vector<T> probs_;
};

/// Row-stochastic conditional law P(y | s) over a shared finite output alphabet.
template <Real T = double>
class DiscreteChannel {
 public:
  explicit DiscreteChannel(const std::vector<std::vector<T>>& rows) {
    if (rows.empty()) throw InvalidDistribution("DiscreteChannel: no input symbols");
    outputs_ = rows.front().size();
    for (const auto& row : rows) {
      if (row.size() != outputs_)
        throw InvalidDistribution("DiscreteChannel: rows must share one output alphabet");
      detail::check_probability_vector<T>(row, "DiscreteChannel row");
      cells_.insert(cells_.end(), row.begin(), row.end());
    }
    inputs_ = rows.size();
  }

  std::size_t inputs() const { return inputs_; }
  std::size_t outputs() const { return outputs_; }
  const T& operator()(std::size_t s, std::size_t y) const { return cells_[s * outputs_ + y]; }
  std::span<const T> row(std::size_t s) const {
    return std::span<const T>(cells_).subspan(s * outputs_, outputs_);
  }

  template <Real U>
  DiscreteChannel<U> cast() const {
    std::vector<std::vector<U>> rows(inputs_);
    for (std::size_t s = 0; s < inputs_; ++s)
      for (std::size_t y = 0; y < outputs_; ++y) rows[s].emplace_back(U(to_double((*this)(s, y))));
    return DiscreteChannel<U>(rows);
  }

 private:
  std::size_t inputs_ = 0;
  std::size_t outputs_ = 0;
  std::vector<T> cells_;
};

/// Dense joint law over a product of finite alphabets, last axis fastest.
template <Real T = double>
class JointTable {
 public:
  JointTable(std::vector<std::size_t> shape, std::vector<T> mass)
      : shape_(std::move(shape)), mass_(std::move(mass)) {
    if (shape_.empty()) throw InvalidDistribution("JointTable: needs at least one axis");
    std::size_t cells = 1;
    for (std::size_t n : shape_) {
      if (n == 0) throw InvalidDistribution("JointTable: empty axis");
      cells *= n;
    }
    if (cells != mass_.size()) throw InvalidDistribution("JointTable: mass size does not match shape");
    detail::check_probability_vector<T>(mass_, "JointTable");
  }

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return mass_.size(); }
  std::span<const T> mass() const { return mass_; }

  const T& at(std::span<const std::size_t> index) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) flat = flat * shape_[k] + index[k];
    return mass_[flat];
  }

  /// For every cell, its flat index within the sub-product over `axes`
  /// (in the order given). Also returns the size of that sub-product.
  std::pair<std::vector<std::size_t>, std::size_t> project(const Axes& axes) const {
    std::vector<std::size_t> stride(shape_.size(), 0);
    std::size_t extent = 1;
    for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
      stride[*it] = extent;
      extent *= shape_[*it];
    }
    std::vector<std::size_t> out(mass_.size());
    std::vector<std::size_t> idx(shape_.size(), 0);
    for (std::size_t cell = 0; cell < mass_.size(); ++cell) {
      std::size_t flat = 0;
      for (std::size_t k = 0; k < shape_.size(); ++k) flat += idx[k] * stride[k];
      out[cell] = flat;
      for (std::size_t k = shape_.size(); k-- > 0;) {
        if (++idx[k] < shape_[k]) break;
        idx[k] = 0;
      }
    }
    return {std::move(out), extent};
  }

  JointTable marginal(const Axes& axes) const {
    check_axes(axes);
    auto [proj, extent] = project(axes);
    std::vector<CompensatedSum<T>> acc(extent);
    for (std::size_t cell = 0; cell < mass_.size(); ++cell) acc[proj[cell]] += mass_[cell];
    std::vector<std::size_t> shape;
    for (std::size_t a : axes) shape.push_back(shape_[a]);
    std::vector<T> mass;
    mass.reserve(extent);
    for (const auto& a : acc) mass.push_back(a.value());
    return JointTable(std::move(shape), std::move(mass));
  }

  void check_axes(const Axes& axes) const {
    for (std::size_t a : axes)
      if (a >= shape_.size()) throw InvalidArgument("JointTable: axis index out of range");
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> mass_;
};

/// -sum p log p in nats, with 0 log 0 = 0.
template <Real T>
T entropy(const SignalDist<T>& dist) {
  using std::log;
  CompensatedSum<T> h;
  for (const T& p : dist.probs())
    if (p > T(0.0)) h += -(p * log(p));
  return h.value();
}

/// sum_{a,b} p(a,b) log(p(a,b) / (pa(a) pb(b))) over a row-major rows x cols
/// matrix with caller-supplied marginals. Ratios near 1 go through log1p.
template <Real T>
T information_sum(std::span<const T> joint, std::size_t rows, std::size_t cols,
                  std::span<const T> pa, std::span<const T> pb) {
  using std::abs;
  using std::log;
  using std::log1p;
  CompensatedSum<T> acc;
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) {
      const T& p = joint[a * cols + b];
      if (!(p > T(0.0))) continue;
      const T q = pa[a] * pb[b];
      if (!(q > T(0.0)))
        throw ZeroMarginal("information_sum: positive joint mass over a zero marginal");
      T diff;
      if constexpr (std::is_same_v<T, double>)
        diff = std::fma(-pa[a], pb[b], p);
      else
        diff = p - q;
      const T x = diff / q;
      acc += (abs(x) < T(0.5)) ? p * log1p(x) : p * log(p / q);
    }
  }
  return acc.value();
}

namespace detail {

inline void check_partition(std::size_t rank, std::initializer_list<const Axes*> groups) {
  std::vector<int> seen(rank, 0);
  for (const Axes* g : groups) {
    for (std::size_t a : *g) {
      if (a >= rank) throw InvalidArgument("axis index out of range");
      if (seen[a]++) throw InvalidArgument("axis sets must be disjoint");
    }
  }
  for (int s : seen)
    if (s == 0) throw InvalidArgument("axis sets must cover every axis of the table");
}

}  // namespace detail

/// I(A;B) in nats for disjoint axis sets A, B covering all axes.
template <Real T>
T mutual_information(const JointTable<T>& joint, const Axes& axes_a, const Axes& axes_b) {
  detail::check_partition(joint.rank(), {&axes_a, &axes_b});
  auto [pa_idx, na] = joint.project(axes_a);
  auto [pb_idx, nb] = joint.project(axes_b);
  std::vector<T> matrix(na * nb, T(0.0));
  std::vector<CompensatedSum<T>> sa(na), sb(nb);
  const auto mass = joint.mass();
  for (std::size_t cell = 0; cell < mass.size(); ++cell) {
    matrix[pa_idx[cell] * nb + pb_idx[cell]] = mass[cell];
    sa[pa_idx[cell]] += mass[cell];
    sb[pb_idx[cell]] += mass[cell];
  }
  std::vector<T> pa(na), pb(nb);
  for (std::size_t i = 0; i < na; ++i) pa[i] = sa[i].value();
  for (std::size_t j = 0; j < nb; ++j) pb[j] = sb[j].value();
  const T value = information_sum<T>(matrix, na, nb, pa, pb);
  return value > T(0.0) ? value : T(0.0);
}

/// I(A;B | C) = sum_c p(c) I(A;B | C = c), computed slice by slice (not via
/// the chain rule, so the chain rule stays an independent check).
template <Real T>
T conditional_mi(const JointTable<T>& joint, const Axes& axes_a, const Axes& axes_b,
                 const Axes& axes_c) {
  detail::check_partition(joint.rank(), {&axes_a, &axes_b, &axes_c});
  auto [ia, na] = joint.project(axes_a);
  auto [ib, nb] = joint.project(axes_b);
  auto [ic, nc] = joint.project(axes_c);
  std::vector<T> cube(nc * na * nb, T(0.0));
  const auto mass = joint.mass();
  for (std::size_t cell = 0; cell < mass.size(); ++cell)
    cube[(ic[cell] * na + ia[cell]) * nb + ib[cell]] = mass[cell];

  CompensatedSum<T> acc;
  std::vector<T> slice(na * nb), pa(na), pb(nb);
  for (std::size_t c = 0; c < nc; ++c) {
    CompensatedSum<T> pc_sum;
    for (std::size_t k = 0; k < na * nb; ++k) pc_sum += cube[c * na * nb + k];
    const T pc = pc_sum.value();
    if (!(pc > T(0.0))) continue;
    std::fill(pa.begin(), pa.end(), T(0.0));
    std::fill(pb.begin(), pb.end(), T(0.0));
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t b = 0; b < nb; ++b) {
        const T v = cube[(c * na + a) * nb + b] / pc;
        slice[a * nb + b] = v;
        pa[a] += v;
        pb[b] += v;
      }
    }
    acc += pc * information_sum<T>(slice, na, nb, pa, pb);
  }
  const T value = acc.value();
  return value > T(0.0) ? value : T(0.0);
}

/// Joint law of (S, Y_1, ..., Y_k) with the Y_i conditionally independent
/// given S and Y_i ~ channels[i](. | S). Axis 0 is S.
template <Real T>
JointTable<T> observe_through(const SignalDist<T>& signal,
                              const std::vector<DiscreteChannel<T>>& channels) {
  const std::size_t ns = signal.size();
  std::vector<std::size_t> shape{ns};
  std::size_t per_signal = 1;
  for (const auto& ch : channels) {
    if (ch.inputs() != ns)
      throw AlphabetMismatch("observe_through: channel row count differs from signal alphabet size");
    shape.push_back(ch.outputs());
    per_signal *= ch.outputs();
  }
  std::vector<T> mass(ns * per_signal);
  std::vector<std::size_t> y(channels.size(), 0);
  for (std::size_t s = 0; s < ns; ++s) {
    std::fill(y.begin(), y.end(), 0);
    for (std::size_t cell = 0; cell < per_signal; ++cell) {
      T p = signal[s];
      for (std::size_t i = 0; i < channels.size(); ++i) p *= channels[i](s, y[i]);
      mass[s * per_signal + cell] = p;
      for (std::size_t i = channels.size(); i-- > 0;) {
        if (++y[i] < channels[i].outputs()) break;
        y[i] = 0;
      }
    }
  }
  return JointTable<T>(std::move(shape), std::move(mass));
}

}  // namespace mitk
