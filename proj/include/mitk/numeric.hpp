#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <type_traits>

#include "mitk/double_double.hpp"

namespace mitk {

/// Scalar types the templated kernels accept.
template <class T>
concept Real = std::is_same_v<T, double> || std::is_same_v<T, DoubleDouble>;

/// Neumaier-compensated accumulator. For DoubleDouble the plain sum already
/// carries ~32 digits, so compensation is skipped.
template <Real T>
class CompensatedSum {
 public:
  void add(const T& x) {
    if constexpr (std::is_same_v<T, double>) {
      const double t = sum_ + x;
      if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
      else
        comp_ += (x - t) + sum_;
      sum_ = t;
    } else {
      sum_ += x;
    }
  }
  CompensatedSum& operator+=(const T& x) {
    add(x);
    return *this;
  }
  T value() const {
    if constexpr (std::is_same_v<T, double>)
      return sum_ + comp_;
    else
      return sum_;
  }

 private:
  T sum_ = T(0.0);
  double comp_ = 0.0;
};

/// log(exp(a) + exp(b)); either argument may be -inf.
inline double log_add_exp(double a, double b) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// log(sum_i exp(x_i)); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> x) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (x.empty()) return kNegInf;
  const double m = *std::max_element(x.begin(), x.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

/// 17 significant digits: every IEEE double round-trips through this text.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace mitk
