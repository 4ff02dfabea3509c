#pragma once

// Double-double arithmetic: an unevaluated sum hi + lo of two doubles with
// |lo| <= ulp(hi)/2, giving roughly 32 significant decimal digits.
// Algorithms follow the classic error-free transformations (Knuth two-sum,
// fma-based two-product) used by the QD library.

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>

namespace mitk {

class DoubleDouble {
 public:
  constexpr DoubleDouble() = default;
  constexpr DoubleDouble(double x) : hi_(x), lo_(0.0) {}  // NOLINT: implicit widening is intended
  constexpr DoubleDouble(double hi, double lo) : hi_(hi), lo_(lo) {}

  constexpr double hi() const { return hi_; }
  constexpr double lo() const { return lo_; }
  explicit constexpr operator double() const { return hi_ + lo_; }

  DoubleDouble& operator+=(const DoubleDouble& b);
  DoubleDouble& operator-=(const DoubleDouble& b);
  DoubleDouble& operator*=(const DoubleDouble& b);
  DoubleDouble& operator/=(const DoubleDouble& b);

  constexpr DoubleDouble operator-() const { return {-hi_, -lo_}; }

  friend constexpr bool operator==(const DoubleDouble& a, const DoubleDouble& b) {
    return a.hi_ == b.hi_ && a.lo_ == b.lo_;
  }
  friend constexpr std::partial_ordering operator<=>(const DoubleDouble& a,
                                                     const DoubleDouble& b) {
    if (auto c = a.hi_ <=> b.hi_; c != 0) return c;
    return a.lo_ <=> b.lo_;
  }

 private:
  double hi_ = 0.0;
  double lo_ = 0.0;
};

namespace dd_detail {

inline DoubleDouble two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

// Requires |a| >= |b|.
inline DoubleDouble quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DoubleDouble two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

}  // namespace dd_detail

inline DoubleDouble operator+(const DoubleDouble& a, const DoubleDouble& b) {
  using namespace dd_detail;
  DoubleDouble s = two_sum(a.hi(), b.hi());
  DoubleDouble t = two_sum(a.lo(), b.lo());
  double lo = s.lo() + t.hi();
  s = quick_two_sum(s.hi(), lo);
  lo = s.lo() + t.lo();
  return quick_two_sum(s.hi(), lo);
}

inline DoubleDouble operator-(const DoubleDouble& a, const DoubleDouble& b) { return a + (-b); }

inline DoubleDouble operator*(const DoubleDouble& a, const DoubleDouble& b) {
  using namespace dd_detail;
  DoubleDouble p = two_prod(a.hi(), b.hi());
  const double lo = p.lo() + (a.hi() * b.lo() + a.lo() * b.hi());
  return quick_two_sum(p.hi(), lo);
}

inline DoubleDouble operator/(const DoubleDouble& a, const DoubleDouble& b) {
  using namespace dd_detail;
  const double q1 = a.hi() / b.hi();
  DoubleDouble r = a - b * DoubleDouble(q1);
  const double q2 = r.hi() / b.hi();
  r = r - b * DoubleDouble(q2);
  const double q3 = r.hi() / b.hi();
  return quick_two_sum(q1, q2) + DoubleDouble(q3);
}

inline DoubleDouble& DoubleDouble::operator+=(const DoubleDouble& b) { return *this = *this + b; }
inline DoubleDouble& DoubleDouble::operator-=(const DoubleDouble& b) { return *this = *this - b; }
inline DoubleDouble& DoubleDouble::operator*=(const DoubleDouble& b) { return *this = *this * b; }
inline DoubleDouble& DoubleDouble::operator/=(const DoubleDouble& b) { return *this = *this / b; }

inline DoubleDouble abs(const DoubleDouble& a) { return a.hi() < 0.0 ? -a : a; }

inline DoubleDouble ldexp(const DoubleDouble& a, int e) {
  return {std::ldexp(a.hi(), e), std::ldexp(a.lo(), e)};
}

inline bool isfinite(const DoubleDouble& a) { return std::isfinite(a.hi()); }

namespace dd_detail {

inline const DoubleDouble kLn2{6.931471805599452862e-01, 2.319046813846299558e-17};

// exp(r) - 1 for |r| <= ~0.35; scaled by 2^-9 then squared back.
inline DoubleDouble expm1_reduced(const DoubleDouble& r) {
  constexpr int kSquarings = 9;
  const DoubleDouble x = ldexp(r, -kSquarings);
  // Taylor series of exp(x) - 1; |x| < 1e-3 so 12 terms reach 1e-40.
  DoubleDouble term = x;
  DoubleDouble sum = x;
  for (int k = 2; k <= 14; ++k) {
    term = term * x / DoubleDouble(static_cast<double>(k));
    sum += term;
    if (std::abs(term.hi()) < 1e-36 * std::abs(sum.hi())) break;
  }
  // e^{2x} - 1 = (e^x - 1)(e^x + 1)
  for (int i = 0; i < kSquarings; ++i) sum = sum * (sum + DoubleDouble(2.0));
  return sum;
}

}  // namespace dd_detail

inline DoubleDouble expm1(const DoubleDouble& a) {
  if (std::abs(a.hi()) < 0.34) return dd_detail::expm1_reduced(a);
  const double k = std::nearbyint(a.hi() / dd_detail::kLn2.hi());
  const DoubleDouble r = a - dd_detail::kLn2 * DoubleDouble(k);
  const DoubleDouble e = ldexp(dd_detail::expm1_reduced(r) + DoubleDouble(1.0), static_cast<int>(k));
  return e - DoubleDouble(1.0);
}

inline DoubleDouble exp(const DoubleDouble& a) {
  if (a.hi() > 709.0) return {std::numeric_limits<double>::infinity(), 0.0};
  if (a.hi() < -745.0) return {0.0, 0.0};
  const double k = std::nearbyint(a.hi() / dd_detail::kLn2.hi());
  const DoubleDouble r = a - dd_detail::kLn2 * DoubleDouble(k);
  return ldexp(dd_detail::expm1_reduced(r) + DoubleDouble(1.0), static_cast<int>(k));
}

// One Newton step on exp(y) = a from the double-precision guess doubles the
// number of correct digits.
inline DoubleDouble log(const DoubleDouble& a) {
  if (a.hi() == 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
  if (a.hi() < 0.0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  if (a.hi() == 1.0 && a.lo() == 0.0) return {0.0, 0.0};
  const DoubleDouble y(std::log(a.hi()));
  return y + a * exp(-y) - DoubleDouble(1.0);
}

// Newton on expm1(y) = a keeps full relative accuracy for tiny a.
inline DoubleDouble log1p(const DoubleDouble& a) {
  if (a.hi() <= -1.0) return log(DoubleDouble(1.0) + a);
  const DoubleDouble y(std::log1p(a.hi()));
  const DoubleDouble em = expm1(y);
  return y - (em - a) / (em + DoubleDouble(1.0));
}

inline std::ostream& operator<<(std::ostream& os, const DoubleDouble& a) {
  return os << static_cast<double>(a);
}

// Uniform conversion used by templated kernels.
inline double to_double(double x) { return x; }
inline double to_double(const DoubleDouble& x) { return static_cast<double>(x); }

}  // namespace mitk
