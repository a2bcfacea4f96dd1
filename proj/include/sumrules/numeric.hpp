#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <type_traits>

namespace sumrules {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// Densities below this are treated as vanishing; log-integrands never see them.
inline constexpr double kDensityFloor = 1e-300;

inline constexpr std::size_t kDefaultQuadPoints = 4096;

// Neumaier-compensated accumulator. Summation order is the call order, so
// results are reproducible bit for bit.
template <class T>
class CompensatedSum {
 public:
  void add(T value) {
    if constexpr (std::is_same_v<T, Complex>) {
      re_.add(value.real());
      im_.add(value.imag());
    } else {
      const T t = sum_ + value;
      if (std::abs(sum_) >= std::abs(value)) {
        comp_ += (sum_ - t) + value;
      } else {
        comp_ += (value - t) + sum_;
      }
      sum_ = t;
    }
  }
  T value() const {
    if constexpr (std::is_same_v<T, Complex>) {
      return {re_.value(), im_.value()};
    } else {
      return sum_ + comp_;
    }
  }

 private:
  struct Empty {};
  T sum_{};
  T comp_{};
  // Only the complex specialization uses these.
  std::conditional_t<std::is_same_v<T, Complex>, CompensatedSum<double>, Empty> re_{}, im_{};
};

inline double compensated_sum(std::span<const double> values) {
  CompensatedSum<double> acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace sumrules
