// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>

namespace songseg {

// Branch-free exp via 2^k * P(r) range reduction with a degree-11 Taylor
// polynomial; relative error is below 1e-14 on the softmax range (x <= 0,
// deep underflow saturates near 1e-308). Plain arithmetic with min/max
// clamps only, so the compiler can vectorize softmax rows; exp_fast(0) == 1
// exactly.
inline double exp_fast(double x) {
  constexpr double kInvLn2 = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  x = x < -708.0 ? -708.0 : x;
  x = x > 708.0 ? 708.0 : x;
  const double kd = __builtin_nearbyint(x * kInvLn2);
  const int64_t k = static_cast<int64_t>(kd);
  const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;
  // Horner over 1/n! up to n = 11
  double p = 2.50521083854417187751e-08;       // 1/11!
  p = p * r + 2.75573192239858906526e-07;      // 1/10!
  p = p * r + 2.75573192239858882250e-06;      // 1/9!
  p = p * r + 2.48015873015873015873e-05;      // 1/8!
  p = p * r + 1.98412698412698412526e-04;      // 1/7!
  p = p * r + 1.38888888888888894069e-03;      // 1/6!
  p = p * r + 8.33333333333333321769e-03;      // 1/5!
  p = p * r + 4.16666666666666666435e-02;      // 1/4!
  p = p * r + 1.66666666666666666667e-01;      // 1/3!
  p = p * r + 5.00000000000000000000e-01;      // 1/2!
  p = p * r + 1.0;
  p = p * r + 1.0;
  const uint64_t bits = static_cast<uint64_t>(k + 1023) << 52;
  double scale;
  std::memcpy(&scale, &bits, sizeof scale);
  return p * scale;
}

}  // namespace songseg
