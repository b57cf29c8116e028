// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>

#include "songseg/annotation.hpp"
#include "songseg/error.hpp"

namespace songseg::testing {

template <typename Fn>
Errc catch_errc(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a songseg::Error");
}

inline bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

inline bool rel_near(double a, double b, double tol) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

inline bool same_annotation(const Annotation& a, const Annotation& b) {
  if (a.segments.size() != b.segments.size() || a.end != b.end || a.source != b.source) return false;
  for (std::size_t i = 0; i < a.segments.size(); ++i)
    if (a.segments[i].start != b.segments[i].start || a.segments[i].label != b.segments[i].label)
      return false;
  if (a.valid_ranges.size() != b.valid_ranges.size()) return false;
  for (std::size_t i = 0; i < a.valid_ranges.size(); ++i)
    if (a.valid_ranges[i].begin != b.valid_ranges[i].begin ||
        a.valid_ranges[i].end != b.valid_ranges[i].end)
      return false;
  return true;
}

}  // namespace songseg::testing
