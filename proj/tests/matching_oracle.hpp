// SPDX-License-Identifier: Apache-2.0
//
// Exhaustive one-to-one maximum matching over the tolerance graph;
// exponential and obviously correct. Shared by the unit and acceptance
// suites as the reference for boundary_f.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace songseg::testing {

inline int brute_force_matching(const std::vector<double>& est, const std::vector<double>& ref,
                                double tol, std::size_t e = 0, std::vector<bool>* used = nullptr) {
  std::vector<bool> local;
  if (!used) {
    local.assign(ref.size(), false);
    used = &local;
  }
  if (e == est.size()) return 0;
  int best = brute_force_matching(est, ref, tol, e + 1, used);  // leave est[e] unmatched
  for (std::size_t r = 0; r < ref.size(); ++r) {
    if ((*used)[r] || std::abs(est[e] - ref[r]) > tol + 1e-12) continue;
    (*used)[r] = true;
    best = std::max(best, 1 + brute_force_matching(est, ref, tol, e + 1, used));
    (*used)[r] = false;
  }
  return best;
}

}  // namespace songseg::testing
