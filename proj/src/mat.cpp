// SPDX-License-Identifier: Apache-2.0
#include "songseg/mat.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace songseg {

// ikj order: the inner loop runs over contiguous memory in both b and out.
void matmul(CMatView a, CMatView b, MatView out, bool accumulate) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  if (!accumulate) std::memset(out.data, 0, out.rows * out.cols * sizeof(double));
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_nt(CMatView a, CMatView b, MatView out, bool accumulate) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  const std::size_t n = a.rows, k = a.cols, m = b.rows;
  // b is transposed into k x m once, then columns are processed in tiles so
  // each output row is written a single time from L1-resident accumulators.
  constexpr std::size_t kTile = 128;
  std::vector<double> bt(k * m);
  for (std::size_t p = 0; p < k; ++p) {
    double* btrow = bt.data() + p * m;
    for (std::size_t j = 0; j < m; ++j) btrow[j] = b.data[j * k + p];
  }
  double acc[kTile];
  for (std::size_t j0 = 0; j0 < m; j0 += kTile) {
    const std::size_t tile = std::min(kTile, m - j0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* arow = a.row(i);
      std::memset(acc, 0, tile * sizeof(double));
      for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* btrow = bt.data() + p * m + j0;
        for (std::size_t j = 0; j < tile; ++j) acc[j] += av * btrow[j];
      }
      double* orow = out.row(i) + j0;
      if (accumulate)
        for (std::size_t j = 0; j < tile; ++j) orow[j] += acc[j];
      else
        std::memcpy(orow, acc, tile * sizeof(double));
    }
  }
}

void matmul_tn(CMatView a, CMatView b, MatView out, bool accumulate) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  if (!accumulate) std::memset(out.data, 0, out.rows * out.cols * sizeof(double));
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out.row(p);
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace songseg
