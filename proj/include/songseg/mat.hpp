// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace songseg {

// Non-owning row-major views. All heavy math runs in 64-bit.
struct CMatView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  bool empty() const { return data == nullptr || rows == 0 || cols == 0; }
  const double* row(std::size_t i) const { return data + i * cols; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct MatView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  bool empty() const { return data == nullptr || rows == 0 || cols == 0; }
  double* row(std::size_t i) const { return data + i * cols; }
  double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  operator CMatView() const { return CMatView{data, rows, cols}; }
};

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), v_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double* row(std::size_t i) { return v_.data() + i * cols_; }
  const double* row(std::size_t i) const { return v_.data() + i * cols_; }

  double& operator()(std::size_t i, std::size_t j) { return v_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * cols_ + j]; }

  void fill(double x) { v_.assign(v_.size(), x); }
  // Reshapes without clearing retained storage; new elements are zero, reused
  // ones keep stale values. Callers overwrite in full or fill() explicitly.
  void resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    v_.resize(rows * cols);
  }

  MatView view() { return MatView{v_.data(), rows_, cols_}; }
  CMatView view() const { return CMatView{v_.data(), rows_, cols_}; }
  operator MatView() { return view(); }
  operator CMatView() const { return view(); }

  // View of rows [0, n).
  CMatView top_rows(std::size_t n) const {
    assert(n <= rows_);
    return CMatView{v_.data(), n, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

// out = a * b (or += with accumulate)
void matmul(CMatView a, CMatView b, MatView out, bool accumulate = false);
// out = a * b^T
void matmul_nt(CMatView a, CMatView b, MatView out, bool accumulate = false);
// out = a^T * b
void matmul_tn(CMatView a, CMatView b, MatView out, bool accumulate = false);

}  // namespace songseg
