#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tigh/errors.hpp"

namespace tigh {

// Dense row-major matrix. All tape values are rank-2; rank-3 inputs (cubes,
// images) enter the tape flattened to a single row and are rearranged with
// gather ops. Real is float in production and double in gradient-check tests.
template <class Real>
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<Real> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, Real(0)) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }

  static Tensor full(int r, int c, Real v) {
    Tensor t(r, c);
    for (auto& x : t.data) x = v;
    return t;
  }

  static Tensor from_rows(std::vector<std::vector<Real>> rows_in) {
    Tensor t(static_cast<int>(rows_in.size()),
             rows_in.empty() ? 0 : static_cast<int>(rows_in[0].size()));
    for (int i = 0; i < t.rows; ++i) {
      if (static_cast<int>(rows_in[i].size()) != t.cols) throw ShapeError("ragged rows");
      for (int j = 0; j < t.cols; ++j) t.at(i, j) = rows_in[i][j];
    }
    return t;
  }

  std::size_t numel() const { return data.size(); }

  Real& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  const Real& at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  std::string shape_str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
  }

  template <class Other>
  static Tensor convert(const Tensor<Other>& o) {
    Tensor t(o.rows, o.cols);
    for (std::size_t i = 0; i < o.data.size(); ++i) t.data[i] = static_cast<Real>(o.data[i]);
    return t;
  }
};

// c[n×m] (+)= a[n×k] · b[k×m]. Inner products accumulate in double regardless
// of Real, with a per-row scratch so the loop order stays cache-friendly.
template <class Real>
void mat_mul(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c, bool accumulate) {
  if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols)
    throw ShapeError("mat_mul " + a.shape_str() + " x " + b.shape_str());
  std::vector<double> acc(static_cast<std::size_t>(b.cols));
  for (int i = 0; i < a.rows; ++i) {
    for (auto& v : acc) v = 0.0;
    const Real* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    for (int k = 0; k < a.cols; ++k) {
      double av = static_cast<double>(arow[k]);
      if (av == 0.0) continue;
      const Real* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) acc[j] += av * static_cast<double>(brow[j]);
    }
    Real* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
    for (int j = 0; j < b.cols; ++j) {
      double v = acc[j] + (accumulate ? static_cast<double>(crow[j]) : 0.0);
      crow[j] = static_cast<Real>(v);
    }
  }
}

// c[n×m] (+)= a[n×k] · b[m×k]ᵀ
template <class Real>
void mat_mul_nt(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c, bool accumulate) {
  if (a.cols != b.cols || c.rows != a.rows || c.cols != b.rows)
    throw ShapeError("mat_mul_nt " + a.shape_str() + " x " + b.shape_str());
  for (int i = 0; i < a.rows; ++i) {
    const Real* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    Real* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
    for (int j = 0; j < b.rows; ++j) {
      const Real* brow = b.data.data() + static_cast<std::size_t>(j) * b.cols;
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += static_cast<double>(arow[k]) * static_cast<double>(brow[k]);
      crow[j] = static_cast<Real>(s + (accumulate ? static_cast<double>(crow[j]) : 0.0));
    }
  }
}

// c[n×m] (+)= a[k×n]ᵀ · b[k×m]
template <class Real>
void mat_mul_tn(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& c, bool accumulate) {
  if (a.rows != b.rows || c.rows != a.cols || c.cols != b.cols)
    throw ShapeError("mat_mul_tn " + a.shape_str() + " x " + b.shape_str());
  std::vector<double> acc(static_cast<std::size_t>(a.cols) * b.cols, 0.0);
  for (int k = 0; k < a.rows; ++k) {
    const Real* arow = a.data.data() + static_cast<std::size_t>(k) * a.cols;
    const Real* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
    for (int i = 0; i < a.cols; ++i) {
      double av = static_cast<double>(arow[i]);
      if (av == 0.0) continue;
      double* arow_out = acc.data() + static_cast<std::size_t>(i) * b.cols;
      for (int j = 0; j < b.cols; ++j) arow_out[j] += av * static_cast<double>(brow[j]);
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i)
    c.data[i] = static_cast<Real>(acc[i] + (accumulate ? static_cast<double>(c.data[i]) : 0.0));
}

}  // namespace tigh
