#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cartan_cr/expr.hpp"
#include "cartan_cr/rational.hpp"

namespace cartan_cr {

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<std::complex<double>> {
  using T = std::complex<double>;
  static T zero() { return {0.0, 0.0}; }
  static T one() { return {1.0, 0.0}; }
  static T i() { return {0.0, 1.0}; }
  static T rational(const Rational& q) { return {q.to_double(), 0.0}; }
  static T conj(const T& v) { return std::conj(v); }
  static bool exact_zero(const T& v) { return v == zero(); }
  static double magnitude(const T& v) { return std::abs(v); }
};

template <>
struct ScalarTraits<CRational> {
  using T = CRational;
  static T zero() { return CRational(0); }
  static T one() { return CRational(1); }
  static T i() { return CRational::I(); }
  static T rational(const Rational& q) { return CRational(q); }
  static T conj(const T& v) { return v.conj(); }
  static bool exact_zero(const T& v) { return v.is_zero(); }
  static double magnitude(const T& v) { return v.is_zero() ? 0.0 : 1.0; }
};

template <>
struct ScalarTraits<ScalarExpr> {
  using T = ScalarExpr;
  static T zero() { return ScalarExpr(0); }
  static T one() { return ScalarExpr(1); }
  static T i() { return ScalarExpr::imaginary_unit(); }
  static T rational(const Rational& q) { return ScalarExpr(q); }
  static T conj(const T& v) { return cartan_cr::conj(v); }
  static bool exact_zero(const T& v) { return v.is_zero_literal(); }
  // prefer small constant pivots, then any non-literal-zero entry
  static double magnitude(const T& v) {
    if (v.is_zero_literal()) return 0.0;
    return v.is_constant() ? 2.0 : 1.0;
  }
};

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, ScalarTraits<T>::zero()) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    for (const auto& r : init) {
      if (r.size() != cols_) throw std::invalid_argument("ragged matrix initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t k = 0; k < n; ++k) m(k, k) = ScalarTraits<T>::one();
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix dimension mismatch");
    Matrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < b.cols_; ++j) {
        T s = ScalarTraits<T>::zero();
        for (std::size_t k = 0; k < a.cols_; ++k) {
          if (ScalarTraits<T>::exact_zero(a(i, k)) || ScalarTraits<T>::exact_zero(b(k, j))) continue;
          s = s + a(i, k) * b(k, j);
        }
        out(i, j) = s;
      }
    return out;
  }
  friend Matrix operator+(const Matrix& a, const Matrix& b) {
    check_same(a, b);
    Matrix out(a.rows_, a.cols_);
    for (std::size_t k = 0; k < a.data_.size(); ++k) out.data_[k] = a.data_[k] + b.data_[k];
    return out;
  }
  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    check_same(a, b);
    Matrix out(a.rows_, a.cols_);
    for (std::size_t k = 0; k < a.data_.size(); ++k) out.data_[k] = a.data_[k] - b.data_[k];
    return out;
  }

  Matrix transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }
  Matrix conjugate() const {
    Matrix out(rows_, cols_);
    for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] = ScalarTraits<T>::conj(data_[k]);
    return out;
  }
  Matrix adjoint() const { return conjugate().transpose(); }

  T trace() const {
    T s = ScalarTraits<T>::zero();
    for (std::size_t k = 0; k < std::min(rows_, cols_); ++k) s = s + (*this)(k, k);
    return s;
  }

  // Laplace expansion along the first row; fine up to the sizes used here.
  T determinant() const {
    if (rows_ != cols_) throw std::invalid_argument("determinant of a non-square matrix");
    if (rows_ == 0) return ScalarTraits<T>::one();
    if (rows_ == 1) return data_[0];
    T s = ScalarTraits<T>::zero();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (ScalarTraits<T>::exact_zero((*this)(0, j))) continue;
      Matrix minor(rows_ - 1, cols_ - 1);
      for (std::size_t i = 1; i < rows_; ++i)
        for (std::size_t k = 0, c = 0; k < cols_; ++k) {
          if (k == j) continue;
          minor(i - 1, c++) = (*this)(i, k);
        }
      T term = (*this)(0, j) * minor.determinant();
      s = (j % 2 == 0) ? s + term : s - term;
    }
    return s;
  }

  // Gauss-Jordan; throws on a singular pivot column.
  Matrix inverse() const {
    if (rows_ != cols_) throw std::invalid_argument("inverse of a non-square matrix");
    std::size_t n = rows_;
    Matrix a = *this;
    Matrix inv = identity(n);
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = n;
      double best = 0.0;
      for (std::size_t r = col; r < n; ++r) {
        double m = ScalarTraits<T>::magnitude(a(r, col));
        if (m > best) {
          best = m;
          piv = r;
        }
      }
      if (piv == n || best == 0.0) throw std::domain_error("singular matrix");
      if (piv != col)
        for (std::size_t k = 0; k < n; ++k) {
          std::swap(a(piv, k), a(col, k));
          std::swap(inv(piv, k), inv(col, k));
        }
      T p = a(col, col);
      T pinv = ScalarTraits<T>::one() / p;
      for (std::size_t k = 0; k < n; ++k) {
        a(col, k) = a(col, k) * pinv;
        inv(col, k) = inv(col, k) * pinv;
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col || ScalarTraits<T>::exact_zero(a(r, col))) continue;
        T f = a(r, col);
        for (std::size_t k = 0; k < n; ++k) {
          if (!ScalarTraits<T>::exact_zero(a(col, k))) a(r, k) = a(r, k) - f * a(col, k);
          if (!ScalarTraits<T>::exact_zero(inv(col, k))) inv(r, k) = inv(r, k) - f * inv(col, k);
        }
      }
    }
    return inv;
  }

  template <class F>
  auto map(F f) const {
    using U = decltype(f(data_[0]));
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(i, j) = f((*this)(i, j));
    return out;
  }

 private:
  static void check_same(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix dimension mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using CMatrix = Matrix<std::complex<double>>;
using QMatrix = Matrix<CRational>;
using EMatrix = Matrix<ScalarExpr>;

}  // namespace cartan_cr
