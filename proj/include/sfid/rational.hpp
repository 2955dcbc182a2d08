#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

#include "sfid/base.hpp"

namespace sfid {

// Complex number with exact rational real and imaginary parts. Conversion
// from double is exact (every finite double is a rational), so round-tripping
// float inputs through this type loses nothing.
struct GaussianRational {
  mpq_class re;
  mpq_class im;

  GaussianRational() : re(0), im(0) {}
  GaussianRational(mpq_class r) : re(std::move(r)), im(0) {}
  GaussianRational(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}

  static GaussianRational from_complex(const cx& z);
  cx to_complex() const;

  bool is_zero() const { return re == 0 && im == 0; }
  GaussianRational conj() const { return {re, -im}; }
  // |z|^2 as an exact rational.
  mpq_class norm2() const { return re * re + im * im; }

  friend GaussianRational operator+(const GaussianRational& a, const GaussianRational& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend GaussianRational operator-(const GaussianRational& a, const GaussianRational& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
  friend GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend GaussianRational operator/(const GaussianRational& a, const GaussianRational& b);
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
    return a.re == b.re && a.im == b.im;
  }
  friend bool operator!=(const GaussianRational& a, const GaussianRational& b) { return !(a == b); }
};

// Dense matrix over the Gaussian rationals, row-major. Small-instance exact
// arithmetic for oracle-grade rank and solve computations.
class QMatrix {
 public:
  QMatrix() = default;
  QMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {
    require(rows >= 0 && cols >= 0, "matrix dimensions must be nonnegative");
  }

  static QMatrix from_complex(const CMat& m);
  CMat to_complex() const;

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  GaussianRational& at(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const GaussianRational& at(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  QMatrix transpose() const;
  QMatrix select_columns(const std::vector<int>& idx) const;

  friend QMatrix operator*(const QMatrix& a, const QMatrix& b);
  friend bool operator==(const QMatrix& a, const QMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<GaussianRational> a_;
};

// Exact rank by Gaussian elimination over the field of Gaussian rationals.
int exact_rank(QMatrix m);

// Exact solution of A x = b: consistency flag, one particular solution, and a
// basis of the kernel of A (empty basis means the solution is unique).
struct ExactSolveResult {
  bool consistent = false;
  std::vector<GaussianRational> particular;
  std::vector<std::vector<GaussianRational>> kernel;
};

ExactSolveResult exact_solve(const QMatrix& a, const std::vector<GaussianRational>& b);

// True iff v lies in the span of the given columns (exact consistency test).
bool exact_in_span(const QMatrix& columns, const std::vector<GaussianRational>& v);

}  // namespace sfid
