#include "sfid/rational.hpp"

#include <cmath>

namespace sfid {

GaussianRational operator/(const GaussianRational& a, const GaussianRational& b) {
  require(!b.is_zero(), "division by zero Gaussian rational");
  mpq_class n = b.norm2();
  GaussianRational num = a * b.conj();
  return {num.re / n, num.im / n};
}

GaussianRational GaussianRational::from_complex(const cx& z) {
  require(std::isfinite(z.real()) && std::isfinite(z.imag()),
          "non-finite value cannot be converted to a rational");
  return {mpq_class(z.real()), mpq_class(z.imag())};
}

cx GaussianRational::to_complex() const { return {re.get_d(), im.get_d()}; }

QMatrix QMatrix::from_complex(const CMat& m) {
  QMatrix q(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < q.rows_; ++i)
    for (int j = 0; j < q.cols_; ++j) q.at(i, j) = GaussianRational::from_complex(m(i, j));
  return q;
}

CMat QMatrix::to_complex() const {
  CMat m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = at(i, j).to_complex();
  return m;
}

QMatrix QMatrix::transpose() const {
  QMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
  return t;
}

QMatrix QMatrix::select_columns(const std::vector<int>& idx) const {
  QMatrix s(rows_, static_cast<int>(idx.size()));
  for (int j = 0; j < s.cols_; ++j) {
    require(idx[j] >= 0 && idx[j] < cols_, "column index out of range");
    for (int i = 0; i < rows_; ++i) s.at(i, j) = at(i, idx[j]);
  }
  return s;
}

QMatrix operator*(const QMatrix& a, const QMatrix& b) {
  require_dims(a.cols_ == b.rows_, "inner dimensions must match for matrix product");
  QMatrix c(a.rows_, b.cols_);
  for (int i = 0; i < a.rows_; ++i)
    for (int k = 0; k < a.cols_; ++k) {
      const GaussianRational& aik = a.at(i, k);
      if (aik.is_zero()) continue;
      for (int j = 0; j < b.cols_; ++j) c.at(i, j) = c.at(i, j) + aik * b.at(k, j);
    }
  return c;
}

int exact_rank(QMatrix m) {
  int rank = 0;
  int rows = m.rows(), cols = m.cols();
  for (int col = 0; col < cols && rank < rows; ++col) {
    int pivot = -1;
    for (int i = rank; i < rows; ++i) {
      if (!m.at(i, col).is_zero()) {
        pivot = i;
        break;
      }
    }
    if (pivot < 0) continue;
    if (pivot != rank)
      for (int j = col; j < cols; ++j) std::swap(m.at(pivot, j), m.at(rank, j));
    GaussianRational inv = GaussianRational(mpq_class(1)) / m.at(rank, col);
    for (int i = rank + 1; i < rows; ++i) {
      if (m.at(i, col).is_zero()) continue;
      GaussianRational f = m.at(i, col) * inv;
      for (int j = col; j < cols; ++j) m.at(i, j) = m.at(i, j) - f * m.at(rank, j);
    }
    ++rank;
  }
  return rank;
}

ExactSolveResult exact_solve(const QMatrix& a, const std::vector<GaussianRational>& b) {
  require_dims(static_cast<int>(b.size()) == a.rows(), "right-hand side length must match rows");
  int rows = a.rows(), cols = a.cols();

  // Reduced row echelon form of the augmented matrix [A | b].
  QMatrix aug(rows, cols + 1);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) aug.at(i, j) = a.at(i, j);
    aug.at(i, cols) = b[static_cast<size_t>(i)];
  }

  std::vector<int> pivot_col;  // pivot column of each pivot row
  int row = 0;
  for (int col = 0; col < cols && row < rows; ++col) {
    int pivot = -1;
    for (int i = row; i < rows; ++i) {
      if (!aug.at(i, col).is_zero()) {
        pivot = i;
        break;
      }
    }
    if (pivot < 0) continue;
    if (pivot != row)
      for (int j = 0; j <= cols; ++j) std::swap(aug.at(pivot, j), aug.at(row, j));
    GaussianRational inv = GaussianRational(mpq_class(1)) / aug.at(row, col);
    for (int j = col; j <= cols; ++j) aug.at(row, j) = aug.at(row, j) * inv;
    for (int i = 0; i < rows; ++i) {
      if (i == row || aug.at(i, col).is_zero()) continue;
      GaussianRational f = aug.at(i, col);
      for (int j = col; j <= cols; ++j) aug.at(i, j) = aug.at(i, j) - f * aug.at(row, j);
    }
    pivot_col.push_back(col);
    ++row;
  }

  ExactSolveResult res;
  // Inconsistent iff some zero row of A has a nonzero right-hand side.
  for (int i = row; i < rows; ++i) {
    if (!aug.at(i, cols).is_zero()) {
      res.consistent = false;
      return res;
    }
  }
  res.consistent = true;

  std::vector<bool> is_pivot(static_cast<size_t>(cols), false);
  for (int c : pivot_col) is_pivot[static_cast<size_t>(c)] = true;

  // Particular solution: free variables at zero.
  res.particular.assign(static_cast<size_t>(cols), GaussianRational());
  for (size_t r = 0; r < pivot_col.size(); ++r)
    res.particular[static_cast<size_t>(pivot_col[r])] = aug.at(static_cast<int>(r), cols);

  // One kernel basis vector per free column.
  for (int free_col = 0; free_col < cols; ++free_col) {
    if (is_pivot[static_cast<size_t>(free_col)]) continue;
    std::vector<GaussianRational> k(static_cast<size_t>(cols));
    k[static_cast<size_t>(free_col)] = GaussianRational(mpq_class(1));
    for (size_t r = 0; r < pivot_col.size(); ++r)
      k[static_cast<size_t>(pivot_col[r])] = -aug.at(static_cast<int>(r), free_col);
    res.kernel.push_back(std::move(k));
  }
  return res;
}

bool exact_in_span(const QMatrix& columns, const std::vector<GaussianRational>& v) {
  return exact_solve(columns, v).consistent;
}

}  // namespace sfid
