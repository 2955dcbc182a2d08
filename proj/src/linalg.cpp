#include "sfid/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfid/rational.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sfid {

namespace {

// Advances idx to the next k-combination of {0, ..., n-1} in lexicographic
// order; returns false when idx was the last combination.
bool next_combination(std::vector<int>& idx, int n) {
  int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

double max_abs(const CMat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

}  // namespace

int numerical_rank(const CMat& m, const Tolerance& tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  if (tol.is_exact()) return exact_rank(QMatrix::from_complex(m));
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double cutoff = tol.relative_eps * sv(0) * static_cast<double>(std::max(m.rows(), m.cols()));
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

bool independent(const std::vector<CVec>& columns, const Tolerance& tol) {
  if (columns.empty()) return true;
  Eigen::Index len = columns.front().size();
  for (const auto& c : columns) require_dims(c.size() == len, "vectors must share length");
  CMat m(len, static_cast<Eigen::Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = columns[j];
  return numerical_rank(m, tol) == static_cast<int>(columns.size());
}

bool independent_columns(const CMat& m, const std::vector<int>& cols, const Tolerance& tol) {
  if (cols.empty()) return true;
  return numerical_rank(select_columns(m, cols), tol) == static_cast<int>(cols.size());
}

int kruskal_rank_serial(const CMat& m, const Tolerance& tol) {
  int n = static_cast<int>(m.cols());
  if (n == 0) return 0;
  // No subset larger than the rank can be independent, so the scan is capped.
  int cap = std::min(numerical_rank(m, tol), n);
  for (int j = 1; j <= cap; ++j) {
    std::vector<int> idx(static_cast<size_t>(j));
    std::iota(idx.begin(), idx.end(), 0);
    do {
      if (!independent_columns(m, idx, tol)) return j - 1;
    } while (next_combination(idx, n));
  }
  return cap;
}

int kruskal_rank(const CMat& m, const Tolerance& tol) {
#ifndef _OPENMP
  return kruskal_rank_serial(m, tol);
#else
  int n = static_cast<int>(m.cols());
  if (n == 0) return 0;
  int cap = std::min(numerical_rank(m, tol), n);
  constexpr size_t kBatch = 1024;
  for (int j = 1; j <= cap; ++j) {
    std::vector<int> idx(static_cast<size_t>(j));
    std::iota(idx.begin(), idx.end(), 0);
    bool more = true;
    bool dependent_found = false;
    std::vector<std::vector<int>> batch;
    batch.reserve(kBatch);
    while (more && !dependent_found) {
      batch.clear();
      do {
        batch.push_back(idx);
        more = next_combination(idx, n);
      } while (more && batch.size() < kBatch);
      bool found = false;
      // The merged value is a pure existence flag, so the schedule cannot
      // change the result.
#pragma omp parallel for schedule(dynamic) reduction(|| : found)
      for (long b = 0; b < static_cast<long>(batch.size()); ++b)
        found = found || !independent_columns(m, batch[static_cast<size_t>(b)], tol);
      dependent_found = found;
    }
    if (dependent_found) return j - 1;
  }
  return cap;
#endif
}

bool columns_collinear(const CMat& m, int i, int j, const Tolerance& tol) {
  require(i >= 0 && i < m.cols() && j >= 0 && j < m.cols(), "column index out of range");
  return numerical_rank(select_columns(m, {i, j}), tol) <= 1;
}

CollinearityPartition collinearity_partition(const CMat& m, const Tolerance& tol) {
  CollinearityPartition p;
  for (int j : nonzero_columns(m, tol)) {
    bool placed = false;
    for (size_t c = 0; c < p.representatives.size() && !placed; ++c) {
      if (columns_collinear(m, p.representatives[c], j, tol)) {
        p.classes[c].push_back(j);
        placed = true;
      }
    }
    if (!placed) {
      p.classes.push_back({j});
      p.representatives.push_back(j);
    }
  }
  return p;
}

std::pair<CMat, CVec> normalize_columns(const CMat& m, const Tolerance& tol) {
  double thr = support_threshold(m, tol);
  CMat xn = m;
  CVec n(m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    int lead = -1;
    for (int i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > thr) {
        lead = i;
        break;
      }
    }
    if (lead < 0) throw ZeroColumn(j);
    cx scale = cx(1.0, 0.0) / m(lead, j);
    n(j) = scale;
    xn.col(j) *= scale;
    xn(lead, j) = cx(1.0, 0.0);  // pin the leading entry despite rounding
  }
  return {xn, n};
}

bool rank_at_most_one_on(const CMat& z, const SupportMatrix& cells, const Tolerance& tol) {
  require_dims(cells.rows() == static_cast<int>(z.rows()) &&
                   cells.cols() == static_cast<int>(z.cols()),
               "cell pattern must match matrix dimensions");
  CMat masked = CMat::Zero(z.rows(), z.cols());
  for (const auto& [r, c] : cells.cells()) masked(r, c) = z(r, c);
  return numerical_rank(masked, tol) <= 1;
}

bool in_span(const CVec& v, const std::vector<CVec>& columns, const Tolerance& tol) {
  for (const auto& c : columns)
    require_dims(c.size() == v.size(), "span test requires matching vector lengths");
  if (tol.is_exact()) {
    QMatrix a(static_cast<int>(v.size()), static_cast<int>(columns.size()));
    for (size_t j = 0; j < columns.size(); ++j)
      for (Eigen::Index i = 0; i < v.size(); ++i)
        a.at(static_cast<int>(i), static_cast<int>(j)) =
            GaussianRational::from_complex(columns[j](i));
    std::vector<GaussianRational> b;
    b.reserve(static_cast<size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) b.push_back(GaussianRational::from_complex(v(i)));
    return exact_in_span(a, b);
  }
  if (v.size() == 0) return true;
  double bound = tol.relative_eps * std::max(1.0, v.norm());
  if (columns.empty()) return v.norm() <= bound;
  CMat c(v.size(), static_cast<Eigen::Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) c.col(static_cast<Eigen::Index>(j)) = columns[j];
  CVec x = c.completeOrthogonalDecomposition().solve(v);
  return (v - c * x).norm() <= bound;
}

double support_threshold(const CMat& m, const Tolerance& tol) {
  if (tol.is_exact()) return 0.0;
  return tol.relative_eps * max_abs(m);
}

SupportMatrix support_of(const CMat& m, const Tolerance& tol) {
  double thr = support_threshold(m, tol);
  SupportMatrix s = SupportMatrix::zero(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > thr) s.set(i, j, true);
  return s;
}

std::vector<int> nonzero_columns(const CMat& m, const Tolerance& tol) {
  double thr = support_threshold(m, tol);
  std::vector<int> out;
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > thr) {
        out.push_back(j);
        break;
      }
    }
  }
  return out;
}

CMat select_columns(const CMat& m, const std::vector<int>& idx) {
  CMat s(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) {
    require(idx[j] >= 0 && idx[j] < m.cols(), "column index out of range");
    s.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  }
  return s;
}

double relative_error(const CMat& a, const CMat& b) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(),
               "relative error requires equal dimensions");
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace sfid
