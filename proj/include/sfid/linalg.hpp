#pragma once

#include <utility>
#include <vector>

#include "sfid/base.hpp"
#include "sfid/supports.hpp"

namespace sfid {

// Partition of the nonzero columns of a matrix into maximal collinearity
// classes. Zero columns belong to no class. Classes are ordered by their
// smallest member index, which is also the class representative.
struct CollinearityPartition {
  std::vector<std::vector<int>> classes;
  std::vector<int> representatives;
};

// Rank with an explicit tolerance policy. Float mode counts singular values
// above relative_eps * sigma_max * max(rows, cols); exact mode runs Gaussian
// elimination over exact rationals and ignores the epsilon.
int numerical_rank(const CMat& m, const Tolerance& tol);

// True iff the given vectors are linearly independent (empty list: true).
bool independent(const std::vector<CVec>& columns, const Tolerance& tol);

// Convenience overload testing independence of selected columns of a matrix.
bool independent_columns(const CMat& m, const std::vector<int>& cols, const Tolerance& tol);

// Largest j such that every j-subset of columns is independent; 0 when some
// column is zero. The default entry point scans subset batches in parallel
// when OpenMP is enabled; the serial variant is the reference implementation
// kept for testing and benchmarking. Both return identical values.
int kruskal_rank(const CMat& m, const Tolerance& tol);
int kruskal_rank_serial(const CMat& m, const Tolerance& tol);

// True iff columns i and j of m span a space of dimension at most one.
bool columns_collinear(const CMat& m, int i, int j, const Tolerance& tol);

CollinearityPartition collinearity_partition(const CMat& m, const Tolerance& tol);

// Column rescaling making the first nonzero entry of every column exactly 1.
// Returns the normalized matrix and the diagonal of the scaling N with
// normalized = m * diag(N). Throws ZeroColumn if a column is zero.
std::pair<CMat, CVec> normalize_columns(const CMat& m, const Tolerance& tol);

// True iff the matrix that keeps z's entries on the given cells and zeroes
// the rest has rank at most one.
bool rank_at_most_one_on(const CMat& z, const SupportMatrix& cells, const Tolerance& tol);

// True iff v is (within tolerance) a linear combination of the given columns.
// Least-squares residual test in float mode, exact consistency in exact mode.
bool in_span(const CVec& v, const std::vector<CVec>& columns, const Tolerance& tol);

// Entry-level zero threshold for support detection: entries with modulus at
// most relative_eps * max|m| count as zero (exact mode: exactly zero).
double support_threshold(const CMat& m, const Tolerance& tol);

// 0/1 pattern of the entries of m that are nonzero under the tolerance.
SupportMatrix support_of(const CMat& m, const Tolerance& tol);

// Indices of columns that are nonzero under the tolerance, ascending.
std::vector<int> nonzero_columns(const CMat& m, const Tolerance& tol);

// Columns of m selected by idx, in the given order.
CMat select_columns(const CMat& m, const std::vector<int>& idx);

// Frobenius-relative deviation ||a - b|| / max(1, ||b||).
double relative_error(const CMat& a, const CMat& b);

}  // namespace sfid
