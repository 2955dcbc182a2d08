#pragma once

#include <cstdint>
#include <vector>

#include "sfid/base.hpp"

namespace sfid {

// ---------------------------------------------------------------------------
// SupportMatrix: a binary sparsity pattern, viewed interchangeably as a 0/1
// grid and as a set of (row, col) cells. Packed bitset storage, bit index
// row * cols + col. The flattened pattern read with cell (0,0) as the least
// significant bit defines the canonical enumeration order.
// ---------------------------------------------------------------------------

class SupportMatrix {
 public:
  SupportMatrix() : rows_(0), cols_(0) {}
  SupportMatrix(int rows, int cols);

  /// Build from a dense 0/1 grid (outer = rows).
  static SupportMatrix from_grid(const std::vector<std::vector<int>>& grid);
  /// Build from explicit cells.
  static SupportMatrix from_cells(int rows, int cols,
                                  const std::vector<std::pair<int, int>>& cells);
  static SupportMatrix zero(int rows, int cols) { return SupportMatrix(rows, cols); }
  static SupportMatrix full(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool get(int r, int c) const;
  void set(int r, int c, bool v = true);

  /// Number of ones.
  int count() const;
  bool empty() const { return count() == 0; }

  bool is_subset_of(const SupportMatrix& o) const;
  SupportMatrix operator&(const SupportMatrix& o) const;
  SupportMatrix operator|(const SupportMatrix& o) const;
  bool operator==(const SupportMatrix& o) const;
  bool operator!=(const SupportMatrix& o) const { return !(*this == o); }
  /// Canonical order: numeric value of the flattened pattern.
  bool operator<(const SupportMatrix& o) const;

  bool disjoint_with(const SupportMatrix& o) const;

  /// Row indices carrying a 1 in column c.
  std::vector<int> column_cells(int c) const;
  /// Column indices carrying a 1 in row r.
  std::vector<int> row_cells(int r) const;
  int column_count(int c) const;
  int row_count(int r) const;
  bool column_empty(int c) const { return column_count(c) == 0; }

  /// Indices of nonzero columns.
  std::vector<int> colsupp() const;

  /// All cells in row-major order.
  std::vector<std::pair<int, int>> cells() const;

  /// Keep only the listed columns, in the listed order.
  SupportMatrix restrict_cols(const std::vector<int>& J) const;
  /// Keep only the listed rows, in the listed order.
  SupportMatrix restrict_rows(const std::vector<int>& I) const;
  SupportMatrix transpose() const;
  /// Apply a column permutation: result column j = this column perm[j].
  SupportMatrix permute_cols(const std::vector<int>& perm) const;

  std::uint64_t hash() const;

 private:
  int rows_, cols_;
  std::vector<std::uint64_t> bits_;
  int bit_index(int r, int c) const { return r * cols_ + c; }
};

/// Column indices of S owning at least one 1.
std::vector<int> colsupp(const SupportMatrix& S);

// ---------------------------------------------------------------------------
// SupportPair: sparsity patterns for the two factors of Z = X·Yᵀ, sharing the
// inner dimension r.
// ---------------------------------------------------------------------------

struct SupportPair {
  SupportMatrix left;   // m × r
  SupportMatrix right;  // n × r
  SupportPair() = default;
  SupportPair(SupportMatrix l, SupportMatrix r);
  bool operator==(const SupportPair& o) const { return left == o.left && right == o.right; }
  bool operator<(const SupportPair& o) const;
};

// ---------------------------------------------------------------------------
// SupportFamily: a set of allowed supports, either one of the classical
// parametric kinds (with closed-form counting) or an explicit list.
// ---------------------------------------------------------------------------

enum class FamilyKind { GlobalSparse, ColumnSparse, RowSparse, Regular, Intersection, Enumerated };

class SupportFamily {
 public:
  /// At most s ones in total.
  static SupportFamily global_sparse(int rows, int cols, long s);
  /// At most k ones per column.
  static SupportFamily column_sparse(int rows, int cols, long k);
  /// At most l ones per row.
  static SupportFamily row_sparse(int rows, int cols, long l);
  /// Square patterns, at most k ones per column and per row.
  static SupportFamily regular(int n, long k);
  static SupportFamily intersection(std::vector<SupportFamily> parts);
  /// Explicit list; deduplicated and stored in canonical order.
  static SupportFamily enumerated(int rows, int cols, std::vector<SupportMatrix> members);

  FamilyKind kind() const { return kind_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long param() const { return param_; }
  const std::vector<SupportFamily>& parts() const { return parts_; }
  const std::vector<SupportMatrix>& listed_members() const { return members_; }

  /// Upper bound on the member count (exact for classical kinds and lists,
  /// an upper bound for intersections), saturating at 2^62.
  unsigned long long cardinality_bound() const;

  /// True when every subset of a member is again a member (holds for all
  /// classical kinds; decides how completion treats the family).
  bool downward_closed_by_construction() const;

  std::string describe() const;

 private:
  friend class PairFamily;
  SupportFamily() = default;
  FamilyKind kind_ = FamilyKind::Enumerated;
  int rows_ = 0, cols_ = 0;
  long param_ = 0;
  std::vector<SupportFamily> parts_;
  std::vector<SupportMatrix> members_;
};

/// Membership predicate: sparsity test for classical kinds, set membership
/// for Enumerated.
bool member(const SupportMatrix& S, const SupportFamily& F);

/// Every member exactly once, canonical order. Throws
/// EnumerationBudgetExceeded before yielding anything when the closed-form
/// count exceeds the budget.
std::vector<SupportMatrix> enumerate_family(const SupportFamily& F, const Budget& budget = Budget::from_env());

/// The family of restrictions { S[:, J] : S in Theta }. Classical kinds stay
/// classical; J = {} gives the single empty-width support.
SupportFamily signature(const SupportFamily& Theta, const std::vector<int>& J,
                        const Budget& budget = Budget::from_env());

/// The family of blockwise column unions over a partition of the columns:
/// output column b of the image of S is the support of the row-sums of S's
/// columns in block b.
SupportFamily fingerprint(const SupportFamily& Theta, const std::vector<std::vector<int>>& partition,
                          const Budget& budget = Budget::from_env());

/// Downward closure: every subset of every member.
SupportFamily completion(const SupportFamily& Theta, const Budget& budget = Budget::from_env());

// ---------------------------------------------------------------------------
// PairFamily: a family of support pairs, either a product of two factor
// families or an explicit list of pairs.
// ---------------------------------------------------------------------------

class PairFamily {
 public:
  static PairFamily product(SupportFamily left, SupportFamily right);
  static PairFamily enumerated(std::vector<SupportPair> pairs);

  bool is_product() const { return is_product_; }
  const SupportFamily& left() const { return left_; }
  const SupportFamily& right() const { return right_; }
  const std::vector<SupportPair>& listed_pairs() const { return pairs_; }

  int left_rows() const;   // m
  int right_rows() const;  // n
  int inner_dim() const;   // r

  unsigned long long cardinality_bound() const;
  std::string describe() const;

 private:
  PairFamily() = default;
  bool is_product_ = false;
  SupportFamily left_, right_;
  std::vector<SupportPair> pairs_;
};

bool pair_member(const SupportPair& S, const PairFamily& Omega);

std::vector<SupportPair> enumerate_pairs(const PairFamily& Omega, const Budget& budget = Budget::from_env());

/// True iff permuting the columns of both patterns of any member jointly
/// never leaves the family. Products of classical kinds return true without
/// enumeration.
bool is_stable_by_permutation(const PairFamily& Omega, const Budget& budget = Budget::from_env());

/// All members of F containing `base` cell-wise. Budget-guarded.
std::vector<SupportMatrix> enumerate_supersets(const SupportFamily& F, const SupportMatrix& base,
                                               const Budget& budget = Budget::from_env());

/// All pairs of Omega containing (base.left, base.right) cell-wise.
std::vector<SupportPair> enumerate_containing_pairs(const PairFamily& Omega, const SupportPair& base,
                                                    const Budget& budget = Budget::from_env());

}  // namespace sfid
