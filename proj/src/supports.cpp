#include "sfid/supports.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>

namespace sfid {

namespace {

constexpr unsigned long long kCountCap = 1ULL << 62;

unsigned long long sat_add(unsigned long long a, unsigned long long b) {
  if (a >= kCountCap || b >= kCountCap || a + b >= kCountCap) return kCountCap;
  return a + b;
}

unsigned long long sat_mul(unsigned long long a, unsigned long long b) {
  if (a == 0 || b == 0) return 0;
  if (a >= kCountCap || b >= kCountCap || a > kCountCap / b) return kCountCap;
  return a * b;
}

unsigned long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned long long out = 1;
  for (int i = 1; i <= k; ++i) {
    out = sat_mul(out, static_cast<unsigned long long>(n - k + i));
    if (out >= kCountCap) return kCountCap;
    out /= static_cast<unsigned long long>(i);
  }
  return out;
}

/// Sum of C(n, t) for t = 0..cap.
unsigned long long binomial_prefix(int n, long cap) {
  unsigned long long out = 0;
  for (long t = 0; t <= std::min<long>(cap, n); ++t) out = sat_add(out, binomial(n, static_cast<int>(t)));
  return out;
}

void check_budget(unsigned long long predicted, const Budget& budget, const char* what) {
  if (predicted > static_cast<unsigned long long>(budget.max_members))
    throw EnumerationBudgetExceeded(std::string(what) + ": predicted " +
                                    (predicted >= kCountCap ? std::string(">=2^62") : std::to_string(predicted)) +
                                    " members exceeds budget " + std::to_string(budget.max_members));
}

/// Visits every subset of {0..n-1} with at most `cap` elements, smallest
/// first, positions in lexicographic order within a size.
template <typename Fn>
void for_each_small_subset(int n, long cap, Fn&& fn) {
  std::vector<int> pick;
  fn(pick);  // empty set
  long limit = std::min<long>(cap, n);
  for (long t = 1; t <= limit; ++t) {
    pick.assign(static_cast<size_t>(t), 0);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      fn(pick);
      int i = static_cast<int>(t) - 1;
      while (i >= 0 && pick[static_cast<size_t>(i)] == n - static_cast<int>(t) + i) --i;
      if (i < 0) break;
      ++pick[static_cast<size_t>(i)];
      for (int j = i + 1; j < static_cast<int>(t); ++j)
        pick[static_cast<size_t>(j)] = pick[static_cast<size_t>(j - 1)] + 1;
    }
  }
}

std::vector<SupportMatrix> sorted_unique(std::vector<SupportMatrix> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Budget Budget::from_env() {
  Budget b;
  if (const char* env = std::getenv("SFID_BUDGET")) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0' && v > 0) b.max_members = v;
  }
  return b;
}

// --------------------------------------------------------------------------
// SupportMatrix
// --------------------------------------------------------------------------

SupportMatrix::SupportMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  require_dims(rows >= 0 && cols >= 0, "support dimensions must be nonnegative");
  bits_.assign(static_cast<size_t>((rows * cols + 63) / 64), 0);
}

SupportMatrix SupportMatrix::from_grid(const std::vector<std::vector<int>>& grid) {
  int rows = static_cast<int>(grid.size());
  int cols = rows == 0 ? 0 : static_cast<int>(grid[0].size());
  SupportMatrix S(rows, cols);
  for (int r = 0; r < rows; ++r) {
    require_dims(static_cast<int>(grid[static_cast<size_t>(r)].size()) == cols, "ragged grid");
    for (int c = 0; c < cols; ++c)
      if (grid[static_cast<size_t>(r)][static_cast<size_t>(c)] != 0) S.set(r, c);
  }
  return S;
}

SupportMatrix SupportMatrix::from_cells(int rows, int cols,
                                        const std::vector<std::pair<int, int>>& cells) {
  SupportMatrix S(rows, cols);
  for (auto [r, c] : cells) S.set(r, c);
  return S;
}

SupportMatrix SupportMatrix::full(int rows, int cols) {
  SupportMatrix S(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) S.set(r, c);
  return S;
}

bool SupportMatrix::get(int r, int c) const {
  require_dims(r >= 0 && r < rows_ && c >= 0 && c < cols_, "cell out of range");
  int b = bit_index(r, c);
  return (bits_[static_cast<size_t>(b >> 6)] >> (b & 63)) & 1ULL;
}

void SupportMatrix::set(int r, int c, bool v) {
  require_dims(r >= 0 && r < rows_ && c >= 0 && c < cols_, "cell out of range");
  int b = bit_index(r, c);
  if (v)
    bits_[static_cast<size_t>(b >> 6)] |= (1ULL << (b & 63));
  else
    bits_[static_cast<size_t>(b >> 6)] &= ~(1ULL << (b & 63));
}

int SupportMatrix::count() const {
  int n = 0;
  for (auto w : bits_) n += __builtin_popcountll(w);
  return n;
}

bool SupportMatrix::is_subset_of(const SupportMatrix& o) const {
  require_dims(rows_ == o.rows_ && cols_ == o.cols_, "support dims differ");
  for (size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] & ~o.bits_[i]) return false;
  return true;
}

SupportMatrix SupportMatrix::operator&(const SupportMatrix& o) const {
  require_dims(rows_ == o.rows_ && cols_ == o.cols_, "support dims differ");
  SupportMatrix out(rows_, cols_);
  for (size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & o.bits_[i];
  return out;
}

SupportMatrix SupportMatrix::operator|(const SupportMatrix& o) const {
  require_dims(rows_ == o.rows_ && cols_ == o.cols_, "support dims differ");
  SupportMatrix out(rows_, cols_);
  for (size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | o.bits_[i];
  return out;
}

bool SupportMatrix::operator==(const SupportMatrix& o) const {
  return rows_ == o.rows_ && cols_ == o.cols_ && bits_ == o.bits_;
}

bool SupportMatrix::operator<(const SupportMatrix& o) const {
  if (rows_ != o.rows_) return rows_ < o.rows_;
  if (cols_ != o.cols_) return cols_ < o.cols_;
  for (size_t i = bits_.size(); i-- > 0;)
    if (bits_[i] != o.bits_[i]) return bits_[i] < o.bits_[i];
  return false;
}

bool SupportMatrix::disjoint_with(const SupportMatrix& o) const {
  require_dims(rows_ == o.rows_ && cols_ == o.cols_, "support dims differ");
  for (size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] & o.bits_[i]) return false;
  return true;
}

std::vector<int> SupportMatrix::column_cells(int c) const {
  std::vector<int> out;
  for (int r = 0; r < rows_; ++r)
    if (get(r, c)) out.push_back(r);
  return out;
}

std::vector<int> SupportMatrix::row_cells(int r) const {
  std::vector<int> out;
  for (int c = 0; c < cols_; ++c)
    if (get(r, c)) out.push_back(c);
  return out;
}

int SupportMatrix::column_count(int c) const {
  int n = 0;
  for (int r = 0; r < rows_; ++r) n += get(r, c) ? 1 : 0;
  return n;
}

int SupportMatrix::row_count(int r) const {
  int n = 0;
  for (int c = 0; c < cols_; ++c) n += get(r, c) ? 1 : 0;
  return n;
}

std::vector<int> SupportMatrix::colsupp() const {
  std::vector<int> out;
  for (int c = 0; c < cols_; ++c)
    if (!column_empty(c)) out.push_back(c);
  return out;
}

std::vector<std::pair<int, int>> SupportMatrix::cells() const {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c)
      if (get(r, c)) out.emplace_back(r, c);
  return out;
}

SupportMatrix SupportMatrix::restrict_cols(const std::vector<int>& J) const {
  SupportMatrix out(rows_, static_cast<int>(J.size()));
  for (int j = 0; j < static_cast<int>(J.size()); ++j) {
    require_dims(J[static_cast<size_t>(j)] >= 0 && J[static_cast<size_t>(j)] < cols_, "column index out of range");
    for (int r = 0; r < rows_; ++r)
      if (get(r, J[static_cast<size_t>(j)])) out.set(r, j);
  }
  return out;
}

SupportMatrix SupportMatrix::restrict_rows(const std::vector<int>& I) const {
  SupportMatrix out(static_cast<int>(I.size()), cols_);
  for (int i = 0; i < static_cast<int>(I.size()); ++i) {
    require_dims(I[static_cast<size_t>(i)] >= 0 && I[static_cast<size_t>(i)] < rows_, "row index out of range");
    for (int c = 0; c < cols_; ++c)
      if (get(I[static_cast<size_t>(i)], c)) out.set(i, c);
  }
  return out;
}

SupportMatrix SupportMatrix::transpose() const {
  SupportMatrix out(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c)
      if (get(r, c)) out.set(c, r);
  return out;
}

SupportMatrix SupportMatrix::permute_cols(const std::vector<int>& perm) const {
  require_dims(static_cast<int>(perm.size()) == cols_, "permutation size differs from cols");
  SupportMatrix out(rows_, cols_);
  for (int j = 0; j < cols_; ++j)
    for (int r = 0; r < rows_; ++r)
      if (get(r, perm[static_cast<size_t>(j)])) out.set(r, j);
  return out;
}

std::uint64_t SupportMatrix::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(rows_));
  mix(static_cast<std::uint64_t>(cols_));
  for (auto w : bits_) mix(w);
  return h;
}

std::vector<int> colsupp(const SupportMatrix& S) { return S.colsupp(); }

SupportPair::SupportPair(SupportMatrix l, SupportMatrix r) : left(std::move(l)), right(std::move(r)) {
  require_dims(left.cols() == right.cols(), "support pair must share the inner dimension");
}

bool SupportPair::operator<(const SupportPair& o) const {
  if (left < o.left) return true;
  if (o.left < left) return false;
  return right < o.right;
}

// --------------------------------------------------------------------------
// SupportFamily
// --------------------------------------------------------------------------

SupportFamily SupportFamily::global_sparse(int rows, int cols, long s) {
  require(s >= 0 && s <= static_cast<long>(rows) * cols, "global sparsity out of bounds");
  SupportFamily F;
  F.kind_ = FamilyKind::GlobalSparse;
  F.rows_ = rows;
  F.cols_ = cols;
  F.param_ = s;
  return F;
}

SupportFamily SupportFamily::column_sparse(int rows, int cols, long k) {
  require(k >= 0 && k <= rows, "column sparsity out of bounds");
  SupportFamily F;
  F.kind_ = FamilyKind::ColumnSparse;
  F.rows_ = rows;
  F.cols_ = cols;
  F.param_ = k;
  return F;
}

SupportFamily SupportFamily::row_sparse(int rows, int cols, long l) {
  require(l >= 0 && l <= cols, "row sparsity out of bounds");
  SupportFamily F;
  F.kind_ = FamilyKind::RowSparse;
  F.rows_ = rows;
  F.cols_ = cols;
  F.param_ = l;
  return F;
}

SupportFamily SupportFamily::regular(int n, long k) {
  require(k >= 0 && k <= n, "regular sparsity out of bounds");
  SupportFamily F;
  F.kind_ = FamilyKind::Regular;
  F.rows_ = n;
  F.cols_ = n;
  F.param_ = k;
  return F;
}

SupportFamily SupportFamily::intersection(std::vector<SupportFamily> parts) {
  require(!parts.empty(), "intersection needs at least one part");
  for (const auto& p : parts)
    require_dims(p.rows() == parts[0].rows() && p.cols() == parts[0].cols(),
                 "intersection parts must share dimensions");
  SupportFamily F;
  F.kind_ = FamilyKind::Intersection;
  F.rows_ = parts[0].rows();
  F.cols_ = parts[0].cols();
  F.parts_ = std::move(parts);
  return F;
}

SupportFamily SupportFamily::enumerated(int rows, int cols, std::vector<SupportMatrix> members) {
  for (const auto& S : members)
    require_dims(S.rows() == rows && S.cols() == cols, "enumerated members must share dimensions");
  SupportFamily F;
  F.kind_ = FamilyKind::Enumerated;
  F.rows_ = rows;
  F.cols_ = cols;
  F.members_ = sorted_unique(std::move(members));
  return F;
}

unsigned long long SupportFamily::cardinality_bound() const {
  switch (kind_) {
    case FamilyKind::GlobalSparse:
      return binomial_prefix(rows_ * cols_, param_);
    case FamilyKind::ColumnSparse: {
      unsigned long long per = binomial_prefix(rows_, param_);
      unsigned long long out = 1;
      for (int c = 0; c < cols_; ++c) out = sat_mul(out, per);
      return out;
    }
    case FamilyKind::RowSparse: {
      unsigned long long per = binomial_prefix(cols_, param_);
      unsigned long long out = 1;
      for (int r = 0; r < rows_; ++r) out = sat_mul(out, per);
      return out;
    }
    case FamilyKind::Regular: {
      unsigned long long col_bound = SupportFamily::column_sparse(rows_, cols_, param_).cardinality_bound();
      unsigned long long row_bound = SupportFamily::row_sparse(rows_, cols_, param_).cardinality_bound();
      return std::min(col_bound, row_bound);
    }
    case FamilyKind::Intersection: {
      unsigned long long out = kCountCap;
      for (const auto& p : parts_) out = std::min(out, p.cardinality_bound());
      return out;
    }
    case FamilyKind::Enumerated:
      return members_.size();
  }
  return kCountCap;
}

bool SupportFamily::downward_closed_by_construction() const {
  switch (kind_) {
    case FamilyKind::GlobalSparse:
    case FamilyKind::ColumnSparse:
    case FamilyKind::RowSparse:
    case FamilyKind::Regular:
      return true;
    case FamilyKind::Intersection:
      return std::all_of(parts_.begin(), parts_.end(),
                         [](const SupportFamily& p) { return p.downward_closed_by_construction(); });
    case FamilyKind::Enumerated:
      return false;
  }
  return false;
}

std::string SupportFamily::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case FamilyKind::GlobalSparse: os << "global:s=" << param_; break;
    case FamilyKind::ColumnSparse: os << "col:k=" << param_; break;
    case FamilyKind::RowSparse: os << "row:l=" << param_; break;
    case FamilyKind::Regular: os << "regular:k=" << param_; break;
    case FamilyKind::Intersection: {
      os << "and:";
      for (size_t i = 0; i < parts_.size(); ++i) {
        if (i) os << "+";
        os << parts_[i].describe();
      }
      break;
    }
    case FamilyKind::Enumerated: os << "list[" << members_.size() << "]"; break;
  }
  os << " on " << rows_ << "x" << cols_;
  return os.str();
}

bool member(const SupportMatrix& S, const SupportFamily& F) {
  require_dims(S.rows() == F.rows() && S.cols() == F.cols(), "support dims differ from family dims");
  switch (F.kind()) {
    case FamilyKind::GlobalSparse:
      return S.count() <= F.param();
    case FamilyKind::ColumnSparse: {
      for (int c = 0; c < S.cols(); ++c)
        if (S.column_count(c) > F.param()) return false;
      return true;
    }
    case FamilyKind::RowSparse: {
      for (int r = 0; r < S.rows(); ++r)
        if (S.row_count(r) > F.param()) return false;
      return true;
    }
    case FamilyKind::Regular: {
      for (int c = 0; c < S.cols(); ++c)
        if (S.column_count(c) > F.param()) return false;
      for (int r = 0; r < S.rows(); ++r)
        if (S.row_count(r) > F.param()) return false;
      return true;
    }
    case FamilyKind::Intersection:
      return std::all_of(F.parts().begin(), F.parts().end(),
                         [&](const SupportFamily& p) { return member(S, p); });
    case FamilyKind::Enumerated:
      return std::binary_search(F.listed_members().begin(), F.listed_members().end(), S);
  }
  return false;
}

namespace {

/// Per-column (or per-row) subset patterns with at most `cap` ones, as row
/// index lists.
std::vector<std::vector<int>> small_subsets(int n, long cap) {
  std::vector<std::vector<int>> out;
  for_each_small_subset(n, cap, [&](const std::vector<int>& pick) { out.push_back(pick); });
  return out;
}

std::vector<SupportMatrix> enumerate_impl(const SupportFamily& F, const Budget& budget) {
  check_budget(F.cardinality_bound(), budget, "enumerate_family");
  std::vector<SupportMatrix> out;
  switch (F.kind()) {
    case FamilyKind::GlobalSparse: {
      for_each_small_subset(F.rows() * F.cols(), F.param(), [&](const std::vector<int>& pick) {
        SupportMatrix S(F.rows(), F.cols());
        for (int p : pick) S.set(p / F.cols(), p % F.cols());
        out.push_back(std::move(S));
      });
      break;
    }
    case FamilyKind::ColumnSparse: {
      auto per = small_subsets(F.rows(), F.param());
      std::vector<size_t> idx(static_cast<size_t>(F.cols()), 0);
      while (true) {
        SupportMatrix S(F.rows(), F.cols());
        for (int c = 0; c < F.cols(); ++c)
          for (int r : per[idx[static_cast<size_t>(c)]]) S.set(r, c);
        out.push_back(std::move(S));
        int c = F.cols() - 1;
        while (c >= 0 && ++idx[static_cast<size_t>(c)] == per.size()) idx[static_cast<size_t>(c--)] = 0;
        if (c < 0) break;
      }
      if (F.cols() == 0) out.emplace_back(F.rows(), 0);
      break;
    }
    case FamilyKind::RowSparse: {
      auto per = small_subsets(F.cols(), F.param());
      std::vector<size_t> idx(static_cast<size_t>(F.rows()), 0);
      while (true) {
        SupportMatrix S(F.rows(), F.cols());
        for (int r = 0; r < F.rows(); ++r)
          for (int c : per[idx[static_cast<size_t>(r)]]) S.set(r, c);
        out.push_back(std::move(S));
        int r = F.rows() - 1;
        while (r >= 0 && ++idx[static_cast<size_t>(r)] == per.size()) idx[static_cast<size_t>(r--)] = 0;
        if (r < 0) break;
      }
      if (F.rows() == 0) out.emplace_back(0, F.cols());
      break;
    }
    case FamilyKind::Regular: {
      auto base = enumerate_impl(SupportFamily::column_sparse(F.rows(), F.cols(), F.param()), budget);
      auto row_part = SupportFamily::row_sparse(F.rows(), F.cols(), F.param());
      for (auto& S : base)
        if (member(S, row_part)) out.push_back(std::move(S));
      break;
    }
    case FamilyKind::Intersection: {
      // Walk the part with the smallest closed-form bound, filter by the rest.
      size_t best = 0;
      for (size_t i = 1; i < F.parts().size(); ++i)
        if (F.parts()[i].cardinality_bound() < F.parts()[best].cardinality_bound()) best = i;
      auto base = enumerate_impl(F.parts()[best], budget);
      for (auto& S : base) {
        bool ok = true;
        for (size_t i = 0; i < F.parts().size() && ok; ++i)
          if (i != best) ok = member(S, F.parts()[i]);
        if (ok) out.push_back(std::move(S));
      }
      break;
    }
    case FamilyKind::Enumerated:
      out = F.listed_members();
      break;
  }
  return sorted_unique(std::move(out));
}

bool all_parts_classical(const SupportFamily& F) {
  switch (F.kind()) {
    case FamilyKind::GlobalSparse:
    case FamilyKind::ColumnSparse:
    case FamilyKind::RowSparse:
    case FamilyKind::Regular:
      return true;
    case FamilyKind::Intersection:
      return std::all_of(F.parts().begin(), F.parts().end(), all_parts_classical);
    case FamilyKind::Enumerated:
      return false;
  }
  return false;
}

}  // namespace

std::vector<SupportMatrix> enumerate_family(const SupportFamily& F, const Budget& budget) {
  return enumerate_impl(F, budget);
}

SupportFamily signature(const SupportFamily& Theta, const std::vector<int>& J, const Budget& budget) {
  for (int j : J) require(j >= 0 && j < Theta.cols(), "signature index out of range");
  if (J.empty())
    return SupportFamily::enumerated(Theta.rows(), 0, {SupportMatrix(Theta.rows(), 0)});
  int w = static_cast<int>(J.size());
  // Restriction of a sparsity bound is the same bound on fewer columns: a
  // restricted member keeps the bound, and zero-filling the removed columns
  // lifts any bounded pattern back into the family. The same zero-fill
  // witnesses all parts of an intersection at once.
  switch (Theta.kind()) {
    case FamilyKind::GlobalSparse:
      return SupportFamily::global_sparse(Theta.rows(), w, std::min<long>(Theta.param(), static_cast<long>(Theta.rows()) * w));
    case FamilyKind::ColumnSparse:
      return SupportFamily::column_sparse(Theta.rows(), w, Theta.param());
    case FamilyKind::RowSparse:
      return SupportFamily::row_sparse(Theta.rows(), w, std::min<long>(Theta.param(), w));
    case FamilyKind::Regular:
      return SupportFamily::intersection(
          {SupportFamily::column_sparse(Theta.rows(), w, Theta.param()),
           SupportFamily::row_sparse(Theta.rows(), w, std::min<long>(Theta.param(), w))});
    case FamilyKind::Intersection: {
      if (all_parts_classical(Theta)) {
        std::vector<SupportFamily> parts;
        parts.reserve(Theta.parts().size());
        for (const auto& p : Theta.parts()) parts.push_back(signature(p, J, budget));
        return SupportFamily::intersection(std::move(parts));
      }
      break;
    }
    case FamilyKind::Enumerated:
      break;
  }
  auto members = enumerate_family(Theta, budget);
  std::vector<SupportMatrix> out;
  out.reserve(members.size());
  for (const auto& S : members) out.push_back(S.restrict_cols(J));
  return SupportFamily::enumerated(Theta.rows(), w, std::move(out));
}

namespace {

SupportMatrix fingerprint_of(const SupportMatrix& S, const std::vector<std::vector<int>>& partition) {
  SupportMatrix out(S.rows(), static_cast<int>(partition.size()));
  for (int b = 0; b < static_cast<int>(partition.size()); ++b)
    for (int c : partition[static_cast<size_t>(b)])
      for (int r = 0; r < S.rows(); ++r)
        if (S.get(r, c)) out.set(r, b);
  return out;
}

void check_partition(const SupportFamily& Theta, const std::vector<std::vector<int>>& partition) {
  std::vector<char> seen(static_cast<size_t>(Theta.cols()), 0);
  for (const auto& block : partition) {
    require(!block.empty(), "fingerprint partition blocks must be nonempty");
    for (int c : block) {
      require(c >= 0 && c < Theta.cols(), "fingerprint partition index out of range");
      require(!seen[static_cast<size_t>(c)], "fingerprint partition blocks must be disjoint");
      seen[static_cast<size_t>(c)] = 1;
    }
  }
  for (char s : seen) require(s, "fingerprint partition must cover all columns");
}

}  // namespace

SupportFamily fingerprint(const SupportFamily& Theta, const std::vector<std::vector<int>>& partition,
                          const Budget& budget) {
  check_partition(Theta, partition);
  int K = static_cast<int>(partition.size());
  bool equal_blocks = true;
  for (const auto& block : partition) equal_blocks &= (block.size() == partition[0].size());
  long c = static_cast<long>(partition.empty() ? 0 : partition[0].size());
  // Closed forms: a global or per-row bound survives the blockwise union
  // untouched (each flagged output cell needs at least one input cell, and
  // one suffices); a per-column bound scales by the block size when blocks
  // are equal. The minimal realizer places exactly one input cell per
  // flagged output cell, spreading inside a block as evenly as needed, so it
  // witnesses every part of an intersection simultaneously.
  switch (Theta.kind()) {
    case FamilyKind::GlobalSparse:
      return SupportFamily::global_sparse(Theta.rows(), K, std::min<long>(Theta.param(), static_cast<long>(Theta.rows()) * K));
    case FamilyKind::RowSparse:
      return SupportFamily::row_sparse(Theta.rows(), K, std::min<long>(Theta.param(), K));
    case FamilyKind::ColumnSparse:
      if (equal_blocks)
        return SupportFamily::column_sparse(Theta.rows(), K,
                                            std::min<long>(Theta.param() * c, Theta.rows()));
      break;
    case FamilyKind::Regular:
      if (equal_blocks)
        return SupportFamily::intersection(
            {SupportFamily::row_sparse(Theta.rows(), K, std::min<long>(Theta.param(), K)),
             SupportFamily::column_sparse(Theta.rows(), K, std::min<long>(Theta.param() * c, Theta.rows()))});
      break;
    case FamilyKind::Intersection: {
      if (all_parts_classical(Theta)) {
        bool closed = true;
        std::vector<SupportFamily> parts;
        for (const auto& p : Theta.parts()) {
          if ((p.kind() == FamilyKind::ColumnSparse || p.kind() == FamilyKind::Regular) && !equal_blocks) {
            closed = false;
            break;
          }
          parts.push_back(fingerprint(p, partition, budget));
        }
        if (closed) return SupportFamily::intersection(std::move(parts));
      }
      break;
    }
    case FamilyKind::Enumerated:
      break;
  }
  auto members = enumerate_family(Theta, budget);
  std::vector<SupportMatrix> out;
  out.reserve(members.size());
  for (const auto& S : members) out.push_back(fingerprint_of(S, partition));
  return SupportFamily::enumerated(Theta.rows(), K, std::move(out));
}

SupportFamily completion(const SupportFamily& Theta, const Budget& budget) {
  if (Theta.downward_closed_by_construction()) return Theta;
  auto members = enumerate_family(Theta, budget);
  std::set<SupportMatrix> closed;
  unsigned long long total = 0;
  for (const auto& S : members) {
    auto cs = S.cells();
    unsigned long long subsets = cs.size() >= 62 ? kCountCap : (1ULL << cs.size());
    total = sat_add(total, subsets);
    check_budget(total, budget, "completion");
    for (unsigned long long mask = 0; mask < subsets; ++mask) {
      SupportMatrix T(S.rows(), S.cols());
      for (size_t i = 0; i < cs.size(); ++i)
        if (mask & (1ULL << i)) T.set(cs[i].first, cs[i].second);
      closed.insert(std::move(T));
    }
  }
  return SupportFamily::enumerated(Theta.rows(), Theta.cols(),
                                   std::vector<SupportMatrix>(closed.begin(), closed.end()));
}

// --------------------------------------------------------------------------
// PairFamily
// --------------------------------------------------------------------------

PairFamily PairFamily::product(SupportFamily left, SupportFamily right) {
  require_dims(left.cols() == right.cols(), "product factor families must share the inner dimension");
  PairFamily F;
  F.is_product_ = true;
  F.left_ = std::move(left);
  F.right_ = std::move(right);
  return F;
}

PairFamily PairFamily::enumerated(std::vector<SupportPair> pairs) {
  require(!pairs.empty(), "enumerated pair family must be nonempty");
  for (const auto& p : pairs)
    require_dims(p.left.rows() == pairs[0].left.rows() && p.right.rows() == pairs[0].right.rows() &&
                     p.left.cols() == pairs[0].left.cols(),
                 "enumerated pairs must share dimensions");
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  PairFamily F;
  F.is_product_ = false;
  F.pairs_ = std::move(pairs);
  return F;
}

int PairFamily::left_rows() const { return is_product_ ? left_.rows() : pairs_[0].left.rows(); }
int PairFamily::right_rows() const { return is_product_ ? right_.rows() : pairs_[0].right.rows(); }
int PairFamily::inner_dim() const { return is_product_ ? left_.cols() : pairs_[0].left.cols(); }

unsigned long long PairFamily::cardinality_bound() const {
  if (is_product_) return sat_mul(left_.cardinality_bound(), right_.cardinality_bound());
  return pairs_.size();
}

std::string PairFamily::describe() const {
  if (is_product_) return left_.describe() + " * " + right_.describe();
  return "pairs[" + std::to_string(pairs_.size()) + "]";
}

bool pair_member(const SupportPair& S, const PairFamily& Omega) {
  if (Omega.is_product()) return member(S.left, Omega.left()) && member(S.right, Omega.right());
  return std::binary_search(Omega.listed_pairs().begin(), Omega.listed_pairs().end(), S);
}

std::vector<SupportPair> enumerate_pairs(const PairFamily& Omega, const Budget& budget) {
  if (!Omega.is_product()) return Omega.listed_pairs();
  check_budget(Omega.cardinality_bound(), budget, "enumerate_pairs");
  auto lefts = enumerate_family(Omega.left(), budget);
  auto rights = enumerate_family(Omega.right(), budget);
  std::vector<SupportPair> out;
  out.reserve(lefts.size() * rights.size());
  for (const auto& L : lefts)
    for (const auto& R : rights) out.emplace_back(L, R);
  return out;
}

namespace {

unsigned long long factorial_sat(int n) {
  unsigned long long out = 1;
  for (int i = 2; i <= n; ++i) out = sat_mul(out, static_cast<unsigned long long>(i));
  return out;
}

bool family_permutation_closed(const SupportFamily& F, const Budget& budget) {
  if (all_parts_classical(F)) return true;  // sparsity predicates ignore column order
  auto members = enumerate_family(F, budget);
  int r = F.cols();
  check_budget(sat_mul(members.size(), factorial_sat(r)), budget, "is_stable_by_permutation");
  std::vector<int> perm(static_cast<size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (const auto& S : members)
      if (!std::binary_search(members.begin(), members.end(), S.permute_cols(perm))) return false;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return true;
}

}  // namespace

bool is_stable_by_permutation(const PairFamily& Omega, const Budget& budget) {
  if (Omega.is_product())
    return family_permutation_closed(Omega.left(), budget) &&
           family_permutation_closed(Omega.right(), budget);
  const auto& pairs = Omega.listed_pairs();
  int r = Omega.inner_dim();
  check_budget(sat_mul(pairs.size(), factorial_sat(r)), budget, "is_stable_by_permutation");
  std::vector<int> perm(static_cast<size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (const auto& p : pairs) {
      SupportPair q(p.left.permute_cols(perm), p.right.permute_cols(perm));
      if (!std::binary_search(pairs.begin(), pairs.end(), q)) return false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return true;
}

namespace {

/// DFS over free cells; sparsity predicates are downward closed, so a branch
/// dies as soon as the partial pattern leaves the family.
void supersets_dfs(const SupportFamily& F, SupportMatrix& cur, const std::vector<std::pair<int, int>>& free_cells,
                   size_t next, std::vector<SupportMatrix>& out, const Budget& budget) {
  if (member(cur, F)) {
    out.push_back(cur);
    check_budget(out.size(), budget, "enumerate_supersets");
  } else {
    return;  // supersets of a violating pattern violate too
  }
  for (size_t i = next; i < free_cells.size(); ++i) {
    cur.set(free_cells[i].first, free_cells[i].second, true);
    supersets_dfs(F, cur, free_cells, i + 1, out, budget);
    cur.set(free_cells[i].first, free_cells[i].second, false);
  }
}

}  // namespace

std::vector<SupportMatrix> enumerate_supersets(const SupportFamily& F, const SupportMatrix& base,
                                               const Budget& budget) {
  require_dims(base.rows() == F.rows() && base.cols() == F.cols(), "base dims differ from family dims");
  if (F.kind() == FamilyKind::Enumerated) {
    std::vector<SupportMatrix> out;
    for (const auto& S : F.listed_members())
      if (base.is_subset_of(S)) out.push_back(S);
    return out;
  }
  std::vector<std::pair<int, int>> free_cells;
  for (int r = 0; r < F.rows(); ++r)
    for (int c = 0; c < F.cols(); ++c)
      if (!base.get(r, c)) free_cells.emplace_back(r, c);
  std::vector<SupportMatrix> out;
  SupportMatrix cur = base;
  supersets_dfs(F, cur, free_cells, 0, out, budget);
  return sorted_unique(std::move(out));
}

std::vector<SupportPair> enumerate_containing_pairs(const PairFamily& Omega, const SupportPair& base,
                                                    const Budget& budget) {
  std::vector<SupportPair> out;
  if (!Omega.is_product()) {
    for (const auto& p : Omega.listed_pairs())
      if (base.left.is_subset_of(p.left) && base.right.is_subset_of(p.right)) out.push_back(p);
    return out;
  }
  auto lefts = enumerate_supersets(Omega.left(), base.left, budget);
  auto rights = enumerate_supersets(Omega.right(), base.right, budget);
  check_budget(sat_mul(lefts.size(), rights.size()), budget, "enumerate_containing_pairs");
  for (const auto& L : lefts)
    for (const auto& R : rights) out.emplace_back(L, R);
  return out;
}

}  // namespace sfid
