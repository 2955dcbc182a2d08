#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "sfid/base.hpp"
#include "sfid/supports.hpp"

namespace sfid {

// A factorization candidate: X is m-by-r, Y is n-by-r, and the represented
// matrix is X * Y^T.
struct FactorPair {
  CMat X;
  CMat Y;

  CMat product() const { return X * Y.transpose(); }
  int inner_dim() const { return static_cast<int>(X.cols()); }
};

// Tuple of rank-one contributions (member i corresponds to column i of each
// factor) and the matching tuple of rank-one support constraints.
using RankOneTuple = std::vector<CMat>;
using RankOneSupportTuple = std::vector<SupportMatrix>;

// Certificate that two factor pairs differ only by a simultaneous column
// permutation and reciprocal diagonal scaling:
//   B.X.col(j) = scaling[perm[j]] * A.X.col(perm[j])
//   B.Y.col(j) = A.Y.col(perm[j]) / scaling[perm[j]]
struct EquivalenceWitness {
  std::vector<int> permutation;
  std::vector<cx> scaling;  // indexed by A's columns; all entries nonzero
};

// Rank-one contribution tuple of a factor pair: member i is the outer
// product of column i of X with column i of Y.
RankOneTuple phi(const CMat& x, const CMat& y);

// Support-level analogue: member i is the cell product of column i of the
// left support with column i of the right support.
RankOneSupportTuple phi_supports(const SupportPair& p);

// Entrywise sum of the tuple. Dimensions may be passed explicitly so the
// empty tuple has a well-defined shape.
CMat sum_tuple(const RankOneTuple& c, int rows = -1, int cols = -1);

// Permutation sigma with b[i] equal to a[sigma(i)] entrywise within the
// tolerance, when one exists. Zero members can only match zero members.
std::optional<std::vector<int>> tuple_equivalent(const RankOneTuple& a, const RankOneTuple& b,
                                                 const Tolerance& tol);

// Splits a rank-at-most-one matrix into an outer product c = x * y^T. The
// zero matrix maps to (0, 0); otherwise x's first nonzero entry is scaled to
// exactly 1. Throws NotRankOne when the rank exceeds one.
std::pair<CVec, CVec> factor_from_rank_one(const CMat& c, const Tolerance& tol);

// Equivalence up to simultaneous column permutation and reciprocal diagonal
// scaling; returns a certificate when the pairs are equivalent.
std::optional<EquivalenceWitness> pairs_equivalent(const FactorPair& a, const FactorPair& b,
                                                   const Tolerance& tol);

// Exact-arithmetic variant operating on unrounded rational factors; the
// certificate's scaling entries are rounded for presentation only.
class QMatrix;
std::optional<EquivalenceWitness> pairs_equivalent_exact(const QMatrix& ax, const QMatrix& ay,
                                                         const QMatrix& bx, const QMatrix& by);

// Equivalence up to a joint column permutation only (no scaling).
std::optional<std::vector<int>> pairs_equivalent_perm_only(const FactorPair& a,
                                                           const FactorPair& b,
                                                           const Tolerance& tol);

}  // namespace sfid
