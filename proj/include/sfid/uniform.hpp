#pragma once

#include "sfid/base.hpp"
#include "sfid/checks.hpp"
#include "sfid/lifting.hpp"
#include "sfid/supports.hpp"

namespace sfid {

// Uniform identifiability: decisions that hold for every factor pair drawn
// from a support family, rather than for one fixed instance. The general
// routes reduce to properties of the left factor's collinearity classes and
// of the family's row supports; the classical families additionally admit
// enumeration-free Kruskal-rank thresholds.

// True iff the rank-one supports are pairwise disjoint as cell sets. This is
// equivalent to injectivity of the tuple-summation map on tuples constrained
// to these supports, and hence to recovery of every tuple from its sum.
bool uniform_emd_fixed_support(const RankOneSupportTuple& s);

// For a factor pair living on a support pair whose rank-one supports are
// pairwise disjoint: Holds iff the pair is nondegenerate (columns of both
// factors vanish together, and exactly where the support columns are empty),
// in which case the pair is unique up to scaling ambiguities only.
// Throws PreconditionNotMet when the rank-one supports overlap, NotInSupport
// when the factors stray outside the support pair.
Verdict s_uniqueness_fixed_support(const FactorPair& p, const SupportPair& s,
                                   const Tolerance& tol);

// Uniform recovery of rank-one tuples from their sum, over a whole pair
// family: Holds iff every lifted member has pairwise disjoint supports and
// any two sub-tuples with equal cell unions are permutations of each other.
// Fails carries the violating pair of support tuples. Enumeration overruns
// throw EnumerationBudgetExceeded.
Verdict uniform_emd_family(const PairFamily& omega, const Budget& budget = Budget::from_env());

// Uniform right identifiability: Holds iff every right factor supported in
// the family is recoverable from X * Y^T up to permutation and scaling,
// simultaneously for all such Y. Decided by the zero-column reduction, then
// per-row independence of collinearity-class representatives against the
// family's row supports, then a per-class placement condition. Enumeration
// overruns throw EnumerationBudgetExceeded.
Verdict uniform_right_identifiability(const CMat& x, const SupportFamily& theta,
                                      const Tolerance& tol,
                                      const Budget& budget = Budget::from_env());

// Classical families admitting Kruskal-rank thresholds.
enum class ClassicalKind { RowSparse, ColumnSparse, RowAndColumn, GlobalSparse };

// Enumeration-free uniform right identifiability for the classical kinds.
// `a` is the per-row bound (RowSparse, RowAndColumn), the per-column bound
// (ColumnSparse), or the total bound (GlobalSparse); `b` is the per-column
// bound for RowAndColumn and ignored otherwise; `n` is the row count of the
// right factors. When the threshold's side conditions do not hold, the
// decision falls back to the general route and says so in the provenance.
Verdict uniform_right_classical(const CMat& x, ClassicalKind kind, int a, int b, int n,
                                const Tolerance& tol,
                                const Budget& budget = Budget::from_env());

}  // namespace sfid
