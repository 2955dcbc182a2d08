#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfid/base.hpp"
#include "sfid/lifting.hpp"
#include "sfid/rational.hpp"
#include "sfid/supports.hpp"

namespace sfid {

// Brute-force ground truth. Everything in this header decides by exhaustion,
// explicit kernels, or direct construction, deliberately avoiding the
// structural criteria used by the fast checkers so the two routes can be
// compared in tests.

enum class OracleVerdict { Unique, NotUnique, Inconclusive };

struct OracleReport {
  OracleVerdict verdict = OracleVerdict::Inconclusive;
  long long solutions_examined = 0;
  std::string method;

  // NotUnique payloads. Which one is present depends on the producing op:
  // exhaustive right-identifiability emits an alternative factor pair with
  // the same product; the summation-injectivity kernel test emits a pair of
  // distinct rank-one tuples with equal sums.
  std::optional<FactorPair> alternative_pair;
  std::optional<std::pair<RankOneTuple, RankOneTuple>> alternative_tuples;
  // Exact alternative right factor, kept unrounded for exact-mode callers.
  std::optional<QMatrix> alternative_y_exact;
};

// Decides whether (X, Y) is, up to permutation and reciprocal scaling, the
// only factorization of X * Y^T whose right factor's support lies in the
// family: enumerates every support, solves the constrained linear system
// exactly row by row, and compares every isolated or sampled solution
// against Y. The linear algebra is exact regardless of the tolerance mode;
// the tolerance feeds the equivalence tests and support detection.
OracleReport oracle_right_identifiability(const FactorPair& p, const SupportFamily& theta,
                                          const Tolerance& tol,
                                          const Budget& budget = Budget::from_env());

// Kruskal rank by exhaustive subsets with determinants computed by Laplace
// minor expansion over exact rationals (a route disjoint from the
// elimination-based rank used elsewhere). Hard cap of 20 columns.
int oracle_kruskal_rank(const CMat& m);

// Injectivity of the tuple-summation map restricted to the given rank-one
// support constraints, decided by building the explicit 0/1 coefficient
// matrix and testing its kernel. NotUnique comes with two single-entry
// tuples (+E/-E versus +2E/-2E on an overlap cell) whose sums agree.
OracleReport oracle_A_injectivity(const RankOneSupportTuple& s);

// Constructive counterexample to uniform right identifiability for a
// deficient X: splits a kernel vector of a minimal dependent column subset
// across two right factors, or falls back to scaling-shift and two-row
// constructions when the dependent subset is a collinear pair. Absent when
// X meets the threshold for the family or no construction fits the budgets.
std::optional<std::pair<CMat, CMat>> construct_uniform_counterexample(const CMat& x,
                                                                      const SupportFamily& theta,
                                                                      const Tolerance& tol);

// Randomized search for an inequivalent factorization with supports drawn
// from the pair family: alternating support-constrained least squares from
// seeded random starts. Deterministic for a fixed seed; the parallel scan
// returns the success with the lowest trial index, which is exactly what the
// serial reference returns.
std::optional<FactorPair> randomized_counterexample_search(const FactorPair& p,
                                                           const PairFamily& omega, int trials,
                                                           unsigned long long seed,
                                                           const Tolerance& tol);
std::optional<FactorPair> randomized_counterexample_search_serial(const FactorPair& p,
                                                                  const PairFamily& omega,
                                                                  int trials,
                                                                  unsigned long long seed,
                                                                  const Tolerance& tol);

}  // namespace sfid
