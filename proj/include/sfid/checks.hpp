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

// Three-valued outcome of a decision procedure. Holds and Fails are both
// certified; Unknown means no implemented criterion settled the question (or
// an enumeration budget tripped before one could).
enum class Status { Holds, Fails, Unknown };

const char* status_name(Status s);

// Decision rules the library applies. Every rule owns a stable tag string;
// verdicts list the tags of the rules that produced them, and reports and the
// CLI print the tags verbatim so runs stay comparable across versions.
enum class Rule {
  ZeroColumnRecipe,         // toggle a zero column to build an inequivalent pair
  IdenticalColumnSupports,  // the two factors' column supports must coincide
  MaximalColumnSupports,    // column supports maximal among containing members
  StableFamilyCombination,  // degeneracy screens + tuple uniqueness combine
  TupleLift,                // uniqueness transfers to the contribution tuple
  RightColumnInclusion,     // right columns vanish wherever the left ones do
  RestrictionToSupport,     // restriction to the nonzero columns of the left factor
  ColumnNormalization,      // rescaling that merges collinear columns
  GroupedCharacterization,  // grouped-column criterion for right identifiability
  LinearSystemUniqueness,   // per-row independence / feasibility criterion
  OnesRowUniqueness,        // per-class single-ones-row criterion
  PerSupportSplit,          // support identifiability + per-support uniqueness
  SupportIdentifiabilitySC, // sufficient condition for support identifiability
  FixedSupportNC,           // necessary conditions at a fixed support pair
  TwoBlockChainClosure,     // exact decision for the two-rectangle chain motif
  DisjointSupports,         // pairwise disjoint rank-one supports decide exactly
  ScalingOnlyAmbiguity,     // disjoint supports leave only scaling freedom
  UniformTupleFamily,       // uniform tuple uniqueness across a family
  UniformRightGrouped,      // uniform right identifiability, grouped columns
  InjectivityUnionPairs,    // injectivity via unions of two row supports
  UniformOnesRow,           // uniform per-class single-ones-row criterion
  ClassicalRowSparse,       // closed-form threshold, row-sparse family
  ClassicalColumnSparse,    // closed-form threshold, column-sparse family
  ClassicalRowAndColumn,    // closed-form threshold, combined sparsity
  ClassicalGlobalSparse,    // closed-form threshold, global sparsity
};

// Stable tag string for a rule, as printed in provenance lists and reports.
const char* rule_tag(Rule r);

// Outcome of a check. A Fails verdict always carries a witness: an
// alternative factorization of the same product (with an unrounded copy of
// the modified right factor when it was computed in exact arithmetic), an
// alternative contribution tuple, a pair of support tuples, or a descriptor
// of the violated condition. Counterexample witnesses are re-verified before
// they are emitted.
struct Verdict {
  Status status = Status::Unknown;
  std::optional<FactorPair> counterexample;
  std::optional<QMatrix> counterexample_y_exact;
  std::optional<RankOneTuple> tuple_counterexample;
  std::optional<std::pair<RankOneSupportTuple, RankOneSupportTuple>> support_tuple_witness;
  std::optional<std::string> descriptor;
  std::vector<std::string> provenance;
  Tolerance tolerance_used;
};

// True iff the factor columns vanish together: column i of X is zero exactly
// when column i of Y is (under the tolerance).
bool in_IC(const FactorPair& p, const Tolerance& tol);

// Checks that the factor column supports are maximal among the members of
// omega containing the pair: no containing member leaves room for a zero
// column of X or Y to become nonzero. Throws NotInFamily when no member of
// omega covers the pair's supports.
Verdict in_MC(const FactorPair& p, const PairFamily& omega, const Tolerance& tol,
              const Budget& budget = Budget::from_env());

// Decides whether Y is, up to equivalence, the only right factor completing X
// within the family: every Y' supported inside a member of theta with
// X Y'^T = X Y^T must equal Y up to a column permutation and scaling that fix
// X. Fails carries a verified alternative right factor; Unknown occurs only
// when the enumeration budget trips.
Verdict check_right_identifiability(const FactorPair& p, const SupportFamily& theta,
                                    const Tolerance& tol,
                                    const Budget& budget = Budget::from_env());

// Screens the rank-one contributions of the pair against the conditions every
// uniquely decomposable instance must satisfy at the fixed support pair s,
// then applies the exact closures (pairwise disjoint supports; the
// two-rectangle chain motif). Holds and Fails are certified; Unknown means
// the necessary conditions passed but no exact closure applies.
Verdict check_fixed_support_nc(const FactorPair& p, const SupportPair& s,
                               const Tolerance& tol);

// Sufficient condition for support identifiability of the contribution tuple
// within the family: every lifted member must have pairwise disjoint
// components, and every completion tuple partitioning supp(Z) into rank-one
// blocks must be a permutation of every other. Returns Holds or Unknown,
// never Fails.
Verdict check_support_identifiability_sc(const RankOneTuple& c, const PairFamily& omega,
                                         const Tolerance& tol,
                                         const Budget& budget = Budget::from_env());

// Full instance decision for uniqueness up to permutation and scaling within
// a permutation-stable family: degeneracy screens, the support
// identifiability screen, and the per-support exact closures, merged as
// Fails > Unknown > Holds. Throws NotStable when omega is not stable under
// simultaneous column permutations, and NotInFamily when the pair's supports
// are not covered by omega.
Verdict check_instance_ps_uniqueness(const FactorPair& p, const PairFamily& omega,
                                     const Tolerance& tol,
                                     const Budget& budget = Budget::from_env());

}  // namespace sfid
