#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "sfid/checks.hpp"
#include "sfid/linalg.hpp"
#include "sfid/oracle.hpp"

using namespace sfid;

namespace {

CMat mat(int rows, int cols, std::initializer_list<cx> entries) {
  REQUIRE(static_cast<size_t>(rows * cols) == entries.size());
  CMat m(rows, cols);
  auto it = entries.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

SupportMatrix grid(const std::vector<std::vector<int>>& g) { return SupportMatrix::from_grid(g); }

bool has_tag(const Verdict& v, Rule r) {
  const std::string tag = rule_tag(r);
  return std::find(v.provenance.begin(), v.provenance.end(), tag) != v.provenance.end();
}

// External witness audit: same product at ten times the tolerance, still not
// equivalent at ten times the tolerance.
void audit_fails(const FactorPair& original, const Verdict& v) {
  REQUIRE(v.status == Status::Fails);
  REQUIRE(v.counterexample.has_value());
  const FactorPair& alt = *v.counterexample;
  Tolerance loose = v.tolerance_used;
  if (!loose.is_exact()) loose.relative_eps *= 10.0;
  if (v.tolerance_used.is_exact()) {
    QMatrix ax = QMatrix::from_complex(original.X), ay = QMatrix::from_complex(original.Y);
    QMatrix bx = QMatrix::from_complex(alt.X);
    QMatrix by = v.counterexample_y_exact ? *v.counterexample_y_exact
                                          : QMatrix::from_complex(alt.Y);
    CHECK(ax * ay.transpose() == bx * by.transpose());
    CHECK_FALSE(pairs_equivalent_exact(ax, ay, bx, by).has_value());
  } else {
    CHECK(relative_error(alt.X * alt.Y.transpose(), original.X * original.Y.transpose()) <=
          10.0 * v.tolerance_used.relative_eps);
    CHECK_FALSE(pairs_equivalent(original, alt, loose).has_value());
  }
}

CMat random_int_matrix(std::mt19937& rng, int rows, int cols, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  CMat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cx(static_cast<double>(d(rng)), 0.0);
  return m;
}

SupportMatrix random_support(std::mt19937& rng, int rows, int cols, double density) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  SupportMatrix s(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (d(rng) < density) s.set(i, j);
  return s;
}

}  // namespace

TEST_CASE("columns of both factors vanish together exactly when required") {
  Tolerance tol;
  CMat x = mat(2, 2, {1, 0, 0, 1});
  CMat y = mat(2, 2, {1, 0, 0, 1});
  CHECK(in_IC(FactorPair{x, y}, tol));

  CMat x0 = mat(2, 2, {1, 0, 0, 0});  // second column zero
  CHECK_FALSE(in_IC(FactorPair{x0, y}, tol));

  CMat y0 = mat(2, 2, {1, 0, 0, 0});
  CHECK(in_IC(FactorPair{x0, y0}, tol));  // both second columns zero
}

TEST_CASE("maximality of column supports among containing members") {
  Tolerance tol;
  CMat x = mat(2, 2, {1, 0, 0, 1});
  CMat y = mat(2, 2, {1, 0, 0, 1});

  SUBCASE("a single full member containing the supports exactly") {
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 0}, {0, 1}}), grid({{1, 0}, {0, 1}})}});
    Verdict v = in_MC(FactorPair{x, y}, omega, tol);
    CHECK(v.status == Status::Holds);
    CHECK(has_tag(v, Rule::MaximalColumnSupports));
  }

  SUBCASE("a zero column that a containing member allows to grow") {
    CMat x0 = mat(2, 2, {1, 0, 0, 0});
    CMat y0 = mat(2, 2, {1, 0, 0, 0});
    PairFamily omega = PairFamily::product(SupportFamily::column_sparse(2, 2, 1),
                                           SupportFamily::column_sparse(2, 2, 1));
    Verdict v = in_MC(FactorPair{x0, y0}, omega, tol);
    CHECK(v.status == Status::Fails);
    CHECK(v.descriptor.has_value());
  }

  SUBCASE("supports outside every member") {
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 0}, {0, 0}}), grid({{1, 0}, {0, 0}})}});
    CHECK_THROWS_AS(in_MC(FactorPair{x, y}, omega, tol), NotInFamily);
  }
}

TEST_CASE("right factor recovery with an identity left factor") {
  Tolerance tol;
  CMat x = mat(2, 2, {1, 0, 0, 1});
  CMat y = mat(2, 2, {2, 3, 5, 7});
  SupportFamily theta = SupportFamily::row_sparse(2, 2, 2);  // every 2x2 support
  Verdict v = check_right_identifiability(FactorPair{x, y}, theta, tol);
  CHECK(v.status == Status::Holds);
  CHECK(has_tag(v, Rule::GroupedCharacterization));
}

TEST_CASE("mass on a right column whose left column is zero") {
  Tolerance tol;
  CMat x = mat(2, 2, {1, 0, 0, 0});  // second column zero
  CMat y = mat(2, 2, {2, 1, 3, 0});  // second column nonzero
  SupportFamily theta = SupportFamily::row_sparse(2, 2, 2);
  FactorPair p{x, y};
  Verdict v = check_right_identifiability(p, theta, tol);
  REQUIRE(v.status == Status::Fails);
  CHECK(has_tag(v, Rule::RightColumnInclusion));
  CHECK(has_tag(v, Rule::ZeroColumnRecipe));
  audit_fails(p, v);
  // The witness zeroes the offending column.
  CHECK(support_of(v.counterexample->Y, tol).column_empty(1));
}

TEST_CASE("a member allowing mass outside the live columns breaks recovery") {
  Tolerance tol;
  CMat x = mat(2, 2, {1, 0, 0, 0});
  CMat y = mat(2, 2, {2, 0, 3, 0});  // second column zero, matching x
  // One member: first column free, second column may carry a unit.
  SupportFamily theta = SupportFamily::enumerated(2, 2, {grid({{1, 1}, {1, 0}})});
  FactorPair p{x, y};
  Verdict v = check_right_identifiability(p, theta, tol);
  REQUIRE(v.status == Status::Fails);
  CHECK(has_tag(v, Rule::RestrictionToSupport));
  audit_fails(p, v);
  // The witness puts mass where the left factor cannot see it.
  CHECK_FALSE(support_of(v.counterexample->Y, tol).column_empty(1));
}

TEST_CASE("collinear left columns sharing a row of one member") {
  Tolerance tol;
  CMat x = mat(1, 2, {1, 1});  // both columns collinear
  CMat y = mat(2, 2, {1, 0, 0, 1});
  SupportFamily theta = SupportFamily::row_sparse(2, 2, 2);
  FactorPair p{x, y};
  Verdict v = check_right_identifiability(p, theta, tol);
  REQUIRE(v.status == Status::Fails);
  CHECK(has_tag(v, Rule::OnesRowUniqueness));
  audit_fails(p, v);
}

TEST_CASE("isolated per-column supports pin the right factor") {
  Tolerance tol;
  CMat x = mat(2, 2, {1, 0, 0, 1});
  CMat y = mat(2, 2, {2, 0, 0, 3});
  SupportFamily theta =
      SupportFamily::enumerated(2, 2, {grid({{1, 0}, {0, 1}})});
  Verdict v = check_right_identifiability(FactorPair{x, y}, theta, tol);
  CHECK(v.status == Status::Holds);
}

TEST_CASE("right factor support outside the family is rejected") {
  Tolerance tol;
  CMat x = mat(2, 2, {1, 0, 0, 1});
  CMat y = mat(2, 2, {1, 1, 1, 1});
  SupportFamily theta = SupportFamily::enumerated(2, 2, {grid({{1, 0}, {0, 1}})});
  CHECK_THROWS_AS(check_right_identifiability(FactorPair{x, y}, theta, tol), NotInFamily);
}

TEST_CASE("right identifiability is invariant under reciprocal column scaling") {
  Tolerance tol;
  std::mt19937 rng(7);
  const double scales[2] = {2.0, 0.5};
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 3);
    const int r = 1 + static_cast<int>(rng() % 3);
    CMat x = random_int_matrix(rng, m, r, -2, 2);
    CMat y = random_int_matrix(rng, n, r, -2, 2);
    std::vector<SupportMatrix> members;
    members.push_back(support_of(y, tol));
    for (int k = 0; k < 6; ++k) members.push_back(random_support(rng, n, r, 0.5));
    SupportFamily theta = SupportFamily::enumerated(n, r, members);

    CMat xs = x, ys = y;
    for (int j = 0; j < r; ++j) {
      const double d = scales[rng() % 2];
      xs.col(j) *= d;
      ys.col(j) /= d;
    }
    Verdict a = check_right_identifiability(FactorPair{x, y}, theta, tol);
    Verdict b = check_right_identifiability(FactorPair{xs, ys}, theta, tol);
    CAPTURE(trial);
    CHECK(a.status == b.status);
  }
}

TEST_CASE("structural recovery agrees with the exhaustive route on exact data") {
  Tolerance tol = Tolerance::exact();
  std::mt19937 rng(11);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 3);
    const int n = 1 + static_cast<int>(rng() % 3);
    const int r = 1 + static_cast<int>(rng() % 3);
    CMat x = random_int_matrix(rng, m, r, -2, 2);
    CMat y = random_int_matrix(rng, n, r, -2, 2);
    std::vector<SupportMatrix> members;
    members.push_back(support_of(y, tol));
    const int extra = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < extra; ++k) members.push_back(random_support(rng, n, r, 0.45));
    SupportFamily theta = SupportFamily::enumerated(n, r, members);
    FactorPair p{x, y};

    Verdict fast = check_right_identifiability(p, theta, tol);
    OracleReport slow = oracle_right_identifiability(p, theta, tol);
    CAPTURE(trial);
    CAPTURE(m);
    CAPTURE(n);
    CAPTURE(r);
    REQUIRE(fast.status != Status::Unknown);
    REQUIRE(slow.verdict != OracleVerdict::Inconclusive);
    CHECK((fast.status == Status::Holds) == (slow.verdict == OracleVerdict::Unique));
    if (fast.status == Status::Fails) audit_fails(p, fast);
    ++compared;
  }
  CHECK(compared == 60);
}

TEST_CASE("fixed support screening on two overlapping rectangles") {
  Tolerance tol;
  // Left pattern: both columns cover both rows. Right pattern: column a covers
  // rows {0,1}, column b covers rows {1,2}; they share row 1 only.
  SupportPair s{grid({{1, 1}, {1, 1}}), grid({{1, 0}, {1, 1}, {0, 1}})};

  SUBCASE("independent left columns with private right data") {
    CMat x = mat(2, 2, {1, 0, 0, 1});
    CMat y = mat(3, 2, {1, 0, 1, 1, 0, 1});
    Verdict v = check_fixed_support_nc(FactorPair{x, y}, s, tol);
    CHECK(v.status == Status::Holds);
    CHECK(has_tag(v, Rule::TwoBlockChainClosure));
  }

  SUBCASE("collinear left columns with overlapping patterns") {
    CMat x = mat(2, 2, {1, 1, 1, 1});
    CMat y = mat(3, 2, {1, 0, 1, 1, 0, 1});
    FactorPair p{x, y};
    Verdict v = check_fixed_support_nc(p, s, tol);
    CHECK(v.status == Status::Fails);
    CHECK(has_tag(v, Rule::FixedSupportNC));
    audit_fails(p, v);
    CHECK(support_of(v.counterexample->X, tol).is_subset_of(s.left));
    CHECK(support_of(v.counterexample->Y, tol).is_subset_of(s.right));
  }

  SUBCASE("collinear right columns shift mass on the left factor") {
    CMat x = mat(2, 2, {1, 0, 0, 1});
    // Both right columns live only on the shared row, so they are collinear
    // while the left columns stay independent.
    CMat y = mat(3, 2, {0, 0, 2, 2, 0, 0});
    FactorPair p{x, y};
    Verdict v = check_fixed_support_nc(p, s, tol);
    REQUIRE(v.status == Status::Fails);
    audit_fails(p, v);
    CHECK((v.counterexample->Y - y).norm() == 0.0);
    CHECK((v.counterexample->X - x).norm() > 0.0);
  }

  SUBCASE("exact mode carries an unrounded right-factor twin") {
    Tolerance ex = Tolerance::exact();
    CMat x = mat(2, 2, {1, 3, 2, 6});  // second column is three times the first
    CMat y = mat(3, 2, {1, 0, 1, 1, 0, 1});
    FactorPair p{x, y};
    Verdict v = check_fixed_support_nc(p, s, ex);
    REQUIRE(v.status == Status::Fails);
    REQUIRE(v.counterexample.has_value());
    REQUIRE(v.counterexample_y_exact.has_value());
    audit_fails(p, v);
  }

  SUBCASE("a missing private entry on one side leaves the question open") {
    CMat x = mat(2, 2, {1, 0, 0, 1});
    CMat y = mat(3, 2, {1, 0, 1, 1, 0, 1});
    // Drop the second column's private row; the screen passes but the
    // two-rectangle closure no longer applies.
    y(2, 1) = 0;
    Verdict v = check_fixed_support_nc(FactorPair{x, y}, s, tol);
    CHECK(v.status == Status::Unknown);
  }
}

TEST_CASE("fixed support screening accepts disjoint patterns") {
  Tolerance tol;
  SupportPair s{grid({{1, 0}, {0, 1}}), grid({{1, 0}, {0, 1}})};
  CMat x = mat(2, 2, {3, 0, 0, 4});
  CMat y = mat(2, 2, {5, 0, 0, 6});
  Verdict v = check_fixed_support_nc(FactorPair{x, y}, s, tol);
  CHECK(v.status == Status::Holds);
  CHECK(has_tag(v, Rule::DisjointSupports));
}

TEST_CASE("fixed support screening rejects factors outside the pair") {
  Tolerance tol;
  SupportPair s{grid({{1, 0}, {0, 1}}), grid({{1, 0}, {0, 1}})};
  CMat x = mat(2, 2, {1, 1, 0, 1});
  CMat y = mat(2, 2, {1, 0, 0, 1});
  CHECK_THROWS_AS(check_fixed_support_nc(FactorPair{x, y}, s, tol), NotInSupport);
}

TEST_CASE("support recovery from the summed product") {
  Tolerance tol;

  SUBCASE("disjoint patterns with a single partition") {
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 0}, {0, 1}}), grid({{1, 0}, {0, 1}})}});
    RankOneTuple c = {mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {0, 0, 0, 1})};
    Verdict v = check_support_identifiability_sc(c, omega, tol);
    CHECK(v.status == Status::Holds);
    CHECK(has_tag(v, Rule::SupportIdentifiabilitySC));
  }

  SUBCASE("a member with overlapping lifted supports is inconclusive") {
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 1}, {0, 0}}), grid({{1, 1}, {0, 0}})}});
    RankOneTuple c = {mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {0, 0, 0, 0})};
    Verdict v = check_support_identifiability_sc(c, omega, tol);
    CHECK(v.status == Status::Unknown);
  }

  SUBCASE("two genuinely different partitions of the same product support") {
    // Member one assigns everything to the first contribution; member two
    // splits the rows. Both host rank-one blocks of the all-ones product.
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 0}, {1, 0}}), grid({{1, 0}, {1, 0}})},
         SupportPair{grid({{1, 0}, {0, 1}}), grid({{1, 1}, {1, 1}})}});
    RankOneTuple c = {mat(2, 2, {1, 1, 0, 0}), mat(2, 2, {0, 0, 1, 1})};
    Verdict v = check_support_identifiability_sc(c, omega, tol);
    CHECK(v.status == Status::Unknown);
  }

  SUBCASE("tuple members above rank one are rejected") {
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 1}, {1, 1}}), grid({{1, 1}, {1, 1}})}});
    RankOneTuple c = {mat(2, 2, {1, 0, 0, 1}), mat(2, 2, {0, 0, 0, 0})};
    CHECK_THROWS_AS(check_support_identifiability_sc(c, omega, tol), NotRankOne);
  }

  SUBCASE("tuples outside every member are rejected") {
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 0}, {0, 0}}), grid({{1, 0}, {0, 0}})}});
    RankOneTuple c = {mat(2, 2, {0, 0, 0, 1}), mat(2, 2, {0, 0, 0, 0})};
    CHECK_THROWS_AS(check_support_identifiability_sc(c, omega, tol), NotInFamily);
  }
}

namespace {

PairFamily diag_antidiag_family() {
  return PairFamily::enumerated(
      {SupportPair{grid({{1, 0}, {0, 1}}), grid({{1, 0}, {0, 1}})},
       SupportPair{grid({{0, 1}, {1, 0}}), grid({{0, 1}, {1, 0}})}});
}

}  // namespace

TEST_CASE("full instance decision") {
  Tolerance tol;

  SUBCASE("disjoint supports in a permutation-stable family") {
    CMat x = mat(2, 2, {2, 0, 0, 3});
    CMat y = mat(2, 2, {5, 0, 0, 7});
    Verdict v = check_instance_ps_uniqueness(FactorPair{x, y}, diag_antidiag_family(), tol);
    CHECK(v.status == Status::Holds);
    CHECK(has_tag(v, Rule::StableFamilyCombination));
    CHECK(has_tag(v, Rule::PerSupportSplit));
  }

  SUBCASE("mismatched zero columns yield a verified counterexample") {
    CMat x = mat(2, 2, {1, 0, 0, 0});
    CMat y = mat(2, 2, {1, 0, 0, 1});  // right column 1 nonzero, left is zero
    PairFamily omega = PairFamily::product(SupportFamily::column_sparse(2, 2, 1),
                                           SupportFamily::column_sparse(2, 2, 1));
    FactorPair p{x, y};
    Verdict v = check_instance_ps_uniqueness(p, omega, tol);
    REQUIRE(v.status == Status::Fails);
    CHECK(has_tag(v, Rule::IdenticalColumnSupports));
    CHECK(has_tag(v, Rule::ZeroColumnRecipe));
    audit_fails(p, v);
  }

  SUBCASE("a growable zero column yields a verified counterexample") {
    CMat x = mat(2, 2, {1, 0, 0, 0});
    CMat y = mat(2, 2, {1, 0, 0, 0});
    PairFamily omega = PairFamily::product(SupportFamily::column_sparse(2, 2, 1),
                                           SupportFamily::column_sparse(2, 2, 1));
    FactorPair p{x, y};
    Verdict v = check_instance_ps_uniqueness(p, omega, tol);
    REQUIRE(v.status == Status::Fails);
    CHECK(has_tag(v, Rule::MaximalColumnSupports));
    audit_fails(p, v);
  }

  SUBCASE("a necessary condition violated at the only containing pair") {
    SupportPair chain{grid({{1, 1}, {1, 1}}), grid({{1, 0}, {1, 1}, {0, 1}})};
    SupportPair chain_swapped{chain.left.permute_cols({1, 0}),
                              chain.right.permute_cols({1, 0})};
    PairFamily omega = PairFamily::enumerated({chain, chain_swapped});
    CMat x = mat(2, 2, {1, 1, 1, 1});
    CMat y = mat(3, 2, {1, 0, 1, 1, 0, 1});
    Verdict v = check_instance_ps_uniqueness(FactorPair{x, y}, omega, tol);
    REQUIRE(v.status == Status::Fails);
    CHECK(has_tag(v, Rule::FixedSupportNC));
    CHECK(v.descriptor.has_value());
  }

  SUBCASE("families not stable under joint permutations are rejected") {
    PairFamily omega = PairFamily::enumerated(
        {SupportPair{grid({{1, 0}, {0, 1}}), grid({{1, 0}, {0, 1}})}});
    CMat x = mat(2, 2, {2, 0, 0, 3});
    CMat y = mat(2, 2, {5, 0, 0, 7});
    CHECK_THROWS_AS(check_instance_ps_uniqueness(FactorPair{x, y}, omega, tol), NotStable);
  }

  SUBCASE("factors outside the family are rejected") {
    CMat x = mat(2, 2, {1, 1, 1, 1});
    CMat y = mat(2, 2, {1, 1, 1, 1});
    CHECK_THROWS_AS(check_instance_ps_uniqueness(FactorPair{x, y}, diag_antidiag_family(), tol),
                    NotInFamily);
  }
}

TEST_CASE("instance verdicts are invariant under scaling and joint permutation") {
  Tolerance tol;
  std::mt19937 rng(23);
  PairFamily omega = diag_antidiag_family();
  for (int trial = 0; trial < 30; ++trial) {
    // Diagonal-supported instances, sometimes with a zeroed column.
    CMat x = CMat::Zero(2, 2), y = CMat::Zero(2, 2);
    x(0, 0) = static_cast<double>(1 + rng() % 3);
    x(1, 1) = static_cast<double>(1 + rng() % 3);
    y(0, 0) = static_cast<double>(1 + rng() % 3);
    y(1, 1) = static_cast<double>(1 + rng() % 3);
    if (rng() % 3 == 0) { x(1, 1) = 0.0; y(1, 1) = 0.0; }

    Verdict base = check_instance_ps_uniqueness(FactorPair{x, y}, omega, tol);

    CMat xs = x, ys = y;
    const double d = (rng() % 2 == 0) ? 2.0 : 0.25;
    xs.col(0) *= d;
    ys.col(0) /= d;
    Verdict scaled = check_instance_ps_uniqueness(FactorPair{xs, ys}, omega, tol);
    CHECK(base.status == scaled.status);

    CMat xp(2, 2), yp(2, 2);
    xp.col(0) = x.col(1);
    xp.col(1) = x.col(0);
    yp.col(0) = y.col(1);
    yp.col(1) = y.col(0);
    Verdict permuted = check_instance_ps_uniqueness(FactorPair{xp, yp}, omega, tol);
    CAPTURE(trial);
    CHECK(base.status == permuted.status);
  }
}
