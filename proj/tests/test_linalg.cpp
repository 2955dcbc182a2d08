#include <doctest.h>

#include <random>

#include "sfid/linalg.hpp"
#include "sfid/rational.hpp"

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

CMat random_complex(std::mt19937& rng, int rows, int cols, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  CMat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cx(d(rng), d(rng));
  return m;
}

CMat random_int_matrix(std::mt19937& rng, int rows, int cols, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  CMat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cx(static_cast<double>(d(rng)), 0.0);
  return m;
}

}  // namespace

TEST_CASE("gaussian rational field operations") {
  GaussianRational a(mpq_class(1, 3), mpq_class(2));
  GaussianRational b(mpq_class(-2), mpq_class(1, 5));
  CHECK((a + b) - b == a);
  CHECK((a * b) / b == a);
  CHECK(a * b == b * a);
  CHECK((a / b) * b == a);
  GaussianRational i(mpq_class(0), mpq_class(1));
  CHECK(i * i == GaussianRational(mpq_class(-1)));
  CHECK_THROWS_AS(a / GaussianRational(), Error);

  // Doubles convert exactly: 0.1 is a specific dyadic rational, not 1/10.
  GaussianRational tenth = GaussianRational::from_complex(cx(0.1, 0.0));
  CHECK(tenth.to_complex() == cx(0.1, 0.0));
  CHECK(tenth.re != mpq_class(1, 10));
}

TEST_CASE("exact rank by elimination") {
  CMat id = CMat::Identity(4, 4);
  CHECK(exact_rank(QMatrix::from_complex(id)) == 4);
  CHECK(exact_rank(QMatrix::from_complex(CMat::Zero(3, 2))) == 0);
  CHECK(exact_rank(QMatrix::from_complex(mat(2, 2, {1, 2, 2, 4}))) == 1);
  // Rank drop invisible at double precision scales is still exact here.
  CMat close = mat(2, 2, {1, 1, 1, cx(1.0 + 1e-13, 0.0)});
  CHECK(exact_rank(QMatrix::from_complex(close)) == 2);
}

TEST_CASE("exact solve returns particular solution and kernel") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 4);
    int cols = 1 + static_cast<int>(rng() % 4);
    QMatrix a = QMatrix::from_complex(random_int_matrix(rng, rows, cols, -3, 3));
    std::vector<GaussianRational> x0(static_cast<size_t>(cols));
    for (auto& v : x0) v = GaussianRational(mpq_class(static_cast<int>(rng() % 7) - 3));
    std::vector<GaussianRational> b(static_cast<size_t>(rows));
    for (int i = 0; i < rows; ++i) {
      GaussianRational s;
      for (int j = 0; j < cols; ++j) s = s + a.at(i, j) * x0[static_cast<size_t>(j)];
      b[static_cast<size_t>(i)] = s;
    }
    ExactSolveResult res = exact_solve(a, b);
    REQUIRE(res.consistent);
    for (int i = 0; i < rows; ++i) {
      GaussianRational s;
      for (int j = 0; j < cols; ++j) s = s + a.at(i, j) * res.particular[static_cast<size_t>(j)];
      CHECK(s == b[static_cast<size_t>(i)]);
    }
    for (const auto& k : res.kernel) {
      for (int i = 0; i < rows; ++i) {
        GaussianRational s;
        for (int j = 0; j < cols; ++j) s = s + a.at(i, j) * k[static_cast<size_t>(j)];
        CHECK(s.is_zero());
      }
    }
    // Kernel dimension complements the rank.
    CHECK(static_cast<int>(res.kernel.size()) == cols - exact_rank(a));
  }
}

TEST_CASE("exact solve flags inconsistent systems") {
  QMatrix a = QMatrix::from_complex(mat(2, 1, {1, 1}));
  std::vector<GaussianRational> b = {GaussianRational(mpq_class(1)),
                                     GaussianRational(mpq_class(2))};
  CHECK_FALSE(exact_solve(a, b).consistent);
}

TEST_CASE("numerical rank basics") {
  Tolerance tol = Tolerance::floating();
  CHECK(numerical_rank(CMat::Identity(4, 4), tol) == 4);
  CHECK(numerical_rank(CMat::Zero(3, 2), tol) == 0);
  CHECK(numerical_rank(mat(2, 2, {1, 2, 2, 4}), tol) == 1);
  CHECK(numerical_rank(CMat(0, 3), tol) == 0);
  // Imaginary scaling keeps rank one.
  CHECK(numerical_rank(mat(2, 2, {1, cx(0, 2), 3, cx(0, 6)}), tol) == 1);
}

TEST_CASE("independence tests") {
  Tolerance tol = Tolerance::floating();
  CVec e1 = CVec::Zero(3), e2 = CVec::Zero(3);
  e1(0) = 1;
  e2(1) = 1;
  CHECK(independent({e1, e2}, tol));
  CHECK(independent({}, tol));
  CVec v(3);
  v << cx(1, 1), cx(2, 0), cx(0, -1);
  CHECK_FALSE(independent({v, 2.0 * v}, tol));
  std::mt19937 rng(5);
  CMat three = random_complex(rng, 2, 3);
  CHECK_FALSE(independent({three.col(0), three.col(1), three.col(2)}, tol));
}

TEST_CASE("kruskal rank examples and agreement with serial variant") {
  Tolerance tol = Tolerance::floating();
  CHECK(kruskal_rank(CMat::Identity(5, 5), tol) == 5);

  CMat with_zero = CMat::Identity(3, 3);
  with_zero.col(1).setZero();
  CHECK(kruskal_rank(with_zero, tol) == 0);

  CMat two = mat(2, 3, {1, 0, 1, 0, 1, 1});
  CHECK(kruskal_rank(two, tol) == 2);
  CHECK(kruskal_rank_serial(two, tol) == 2);

  std::mt19937 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    CMat m = random_int_matrix(rng, 2 + static_cast<int>(rng() % 3),
                               1 + static_cast<int>(rng() % 6), -2, 2);
    Tolerance exact = Tolerance::exact();
    int parallel = kruskal_rank(m, exact);
    CHECK(parallel == kruskal_rank_serial(m, exact));
    CHECK(parallel <= numerical_rank(m, exact));
  }
}

TEST_CASE("collinearity partition") {
  Tolerance tol = Tolerance::floating();
  CMat id = CMat::Identity(3, 3);
  CollinearityPartition p = collinearity_partition(id, tol);
  REQUIRE(p.classes.size() == 3);
  for (size_t c = 0; c < 3; ++c) {
    CHECK(p.classes[c] == std::vector<int>{static_cast<int>(c)});
    CHECK(p.representatives[c] == static_cast<int>(c));
  }

  CMat m(3, 3);
  CVec v(3), w(3);
  v << 1, cx(0, 1), 2;
  w << 0, 1, 1;
  m.col(0) = v;
  m.col(1) = 3.0 * v;
  m.col(2) = w;
  p = collinearity_partition(m, tol);
  REQUIRE(p.classes.size() == 2);
  CHECK(p.classes[0] == std::vector<int>{0, 1});
  CHECK(p.classes[1] == std::vector<int>{2});

  CMat zmid(3, 3);
  zmid.col(0) = v;
  zmid.col(1).setZero();
  zmid.col(2) = v;
  p = collinearity_partition(zmid, tol);
  REQUIRE(p.classes.size() == 1);
  CHECK(p.classes[0] == std::vector<int>{0, 2});

  // Rescaling columns never changes the classes.
  std::mt19937 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    CMat a = random_complex(rng, 3, 4);
    a.col(3) = cx(0.5, 0.5) * a.col(1);
    CollinearityPartition before = collinearity_partition(a, tol);
    CMat scaled = a;
    for (int j = 0; j < 4; ++j) scaled.col(j) *= cx(1.0 + j, -0.25 * j);
    CollinearityPartition after = collinearity_partition(scaled, tol);
    CHECK(before.classes == after.classes);
  }
}

TEST_CASE("normalize columns") {
  Tolerance tol = Tolerance::floating();
  CMat already = mat(2, 2, {1, 1, 5, 7});
  auto [xn, n] = normalize_columns(already, tol);
  CHECK(relative_error(xn, already) == 0.0);
  CHECK(n(0) == cx(1, 0));
  CHECK(n(1) == cx(1, 0));

  CMat col(3, 1);
  col << 0, cx(0, 2), 4;
  auto [cn, cs] = normalize_columns(col, tol);
  CHECK(cn(0, 0) == cx(0, 0));
  CHECK(cn(1, 0) == cx(1, 0));
  CHECK(std::abs(cn(2, 0) - cx(0, -2)) < 1e-15);

  std::mt19937 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    CMat x = random_complex(rng, 4, 3);
    auto [nx, nn] = normalize_columns(x, tol);
    CMat back = nx;
    for (int j = 0; j < 3; ++j) back.col(j) /= nn(j);
    CHECK(relative_error(back, x) <= 1e-12);
  }

  CMat with_zero = CMat::Zero(2, 2);
  with_zero(0, 0) = 1;
  CHECK_THROWS_AS(normalize_columns(with_zero, tol), ZeroColumn);
  try {
    normalize_columns(with_zero, tol);
  } catch (const ZeroColumn& e) {
    CHECK(e.index == 1);
  }
}

TEST_CASE("rank at most one on cell patterns") {
  Tolerance tol = Tolerance::floating();
  CMat z = CMat::Identity(2, 2);
  CHECK(rank_at_most_one_on(z, SupportMatrix::zero(2, 2), tol));
  SupportMatrix row = SupportMatrix::zero(2, 2);
  row.set(0, 0, true);
  row.set(0, 1, true);
  CHECK(rank_at_most_one_on(z, row, tol));
  CHECK_FALSE(rank_at_most_one_on(z, SupportMatrix::full(2, 2), tol));
}

TEST_CASE("span membership") {
  Tolerance tol = Tolerance::floating();
  CVec zero = CVec::Zero(3);
  CVec e1 = CVec::Zero(3), e2 = CVec::Zero(3), e3 = CVec::Zero(3);
  e1(0) = 1;
  e2(1) = 1;
  e3(2) = 1;
  CHECK(in_span(zero, {e2, e3}, tol));
  CHECK(in_span(zero, {}, tol));
  CHECK_FALSE(in_span(e1, {}, tol));
  CHECK_FALSE(in_span(e1, {e2, e3}, tol));
  CHECK(in_span(e1 + 2.0 * e2, {e1, e2}, tol));

  Tolerance exact = Tolerance::exact();
  CHECK(in_span(e1 + 2.0 * e2, {e1, e2}, exact));
  CHECK_FALSE(in_span(e1, {e2, e3}, exact));
}

TEST_CASE("support detection under tolerance") {
  Tolerance tol = Tolerance::floating();
  CMat m = mat(2, 2, {1, cx(1e-14, 0), 0, 2});
  SupportMatrix s = support_of(m, tol);
  CHECK(s.get(0, 0));
  CHECK_FALSE(s.get(0, 1));  // below 1e-10 relative to the max entry
  CHECK_FALSE(s.get(1, 0));
  CHECK(s.get(1, 1));
  CHECK(nonzero_columns(m, tol) == std::vector<int>{0, 1});

  CMat z = CMat::Zero(2, 3);
  z(1, 2) = cx(0, 3);
  CHECK(nonzero_columns(z, tol) == std::vector<int>{2});

  Tolerance exact = Tolerance::exact();
  CHECK(support_of(m, exact).get(0, 1));  // exact mode keeps tiny entries
}

TEST_CASE("float and exact rank agree on small integer matrices") {
  std::mt19937 rng(41);
  Tolerance tol = Tolerance::floating();
  Tolerance exact = Tolerance::exact();
  for (int trial = 0; trial < 200; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 6);
    int cols = 1 + static_cast<int>(rng() % 6);
    CMat m = random_int_matrix(rng, rows, cols, -5, 5);
    CHECK(numerical_rank(m, tol) == numerical_rank(m, exact));
  }
}

TEST_CASE("kruskal rank never exceeds rank") {
  std::mt19937 rng(43);
  Tolerance tol = Tolerance::floating();
  for (int trial = 0; trial < 50; ++trial) {
    CMat m = random_complex(rng, 1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 5));
    if (trial % 3 == 0 && m.cols() >= 2) m.col(0) = cx(2, -1) * m.col(m.cols() - 1);
    CHECK(kruskal_rank(m, tol) <= numerical_rank(m, tol));
  }
}
