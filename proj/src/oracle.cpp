#include "sfid/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfid/linalg.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sfid {

namespace {

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

long long factorial_capped(int n, long long cap) {
  long long f = 1;
  for (int i = 2; i <= n; ++i) {
    if (f > cap / i) return cap;
    f *= i;
  }
  return f;
}

// Per-row solution of the support-constrained system X * Y'^T = Z for one
// row of Y': variables are the entries selected by the row's support.
struct RowSolution {
  std::vector<int> cols;  // selected variable columns of the row
  ExactSolveResult sol;
};

// Embeds per-row exact solutions into a full right factor; shift adds
// t times the chosen kernel direction of one row.
QMatrix assemble_candidate(int n, int r, const std::vector<RowSolution>& rows, int shift_row,
                           int shift_dir, const mpq_class& t) {
  QMatrix y(n, r);
  for (int l = 0; l < n; ++l) {
    const RowSolution& rs = rows[static_cast<size_t>(l)];
    for (size_t v = 0; v < rs.cols.size(); ++v) {
      GaussianRational val = rs.sol.particular[v];
      if (l == shift_row && shift_dir >= 0)
        val = val + GaussianRational(t) * rs.sol.kernel[static_cast<size_t>(shift_dir)][v];
      y.at(l, rs.cols[v]) = val;
    }
  }
  return y;
}

bool tuples_match(const RankOneTuple& a, const RankOneTuple& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// Determinant by Laplace expansion along the first listed row. The rows and
// cols index lists must have equal length.
GaussianRational laplace_det(const QMatrix& m, const std::vector<int>& rows,
                             const std::vector<int>& cols) {
  size_t k = rows.size();
  if (k == 0) return GaussianRational(mpq_class(1));
  if (k == 1) return m.at(rows[0], cols[0]);
  GaussianRational det;
  std::vector<int> sub_rows(rows.begin() + 1, rows.end());
  std::vector<int> sub_cols(k - 1);
  for (size_t c = 0; c < k; ++c) {
    const GaussianRational& coef = m.at(rows[0], cols[c]);
    if (coef.is_zero()) continue;
    for (size_t i = 0, j = 0; i < k; ++i)
      if (i != c) sub_cols[j++] = cols[i];
    GaussianRational term = coef * laplace_det(m, sub_rows, sub_cols);
    det = (c % 2 == 0) ? det + term : det - term;
  }
  return det;
}

// Independence of a column subset decided purely through minors: true iff
// some square row selection has nonzero determinant.
bool minor_rank_full(const QMatrix& m, const std::vector<int>& cols) {
  int j = static_cast<int>(cols.size());
  if (j == 0) return true;
  if (j > m.rows()) return false;
  std::vector<int> rows(static_cast<size_t>(j));
  std::iota(rows.begin(), rows.end(), 0);
  do {
    if (!laplace_det(m, rows, cols).is_zero()) return true;
  } while (next_combination(rows, m.rows()));
  return false;
}

// Deterministic counter-based generator: every trial gets its own stream
// derived from (seed, trial), so results do not depend on scheduling.
struct TrialRng {
  unsigned long long state;
  TrialRng(unsigned long long seed, long long trial)
      : state(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<unsigned long long>(trial + 1))) {
    next();
    next();
  }
  unsigned long long next() {
    state += 0x9E3779B97F4A7C15ULL;
    unsigned long long z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() {  // in [-1, 1)
    return static_cast<double>(next() >> 11) * (2.0 / 9007199254740992.0) - 1.0;
  }
};

// One alternating-least-squares attempt on a fixed support pair.
std::optional<FactorPair> als_attempt(const CMat& z, const SupportPair& sp, TrialRng& rng,
                                      const FactorPair& original, const Tolerance& tol) {
  int m = static_cast<int>(z.rows());
  int n = static_cast<int>(z.cols());
  int r = sp.left.cols();
  CMat x = CMat::Zero(m, r);
  for (const auto& [i, j] : sp.left.cells()) x(i, j) = cx(rng.uniform(), rng.uniform());
  CMat y = CMat::Zero(n, r);

  for (int iter = 0; iter < 50; ++iter) {
    // Right factor given the left: one least-squares solve per row of Y.
    for (int l = 0; l < n; ++l) {
      y.row(l).setZero();
      std::vector<int> sel = sp.right.row_cells(l);
      if (sel.empty()) continue;
      CMat a = select_columns(x, sel);
      CVec w = a.completeOrthogonalDecomposition().solve(z.col(l));
      for (size_t v = 0; v < sel.size(); ++v) y(l, sel[v]) = w(static_cast<Eigen::Index>(v));
    }
    // Left factor given the right, symmetrically.
    for (int k = 0; k < m; ++k) {
      x.row(k).setZero();
      std::vector<int> sel = sp.left.row_cells(k);
      if (sel.empty()) continue;
      CMat a = select_columns(y, sel);
      CVec w = a.completeOrthogonalDecomposition().solve(z.row(k).transpose());
      for (size_t v = 0; v < sel.size(); ++v) x(k, sel[v]) = w(static_cast<Eigen::Index>(v));
    }
  }
  FactorPair candidate{x, y};
  if (relative_error(candidate.product(), z) > tol.relative_eps) return std::nullopt;
  if (pairs_equivalent(original, candidate, tol)) return std::nullopt;
  return candidate;
}

}  // namespace

OracleReport oracle_right_identifiability(const FactorPair& p, const SupportFamily& theta,
                                          const Tolerance& tol, const Budget& budget) {
  int m = static_cast<int>(p.X.rows());
  int r = static_cast<int>(p.X.cols());
  int n = static_cast<int>(p.Y.rows());
  require_dims(static_cast<int>(p.Y.cols()) == r, "factors must share the inner dimension");
  require_dims(theta.rows() == n && theta.cols() == r,
               "family shape must match the right factor");

  OracleReport rep;
  rep.method = "exhaustive-support-solve";

  QMatrix qx = QMatrix::from_complex(p.X);
  QMatrix qy = QMatrix::from_complex(p.Y);
  QMatrix qz = qx * qy.transpose();

  auto inequivalent = [&](const QMatrix& alt_y) {
    if (tol.is_exact()) return !pairs_equivalent_exact(qx, qy, qx, alt_y).has_value();
    FactorPair alt{p.X, alt_y.to_complex()};
    return !pairs_equivalent(p, alt, tol).has_value();
  };
  auto emit = [&](QMatrix alt_y) {
    rep.verdict = OracleVerdict::NotUnique;
    rep.alternative_pair = FactorPair{p.X, alt_y.to_complex()};
    rep.alternative_y_exact = std::move(alt_y);
  };

  // Mass of Y sitting on zero columns of X can be deleted without changing
  // the product, and the deleted copy cannot be matched back by any
  // permutation-scaling, so it certifies non-uniqueness immediately.
  std::vector<char> x_col_nonzero(static_cast<size_t>(r), 0);
  for (int j : nonzero_columns(p.X, tol)) x_col_nonzero[static_cast<size_t>(j)] = 1;
  {
    SupportMatrix ysup = support_of(p.Y, tol);
    bool mass_outside = false;
    QMatrix trimmed = qy;
    for (int j = 0; j < r; ++j) {
      if (x_col_nonzero[static_cast<size_t>(j)]) continue;
      for (int i = 0; i < n; ++i) {
        if (ysup.get(i, j)) mass_outside = true;
        trimmed.at(i, j) = GaussianRational();
      }
    }
    if (mass_outside && inequivalent(trimmed)) {
      rep.method = "zero-column-trim";
      emit(std::move(trimmed));
      return rep;
    }
  }

  long long orbit_bound = factorial_capped(r, 4096) + 1;

  for (const SupportMatrix& s : enumerate_family(theta, budget)) {
    ++rep.solutions_examined;
    std::vector<RowSolution> rows;
    rows.reserve(static_cast<size_t>(n));
    bool feasible = true;
    long long kernel_total = 0;
    for (int l = 0; l < n && feasible; ++l) {
      RowSolution rs;
      rs.cols = s.row_cells(l);
      QMatrix a = qx.select_columns(rs.cols);
      std::vector<GaussianRational> b;
      b.reserve(static_cast<size_t>(m));
      for (int i = 0; i < m; ++i) b.push_back(qz.at(i, l));
      rs.sol = exact_solve(a, b);
      if (!rs.sol.consistent) {
        feasible = false;
        break;
      }
      kernel_total += static_cast<long long>(rs.sol.kernel.size());
      rows.push_back(std::move(rs));
    }
    if (!feasible) continue;

    if (kernel_total == 0) {
      QMatrix candidate = assemble_candidate(n, r, rows, -1, -1, 0);
      if (inequivalent(candidate)) {
        emit(std::move(candidate));
        return rep;
      }
      continue;
    }

    // A positive-dimensional solution space cannot fit inside the finite
    // orbit of Y (the original has no right-factor mass on zero columns of
    // X here, so the orbit has at most r! members). Walk a line through the
    // space until the orbit is exhausted.
    int shift_row = -1;
    for (int l = 0; l < n && shift_row < 0; ++l)
      if (!rows[static_cast<size_t>(l)].sol.kernel.empty()) shift_row = l;
    for (long long t = 0; t <= orbit_bound; ++t) {
      QMatrix candidate =
          assemble_candidate(n, r, rows, shift_row, 0, mpq_class(static_cast<long>(t)));
      if (inequivalent(candidate)) {
        emit(std::move(candidate));
        return rep;
      }
    }
    require(false, "affine solution line exhausted a finite orbit without leaving it");
  }

  rep.verdict = OracleVerdict::Unique;
  return rep;
}

int oracle_kruskal_rank(const CMat& m) {
  int n = static_cast<int>(m.cols());
  if (n > 20) throw CapExceeded("column count exceeds the exhaustive-minor cap of 20");
  if (n == 0) return 0;
  QMatrix q = QMatrix::from_complex(m);
  for (int j = 1; j <= n; ++j) {
    std::vector<int> cols(static_cast<size_t>(j));
    std::iota(cols.begin(), cols.end(), 0);
    do {
      if (!minor_rank_full(q, cols)) return j - 1;
    } while (next_combination(cols, n));
  }
  return n;
}

OracleReport oracle_A_injectivity(const RankOneSupportTuple& s) {
  OracleReport rep;
  rep.method = "summation-kernel";
  if (s.empty()) {
    rep.verdict = OracleVerdict::Unique;
    return rep;
  }
  int m = s.front().rows();
  int n = s.front().cols();
  long long total = 0;
  for (const auto& sup : s) {
    require_dims(sup.rows() == m && sup.cols() == n, "tuple members must share dimensions");
    total += sup.count();
  }
  rep.solutions_examined = total;

  // Coefficient matrix of the summation map: one column per (member, cell)
  // entry, one row per output cell.
  QMatrix a(m * n, static_cast<int>(total));
  int col = 0;
  for (const auto& sup : s)
    for (const auto& [i, j] : sup.cells()) a.at(i * n + j, col++) = GaussianRational(mpq_class(1));

  if (exact_rank(a) == static_cast<int>(total)) {
    rep.verdict = OracleVerdict::Unique;
    return rep;
  }

  rep.verdict = OracleVerdict::NotUnique;
  // With a single 1 per column, a rank defect means two members share a
  // cell; put opposite values there, doubled in the second tuple.
  for (size_t i = 0; i < s.size(); ++i) {
    for (size_t j = i + 1; j < s.size(); ++j) {
      SupportMatrix overlap = s[i] & s[j];
      if (overlap.empty()) continue;
      auto [ci, cj] = overlap.cells().front();
      RankOneTuple one(s.size(), CMat::Zero(m, n));
      RankOneTuple two(s.size(), CMat::Zero(m, n));
      one[i](ci, cj) = cx(1, 0);
      one[j](ci, cj) = cx(-1, 0);
      two[i](ci, cj) = cx(2, 0);
      two[j](ci, cj) = cx(-2, 0);
      require(!tuples_match(one, two), "counterexample tuples must differ");
      rep.alternative_tuples = std::make_pair(std::move(one), std::move(two));
      return rep;
    }
  }
  require(false, "kernel without a pairwise overlap is impossible for 0/1 columns");
  return rep;
}

std::optional<std::pair<CMat, CMat>> construct_uniform_counterexample(const CMat& x,
                                                                      const SupportFamily& theta,
                                                                      const Tolerance& tol) {
  int r = static_cast<int>(x.cols());
  int n = theta.rows();
  if (theta.cols() != r || r == 0 || n == 0) return std::nullopt;

  // Effective per-row (alpha) and per-column (beta) budgets of the family;
  // -1 stands for unbounded. The global kind is handled separately.
  long long alpha = -1, beta = -1, global = -1;
  switch (theta.kind()) {
    case FamilyKind::RowSparse:
      alpha = theta.param();
      break;
    case FamilyKind::ColumnSparse:
      beta = theta.param();
      break;
    case FamilyKind::Regular:
      alpha = beta = theta.param();
      break;
    case FamilyKind::GlobalSparse:
      global = theta.param();
      break;
    case FamilyKind::Intersection: {
      for (const auto& part : theta.parts()) {
        if (part.kind() == FamilyKind::RowSparse)
          alpha = alpha < 0 ? part.param() : std::min(alpha, (long long)part.param());
        else if (part.kind() == FamilyKind::ColumnSparse)
          beta = beta < 0 ? part.param() : std::min(beta, (long long)part.param());
        else
          return std::nullopt;
      }
      break;
    }
    default:
      return std::nullopt;
  }

  long long row_budget = global >= 0 ? global : alpha;  // entries allowed in one row
  long long threshold = r;
  if (global >= 0) threshold = std::min<long long>(r, 2 * global);
  else if (alpha >= 0) threshold = std::min<long long>(r, 2 * alpha);

  auto verify_and_pack = [&](const CMat& y, const CMat& yp) -> std::optional<std::pair<CMat, CMat>> {
    if (!member(support_of(y, tol), theta) || !member(support_of(yp, tol), theta))
      return std::nullopt;
    double rel = relative_error(x * y.transpose(), x * yp.transpose());
    if (rel > std::max(10.0 * tol.relative_eps, 1e-12)) return std::nullopt;
    if (pairs_equivalent(FactorPair{x, y}, FactorPair{x, yp}, tol)) return std::nullopt;
    return std::make_pair(y, yp);
  };

  // Zero column: a single entry against the empty factor.
  {
    std::vector<int> nz = nonzero_columns(x, tol);
    if (static_cast<int>(nz.size()) < r) {
      int zero_col = 0;
      while (std::find(nz.begin(), nz.end(), zero_col) != nz.end()) ++zero_col;
      CMat y = CMat::Zero(n, r);
      y(0, zero_col) = cx(1, 0);
      return verify_and_pack(y, CMat::Zero(n, r));
    }
  }

  int kappa = kruskal_rank(x, tol);
  if (kappa >= threshold) return std::nullopt;

  // Every (kappa+1)-subset has only independent proper subsets, so any
  // dependent one is minimally dependent and its kernel vector has full
  // support on the subset.
  std::vector<int> dep(static_cast<size_t>(kappa + 1));
  std::iota(dep.begin(), dep.end(), 0);
  bool found = false;
  do {
    if (!independent_columns(x, dep, tol)) {
      found = true;
      break;
    }
  } while (next_combination(dep, r));
  if (!found) return std::nullopt;
  int p = kappa + 1;

  if (p >= 3) {
    // Kernel split: h1 + h2 = h with X h = 0 gives X h1^T row = -X h2^T.
    CVec h;
    if (tol.is_exact()) {
      QMatrix sub = QMatrix::from_complex(select_columns(x, dep));
      ExactSolveResult ker =
          exact_solve(sub, std::vector<GaussianRational>(static_cast<size_t>(x.rows())));
      require(!ker.kernel.empty(), "dependent subset must have a kernel vector");
      h = CVec(p);
      for (int v = 0; v < p; ++v) h(v) = ker.kernel.front()[static_cast<size_t>(v)].to_complex();
    } else {
      Eigen::JacobiSVD<CMat> svd(select_columns(x, dep), Eigen::ComputeFullV);
      h = svd.matrixV().col(p - 1);
    }
    int front = (p + 1) / 2;
    if (row_budget >= 0 && front > row_budget) return std::nullopt;
    CMat y = CMat::Zero(n, r), yp = CMat::Zero(n, r);
    for (int v = 0; v < p; ++v) {
      if (v < front)
        y(0, dep[static_cast<size_t>(v)]) = h(v);
      else
        yp(0, dep[static_cast<size_t>(v)]) = -h(v);
    }
    return verify_and_pack(y, yp);
  }

  // Collinear pair: x_j = c * x_i with c nonzero.
  int ci = dep[0], cj = dep[1];
  cx c;
  if (tol.is_exact()) {
    QMatrix qx = QMatrix::from_complex(x);
    int lead = -1;
    for (int i = 0; i < qx.rows(); ++i)
      if (!qx.at(i, ci).is_zero()) {
        lead = i;
        break;
      }
    c = (qx.at(lead, cj) / qx.at(lead, ci)).to_complex();
  } else {
    CVec xi = x.col(ci), xj = x.col(cj);
    c = xi.dot(xj) / xi.squaredNorm();
  }

  bool shift_allowed = (global >= 0 && global >= 2) || (global < 0 && (alpha < 0 || alpha >= 2));
  if (shift_allowed) {
    // Scaling shift inside one row: 1 at column i against (1+t, -t/c).
    double t = 1.0;
    CMat y = CMat::Zero(n, r), yp = CMat::Zero(n, r);
    y(0, ci) = cx(1, 0);
    yp(0, ci) = cx(1 + t, 0);
    yp(0, cj) = -t / c;
    return verify_and_pack(y, yp);
  }
  bool two_row_allowed = n >= 2 && global < 0 && (beta < 0 || beta >= 2);
  if (two_row_allowed) {
    // Move the second row's entry onto the collinear partner column.
    CMat y = CMat::Zero(n, r), yp = CMat::Zero(n, r);
    y(0, ci) = cx(1, 0);
    y(1, cj) = cx(1, 0);
    yp(0, ci) = cx(1, 0);
    yp(1, ci) = c;
    return verify_and_pack(y, yp);
  }
  return std::nullopt;
}

std::optional<FactorPair> randomized_counterexample_search_serial(const FactorPair& p,
                                                                  const PairFamily& omega,
                                                                  int trials,
                                                                  unsigned long long seed,
                                                                  const Tolerance& tol) {
  std::vector<SupportPair> pairs;
  try {
    pairs = enumerate_pairs(omega, Budget::from_env());
  } catch (const EnumerationBudgetExceeded&) {
    return std::nullopt;  // search is best-effort; absence proves nothing
  }
  if (pairs.empty()) return std::nullopt;
  CMat z = p.product();
  for (long long trial = 0; trial < trials; ++trial) {
    TrialRng rng(seed, trial);
    const SupportPair& sp = pairs[static_cast<size_t>(rng.next() % pairs.size())];
    auto hit = als_attempt(z, sp, rng, p, tol);
    if (hit) return hit;
  }
  return std::nullopt;
}

std::optional<FactorPair> randomized_counterexample_search(const FactorPair& p,
                                                           const PairFamily& omega, int trials,
                                                           unsigned long long seed,
                                                           const Tolerance& tol) {
#ifndef _OPENMP
  return randomized_counterexample_search_serial(p, omega, trials, seed, tol);
#else
  std::vector<SupportPair> pairs;
  try {
    pairs = enumerate_pairs(omega, Budget::from_env());
  } catch (const EnumerationBudgetExceeded&) {
    return std::nullopt;
  }
  if (pairs.empty()) return std::nullopt;
  CMat z = p.product();
  long long best_trial = trials;
  std::optional<FactorPair> best;
#pragma omp parallel for schedule(dynamic)
  for (long long trial = 0; trial < trials; ++trial) {
    if (trial >= best_trial) continue;  // racy read only skips work
    TrialRng rng(seed, trial);
    const SupportPair& sp = pairs[static_cast<size_t>(rng.next() % pairs.size())];
    auto hit = als_attempt(z, sp, rng, p, tol);
    if (hit) {
#pragma omp critical
      {
        if (trial < best_trial) {
          best_trial = trial;
          best = hit;
        }
      }
    }
  }
  return best;
#endif
}

}  // namespace sfid
