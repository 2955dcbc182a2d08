#include "sfid/checks.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "sfid/linalg.hpp"

namespace sfid {

const char* status_name(Status s) {
  switch (s) {
    case Status::Holds: return "Holds";
    case Status::Fails: return "Fails";
    case Status::Unknown: return "Unknown";
  }
  return "Unknown";
}

const char* rule_tag(Rule r) {
  switch (r) {
    case Rule::ZeroColumnRecipe: return "Lemma 2.6";
    case Rule::IdenticalColumnSupports: return "Lemma 2.8";
    case Rule::MaximalColumnSupports: return "Lemma 2.9";
    case Rule::StableFamilyCombination: return "Prop 2.10";
    case Rule::TupleLift: return "Thm 4.5";
    case Rule::RightColumnInclusion: return "Lemma 3.2";
    case Rule::RestrictionToSupport: return "Lemma 3.3";
    case Rule::ColumnNormalization: return "Prop 3.4";
    case Rule::GroupedCharacterization: return "Thm 3.7";
    case Rule::LinearSystemUniqueness: return "Prop 3.8";
    case Rule::OnesRowUniqueness: return "Prop 3.9";
    case Rule::PerSupportSplit: return "Prop 4.6";
    case Rule::SupportIdentifiabilitySC: return "Prop 4.7";
    case Rule::FixedSupportNC: return "Thm 4.8";
    case Rule::TwoBlockChainClosure: return "Example 4.9";
    case Rule::DisjointSupports: return "Lemma 5.1";
    case Rule::ScalingOnlyAmbiguity: return "Cor 5.2";
    case Rule::UniformTupleFamily: return "Prop 5.4";
    case Rule::UniformRightGrouped: return "Cor 5.6";
    case Rule::InjectivityUnionPairs: return "Prop 5.7";
    case Rule::UniformOnesRow: return "Prop 5.8";
    case Rule::ClassicalRowSparse: return "Cor 5.9(i)";
    case Rule::ClassicalColumnSparse: return "Cor 5.9(ii)";
    case Rule::ClassicalRowAndColumn: return "Cor 5.9(iii)";
    case Rule::ClassicalGlobalSparse: return "Cor 5.9(iv)";
  }
  return "";
}

namespace {

void add_tag(Verdict& v, Rule r) {
  const char* t = rule_tag(r);
  for (const auto& existing : v.provenance)
    if (existing == t) return;
  v.provenance.emplace_back(t);
}

void merge_tags(Verdict& into, const Verdict& from) {
  for (const auto& t : from.provenance) {
    bool seen = false;
    for (const auto& existing : into.provenance)
      if (existing == t) { seen = true; break; }
    if (!seen) into.provenance.push_back(t);
  }
}

Tolerance relaxed(const Tolerance& tol) {
  if (tol.is_exact()) return tol;
  Tolerance t = tol;
  t.relative_eps *= 10.0;
  return t;
}

SupportMatrix support_from_rational(const QMatrix& q) {
  SupportMatrix s(q.rows(), q.cols());
  for (int i = 0; i < q.rows(); ++i)
    for (int j = 0; j < q.cols(); ++j)
      if (!q.at(i, j).is_zero()) s.set(i, j);
  return s;
}

std::vector<GaussianRational> q_column(const QMatrix& q, int c) {
  std::vector<GaussianRational> out(static_cast<size_t>(q.rows()));
  for (int i = 0; i < q.rows(); ++i) out[static_cast<size_t>(i)] = q.at(i, c);
  return out;
}

// Coverage of a single support by some member of the family. Downward-closed
// kinds reduce coverage to plain membership; lists are scanned.
bool family_covers(const SupportMatrix& s, const SupportFamily& f, const Budget& budget) {
  if (s.rows() != f.rows() || s.cols() != f.cols()) return false;
  if (f.kind() == FamilyKind::Enumerated) {
    for (const auto& t : f.listed_members())
      if (s.is_subset_of(t)) return true;
    return false;
  }
  if (f.downward_closed_by_construction()) return member(s, f);
  for (const auto& t : enumerate_family(f, budget))
    if (s.is_subset_of(t)) return true;
  return false;
}

bool pair_covers(const SupportPair& s, const PairFamily& omega, const Budget& budget) {
  if (omega.is_product())
    return family_covers(s.left, omega.left(), budget) &&
           family_covers(s.right, omega.right(), budget);
  for (const auto& t : omega.listed_pairs())
    if (s.left.is_subset_of(t.left) && s.right.is_subset_of(t.right)) return true;
  return false;
}

// A zero column of `base` that some containing member of `f` allows to become
// nonzero, together with a row index where it may grow.
struct SideGrowth {
  int column = -1;
  int row = -1;
};

std::optional<SideGrowth> side_growth(const SupportMatrix& base, const SupportFamily& f,
                                      const Budget& budget) {
  if (f.kind() != FamilyKind::Enumerated && f.downward_closed_by_construction()) {
    // Growing by a single cell stays inside a downward-closed family exactly
    // when some containing member carries that cell.
    for (int j = 0; j < base.cols(); ++j) {
      if (!base.column_empty(j)) continue;
      for (int i = 0; i < base.rows(); ++i) {
        SupportMatrix grown = base;
        grown.set(i, j);
        if (member(grown, f)) return SideGrowth{j, i};
      }
    }
    return std::nullopt;
  }
  for (const auto& s : enumerate_supersets(f, base, budget)) {
    for (int j = 0; j < base.cols(); ++j)
      if (base.column_empty(j) && !s.column_empty(j))
        return SideGrowth{j, s.column_cells(j).front()};
  }
  return std::nullopt;
}

struct PairGrowth {
  bool left_side = true;
  SideGrowth g;
};

std::optional<PairGrowth> pair_growth(const SupportPair& sp, const PairFamily& omega,
                                      const Budget& budget) {
  if (omega.is_product()) {
    if (auto g = side_growth(sp.left, omega.left(), budget)) return PairGrowth{true, *g};
    if (auto g = side_growth(sp.right, omega.right(), budget)) return PairGrowth{false, *g};
    return std::nullopt;
  }
  for (const auto& t : omega.listed_pairs()) {
    if (!sp.left.is_subset_of(t.left) || !sp.right.is_subset_of(t.right)) continue;
    for (int j = 0; j < sp.left.cols(); ++j)
      if (sp.left.column_empty(j) && !t.left.column_empty(j))
        return PairGrowth{true, SideGrowth{j, t.left.column_cells(j).front()}};
    for (int j = 0; j < sp.right.cols(); ++j)
      if (sp.right.column_empty(j) && !t.right.column_empty(j))
        return PairGrowth{false, SideGrowth{j, t.right.column_cells(j).front()}};
  }
  return std::nullopt;
}

// Column-wise union of a support over a partition of its columns: output
// column k collects the rows covered by the columns in block k.
SupportMatrix support_fingerprint(const SupportMatrix& s,
                                  const std::vector<std::vector<int>>& classes) {
  SupportMatrix out(s.rows(), static_cast<int>(classes.size()));
  for (int k = 0; k < static_cast<int>(classes.size()); ++k)
    for (int i : classes[k])
      for (int row : s.column_cells(i)) out.set(row, k);
  return out;
}

bool q_value_less(const GaussianRational& a, const GaussianRational& b) {
  int c = cmp(a.re, b.re);
  if (c != 0) return c < 0;
  return cmp(a.im, b.im) < 0;
}

// Multiset equality of the columns of two equally sized rational matrices.
bool q_columns_match(const QMatrix& a, const QMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  auto collect = [](const QMatrix& q) {
    std::vector<std::vector<GaussianRational>> cols;
    cols.reserve(static_cast<size_t>(q.cols()));
    for (int c = 0; c < q.cols(); ++c) cols.push_back(q_column(q, c));
    std::sort(cols.begin(), cols.end(), [](const auto& u, const auto& v) {
      for (size_t i = 0; i < u.size(); ++i) {
        if (u[i] != v[i]) return q_value_less(u[i], v[i]);
      }
      return false;
    });
    return cols;
  };
  return collect(a) == collect(b);
}

bool float_columns_match(const CMat& a, const CMat& b, const Tolerance& tol) {
  RankOneTuple ta, tb;
  for (int c = 0; c < a.cols(); ++c) ta.push_back(a.col(c));
  for (int c = 0; c < b.cols(); ++c) tb.push_back(b.col(c));
  return tuple_equivalent(ta, tb, tol).has_value();
}

// Defensive re-verification of an alternative factorization: same product at
// the relaxed tolerance, supports still covered, and not equivalent to the
// original. All Fails witnesses pass through here (or through the dedicated
// right-identifiability verifier) before being emitted.
bool verify_alternative(const FactorPair& orig, const FactorPair& alt, const PairFamily& omega,
                        const Tolerance& tol, const Budget& budget) {
  if (tol.is_exact()) {
    QMatrix ax = QMatrix::from_complex(orig.X), ay = QMatrix::from_complex(orig.Y);
    QMatrix bx = QMatrix::from_complex(alt.X), by = QMatrix::from_complex(alt.Y);
    if (!(ax * ay.transpose() == bx * by.transpose())) return false;
    if (pairs_equivalent_exact(ax, ay, bx, by)) return false;
  } else {
    if (relative_error(alt.X * alt.Y.transpose(), orig.X * orig.Y.transpose()) >
        10.0 * tol.relative_eps)
      return false;
    if (pairs_equivalent(orig, alt, relaxed(tol))) return false;
  }
  SupportPair sp{support_of(alt.X, tol), support_of(alt.Y, tol)};
  try {
    if (!pair_covers(sp, omega, budget)) return false;
  } catch (const Error&) {
    return false;
  }
  return true;
}

Verdict unknown_verdict(const Tolerance& tol, std::string why) {
  Verdict v;
  v.status = Status::Unknown;
  v.tolerance_used = tol;
  v.descriptor = std::move(why);
  return v;
}

// Witness for an overlap violation at a fixed support pair: when columns i
// and j of one factor are collinear and the rank-one patterns overlap, mass
// moves between columns i and j of the other factor along a shared pattern
// row without changing the product. Returns the verified alternative pair
// (and, in exact mode with the right factor shifted, its unrounded copy).
std::optional<FactorPair> overlap_shift_witness(const FactorPair& p, const SupportPair& s, int i,
                                                int j, bool shift_right, const Tolerance& tol,
                                                std::optional<QMatrix>* y_exact) {
  const CMat& collinear_side = shift_right ? p.X : p.Y;
  const SupportMatrix& shifted_pattern = shift_right ? s.right : s.left;
  int l = -1;
  for (int t = 0; t < shifted_pattern.rows(); ++t) {
    if (shifted_pattern.get(t, i) && shifted_pattern.get(t, j)) {
      l = t;
      break;
    }
  }
  if (l < 0) return std::nullopt;

  int t0 = -1;
  double best = 0.0;
  for (int t = 0; t < collinear_side.rows(); ++t) {
    double a = std::abs(collinear_side(t, i));
    if (a > best) {
      best = a;
      t0 = t;
    }
  }
  if (t0 < 0 || best == 0.0) return std::nullopt;
  const cx mu = collinear_side(t0, j) / collinear_side(t0, i);

  const bool exact = tol.is_exact();
  QMatrix qx, qy;
  GaussianRational qmu;
  if (exact) {
    qx = QMatrix::from_complex(p.X);
    qy = QMatrix::from_complex(p.Y);
    const QMatrix& qc = shift_right ? qx : qy;
    if (qc.at(t0, i).is_zero()) return std::nullopt;
    qmu = qc.at(t0, j) / qc.at(t0, i);
  }

  for (double e : {1.0, 0.5, 0.25, 2.0, 3.0}) {
    FactorPair alt = p;
    CMat& target = shift_right ? alt.Y : alt.X;
    target(l, i) += mu * e;
    target(l, j) -= e;

    if (exact) {
      QMatrix qalt = shift_right ? qy : qx;
      const GaussianRational qe{mpq_class(e)};  // the candidates are exact doubles
      qalt.at(l, i) = qalt.at(l, i) + qmu * qe;
      qalt.at(l, j) = qalt.at(l, j) - qe;
      const QMatrix& qxa = shift_right ? qx : qalt;
      const QMatrix& qya = shift_right ? qalt : qy;
      if (!(qx * qy.transpose() == qxa * qya.transpose())) continue;
      if (pairs_equivalent_exact(qx, qy, qxa, qya)) continue;
      if (!support_from_rational(qxa).is_subset_of(s.left) ||
          !support_from_rational(qya).is_subset_of(s.right))
        continue;
      if (shift_right) *y_exact = qya;
    } else {
      if (relative_error(alt.X * alt.Y.transpose(), p.X * p.Y.transpose()) >
          10.0 * tol.relative_eps)
        continue;
      if (pairs_equivalent(p, alt, relaxed(tol))) continue;
      if (!support_of(alt.X, tol).is_subset_of(s.left) ||
          !support_of(alt.Y, tol).is_subset_of(s.right))
        continue;
    }
    return alt;
  }
  return std::nullopt;
}

}  // namespace

bool in_IC(const FactorPair& p, const Tolerance& tol) {
  require_dims(p.X.cols() == p.Y.cols(), "factors must share the inner dimension");
  SupportMatrix sx = support_of(p.X, tol);
  SupportMatrix sy = support_of(p.Y, tol);
  for (int j = 0; j < sx.cols(); ++j)
    if (sx.column_empty(j) != sy.column_empty(j)) return false;
  return true;
}

Verdict in_MC(const FactorPair& p, const PairFamily& omega, const Tolerance& tol,
              const Budget& budget) {
  require_dims(p.X.cols() == p.Y.cols(), "factors must share the inner dimension");
  require_dims(static_cast<int>(p.X.rows()) == omega.left_rows() &&
                   static_cast<int>(p.Y.rows()) == omega.right_rows() &&
                   static_cast<int>(p.X.cols()) == omega.inner_dim(),
               "factor dimensions must match the family");
  Verdict v;
  v.tolerance_used = tol;
  add_tag(v, Rule::MaximalColumnSupports);

  SupportPair sp{support_of(p.X, tol), support_of(p.Y, tol)};
  bool covered = false;
  std::optional<PairGrowth> growth;
  try {
    covered = pair_covers(sp, omega, budget);
    if (covered) growth = pair_growth(sp, omega, budget);
  } catch (const EnumerationBudgetExceeded& e) {
    v.status = Status::Unknown;
    v.descriptor = std::string("enumeration budget exceeded while scanning containing members: ") +
                   e.what();
    return v;
  }
  if (!covered)
    throw NotInFamily("the factor supports are not contained in any member of the family");

  if (!growth) {
    v.status = Status::Holds;
    return v;
  }
  std::ostringstream os;
  os << "column " << growth->g.column << " of the " << (growth->left_side ? "left" : "right")
     << " factor is zero, yet a containing member supports cell (" << growth->g.row << ", "
     << growth->g.column << ")";
  v.status = Status::Fails;
  v.descriptor = os.str();
  return v;
}

// ---------------------------------------------------------------------------
// Right identifiability. The decision works in restricted coordinates (the
// nonzero columns J of X) and groups those columns into collinearity classes.
// For a candidate right factor V supported in a member T, only the per-class
// scaled sums sum_i lead_i V_i interact with X, so the check walks every
// member and tests, in order: mass outside J, solvability of the scaled-sum
// system inside the member, per-row independence of the class representatives
// (uniqueness of the sums), and per-class forced placement (uniqueness within
// a class). Each failure converts into an explicit alternative right factor.
// ---------------------------------------------------------------------------

Verdict check_right_identifiability(const FactorPair& p, const SupportFamily& theta,
                                    const Tolerance& tol, const Budget& budget) {
  const CMat& x = p.X;
  const CMat& y = p.Y;
  require_dims(x.cols() == y.cols(), "factors must share the inner dimension");
  const int m = static_cast<int>(x.rows());
  const int n = static_cast<int>(y.rows());
  const int r = static_cast<int>(x.cols());
  require_dims(theta.rows() == n && theta.cols() == r,
               "family dimensions must match the right factor");
  const bool exact = tol.is_exact();

  Verdict out;
  out.tolerance_used = tol;
  if (r == 0) {
    out.status = Status::Holds;
    return out;
  }

  std::vector<SupportMatrix> members;
  try {
    members = enumerate_family(theta, budget);
  } catch (const EnumerationBudgetExceeded& e) {
    return unknown_verdict(tol, std::string("enumeration budget exceeded: ") + e.what());
  }

  SupportMatrix sy = support_of(y, tol);
  {
    bool hosted = false;
    for (const auto& t : members)
      if (sy.is_subset_of(t)) { hosted = true; break; }
    if (!hosted)
      throw NotInFamily("the right factor is not supported inside any member of the family");
  }

  // Exact twins of the full data.
  QMatrix qxf, qyf, qzf;
  if (exact) {
    qxf = QMatrix::from_complex(x);
    qyf = QMatrix::from_complex(y);
    qzf = qxf * qyf.transpose();
  }
  const CMat zf = x * y.transpose();
  SupportMatrix zsupp = exact ? support_from_rational(qzf) : support_of(zf, tol);

  const std::vector<int> J = nonzero_columns(x, tol);
  std::vector<char> inJ(static_cast<size_t>(r), 0);
  for (int j : J) inJ[static_cast<size_t>(j)] = 1;
  const int w = static_cast<int>(J.size());

  // Emission: assemble the full right factor, re-verify, and pack. A nullopt
  // means the candidate failed re-verification (possible only under floating
  // point degeneracies); the caller then reports Unknown instead of guessing.
  auto finish = [&](CMat y2, std::optional<QMatrix> qy2, const SupportMatrix& host,
                    std::initializer_list<Rule> rules,
                    const std::string& desc) -> std::optional<Verdict> {
    SupportMatrix s2 = qy2 ? support_from_rational(*qy2) : support_of(y2, tol);
    if (!s2.is_subset_of(host)) return std::nullopt;
    if (exact) {
      if (!qy2) qy2 = QMatrix::from_complex(y2);
      if (!(qxf * qy2->transpose() == qzf)) return std::nullopt;
      if (pairs_equivalent_exact(qxf, qyf, qxf, *qy2)) return std::nullopt;
    } else {
      if (relative_error(x * y2.transpose(), zf) > 10.0 * tol.relative_eps) return std::nullopt;
      if (pairs_equivalent(p, FactorPair{x, y2}, relaxed(tol))) return std::nullopt;
    }
    Verdict v;
    v.status = Status::Fails;
    v.tolerance_used = tol;
    for (Rule rr : rules) add_tag(v, rr);
    v.descriptor = desc;
    if (exact) v.counterexample_y_exact = *qy2;
    v.counterexample = FactorPair{x, std::move(y2)};
    return v;
  };
  auto witness_failed = [&]() {
    return unknown_verdict(tol, "a candidate witness failed re-verification at the relaxed "
                                "tolerance; the instance is numerically degenerate");
  };

  // Right columns must vanish wherever the left ones do.
  for (int i = 0; i < r; ++i) {
    if (inJ[static_cast<size_t>(i)] || sy.column_empty(i)) continue;
    CMat y2 = y;
    y2.col(i).setZero();
    std::optional<QMatrix> qy2;
    if (exact) {
      QMatrix q = qyf;
      for (int l = 0; l < n; ++l) q.at(l, i) = GaussianRational();
      qy2 = std::move(q);
    }
    // Zeroing shrinks the support, so the original hosting member still works.
    const SupportMatrix* host = nullptr;
    for (const auto& t : members)
      if (sy.is_subset_of(t)) { host = &t; break; }
    if (!host) return witness_failed();
    std::ostringstream os;
    os << "column " << i << " of the right factor is nonzero although column " << i
       << " of the left factor is zero; zeroing it changes nothing but the factor";
    auto v = finish(std::move(y2), std::move(qy2), *host,
                    {Rule::RightColumnInclusion, Rule::ZeroColumnRecipe}, os.str());
    if (v) return *v;
    return witness_failed();
  }

  // Restricted data and collinearity classes.
  const CMat xj = select_columns(x, J);
  const CMat yj = select_columns(y, J);
  QMatrix qxj, qyj;
  if (exact) {
    qxj = QMatrix::from_complex(xj);
    qyj = QMatrix::from_complex(yj);
  }
  const CollinearityPartition part = collinearity_partition(xj, tol);
  const int K = static_cast<int>(part.classes.size());
  std::vector<int> class_of(static_cast<size_t>(w), -1);
  for (int k = 0; k < K; ++k)
    for (int i : part.classes[k]) class_of[static_cast<size_t>(i)] = k;

  const SupportMatrix sxj = support_of(xj, tol);
  std::vector<int> lead_row(static_cast<size_t>(K), 0);
  for (int k = 0; k < K; ++k)
    lead_row[static_cast<size_t>(k)] = sxj.column_cells(part.representatives[k]).front();

  std::vector<cx> lead(static_cast<size_t>(w));
  std::vector<GaussianRational> qlead(static_cast<size_t>(w));
  for (int i = 0; i < w; ++i) {
    lead[static_cast<size_t>(i)] = xj(lead_row[static_cast<size_t>(class_of[static_cast<size_t>(i)])], i);
    if (exact) qlead[static_cast<size_t>(i)] = GaussianRational::from_complex(lead[static_cast<size_t>(i)]);
  }

  const CMat xbar = select_columns(xj, part.representatives);
  QMatrix qxbar;
  if (exact) qxbar = QMatrix::from_complex(xbar);

  // Scaled right columns and their per-class sums.
  CMat ytil(n, w);
  for (int i = 0; i < w; ++i) ytil.col(i) = lead[static_cast<size_t>(i)] * yj.col(i);
  CMat ybar = CMat::Zero(n, K);
  for (int k = 0; k < K; ++k)
    for (int i : part.classes[k]) ybar.col(k) += ytil.col(i);
  QMatrix qytil, qybar;
  if (exact) {
    qytil = QMatrix(n, w);
    qybar = QMatrix(n, K);
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < w; ++i) {
        qytil.at(l, i) = qlead[static_cast<size_t>(i)] * qyj.at(l, i);
        int k = class_of[static_cast<size_t>(i)];
        qybar.at(l, k) = qybar.at(l, k) + qytil.at(l, i);
      }
  }
  const SupportMatrix ybar_supp = exact ? support_from_rational(qybar) : support_of(ybar, tol);

  // Mode-dispatched primitives.
  auto span_feasible = [&](int l, const std::vector<int>& idx) -> bool {
    if (idx.empty()) return zsupp.column_empty(l);
    if (exact) return exact_in_span(qxbar.select_columns(idx), q_column(qzf, l));
    std::vector<CVec> cols;
    cols.reserve(idx.size());
    for (int i : idx) cols.push_back(xbar.col(i));
    return in_span(zf.col(l), cols, tol);
  };
  auto reps_independent = [&](const std::vector<int>& idx) -> bool {
    if (exact) return exact_rank(qxbar.select_columns(idx)) == static_cast<int>(idx.size());
    return independent_columns(xbar, idx, tol);
  };
  // Particular solution of (representative columns idx) * sol = column l of Z.
  auto solve_row = [&](int l, const std::vector<int>& idx, std::vector<cx>& sol,
                       std::vector<GaussianRational>& qsol) -> bool {
    if (exact) {
      auto res = exact_solve(qxbar.select_columns(idx), q_column(qzf, l));
      if (!res.consistent) return false;
      qsol = res.particular;
      sol.resize(qsol.size());
      for (size_t t = 0; t < qsol.size(); ++t) sol[t] = qsol[t].to_complex();
      return true;
    }
    CMat sel(m, static_cast<int>(idx.size()));
    for (size_t t = 0; t < idx.size(); ++t) sel.col(static_cast<int>(t)) = xbar.col(idx[t]);
    Eigen::CompleteOrthogonalDecomposition<CMat> cod(sel);
    CVec v = cod.solve(zf.col(l));
    sol.assign(v.data(), v.data() + v.size());
    return true;
  };

  // Scaled class-sum solution (n x K) -> restricted factor, concentrating
  // each class entry on the member's first available column in that class,
  // then undoing the per-column scaling.
  auto build_restricted = [&](const CMat& wtil, const QMatrix* qwtil, const SupportMatrix& tj,
                              CMat& vres, QMatrix& qvres) -> bool {
    vres = CMat::Zero(n, w);
    if (exact) qvres = QMatrix(n, w);
    const double thr = exact ? 0.0 : support_threshold(wtil, tol);
    for (int l = 0; l < n; ++l)
      for (int k = 0; k < K; ++k) {
        bool nz = exact ? !qwtil->at(l, k).is_zero() : std::abs(wtil(l, k)) > thr;
        if (!nz) continue;
        int target = -1;
        for (int i : part.classes[k])
          if (tj.get(l, i)) { target = i; break; }
        if (target < 0) return false;
        vres(l, target) = wtil(l, k) / lead[static_cast<size_t>(target)];
        if (exact) qvres.at(l, target) = qwtil->at(l, k) / qlead[static_cast<size_t>(target)];
      }
    return true;
  };
  auto assemble = [&](const CMat& vres, const QMatrix* qvres,
                      const std::vector<std::pair<int, int>>& extra)
      -> std::pair<CMat, std::optional<QMatrix>> {
    CMat y2 = CMat::Zero(n, r);
    for (int t = 0; t < w; ++t) y2.col(J[static_cast<size_t>(t)]) = vres.col(t);
    for (const auto& rc : extra) y2(rc.first, rc.second) = 1.0;
    std::optional<QMatrix> qy2;
    if (exact) {
      QMatrix q(n, r);
      for (int l = 0; l < n; ++l)
        for (int t = 0; t < w; ++t) q.at(l, J[static_cast<size_t>(t)]) = qvres->at(l, t);
      for (const auto& rc : extra) q.at(rc.first, rc.second) = GaussianRational(mpq_class(1));
      qy2 = std::move(q);
    }
    return {std::move(y2), std::move(qy2)};
  };

  for (const SupportMatrix& t : members) {
    const SupportMatrix tj = t.restrict_cols(J);
    int outcol = -1;
    for (int c = 0; c < r; ++c)
      if (!inJ[static_cast<size_t>(c)] && !t.column_empty(c)) { outcol = c; break; }
    const SupportMatrix tfp = support_fingerprint(tj, part.classes);
    const bool contains = ybar_supp.is_subset_of(tfp);

    bool feasible = contains;
    if (!feasible) {
      feasible = true;
      for (int l = 0; l < n && feasible; ++l) feasible = span_feasible(l, tfp.row_cells(l));
    }

    // Scaled class sums hosted by this member: the instance's own sums when
    // the member covers them, otherwise any solution of the per-row systems.
    auto hosted_sums = [&](CMat& wtil, QMatrix& qwtil) -> bool {
      if (contains) {
        wtil = ybar;
        if (exact) qwtil = qybar;
        return true;
      }
      wtil = CMat::Zero(n, K);
      if (exact) qwtil = QMatrix(n, K);
      for (int l = 0; l < n; ++l) {
        const std::vector<int> idx = tfp.row_cells(l);
        if (idx.empty()) continue;
        std::vector<cx> sol;
        std::vector<GaussianRational> qsol;
        if (!solve_row(l, idx, sol, qsol)) return false;
        for (size_t u = 0; u < idx.size(); ++u) {
          const int rep = part.representatives[idx[u]];
          wtil(l, idx[u]) = lead[static_cast<size_t>(rep)] * sol[u];
          if (exact) qwtil.at(l, idx[u]) = qlead[static_cast<size_t>(rep)] * qsol[u];
        }
      }
      return true;
    };

    if (outcol >= 0) {
      if (!feasible) continue;  // no completion lives inside this member
      CMat wtil;
      QMatrix qwtil;
      if (!hosted_sums(wtil, qwtil)) return witness_failed();
      CMat vres;
      QMatrix qvres;
      if (!build_restricted(wtil, exact ? &qwtil : nullptr, tj, vres, qvres))
        return witness_failed();
      const int mass_row = t.column_cells(outcol).front();
      auto [y2, qy2] = assemble(vres, exact ? &qvres : nullptr, {{mass_row, outcol}});
      std::ostringstream os;
      os << "a member supports cell (" << mass_row << ", " << outcol
         << ") although column " << outcol
         << " of the left factor is zero, and its restriction still hosts a completion";
      auto v = finish(std::move(y2), std::move(qy2), t, {Rule::RestrictionToSupport}, os.str());
      if (v) return *v;
      return witness_failed();
    }

    if (!feasible) continue;

    if (!contains) {
      // The member hosts class sums different from the instance's.
      CMat wtil;
      QMatrix qwtil;
      if (!hosted_sums(wtil, qwtil)) return witness_failed();
      CMat vres;
      QMatrix qvres;
      if (!build_restricted(wtil, exact ? &qwtil : nullptr, tj, vres, qvres))
        return witness_failed();
      auto [y2, qy2] = assemble(vres, exact ? &qvres : nullptr, {});
      auto v = finish(std::move(y2), std::move(qy2), t,
                      {Rule::GroupedCharacterization, Rule::LinearSystemUniqueness},
                      "a member hosts a completion whose scaled class sums differ from the "
                      "instance's");
      if (v) return *v;
      return witness_failed();
    }

    // Per-row independence of the touched class representatives.
    for (int l = 0; l < n; ++l) {
      const std::vector<int> idx = tfp.row_cells(l);
      if (static_cast<int>(idx.size()) <= 1) continue;
      if (reps_independent(idx)) continue;
      // Shift the class sums along a kernel vector of the touched columns.
      std::vector<cx> h(idx.size());
      std::vector<GaussianRational> qh;
      if (exact) {
        auto res = exact_solve(qxbar.select_columns(idx),
                               std::vector<GaussianRational>(static_cast<size_t>(m)));
        if (res.kernel.empty()) return witness_failed();
        qh = res.kernel.front();
        for (size_t u = 0; u < qh.size(); ++u) h[u] = qh[u].to_complex();
      } else {
        CMat sel(m, static_cast<int>(idx.size()));
        for (size_t u = 0; u < idx.size(); ++u) sel.col(static_cast<int>(u)) = xbar.col(idx[u]);
        Eigen::JacobiSVD<CMat> svd(sel, Eigen::ComputeFullV);
        CVec hv = svd.matrixV().col(static_cast<int>(idx.size()) - 1);
        h.assign(hv.data(), hv.data() + hv.size());
      }
      CMat wtil = ybar;
      QMatrix qwtil = qybar;
      for (size_t u = 0; u < idx.size(); ++u) {
        const int rep = part.representatives[idx[u]];
        wtil(l, idx[u]) += lead[static_cast<size_t>(rep)] * h[u];
        if (exact)
          qwtil.at(l, idx[u]) =
              qwtil.at(l, idx[u]) + qlead[static_cast<size_t>(rep)] * qh[u];
      }
      CMat vres;
      QMatrix qvres;
      if (!build_restricted(wtil, exact ? &qwtil : nullptr, tj, vres, qvres))
        return witness_failed();
      auto [y2, qy2] = assemble(vres, exact ? &qvres : nullptr, {});
      std::ostringstream os;
      os << "the class representatives meeting row " << l
         << " of a member are linearly dependent, so the class sums are not pinned";
      auto v = finish(std::move(y2), std::move(qy2), t,
                      {Rule::GroupedCharacterization, Rule::LinearSystemUniqueness}, os.str());
      if (v) return *v;
      return witness_failed();
    }

    // Per-class forced placement.
    for (int k = 0; k < K; ++k) {
      const std::vector<int>& cls = part.classes[k];
      const int pk = static_cast<int>(cls.size());
      if (pk <= 1) continue;
      int bad_row = -1, i1 = -1, i2 = -1;
      for (int l = 0; l < n && bad_row < 0; ++l) {
        int first = -1, second = -1;
        for (int i : cls) {
          if (!tj.get(l, i)) continue;
          if (first < 0) first = i;
          else { second = i; break; }
        }
        if (second >= 0) { bad_row = l; i1 = first; i2 = second; }
      }
      if (bad_row >= 0) {
        // Two columns of one class share a row inside the member: move mass
        // between them. The shift is chosen so the bumped column disagrees at
        // bad_row with every scaled instance column of the class.
        CMat base;
        QMatrix qbase;
        if (!build_restricted(ybar, exact ? &qybar : nullptr, tj, base, qbase))
          return witness_failed();
        // Current scaled value at the bump position.
        cx cur = base(bad_row, i1) * lead[static_cast<size_t>(i1)];
        GaussianRational qcur;
        if (exact) qcur = qbase.at(bad_row, i1) * qlead[static_cast<size_t>(i1)];
        double scale = 1.0;
        for (int i : cls) scale = std::max(scale, std::abs(ytil(bad_row, i)));
        scale = std::max(scale, std::abs(cur));
        long lam = 0;
        for (long cand = 1; cand <= 4096 && lam == 0; ++cand) {
          bool ok = true;
          if (exact) {
            GaussianRational bumped = qcur + GaussianRational(mpq_class(cand));
            for (int i : cls)
              if (bumped == qytil.at(bad_row, i)) { ok = false; break; }
          } else {
            cx bumped = cur + static_cast<double>(cand);
            for (int i : cls)
              if (std::abs(bumped - ytil(bad_row, i)) <= 100.0 * tol.relative_eps * scale) {
                ok = false;
                break;
              }
          }
          if (ok) lam = cand;
        }
        if (lam == 0) return witness_failed();
        base(bad_row, i1) += static_cast<double>(lam) / lead[static_cast<size_t>(i1)];
        base(bad_row, i2) -= static_cast<double>(lam) / lead[static_cast<size_t>(i2)];
        if (exact) {
          GaussianRational ql{mpq_class(lam)};
          qbase.at(bad_row, i1) = qbase.at(bad_row, i1) + ql / qlead[static_cast<size_t>(i1)];
          qbase.at(bad_row, i2) = qbase.at(bad_row, i2) - ql / qlead[static_cast<size_t>(i2)];
        }
        auto [y2, qy2] = assemble(base, exact ? &qbase : nullptr, {});
        std::ostringstream os;
        os << "columns " << i1 << " and " << i2
           << " of a member share row " << bad_row
           << " within one collinearity class, so mass moves freely between them";
        auto v = finish(std::move(y2), std::move(qy2), t,
                        {Rule::GroupedCharacterization, Rule::OnesRowUniqueness}, os.str());
        if (v) return *v;
        return witness_failed();
      }

      // Every row meets at most one column of the class inside the member, so
      // the hosted block is forced; it must match the instance's scaled
      // columns up to a permutation.
      CMat vt = CMat::Zero(n, pk);
      QMatrix qvt(n, pk);
      for (int l = 0; l < n; ++l) {
        int pos = -1;
        for (int u = 0; u < pk; ++u)
          if (tj.get(l, cls[static_cast<size_t>(u)])) { pos = u; break; }
        if (pos < 0) continue;
        vt(l, pos) = ybar(l, k);
        if (exact) qvt.at(l, pos) = qybar.at(l, k);
      }
      CMat yt(n, pk);
      QMatrix qyt(n, pk);
      for (int u = 0; u < pk; ++u) {
        yt.col(u) = ytil.col(cls[static_cast<size_t>(u)]);
        if (exact)
          for (int l = 0; l < n; ++l) qyt.at(l, u) = qytil.at(l, cls[static_cast<size_t>(u)]);
      }
      const bool match = exact ? q_columns_match(qvt, qyt) : float_columns_match(vt, yt, tol);
      if (match) continue;
      CMat vres;
      QMatrix qvres;
      if (!build_restricted(ybar, exact ? &qybar : nullptr, tj, vres, qvres))
        return witness_failed();
      auto [y2, qy2] = assemble(vres, exact ? &qvres : nullptr, {});
      std::ostringstream os;
      os << "the placement forced by a member within collinearity class " << k
         << " is not a permutation of the instance's scaled columns";
      auto v = finish(std::move(y2), std::move(qy2), t,
                      {Rule::GroupedCharacterization, Rule::OnesRowUniqueness}, os.str());
      if (v) return *v;
      return witness_failed();
    }
  }

  out.status = Status::Holds;
  add_tag(out, Rule::RightColumnInclusion);
  add_tag(out, Rule::RestrictionToSupport);
  add_tag(out, Rule::ColumnNormalization);
  add_tag(out, Rule::GroupedCharacterization);
  add_tag(out, Rule::LinearSystemUniqueness);
  add_tag(out, Rule::OnesRowUniqueness);
  return out;
}

// ---------------------------------------------------------------------------
// Fixed-support necessary conditions and the exact closures.
// ---------------------------------------------------------------------------

namespace {

std::vector<int> sorted_difference(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool sorted_intersects(const std::vector<int>& a, const std::vector<int>& b) {
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) ++i;
    else ++j;
  }
  return false;
}

}  // namespace

Verdict check_fixed_support_nc(const FactorPair& p, const SupportPair& s, const Tolerance& tol) {
  const CMat& x = p.X;
  const CMat& y = p.Y;
  const int r = static_cast<int>(x.cols());
  require_dims(static_cast<int>(y.cols()) == r, "factors must share the inner dimension");
  require_dims(s.left.rows() == static_cast<int>(x.rows()) && s.left.cols() == r &&
                   s.right.rows() == static_cast<int>(y.rows()) && s.right.cols() == r,
               "support pair dimensions must match the factors");
  const SupportMatrix sx = support_of(x, tol);
  const SupportMatrix sy = support_of(y, tol);
  if (!sx.is_subset_of(s.left) || !sy.is_subset_of(s.right))
    throw NotInSupport("the factors are not supported inside the given pair");

  Verdict v;
  v.tolerance_used = tol;
  add_tag(v, Rule::FixedSupportNC);

  const RankOneSupportTuple pat = phi_supports(s);
  std::vector<bool> live(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i)
    live[static_cast<size_t>(i)] = !sx.column_empty(i) && !sy.column_empty(i);

  // Contributions sharing a span must have disjoint supports.
  for (int i = 0; i < r; ++i) {
    if (!live[static_cast<size_t>(i)]) continue;
    for (int j = i + 1; j < r; ++j) {
      if (!live[static_cast<size_t>(j)]) continue;
      if (pat[static_cast<size_t>(i)].disjoint_with(pat[static_cast<size_t>(j)])) continue;
      const bool share_col = columns_collinear(x, i, j, tol);
      const bool share_row = columns_collinear(y, i, j, tol);
      if (share_col || share_row) {
        v.status = Status::Fails;
        std::ostringstream os;
        os << "contributions " << i << " and " << j << " share a "
           << (share_col ? "column" : "row") << " span while their supports overlap";
        v.descriptor = os.str();
        std::optional<QMatrix> y_exact;
        std::optional<FactorPair> w;
        if (share_col) w = overlap_shift_witness(p, s, i, j, true, tol, &y_exact);
        if (!w && share_row) w = overlap_shift_witness(p, s, i, j, false, tol, &y_exact);
        if (w) {
          v.counterexample = std::move(*w);
          if (y_exact) v.counterexample_y_exact = std::move(*y_exact);
        }
        return v;
      }
    }
  }

  // Representatives of collinearity classes meeting a common row (or column)
  // of the pattern must be independent.
  {
    const CollinearityPartition px = collinearity_partition(x, tol);
    for (int j = 0; j < s.right.rows(); ++j) {
      std::vector<int> reps;
      for (size_t k = 0; k < px.classes.size(); ++k) {
        bool touches = false;
        for (int i : px.classes[k])
          if (s.right.get(j, i)) { touches = true; break; }
        if (touches) reps.push_back(px.representatives[k]);
      }
      if (static_cast<int>(reps.size()) <= 1) continue;
      if (!independent_columns(x, reps, tol)) {
        v.status = Status::Fails;
        std::ostringstream os;
        os << "dependent left-factor class representatives meet row " << j
           << " of the right pattern";
        v.descriptor = os.str();
        return v;
      }
    }
    const CollinearityPartition py = collinearity_partition(y, tol);
    for (int i = 0; i < s.left.rows(); ++i) {
      std::vector<int> reps;
      for (size_t k = 0; k < py.classes.size(); ++k) {
        bool touches = false;
        for (int j : py.classes[k])
          if (s.left.get(i, j)) { touches = true; break; }
        if (touches) reps.push_back(py.representatives[k]);
      }
      if (static_cast<int>(reps.size()) <= 1) continue;
      if (!independent_columns(y, reps, tol)) {
        v.status = Status::Fails;
        std::ostringstream os;
        os << "dependent right-factor class representatives meet row " << i
           << " of the left pattern";
        v.descriptor = os.str();
        return v;
      }
    }
  }

  // Exact closure: pairwise disjoint rank-one supports.
  bool all_disjoint = true;
  for (int i = 0; i < r && all_disjoint; ++i)
    for (int j = i + 1; j < r && all_disjoint; ++j)
      all_disjoint = pat[static_cast<size_t>(i)].disjoint_with(pat[static_cast<size_t>(j)]);
  if (all_disjoint) {
    v.status = Status::Holds;
    add_tag(v, Rule::DisjointSupports);
    add_tag(v, Rule::ScalingOnlyAmbiguity);
    return v;
  }

  // Exact closure: two overlapping rectangles chained through shared columns
  // (or rows), each pinned by private data.
  std::vector<int> eff;
  for (int i = 0; i < r; ++i)
    if (!pat[static_cast<size_t>(i)].empty()) eff.push_back(i);
  if (eff.size() == 2 && live[static_cast<size_t>(eff[0])] && live[static_cast<size_t>(eff[1])]) {
    const int a = eff[0], b = eff[1];
    const std::vector<int> ra = s.left.column_cells(a), rb = s.left.column_cells(b);
    const std::vector<int> ca = s.right.column_cells(a), cb = s.right.column_cells(b);
    const std::vector<int> ca_only = sorted_difference(ca, cb);
    const std::vector<int> cb_only = sorted_difference(cb, ca);
    const std::vector<int> ra_only = sorted_difference(ra, rb);
    const std::vector<int> rb_only = sorted_difference(rb, ra);
    const bool col_chain = ra == rb && !ca_only.empty() && !cb_only.empty() &&
                           sorted_intersects(sy.column_cells(a), ca_only) &&
                           sorted_intersects(sy.column_cells(b), cb_only);
    const bool row_chain = ca == cb && !ra_only.empty() && !rb_only.empty() &&
                           sorted_intersects(sx.column_cells(a), ra_only) &&
                           sorted_intersects(sx.column_cells(b), rb_only);
    if (col_chain || row_chain) {
      v.status = Status::Holds;
      add_tag(v, Rule::TwoBlockChainClosure);
      return v;
    }
  }

  v.status = Status::Unknown;
  v.descriptor = "necessary conditions hold; no exact closure applies to this support pattern";
  return v;
}

// ---------------------------------------------------------------------------
// Sufficient condition for support identifiability.
// ---------------------------------------------------------------------------

Verdict check_support_identifiability_sc(const RankOneTuple& c, const PairFamily& omega,
                                         const Tolerance& tol, const Budget& budget) {
  const int m = omega.left_rows();
  const int n = omega.right_rows();
  const int r = omega.inner_dim();
  require_dims(static_cast<int>(c.size()) == r, "tuple length must match the family");
  for (const auto& ci : c)
    require_dims(static_cast<int>(ci.rows()) == m && static_cast<int>(ci.cols()) == n,
                 "tuple member dimensions must match the family");
  const bool exact = tol.is_exact();

  Verdict v;
  v.tolerance_used = tol;
  add_tag(v, Rule::SupportIdentifiabilitySC);

  for (int i = 0; i < r; ++i)
    if (numerical_rank(c[static_cast<size_t>(i)], tol) > 1)
      throw NotRankOne("tuple member " + std::to_string(i) + " has rank above one");

  const CMat z = sum_tuple(c, m, n);
  QMatrix qz;
  SupportMatrix zsupp;
  std::vector<SupportMatrix> csupp(static_cast<size_t>(r));
  if (exact) {
    qz = QMatrix(m, n);
    for (int i = 0; i < r; ++i) {
      QMatrix qc = QMatrix::from_complex(c[static_cast<size_t>(i)]);
      csupp[static_cast<size_t>(i)] = support_from_rational(qc);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < n; ++b) qz.at(a, b) = qz.at(a, b) + qc.at(a, b);
    }
    zsupp = support_from_rational(qz);
  } else {
    for (int i = 0; i < r; ++i) csupp[static_cast<size_t>(i)] = support_of(c[static_cast<size_t>(i)], tol);
    zsupp = support_of(z, tol);
  }

  // Rank of the product restricted to a cell set, in the active arithmetic.
  auto block_rank_at_most_one = [&](const SupportMatrix& cells) -> bool {
    if (exact) {
      QMatrix blk(m, n);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < n; ++b)
          if (cells.get(a, b)) blk.at(a, b) = qz.at(a, b);
      return exact_rank(blk) <= 1;
    }
    return rank_at_most_one_on(z, cells, tol);
  };

  std::vector<SupportPair> pairs;
  try {
    pairs = enumerate_pairs(omega, budget);
  } catch (const EnumerationBudgetExceeded& e) {
    v.status = Status::Unknown;
    v.descriptor = std::string("enumeration budget exceeded: ") + e.what();
    return v;
  }

  // Membership and the disjointness surrogate, collecting distinct lifted
  // members along the way.
  std::set<std::vector<SupportMatrix>> motifs;
  bool contained = false;
  for (const auto& sp : pairs) {
    RankOneSupportTuple pat = phi_supports(sp);
    bool hosts = true;
    for (int i = 0; i < r && hosts; ++i)
      hosts = csupp[static_cast<size_t>(i)].is_subset_of(pat[static_cast<size_t>(i)]);
    if (hosts) contained = true;
    for (int i = 0; i < r; ++i)
      for (int j = i + 1; j < r; ++j)
        if (!pat[static_cast<size_t>(i)].disjoint_with(pat[static_cast<size_t>(j)])) {
          v.status = Status::Unknown;
          v.descriptor =
              "a lifted member has overlapping rank-one supports; the disjointness surrogate "
              "does not apply";
          return v;
        }
    motifs.insert(std::move(pat));
  }
  if (!contained)
    throw NotInFamily("the tuple is not supported inside any member of the family");

  // Every completion tuple partitioning supp(Z) into rank-one blocks must be
  // a permutation of every other.
  const std::vector<std::pair<int, int>> cells = zsupp.cells();
  std::set<std::vector<SupportMatrix>> forms;
  long long nodes = 0;
  std::vector<std::vector<std::pair<int, int>>> assign(static_cast<size_t>(r));
  bool budget_hit = false;

  auto validate_leaf = [&](const std::vector<std::vector<std::pair<int, int>>>& parts) {
    std::vector<SupportMatrix> tuple;
    tuple.reserve(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
      SupportMatrix si(m, n);
      std::set<int> rows, colsset;
      for (const auto& cell : parts[static_cast<size_t>(i)]) {
        si.set(cell.first, cell.second);
        rows.insert(cell.first);
        colsset.insert(cell.second);
      }
      if (!parts[static_cast<size_t>(i)].empty() &&
          rows.size() * colsset.size() != parts[static_cast<size_t>(i)].size())
        return;  // not a rank-one pattern
      if (!block_rank_at_most_one(si)) return;
      tuple.push_back(std::move(si));
    }
    std::sort(tuple.begin(), tuple.end());
    forms.insert(std::move(tuple));
  };

  for (const auto& pat : motifs) {
    std::function<void(size_t)> rec = [&](size_t t) {
      if (budget_hit) return;
      if (++nodes > budget.max_members) {
        budget_hit = true;
        return;
      }
      if (t == cells.size()) {
        validate_leaf(assign);
        return;
      }
      for (int i = 0; i < r; ++i) {
        if (!pat[static_cast<size_t>(i)].get(cells[t].first, cells[t].second)) continue;
        assign[static_cast<size_t>(i)].push_back(cells[t]);
        rec(t + 1);
        assign[static_cast<size_t>(i)].pop_back();
      }
    };
    rec(0);
    if (budget_hit) {
      v.status = Status::Unknown;
      v.descriptor = "enumeration budget exceeded while walking rank-one partitions";
      return v;
    }
  }

  if (forms.size() <= 1) {
    v.status = Status::Holds;
    return v;
  }
  v.status = Status::Unknown;
  v.descriptor = "multiple inequivalent rank-one partitions of the product support exist "
                 "within the completions";
  return v;
}

// ---------------------------------------------------------------------------
// Full instance decision.
// ---------------------------------------------------------------------------

Verdict check_instance_ps_uniqueness(const FactorPair& p, const PairFamily& omega,
                                     const Tolerance& tol, const Budget& budget) {
  require_dims(p.X.cols() == p.Y.cols(), "factors must share the inner dimension");
  require_dims(static_cast<int>(p.X.rows()) == omega.left_rows() &&
                   static_cast<int>(p.Y.rows()) == omega.right_rows() &&
                   static_cast<int>(p.X.cols()) == omega.inner_dim(),
               "factor dimensions must match the family");

  Verdict out;
  out.tolerance_used = tol;
  add_tag(out, Rule::StableFamilyCombination);

  bool stable = false;
  try {
    stable = is_stable_by_permutation(omega, budget);
  } catch (const EnumerationBudgetExceeded& e) {
    return unknown_verdict(tol, std::string("enumeration budget exceeded while testing "
                                            "permutation stability: ") + e.what());
  }
  if (!stable) throw NotStable("the family is not stable under joint column permutations");

  const SupportMatrix sx = support_of(p.X, tol);
  const SupportMatrix sy = support_of(p.Y, tol);
  const SupportPair sp{sx, sy};
  bool covered = false;
  try {
    covered = pair_covers(sp, omega, budget);
  } catch (const EnumerationBudgetExceeded& e) {
    return unknown_verdict(tol, std::string("enumeration budget exceeded while testing "
                                            "membership: ") + e.what());
  }
  if (!covered)
    throw NotInFamily("the factor supports are not contained in any member of the family");

  // Columns must vanish together.
  for (int i = 0; i < static_cast<int>(p.X.cols()); ++i) {
    if (sx.column_empty(i) == sy.column_empty(i)) continue;
    FactorPair alt = p;
    std::ostringstream os;
    if (sx.column_empty(i)) {
      alt.Y.col(i).setZero();
      os << "column " << i << " of the left factor is zero while column " << i
         << " of the right factor is not; zeroing the right column preserves the product";
    } else {
      alt.X.col(i).setZero();
      os << "column " << i << " of the right factor is zero while column " << i
         << " of the left factor is not; zeroing the left column preserves the product";
    }
    if (!verify_alternative(p, alt, omega, tol, budget))
      return unknown_verdict(tol, "a degeneracy witness failed re-verification; the instance "
                                  "is numerically marginal");
    out.status = Status::Fails;
    add_tag(out, Rule::IdenticalColumnSupports);
    add_tag(out, Rule::ZeroColumnRecipe);
    out.descriptor = os.str();
    if (tol.is_exact()) out.counterexample_y_exact = QMatrix::from_complex(alt.Y);
    out.counterexample = std::move(alt);
    return out;
  }

  // Column supports must be maximal among containing members.
  std::optional<PairGrowth> growth;
  try {
    growth = pair_growth(sp, omega, budget);
  } catch (const EnumerationBudgetExceeded& e) {
    return unknown_verdict(tol, std::string("enumeration budget exceeded while scanning "
                                            "containing members: ") + e.what());
  }
  if (growth) {
    FactorPair alt = p;
    if (growth->left_side) alt.X(growth->g.row, growth->g.column) = 1.0;
    else alt.Y(growth->g.row, growth->g.column) = 1.0;
    if (!verify_alternative(p, alt, omega, tol, budget))
      return unknown_verdict(tol, "a maximality witness failed re-verification; the instance "
                                  "is numerically marginal");
    out.status = Status::Fails;
    add_tag(out, Rule::MaximalColumnSupports);
    add_tag(out, Rule::ZeroColumnRecipe);
    std::ostringstream os;
    os << "column " << growth->g.column << " of the " << (growth->left_side ? "left" : "right")
       << " factor is zero, yet a containing member supports cell (" << growth->g.row << ", "
       << growth->g.column << "); filling that cell preserves the product";
    out.descriptor = os.str();
    if (tol.is_exact()) out.counterexample_y_exact = QMatrix::from_complex(alt.Y);
    out.counterexample = std::move(alt);
    return out;
  }

  add_tag(out, Rule::TupleLift);
  add_tag(out, Rule::PerSupportSplit);

  // Support identifiability screen.
  const RankOneTuple c = phi(p.X, p.Y);
  const Verdict sc = check_support_identifiability_sc(c, omega, tol, budget);
  merge_tags(out, sc);
  bool any_unknown = sc.status != Status::Holds;
  std::optional<std::string> unknown_why =
      any_unknown ? sc.descriptor : std::optional<std::string>{};

  // Per containing support pair: uniqueness of the contribution tuple.
  std::vector<SupportPair> containing;
  try {
    containing = enumerate_containing_pairs(omega, sp, budget);
  } catch (const EnumerationBudgetExceeded& e) {
    return unknown_verdict(tol, std::string("enumeration budget exceeded while collecting "
                                            "containing members: ") + e.what());
  }
  for (const auto& sbar : containing) {
    Verdict nc = check_fixed_support_nc(p, sbar, tol);
    if (nc.status == Status::Fails) {
      merge_tags(out, nc);
      out.status = Status::Fails;
      std::ostringstream os;
      os << "at a containing support pair: " << nc.descriptor.value_or("necessary condition violated");
      out.descriptor = os.str();
      return out;
    }
    if (nc.status == Status::Unknown) {
      any_unknown = true;
      if (!unknown_why) unknown_why = nc.descriptor;
    } else {
      merge_tags(out, nc);
    }
  }

  if (any_unknown) {
    out.status = Status::Unknown;
    out.descriptor = unknown_why.value_or("no implemented criterion settled the question");
    return out;
  }
  out.status = Status::Holds;
  return out;
}

}  // namespace sfid
