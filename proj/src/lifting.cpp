#include "sfid/lifting.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>

#include "sfid/linalg.hpp"
#include "sfid/rational.hpp"

namespace sfid {

namespace {

bool matrices_equal(const CMat& a, const CMat& b, const Tolerance& tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (tol.is_exact()) return a == b;
  double scale = std::max({1.0, a.norm(), b.norm()});
  return (a - b).norm() <= tol.relative_eps * scale;
}

// Kuhn's augmenting-path matching. adj[u] lists right nodes compatible with
// left node u; returns for each left node its matched right node, or absent
// when no perfect matching exists. Deterministic: nodes and neighbors are
// scanned in increasing order.
std::optional<std::vector<int>> perfect_matching(const std::vector<std::vector<int>>& adj,
                                                 int right_count) {
  int left_count = static_cast<int>(adj.size());
  std::vector<int> match_right(static_cast<size_t>(right_count), -1);
  std::vector<char> visited;

  std::function<bool(int)> augment = [&](int u) -> bool {
    for (int v : adj[static_cast<size_t>(u)]) {
      if (visited[static_cast<size_t>(v)]) continue;
      visited[static_cast<size_t>(v)] = 1;
      if (match_right[static_cast<size_t>(v)] < 0 || augment(match_right[static_cast<size_t>(v)])) {
        match_right[static_cast<size_t>(v)] = u;
        return true;
      }
    }
    return false;
  };

  for (int u = 0; u < left_count; ++u) {
    visited.assign(static_cast<size_t>(right_count), 0);
    if (!augment(u)) return std::nullopt;
  }
  std::vector<int> match_left(static_cast<size_t>(left_count), -1);
  for (int v = 0; v < right_count; ++v)
    if (match_right[static_cast<size_t>(v)] >= 0)
      match_left[static_cast<size_t>(match_right[static_cast<size_t>(v)])] = v;
  return match_left;
}

bool column_is_zero(const CMat& m, int j, double thr) {
  for (int i = 0; i < m.rows(); ++i)
    if (std::abs(m(i, j)) > thr) return false;
  return true;
}

// Best collinearity fit: scalar s minimizing ||target - s * base||.
cx collinear_fit(const CVec& base, const CVec& target) {
  double n2 = base.squaredNorm();
  if (n2 == 0.0) return cx(0, 0);
  return base.dot(target) / n2;  // Eigen's dot conjugates its first argument
}

bool columns_match_scaled(const CVec& base, const CVec& target, cx s, const Tolerance& tol) {
  double scale = std::max({1.0, base.norm(), target.norm()});
  return (target - s * base).norm() <= tol.relative_eps * scale;
}

bool exact_columns_match_scaled(const QMatrix& base, int bc, const QMatrix& target, int tc,
                                const GaussianRational& s) {
  for (int i = 0; i < base.rows(); ++i)
    if (!(target.at(i, tc) == s * base.at(i, bc))) return false;
  return true;
}

bool exact_column_zero(const QMatrix& m, int j) {
  for (int i = 0; i < m.rows(); ++i)
    if (!m.at(i, j).is_zero()) return false;
  return true;
}

// Scaling s with target = s * base, when the columns are exactly collinear.
std::optional<GaussianRational> exact_scaling(const QMatrix& base, int bc, const QMatrix& target,
                                              int tc) {
  int lead = -1;
  for (int i = 0; i < base.rows(); ++i) {
    if (!base.at(i, bc).is_zero()) {
      lead = i;
      break;
    }
  }
  if (lead < 0) return std::nullopt;  // zero base column cannot be scaled up
  GaussianRational s = target.at(lead, tc) / base.at(lead, bc);
  if (!exact_columns_match_scaled(base, bc, target, tc, s)) return std::nullopt;
  return s;
}

}  // namespace

RankOneTuple phi(const CMat& x, const CMat& y) {
  require_dims(x.cols() == y.cols(), "factors must share the number of columns");
  RankOneTuple c;
  c.reserve(static_cast<size_t>(x.cols()));
  for (int i = 0; i < x.cols(); ++i) c.push_back(x.col(i) * y.col(i).transpose());
  return c;
}

RankOneSupportTuple phi_supports(const SupportPair& p) {
  RankOneSupportTuple t;
  int r = p.left.cols();
  t.reserve(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) {
    SupportMatrix s = SupportMatrix::zero(p.left.rows(), p.right.rows());
    for (int a = 0; a < p.left.rows(); ++a) {
      if (!p.left.get(a, i)) continue;
      for (int b = 0; b < p.right.rows(); ++b)
        if (p.right.get(b, i)) s.set(a, b, true);
    }
    t.push_back(std::move(s));
  }
  return t;
}

CMat sum_tuple(const RankOneTuple& c, int rows, int cols) {
  if (c.empty()) return CMat::Zero(std::max(rows, 0), std::max(cols, 0));
  CMat z = CMat::Zero(c.front().rows(), c.front().cols());
  for (const auto& m : c) {
    require_dims(m.rows() == z.rows() && m.cols() == z.cols(),
                 "tuple members must share dimensions");
    z += m;
  }
  return z;
}

std::optional<std::vector<int>> tuple_equivalent(const RankOneTuple& a, const RankOneTuple& b,
                                                 const Tolerance& tol) {
  if (a.size() != b.size()) return std::nullopt;
  int r = static_cast<int>(a.size());
  std::vector<std::vector<int>> adj(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (matrices_equal(b[static_cast<size_t>(i)], a[static_cast<size_t>(j)], tol))
        adj[static_cast<size_t>(i)].push_back(j);
  return perfect_matching(adj, r);
}

std::pair<CVec, CVec> factor_from_rank_one(const CMat& c, const Tolerance& tol) {
  int rank = numerical_rank(c, tol);
  if (rank >= 2) throw NotRankOne("matrix has rank greater than one");
  CVec x = CVec::Zero(c.rows());
  CVec y = CVec::Zero(c.cols());
  if (rank == 0) return {x, y};

  double thr = support_threshold(c, tol);
  if (tol.is_exact()) {
    // Any nonzero column is proportional to x; its leading row gives y.
    int j0 = nonzero_columns(c, tol).front();
    int lead = -1;
    for (int i = 0; i < c.rows(); ++i) {
      if (std::abs(c(i, j0)) > thr) {
        lead = i;
        break;
      }
    }
    x = c.col(j0) / c(lead, j0);
    x(lead) = cx(1, 0);
    y = c.row(lead).transpose();
    return {x, y};
  }

  Eigen::JacobiSVD<CMat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  CVec u = svd.matrixU().col(0);
  CVec v = svd.matrixV().col(0).conjugate() * svd.singularValues()(0);
  int lead = -1;
  double umax = u.cwiseAbs().maxCoeff();
  for (int i = 0; i < u.size(); ++i) {
    if (std::abs(u(i)) > tol.relative_eps * umax) {
      lead = i;
      break;
    }
  }
  cx pivot = u(lead);
  x = u / pivot;
  x(lead) = cx(1, 0);
  y = v * pivot;
  return {x, y};
}

std::optional<EquivalenceWitness> pairs_equivalent_exact(const QMatrix& ax, const QMatrix& ay,
                                                         const QMatrix& bx, const QMatrix& by) {
  if (ax.rows() != bx.rows() || ay.rows() != by.rows() || ax.cols() != bx.cols() ||
      ay.cols() != by.cols())
    return std::nullopt;
  int r = ax.cols();
  std::vector<std::vector<int>> adj(static_cast<size_t>(r));
  std::vector<std::vector<cx>> edge_scale(static_cast<size_t>(r),
                                          std::vector<cx>(static_cast<size_t>(r)));
  for (int j = 0; j < r; ++j) {
    for (int k = 0; k < r; ++k) {
      std::optional<GaussianRational> d;
      bool xa_zero = exact_column_zero(ax, k);
      bool xb_zero = exact_column_zero(bx, j);
      if (!xa_zero) {
        d = exact_scaling(ax, k, bx, j);
        if (d && d->is_zero()) d.reset();
      } else if (xb_zero) {
        // X columns both zero: the scaling is pinned by Y (or free).
        if (exact_column_zero(ay, k)) {
          if (exact_column_zero(by, j)) d = GaussianRational(mpq_class(1));
        } else {
          auto e = exact_scaling(ay, k, by, j);
          if (e && !e->is_zero()) d = GaussianRational(mpq_class(1)) / *e;
        }
      }
      if (!d) continue;
      // Verify the reciprocal half.
      GaussianRational inv = GaussianRational(mpq_class(1)) / *d;
      if (!exact_columns_match_scaled(ay, k, by, j, inv)) continue;
      adj[static_cast<size_t>(j)].push_back(k);
      edge_scale[static_cast<size_t>(j)][static_cast<size_t>(k)] = d->to_complex();
    }
  }
  auto match = perfect_matching(adj, r);
  if (!match) return std::nullopt;
  EquivalenceWitness w;
  w.permutation = *match;
  w.scaling.assign(static_cast<size_t>(r), cx(1, 0));
  for (int j = 0; j < r; ++j) {
    int k = (*match)[static_cast<size_t>(j)];
    w.scaling[static_cast<size_t>(k)] = edge_scale[static_cast<size_t>(j)][static_cast<size_t>(k)];
  }
  return w;
}

std::optional<EquivalenceWitness> pairs_equivalent(const FactorPair& a, const FactorPair& b,
                                                   const Tolerance& tol) {
  if (a.X.rows() != b.X.rows() || a.Y.rows() != b.Y.rows() || a.X.cols() != b.X.cols() ||
      a.Y.cols() != b.Y.cols())
    return std::nullopt;
  int r = static_cast<int>(a.X.cols());

  if (tol.is_exact())
    return pairs_equivalent_exact(QMatrix::from_complex(a.X), QMatrix::from_complex(a.Y),
                                  QMatrix::from_complex(b.X), QMatrix::from_complex(b.Y));

  std::vector<std::vector<int>> adj(static_cast<size_t>(r));
  std::vector<std::vector<cx>> edge_scale(static_cast<size_t>(r),
                                          std::vector<cx>(static_cast<size_t>(r)));
  {
    double xthr = std::max(support_threshold(a.X, tol), support_threshold(b.X, tol));
    double ythr = std::max(support_threshold(a.Y, tol), support_threshold(b.Y, tol));
    for (int j = 0; j < r; ++j) {
      for (int k = 0; k < r; ++k) {
        bool xa_zero = column_is_zero(a.X, k, xthr);
        bool xb_zero = column_is_zero(b.X, j, xthr);
        std::optional<cx> d;
        if (!xa_zero) {
          cx fit = collinear_fit(a.X.col(k), b.X.col(j));
          if (std::abs(fit) > 0 && columns_match_scaled(a.X.col(k), b.X.col(j), fit, tol))
            d = fit;
        } else if (xb_zero) {
          bool ya_zero = column_is_zero(a.Y, k, ythr);
          bool yb_zero = column_is_zero(b.Y, j, ythr);
          if (ya_zero) {
            if (yb_zero) d = cx(1, 0);
          } else {
            cx e = collinear_fit(a.Y.col(k), b.Y.col(j));
            if (std::abs(e) > 0 && columns_match_scaled(a.Y.col(k), b.Y.col(j), e, tol))
              d = cx(1, 0) / e;
          }
        }
        if (!d) continue;
        if (!columns_match_scaled(a.Y.col(k), b.Y.col(j), cx(1, 0) / *d, tol)) continue;
        adj[static_cast<size_t>(j)].push_back(k);
        edge_scale[static_cast<size_t>(j)][static_cast<size_t>(k)] = *d;
      }
    }
  }

  auto match = perfect_matching(adj, r);
  if (!match) return std::nullopt;
  EquivalenceWitness w;
  w.permutation = *match;
  w.scaling.assign(static_cast<size_t>(r), cx(1, 0));
  for (int j = 0; j < r; ++j) {
    int k = (*match)[static_cast<size_t>(j)];
    w.scaling[static_cast<size_t>(k)] = edge_scale[static_cast<size_t>(j)][static_cast<size_t>(k)];
  }
  return w;
}

std::optional<std::vector<int>> pairs_equivalent_perm_only(const FactorPair& a,
                                                           const FactorPair& b,
                                                           const Tolerance& tol) {
  if (a.X.rows() != b.X.rows() || a.Y.rows() != b.Y.rows() || a.X.cols() != b.X.cols() ||
      a.Y.cols() != b.Y.cols())
    return std::nullopt;
  int r = static_cast<int>(a.X.cols());
  std::vector<std::vector<int>> adj(static_cast<size_t>(r));
  for (int j = 0; j < r; ++j)
    for (int k = 0; k < r; ++k)
      if (matrices_equal(b.X.col(j), a.X.col(k), tol) &&
          matrices_equal(b.Y.col(j), a.Y.col(k), tol))
        adj[static_cast<size_t>(j)].push_back(k);
  return perfect_matching(adj, r);
}

}  // namespace sfid
