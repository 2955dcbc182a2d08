#include "sfid/uniform.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sfid/linalg.hpp"

namespace sfid {

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

// Can any member of the family place a nonzero entry in column j?
bool family_allows_column(const SupportFamily& f, int j, const Budget& budget) {
  if (f.kind() != FamilyKind::Enumerated && f.downward_closed_by_construction()) {
    for (int i = 0; i < f.rows(); ++i) {
      SupportMatrix probe(f.rows(), f.cols());
      probe.set(i, j);
      if (member(probe, f)) return true;
    }
    return false;
  }
  for (const auto& t : enumerate_family(f, budget))
    if (!t.column_empty(j)) return true;
  return false;
}

// Column-wise union of a support over a partition of its columns.
SupportMatrix support_fingerprint(const SupportMatrix& s,
                                  const std::vector<std::vector<int>>& classes) {
  SupportMatrix out(s.rows(), static_cast<int>(classes.size()));
  for (int k = 0; k < static_cast<int>(classes.size()); ++k)
    for (int i : classes[k])
      for (int row : s.column_cells(i)) out.set(row, k);
  return out;
}

// Enumeration-free description of a classical family's member shapes:
// how many cells one row (or one column) of a member may carry, and the cap
// on unions of two row supports. Invalid for lists and irregular mixes.
struct ClosedForm {
  bool valid = false;
  long row_bound = 0;
  long col_bound = 0;
  bool union_all = false;  // unions of row supports may reach every column
  long union_cap = 0;
};

ClosedForm closed_form(const SupportFamily& f) {
  ClosedForm c;
  const long n = f.rows();
  const long r = f.cols();
  auto fill = [&](long row_allow, long col_allow, bool all, long cap) {
    c.valid = true;
    c.row_bound = std::max(0L, std::min(row_allow, r));
    c.col_bound = std::max(0L, std::min(col_allow, n));
    c.union_all = all;
    c.union_cap = std::max(0L, cap);
  };
  switch (f.kind()) {
    case FamilyKind::RowSparse: {
      const long l = f.param();
      fill(l, l >= 1 ? n : 0, false, 2 * l);
      break;
    }
    case FamilyKind::ColumnSparse: {
      const long k = f.param();
      fill(k >= 1 ? r : 0, k, k >= 1, 0);
      break;
    }
    case FamilyKind::GlobalSparse: {
      const long s = f.param();
      fill(s, s, false, 2 * s);
      break;
    }
    case FamilyKind::Regular: {
      const long k = f.param();
      fill(k, k, false, 2 * k);
      break;
    }
    case FamilyKind::Intersection: {
      const auto& parts = f.parts();
      if (parts.size() == 2) {
        const SupportFamily* row = nullptr;
        const SupportFamily* col = nullptr;
        for (const auto& part : parts) {
          if (part.kind() == FamilyKind::RowSparse) row = &part;
          if (part.kind() == FamilyKind::ColumnSparse) col = &part;
        }
        if (row && col) {
          const long alpha = row->param();
          const long beta = col->param();
          if (beta == 0 || alpha == 0) fill(0, 0, false, 0);
          else fill(alpha, beta, false, 2 * alpha);
        }
      }
      break;
    }
    case FamilyKind::Enumerated:
      break;
  }
  return c;
}

// Placement freedom within one collinearity class of size p >= 2, given the
// family's per-row allowance a and per-column allowance b inside the class
// block. Two cells of one row move mass between class columns; a single cell
// per row with tall columns (b >= 2, n >= 2) lets one column absorb what two
// columns carried. Either way some right factor is not pinned.
bool class_placement_fails(long a, long b, int n) {
  if (a >= 2) return true;
  return a == 1 && b >= 2 && n >= 2;
}

}  // namespace

bool uniform_emd_fixed_support(const RankOneSupportTuple& s) {
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t j = i + 1; j < s.size(); ++j)
      if (!s[i].disjoint_with(s[j])) return false;
  return true;
}

Verdict s_uniqueness_fixed_support(const FactorPair& p, const SupportPair& s,
                                   const Tolerance& tol) {
  require_dims(p.X.cols() == p.Y.cols(), "factors must share the inner dimension");
  require_dims(s.left.rows() == static_cast<int>(p.X.rows()) &&
                   s.left.cols() == static_cast<int>(p.X.cols()) &&
                   s.right.rows() == static_cast<int>(p.Y.rows()) &&
                   s.right.cols() == static_cast<int>(p.Y.cols()),
               "support pair dimensions must match the factors");
  if (!uniform_emd_fixed_support(phi_supports(s)))
    throw PreconditionNotMet("the rank-one supports of the pair overlap");
  const SupportMatrix sx = support_of(p.X, tol);
  const SupportMatrix sy = support_of(p.Y, tol);
  if (!sx.is_subset_of(s.left) || !sy.is_subset_of(s.right))
    throw NotInSupport("the factors are not supported inside the given pair");

  Verdict v;
  v.tolerance_used = tol;
  add_tag(v, Rule::ScalingOnlyAmbiguity);
  add_tag(v, Rule::DisjointSupports);
  for (int j = 0; j < sx.cols(); ++j) {
    if (sx.column_empty(j) != sy.column_empty(j)) {
      v.status = Status::Fails;
      add_tag(v, Rule::IdenticalColumnSupports);
      std::ostringstream os;
      os << "column " << j << " is zero in one factor and nonzero in the other";
      v.descriptor = os.str();
      return v;
    }
    const bool left_dead = sx.column_empty(j) && !s.left.column_empty(j);
    const bool right_dead = sy.column_empty(j) && !s.right.column_empty(j);
    if (left_dead || right_dead) {
      v.status = Status::Fails;
      add_tag(v, Rule::MaximalColumnSupports);
      std::ostringstream os;
      os << "column " << j << " of the " << (left_dead ? "left" : "right")
         << " factor is zero although its support column is not";
      v.descriptor = os.str();
      return v;
    }
  }
  v.status = Status::Holds;
  return v;
}

Verdict uniform_emd_family(const PairFamily& omega, const Budget& budget) {
  Verdict v;
  add_tag(v, Rule::UniformTupleFamily);

  const std::vector<SupportPair> pairs = enumerate_pairs(omega, budget);
  std::set<std::vector<SupportMatrix>> motifs;
  for (const auto& sp : pairs) {
    RankOneSupportTuple pat = phi_supports(sp);
    for (size_t i = 0; i < pat.size(); ++i)
      for (size_t j = i + 1; j < pat.size(); ++j)
        if (!pat[i].disjoint_with(pat[j])) {
          v.status = Status::Fails;
          add_tag(v, Rule::DisjointSupports);
          std::ostringstream os;
          os << "a lifted member's supports " << i << " and " << j << " overlap";
          v.descriptor = os.str();
          v.support_tuple_witness = std::make_pair(pat, pat);
          return v;
        }
    motifs.insert(std::move(pat));
  }

  // Sub-tuples grouped by the union of their cells: within one union class,
  // every tuple must be a reordering of every other.
  const int m = omega.left_rows();
  const int n = omega.right_rows();
  const int r = omega.inner_dim();
  std::map<SupportMatrix, std::pair<std::vector<SupportMatrix>, RankOneSupportTuple>> by_union;
  long long nodes = 0;

  for (const auto& pat : motifs) {
    // Per member: the empty support plus every nonempty sub-rectangle.
    std::vector<std::vector<SupportMatrix>> choices(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
      std::vector<int> rows, cols;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < n; ++b)
          if (pat[static_cast<size_t>(i)].get(a, b)) {
            if (std::find(rows.begin(), rows.end(), a) == rows.end()) rows.push_back(a);
            if (std::find(cols.begin(), cols.end(), b) == cols.end()) cols.push_back(b);
          }
      std::vector<SupportMatrix>& opts = choices[static_cast<size_t>(i)];
      opts.push_back(SupportMatrix(m, n));
      const size_t rowsets = (1u << rows.size());
      const size_t colsets = (1u << cols.size());
      for (size_t ra = 1; ra < rowsets; ++ra)
        for (size_t cb = 1; cb < colsets; ++cb) {
          SupportMatrix sub(m, n);
          for (size_t ri = 0; ri < rows.size(); ++ri)
            for (size_t ci = 0; ci < cols.size(); ++ci)
              if ((ra >> ri & 1u) && (cb >> ci & 1u)) sub.set(rows[ri], cols[ci]);
          opts.push_back(std::move(sub));
        }
    }

    std::vector<int> pick(static_cast<size_t>(r), 0);
    bool done = r == 0;
    while (true) {
      if (++nodes > budget.max_members)
        throw EnumerationBudgetExceeded("too many sub-tuples while testing uniform recovery");
      RankOneSupportTuple tuple;
      tuple.reserve(static_cast<size_t>(r));
      SupportMatrix uni(m, n);
      for (int i = 0; i < r; ++i) {
        const SupportMatrix& si = choices[static_cast<size_t>(i)][static_cast<size_t>(pick[static_cast<size_t>(i)])];
        tuple.push_back(si);
        uni = uni | si;
      }
      std::vector<SupportMatrix> form = tuple;
      std::sort(form.begin(), form.end());
      auto it = by_union.find(uni);
      if (it == by_union.end()) {
        by_union.emplace(uni, std::make_pair(std::move(form), std::move(tuple)));
      } else if (it->second.first != form) {
        v.status = Status::Fails;
        std::ostringstream os;
        os << "two sub-tuples share the union of their cells but are not reorderings "
              "of each other";
        v.descriptor = os.str();
        v.support_tuple_witness = std::make_pair(it->second.second, tuple);
        return v;
      }
      if (done) break;
      int i = 0;
      while (i < r) {
        if (++pick[static_cast<size_t>(i)] <
            static_cast<int>(choices[static_cast<size_t>(i)].size()))
          break;
        pick[static_cast<size_t>(i)] = 0;
        ++i;
      }
      if (i == r) break;
    }
    if (r == 0) break;  // a single empty tuple suffices
  }

  v.status = Status::Holds;
  return v;
}

// ---------------------------------------------------------------------------
// Uniform right identifiability.
// ---------------------------------------------------------------------------

Verdict uniform_right_identifiability(const CMat& x, const SupportFamily& theta,
                                      const Tolerance& tol, const Budget& budget) {
  const int r = static_cast<int>(x.cols());
  const int n = theta.rows();
  require_dims(theta.cols() == r, "family width must match the left factor's column count");

  Verdict v;
  v.tolerance_used = tol;
  add_tag(v, Rule::UniformRightGrouped);
  if (r == 0) {
    v.status = Status::Holds;
    return v;
  }

  const ClosedForm cf = closed_form(theta);
  std::vector<SupportMatrix> members;
  if (!cf.valid) members = enumerate_family(theta, budget);

  // Zero-column reduction: a dead left column must stay dead in the family.
  const std::vector<int> J = nonzero_columns(x, tol);
  std::vector<char> inJ(static_cast<size_t>(r), 0);
  for (int j : J) inJ[static_cast<size_t>(j)] = 1;
  for (int j = 0; j < r; ++j) {
    if (inJ[static_cast<size_t>(j)]) continue;
    bool allows = false;
    if (cf.valid) allows = family_allows_column(theta, j, budget);
    else
      for (const auto& t : members)
        if (!t.column_empty(j)) { allows = true; break; }
    if (allows) {
      v.status = Status::Fails;
      add_tag(v, Rule::RightColumnInclusion);
      std::ostringstream os;
      os << "column " << j << " of the left factor is zero, yet the family allows mass there";
      v.descriptor = os.str();
      return v;
    }
  }
  add_tag(v, Rule::RightColumnInclusion);
  add_tag(v, Rule::ColumnNormalization);

  const CMat xj = select_columns(x, J);
  const CollinearityPartition part = collinearity_partition(xj, tol);
  const int K = static_cast<int>(part.classes.size());
  const CMat xbar = select_columns(xj, part.representatives);

  // Injectivity of the class-sum map against the family's row supports.
  bool injective = true;
  std::string injectivity_why;
  if (cf.valid) {
    if (cf.union_all) {
      std::vector<int> all(static_cast<size_t>(K));
      for (int k = 0; k < K; ++k) all[static_cast<size_t>(k)] = k;
      injective = independent_columns(xbar, all, tol);
      if (!injective) injectivity_why = "the class representatives are linearly dependent";
    } else {
      const int need = static_cast<int>(std::min<long>(K, cf.union_cap));
      const int have = kruskal_rank(xbar, tol);
      injective = have >= need;
      if (!injective) {
        std::ostringstream os;
        os << "the Kruskal rank of the class representatives is " << have
           << " but the family's row supports require " << need;
        injectivity_why = os.str();
      }
    }
  } else {
    std::set<std::vector<int>> rowsupps;
    for (const auto& t : members) {
      const SupportMatrix fp = support_fingerprint(t.restrict_cols(J), part.classes);
      for (int l = 0; l < n; ++l) rowsupps.insert(fp.row_cells(l));
    }
    std::set<std::vector<int>> unions;
    for (const auto& s1 : rowsupps)
      for (const auto& s2 : rowsupps) {
        std::vector<int> u;
        std::set_union(s1.begin(), s1.end(), s2.begin(), s2.end(), std::back_inserter(u));
        unions.insert(std::move(u));
      }
    for (const auto& u : unions) {
      if (independent_columns(xbar, u, tol)) continue;
      injective = false;
      std::ostringstream os;
      os << "the class representatives indexed by a union of two member row supports are "
            "linearly dependent";
      injectivity_why = os.str();
      break;
    }
  }
  if (!injective) {
    v.status = Status::Fails;
    add_tag(v, Rule::InjectivityUnionPairs);
    v.descriptor = injectivity_why;
    return v;
  }
  add_tag(v, Rule::InjectivityUnionPairs);

  // Per-class placement: within one collinearity class the family must not
  // offer two ways to spread the class sum.
  for (int k = 0; k < K; ++k) {
    const std::vector<int>& cls = part.classes[k];
    const int p = static_cast<int>(cls.size());
    if (p <= 1) continue;
    bool fails = false;
    std::string why;
    if (cf.valid) {
      const long a = std::min<long>(cf.row_bound, p);
      const long b = cf.col_bound;
      fails = class_placement_fails(a, b, n);
      if (fails) {
        std::ostringstream os;
        os << "collinearity class of size " << p
           << " admits multiple placements (per-row allowance " << a
           << ", per-column allowance " << b << ")";
        why = os.str();
      }
    } else {
      // Class-restricted column-support tuples of the members.
      std::vector<int> cls_original(cls.size());
      for (size_t u = 0; u < cls.size(); ++u)
        cls_original[u] = J[static_cast<size_t>(cls[u])];
      std::set<std::vector<std::vector<int>>> tuples;
      for (const auto& t : members) {
        std::vector<std::vector<int>> tuple;
        tuple.reserve(cls.size());
        for (int c : cls_original) tuple.push_back(t.column_cells(c));
        tuples.insert(std::move(tuple));
      }
      // Disjointness within each member's class block.
      for (const auto& tuple : tuples) {
        std::set<int> seen;
        for (const auto& col : tuple)
          for (int row : col) {
            if (!seen.insert(row).second) {
              fails = true;
              why = "two class columns of one member share a row";
            }
          }
        if (fails) break;
      }
      // Sub-tuples with equal unions must be reorderings of each other.
      if (!fails) {
        std::map<std::vector<int>, std::vector<std::vector<int>>> by_union;
        long long nodes = 0;
        for (const auto& tuple : tuples) {
          std::vector<int> pickmask(tuple.size(), 0);
          // Iterate sub-tuples: each column independently keeps a subset.
          std::vector<std::vector<std::vector<int>>> opts(tuple.size());
          for (size_t c = 0; c < tuple.size(); ++c) {
            const auto& col = tuple[c];
            const size_t subsets = 1u << col.size();
            for (size_t mset = 0; mset < subsets; ++mset) {
              std::vector<int> sub;
              for (size_t bit = 0; bit < col.size(); ++bit)
                if (mset >> bit & 1u) sub.push_back(col[bit]);
              opts[c].push_back(std::move(sub));
            }
          }
          std::vector<size_t> pick(tuple.size(), 0);
          while (true) {
            if (++nodes > budget.max_members)
              throw EnumerationBudgetExceeded("too many class sub-tuples");
            std::vector<int> uni;
            std::vector<std::vector<int>> sub;
            sub.reserve(tuple.size());
            for (size_t c = 0; c < tuple.size(); ++c) {
              const auto& chosen = opts[c][pick[c]];
              sub.push_back(chosen);
              for (int row : chosen) uni.push_back(row);
            }
            std::sort(uni.begin(), uni.end());
            std::vector<std::vector<int>> form = sub;
            std::sort(form.begin(), form.end());
            auto it = by_union.find(uni);
            if (it == by_union.end()) by_union.emplace(std::move(uni), std::move(form));
            else if (it->second != form) {
              fails = true;
              why = "two class sub-tuples share their row union but are not reorderings";
              break;
            }
            size_t c = 0;
            while (c < tuple.size()) {
              if (++pick[c] < opts[c].size()) break;
              pick[c] = 0;
              ++c;
            }
            if (c == tuple.size()) break;
          }
          if (fails) break;
        }
      }
    }
    if (fails) {
      v.status = Status::Fails;
      add_tag(v, Rule::UniformOnesRow);
      v.descriptor = why;
      return v;
    }
  }
  add_tag(v, Rule::UniformOnesRow);

  v.status = Status::Holds;
  return v;
}

Verdict uniform_right_classical(const CMat& x, ClassicalKind kind, int a, int b, int n,
                                const Tolerance& tol, const Budget& budget) {
  const int r = static_cast<int>(x.cols());
  require(n >= 0 && a >= 0 && b >= 0, "bounds and row count must be nonnegative");

  Rule rule = Rule::ClassicalRowSparse;
  bool side_ok = true;
  long threshold = 0;
  switch (kind) {
    case ClassicalKind::RowSparse:
      rule = Rule::ClassicalRowSparse;
      side_ok = n >= 2 || a >= 2;
      threshold = std::min<long>(r, 2L * a);
      break;
    case ClassicalKind::ColumnSparse:
      rule = Rule::ClassicalColumnSparse;
      side_ok = a >= 1;  // an empty family needs no threshold
      threshold = r;
      break;
    case ClassicalKind::RowAndColumn:
      rule = Rule::ClassicalRowAndColumn;
      // A zero column bound empties the family, which the row threshold
      // cannot see, so that case also goes through the general route.
      side_ok = b >= 1 && (a >= 2 || (n >= 2 && b >= 2));
      threshold = std::min<long>(r, 2L * a);
      break;
    case ClassicalKind::GlobalSparse:
      rule = Rule::ClassicalGlobalSparse;
      // The threshold misclassifies duplicated columns when the budget is a
      // single cell, so that case goes through the general route.
      side_ok = a >= 2;
      threshold = std::min<long>(r, 2L * a);
      break;
  }

  auto general_family = [&]() {
    switch (kind) {
      case ClassicalKind::RowSparse: return SupportFamily::row_sparse(n, r, a);
      case ClassicalKind::ColumnSparse: return SupportFamily::column_sparse(n, r, a);
      case ClassicalKind::RowAndColumn:
        return SupportFamily::intersection(
            {SupportFamily::row_sparse(n, r, a), SupportFamily::column_sparse(n, r, b)});
      case ClassicalKind::GlobalSparse: return SupportFamily::global_sparse(n, r, a);
    }
    return SupportFamily::global_sparse(n, r, 0);
  };

  if (!side_ok) {
    Verdict v = uniform_right_identifiability(x, general_family(), tol, budget);
    add_tag(v, rule);
    std::ostringstream os;
    os << "threshold side condition not met; decided by the general route";
    if (v.descriptor) os << ": " << *v.descriptor;
    v.descriptor = os.str();
    return v;
  }

  Verdict v;
  v.tolerance_used = tol;
  add_tag(v, rule);
  const int have = kruskal_rank(x, tol);
  if (have >= threshold) {
    v.status = Status::Holds;
    return v;
  }
  v.status = Status::Fails;
  std::ostringstream os;
  os << "Kruskal rank " << have << " is below the required threshold " << threshold;
  v.descriptor = os.str();
  return v;
}

}  // namespace sfid
