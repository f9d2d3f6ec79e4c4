#pragma once

#include <algorithm>
#include <climits>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idemq/complex.hpp"
#include "idemq/parallel.hpp"

namespace idemq {

// Dimension per (homological degree, weight) with stabilization flags.
struct BigradedTable {
  struct Cell {
    std::size_t dim = 0;
    bool stable = true;
  };
  std::string name;
  int trusted_degree_max = INT_MAX;
  std::map<std::pair<int, Weight>, Cell> cells;
  std::map<int, bool> degree_stable;  // degrees computed, and whether every cell stabilized
  std::map<int, int> stable_level;    // degree -> level at which the verdict was reached

  void add(int d, const Weight& w, std::size_t dim, bool stable) {
    auto& c = cells[{d, w}];
    c.dim += dim;
    c.stable = c.stable && stable;
    auto it = degree_stable.find(d);
    if (it == degree_stable.end()) degree_stable[d] = stable;
    else it->second = it->second && stable;
  }
  void mark_degree(int d) { degree_stable.emplace(d, true); }

  std::size_t total(int d) const {
    std::size_t s = 0;
    for (auto& [k, c] : cells)
      if (k.first == d) s += c.dim;
    return s;
  }
  std::vector<std::size_t> totals(int lo, int hi) const {
    std::vector<std::size_t> v;
    for (int d = lo; d <= hi; ++d) v.push_back(total(d));
    return v;
  }
  std::size_t at(int d, const Weight& w) const {
    auto it = cells.find({d, w});
    return it == cells.end() ? 0 : it->second.dim;
  }
  bool stable(int d) const {
    auto it = degree_stable.find(d);
    return it != degree_stable.end() && it->second;
  }
  bool all_stable() const {
    for (auto& [d, s] : degree_stable)
      if (!s) return false;
    return true;
  }
  // Drops zero cells; equality then compares the nonzero part only.
  BigradedTable pruned() const {
    BigradedTable t = *this;
    for (auto it = t.cells.begin(); it != t.cells.end();)
      it = it->second.dim == 0 ? t.cells.erase(it) : std::next(it);
    return t;
  }
  bool same_dims(const BigradedTable& o) const {
    auto a = pruned(), b = o.pruned();
    if (a.cells.size() != b.cells.size()) return false;
    for (auto& [k, c] : a.cells) {
      auto it = b.cells.find(k);
      if (it == b.cells.end() || it->second.dim != c.dim) return false;
    }
    return true;
  }
};

// Homology of one strand in one degree with representatives, so that maps can
// be expressed in coordinates.
template <class F>
struct CellHomology {
  std::vector<std::uint32_t> members;
  ColumnEchelon<F> echelon;  // boundaries (untracked), then representatives (tracked)
  std::vector<SparseVec<F>> reps;
  std::size_t dim() const { return reps.size(); }
  // Coordinates of a cycle (given over the members) in the representative basis.
  SparseVec<F> coords(const SparseVec<F>& z) const { return echelon.reduce(z).coeffs; }
};

template <class F>
CellHomology<F> cell_homology(const FreeComplex<F>& x, int d, const std::vector<std::uint32_t>& below,
                              const std::vector<std::uint32_t>& here, const std::vector<std::uint32_t>& above) {
  const F& f = x.field;
  CellHomology<F> h;
  h.members = here;
  h.echelon = ColumnEchelon<F>(f, here.size(), true);
  if (here.empty()) return h;
  if (auto up = x.d(d + 1); up && !above.empty()) {
    auto b = restrict_to(*up, here, above);
    for (std::size_t j = 0; j < b.cols(); ++j) h.echelon.insert(b.col(j));
  }
  std::vector<SparseVec<F>> cycles;
  if (auto dn = x.d(d); dn && !below.empty()) {
    cycles = rank_kernel(restrict_to(*dn, below, here)).kernel;
  } else {
    for (std::uint32_t i = 0; i < here.size(); ++i) cycles.push_back({{i, f.one()}});
  }
  for (auto& z : cycles)
    if (h.echelon.insert(z, static_cast<long>(h.reps.size())).independent) h.reps.push_back(z);
  return h;
}

// Plain homology table of a complex over lattice cells.
template <class F>
BigradedTable homology(const FreeComplex<F>& x, int dlo, int dhi, const Lattice& lat, std::string name = "H") {
  BigradedTable t;
  t.name = std::move(name);
  t.trusted_degree_max = std::min(dhi, x.exact_top());
  auto s = build_strands(x, dlo - 1, dhi + 1, lat);
  std::vector<std::vector<std::size_t>> dims(s.cells.size());
  parallel_for(s.cells.size(), [&](std::size_t c) {
    auto& mem = s.members[c];
    dims[c].resize(dhi - dlo + 1);
    std::vector<std::size_t> ranks(dhi - dlo + 3, 0);  // rank of d_k for k in [dlo, dhi+1]
    for (int k = dlo; k <= dhi + 1; ++k) {
      auto m = x.d(k);
      if (!m) continue;
      const auto& rows = mem[k - 1 - (dlo - 1)];
      const auto& cols = mem[k - (dlo - 1)];
      if (rows.empty() || cols.empty()) continue;
      ranks[k - dlo] = rank(restrict_to(*m, rows, cols));
    }
    for (int d = dlo; d <= dhi; ++d)
      dims[c][d - dlo] = mem[d - (dlo - 1)].size() - ranks[d - dlo] - ranks[d + 1 - dlo];
  });
  for (int d = dlo; d <= dhi; ++d) t.mark_degree(d);
  for (std::size_t c = 0; c < s.cells.size(); ++c)
    for (int d = dlo; d <= dhi; ++d)
      if (dims[c][d - dlo]) t.add(d, x.ring->spec().weight(s.cells[c]), dims[c][d - dlo], true);
  return t;
}

// ---------------------------------------------------------------------------
// Filtered colimits of finite-dimensional spaces.

template <class F>
struct ColimitTower {
  std::vector<std::size_t> dims;      // V_l for consecutive levels
  std::vector<DenseMatrix<F>> maps;   // maps[i]: V_i -> V_{i+1}
};

struct Stabilization {
  enum class Flag { Stable, Unstable };
  std::size_t dim = 0;
  Flag flag = Flag::Unstable;
  bool stable() const { return flag == Flag::Stable; }
};

template <class F>
DenseMatrix<F> composite(const F& f, const ColimitTower<F>& t, std::size_t a, std::size_t b) {
  DenseMatrix<F> m = DenseMatrix<F>::identity(f, t.dims[a]);
  for (std::size_t i = a; i < b; ++i) m = multiply(f, t.maps[i], m);
  return m;
}

// Decides the colimit from the last levels with window L:
//  - the composite V_{top-L} -> V_top is an isomorphism: colimit = V_top;
//  - all composites V_l -> V_{l+L} over the window vanish and no space in the
//    window is smaller than V_top: colimit = 0;
//  - composite ranks over the window agree with the long composite and are
//    positive (or the window is all zero): colimit has that rank.
// Anything else is Unstable.
template <class F>
Stabilization colimit_stabilize(const F& f, const ColimitTower<F>& t, int window) {
  Stabilization s;
  if (window < 1) throw std::invalid_argument("colimit window must be positive");
  std::size_t L = static_cast<std::size_t>(window);
  if (t.dims.size() < L + 1) return s;
  std::size_t top = t.dims.size() - 1;
  auto r = [&](std::size_t a, std::size_t b) { return rank(f, composite(f, t, a, b)); };
  if (t.dims[top - L] == t.dims[top] && r(top - L, top) == t.dims[top]) {
    s.flag = Stabilization::Flag::Stable;
    s.dim = t.dims[top];
    return s;
  }
  std::size_t first = top >= 2 * L ? top - 2 * L : 0;
  bool zero = true;
  for (std::size_t l = first; l + L <= top && zero; ++l) zero = r(l, l + L) == 0 && t.dims[l] >= t.dims[top];
  if (zero) {
    s.flag = Stabilization::Flag::Stable;
    s.dim = 0;
    return s;
  }
  if (top >= 2 * L) {
    std::size_t k = r(first, first + L);
    bool same = true;
    for (std::size_t l = first; l + L <= top && same; ++l) same = r(l, l + L) == k;
    // a zero composite pattern with classes appearing late means the tower is still growing
    bool quiet = k > 0;
    if (!quiet) {
      quiet = true;
      for (std::size_t l = first; l <= top; ++l) quiet = quiet && t.dims[l] == 0;
    }
    if (same && quiet && r(first, top) == k) {
      s.flag = Stabilization::Flag::Stable;
      s.dim = k;
    }
  }
  return s;
}

// A complex per level with chain maps to the next level.
template <class F>
struct LevelSystem {
  std::function<ComplexPtr<F>(int level)> complex;
  std::function<ChainMap<F>(int level)> transition;  // level -> level + 1
};

struct StabilizeParams {
  int window = 2;
  int max_level = 6;
  int first_top = 4;       // first level at which a verdict is attempted
  int resolve_level = 0;   // lattice of cells
  std::int64_t weight_cap = INT64_MAX;
};

// Per cell: homology spaces at each level and the maps between them.
template <class F>
struct CellTower {
  Multidegree alpha;
  int degree = 0;
  ColimitTower<F> tower;
  Stabilization verdict;
};

// Colimit over levels of H_d, for d in [dlo, dhi], with level raising until every
// cell stabilizes or max_level is reached. Cells are taken on the lattice of
// params.resolve_level; cells absent at a level contribute zero spaces.
template <class F>
BigradedTable stabilized_homology(const LevelSystem<F>& sys, int dlo, int dhi, const StabilizeParams& p,
                                  std::string name, std::vector<CellTower<F>>* towers_out = nullptr) {
  if (p.resolve_level > p.first_top - p.window)
    throw std::invalid_argument("resolve level must not exceed first_top - window");
  Lattice lat{p.resolve_level, p.weight_cap};
  std::vector<ComplexPtr<F>> cx;
  std::vector<ChainMap<F>> tr;
  struct LevelCells {
    StrandIndex strands;
    // per cell index, per degree
    std::vector<std::vector<CellHomology<F>>> homs;
  };
  std::vector<LevelCells> lv;
  auto compute_level = [&](int l) {
    cx.push_back(sys.complex(l));
    const auto& x = *cx.back();
    LevelCells c;
    c.strands = build_strands(x, dlo - 1, dhi + 1, lat);
    c.homs.resize(c.strands.cells.size());
    parallel_for(c.strands.cells.size(), [&](std::size_t i) {
      auto& mem = c.strands.members[i];
      for (int d = dlo; d <= dhi; ++d)
        c.homs[i].push_back(cell_homology(x, d, mem[d - 1 - (dlo - 1)], mem[d - (dlo - 1)], mem[d + 1 - (dlo - 1)]));
    });
    lv.push_back(std::move(c));
    if (l > 0) tr.push_back(sys.transition(l - 1));
  };
  compute_level(0);
  F f = cx[0]->field;
  int top = std::max(p.first_top, p.window);
  for (int l = 1; l <= std::min(top, p.max_level); ++l) compute_level(l);
  top = std::min(top, p.max_level);

  BigradedTable t;
  t.name = std::move(name);
  std::vector<CellTower<F>> towers;
  for (;;) {
    // union of cells over levels
    std::map<Multidegree, int, WeightOrder> all;
    for (auto& c : lv)
      for (auto& a : c.strands.cells) all.emplace(a, 0);
    std::vector<Multidegree> cells;
    for (auto& [a, _] : all) cells.push_back(a);
    towers.assign(cells.size() * (dhi - dlo + 1), {});
    parallel_for(cells.size(), [&](std::size_t ci) {
      const auto& a = cells[ci];
      for (int d = dlo; d <= dhi; ++d) {
        auto& ct = towers[ci * (dhi - dlo + 1) + (d - dlo)];
        ct.alpha = a;
        ct.degree = d;
        std::vector<const CellHomology<F>*> hs;
        for (auto& c : lv) {
          auto idx = c.strands.find(a);
          hs.push_back(idx ? &c.homs[*idx][d - dlo] : nullptr);
          ct.tower.dims.push_back(idx ? c.homs[*idx][d - dlo].dim() : 0);
        }
        for (std::size_t l = 0; l + 1 < lv.size(); ++l) {
          DenseMatrix<F> m(f, ct.tower.dims[l + 1], ct.tower.dims[l]);
          if (hs[l] && hs[l + 1] && hs[l]->dim() && hs[l + 1]->dim()) {
            const SparseMatrix<F>* lam = tr[l].at(d);
            if (lam) {
              auto local = restrict_to(*lam, hs[l + 1]->members, hs[l]->members);
              for (std::size_t k = 0; k < hs[l]->reps.size(); ++k) {
                auto img = local.apply(hs[l]->reps[k]);
                auto red = hs[l + 1]->echelon.reduce(img);
                if (!red.residual.empty()) throw InvariantViolation("transition does not map cycles to cycles");
                for (auto& [j, v] : red.coeffs) m(j, k) = v;
              }
            }
          }
          ct.tower.maps.push_back(std::move(m));
        }
        ct.verdict = colimit_stabilize(f, ct.tower, p.window);
      }
    });
    bool all_stable = true;
    for (auto& ct : towers) all_stable = all_stable && ct.verdict.stable();
    if (all_stable || top >= p.max_level) break;
    ++top;
    compute_level(top);
  }
  int trusted = dhi;
  for (auto& c : cx) trusted = std::min(trusted, c->exact_top());
  t.trusted_degree_max = trusted;
  const RingSpec& spec = cx[0]->ring->spec();
  for (int d = dlo; d <= dhi; ++d) {
    t.mark_degree(d);
    t.stable_level[d] = top;
  }
  for (auto& ct : towers) {
    std::size_t dim = ct.verdict.stable() ? ct.verdict.dim : ct.tower.dims.back();
    if (dim || !ct.verdict.stable()) t.add(ct.degree, spec.weight(ct.alpha), dim, ct.verdict.stable());
  }
  if (towers_out) *towers_out = std::move(towers);
  return t;
}

}  // namespace idemq
