#pragma once

#include <algorithm>
#include <climits>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "idemq/ring.hpp"
#include "idemq/sparse_matrix.hpp"

namespace idemq {

// Raised when a computation needs data beyond its weight or degree bounds.
struct BoundExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an internal invariant fails (a lift that must exist does not, ...).
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};


// Maps between free modules are stored as scalar matrices: entry (a, b) = c
// stands for c * x^{deg(b) - deg(a)}. Since every map is multihomogeneous the
// monomial is implied by the generator degrees. An entry is legal only when that
// monomial exists in the ring and is outside the truncation ideal.

inline bool legal_entry(const LevelRing& r, const Multidegree& row_deg, const Multidegree& col_deg) {
  return r.is_basis(col_deg - row_deg);
}

// Drops entries whose implied monomial vanishes (products of legal entries can
// land in the truncation ideal).
template <class F>
void mask(SparseMatrix<F>& m, const LevelRing& r, const std::vector<Multidegree>& row_degs,
          const std::vector<Multidegree>& col_degs) {
  for (std::size_t j = 0; j < m.cols(); ++j) {
    auto& c = m.col_mut(j);
    c.erase(std::remove_if(c.begin(), c.end(),
                           [&](const Entry<F>& e) { return !legal_entry(r, row_degs[e.first], col_degs[j]); }),
            c.end());
  }
}

template <class F>
struct ModulePresentation {
  F field;
  RingPtr ring;
  std::vector<Multidegree> gens;
  std::vector<Multidegree> rel_degs;
  SparseMatrix<F> rel;  // gens x relations
};

template <class F>
struct FreeComplex {
  F field;
  RingPtr ring;
  int lo = 0;
  std::vector<std::vector<Multidegree>> gens;  // gens[k] sits in degree lo + k
  std::vector<SparseMatrix<F>> diff;           // diff[k]: degree lo+k -> lo+k-1
  std::int64_t weight_cap = INT64_MAX;         // generators of larger total weight were dropped
  int valid_top = INT_MAX;                     // terms and differentials are exact through this degree

  int hi() const { return lo + static_cast<int>(gens.size()) - 1; }
  bool has(int d) const { return d >= lo && d <= hi(); }
  std::size_t rank(int d) const { return has(d) ? gens[d - lo].size() : 0; }
  const std::vector<Multidegree>& degs(int d) const {
    static const std::vector<Multidegree> empty;
    return has(d) ? gens[d - lo] : empty;
  }
  // The differential out of degree d, or nullptr when it is zero by shape.
  const SparseMatrix<F>* d(int deg) const {
    if (!has(deg) || !has(deg - 1)) return nullptr;
    return &diff[deg - lo];
  }
  // Homology in degree d is exact when d + 1 <= valid_top.
  int exact_top() const { return valid_top == INT_MAX ? INT_MAX : valid_top - 1; }

  std::size_t total_rank() const {
    std::size_t n = 0;
    for (auto& g : gens) n += g.size();
    return n;
  }
};

template <class F>
using ComplexPtr = std::shared_ptr<const FreeComplex<F>>;

// Builds a complex from generator lists and differentials (diff[k] for degree lo+k, first may be empty).
template <class F>
FreeComplex<F> make_complex(F f, RingPtr ring, int lo, std::vector<std::vector<Multidegree>> gens,
                            std::vector<SparseMatrix<F>> diff) {
  FreeComplex<F> c{f, std::move(ring), lo, std::move(gens), std::move(diff)};
  if (c.diff.size() != c.gens.size()) throw std::invalid_argument("make_complex: one differential per degree");
  if (!c.gens.empty()) c.diff[0] = SparseMatrix<F>(f, 0, c.gens[0].size());
  for (std::size_t k = 1; k < c.gens.size(); ++k) {
    auto& m = c.diff[k];
    if (m.rows() != c.gens[k - 1].size() || m.cols() != c.gens[k].size())
      throw std::invalid_argument("make_complex: differential shape mismatch in degree " +
                                  std::to_string(lo + static_cast<int>(k)));
    for (std::size_t j = 0; j < m.cols(); ++j)
      for (auto& [i, v] : m.col(j))
        if (!legal_entry(*c.ring, c.gens[k - 1][i], c.gens[k][j]))
          throw std::invalid_argument("make_complex: differential entry is not a ring monomial");
  }
  return c;
}

// A complex concentrated in degree 0 with the given generator degrees.
template <class F>
FreeComplex<F> free_module_complex(F f, RingPtr ring, std::vector<Multidegree> degs) {
  std::vector<std::vector<Multidegree>> g{std::move(degs)};
  std::vector<SparseMatrix<F>> d{SparseMatrix<F>(f, 0, g[0].size())};
  return make_complex(f, std::move(ring), 0, std::move(g), std::move(d));
}

template <class F>
FreeComplex<F> unit_complex(F f, RingPtr ring) {
  return free_module_complex(f, ring, {Multidegree(ring->num_vars())});
}

// Degree-preserving map between complexes (possibly over different levels).
template <class F>
struct ChainMap {
  ComplexPtr<F> source, target;
  std::vector<SparseMatrix<F>> maps;  // maps[k] acts on degree source->lo + k

  const SparseMatrix<F>* at(int d) const {
    if (!source->has(d) || !target->has(d)) return nullptr;
    return &maps[d - source->lo];
  }
};

template <class F>
ChainMap<F> zero_chain_map(ComplexPtr<F> s, ComplexPtr<F> t) {
  ChainMap<F> m{s, t, {}};
  for (int d = s->lo; d <= s->hi(); ++d) m.maps.emplace_back(s->field, t->rank(d), s->rank(d));
  return m;
}

template <class F>
ChainMap<F> identity_chain_map(ComplexPtr<F> x) {
  ChainMap<F> m{x, x, {}};
  for (int d = x->lo; d <= x->hi(); ++d) m.maps.push_back(SparseMatrix<F>::identity(x->field, x->rank(d)));
  return m;
}

// d o d = 0, checked with the implied monomials.
template <class F>
bool d_squared_zero(const FreeComplex<F>& x) {
  for (int d = x.lo + 2; d <= x.hi(); ++d) {
    auto prod = (*x.d(d - 1)) * (*x.d(d));
    mask(prod, *x.ring, x.degs(d - 2), x.degs(d));
    if (!prod.is_zero()) return false;
  }
  return true;
}

// first degree d where t.d(d) * f_d != f_{d-1} * s.d(d), if any
template <class F>
std::optional<int> noncommuting_degree(const ChainMap<F>& f) {
  const auto& s = *f.source;
  const auto& t = *f.target;
  for (int d = s.lo; d <= s.hi(); ++d) {
    auto fd = f.at(d);
    auto fd1 = f.at(d - 1);
    std::size_t rows = t.rank(d - 1), cols = s.rank(d);
    SparseMatrix<F> lhs(s.field, rows, cols), rhs(s.field, rows, cols);
    if (fd && t.d(d)) lhs = (*t.d(d)) * (*fd);
    if (fd1 && s.d(d)) rhs = (*fd1) * (*s.d(d));
    mask(lhs, *t.ring, t.degs(d - 1), s.degs(d));
    mask(rhs, *t.ring, t.degs(d - 1), s.degs(d));
    if (!(lhs == rhs)) return d;
  }
  return std::nullopt;
}

template <class F>
bool commutes(const ChainMap<F>& f) {
  return !noncommuting_degree(f);
}

template <class F>
ChainMap<F> compose(const ChainMap<F>& g, const ChainMap<F>& f) {
  ChainMap<F> h{f.source, g.target, {}};
  for (int d = f.source->lo; d <= f.source->hi(); ++d) {
    auto fd = f.at(d);
    auto gd = g.at(d);
    if (fd && gd) {
      auto m = (*gd) * (*fd);
      mask(m, *g.target->ring, g.target->degs(d), f.source->degs(d));
      h.maps.push_back(std::move(m));
    } else {
      h.maps.emplace_back(f.source->field, g.target->rank(d), f.source->rank(d));
    }
  }
  return h;
}

// Index of generator pairs (b in X_i, c in Y_j) inside a tensor product.
struct TensorIndex {
  int lo = 0;
  // per total degree: list of blocks (i, offset into a slot table, |X_i|, |Y_j|)
  struct Block {
    int i, j;
    std::size_t nx, ny;
    std::vector<std::int32_t> slot;  // b*ny + c -> index in degree, or -1 when dropped
  };
  std::vector<std::vector<Block>> blocks;

  const Block* find(int d, int i) const {
    if (d < lo || d - lo >= static_cast<int>(blocks.size())) return nullptr;
    for (auto& b : blocks[d - lo])
      if (b.i == i) return &b;
    return nullptr;
  }
  std::int32_t index(int d, int i, std::size_t b, std::size_t c) const {
    auto blk = find(d, i);
    if (!blk) return -1;
    return blk->slot[b * blk->ny + c];
  }
};

template <class F>
struct TensorProduct {
  ComplexPtr<F> complex;
  TensorIndex index;
};

// Total complex of X (x) Y with Koszul signs d(x(x)y) = dx(x)y + (-1)^{|x|} x(x)dy,
// truncated to degrees <= max_degree and to generators of weight <= weight_cap.
template <class F>
TensorProduct<F> tensor_complexes(const FreeComplex<F>& x, const FreeComplex<F>& y, int max_degree = INT_MAX,
                                  std::int64_t weight_cap = INT64_MAX) {
  if (!(*x.ring == *y.ring)) throw std::invalid_argument("tensor_complexes: ring mismatch");
  const F& f = x.field;
  weight_cap = std::min({weight_cap, x.weight_cap, y.weight_cap});
  int lo = x.lo + y.lo;
  int hi = std::min(x.hi() + y.hi(), max_degree);
  FreeComplex<F> t;
  t.field = f;
  t.ring = x.ring;
  t.lo = lo;
  t.weight_cap = weight_cap;
  TensorIndex idx;
  idx.lo = lo;
  for (int d = lo; d <= hi; ++d) {
    std::vector<Multidegree> degs;
    std::vector<TensorIndex::Block> blks;
    for (int i = x.lo; i <= x.hi(); ++i) {
      int j = d - i;
      if (!y.has(j)) continue;
      TensorIndex::Block b{i, j, x.rank(i), y.rank(j), {}};
      b.slot.assign(b.nx * b.ny, -1);
      for (std::size_t p = 0; p < b.nx; ++p)
        for (std::size_t q = 0; q < b.ny; ++q) {
          Multidegree m = x.degs(i)[p] + y.degs(j)[q];
          if (m.total() > weight_cap) continue;
          b.slot[p * b.ny + q] = static_cast<std::int32_t>(degs.size());
          degs.push_back(m);
        }
      blks.push_back(std::move(b));
    }
    t.gens.push_back(std::move(degs));
    idx.blocks.push_back(std::move(blks));
  }
  if (t.gens.empty()) {
    t.gens.emplace_back();
    idx.blocks.emplace_back();
  }
  for (int d = lo; d <= t.hi(); ++d) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
    if (d > lo) {
      for (auto& blk : idx.blocks[d - lo]) {
        const SparseMatrix<F>* dx = x.d(blk.i);
        const SparseMatrix<F>* dy = y.d(blk.j);
        bool odd = (blk.i % 2) != 0;
        for (std::size_t p = 0; p < blk.nx; ++p)
          for (std::size_t q = 0; q < blk.ny; ++q) {
            std::int32_t col = blk.slot[p * blk.ny + q];
            if (col < 0) continue;
            if (dx)
              for (auto& [a, v] : dx->col(p)) {
                std::int32_t row = idx.index(d - 1, blk.i - 1, a, q);
                if (row >= 0) trip.emplace_back(row, col, v);
              }
            if (dy)
              for (auto& [c, v] : dy->col(q)) {
                std::int32_t row = idx.index(d - 1, blk.i, p, c);
                if (row >= 0) trip.emplace_back(row, col, odd ? f.neg(v) : v);
              }
          }
      }
      t.diff.push_back(SparseMatrix<F>::from_triplets(f, t.gens[d - lo - 1].size(), t.gens[d - lo].size(),
                                                      std::move(trip)));
    } else {
      t.diff.emplace_back(f, 0, t.gens[0].size());
    }
  }
  int vt = INT_MAX;
  if (x.valid_top != INT_MAX) vt = std::min(vt, x.valid_top + y.lo);
  if (y.valid_top != INT_MAX) vt = std::min(vt, y.valid_top + x.lo);
  if (max_degree != INT_MAX && max_degree < x.hi() + y.hi()) vt = std::min(vt, max_degree);
  t.valid_top = vt;
  return {std::make_shared<const FreeComplex<F>>(std::move(t)), std::move(idx)};
}

// (f (x) g): X (x) Y -> X' (x) Y' given the index data of both tensor products.
template <class F>
ChainMap<F> tensor_chain_maps(const ChainMap<F>& fm, const ChainMap<F>& gm, const TensorProduct<F>& src,
                              const TensorProduct<F>& dst) {
  const auto& s = *src.complex;
  const auto& t = *dst.complex;
  const F& f = s.field;
  ChainMap<F> out{src.complex, dst.complex, {}};
  for (int d = s.lo; d <= s.hi(); ++d) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
    if (t.has(d))
      for (auto& blk : src.index.blocks[d - s.lo]) {
        auto fi = fm.at(blk.i);
        auto gj = gm.at(blk.j);
        if (!fi || !gj) continue;
        for (std::size_t p = 0; p < blk.nx; ++p)
          for (std::size_t q = 0; q < blk.ny; ++q) {
            std::int32_t col = blk.slot[p * blk.ny + q];
            if (col < 0) continue;
            for (auto& [a, v] : fi->col(p))
              for (auto& [c, w] : gj->col(q)) {
                std::int32_t row = dst.index.index(d, blk.i, a, c);
                if (row >= 0) trip.emplace_back(row, col, f.mul(v, w));
              }
          }
      }
    auto m = SparseMatrix<F>::from_triplets(f, t.rank(d), s.rank(d), std::move(trip));
    mask(m, *t.ring, t.degs(d), s.degs(d));
    out.maps.push_back(std::move(m));
  }
  return out;
}

// Mapping cone: cone_d = Y_d (+) X_{d-1}, d(y, x) = (dy + f x, -dx).
template <class F>
FreeComplex<F> cone(const ChainMap<F>& fm) {
  const auto& x = *fm.source;
  const auto& y = *fm.target;
  const F& f = x.field;
  int lo = std::min(y.lo, x.lo + 1);
  int hi = std::max(y.hi(), x.hi() + 1);
  FreeComplex<F> c;
  c.field = f;
  c.ring = y.ring;
  c.lo = lo;
  c.weight_cap = std::min(x.weight_cap, y.weight_cap);
  for (int d = lo; d <= hi; ++d) {
    auto g = y.degs(d);
    auto& gx = x.degs(d - 1);
    g.insert(g.end(), gx.begin(), gx.end());
    c.gens.push_back(std::move(g));
  }
  for (int d = lo; d <= hi; ++d) {
    std::size_t ny = y.rank(d), nx = x.rank(d - 1);
    std::size_t ny1 = y.rank(d - 1);
    std::size_t rows = d > lo ? c.gens[d - lo - 1].size() : 0;
    std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
    if (d > lo) {
      if (auto dy = y.d(d))
        for (std::size_t j = 0; j < ny; ++j)
          for (auto& [i, v] : dy->col(j)) trip.emplace_back(i, j, v);
      if (auto fx = fm.at(d - 1))
        for (std::size_t j = 0; j < nx; ++j)
          for (auto& [i, v] : fx->col(j)) trip.emplace_back(i, ny + j, v);
      if (auto dx = x.d(d - 1))
        for (std::size_t j = 0; j < nx; ++j)
          for (auto& [i, v] : dx->col(j)) trip.emplace_back(ny1 + i, ny + j, f.neg(v));
    }
    c.diff.push_back(SparseMatrix<F>::from_triplets(f, rows, ny + nx, std::move(trip)));
  }
  int vt = INT_MAX;
  if (y.valid_top != INT_MAX) vt = std::min(vt, y.valid_top);
  if (x.valid_top != INT_MAX) vt = std::min(vt, x.valid_top + 1);
  c.valid_top = vt;
  return c;
}

// Induced map on cones from a commuting square (mu_y o f = f' o mu_x).
template <class F>
ChainMap<F> cone_map(const ChainMap<F>& mu_y, const ChainMap<F>& mu_x, ComplexPtr<F> src, ComplexPtr<F> dst) {
  const auto& x = *mu_x.source;
  const auto& y = *mu_y.source;
  const auto& y2 = *mu_y.target;
  const F& f = src->field;
  ChainMap<F> out{src, dst, {}};
  for (int d = src->lo; d <= src->hi(); ++d) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
    std::size_t ny = y.rank(d), ny2 = y2.rank(d);
    if (dst->has(d)) {
      if (auto m = mu_y.at(d))
        for (std::size_t j = 0; j < ny; ++j)
          for (auto& [i, v] : m->col(j)) trip.emplace_back(i, j, v);
      if (auto m = mu_x.at(d - 1))
        for (std::size_t j = 0; j < x.rank(d - 1); ++j)
          for (auto& [i, v] : m->col(j)) trip.emplace_back(ny2 + i, ny + j, v);
    }
    out.maps.push_back(SparseMatrix<F>::from_triplets(f, dst->rank(d), src->rank(d), std::move(trip)));
  }
  return out;
}

// Result of minimization: the reduced complex with comparison maps
// iota: min -> x and pi: x -> min, pi o iota = id.
template <class F>
struct Minimized {
  ComplexPtr<F> complex;
  ChainMap<F> iota, pi;
  bool changed = false;
};

// Gaussian elimination of unit (equal-degree) entries, one degree at a time.
template <class F>
Minimized<F> minimize(ComplexPtr<F> xp) {
  const auto& x = *xp;
  const F& f = x.field;
  const LevelRing& ring = *x.ring;
  int nd = static_cast<int>(x.gens.size());

  bool any_unit = false;
  for (int k = 1; k < nd && !any_unit; ++k)
    for (std::size_t j = 0; j < x.gens[k].size() && !any_unit; ++j)
      for (auto& [i, v] : x.diff[k].col(j))
        if (x.gens[k - 1][i] == x.gens[k][j]) {
          any_unit = true;
          break;
        }
  if (!any_unit) {
    Minimized<F> m{xp, identity_chain_map(xp), identity_chain_map(xp), false};
    return m;
  }

  // Working state: current generators per degree (as indices into the original),
  // current differentials, and accumulated pi (current <- original) and iota
  // (original <- current) per degree.
  std::vector<std::vector<Multidegree>> degs = x.gens;
  std::vector<SparseMatrix<F>> dmat = x.diff;
  std::vector<SparseMatrix<F>> pi, iota;
  for (int k = 0; k < nd; ++k) {
    pi.push_back(SparseMatrix<F>::identity(f, degs[k].size()));
    iota.push_back(SparseMatrix<F>::identity(f, degs[k].size()));
  }
  auto sub_rows = [&](const SparseMatrix<F>& m, const std::vector<std::int32_t>& keep_map, std::size_t nrows) {
    SparseMatrix<F> out(f, nrows, m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
      SparseVec<F> c;
      for (auto& [i, v] : m.col(j))
        if (keep_map[i] >= 0) c.emplace_back(static_cast<std::uint32_t>(keep_map[i]), v);
      out.set_col(j, std::move(c));
    }
    return out;
  };

  for (int k = 1; k < nd; ++k) {
    auto& D = dmat[k];
    const auto& rdeg = degs[k - 1];
    const auto& cdeg = degs[k];
    // constant part, grouped by multidegree
    std::unordered_map<Multidegree, std::vector<std::uint32_t>, MultidegreeHash> cols_by_deg;
    for (std::size_t j = 0; j < cdeg.size(); ++j)
      for (auto& [i, v] : D.col(j))
        if (rdeg[i] == cdeg[j]) {
          cols_by_deg[cdeg[j]].push_back(static_cast<std::uint32_t>(j));
          break;
        }
    std::vector<Multidegree> keys;
    for (auto& kv : cols_by_deg) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end(), WeightOrder{});
    std::vector<std::uint32_t> A, B;
    for (auto& key : keys) {
      ColumnEchelon<F> ech(f, rdeg.size());
      for (auto j : cols_by_deg[key]) {
        SparseVec<F> c;
        for (auto& [i, v] : D.col(j))
          if (rdeg[i] == key) c.emplace_back(i, v);
        auto red = ech.reduce(c);
        if (red.residual.empty()) continue;
        A.push_back(red.residual.back().first);
        B.push_back(j);
        ech.insert(std::move(red.residual));
      }
    }
    if (A.empty()) continue;
    std::vector<char> inA(rdeg.size(), 0), inB(cdeg.size(), 0);
    for (auto a : A) inA[a] = 1;
    for (auto b : B) inB[b] = 1;
    std::vector<std::uint32_t> V, U;
    std::vector<std::int32_t> vpos(rdeg.size(), -1), upos(cdeg.size(), -1), apos(rdeg.size(), -1),
        bpos(cdeg.size(), -1);
    for (std::uint32_t i = 0; i < rdeg.size(); ++i)
      if (!inA[i]) {
        vpos[i] = static_cast<std::int32_t>(V.size());
        V.push_back(i);
      }
    for (std::uint32_t j = 0; j < cdeg.size(); ++j)
      if (!inB[j]) {
        upos[j] = static_cast<std::int32_t>(U.size());
        U.push_back(j);
      }
    for (std::size_t t = 0; t < A.size(); ++t) apos[A[t]] = static_cast<std::int32_t>(t);
    for (std::size_t t = 0; t < B.size(); ++t) bpos[B[t]] = static_cast<std::int32_t>(t);

    // phi = D[A, B] as a square scalar matrix; invertible by construction.
    SparseMatrix<F> phi(f, A.size(), B.size());
    for (std::size_t t = 0; t < B.size(); ++t) {
      SparseVec<F> c;
      for (auto& [i, v] : D.col(B[t]))
        if (apos[i] >= 0) c.emplace_back(static_cast<std::uint32_t>(apos[i]), v);
      std::sort(c.begin(), c.end(), [](auto& a, auto& b) { return a.first < b.first; });
      phi.set_col(t, std::move(c));
    }
    ColumnEchelon<F> phi_e(f, A.size(), true);
    for (std::size_t t = 0; t < B.size(); ++t) phi_e.insert(phi.col(t), static_cast<long>(t));
    if (phi_e.rank() != A.size()) throw std::logic_error("minimize: pivot block is singular");
    auto phi_solve = [&](const SparseVec<F>& rhs) { return phi_e.reduce(rhs).coeffs; };

    // w_a = phi^{-1} e_a (over B), Y_a = gamma w_a (over V)
    std::vector<SparseVec<F>> w(A.size()), Y(A.size());
    for (std::size_t t = 0; t < A.size(); ++t) {
      SparseVec<F> e{{static_cast<std::uint32_t>(t), f.one()}};
      w[t] = phi_solve(e);
      std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
      for (auto& [bi, c] : w[t])
        for (auto& [i, v] : D.col(B[bi]))
          if (vpos[i] >= 0) trip.emplace_back(vpos[i], 0, f.mul(v, c));
      Y[t] = SparseMatrix<F>::from_triplets(f, V.size(), 1, std::move(trip)).col(0);
    }
    std::vector<Multidegree> vdeg, udeg;
    for (auto i : V) vdeg.push_back(rdeg[i]);
    for (auto j : U) udeg.push_back(cdeg[j]);

    // new differential and iota_k columns
    SparseMatrix<F> Dn(f, V.size(), U.size());
    SparseMatrix<F> iota_step(f, cdeg.size(), U.size());
    for (std::size_t t = 0; t < U.size(); ++t) {
      std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip, itrip;
      itrip.emplace_back(U[t], 0, f.one());
      for (auto& [i, v] : D.col(U[t])) {
        if (vpos[i] >= 0) {
          trip.emplace_back(vpos[i], 0, v);
        } else {
          std::size_t a = static_cast<std::size_t>(apos[i]);
          for (auto& [r, y] : Y[a]) trip.emplace_back(r, 0, f.neg(f.mul(v, y)));
          for (auto& [bi, c] : w[a]) itrip.emplace_back(B[bi], 0, f.neg(f.mul(v, c)));
        }
      }
      Dn.set_col(t, SparseMatrix<F>::from_triplets(f, V.size(), 1, std::move(trip)).col(0));
      iota_step.set_col(t, SparseMatrix<F>::from_triplets(f, cdeg.size(), 1, std::move(itrip)).col(0));
    }
    mask(Dn, ring, vdeg, udeg);
    mask(iota_step, ring, cdeg, udeg);
    // pi_{k-1}: (a, v) -> v - gamma phi^{-1} a
    SparseMatrix<F> pi_low(f, V.size(), rdeg.size());
    for (std::uint32_t i = 0; i < rdeg.size(); ++i) {
      if (vpos[i] >= 0) {
        pi_low.set_col(i, {{static_cast<std::uint32_t>(vpos[i]), f.one()}});
      } else {
        SparseVec<F> c = Y[apos[i]];
        for (auto& e : c) e.second = f.neg(e.second);
        pi_low.set_col(i, std::move(c));
      }
    }
    mask(pi_low, ring, vdeg, rdeg);
    // pi_k: projection onto U
    SparseMatrix<F> pi_up(f, U.size(), cdeg.size());
    for (std::size_t t = 0; t < U.size(); ++t) pi_up.set_col(U[t], {{static_cast<std::uint32_t>(t), f.one()}});
    // iota_{k-1}: inclusion of V
    SparseMatrix<F> iota_low(f, rdeg.size(), V.size());
    for (std::size_t t = 0; t < V.size(); ++t) iota_low.set_col(t, {{V[t], f.one()}});

    // update neighbours: d_{k+1} loses rows B, d_{k-1} loses columns A
    if (k + 1 < nd) dmat[k + 1] = sub_rows(dmat[k + 1], upos, U.size());
    {
      SparseMatrix<F> lower(f, dmat[k - 1].rows(), V.size());
      for (std::size_t t = 0; t < V.size(); ++t) lower.set_col(t, dmat[k - 1].col(V[t]));
      dmat[k - 1] = std::move(lower);
    }
    dmat[k] = std::move(Dn);
    pi[k] = pi_up * pi[k];
    pi[k - 1] = pi_low * pi[k - 1];
    iota[k] = iota[k] * iota_step;
    iota[k - 1] = iota[k - 1] * iota_low;
    degs[k] = std::move(udeg);
    degs[k - 1] = std::move(vdeg);
  }

  FreeComplex<F> m;
  m.field = f;
  m.ring = x.ring;
  m.lo = x.lo;
  m.gens = degs;
  m.diff = std::move(dmat);
  m.diff[0] = SparseMatrix<F>(f, 0, m.gens[0].size());
  m.weight_cap = x.weight_cap;
  m.valid_top = x.valid_top;
  auto mp = std::make_shared<const FreeComplex<F>>(std::move(m));
  Minimized<F> out{mp, {mp, xp, {}}, {xp, mp, {}}, true};
  for (int k = 0; k < nd; ++k) {
    mask(iota[k], ring, x.gens[k], degs[k]);
    mask(pi[k], ring, degs[k], x.gens[k]);
    out.iota.maps.push_back(std::move(iota[k]));
    out.pi.maps.push_back(std::move(pi[k]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strands. The strand of a complex at multidegree alpha is the K-vector space
// spanned by x^{alpha - deg b} e_b over generators b with alpha - deg b a basis
// monomial; differentials restrict to scalar matrices on strands.

// Cells alpha on the lattice of a given level: alpha_i is a multiple of the
// variable's grid step at that level.
struct Lattice {
  int level = 0;
  std::int64_t weight_cap = INT64_MAX;  // numerator units
};

struct StrandIndex {
  std::vector<Multidegree> cells;  // sorted by weight
  int lo = 0;
  // members[c][k]: sorted generator indices of degree lo + k in cell c
  std::vector<std::vector<std::vector<std::uint32_t>>> members;
  std::unordered_map<Multidegree, std::size_t, MultidegreeHash> pos;

  std::optional<std::size_t> find(const Multidegree& a) const {
    auto it = pos.find(a);
    if (it == pos.end()) return std::nullopt;
    return it->second;
  }
};

// For each generator degree, enumerates the lattice cells containing it.
inline void for_each_cell(const LevelRing& ring, const Multidegree& beta, const Lattice& lat,
                          const std::function<void(const Multidegree&)>& fn) {
  std::int64_t budget = lat.weight_cap == INT64_MAX ? INT64_MAX : lat.weight_cap - beta.total();
  if (budget < 0) return;
  int lvl = std::min(lat.level, ring.level());
  Multidegree off(ring.num_vars()), sp(ring.num_vars());
  for (std::size_t i = 0; i < ring.num_vars(); ++i) {
    sp[i] = ring.spec().step(i, lvl);
    off[i] = ((-beta[i]) % sp[i] + sp[i]) % sp[i];
  }
  if (budget == INT64_MAX) {
    // finite only for rings truncated in every variable
    for (std::size_t i = 0; i < ring.num_vars(); ++i)
      if (ring.pure_cap(i) < 0) throw std::invalid_argument("strand enumeration needs a weight cap");
    budget = INT64_MAX / 4;
  }
  ring.enumerate(off, sp, budget, [&](const Multidegree& e) { fn(beta + e); });
}

template <class F>
StrandIndex build_strands(const FreeComplex<F>& x, int dlo, int dhi, const Lattice& lat) {
  StrandIndex s;
  s.lo = dlo;
  int nk = dhi - dlo + 1;
  std::unordered_map<Multidegree, std::size_t, MultidegreeHash> tmp;
  std::vector<std::vector<std::vector<std::uint32_t>>> mem;
  for (int d = dlo; d <= dhi; ++d) {
    auto& degs = x.degs(d);
    // group generators by degree
    std::map<Multidegree, std::vector<std::uint32_t>> groups;
    for (std::uint32_t b = 0; b < degs.size(); ++b) groups[degs[b]].push_back(b);
    for (auto& [beta, list] : groups) {
      for_each_cell(*x.ring, beta, lat, [&](const Multidegree& a) {
        auto [it, fresh] = tmp.emplace(a, mem.size());
        if (fresh) mem.emplace_back(nk);
        auto& slot = mem[it->second][d - dlo];
        slot.insert(slot.end(), list.begin(), list.end());
      });
    }
  }
  std::vector<std::pair<Multidegree, std::size_t>> order(tmp.begin(), tmp.end());
  std::sort(order.begin(), order.end(), [](auto& a, auto& b) { return WeightOrder{}(a.first, b.first); });
  for (auto& [a, i] : order) {
    s.pos.emplace(a, s.cells.size());
    s.cells.push_back(a);
    for (auto& v : mem[i]) std::sort(v.begin(), v.end());
    s.members.push_back(std::move(mem[i]));
  }
  return s;
}

// Restriction of a matrix to strand rows/cols (given as sorted generator lists).
template <class F>
SparseMatrix<F> restrict_to(const SparseMatrix<F>& m, const std::vector<std::uint32_t>& rows,
                            const std::vector<std::uint32_t>& cols) {
  SparseMatrix<F> out(m.field(), rows.size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    SparseVec<F> c;
    for (auto& [i, v] : m.col(cols[j])) {
      auto it = std::lower_bound(rows.begin(), rows.end(), i);
      if (it != rows.end() && *it == i) c.emplace_back(static_cast<std::uint32_t>(it - rows.begin()), v);
    }
    out.set_col(j, std::move(c));
  }
  return out;
}

// Presentation M = coker(rel) as a two-term complex in degrees 0, 1.
template <class F>
FreeComplex<F> presentation_complex(const ModulePresentation<F>& m) {
  std::vector<std::vector<Multidegree>> g{m.gens, m.rel_degs};
  std::vector<SparseMatrix<F>> d{SparseMatrix<F>(m.field, 0, m.gens.size()), m.rel};
  return make_complex(m.field, m.ring, 0, std::move(g), std::move(d));
}

}  // namespace idemq
