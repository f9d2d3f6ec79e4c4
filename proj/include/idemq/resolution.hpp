#pragma once

#include <algorithm>
#include <climits>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "idemq/complex.hpp"

namespace idemq {

// Strand members of a generator list at alpha (sorted indices).
inline std::vector<std::uint32_t> strand_of(const LevelRing& r, const std::vector<Multidegree>& degs,
                                            const Multidegree& alpha) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t b = 0; b < degs.size(); ++b)
    if (r.is_basis(alpha - degs[b])) out.push_back(b);
  return out;
}

template <class F>
SparseVec<F> restrict_vec(const SparseVec<F>& v, const std::vector<std::uint32_t>& members) {
  SparseVec<F> out;
  for (auto& [i, x] : v) {
    auto it = std::lower_bound(members.begin(), members.end(), i);
    if (it != members.end() && *it == i) out.emplace_back(static_cast<std::uint32_t>(it - members.begin()), x);
  }
  return out;
}

template <class F>
SparseVec<F> expand_vec(const SparseVec<F>& v, const std::vector<std::uint32_t>& members) {
  SparseVec<F> out;
  out.reserve(v.size());
  for (auto& [i, x] : v) out.emplace_back(members[i], x);
  return out;
}

// Candidate multidegrees at which a submodule of free modules with the given
// generator degrees can have minimal generators: per coordinate, thresholds
// given by generator exponents, optionally shifted by truncation exponents.
inline std::vector<Multidegree> candidate_grid(const LevelRing& r, const std::vector<Multidegree>& a,
                                               const std::vector<Multidegree>& b, std::int64_t weight_cap) {
  const std::size_t n = r.num_vars();
  std::vector<std::vector<std::int64_t>> t(n);
  auto add = [&](const Multidegree& m) {
    for (std::size_t i = 0; i < n; ++i) {
      t[i].push_back(m[i]);
      for (auto& q : r.spec().truncation())
        if (q[i] > 0) t[i].push_back(m[i] + q[i]);
    }
  };
  for (auto& m : a) add(m);
  for (auto& m : b) add(m);
  for (auto& v : t) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  std::vector<Multidegree> out;
  Multidegree cur(n);
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t i, std::int64_t w) {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (auto v : t[i]) {
      if (w + v > weight_cap) break;
      cur[i] = v;
      rec(i + 1, w + v);
    }
  };
  rec(0, 0);
  std::sort(out.begin(), out.end(), WeightOrder{});
  return out;
}

template <class F>
struct KernelGenerators {
  std::vector<Multidegree> degs;
  SparseMatrix<F> gens;  // columns over the source generators
};

// Minimal generators (up to the weight cap) of ker(d: R^src -> R^tgt).
template <class F>
KernelGenerators<F> kernel_generators(const LevelRing& r, const F& f, const SparseMatrix<F>& d,
                                      const std::vector<Multidegree>& src, const std::vector<Multidegree>& tgt,
                                      std::int64_t weight_cap) {
  KernelGenerators<F> out;
  std::vector<SparseVec<F>> cols;
  for (auto& alpha : candidate_grid(r, src, tgt, weight_cap)) {
    auto cm = strand_of(r, src, alpha);
    if (cm.empty()) continue;
    auto rm = strand_of(r, tgt, alpha);
    auto local = restrict_to(d, rm, cm);
    auto rk = rank_kernel(local);
    if (rk.kernel.empty()) continue;
    ColumnEchelon<F> ech(f, cm.size());
    for (std::size_t g = 0; g < out.degs.size(); ++g)
      if (r.is_basis(alpha - out.degs[g])) ech.insert(restrict_vec<F>(cols[g], cm));
    for (auto& v : rk.kernel) {
      auto red = ech.reduce(v);
      if (red.residual.empty()) continue;
      ech.insert(v);
      out.degs.push_back(alpha);
      cols.push_back(expand_vec<F>(v, cm));
    }
  }
  out.gens = SparseMatrix<F>(f, src.size(), std::move(cols));
  return out;
}

template <class F>
struct Resolution {
  ComplexPtr<F> complex;
  ModulePresentation<F> module;
  SparseMatrix<F> augmentation;  // module generators x F_0
};

// Minimal free resolution F_0 <- F_1 <- ... <- F_{d_max}, exact in degrees < d_max
// and weights <= weight_cap.
template <class F>
Resolution<F> minimal_resolution(const ModulePresentation<F>& m, int d_max, std::int64_t weight_cap) {
  if (d_max < 0) throw std::invalid_argument("minimal_resolution: negative degree bound");
  const F& f = m.field;
  const LevelRing& r = *m.ring;
  FreeComplex<F> raw;
  raw.field = f;
  raw.ring = m.ring;
  raw.lo = 0;
  raw.weight_cap = weight_cap;
  std::vector<std::uint32_t> keep0;
  std::vector<Multidegree> g0;
  for (std::uint32_t i = 0; i < m.gens.size(); ++i)
    if (m.gens[i].total() <= weight_cap) {
      keep0.push_back(i);
      g0.push_back(m.gens[i]);
    }
  raw.gens.push_back(g0);
  raw.diff.emplace_back(f, 0, g0.size());
  bool exact_above = false;
  if (d_max >= 1) {
    std::vector<Multidegree> g1;
    std::vector<SparseVec<F>> c1;
    for (std::size_t j = 0; j < m.rel_degs.size(); ++j) {
      if (m.rel_degs[j].total() > weight_cap) continue;
      g1.push_back(m.rel_degs[j]);
      c1.push_back(restrict_vec<F>(m.rel.col(j), keep0));
    }
    raw.gens.push_back(g1);
    raw.diff.emplace_back(f, g0.size(), std::move(c1));
    for (int k = 2; k <= d_max; ++k) {
      auto kg = kernel_generators(r, f, raw.diff[k - 1], raw.gens[k - 1], raw.gens[k - 2], weight_cap);
      raw.gens.push_back(kg.degs);
      raw.diff.push_back(std::move(kg.gens));
      if (raw.gens.back().empty()) {
        exact_above = true;
        break;
      }
    }
  }
  raw.valid_top = exact_above ? INT_MAX : d_max;
  auto mp = std::make_shared<const FreeComplex<F>>(std::move(raw));
  auto mn = minimize(mp);
  SparseMatrix<F> embed(f, m.gens.size(), keep0.size());
  for (std::size_t t = 0; t < keep0.size(); ++t) embed.set_col(t, {{keep0[t], f.one()}});
  SparseMatrix<F> aug = embed * mn.iota.maps[0];
  return {mn.complex, m, std::move(aug)};
}

// Presentation of a free module with the given generator degrees.
template <class F>
ModulePresentation<F> free_presentation(F f, RingPtr r, std::vector<Multidegree> gens) {
  std::size_t n = gens.size();
  return {f, std::move(r), std::move(gens), {}, SparseMatrix<F>(f, n, 0)};
}

// R / (monomials): one generator in degree 0.
template <class F>
ModulePresentation<F> monomial_quotient(F f, RingPtr r, const std::vector<Multidegree>& monos) {
  ModulePresentation<F> p{f, r, {Multidegree(r->num_vars())}, {}, SparseMatrix<F>(f, 1, 0)};
  std::vector<SparseVec<F>> cols;
  for (auto& m : monos) {
    if (r->spec().in_truncation(m)) continue;
    p.rel_degs.push_back(m);
    cols.push_back({{0, f.one()}});
  }
  p.rel = SparseMatrix<F>(f, 1, std::move(cols));
  return p;
}

template <class F>
ModulePresentation<F> residue_field(F f, RingPtr r) {
  return monomial_quotient(f, r, IdealFamily::roots("m", r->num_vars()).generators_at(*r));
}

// I(l) as a module: generators are the minimal monomial generators, relations
// the kernel of the evaluation map into R, exact in weights <= weight_cap.
template <class F>
ModulePresentation<F> ideal_presentation(F f, RingPtr r, const IdealFamily& I, std::int64_t weight_cap) {
  auto gens = I.generators_at(*r);
  for (auto& g : gens)
    if (g.total() > weight_cap)
      throw BoundExhausted("ideal_presentation: weight bound below generator " + r->spec().monomial_str(g));
  std::vector<SparseVec<F>> ev;
  for (std::size_t i = 0; i < gens.size(); ++i) ev.push_back({{0, f.one()}});
  SparseMatrix<F> evm(f, 1, std::move(ev));
  auto kg = kernel_generators(*r, f, evm, gens, {Multidegree(r->num_vars())}, weight_cap);
  return {f, r, gens, kg.degs, kg.gens};
}

// Evaluation I(l) -> R as a matrix (1 x generators).
template <class F>
SparseMatrix<F> ideal_embedding(const ModulePresentation<F>& ideal) {
  std::vector<SparseVec<F>> cols(ideal.gens.size(), SparseVec<F>{{0, ideal.field.one()}});
  return SparseMatrix<F>(ideal.field, 1, std::move(cols));
}

// A module at every level plus the induced map on generators between levels.
template <class F>
struct ModuleFamily {
  std::string name;
  std::function<ModulePresentation<F>(RingPtr, std::int64_t weight_cap)> at;
  // generator map M(a) -> M(b) for a <= b (rows: gens of M(b))
  std::function<SparseMatrix<F>(const ModulePresentation<F>&, const ModulePresentation<F>&)> transition;
  bool is_ideal = false;  // generators are monomials of R and embed into it
};

// Generator map that sends each generator to the equal-degree or dividing
// generator on the other side (unit coefficient).
template <class F>
SparseMatrix<F> divisor_transition(const ModulePresentation<F>& a, const ModulePresentation<F>& b) {
  const F& f = a.field;
  SparseMatrix<F> m(f, b.gens.size(), a.gens.size());
  for (std::size_t j = 0; j < a.gens.size(); ++j) {
    bool found = false;
    for (std::uint32_t i = 0; i < b.gens.size() && !found; ++i)
      if (b.ring->is_basis(a.gens[j] - b.gens[i])) {
        m.set_col(j, {{i, f.one()}});
        found = true;
      }
    if (!found && !b.ring->spec().in_truncation(a.gens[j]))
      throw InvariantViolation("module transition: generator has no image");
  }
  return m;
}

template <class F>
ModuleFamily<F> free_family(F f) {
  return {"R",
          [f](RingPtr r, std::int64_t) { return free_presentation(f, r, {Multidegree(r->num_vars())}); },
          divisor_transition<F>, false};
}

template <class F>
ModuleFamily<F> zero_family(F f) {
  return {"0", [f](RingPtr r, std::int64_t) { return free_presentation(f, r, {}); }, divisor_transition<F>, false};
}

template <class F>
ModuleFamily<F> residue_family(F f) {
  return {"K", [f](RingPtr r, std::int64_t) { return residue_field(f, r); }, divisor_transition<F>, false};
}

template <class F>
ModuleFamily<F> quotient_family(F f, IdealFamily J) {
  std::string name = "R/" + J.name;
  return {name, [f, J](RingPtr r, std::int64_t) { return monomial_quotient(f, r, J.generators_at(*r)); },
          divisor_transition<F>, false};
}

template <class F>
ModuleFamily<F> ideal_family(F f, IdealFamily I) {
  std::string name = I.name;
  return {name, [f, I](RingPtr r, std::int64_t w) { return ideal_presentation(f, r, I, w); },
          divisor_transition<F>, true};
}

// Direct sum of copies of K shifted by the given multidegrees.
template <class F>
ModuleFamily<F> shifted_residue_family(F f, std::vector<std::vector<Weight>> shifts) {
  return {"K-shifts",
          [f, shifts](RingPtr r, std::int64_t) {
            ModulePresentation<F> p{f, r, {}, {}, SparseMatrix<F>(f, 0, 0)};
            auto m = IdealFamily::roots("m", r->num_vars()).generators_at(*r);
            std::vector<SparseVec<F>> cols;
            for (auto& s : shifts) {
              auto base = r->spec().from_exponents(s);
              auto g = static_cast<std::uint32_t>(p.gens.size());
              p.gens.push_back(base);
              for (auto& t : m) {
                p.rel_degs.push_back(base + t);
                cols.push_back({{g, f.one()}});
              }
            }
            p.rel = SparseMatrix<F>(f, p.gens.size(), std::move(cols));
            return p;
          },
          divisor_transition<F>, false};
}

// Lifts a module map f: M -> N (matrix over generators, possibly into a higher
// level) to a chain map between resolutions.
template <class F>
ChainMap<F> lift_chain_map(const SparseMatrix<F>& fm, const Resolution<F>& x, const Resolution<F>& y) {
  const auto& X = *x.complex;
  const auto& Y = *y.complex;
  const F& f = X.field;
  const LevelRing& tr = *Y.ring;
  ChainMap<F> out{x.complex, y.complex, {}};
  // degree 0: solve [eps_Y | rel_N] z = f eps_X e_b
  SparseMatrix<F> fe = fm * x.augmentation;
  int top = std::min(X.hi(), Y.hi());
  for (int d = X.lo; d <= X.hi(); ++d) {
    const auto& sdeg = X.degs(d);
    SparseMatrix<F> phi(f, Y.rank(d), sdeg.size());
    if (d > top) {
      out.maps.push_back(std::move(phi));
      continue;
    }
    for (std::size_t b = 0; b < sdeg.size(); ++b) {
      const Multidegree& beta = sdeg[b];
      auto ym = strand_of(tr, Y.degs(d), beta);
      SparseVec<F> rhs;
      SparseMatrix<F> sys;
      if (d == 0) {
        auto gm = strand_of(tr, y.module.gens, beta);
        auto rm = strand_of(tr, y.module.rel_degs, beta);
        rhs = restrict_vec<F>(fe.col(b), gm);
        auto a = restrict_to(y.augmentation, gm, ym);
        auto rl = restrict_to(y.module.rel, gm, rm);
        std::vector<SparseVec<F>> cols;
        for (std::size_t j = 0; j < a.cols(); ++j) cols.push_back(a.col(j));
        for (std::size_t j = 0; j < rl.cols(); ++j) cols.push_back(rl.col(j));
        sys = SparseMatrix<F>(f, gm.size(), std::move(cols));
      } else {
        // rhs = phi_{d-1}(d_X e_b), masked to the target ring
        const auto& prev = out.maps.back();
        SparseVec<F> img = prev.apply(X.d(d) ? X.d(d)->col(b) : SparseVec<F>{});
        auto lm = strand_of(tr, Y.degs(d - 1), beta);
        rhs = restrict_vec<F>(img, lm);
        sys = Y.d(d) ? restrict_to(*Y.d(d), lm, ym) : SparseMatrix<F>(f, lm.size(), ym.size());
      }
      auto z = solve_sparse(sys, rhs);
      if (!z)
        throw InvariantViolation("lift_chain_map: no lift in degree " + std::to_string(d) + " at " +
                                 tr.spec().monomial_str(beta));
      SparseVec<F> col;
      for (auto& [j, v] : *z)
        if (j < ym.size()) col.emplace_back(ym[j], v);
      std::sort(col.begin(), col.end(), [](auto& p, auto& q) { return p.first < q.first; });
      phi.set_col(b, std::move(col));
    }
    mask(phi, tr, Y.degs(d), sdeg);
    out.maps.push_back(std::move(phi));
  }
  return out;
}

// Augmented resolution of an ideal together with epsilon: X -> R[0].
template <class F>
struct AugmentedResolution {
  Resolution<F> res;
  ComplexPtr<F> unit;      // R[0]
  ChainMap<F> epsilon;     // X -> R[0]
};

template <class F>
AugmentedResolution<F> augment_ideal(Resolution<F> res) {
  const F& f = res.complex->field;
  auto unit = std::make_shared<const FreeComplex<F>>(unit_complex(f, res.complex->ring));
  ChainMap<F> eps = zero_chain_map<F>(res.complex, unit);
  if (res.complex->has(0)) {
    auto m = ideal_embedding(res.module) * res.augmentation;
    mask(m, *res.complex->ring, unit->degs(0), res.complex->degs(0));
    eps.maps[0 - res.complex->lo] = std::move(m);
  }
  return {std::move(res), unit, std::move(eps)};
}

// Graded pieces of a module M = coker(rel): for each multidegree gamma a basis
// of M_gamma as cosets of strand vectors of the generators.
template <class F>
class ModuleStrands {
 public:
  explicit ModuleStrands(ModulePresentation<F> m) : m_(std::move(m)) {}

  struct Piece {
    std::vector<std::uint32_t> members;  // strand of the generators
    ColumnEchelon<F> relations;          // span of relations, then basis reps tracked
    std::vector<SparseVec<F>> basis;     // representatives (over members)
  };

  const Piece& at(const Multidegree& g) const {
    std::lock_guard<std::mutex> lock(*mu_);
    auto it = cache_.find(g);
    if (it != cache_.end()) return it->second;
    Piece p;
    const LevelRing& r = *m_.ring;
    p.members = strand_of(r, m_.gens, g);
    auto rm = strand_of(r, m_.rel_degs, g);
    auto rl = restrict_to(m_.rel, p.members, rm);
    p.relations = ColumnEchelon<F>(m_.field, p.members.size(), true);
    for (std::size_t j = 0; j < rl.cols(); ++j) p.relations.insert(rl.col(j));
    for (std::uint32_t i = 0; i < p.members.size(); ++i) {
      SparseVec<F> e{{i, m_.field.one()}};
      if (p.relations.insert(e, static_cast<long>(p.basis.size())).independent) p.basis.push_back(e);
    }
    return cache_.emplace(g, std::move(p)).first->second;
  }
  std::size_t dim(const Multidegree& g) const { return at(g).basis.size(); }

  // Coordinates (in the basis of M_{g+s}) of x^s times basis vector k of M_g.
  SparseVec<F> multiply(const Multidegree& g, std::size_t k, const Multidegree& s) const {
    const auto& src = at(g);
    const auto& dst = at(g + s);
    SparseVec<F> v = expand_vec<F>(src.basis[k], src.members);
    auto w = restrict_vec<F>(v, dst.members);
    return dst.relations.reduce(w).coeffs;
  }

  const ModulePresentation<F>& module() const { return m_; }

 private:
  ModulePresentation<F> m_;
  mutable std::map<Multidegree, Piece> cache_;
  std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
};

}  // namespace idemq
