#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "idemq/derived.hpp"

namespace idemq {

// H_d(Y) as a graded module over R(l), computed cell by cell on demand.
template <class F>
class HomologyModule {
 public:
  HomologyModule(ComplexPtr<F> y, int d) : y_(std::move(y)), d_(d) {}

  const FreeComplex<F>& complex() const { return *y_; }

  const CellHomology<F>& cell(const Multidegree& g) {
    auto it = cache_.find(g);
    if (it != cache_.end()) return it->second;
    const auto& r = *y_->ring;
    auto below = strand_of(r, y_->degs(d_ - 1), g);
    auto here = strand_of(r, y_->degs(d_), g);
    auto above = strand_of(r, y_->degs(d_ + 1), g);
    return cache_.emplace(g, cell_homology(*y_, d_, below, here, above)).first->second;
  }

  std::size_t dim(const Multidegree& g) {
    if (!y_->ring->valid(g)) return 0;
    return cell(g).dim();
  }

  // Cycle over all generators of degree d for a class given in coordinates.
  SparseVec<F> full(const Multidegree& g, const SparseVec<F>& coords) {
    const auto& c = cell(g);
    const F& f = y_->field;
    SparseVec<F> acc;
    for (auto& [k, v] : coords) {
      auto t = c.reps[k];
      scale_in_place(f, t, v);
      acc = add_vec(acc, t);
    }
    return expand_vec<F>(acc, c.members);
  }

  SparseVec<F> coords(const Multidegree& g, const SparseVec<F>& full_cycle) {
    if (!y_->ring->valid(g)) return {};
    const auto& c = cell(g);
    return c.coords(restrict_vec<F>(full_cycle, c.members));
  }

  // Multiplication by the monomial u on a full cycle in cell g.
  SparseVec<F> multiply_full(const Multidegree& g, const Multidegree& u, const SparseVec<F>& v) const {
    const auto& r = *y_->ring;
    Multidegree h = g + u;
    SparseVec<F> out;
    if (!r.valid(h)) return out;
    for (auto& [b, x] : v)
      if (r.is_basis(h - y_->degs(d_)[b])) out.emplace_back(b, x);
    return out;
  }

  SparseVec<F> multiply(const Multidegree& g, const Multidegree& u, const SparseVec<F>& coords_in) {
    auto v = multiply_full(g, u, full(g, coords_in));
    if (v.empty()) return {};
    return coords(g + u, v);
  }

 private:
  SparseVec<F> add_vec(const SparseVec<F>& a, const SparseVec<F>& b) const {
    return sub_scaled(y_->field, a, y_->field.neg(y_->field.one()), b);
  }

  ComplexPtr<F> y_;
  int d_;
  std::map<Multidegree, CellHomology<F>> cache_;
};

// ---------------------------------------------------------------------------

enum class Criterion { Annihilation, TensorVanishing };

inline const char* criterion_name(Criterion c) {
  return c == Criterion::Annihilation ? "annihilation" : "tensor-vanishing";
}

struct AlmostVerdict {
  Criterion criterion = Criterion::Annihilation;
  std::map<int, bool> almost_zero;      // per degree
  std::map<int, std::string> witness;   // per degree, when not almost zero
  std::map<int, bool> stable;           // per degree
  int top_level = 0;

  bool all() const {
    for (auto& [d, z] : almost_zero)
      if (!z) return false;
    return true;
  }
  bool all_stable() const {
    for (auto& [d, s] : stable)
      if (!s) return false;
    return true;
  }
  bool same_verdicts(const AlmostVerdict& o) const { return almost_zero == o.almost_zero; }
};

namespace detail {

template <class F>
SparseVec<F> push_forward(const std::vector<ChainMap<F>>& tr, int from, int to, int d, SparseVec<F> v) {
  for (int l = from; l < to && !v.empty(); ++l) {
    auto m = tr[l].at(d);
    if (!m) return {};
    v = m->apply(v);
  }
  return v;
}

template <class F>
std::string class_name(const RingSpec& s, int d, const Multidegree& g, int level) {
  return "H_" + std::to_string(d) + " weight " + weight_short(s.weight(g)) + " (level " + std::to_string(level) + ")";
}

// Annihilation at (l0 -> top): some g in I(l0), x in H_d(l0) with g x surviving to top.
template <class F>
std::optional<std::string> annihilation_witness(const std::vector<ComplexPtr<F>>& cx,
                                                const std::vector<ChainMap<F>>& tr, const IdealFamily& I, int l0,
                                                int top, int d, std::int64_t cap) {
  const auto& y0 = cx[l0];
  const auto& r0 = *y0->ring;
  auto gens = I.generators_at(r0);
  if (gens.empty()) return std::nullopt;
  HomologyModule<F> h0(y0, d), ht(cx[top], d);
  auto strands = build_strands(*y0, d, d, {r0.level(), cap});
  for (auto& alpha : strands.cells) {
    if (h0.dim(alpha) == 0) continue;
    const auto& cell = h0.cell(alpha);
    for (auto& g : gens) {
      if ((alpha + g).total() > cap) continue;
      for (std::size_t k = 0; k < cell.dim(); ++k) {
        auto v = h0.multiply_full(alpha, g, expand_vec<F>(cell.reps[k], cell.members));
        if (v.empty()) continue;
        v = push_forward(tr, l0, top, d, v);
        if (v.empty()) continue;
        if (!ht.coords(alpha + g, v).empty())
          return class_name<F>(r0.spec(), d, alpha, l0) + " not killed by " + r0.spec().monomial_str(g);
      }
    }
  }
  return std::nullopt;
}

// Tensor criterion at (l0 -> top): image of I(l0) (x) H_d(l0) in I(top) (x) H_d(top) is nonzero.
template <class F>
std::optional<std::string> tensor_witness(const std::vector<ComplexPtr<F>>& cx, const std::vector<ChainMap<F>>& tr,
                                          const IdealFamily& I, int l0, int top, int d, std::int64_t cap) {
  const auto& y0 = cx[l0];
  const F& f = y0->field;
  const auto& r0 = *y0->ring;
  const auto& rt = *cx[top]->ring;
  auto p0 = ideal_presentation(f, y0->ring, I, cap);
  auto pt = ideal_presentation(f, cx[top]->ring, I, cap);
  if (p0.gens.empty()) return std::nullopt;
  auto iota = divisor_transition(p0, pt);
  HomologyModule<F> h0(y0, d), ht(cx[top], d);

  // I(top) (x) H at multidegree beta: blocks H_{beta - g'} modulo relation images.
  auto tensor_span = [&](const Multidegree& beta) {
    std::vector<std::size_t> off{0};
    std::vector<std::optional<Multidegree>> src(pt.gens.size());
    for (std::size_t j = 0; j < pt.gens.size(); ++j) {
      std::size_t n = 0;
      if (pt.gens[j].divides(beta)) {
        src[j] = beta - pt.gens[j];
        n = ht.dim(*src[j]);
      }
      off.push_back(off.back() + n);
    }
    ColumnEchelon<F> ech(f, off.back());
    for (std::size_t r = 0; r < pt.rel_degs.size(); ++r) {
      const auto& rho = pt.rel_degs[r];
      if (!rho.divides(beta)) continue;
      Multidegree base = beta - rho;
      std::size_t n = ht.dim(base);
      for (std::size_t k = 0; k < n; ++k) {
        SparseVec<F> img;
        for (auto& [j, c] : pt.rel.col(r)) {
          if (!src[j]) continue;
          auto part = ht.multiply(base, rho - pt.gens[j], {{static_cast<std::uint32_t>(k), f.one()}});
          for (auto& [i, v] : part) img.emplace_back(static_cast<std::uint32_t>(off[j] + i), f.mul(c, v));
        }
        std::sort(img.begin(), img.end(), [](auto& a, auto& b) { return a.first < b.first; });
        ech.insert(img);
      }
    }
    return std::make_pair(std::move(ech), std::move(off));
  };

  auto strands = build_strands(*y0, d, d, {r0.level(), cap});
  for (auto& gamma : strands.cells) {
    if (h0.dim(gamma) == 0) continue;
    const auto& cell = h0.cell(gamma);
    for (std::size_t gi = 0; gi < p0.gens.size(); ++gi) {
      Multidegree beta = gamma + p0.gens[gi];
      if (beta.total() > cap || !rt.valid(beta)) continue;
      auto [ech, off] = tensor_span(beta);
      for (std::size_t k = 0; k < cell.dim(); ++k) {
        auto v = push_forward(tr, l0, top, d, expand_vec<F>(cell.reps[k], cell.members));
        if (v.empty()) continue;
        auto x = ht.coords(gamma, v);
        if (x.empty()) continue;
        SparseVec<F> elem;
        for (auto& [j, c] : iota.col(gi)) {
          Multidegree u = p0.gens[gi] - pt.gens[j];
          auto part = ht.multiply(gamma, u, x);
          for (auto& [i, val] : part) elem.emplace_back(static_cast<std::uint32_t>(off[j] + i), f.mul(c, val));
        }
        std::sort(elem.begin(), elem.end(), [](auto& a, auto& b) { return a.first < b.first; });
        if (!elem.empty() && !ech.in_span(elem))
          return class_name<F>(r0.spec(), d, gamma, l0) + ": " + r0.spec().monomial_str(p0.gens[gi]) +
                 " (x) class survives";
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Almost-zero test of colim_l H_d(sys(l)) for d in [dlo, dhi]. The probe at
// level l checks, for generators g of I(l) and classes x of H_d at level l,
// whether g x (resp. g (x) x) is still nonzero window levels later. Probes run
// for l = 1 .. max_level - window; the last two decide, and disagreement between
// them is reported as Unstable.
template <class F>
AlmostVerdict almost_zero_check(const LevelSystem<F>& sys, const IdealFamily& I, int dlo, int dhi, const Bounds& b,
                                Criterion crit) {
  AlmostVerdict out;
  out.criterion = crit;
  int top = std::max(b.max_level, b.window + 2);
  std::vector<ComplexPtr<F>> cx;
  std::vector<ChainMap<F>> tr;
  for (int l = 0; l <= top; ++l) {
    cx.push_back(sys.complex(l));
    if (l > 0) tr.push_back(sys.transition(l - 1));
  }
  std::int64_t cap = b.cap(cx[0]->ring->spec());
  int last = top - b.window;
  for (int d = dlo; d <= dhi; ++d) {
    std::vector<std::optional<std::string>> probes(last + 1);
    parallel_for(static_cast<std::size_t>(last), [&](std::size_t i) {
      int l = static_cast<int>(i) + 1;
      probes[l] = crit == Criterion::Annihilation
                      ? detail::annihilation_witness<F>(cx, tr, I, l, l + b.window, d, cap)
                      : detail::tensor_witness<F>(cx, tr, I, l, l + b.window, d, cap);
    });
    const auto& a = probes[last - 1];
    const auto& c = probes[last];
    out.stable[d] = a.has_value() == c.has_value() || last < 2;
    out.almost_zero[d] = !c.has_value() && !a.has_value();
    if (c) out.witness[d] = *c;
    else if (a) out.witness[d] = *a;
  }
  out.top_level = top;
  return out;
}

template <class F>
AlmostVerdict is_almost_zero(const LevelSystem<F>& sys, const IdealFamily& I, int dlo, int dhi, const Bounds& b) {
  return almost_zero_check(sys, I, dlo, dhi, b, Criterion::Annihilation);
}

template <class F>
AlmostVerdict tensor_zero_criterion(const LevelSystem<F>& sys, const IdealFamily& I, int dlo, int dhi,
                                    const Bounds& b) {
  return almost_zero_check(sys, I, dlo, dhi, b, Criterion::TensorVanishing);
}

// Minimal resolutions of a module family with lifted level maps.
template <class F>
class ModuleSystem {
 public:
  ModuleSystem(std::shared_ptr<const RingSpec> spec, ModuleFamily<F> m, int d_max, std::int64_t cap)
      : spec_(std::move(spec)), m_(std::move(m)), d_(d_max), cap_(cap) {}

  const Resolution<F>& res(int l) {
    auto it = cache_.find(l);
    if (it != cache_.end()) return it->second;
    auto r = make_level_ring(spec_, l);
    return cache_.emplace(l, minimal_resolution(m_.at(r, cap_), d_, cap_)).first->second;
  }
  ChainMap<F> lambda(int l) {
    auto it = maps_.find(l);
    if (it != maps_.end()) return it->second;
    const auto& a = res(l);
    const auto& b = res(l + 1);
    return maps_.emplace(l, lift_chain_map(m_.transition(a.module, b.module), a, b)).first->second;
  }
  LevelSystem<F> system() {
    return {[this](int l) { return res(l).complex; }, [this](int l) { return lambda(l); }};
  }

 private:
  std::shared_ptr<const RingSpec> spec_;
  ModuleFamily<F> m_;
  int d_;
  std::int64_t cap_;
  std::map<int, Resolution<F>> cache_;
  std::map<int, ChainMap<F>> maps_;
};

// Randomized cross-validation of the two criteria on cyclic modules R/J, J a
// monomial ideal with exponents in (1/r^2) Z for divisible variables.

inline IdealFamily random_monomial_ideal(const RingSpec& s, std::mt19937_64& rng, int gens = 2) {
  std::int64_t den = std::int64_t(s.root_base()) * s.root_base();
  IdealFamily J{"J", {}};
  for (int g = 0; g < gens; ++g) {
    std::vector<Weight> e(s.num_vars(), Weight(0));
    for (std::size_t i = 0; i < e.size(); ++i)
      e[i] = s.vars()[i].divisible ? Weight(static_cast<std::int64_t>(rng() % (den + 1)), den)
                                   : Weight(static_cast<std::int64_t>(rng() % 2));
    auto m = s.from_exponents(e);
    if (m.total() == 0) e[0] = s.vars()[0].divisible ? Weight(1, den) : Weight(1);
    J.gens.push_back({IdealGenerator::Kind::Fixed, 0, s.from_exponents(e)});
  }
  return J;
}

struct AgreementResult {
  int samples = 0;
  int agreed = 0;
  std::vector<std::string> disagreements;  // "J = ...: annihilation=.., tensor=.."
  bool ok() const { return agreed == samples; }
};

template <class F>
AgreementResult criteria_agreement(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I, int samples,
                                   std::uint64_t seed, const Bounds& b) {
  std::mt19937_64 rng(seed);
  AgreementResult out;
  for (int k = 0; k < samples; ++k) {
    auto J = random_monomial_ideal(*spec, rng);
    auto fam = quotient_family(f, J);
    ModuleSystem<F> ms(spec, fam, b.deg_max + 1, b.cap(*spec));
    auto sys = ms.system();
    auto a = is_almost_zero(sys, I, 0, b.deg_max, b);
    auto t = tensor_zero_criterion(sys, I, 0, b.deg_max, b);
    ++out.samples;
    if (a.same_verdicts(t)) {
      ++out.agreed;
    } else {
      std::string gens;
      for (auto& g : J.gens) gens += (gens.empty() ? "" : ", ") + spec->monomial_str(g.mono);
      out.disagreements.push_back("J = (" + gens + "): annihilation=" + (a.all() ? "zero" : "nonzero") +
                                  ", tensor=" + (t.all() ? "zero" : "nonzero"));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Maps between level systems and almost equivalences.

template <class F>
struct MapSystem {
  std::function<ChainMap<F>(int)> map;                // f_l: A_l -> B_l
  std::function<ChainMap<F>(int)> source_transition;  // A_l -> A_{l+1}
  std::function<ChainMap<F>(int)> target_transition;  // B_l -> B_{l+1}
};

template <class F>
LevelSystem<F> cone_system(MapSystem<F> m) {
  auto cache = std::make_shared<std::map<int, ComplexPtr<F>>>();
  auto get = [m, cache](int l) {
    auto it = cache->find(l);
    if (it != cache->end()) return it->second;
    auto c = std::make_shared<const FreeComplex<F>>(cone(m.map(l)));
    cache->emplace(l, c);
    return c;
  };
  return {get, [m, get](int l) { return cone_map(m.target_transition(l), m.source_transition(l), get(l), get(l + 1)); }};
}

template <class F>
AlmostVerdict is_almost_equivalence(const MapSystem<F>& m, const IdealFamily& I, int dlo, int dhi, const Bounds& b) {
  return is_almost_zero(cone_system(m), I, dlo, dhi, b);
}

template <class F>
MapSystem<F> identity_map_system(LevelSystem<F> s) {
  return {[s](int l) { return identity_chain_map(s.complex(l)); }, s.transition, s.transition};
}

// eps_n: X_n -> R over the levels.
template <class F>
MapSystem<F> epsilon_map_system(std::shared_ptr<TowerBundle<F>> tower, int n) {
  auto unit_tr = [tower](int l) { return unit_map<F>(tower->level(l).unit, tower->level(l + 1).unit); };
  return {[tower, n](int l) { return tower->level(l).eps[n - 1]; },
          [tower, n](int l) { return tower->lambda(l, n); }, unit_tr};
}

// The zero map R -> R over the levels.
template <class F>
MapSystem<F> zero_unit_map_system(F f, std::shared_ptr<const RingSpec> spec) {
  auto unit = [f, spec](int l) {
    return std::make_shared<const FreeComplex<F>>(unit_complex(f, make_level_ring(spec, l)));
  };
  auto cache = std::make_shared<std::map<int, ComplexPtr<F>>>();
  auto get = [unit, cache](int l) {
    auto it = cache->find(l);
    if (it != cache->end()) return it->second;
    return cache->emplace(l, unit(l)).first->second;
  };
  auto tr = [get](int l) { return unit_map<F>(get(l), get(l + 1)); };
  return {[get](int l) { return zero_chain_map<F>(get(l), get(l)); }, tr, tr};
}

// ---------------------------------------------------------------------------
// I^oo (x) M vanishing: H_*(X_n (x) res M) = 0 at the colimit.

struct VanishingResult {
  bool vanishes = true;
  bool stable = true;
  BigradedTable table;
};

template <class F>
VanishingResult iinfty_tensor_vanishes(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I,
                                       ModuleFamily<F> m, const Bounds& b) {
  int N = b.deg_max;
  int n = b.power ? *b.power : N + 2;
  auto cap = b.cap(*spec);
  auto tower = std::make_shared<TowerBundle<F>>(f, spec, I, n, N + 1, cap);
  auto ms = std::make_shared<ModuleSystem<F>>(spec, std::move(m), N + 2, cap);
  auto cache = std::make_shared<std::map<int, TensorProduct<F>>>();
  auto get = [=](int l) -> const TensorProduct<F>& {
    auto it = cache->find(l);
    if (it != cache->end()) return it->second;
    auto t = tensor_complexes(*tower->level(l).x[n - 1], *ms->res(l).complex, N + 1, cap);
    return cache->emplace(l, std::move(t)).first->second;
  };
  LevelSystem<F> sys{[=](int l) { return get(l).complex; },
                     [=](int l) { return tensor_chain_maps(tower->lambda(l, n), ms->lambda(l), get(l), get(l + 1)); }};
  VanishingResult r;
  r.table = stabilized_homology(sys, 0, N, b.stabilize(*spec), "I^oo (x) M");
  r.stable = r.table.all_stable();
  r.vanishes = r.stable && r.table.pruned().cells.empty();
  return r;
}

// ---------------------------------------------------------------------------
// Localisation checks on the quotient model Q_n: H(Q (x) Q) = H(Q) and H(X_n (x) Q) = 0.

struct LocalisationResult {
  bool idempotent = true;   // H(Q (x) Q) = H(Q)
  bool fibre_vanishes = true;  // H(X_n (x) Q) = 0
  BigradedTable q, qq, xq;
};

template <class F>
LocalisationResult localisation_check(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I,
                                      const Bounds& b) {
  int N = b.deg_max;
  int n = b.power ? *b.power : N + 2;
  auto cap = b.cap(*spec);
  auto tower = std::make_shared<TowerBundle<F>>(f, spec, I, n, N + 1, cap);
  auto p = b.stabilize(*spec);
  auto qsys = [tower, n](int l) { return tower->level(l).q[n - 1]; };
  auto qtr = [tower, n](int l) { return tower->quotient_lambda(l, n); };
  auto xsys = [tower, n](int l) { return tower->level(l).x[n - 1]; };
  auto xtr = [tower, n](int l) { return tower->lambda(l, n); };
  auto product = [&](auto lc, auto ltr, auto rc, auto rtr) {
    auto cache = std::make_shared<std::map<int, TensorProduct<F>>>();
    auto get = [=](int l) -> const TensorProduct<F>& {
      auto it = cache->find(l);
      if (it != cache->end()) return it->second;
      return cache->emplace(l, tensor_complexes(*lc(l), *rc(l), N + 1, cap)).first->second;
    };
    return LevelSystem<F>{[=](int l) { return get(l).complex; },
                          [=](int l) { return tensor_chain_maps(ltr(l), rtr(l), get(l), get(l + 1)); }};
  };
  LocalisationResult r;
  r.q = stabilized_homology(LevelSystem<F>{qsys, qtr}, 0, N, p, "Q");
  r.qq = stabilized_homology(product(qsys, qtr, qsys, qtr), 0, N, p, "Q (x) Q");
  r.xq = stabilized_homology(product(xsys, xtr, qsys, qtr), 0, N, p, "X_n (x) Q");
  r.idempotent = r.q.all_stable() && r.qq.all_stable() && r.qq.same_dims(r.q);
  r.fibre_vanishes = r.xq.all_stable() && r.xq.pruned().cells.empty();
  return r;
}

// ---------------------------------------------------------------------------
// Gluing square, tensor side: the square
//
//   X_n (x) M --eps (x) 1--> M
//       |                    |
//       0      -------->  Q_n (x) M
//
// is cartesian iff its total fibre, cone(cone(eps (x) 1) -> Q_n (x) M), is acyclic.
// The comparison map sends generators of M to the R-summand of Q_n and the shifted
// copy of X_n (x) M to the X_n-summand.

struct GluingResult {
  bool cartesian = true;
  bool stable = true;
  BigradedTable fibre;
};

template <class F>
GluingResult gluing_square_check(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I, ModuleFamily<F> m,
                                 const Bounds& b) {
  int N = b.deg_max;
  int n = b.power ? *b.power : N + 2;
  if (N < 0) throw std::invalid_argument("gluing check: empty degree range");
  auto cap = b.cap(*spec);
  auto tower = std::make_shared<TowerBundle<F>>(f, spec, I, n, N + 1, cap);
  auto ms = std::make_shared<ModuleSystem<F>>(spec, std::move(m), N + 3, cap);
  struct Level {
    TensorProduct<F> a, bm, d;  // X (x) M, R (x) M, Q (x) M
    ComplexPtr<F> c;            // cone(eps (x) 1)
    ComplexPtr<F> total;        // cone(c -> d)
    ChainMap<F> alpha, phi;
  };
  auto cache = std::make_shared<std::map<int, Level>>();
  auto get = [=](int l) -> const Level& {
    auto it = cache->find(l);
    if (it != cache->end()) return it->second;
    const auto& tl = tower->level(l);
    const auto& mres = *ms->res(l).complex;
    Level lv;
    lv.a = tensor_complexes(*tl.x[n - 1], mres, N + 2, cap);
    lv.bm = tensor_complexes(*tl.unit, mres, N + 2, cap);
    lv.d = tensor_complexes(*tl.q[n - 1], mres, N + 3, cap);  // cone(alpha) reaches N + 3
    auto id_m = identity_chain_map(ms->res(l).complex);
    lv.alpha = tensor_chain_maps(tl.eps[n - 1], id_m, lv.a, lv.bm);
    lv.c = std::make_shared<const FreeComplex<F>>(cone(lv.alpha));
    // phi: cone(alpha) -> Q (x) M. Q_i = R_i + X_{i-1}; both summands embed.
    const auto& q = *tl.q[n - 1];
    const auto& c = *lv.c;
    const auto& dc = *lv.d.complex;
    lv.phi = zero_chain_map<F>(lv.c, lv.d.complex);
    for (int deg = c.lo; deg <= c.hi(); ++deg) {
      std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
      std::size_t nb = lv.bm.complex->rank(deg);
      // R (x) M part: unit in Q_0 is generator 0 of degree 0
      if (auto blk = lv.bm.index.find(deg, 0))
        for (std::size_t j = 0; j < blk->ny; ++j) {
          auto src = blk->slot[j];
          auto dst = lv.d.index.index(deg, 0, 0, j);
          if (src >= 0 && dst >= 0) trip.emplace_back(dst, src, f.one());
        }
      // X (x) M shifted: generator (x, m) with x in X_i sits in Q_{i+1} after the R-part
      if (deg - 1 >= lv.a.complex->lo)
        for (int i = tl.x[n - 1]->lo; i <= deg - 1; ++i) {
          auto blk = lv.a.index.find(deg - 1, i);
          if (!blk) continue;
          std::size_t off_r = tl.unit->rank(i + 1);
          for (std::size_t xi = 0; xi < blk->nx; ++xi)
            for (std::size_t j = 0; j < blk->ny; ++j) {
              auto src = blk->slot[xi * blk->ny + j];
              auto dst = lv.d.index.index(deg, i + 1, off_r + xi, j);
              if (src >= 0 && dst >= 0) trip.emplace_back(dst, static_cast<std::uint32_t>(nb + src), f.one());
            }
        }
      lv.phi.maps[deg - c.lo] = SparseMatrix<F>::from_triplets(f, dc.rank(deg), c.rank(deg), std::move(trip));
      (void)q;
    }
    if (auto bad = noncommuting_degree(lv.phi))
      throw InvariantViolation("gluing square: comparison map is not a chain map in degree " + std::to_string(*bad) +
                               " (hi " + std::to_string(c.hi()) + "/" + std::to_string(dc.hi()) + ")");
    lv.total = std::make_shared<const FreeComplex<F>>(cone(lv.phi));
    return cache->emplace(l, std::move(lv)).first->second;
  };
  LevelSystem<F> sys{[=](int l) { return get(l).total; },
                     [=](int l) {
                       const auto& a = get(l);
                       const auto& bb = get(l + 1);
                       auto lx = tower->lambda(l, n);
                       auto lm = ms->lambda(l);
                       auto la = tensor_chain_maps(lx, lm, a.a, bb.a);
                       auto lb = tensor_chain_maps(unit_map<F>(tower->level(l).unit, tower->level(l + 1).unit), lm,
                                                   a.bm, bb.bm);
                       auto ld = tensor_chain_maps(tower->quotient_lambda(l, n), lm, a.d, bb.d);
                       auto lc = cone_map(lb, la, a.c, bb.c);
                       return cone_map(ld, lc, a.total, bb.total);
                     }};
  GluingResult r;
  r.fibre = stabilized_homology(sys, 0, N, b.stabilize(*spec), "total fibre");
  r.stable = r.fibre.all_stable();
  r.cartesian = r.stable && r.fibre.pruned().cells.empty();
  return r;
}

// ---------------------------------------------------------------------------
// Exterior sum of two ideals on juxtaposed variable sets.

struct ExteriorSum {
  std::shared_ptr<const RingSpec> spec;
  IdealFamily ideal;
};

inline ExteriorSum exterior_sum(const RingSpec& a, const IdealFamily& ia, const RingSpec& b, const IdealFamily& ib) {
  if (!(a.field() == b.field())) throw std::invalid_argument("exterior sum: field mismatch");
  if (a.root_base() != b.root_base()) throw std::invalid_argument("exterior sum: root_base mismatch");
  std::vector<Variable> vars = a.vars();
  for (auto v : b.vars()) {
    for (auto& w : vars)
      if (w.name == v.name) throw std::invalid_argument("exterior sum: duplicate variable " + v.name);
    vars.push_back(v);
  }
  std::size_t na = a.num_vars(), n = vars.size();
  auto widen = [&](const RingSpec& s, const Multidegree& m, std::size_t offset) {
    std::vector<Weight> e(n, Weight(0));
    for (std::size_t i = 0; i < s.num_vars(); ++i) e[offset + i] = s.exponent(m, i);
    return e;
  };
  std::vector<std::vector<Weight>> trunc;
  for (auto& q : a.truncation()) trunc.push_back(widen(a, q, 0));
  for (auto& q : b.truncation()) trunc.push_back(widen(b, q, na));
  auto spec = std::make_shared<const RingSpec>(a.field(), a.root_base(), vars, trunc);
  IdealFamily I{ia.name + "+" + ib.name, {}};
  auto add = [&](const RingSpec& s, const IdealFamily& fam, std::size_t offset) {
    for (auto& g : fam.gens) {
      if (g.kind == IdealGenerator::Kind::Roots) I.gens.push_back({g.kind, g.var + offset, Multidegree(n)});
      else I.gens.push_back({g.kind, 0, spec->from_exponents(widen(s, g.mono, offset))});
    }
  };
  add(a, ia, 0);
  add(b, ib, na);
  return {spec, I};
}

}  // namespace idemq
