#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "idemq/homology.hpp"
#include "idemq/resolution.hpp"

namespace idemq {

// Computation bounds shared by the derived operations.
struct Bounds {
  int deg_max = 4;                   // N: report degrees 0..N
  std::optional<Weight> weight_max;  // defaults to N + 2
  int max_level = 6;
  int window = 2;
  int resolve_level = 0;
  int first_top = 4;
  std::optional<int> power;          // fixed tensor power instead of i + 2

  Weight weight() const { return weight_max ? *weight_max : Weight(deg_max + 2); }
  std::int64_t cap(const RingSpec& s) const {
    Weight w = weight() * Weight(s.scale());
    return w.numerator() / w.denominator();
  }
  StabilizeParams stabilize(const RingSpec& s) const {
    StabilizeParams p;
    p.window = window;
    p.max_level = max_level;
    p.first_top = std::min(std::max(first_top, resolve_level + window), max_level);
    p.resolve_level = resolve_level;
    p.weight_cap = cap(s);
    return p;
  }
};

template <class F>
ChainMap<F> unit_map(ComplexPtr<F> a, ComplexPtr<F> b) {
  ChainMap<F> m{a, b, {}};
  m.maps.push_back(SparseMatrix<F>::identity(a->field, 1));
  return m;
}

// ---------------------------------------------------------------------------
// Tor with level transitions.

template <class F>
class TorSystem {
 public:
  TorSystem(F f, std::shared_ptr<const RingSpec> spec, ModuleFamily<F> m, ModuleFamily<F> n, int deg_max,
            std::int64_t cap)
      : f_(f), spec_(std::move(spec)), m_(std::move(m)), n_(std::move(n)), d_(deg_max), cap_(cap) {}

  struct Level {
    Resolution<F> rm, rn;
    TensorProduct<F> t;
  };

  const Level& level(int l) {
    std::lock_guard<std::mutex> lock(mu_);
    return level_locked(l);
  }

  ChainMap<F> transition(int l) {
    std::lock_guard<std::mutex> lock(mu_);
    const Level& a = level_locked(l);
    const Level& b = level_locked(l + 1);
    auto lm = lift_chain_map(m_.transition(a.rm.module, b.rm.module), a.rm, b.rm);
    auto ln = lift_chain_map(n_.transition(a.rn.module, b.rn.module), a.rn, b.rn);
    return tensor_chain_maps(lm, ln, a.t, b.t);
  }

  LevelSystem<F> system() {
    return {[this](int l) { return level(l).t.complex; }, [this](int l) { return transition(l); }};
  }

 private:
  const Level& level_locked(int l) {
    auto it = cache_.find(l);
    if (it != cache_.end()) return it->second;
    auto r = make_level_ring(spec_, l);
    auto rm = minimal_resolution(m_.at(r, cap_), d_ + 1, cap_);
    auto rn = minimal_resolution(n_.at(r, cap_), d_ + 1, cap_);
    auto t = tensor_complexes(*rm.complex, *rn.complex, d_ + 1, cap_);
    return cache_.emplace(l, Level{std::move(rm), std::move(rn), std::move(t)}).first->second;
  }

  F f_;
  std::shared_ptr<const RingSpec> spec_;
  ModuleFamily<F> m_, n_;
  int d_;
  std::int64_t cap_;
  std::map<int, Level> cache_;
  std::mutex mu_;
};

// Tor_d(M, N) over R(l) for d <= deg_max: homology of res(M) (x) res(N).
template <class F>
BigradedTable derived_tensor(const ModulePresentation<F>& m, const ModulePresentation<F>& n, int deg_max,
                             std::int64_t cap) {
  auto rm = minimal_resolution(m, deg_max + 1, cap);
  auto rn = minimal_resolution(n, deg_max + 1, cap);
  auto t = tensor_complexes(*rm.complex, *rn.complex, deg_max + 1, cap);
  return homology(*t.complex, 0, deg_max, {m.ring->level(), cap}, "Tor");
}

// Tor at the colimit over levels.
template <class F>
BigradedTable stabilized_tor(F f, std::shared_ptr<const RingSpec> spec, ModuleFamily<F> m, ModuleFamily<F> n,
                             const Bounds& b) {
  TorSystem<F> sys(f, spec, std::move(m), std::move(n), b.deg_max, b.cap(*spec));
  return stabilized_homology(sys.system(), 0, b.deg_max, b.stabilize(*spec), "Tor");
}

// ---------------------------------------------------------------------------
// The tower X_n = X_{n-1} (x) X_1 of derived tensor powers of I, with
// augmentations eps_n: X_n -> R, structure maps sigma_n = id (x) eps_1 and level maps.

template <class F>
class TowerBundle {
 public:
  TowerBundle(F f, std::shared_ptr<const RingSpec> spec, IdealFamily I, int n_max, int deg_max, std::int64_t cap)
      : f_(f), spec_(std::move(spec)), fam_(ideal_family(f, std::move(I))), n_max_(n_max), d_(deg_max), cap_(cap) {
    if (n_max < 1) throw std::invalid_argument("tensor power must be at least 1");
  }

  struct Level {
    RingPtr ring;
    Resolution<F> res;
    ComplexPtr<F> unit;
    std::vector<ComplexPtr<F>> x;           // x[n-1] = X_n
    std::vector<TensorProduct<F>> prod;     // prod[n-1] for n >= 2 (prod[0] unused)
    std::vector<ChainMap<F>> eps;           // eps[n-1]: X_n -> R
    std::vector<ComplexPtr<F>> q;           // q[n-1] = cone(eps_n)
  };

  int n_max() const { return n_max_; }
  std::int64_t cap() const { return cap_; }
  const RingSpec& spec() const { return *spec_; }

  const Level& level(int l) {
    std::lock_guard<std::mutex> lock(mu_);
    return level_locked(l);
  }

  // lambda_n: X_n(l) -> X_n(l+1)
  ChainMap<F> lambda(int l, int n) {
    std::lock_guard<std::mutex> lock(mu_);
    return lambda_locked(l, n);
  }

  ChainMap<F> quotient_lambda(int l, int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto lam = lambda_locked(l, n);
    const Level& a = level_locked(l);
    const Level& b = level_locked(l + 1);
    return cone_map(unit_map<F>(a.unit, b.unit), lam, a.q[n - 1], b.q[n - 1]);
  }

  // sigma_n: X_{n+1} -> X_n at level l.
  ChainMap<F> sigma(int l, int n) {
    std::lock_guard<std::mutex> lock(mu_);
    const Level& lv = level_locked(l);
    if (n < 1 || n >= n_max_) throw std::out_of_range("sigma: power out of range");
    const auto& src = *lv.x[n];
    const auto& dst = *lv.x[n - 1];
    const auto& idx = lv.prod[n].index;
    const auto& e1 = lv.eps[0].maps[0];
    ChainMap<F> s{lv.x[n], lv.x[n - 1], {}};
    for (int d = src.lo; d <= src.hi(); ++d) {
      std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
      if (auto blk = idx.find(d, d)) {
        for (std::size_t p = 0; p < blk->nx; ++p)
          for (std::size_t c = 0; c < blk->ny; ++c) {
            auto col = blk->slot[p * blk->ny + c];
            if (col < 0 || e1.col(c).empty()) continue;
            trip.emplace_back(static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(col), e1.col(c)[0].second);
          }
      }
      auto m = SparseMatrix<F>::from_triplets(f_, dst.rank(d), src.rank(d), std::move(trip));
      mask(m, *lv.ring, dst.degs(d), src.degs(d));
      s.maps.push_back(std::move(m));
    }
    return s;
  }

  LevelSystem<F> power_system(int n) {
    return {[this, n](int l) { return level(l).x[n - 1]; }, [this, n](int l) { return lambda(l, n); }};
  }
  LevelSystem<F> quotient_system(int n) {
    return {[this, n](int l) { return level(l).q[n - 1]; }, [this, n](int l) { return quotient_lambda(l, n); }};
  }
  // cofibre(sigma_n) at every level, with induced level maps.
  LevelSystem<F> cofibre_system(int n) {
    auto cache = std::make_shared<std::map<int, ComplexPtr<F>>>();
    auto get = [this, n, cache](int l) {
      auto it = cache->find(l);
      if (it != cache->end()) return it->second;
      auto c = std::make_shared<const FreeComplex<F>>(cone(sigma(l, n)));
      cache->emplace(l, c);
      return c;
    };
    return {get, [this, n, get](int l) {
              return cone_map(lambda(l, n), lambda(l, n + 1), get(l), get(l + 1));
            }};
  }

 private:
  const Level& level_locked(int l) {
    auto it = cache_.find(l);
    if (it != cache_.end()) return it->second;
    Level lv;
    lv.ring = make_level_ring(spec_, l);
    lv.res = minimal_resolution(fam_.at(lv.ring, cap_), d_ + 1, cap_);
    auto aug = augment_ideal(lv.res);
    lv.unit = aug.unit;
    lv.x.push_back(lv.res.complex);
    lv.prod.emplace_back();
    lv.eps.push_back(aug.epsilon);
    const auto& x1 = *lv.res.complex;
    for (int n = 2; n <= n_max_; ++n) {
      auto t = tensor_complexes(*lv.x.back(), x1, d_ + 1, cap_);
      if (minimize(t.complex).changed) throw InvariantViolation("tensor power of minimal complexes not minimal");
      // eps_n(b (x) c) = eps_{n-1}(b) eps_1(c)
      const auto& prev = lv.eps.back().maps[0];
      const auto& e1 = lv.eps[0].maps[0];
      ChainMap<F> e = zero_chain_map<F>(t.complex, lv.unit);
      if (auto blk = t.index.find(0, 0)) {
        std::vector<SparseVec<F>> cols(t.complex->rank(0));
        for (std::size_t p = 0; p < blk->nx; ++p)
          for (std::size_t c = 0; c < blk->ny; ++c) {
            auto col = blk->slot[p * blk->ny + c];
            if (col < 0 || prev.col(p).empty() || e1.col(c).empty()) continue;
            cols[col] = {{0, f_.mul(prev.col(p)[0].second, e1.col(c)[0].second)}};
          }
        SparseMatrix<F> m(f_, 1, std::move(cols));
        mask(m, *lv.ring, lv.unit->degs(0), t.complex->degs(0));
        e.maps[0 - t.complex->lo] = std::move(m);
      }
      lv.x.push_back(t.complex);
      lv.prod.push_back(std::move(t));
      lv.eps.push_back(std::move(e));
    }
    for (int n = 1; n <= n_max_; ++n) lv.q.push_back(std::make_shared<const FreeComplex<F>>(cone(lv.eps[n - 1])));
    return cache_.emplace(l, std::move(lv)).first->second;
  }

  ChainMap<F> lambda_locked(int l, int n) {
    auto key = std::make_pair(l, n);
    auto it = lambdas_.find(key);
    if (it != lambdas_.end()) return it->second;
    const Level& a = level_locked(l);
    const Level& b = level_locked(l + 1);
    ChainMap<F> m;
    if (n == 1) {
      m = lift_chain_map(fam_.transition(a.res.module, b.res.module), a.res, b.res);
    } else {
      auto prev = lambda_locked(l, n - 1);
      auto one = lambda_locked(l, 1);
      m = tensor_chain_maps(prev, one, a.prod[n - 1], b.prod[n - 1]);
    }
    return lambdas_.emplace(key, std::move(m)).first->second;
  }

  F f_;
  std::shared_ptr<const RingSpec> spec_;
  ModuleFamily<F> fam_;
  int n_max_, d_;
  std::int64_t cap_;
  std::map<int, Level> cache_;
  std::map<std::pair<int, int>, ChainMap<F>> lambdas_;
  std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Quotient homotopy pi_*(R / I^oo).

enum class Strategy { Auto, Direct, Factorized };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Auto: return "auto";
    case Strategy::Direct: return "direct";
    default: return "factorized";
  }
}

struct QuotientResult {
  BigradedTable table;
  IdempotencyResult idempotency;
  std::vector<std::string> provenance;  // per degree: power n and verdict level
  std::string strategy;
};

// Convolution of two tables: degrees and weights add.
inline BigradedTable convolve(const BigradedTable& a, const BigradedTable& b, int deg_max, const Weight& wmax) {
  BigradedTable t;
  t.name = a.name;
  t.trusted_degree_max = std::min({a.trusted_degree_max, b.trusted_degree_max, deg_max});
  for (int d = 0; d <= deg_max; ++d) {
    bool st = true;
    for (int i = 0; i <= d; ++i) st = st && a.stable(i) && b.stable(d - i);
    t.degree_stable[d] = st;
  }
  for (auto& [ka, ca] : a.cells)
    for (auto& [kb, cb] : b.cells) {
      int d = ka.first + kb.first;
      Weight w = ka.second + kb.second;
      if (d > deg_max || w > wmax) continue;
      t.add(d, w, ca.dim * cb.dim, ca.stable && cb.stable);
    }
  for (int d = 0; d <= deg_max; ++d) {
    int lvl = 0;
    for (int i = 0; i <= d; ++i) {
      auto ia = a.stable_level.find(i), ib = b.stable_level.find(d - i);
      if (ia != a.stable_level.end()) lvl = std::max(lvl, ia->second);
      if (ib != b.stable_level.end()) lvl = std::max(lvl, ib->second);
    }
    t.stable_level[d] = lvl;
  }
  return t;
}

// Variables linked by a truncation monomial or a fixed ideal generator.
inline std::vector<std::vector<std::size_t>> variable_blocks(const RingSpec& s, const IdealFamily& I) {
  std::size_t n = s.num_vars();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  auto link_support = [&](const Multidegree& m) {
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < n; ++i)
      if (m[i] != 0) {
        if (first) parent[find(i)] = find(*first);
        else first = i;
      }
  };
  for (auto& q : s.truncation()) link_support(q);
  for (auto& g : I.gens)
    if (g.kind == IdealGenerator::Kind::Fixed) link_support(g.mono);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [_, v] : groups) out.push_back(v);
  return out;
}

// Restriction of a ring spec and ideal family to a block of variables.
inline std::pair<std::shared_ptr<const RingSpec>, IdealFamily> restrict_to_block(const RingSpec& s,
                                                                                 const IdealFamily& I,
                                                                                 const std::vector<std::size_t>& blk) {
  std::vector<Variable> vars;
  for (auto i : blk) vars.push_back(s.vars()[i]);
  std::vector<std::vector<Weight>> trunc;
  auto inside = [&](const Multidegree& m) {
    for (std::size_t i = 0; i < s.num_vars(); ++i)
      if (m[i] != 0 && std::find(blk.begin(), blk.end(), i) == blk.end()) return false;
    return true;
  };
  for (auto& q : s.truncation())
    if (inside(q)) {
      std::vector<Weight> e;
      for (auto i : blk) e.push_back(s.exponent(q, i));
      trunc.push_back(e);
    }
  auto sub = std::make_shared<const RingSpec>(s.field(), s.root_base(), vars, trunc);
  IdealFamily J{I.name, {}};
  for (auto& g : I.gens) {
    if (g.kind == IdealGenerator::Kind::Roots) {
      auto it = std::find(blk.begin(), blk.end(), g.var);
      if (it != blk.end()) J.gens.push_back({g.kind, static_cast<std::size_t>(it - blk.begin()), Multidegree(blk.size())});
    } else if (inside(g.mono)) {
      std::vector<Weight> e;
      for (auto i : blk) e.push_back(s.exponent(g.mono, i));
      J.gens.push_back({g.kind, 0, sub->from_exponents(e)});
    }
  }
  return {sub, J};
}

// pi_i(R/I^oo) = colim_l H_i(cone(eps_n)) with n = i + 2 (or a fixed power).
template <class F>
QuotientResult quotient_homotopy_direct(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I,
                                        const Bounds& b) {
  QuotientResult res;
  res.strategy = "direct";
  int N = b.deg_max;
  int n_max = b.power ? *b.power : N + 2;
  TowerBundle<F> tower(f, spec, I, n_max, N + 1, b.cap(*spec));
  res.table.name = "pi";
  res.table.trusted_degree_max = -1;
  bool trusted = true;
  for (int i = 0; i <= N; ++i) {
    int n = b.power ? *b.power : i + 2;
    auto t = stabilized_homology(tower.quotient_system(n), i, i, b.stabilize(*spec), "pi");
    for (auto& [k, c] : t.cells) res.table.add(k.first, k.second, c.dim, c.stable);
    res.table.mark_degree(i);
    res.table.degree_stable[i] = t.stable(i);
    res.table.stable_level[i] = t.stable_level[i];
    trusted = trusted && t.trusted_degree_max >= i;
    if (trusted) res.table.trusted_degree_max = i;
    std::ostringstream os;
    os << "degree " << i << ": n=" << n << ", levels 0.." << t.stable_level[i] << ", "
       << (t.stable(i) ? "Stable" : "Unstable");
    res.provenance.push_back(os.str());
  }
  return res;
}

template <class F>
QuotientResult quotient_homotopy(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I, const Bounds& b,
                                 Strategy strategy = Strategy::Auto) {
  auto idem = check_idempotent(I, *spec, 2);
  if (idem.verdict == IdempotencyResult::Verdict::NotIdempotent)
    throw std::invalid_argument("ideal " + I.name + " is not idempotent (witness " + idem.witness + ")");
  auto blocks = variable_blocks(*spec, I);
  bool factor = strategy == Strategy::Factorized || (strategy == Strategy::Auto && blocks.size() > 1);
  QuotientResult res;
  if (!factor || blocks.size() == 1) {
    res = quotient_homotopy_direct(f, spec, I, b);
  } else {
    std::optional<BigradedTable> acc;
    for (auto& blk : blocks) {
      auto [sub, J] = restrict_to_block(*spec, I, blk);
      if (J.gens.empty())
        throw std::invalid_argument("factorized quotient: a variable block carries no ideal generator");
      auto part = quotient_homotopy_direct(f, sub, J, b);
      std::string names;
      for (auto i : blk) names += (names.empty() ? "" : ",") + spec->vars()[i].name;
      for (auto& p : part.provenance) res.provenance.push_back("[" + names + "] " + p);
      acc = acc ? convolve(*acc, part.table, b.deg_max, b.weight()) : part.table;
    }
    res.table = *acc;
    res.table.name = "pi";
    res.strategy = "factorized";
  }
  res.idempotency = idem;
  return res;
}

// ---------------------------------------------------------------------------
// Static check: cone(sigma_1: X_2 -> X_1) acyclic at the colimit.

struct StaticResult {
  bool is_static = true;
  bool stable = true;
  std::string witness;  // first nonzero cell "H_d weight w"
  BigradedTable table;
};

template <class F>
StaticResult static_check(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I, const Bounds& b) {
  TowerBundle<F> tower(f, spec, I, 2, b.deg_max + 1, b.cap(*spec));
  StaticResult r;
  r.table = stabilized_homology(tower.cofibre_system(1), 0, b.deg_max, b.stabilize(*spec), "cofib(sigma_1)");
  r.stable = r.table.all_stable();
  for (auto& [k, c] : r.table.cells)
    if (c.dim) {
      r.is_static = false;
      r.witness = "H_" + std::to_string(k.first) + " weight " + weight_short(k.second);
      break;
    }
  return r;
}

// ---------------------------------------------------------------------------
// Tower report: connectivity of cofibre(sigma_n) at fixed levels and the static
// collapse of H_0(X_n) at the colimit.

struct TowerReport {
  bool ok = true;
  std::string failure;  // first failing (n, i, weight)
  std::vector<std::string> certificates;
  std::vector<BigradedTable> cofibres;  // stabilized H_*(cofibre(sigma_n)), n = 1..n_max-1
  std::vector<BigradedTable> h0;        // stabilized H_0(X_n), n = 1..n_max
};

template <class F>
TowerReport tower_report(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I, int n_max,
                         const Bounds& b) {
  if (n_max < 2) throw std::invalid_argument("tower_report needs n_max >= 2");
  TowerBundle<F> tower(f, spec, I, n_max, n_max, b.cap(*spec));
  auto p = b.stabilize(*spec);
  TowerReport rep;
  auto fail = [&](std::string why) {
    if (rep.ok) rep.failure = std::move(why);
    rep.ok = false;
  };
  for (int n = 1; n < n_max; ++n) {
    auto h = stabilized_homology(tower.cofibre_system(n), 0, n - 1, p, "cofibre(sigma_" + std::to_string(n) + ")");
    bool good = h.all_stable();
    for (auto& [k, cell] : h.cells)
      if (cell.dim && good) {
        good = false;
        fail("n=" + std::to_string(n) + ", H_" + std::to_string(k.first) + " weight " + weight_short(k.second));
      }
    if (!h.all_stable()) fail("n=" + std::to_string(n) + ": cofibre homology Unstable");
    rep.certificates.push_back("cofibre(sigma_" + std::to_string(n) + ") is " + std::to_string(n) +
                               "-connective: " + (good ? "yes" : "NO"));
    rep.cofibres.push_back(std::move(h));
  }
  for (int n = 1; n <= n_max; ++n)
    rep.h0.push_back(stabilized_homology(tower.power_system(n), 0, 0, p, "H0(X_" + std::to_string(n) + ")"));
  for (int n = 3; n <= n_max; ++n) {
    bool same = rep.h0[n - 1].same_dims(rep.h0[1]);
    rep.certificates.push_back("H_0(X_" + std::to_string(n) + ") = H_0(X_2): " + (same ? "yes" : "NO"));
    if (!same) fail("H_0(X_" + std::to_string(n) + ") differs from H_0(X_2)");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Amitsur cross-check. P = cone(eps_1) models R/I; Pbar = P / R. The normalized
// cochain complex of the cosimplicial object P^{(x) p+1} has columns
// N^p = P (x) Pbar^{(x) p}, with coboundary x (x) y -> 1 (x) [x] (x) y. Tot^m is the
// total complex over p <= m with D = (-1)^p d_int + delta, in degree internal - p.

template <class F>
struct AmitsurLevel {
  ComplexPtr<F> tot;
  // generator tuples: (p, components as (degree in P, index))
  std::vector<std::vector<std::vector<std::pair<int, std::uint32_t>>>> tuples;  // per total degree
};

template <class F>
AmitsurLevel<F> amitsur_total(const FreeComplex<F>& p, int m, int deg_top, std::int64_t cap) {
  const F& f = p.field;
  const LevelRing& ring = *p.ring;
  using Comp = std::pair<int, std::uint32_t>;
  using Tuple = std::vector<Comp>;
  AmitsurLevel<F> out;
  std::vector<std::vector<Multidegree>> degs(deg_top + 1);
  out.tuples.resize(deg_top + 1);
  std::map<Tuple, std::uint32_t> index;  // tuple -> index within its total degree
  // enumerate tuples (component 0 from P, components >= 1 from Pbar: P degree >= 1)
  for (int cols = 0; cols <= m; ++cols) {
    Tuple cur;
    std::function<void(int, int, Multidegree)> rec = [&](int slot, int internal, Multidegree w) {
      if (w.total() > cap) return;
      if (slot == cols + 1) {
        int t = internal - cols;
        if (t < 0 || t > deg_top) return;
        index[cur] = static_cast<std::uint32_t>(degs[t].size());
        degs[t].push_back(w);
        out.tuples[t].push_back(cur);
        return;
      }
      for (int d = slot == 0 ? p.lo : std::max(1, p.lo); d <= p.hi(); ++d) {
        if (internal + d - cols > deg_top) break;
        for (std::uint32_t g = 0; g < p.rank(d); ++g) {
          cur.push_back({d, g});
          rec(slot + 1, internal + d, w + p.degs(d)[g]);
          cur.pop_back();
        }
      }
    };
    rec(0, 0, Multidegree(ring.num_vars()));
  }
  std::vector<SparseMatrix<F>> diff;
  for (int t = 0; t <= deg_top; ++t) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
    if (t > 0)
      for (std::uint32_t col = 0; col < out.tuples[t].size(); ++col) {
        const Tuple& tu = out.tuples[t][col];
        int cols = static_cast<int>(tu.size()) - 1;
        bool neg_col = cols % 2 != 0;
        // internal differential with Koszul signs
        int before = 0;
        for (std::size_t s = 0; s < tu.size(); ++s) {
          auto [d, g] = tu[s];
          if (auto dm = p.d(d))
            for (auto& [a, v] : dm->col(g)) {
              if (s > 0 && d - 1 < 1) continue;  // Pbar drops degree 0
              Tuple img = tu;
              img[s] = {d - 1, a};
              auto it = index.find(img);
              if (it == index.end()) continue;
              auto c = v;
              if (before % 2) c = f.neg(c);
              if (neg_col) c = f.neg(c);
              trip.emplace_back(it->second, col, c);
            }
          before += d;
        }
        // coboundary: 1 (x) [x0] (x) rest
        if (cols < m && tu[0].first >= 1) {
          Tuple img;
          img.push_back({0, 0});
          for (auto& c : tu) img.push_back(c);
          auto it = index.find(img);
          if (it != index.end()) trip.emplace_back(it->second, col, f.one());
        }
      }
    std::size_t rows = t > 0 ? degs[t - 1].size() : 0;
    diff.push_back(SparseMatrix<F>::from_triplets(f, rows, degs[t].size(), std::move(trip)));
  }
  for (int t = 0; t <= deg_top; ++t) mask(diff[t], ring, t > 0 ? degs[t - 1] : std::vector<Multidegree>{}, degs[t]);
  auto c = make_complex(f, p.ring, 0, degs, std::move(diff));
  c.weight_cap = cap;
  c.valid_top = deg_top;
  out.tot = std::make_shared<const FreeComplex<F>>(std::move(c));
  return out;
}

struct AmitsurResult {
  BigradedTable table;
  std::vector<bool> agree;  // per degree against the tower
  bool all_agree = true;
};

template <class F>
AmitsurResult amitsur_crosscheck(F f, std::shared_ptr<const RingSpec> spec, const IdealFamily& I, int m,
                                 const Bounds& b, const BigradedTable& reference) {
  if (m < b.deg_max + 2) throw std::invalid_argument("amitsur depth must be at least deg_max + 2");
  int top = b.deg_max + 1;
  auto cap = b.cap(*spec);
  TowerBundle<F> tower(f, spec, I, 1, top + m + 1, cap);
  auto cache = std::make_shared<std::map<int, AmitsurLevel<F>>>();
  auto get = [&, cache](int l) -> const AmitsurLevel<F>& {
    auto it = cache->find(l);
    if (it != cache->end()) return it->second;
    return cache->emplace(l, amitsur_total(*tower.level(l).q[0], m, top, cap)).first->second;
  };
  LevelSystem<F> sys;
  sys.complex = [&](int l) { return get(l).tot; };
  sys.transition = [&](int l) {
    auto qa = tower.level(l).q[0];
    auto qb = tower.level(l + 1).q[0];
    auto lam = tower.quotient_lambda(l, 1);
    const auto& a = get(l);
    const auto& bb = get(l + 1);
    // componentwise tensor of the level map on tuples
    std::vector<std::map<std::vector<std::pair<int, std::uint32_t>>, std::uint32_t>> idx(top + 1);
    for (int t = 0; t <= top; ++t)
      for (std::uint32_t i = 0; i < bb.tuples[t].size(); ++i) idx[t][bb.tuples[t][i]] = i;
    ChainMap<F> out{a.tot, bb.tot, {}};
    for (int t = 0; t <= top; ++t) {
      std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
      for (std::uint32_t col = 0; col < a.tuples[t].size(); ++col) {
        const auto& tu = a.tuples[t][col];
        std::vector<std::pair<std::vector<std::pair<int, std::uint32_t>>, typename F::Element>> acc{{{}, f.one()}};
        for (std::size_t s = 0; s < tu.size(); ++s) {
          auto [d, g] = tu[s];
          std::vector<std::pair<std::vector<std::pair<int, std::uint32_t>>, typename F::Element>> next;
          auto mm = lam.at(d);
          if (mm)
            for (auto& [r, v] : mm->col(g))
              for (auto& [pre, c] : acc) {
                auto v2 = pre;
                v2.push_back({d, r});
                next.push_back({v2, f.mul(c, v)});
              }
          acc = std::move(next);
        }
        for (auto& [tu2, c] : acc) {
          auto it = idx[t].find(tu2);
          if (it != idx[t].end()) trip.emplace_back(it->second, col, c);
        }
      }
      auto mtx = SparseMatrix<F>::from_triplets(f, bb.tot->rank(t), a.tot->rank(t), std::move(trip));
      mask(mtx, *qb->ring, bb.tot->degs(t), a.tot->degs(t));
      out.maps.push_back(std::move(mtx));
    }
    (void)qa;
    return out;
  };
  AmitsurResult r;
  r.table = stabilized_homology(sys, 0, b.deg_max, b.stabilize(*spec), "Tot");
  for (int d = 0; d <= b.deg_max; ++d) {
    bool same = r.table.total(d) == reference.total(d);
    r.agree.push_back(same);
    r.all_agree = r.all_agree && same;
  }
  return r;
}

}  // namespace idemq
