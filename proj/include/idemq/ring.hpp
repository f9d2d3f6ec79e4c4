#pragma once

#include <boost/rational.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "idemq/field.hpp"

namespace idemq {

inline constexpr std::size_t kMaxVars = 8;

using Weight = boost::rational<std::int64_t>;

inline std::string weight_str(const Weight& w) {
  return std::to_string(w.numerator()) + "/" + std::to_string(w.denominator());
}
// "1", "3/2"
inline std::string weight_short(const Weight& w) {
  return w.denominator() == 1 ? std::to_string(w.numerator()) : weight_str(w);
}

// Exponent vector stored as numerators over the spec's global denominator.
struct Multidegree {
  std::array<std::int64_t, kMaxVars> e{};
  std::uint8_t n = 0;

  Multidegree() = default;
  explicit Multidegree(std::size_t nvars) : n(static_cast<std::uint8_t>(nvars)) {
    if (nvars > kMaxVars) throw std::invalid_argument("at most 8 variables are supported");
  }

  std::size_t size() const { return n; }
  std::int64_t& operator[](std::size_t i) { return e[i]; }
  std::int64_t operator[](std::size_t i) const { return e[i]; }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += e[i];
    return s;
  }
  bool nonnegative() const {
    for (std::size_t i = 0; i < n; ++i)
      if (e[i] < 0) return false;
    return true;
  }
  // componentwise <=
  bool divides(const Multidegree& o) const {
    for (std::size_t i = 0; i < n; ++i)
      if (e[i] > o.e[i]) return false;
    return true;
  }
  friend Multidegree operator+(Multidegree a, const Multidegree& b) {
    for (std::size_t i = 0; i < a.n; ++i) a.e[i] += b.e[i];
    return a;
  }
  friend Multidegree operator-(Multidegree a, const Multidegree& b) {
    for (std::size_t i = 0; i < a.n; ++i) a.e[i] -= b.e[i];
    return a;
  }
  friend bool operator==(const Multidegree& a, const Multidegree& b) {
    return a.n == b.n && std::equal(a.e.begin(), a.e.begin() + a.n, b.e.begin());
  }
  friend bool operator<(const Multidegree& a, const Multidegree& b) {
    if (a.n != b.n) return a.n < b.n;
    return std::lexicographical_compare(a.e.begin(), a.e.begin() + a.n, b.e.begin(), b.e.begin() + b.n);
  }
};

struct MultidegreeHash {
  std::size_t operator()(const Multidegree& m) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < m.n; ++i) {
      h ^= static_cast<std::uint64_t>(m.e[i]);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Orders cells by total weight first.
struct WeightOrder {
  bool operator()(const Multidegree& a, const Multidegree& b) const {
    auto ta = a.total(), tb = b.total();
    if (ta != tb) return ta < tb;
    return a < b;
  }
};

struct Variable {
  std::string name;
  bool divisible = false;
  friend bool operator==(const Variable&, const Variable&) = default;
};

// Ring data shared by every level: K[T_i^{1/r^l}]/Q with Q generated at level 0.
class RingSpec {
 public:
  RingSpec() = default;
  RingSpec(FieldSpec field, int root_base, std::vector<Variable> vars,
           std::vector<std::vector<Weight>> truncation)
      : field_(field), root_base_(root_base), vars_(std::move(vars)) {
    if (root_base_ < 2) throw std::invalid_argument("root_base must be at least 2");
    if (vars_.empty() || vars_.size() > kMaxVars)
      throw std::invalid_argument("between 1 and 8 variables are supported");
    level_cap_ = 0;
    scale_ = 1;
    while (scale_ <= (std::int64_t(1) << 30) / root_base_) {
      scale_ *= root_base_;
      ++level_cap_;
    }
    for (auto& q : truncation) {
      if (q.size() != vars_.size()) throw std::invalid_argument("truncation monomial arity mismatch");
      Multidegree m(vars_.size());
      for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] < Weight(0) || q[i].denominator() != 1)
          throw std::invalid_argument("truncation exponents must be nonnegative integers");
        m[i] = q[i].numerator() * scale_;
      }
      if (m.total() == 0) throw std::invalid_argument("truncation by the unit monomial gives the zero ring");
      truncation_.push_back(m);
    }
  }

  const FieldSpec& field() const { return field_; }
  int root_base() const { return root_base_; }
  const std::vector<Variable>& vars() const { return vars_; }
  std::size_t num_vars() const { return vars_.size(); }
  const std::vector<Multidegree>& truncation() const { return truncation_; }
  std::int64_t scale() const { return scale_; }
  int level_cap() const { return level_cap_; }

  std::int64_t root_power(int level) const {
    if (level < 0 || level > level_cap_)
      throw std::out_of_range("level " + std::to_string(level) + " exceeds supported cap " +
                              std::to_string(level_cap_));
    std::int64_t p = 1;
    for (int i = 0; i < level; ++i) p *= root_base_;
    return p;
  }
  // Grid spacing (in numerator units) of variable i at the given level.
  std::int64_t step(std::size_t i, int level) const {
    return vars_[i].divisible ? scale_ / root_power(level) : scale_;
  }

  Weight weight(const Multidegree& m) const { return Weight(m.total(), scale_); }
  Weight exponent(const Multidegree& m, std::size_t i) const { return Weight(m[i], scale_); }

  Multidegree from_exponents(const std::vector<Weight>& ex) const {
    if (ex.size() != vars_.size()) throw std::invalid_argument("monomial arity mismatch");
    Multidegree m(vars_.size());
    for (std::size_t i = 0; i < ex.size(); ++i) {
      if (ex[i] < Weight(0)) throw std::invalid_argument("negative exponent");
      if (scale_ % ex[i].denominator() != 0)
        throw std::invalid_argument("exponent denominator not a power of " + std::to_string(root_base_) +
                                    " within the supported level cap");
      m[i] = ex[i].numerator() * (scale_ / ex[i].denominator());
    }
    return m;
  }

  // Smallest level at which the monomial exists (or nullopt if never).
  std::optional<int> level_of(const Multidegree& m) const {
    for (int l = 0; l <= level_cap_; ++l) {
      bool ok = true;
      for (std::size_t i = 0; i < vars_.size() && ok; ++i) ok = m[i] % step(i, l) == 0;
      if (ok) return l;
    }
    return std::nullopt;
  }

  bool in_truncation(const Multidegree& m) const {
    for (auto& q : truncation_)
      if (q.divides(m)) return true;
    return false;
  }

  std::string monomial_str(const Multidegree& m) const {
    std::string s;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (m[i] == 0) continue;
      if (!s.empty()) s += "*";
      Weight w(m[i], scale_);
      s += vars_[i].name;
      if (w != Weight(1)) s += "^{" + std::to_string(w.numerator()) + "/" + std::to_string(w.denominator()) + "}";
    }
    return s.empty() ? "1" : s;
  }

  friend bool operator==(const RingSpec& a, const RingSpec& b) {
    return a.field_ == b.field_ && a.root_base_ == b.root_base_ && a.vars_ == b.vars_ &&
           a.truncation_ == b.truncation_;
  }

 private:
  FieldSpec field_;
  int root_base_ = 2;
  std::vector<Variable> vars_;
  std::vector<Multidegree> truncation_;
  std::int64_t scale_ = 1;
  int level_cap_ = 0;
};

// The finite-level ring R(l).
class LevelRing {
 public:
  LevelRing(std::shared_ptr<const RingSpec> spec, int level) : spec_(std::move(spec)), level_(level) {
    if (level < 0) throw std::invalid_argument("level must be nonnegative");
    spec_->root_power(level);
  }

  const RingSpec& spec() const { return *spec_; }
  const std::shared_ptr<const RingSpec>& spec_ptr() const { return spec_; }
  int level() const { return level_; }
  std::size_t num_vars() const { return spec_->num_vars(); }
  std::int64_t step(std::size_t i) const { return spec_->step(i, level_); }

  // Exponent vector of a monomial of this ring (ignoring truncation).
  bool valid(const Multidegree& m) const {
    for (std::size_t i = 0; i < num_vars(); ++i)
      if (m[i] < 0 || m[i] % step(i) != 0) return false;
    return true;
  }
  bool is_basis(const Multidegree& m) const { return valid(m) && !spec_->in_truncation(m); }

  // Upper bound on exponent i from pure-power truncation generators (exclusive), or -1.
  std::int64_t pure_cap(std::size_t i) const {
    std::int64_t cap = -1;
    for (auto& q : spec_->truncation()) {
      bool pure = true;
      for (std::size_t j = 0; j < num_vars() && pure; ++j) pure = (j == i) || q[j] == 0;
      if (pure && (cap < 0 || q[i] < cap)) cap = q[i];
    }
    return cap;
  }

  // Enumerates basis monomials e with e_i ≡ offset_i (mod spacing_i), e_i >= 0 and
  // total(e) <= budget. Spacing must be a multiple of the level step.
  void enumerate(const Multidegree& offset, const Multidegree& spacing, std::int64_t budget,
                 const std::function<void(const Multidegree&)>& fn) const {
    Multidegree cur(num_vars());
    enumerate_rec(0, cur, offset, spacing, budget, fn);
  }

  void enumerate(std::int64_t budget, const std::function<void(const Multidegree&)>& fn) const {
    Multidegree off(num_vars()), sp(num_vars());
    for (std::size_t i = 0; i < num_vars(); ++i) sp[i] = step(i);
    enumerate(off, sp, budget, fn);
  }

  // Basis monomials of exactly weight w (memoized).
  const std::vector<Multidegree>& basis_of_weight(const Weight& w) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->by_weight.find(w);
    if (it != cache_->by_weight.end()) return it->second;
    std::vector<Multidegree> out;
    if (w >= Weight(0) && spec_->scale() % w.denominator() == 0) {
      std::int64_t target = w.numerator() * (spec_->scale() / w.denominator());
      enumerate(target, [&](const Multidegree& m) {
        if (m.total() == target) out.push_back(m);
      });
    }
    return cache_->by_weight.emplace(w, std::move(out)).first->second;
  }
  std::size_t dim_of_weight(const Weight& w) const { return basis_of_weight(w).size(); }

  friend bool operator==(const LevelRing& a, const LevelRing& b) {
    return a.level_ == b.level_ && (a.spec_ == b.spec_ || *a.spec_ == *b.spec_);
  }

 private:
  void enumerate_rec(std::size_t i, Multidegree& cur, const Multidegree& offset, const Multidegree& spacing,
                     std::int64_t budget, const std::function<void(const Multidegree&)>& fn) const {
    if (i == num_vars()) {
      if (!spec_->in_truncation(cur)) fn(cur);
      return;
    }
    std::int64_t sp = spacing[i];
    std::int64_t start = ((offset[i] % sp) + sp) % sp;
    std::int64_t cap = pure_cap(i);
    for (std::int64_t v = start; v <= budget; v += sp) {
      if (cap >= 0 && v >= cap) break;
      cur[i] = v;
      enumerate_rec(i + 1, cur, offset, spacing, budget - v, fn);
    }
    cur[i] = 0;
  }

  struct Cache {
    std::mutex mu;
    std::map<Weight, std::vector<Multidegree>> by_weight;
  };

  std::shared_ptr<const RingSpec> spec_;
  int level_ = 0;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

using RingPtr = std::shared_ptr<const LevelRing>;

inline RingPtr make_level_ring(std::shared_ptr<const RingSpec> spec, int level) {
  return std::make_shared<const LevelRing>(std::move(spec), level);
}

// The inclusion R(l) -> R(l') on monomials. Numerators are shared across levels,
// so the map is the identity on exponent data; this object validates and
// documents the pairing.
struct LevelInclusion {
  RingPtr source, target;

  LevelInclusion(RingPtr s, RingPtr t) : source(std::move(s)), target(std::move(t)) {
    if (source->spec_ptr() != target->spec_ptr() && !(source->spec() == target->spec()))
      throw std::invalid_argument("level inclusion between different ring specs");
    if (target->level() < source->level()) throw std::invalid_argument("level inclusion must go upward");
  }
  // Image of a basis monomial; nullopt when the monomial is zero.
  std::optional<Multidegree> operator()(const Multidegree& m) const {
    if (!source->valid(m)) throw std::invalid_argument("not a monomial of the source level");
    if (source->spec().in_truncation(m)) return std::nullopt;
    return m;
  }
};

inline LevelInclusion level_inclusion(RingPtr a, RingPtr b) { return LevelInclusion(std::move(a), std::move(b)); }

struct IdealGenerator {
  enum class Kind { Roots, Fixed };
  Kind kind = Kind::Fixed;
  std::size_t var = 0;
  Multidegree mono;
  friend bool operator==(const IdealGenerator&, const IdealGenerator&) = default;
};

struct IdealFamily {
  std::string name;
  std::vector<IdealGenerator> gens;

  static IdealFamily roots(std::string name, std::size_t nvars) {
    IdealFamily f{std::move(name), {}};
    for (std::size_t i = 0; i < nvars; ++i) f.gens.push_back({IdealGenerator::Kind::Roots, i, Multidegree(nvars)});
    return f;
  }

  // Minimal monomial generators of I(l), excluding those that vanish in R(l).
  std::vector<Multidegree> generators_at(const LevelRing& r) const {
    std::vector<Multidegree> raw;
    for (auto& g : gens) {
      if (g.kind == IdealGenerator::Kind::Roots) {
        Multidegree m(r.num_vars());
        m[g.var] = r.step(g.var);
        raw.push_back(m);
      } else if (r.valid(g.mono)) {
        raw.push_back(g.mono);
      }
    }
    std::sort(raw.begin(), raw.end(), WeightOrder{});
    raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
    std::vector<Multidegree> out;
    for (auto& m : raw) {
      if (r.spec().in_truncation(m)) continue;
      bool redundant = false;
      for (auto& o : out) redundant = redundant || o.divides(m);
      if (!redundant) out.push_back(m);
    }
    return out;
  }

  bool contains(const LevelRing& r, const Multidegree& m) const {
    if (r.spec().in_truncation(m)) return true;
    for (auto& g : generators_at(r))
      if (g.divides(m)) return true;
    return false;
  }

  friend bool operator==(const IdealFamily&, const IdealFamily&) = default;
};

struct IdempotencyResult {
  enum class Verdict { Idempotent, NotIdempotent, UnknownUpToDepth };
  Verdict verdict = Verdict::Idempotent;
  std::string witness;          // generator not in I*I (NotIdempotent) or first undecided one
  int depth_needed = 0;         // largest level offset used by a factorization witness
  std::vector<std::string> factorizations;

  static const char* name(Verdict v) {
    switch (v) {
      case Verdict::Idempotent: return "Idempotent";
      case Verdict::NotIdempotent: return "NotIdempotent";
      default: return "UnknownUpToDepth";
    }
  }
};

namespace detail {

// Exact test whether the monomial m lies in I*I at some level. Returns the
// level of a factorization witness and the two factors, or nullopt when no
// factorization exists at any level.
struct Factorization {
  int level = 0;
  Multidegree a, b;
};

inline std::optional<Factorization> factor_in_square(const RingSpec& spec, const IdealFamily& I,
                                                     const Multidegree& m) {
  const std::size_t n = spec.num_vars();
  // Generators available at every level: fixed monomials and T_j for non-divisible roots.
  std::vector<Multidegree> coarse;
  std::vector<std::size_t> fine_vars;  // divisible root variables: arbitrarily small roots
  for (auto& g : I.gens) {
    if (g.kind == IdealGenerator::Kind::Fixed) {
      coarse.push_back(g.mono);
    } else if (spec.vars()[g.var].divisible) {
      fine_vars.push_back(g.var);
    } else {
      Multidegree t(n);
      t[g.var] = spec.scale();
      coarse.push_back(t);
    }
  }
  std::optional<Factorization> best;
  auto consider = [&](Multidegree a, Multidegree b) {
    if (!(a + b).divides(m)) return;
    int la = spec.level_of(a).value_or(spec.level_cap());
    int lb = spec.level_of(b).value_or(spec.level_cap());
    int l = std::max(la, lb);
    if (!best || l < best->level) best = Factorization{l, a, b};
  };
  // Smallest root T_j^{1/r^k} with exponent <= room (room > 0).
  auto small_root = [&](std::size_t j, std::int64_t room) -> std::optional<Multidegree> {
    for (int k = 0; k <= spec.level_cap(); ++k) {
      std::int64_t e = spec.scale() / spec.root_power(k);
      if (e <= room) {
        Multidegree t(n);
        t[j] = e;
        return t;
      }
    }
    return std::nullopt;
  };
  for (std::size_t x = 0; x < coarse.size(); ++x)
    for (std::size_t y = x; y < coarse.size(); ++y) consider(coarse[x], coarse[y]);
  for (auto j : fine_vars) {
    for (auto& g : coarse) {
      if (!g.divides(m) || m[j] <= g[j]) continue;
      if (auto t = small_root(j, m[j] - g[j])) consider(g, *t);
    }
    for (auto k : fine_vars) {
      if (j == k) {
        if (m[j] > 0)
          if (auto t = small_root(j, m[j] / 2)) consider(*t, *t);
      } else if (m[j] > 0 && m[k] > 0) {
        auto a = small_root(j, m[j]), b = small_root(k, m[k]);
        if (a && b) consider(*a, *b);
      }
    }
  }
  return best;
}

}  // namespace detail

// Decides whether the colimit ideal is idempotent. Every generator at its own
// level must factor as a product of two ideal elements within `depth` further
// levels. Non-membership is certified exactly: the factorization search above is
// exhaustive over all levels, so an absent factorization is a proof.
inline IdempotencyResult check_idempotent(const IdealFamily& I, const RingSpec& spec, int depth = 2) {
  if (depth < 1) throw std::invalid_argument("idempotency depth must be at least 1");
  IdempotencyResult res;
  const std::size_t n = spec.num_vars();
  // Representative generator monomials: a root family is scale-invariant, so its
  // level-0 generator and the generic level-l generator T^{1/r^l} behave alike;
  // both are checked.
  std::vector<std::pair<Multidegree, int>> todo;
  for (auto& g : I.gens) {
    if (g.kind == IdealGenerator::Kind::Fixed) {
      auto l = spec.level_of(g.mono);
      if (!l) throw std::invalid_argument("ideal generator not representable at any level");
      todo.emplace_back(g.mono, *l);
    } else {
      int levels = spec.vars()[g.var].divisible ? std::min(2, spec.level_cap()) : 0;
      for (int l = 0; l <= levels; ++l) {
        Multidegree t(n);
        t[g.var] = spec.step(g.var, l);
        todo.emplace_back(t, l);
      }
    }
  }
  bool unknown = false;
  for (auto& [m, lvl] : todo) {
    if (spec.in_truncation(m)) continue;  // zero in the ring
    auto f = detail::factor_in_square(spec, I, m);
    if (!f) {
      res.verdict = IdempotencyResult::Verdict::NotIdempotent;
      res.witness = spec.monomial_str(m);
      return res;
    }
    int offset = std::max(0, f->level - lvl);
    res.depth_needed = std::max(res.depth_needed, offset);
    res.factorizations.push_back(spec.monomial_str(m) + " in (" + spec.monomial_str(f->a) + ")*(" +
                                 spec.monomial_str(f->b) + ")");
    if (offset > depth && !unknown) {
      unknown = true;
      res.witness = spec.monomial_str(m);
    }
  }
  if (unknown) res.verdict = IdempotencyResult::Verdict::UnknownUpToDepth;
  return res;
}

}  // namespace idemq
