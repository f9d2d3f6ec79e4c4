#pragma once

#include <cctype>
#include <climits>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "idemq/ring.hpp"

namespace idemq {

// Line-oriented problem description:
//
//   field Q | Fp <p>
//   root_base <r>
//   var <name> [divisible]
//   truncate <monomial>[, ...]
//   ideal <name> = roots(<var>) | <monomial> [, ...]   (or 0)
//   set <key> <value>
//
// '#' starts a comment. Monomials: 1, T, T^2, T1^{3/4}*T2^{1/2}.

struct SpecError : std::runtime_error {
  int line;
  SpecError(int l, const std::string& msg)
      : std::runtime_error(l > 0 ? "line " + std::to_string(l) + ": " + msg : msg), line(l) {}
};

struct ProblemSpec {
  struct Generator {
    bool roots = false;
    std::string var;            // roots(var)
    std::vector<Weight> exps;   // explicit monomial
    friend bool operator==(const Generator&, const Generator&) = default;
  };
  struct Ideal {
    std::string name;
    std::vector<Generator> gens;
    friend bool operator==(const Ideal&, const Ideal&) = default;
  };

  FieldSpec field = FieldSpec::rationals();
  int root_base = 2;
  std::vector<Variable> vars;
  std::vector<std::vector<Weight>> truncation;
  std::vector<Ideal> ideals;
  std::map<std::string, std::string> settings;

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;

  static const std::vector<std::string>& setting_keys() {
    static const std::vector<std::string> k{"deg_max",  "weight_max",    "max_level",  "window",
                                            "resolve_level", "power", "amitsur_depth", "idempotency_depth"};
    return k;
  }

  std::optional<std::size_t> var_index(const std::string& name) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i].name == name) return i;
    return std::nullopt;
  }
  const Ideal* find_ideal(const std::string& name) const {
    for (auto& i : ideals)
      if (i.name == name) return &i;
    return nullptr;
  }

  std::shared_ptr<const RingSpec> ring() const {
    return std::make_shared<const RingSpec>(field, root_base, vars, truncation);
  }

  IdealFamily ideal(const RingSpec& r, const std::string& name) const {
    auto* i = find_ideal(name);
    if (!i) throw std::invalid_argument("unknown ideal " + name);
    IdealFamily f{name, {}};
    for (auto& g : i->gens) {
      if (g.roots) f.gens.push_back({IdealGenerator::Kind::Roots, *var_index(g.var), Multidegree(r.num_vars())});
      else f.gens.push_back({IdealGenerator::Kind::Fixed, 0, r.from_exponents(g.exps)});
    }
    return f;
  }

  std::optional<std::string> setting(const std::string& key) const {
    auto it = settings.find(key);
    if (it == settings.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '{' || c == '(') ++depth;
    if (c == '}' || c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool valid_name(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

inline std::int64_t parse_int(const std::string& s, int line, const std::string& what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw SpecError(line, "expected an integer for " + what + ", got '" + s + "'");
  }
  if (pos != s.size()) throw SpecError(line, "expected an integer for " + what + ", got '" + s + "'");
  return v;
}

inline Weight parse_rational(const std::string& s, int line) {
  auto slash = s.find('/');
  std::int64_t num = parse_int(trim(s.substr(0, slash)), line, "exponent");
  std::int64_t den = slash == std::string::npos ? 1 : parse_int(trim(s.substr(slash + 1)), line, "exponent");
  if (den <= 0) throw SpecError(line, "exponent denominator must be positive");
  return Weight(num, den);
}

// d divides some power of r
inline bool divides_power_of(std::int64_t d, int r) {
  for (auto g = std::gcd(d, std::int64_t(r)); g > 1; g = std::gcd(d, std::int64_t(r))) d /= g;
  return d == 1;
}

inline std::vector<Weight> parse_monomial(const ProblemSpec& s, const std::string& text, int line) {
  std::vector<Weight> e(s.vars.size(), Weight(0));
  auto t = trim(text);
  if (t == "1") return e;
  if (t.empty()) throw SpecError(line, "empty monomial");
  for (auto& factor : split(t, '*')) {
    auto caret = factor.find('^');
    auto name = trim(factor.substr(0, caret));
    auto vi = s.var_index(name);
    if (!vi) throw SpecError(line, "unknown variable " + name);
    Weight w(1);
    if (caret != std::string::npos) {
      auto ex = trim(factor.substr(caret + 1));
      if (ex.size() >= 2 && ex.front() == '{' && ex.back() == '}') ex = ex.substr(1, ex.size() - 2);
      w = parse_rational(ex, line);
    }
    if (w < Weight(0)) throw SpecError(line, "negative exponent on " + name);
    if (!divides_power_of(w.denominator(), s.root_base))
      throw SpecError(line, "denominator not a power of " + std::to_string(s.root_base) + " in " + factor);
    if (w.denominator() != 1 && !s.vars[*vi].divisible)
      throw SpecError(line, "fractional exponent on non-divisible variable " + name);
    e[*vi] += w;
  }
  return e;
}

inline std::string rational_exp(const Weight& w) {
  if (w.denominator() == 1) return w == Weight(1) ? "" : "^" + std::to_string(w.numerator());
  return "^{" + weight_str(w) + "}";
}

inline std::string monomial_text(const ProblemSpec& s, const std::vector<Weight>& e) {
  std::string out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == Weight(0)) continue;
    if (!out.empty()) out += "*";
    out += s.vars[i].name + rational_exp(e[i]);
  }
  return out.empty() ? "1" : out;
}

}  // namespace detail

inline ProblemSpec parse_spec(const std::string& text) {
  using namespace detail;
  ProblemSpec s;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool saw_var = false, saw_field = false, saw_base = false;
  std::map<std::string, int> names;  // variables and ideals share one namespace
  auto claim = [&](const std::string& n, int l) {
    if (!valid_name(n)) throw SpecError(l, "invalid name '" + n + "'");
    if (n == "R" || n == "K") throw SpecError(l, "name " + n + " is reserved");
    auto [it, fresh] = names.emplace(n, l);
    if (!fresh) throw SpecError(l, "duplicate name " + n + " (first declared on line " + std::to_string(it->second) + ")");
  };
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    auto body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    auto sp = body.find_first_of(" \t");
    auto kw = body.substr(0, sp);
    auto rest = sp == std::string::npos ? std::string() : trim(body.substr(sp));
    if (kw == "field") {
      if (saw_field) throw SpecError(line, "field declared twice");
      saw_field = true;
      if (rest == "Q") {
        s.field = FieldSpec::rationals();
      } else if (rest.rfind("Fp", 0) == 0) {
        auto p = parse_int(trim(rest.substr(2)), line, "field characteristic");
        try {
          if (p < 2 || p > INT32_MAX) throw std::invalid_argument(std::to_string(p) + " is not a prime below 2^31");
          s.field = FieldSpec::prime(static_cast<std::uint32_t>(p));
        } catch (const std::invalid_argument& e) {
          throw SpecError(line, e.what());
        }
      } else {
        throw SpecError(line, "field must be 'Q' or 'Fp <p>'");
      }
    } else if (kw == "root_base") {
      if (saw_base) throw SpecError(line, "root_base declared twice");
      if (saw_var) throw SpecError(line, "root_base must precede variables");
      saw_base = true;
      auto r = parse_int(rest, line, "root_base");
      if (r < 2 || r > 1024) throw SpecError(line, "root_base must be between 2 and 1024");
      s.root_base = static_cast<int>(r);
    } else if (kw == "var") {
      auto parts = split(rest, ' ');
      std::vector<std::string> toks;
      for (auto& p : parts)
        if (!p.empty()) toks.push_back(p);
      if (toks.empty() || toks.size() > 2 || (toks.size() == 2 && toks[1] != "divisible"))
        throw SpecError(line, "expected 'var <name> [divisible]'");
      claim(toks[0], line);
      if (s.vars.size() == kMaxVars) throw SpecError(line, "at most 8 variables are supported");
      s.vars.push_back({toks[0], toks.size() == 2});
      saw_var = true;
    } else if (kw == "truncate") {
      for (auto& m : split(rest, ',')) {
        auto e = parse_monomial(s, m, line);
        for (auto& w : e)
          if (w.denominator() != 1) throw SpecError(line, "truncation exponents must be integers: " + m);
        bool zero = true;
        for (auto& w : e) zero = zero && w == Weight(0);
        if (zero) throw SpecError(line, "truncation by 1 gives the zero ring");
        s.truncation.push_back(e);
      }
    } else if (kw == "ideal") {
      auto eq = rest.find('=');
      if (eq == std::string::npos) throw SpecError(line, "expected 'ideal <name> = <generators>'");
      ProblemSpec::Ideal id;
      id.name = trim(rest.substr(0, eq));
      claim(id.name, line);
      auto gens = trim(rest.substr(eq + 1));
      if (gens.empty()) throw SpecError(line, "ideal " + id.name + " has no generators (write 0 for the zero ideal)");
      for (auto& g : split(gens, ',')) {
        if (g == "0" && gens == "0") break;
        ProblemSpec::Generator gen;
        if (g.rfind("roots(", 0) == 0 && g.back() == ')') {
          gen.roots = true;
          gen.var = trim(g.substr(6, g.size() - 7));
          if (!s.var_index(gen.var)) throw SpecError(line, "unknown variable " + gen.var);
        } else {
          gen.exps = parse_monomial(s, g, line);
        }
        id.gens.push_back(gen);
      }
      s.ideals.push_back(std::move(id));
    } else if (kw == "set") {
      auto sp2 = rest.find_first_of(" \t");
      if (sp2 == std::string::npos) throw SpecError(line, "expected 'set <key> <value>'");
      auto key = rest.substr(0, sp2);
      auto val = trim(rest.substr(sp2));
      bool known = false;
      for (auto& k : ProblemSpec::setting_keys()) known = known || k == key;
      if (!known) throw SpecError(line, "unknown setting " + key);
      if (key == "weight_max") {
        if (parse_rational(val, line) <= Weight(0)) throw SpecError(line, "weight_max must be positive");
      } else if (parse_int(val, line, key) < 0) {
        throw SpecError(line, key + " must be nonnegative");
      }
      if (!s.settings.emplace(key, val).second) throw SpecError(line, "setting " + key + " given twice");
    } else {
      throw SpecError(line, "unknown keyword '" + kw + "'");
    }
  }
  if (s.vars.empty()) throw SpecError(0, "spec declares no variables");
  return s;
}

// Canonical text; parse_spec(emit_spec(s)) == s.
inline std::string emit_spec(const ProblemSpec& s) {
  using namespace detail;
  std::ostringstream o;
  o << "field " << s.field.str() << "\n";
  o << "root_base " << s.root_base << "\n";
  for (auto& v : s.vars) o << "var " << v.name << (v.divisible ? " divisible" : "") << "\n";
  if (!s.truncation.empty()) {
    o << "truncate ";
    for (std::size_t i = 0; i < s.truncation.size(); ++i) o << (i ? ", " : "") << monomial_text(s, s.truncation[i]);
    o << "\n";
  }
  for (auto& id : s.ideals) {
    o << "ideal " << id.name << " = " << (id.gens.empty() ? "0" : "");
    for (std::size_t i = 0; i < id.gens.size(); ++i) {
      auto& g = id.gens[i];
      o << (i ? ", " : "") << (g.roots ? "roots(" + g.var + ")" : monomial_text(s, g.exps));
    }
    o << "\n";
  }
  for (auto& [k, v] : s.settings) o << "set " << k << " " << v << "\n";
  return o.str();
}

// Spec text for a ring and ideals built in code (e.g. an exterior sum).
inline ProblemSpec from_ring(const RingSpec& r, const std::vector<IdealFamily>& ideals) {
  ProblemSpec s;
  s.field = r.field();
  s.root_base = r.root_base();
  s.vars = r.vars();
  auto exps = [&](const Multidegree& m) {
    std::vector<Weight> e;
    for (std::size_t i = 0; i < r.num_vars(); ++i) e.push_back(r.exponent(m, i));
    return e;
  };
  for (auto& t : r.truncation()) s.truncation.push_back(exps(t));
  for (auto& I : ideals) {
    ProblemSpec::Ideal id{I.name, {}};
    for (auto& g : I.gens) {
      if (g.kind == IdealGenerator::Kind::Roots) id.gens.push_back({true, r.vars()[g.var].name, {}});
      else id.gens.push_back({false, "", exps(g.mono)});
    }
    s.ideals.push_back(std::move(id));
  }
  return s;
}

// Renames variables of s that clash with names in `taken` by appending _2, _3, ...
// Returns the renames as "old -> new".
inline std::vector<std::string> avoid_names(ProblemSpec& s, const ProblemSpec& taken) {
  auto used = [&](const std::string& n) {
    for (auto& v : taken.vars)
      if (v.name == n) return true;
    for (auto& i : taken.ideals)
      if (i.name == n) return true;
    for (auto& v : s.vars)
      if (v.name == n) return true;
    for (auto& i : s.ideals)
      if (i.name == n) return true;
    return false;
  };
  std::vector<std::string> log;
  for (auto& v : s.vars) {
    if (!taken.var_index(v.name)) continue;
    std::string fresh;
    for (int k = 2; fresh.empty() || used(fresh); ++k) fresh = v.name + "_" + std::to_string(k);
    for (auto& id : s.ideals)
      for (auto& g : id.gens)
        if (g.roots && g.var == v.name) g.var = fresh;
    log.push_back(v.name + " -> " + fresh);
    v.name = fresh;
  }
  return log;
}

// Keeps the first k variables; truncation monomials and ideal generators that
// involve a dropped variable are dropped with it.
inline ProblemSpec restrict_vars(const ProblemSpec& s, std::size_t k) {
  if (k == 0 || k > s.vars.size())
    throw std::invalid_argument("--n must be between 1 and " + std::to_string(s.vars.size()));
  auto keeps = [k](const std::vector<Weight>& e) {
    for (std::size_t i = k; i < e.size(); ++i)
      if (e[i] != Weight(0)) return false;
    return true;
  };
  ProblemSpec r = s;
  r.vars.resize(k);
  r.truncation.clear();
  for (auto& t : s.truncation)
    if (keeps(t)) r.truncation.push_back({t.begin(), t.begin() + static_cast<std::ptrdiff_t>(k)});
  for (auto& id : r.ideals) {
    std::vector<ProblemSpec::Generator> gens;
    for (auto& g : id.gens) {
      if (g.roots) {
        if (*s.var_index(g.var) < k) gens.push_back(g);
      } else if (keeps(g.exps)) {
        gens.push_back({false, "", {g.exps.begin(), g.exps.begin() + static_cast<std::ptrdiff_t>(k)}});
      }
    }
    id.gens = std::move(gens);
  }
  return r;
}

// FNV-1a over the canonical text, as 16 hex digits.
inline std::string spec_hash(const ProblemSpec& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : emit_spec(s)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace idemq
