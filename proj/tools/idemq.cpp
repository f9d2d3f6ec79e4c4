#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "idemq/almost.hpp"
#include "idemq/problem_spec.hpp"
#include "idemq/report.hpp"

using namespace idemq;

namespace {

enum Exit { kOk = 0, kUsage = 1, kUnstable = 2, kFalsified = 3, kOther = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::vector<std::string> specs;
  std::string format = "pretty";
  std::optional<int> deg_max, max_level, window, resolve_level, power, depth, n, n_max;
  std::optional<std::string> weight_max;
  std::uint64_t seed = 1;
  int samples = 20;
  bool timing = false;
  std::string ideal, left, right, module, map, strategy = "auto", output;
};

ProblemSpec load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_spec(ss.str());
  } catch (const SpecError& e) {
    throw SpecError(0, path + ": " + e.what());
  }
}

int int_setting(const ProblemSpec& s, const char* key, std::optional<int> flag, int fallback) {
  if (flag) return *flag;
  if (auto v = s.setting(key)) return std::stoi(*v);
  return fallback;
}

Weight parse_weight(const std::string& w) {
  auto slash = w.find('/');
  try {
    std::size_t pos = 0;
    auto num = std::stoll(w.substr(0, slash), &pos);
    std::int64_t den = 1;
    if (slash != std::string::npos) den = std::stoll(w.substr(slash + 1));
    if (den <= 0) throw std::invalid_argument("denominator");
    Weight r(num, den);
    if (r <= Weight(0)) throw std::invalid_argument("nonpositive");
    return r;
  } catch (const std::exception&) {
    throw UsageError("invalid weight '" + w + "'");
  }
}

Bounds make_bounds(const ProblemSpec& s, const Options& o) {
  Bounds b;
  b.deg_max = int_setting(s, "deg_max", o.deg_max, b.deg_max);
  b.max_level = int_setting(s, "max_level", o.max_level, b.max_level);
  b.window = int_setting(s, "window", o.window, b.window);
  b.resolve_level = int_setting(s, "resolve_level", o.resolve_level, b.resolve_level);
  if (o.weight_max) b.weight_max = parse_weight(*o.weight_max);
  else if (auto w = s.setting("weight_max")) b.weight_max = parse_weight(*w);
  if (o.power) b.power = *o.power;
  else if (auto p = s.setting("power")) b.power = std::stoi(*p);
  if (b.deg_max < 0) throw UsageError("--deg-max must be nonnegative");
  if (b.window < 1) throw UsageError("--window must be at least 1");
  if (b.max_level < b.window + 1) throw UsageError("--max-level must exceed --window");
  if (b.power && *b.power < 1) throw UsageError("--power must be at least 1");
  return b;
}

std::string default_ideal(const ProblemSpec& s, const std::string& flag) {
  if (!flag.empty()) {
    if (!s.find_ideal(flag)) throw UsageError("unknown ideal " + flag);
    return flag;
  }
  if (s.ideals.empty()) throw UsageError("spec declares no ideal");
  return s.ideals.front().name;
}

// R, K, 0, <ideal>, R/<ideal>
template <class F>
ModuleFamily<F> module_expr(F f, const ProblemSpec& ps, const RingSpec& r, const std::string& e) {
  if (e == "R") return free_family(f);
  if (e == "K") return residue_family(f);
  if (e == "0") return zero_family(f);
  if (e.rfind("R/", 0) == 0) {
    auto name = e.substr(2);
    if (!ps.find_ideal(name)) throw UsageError("unknown ideal " + name + " in module " + e);
    return quotient_family(f, ps.ideal(r, name));
  }
  if (ps.find_ideal(e)) return ideal_family(f, ps.ideal(r, e));
  throw UsageError("module must be R, K, 0, an ideal name, or R/<ideal>; got '" + e + "'");
}

void certify_verdict(Report& rep, const std::string& prefix, const AlmostVerdict& v) {
  for (auto& [d, z] : v.almost_zero) {
    std::string val = z ? "almost zero" : "not almost zero";
    auto w = v.witness.find(d);
    if (w != v.witness.end()) val += " (" + w->second + ")";
    if (!v.stable.at(d)) val += ", Unstable";
    rep.certify(prefix + " H_" + std::to_string(d), val);
  }
  if (!v.all_stable() && rep.status == Status::Stable) rep.status = Status::Unstable;
}

template <class F>
Report run(F f, const ProblemSpec& ps, const Options& o) {
  Report rep;
  rep.command = o.command;
  rep.spec_hash = spec_hash(ps);
  auto spec = ps.ring();
  auto b = make_bounds(ps, o);
  const std::string& cmd = o.command;

  if (cmd == "check-idempotent") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    int depth = int_setting(ps, "idempotency_depth", o.depth, 2);
    auto r = check_idempotent(I, *spec, depth);
    rep.certify("ideal", I.name);
    rep.certify("verdict", IdempotencyResult::name(r.verdict));
    if (!r.witness.empty()) rep.certify("witness", r.witness);
    rep.certify("depth needed", std::to_string(r.depth_needed));
    for (auto& fz : r.factorizations) rep.certify("factorization", fz);
    if (r.verdict == IdempotencyResult::Verdict::UnknownUpToDepth) rep.status = Status::Unstable;
  } else if (cmd == "tor") {
    if (o.left.empty() || o.right.empty()) throw UsageError("tor needs --left and --right");
    auto t = stabilized_tor(f, spec, module_expr(f, ps, *spec, o.left), module_expr(f, ps, *spec, o.right), b);
    t.name = "Tor(" + o.left + ", " + o.right + ")";
    rep.add_table(std::move(t));
  } else if (cmd == "quotient-homotopy") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    Strategy st = o.strategy == "direct" ? Strategy::Direct
                  : o.strategy == "factorized" ? Strategy::Factorized
                  : o.strategy == "auto" ? Strategy::Auto
                  : throw UsageError("--strategy must be auto, direct or factorized");
    auto r = quotient_homotopy(f, spec, I, b, st);
    rep.certify("idempotency", IdempotencyResult::name(r.idempotency.verdict));
    rep.certify("strategy", r.strategy);
    for (auto& p : r.provenance) rep.certify("provenance", p);
    rep.add_table(std::move(r.table));
  } else if (cmd == "tower") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    int n_max = o.n_max.value_or(4);
    auto r = tower_report(f, spec, I, n_max, b);
    for (auto& t : r.cofibres) rep.add_table(t);
    for (auto& t : r.h0) rep.add_table(t);
    for (auto& c : r.certificates) {
      auto colon = c.rfind(": ");
      rep.certify(c.substr(0, colon), c.substr(colon + 2));
    }
    if (!r.ok) {
      rep.certify("failure", r.failure);
      if (rep.status == Status::Stable) rep.status = Status::Falsified;
    }
  } else if (cmd == "static-check") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    auto r = static_check(f, spec, I, b);
    rep.add_table(r.table);
    rep.certify("static", r.is_static);
    if (!r.witness.empty()) rep.certify("witness", r.witness);
  } else if (cmd == "almost-zero") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    bool idem = check_idempotent(I, *spec).verdict == IdempotencyResult::Verdict::Idempotent;
    if (o.module.empty()) throw UsageError("almost-zero needs --module");
    if (o.module == "random") {
      auto r = criteria_agreement(f, spec, I, o.samples, o.seed, b);
      rep.certify("seed", std::to_string(o.seed));
      rep.certify("samples", std::to_string(r.samples));
      rep.certify("criteria agree", std::to_string(r.agreed) + "/" + std::to_string(r.samples));
      for (auto& d : r.disagreements) rep.certify("disagreement", d);
      if (!r.ok() && idem) rep.status = Status::Falsified;
    } else {
      ModuleSystem<F> ms(spec, module_expr(f, ps, *spec, o.module), b.deg_max + 1, b.cap(*spec));
      auto sys = ms.system();
      auto a = is_almost_zero(sys, I, 0, b.deg_max, b);
      auto t = tensor_zero_criterion(sys, I, 0, b.deg_max, b);
      certify_verdict(rep, "annihilation", a);
      certify_verdict(rep, "tensor-vanishing", t);
      rep.certify("almost zero", a.all());
      rep.certify("criteria agree", a.same_verdicts(t));
      if (!a.same_verdicts(t) && idem && rep.status == Status::Stable) rep.status = Status::Falsified;
    }
  } else if (cmd == "almost-equiv") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    std::string m = o.map.empty() ? "eps" : o.map;
    MapSystem<F> ms;
    std::shared_ptr<ModuleSystem<F>> keep;
    if (m == "zero") {
      ms = zero_unit_map_system(f, spec);
    } else if (m.rfind("identity:", 0) == 0) {
      keep = std::make_shared<ModuleSystem<F>>(spec, module_expr(f, ps, *spec, m.substr(9)), b.deg_max + 2,
                                               b.cap(*spec));
      ms = identity_map_system(keep->system());
    } else if (m == "eps" || m.rfind("eps:", 0) == 0) {
      int n = m == "eps" ? b.power.value_or(b.deg_max + 2) : std::stoi(m.substr(4));
      if (n < 1) throw UsageError("eps:<n> needs n >= 1");
      auto tower = std::make_shared<TowerBundle<F>>(f, spec, I, n, b.deg_max + 2, b.cap(*spec));
      ms = epsilon_map_system(tower, n);
    } else {
      throw UsageError("--map must be eps[:n], identity:<module> or zero");
    }
    auto v = is_almost_equivalence(ms, I, 0, b.deg_max, b);
    rep.certify("map", m);
    certify_verdict(rep, "cone", v);
    rep.certify("almost equivalence", v.all());
  } else if (cmd == "gluing-check") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    std::string m = o.module.empty() ? "R" : o.module;
    auto r = gluing_square_check(f, spec, I, module_expr(f, ps, *spec, m), b);
    rep.certify("module", m);
    rep.add_table(std::move(r.fibre));
    rep.certify("cartesian", r.cartesian);
    if (r.stable && !r.cartesian) rep.status = Status::Falsified;
  } else if (cmd == "amitsur-check") {
    auto I = ps.ideal(*spec, default_ideal(ps, o.ideal));
    int m = int_setting(ps, "amitsur_depth", o.depth, std::max(5, b.deg_max + 2));
    auto ref = quotient_homotopy(f, spec, I, b);
    auto r = amitsur_crosscheck(f, spec, I, m, b, ref.table);
    rep.certify("depth", std::to_string(m));
    for (std::size_t d = 0; d < r.agree.size(); ++d)
      rep.certify("agrees in degree " + std::to_string(d), static_cast<bool>(r.agree[d]));
    rep.certify("agree", r.all_agree);
    ref.table.name = "tower pi";
    rep.add_table(std::move(ref.table));
    rep.add_table(std::move(r.table));
    if (!r.all_agree && rep.status == Status::Stable) rep.status = Status::Falsified;
  } else {
    throw UsageError("unknown command " + cmd);
  }
  return rep;
}

template <class F>
Report run_exterior_sum(F f, const ProblemSpec& a, ProblemSpec b_spec, const Options& o) {
  auto renamed = avoid_names(b_spec, a);
  auto ra = a.ring();
  auto rb = b_spec.ring();
  auto ia = a.ideal(*ra, default_ideal(a, o.left));
  auto ib = b_spec.ideal(*rb, default_ideal(b_spec, o.right));
  auto sum = exterior_sum(*ra, ia, *rb, ib);
  auto joint_ideal = sum.ideal;
  for (auto& c : joint_ideal.name)
    if (c == '+') c = '_';
  auto joint = from_ring(*sum.spec, {joint_ideal});
  if (!o.output.empty()) {
    std::ofstream out(o.output);
    if (!out) throw UsageError("cannot write " + o.output);
    out << emit_spec(joint);
  }
  Report rep;
  rep.command = o.command;
  rep.spec_hash = spec_hash(joint);
  auto b = make_bounds(a, o);
  auto qa = quotient_homotopy(f, ra, ia, b);
  auto qb = quotient_homotopy(f, rb, ib, b);
  auto total = quotient_homotopy(f, sum.spec, sum.ideal, b);
  auto conv = convolve(qa.table, qb.table, b.deg_max, b.weight());
  conv.name = "convolution";
  bool agree = total.table.same_dims(conv);
  for (auto& r : renamed) rep.certify("renamed", r);
  rep.certify("ideal", sum.ideal.name);
  rep.certify("variables", std::to_string(sum.spec->num_vars()));
  rep.certify("kunneth", agree);
  total.table.name = "pi(" + sum.ideal.name + ")";
  rep.add_table(std::move(total.table));
  rep.add_table(std::move(conv));
  if (!agree && rep.status == Status::Stable) rep.status = Status::Falsified;
  return rep;
}

template <class F>
Report dispatch(F f, const std::vector<ProblemSpec>& specs, const Options& o) {
  if (o.command == "exterior-sum") return run_exterior_sum(f, specs[0], specs[1], o);
  return run(f, specs[0], o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derived idempotent quotients of monomial algebras"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"check-idempotent", "decide whether the colimit ideal is idempotent"},
      {"tor", "stabilized Tor of two modules"},
      {"quotient-homotopy", "homotopy of R/I^oo"},
      {"tower", "connectivity certificates for the tensor-power tower"},
      {"static-check", "is R/I^oo static (cone(X_2 -> X_1) acyclic)"},
      {"almost-zero", "almost-zero verdicts under both criteria"},
      {"almost-equiv", "almost-equivalence test for a map"},
      {"gluing-check", "recollement gluing square on the tensor side"},
      {"amitsur-check", "Amitsur totalization against the tower"},
      {"exterior-sum", "exterior sum of two ideals and the Kunneth check"}};
  for (auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&o, n = name] { o.command = n; });
    sub->add_option("spec", o.specs, name == "exterior-sum" ? "two spec files" : "spec file")
        ->required()
        ->expected(name == "exterior-sum" ? 2 : 1);
    sub->add_option("--format", o.format, "json, csv or pretty")->check(CLI::IsMember({"json", "csv", "pretty"}));
    sub->add_option("--deg-max", o.deg_max, "top homological degree");
    sub->add_option("--weight-max", o.weight_max, "weight bound, e.g. 6 or 11/2");
    sub->add_option("--max-level", o.max_level, "highest root level");
    sub->add_option("--window", o.window, "stabilization window");
    sub->add_option("--resolve-level", o.resolve_level, "level of the cell lattice");
    sub->add_option("--seed", o.seed, "seed for randomized checks");
    sub->add_flag("--timing", o.timing, "report wall time");
    sub->add_option("--n", o.n, "keep only the first n variables");
    sub->add_option("--ideal", o.ideal, "ideal name (default: first declared)");
    if (name == "tor" || name == "exterior-sum") {
      sub->add_option("--left", o.left, name == "tor" ? "left module" : "ideal of the first spec");
      sub->add_option("--right", o.right, name == "tor" ? "right module" : "ideal of the second spec");
    }
    if (name == "almost-zero" || name == "gluing-check")
      sub->add_option("--module", o.module, "R, K, 0, <ideal>, R/<ideal> (almost-zero also: random)");
    if (name == "almost-zero") sub->add_option("--samples", o.samples, "random modules to test");
    if (name == "almost-equiv") sub->add_option("--map", o.map, "eps[:n], identity:<module> or zero");
    if (name == "check-idempotent" || name == "amitsur-check")
      sub->add_option("--depth", o.depth, name == "amitsur-check" ? "Amitsur depth m" : "search depth");
    if (name == "quotient-homotopy" || name == "gluing-check" || name == "almost-equiv")
      sub->add_option("--power", o.power, "fixed tensor power n");
    if (name == "quotient-homotopy") sub->add_option("--strategy", o.strategy, "auto, direct or factorized");
    if (name == "tower") sub->add_option("--n-max", o.n_max, "largest tensor power");
    if (name == "exterior-sum") sub->add_option("--output", o.output, "write the joint spec here");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  auto t0 = std::chrono::steady_clock::now();
  try {
    std::vector<ProblemSpec> specs;
    for (auto& p : o.specs) {
      auto s = load(p);
      if (o.n && o.command != "exterior-sum") s = restrict_vars(s, static_cast<std::size_t>(*o.n));
      specs.push_back(std::move(s));
    }
    const auto& field = specs[0].field;
    for (auto& s : specs)
      if (!(s.field == field)) throw UsageError("specs use different fields");
    Report rep = field.kind == FieldSpec::Kind::Rationals ? dispatch(RationalField{}, specs, o)
                                                           : dispatch(PrimeField(field.p), specs, o);
    if (o.timing)
      rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.format == "json" ? to_json(rep) : o.format == "csv" ? to_csv(rep) : to_pretty(rep));
    switch (rep.status) {
      case Status::Stable: return kOk;
      case Status::Unstable: return kUnstable;
      default: return kFalsified;
    }
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kFalsified;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
