#pragma once

#include <climits>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "idemq/homology.hpp"

namespace idemq {

struct Certificate {
  std::string name;
  std::string value;
};

enum class Status { Stable, Unstable, Falsified };

inline const char* status_name(Status s) {
  switch (s) {
    case Status::Stable: return "Stable";
    case Status::Unstable: return "Unstable";
    default: return "Falsified";
  }
}

struct Report {
  std::string command;
  std::string spec_hash;
  std::vector<BigradedTable> tables;
  std::vector<Certificate> certificates;
  Status status = Status::Stable;
  std::optional<double> seconds;

  void certify(std::string name, std::string value) { certificates.push_back({std::move(name), std::move(value)}); }
  void certify(std::string name, const char* value) { certify(std::move(name), std::string(value)); }
  void certify(std::string name, bool v) { certify(std::move(name), std::string(v ? "yes" : "no")); }
  // Folds a table's stability into the status.
  void add_table(BigradedTable t) {
    if (!t.all_stable() && status == Status::Stable) status = Status::Unstable;
    tables.push_back(std::move(t));
  }
};

namespace detail {

inline int trusted_max(const BigradedTable& t) {
  if (t.trusted_degree_max != INT_MAX) return t.trusted_degree_max;
  return t.degree_stable.empty() ? -1 : t.degree_stable.rbegin()->first;
}

// Degrees to print: every computed degree plus any degree that has cells.
inline std::vector<int> degrees_of(const BigradedTable& t) {
  std::map<int, bool> seen;
  for (auto& [d, s] : t.degree_stable) seen[d] = true;
  for (auto& [k, c] : t.cells) seen[k.first] = true;
  std::vector<int> v;
  for (auto& [d, x] : seen) v.push_back(d);
  return v;
}

inline bool shown(const BigradedTable::Cell& c) { return c.dim > 0 || !c.stable; }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) o += c == '"' ? std::string("\"\"") : std::string(1, c);
  return o + "\"";
}

}  // namespace detail

inline std::string to_json(const Report& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["command"] = r.command;
  j["spec_hash"] = r.spec_hash;
  j["tables"] = ordered_json::array();
  for (auto& t : r.tables) {
    ordered_json tj;
    tj["name"] = t.name;
    tj["trusted_degree_max"] = detail::trusted_max(t);
    tj["cells"] = ordered_json::array();
    for (auto& [k, c] : t.cells) {
      if (!detail::shown(c)) continue;
      tj["cells"].push_back(
          {{"degree", k.first}, {"weight", weight_str(k.second)}, {"dim", c.dim}, {"stable", c.stable}});
    }
    tj["degrees"] = ordered_json::array();
    for (int d : detail::degrees_of(t)) {
      ordered_json dj{{"degree", d}, {"total", t.total(d)}, {"stable", t.stable(d)}};
      auto it = t.stable_level.find(d);
      if (it != t.stable_level.end()) dj["level"] = it->second;
      tj["degrees"].push_back(dj);
    }
    j["tables"].push_back(tj);
  }
  j["certificates"] = ordered_json::array();
  for (auto& c : r.certificates) j["certificates"].push_back({{"name", c.name}, {"value", c.value}});
  j["status"] = status_name(r.status);
  if (r.seconds) j["seconds"] = *r.seconds;
  return j.dump(2) + "\n";
}

inline std::string to_csv(const Report& r) {
  std::ostringstream o;
  o << "table,degree,weight,dim,stable\n";
  for (auto& t : r.tables)
    for (auto& [k, c] : t.cells)
      if (detail::shown(c))
        o << detail::csv_field(t.name) << "," << k.first << "," << weight_str(k.second) << "," << c.dim << ","
          << (c.stable ? "true" : "false") << "\n";
  return o.str();
}

inline std::string to_pretty(const Report& r) {
  std::ostringstream o;
  o << r.command << "  [spec " << r.spec_hash << "]\n";
  for (auto& t : r.tables) {
    o << "\n" << t.name << "  (trusted through degree " << detail::trusted_max(t) << ")\n";
    o << "  degree  dim  stable  level  cells (weight:dim)\n";
    for (int d : detail::degrees_of(t)) {
      auto it = t.stable_level.find(d);
      std::string lvl = it == t.stable_level.end() ? "-" : std::to_string(it->second);
      std::string cells;
      for (auto& [k, c] : t.cells)
        if (k.first == d && detail::shown(c))
          cells += (cells.empty() ? "" : " ") + weight_short(k.second) + ":" + std::to_string(c.dim) +
                   (c.stable ? "" : "?");
      o << "  " << std::setw(6) << d << "  " << std::setw(3) << t.total(d) << "  " << std::setw(6)
        << (t.stable(d) ? "yes" : "no") << "  " << std::setw(5) << lvl << "  " << cells << "\n";
    }
  }
  if (!r.certificates.empty()) {
    o << "\n";
    for (auto& c : r.certificates) o << c.name << ": " << c.value << "\n";
  }
  o << "\nstatus: " << status_name(r.status) << "\n";
  if (r.seconds) o << "time: " << std::fixed << std::setprecision(3) << *r.seconds << " s\n";
  return o.str();
}

}  // namespace idemq
