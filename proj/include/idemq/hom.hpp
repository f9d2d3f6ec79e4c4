#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "idemq/homology.hpp"
#include "idemq/resolution.hpp"

namespace idemq {

// Cohomology of the cochain complex Hom_R(X, M), d in [dlo, dhi], per internal
// degree s (a map of degree s sends e_b into M_{deg b + s}). M must have finite
// graded pieces below the weight cap; cells with |s| beyond that are not listed.
template <class F>
BigradedTable hom_cohomology(const FreeComplex<F>& x, const ModulePresentation<F>& m, int dlo, int dhi,
                             std::int64_t weight_cap, std::string name = "Ext") {
  const F& f = x.field;
  const LevelRing& r = *x.ring;
  ModuleStrands<F> ms(m);
  // support of M
  std::set<Multidegree> support;
  for (auto& g : m.gens) {
    if (g.total() > weight_cap) continue;
    r.enumerate(weight_cap - g.total(), [&](const Multidegree& e) {
      Multidegree gam = g + e;
      if (ms.dim(gam)) support.insert(gam);
    });
  }
  std::set<Multidegree> shifts;
  for (int d = dlo - 1; d <= dhi + 1; ++d)
    for (auto& b : x.degs(d))
      for (auto& gam : support) shifts.insert(gam - b);

  BigradedTable t;
  t.name = std::move(name);
  t.trusted_degree_max = std::min(dhi, x.exact_top());
  for (int d = dlo; d <= dhi; ++d) t.mark_degree(d);
  std::vector<Multidegree> cells(shifts.begin(), shifts.end());
  std::vector<std::vector<std::size_t>> dims(cells.size());
  parallel_for(cells.size(), [&](std::size_t ci) {
    const Multidegree& s = cells[ci];
    // block offsets of C^d at s
    auto offsets = [&](int d) {
      std::vector<std::size_t> off{0};
      for (auto& b : x.degs(d)) off.push_back(off.back() + ms.dim(b + s));
      return off;
    };
    auto delta_rank = [&](int d) -> std::size_t {  // rank of C^d -> C^{d+1}
      auto dd = x.d(d + 1);
      if (!dd) return 0;
      auto co = offsets(d), ro = offsets(d + 1);
      if (co.back() == 0 || ro.back() == 0) return 0;
      std::vector<std::tuple<std::uint32_t, std::uint32_t, typename F::Element>> trip;
      for (std::size_t bp = 0; bp < x.rank(d + 1); ++bp)
        for (auto& [b, c] : dd->col(bp)) {
          const Multidegree& src = x.degs(d)[b];
          Multidegree shift = x.degs(d + 1)[bp] - src;
          for (std::size_t k = 0; k < ms.dim(src + s); ++k)
            for (auto& [j, v] : ms.multiply(src + s, k, shift))
              trip.emplace_back(static_cast<std::uint32_t>(ro[bp] + j), static_cast<std::uint32_t>(co[b] + k),
                                f.mul(c, v));
        }
      return rank(SparseMatrix<F>::from_triplets(f, ro.back(), co.back(), std::move(trip)));
    };
    for (int d = dlo; d <= dhi; ++d) {
      std::size_t n = offsets(d).back();
      dims[ci].push_back(n - delta_rank(d) - delta_rank(d - 1));
    }
  });
  for (std::size_t ci = 0; ci < cells.size(); ++ci)
    for (int d = dlo; d <= dhi; ++d)
      if (dims[ci][d - dlo]) t.add(d, Weight(cells[ci].total(), r.spec().scale()), dims[ci][d - dlo], true);
  return t;
}

}  // namespace idemq
