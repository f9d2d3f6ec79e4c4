#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "idemq/field.hpp"

namespace idemq {

template <class F>
using Entry = std::pair<std::uint32_t, typename F::Element>;

// Sparse vector: entries sorted by index, no stored zeros.
template <class F>
using SparseVec = std::vector<Entry<F>>;

// v - c*w
template <class F>
SparseVec<F> sub_scaled(const F& f, const SparseVec<F>& v, const typename F::Element& c,
                        const SparseVec<F>& w) {
  SparseVec<F> out;
  out.reserve(v.size() + w.size());
  std::size_t i = 0, j = 0;
  while (i < v.size() || j < w.size()) {
    if (j == w.size() || (i < v.size() && v[i].first < w[j].first)) {
      out.push_back(v[i++]);
    } else if (i == v.size() || w[j].first < v[i].first) {
      out.emplace_back(w[j].first, f.neg(f.mul(c, w[j].second)));
      ++j;
    } else {
      auto x = f.sub(v[i].second, f.mul(c, w[j].second));
      if (!f.is_zero(x)) out.emplace_back(v[i].first, std::move(x));
      ++i;
      ++j;
    }
  }
  return out;
}

template <class F>
void scale_in_place(const F& f, SparseVec<F>& v, const typename F::Element& c) {
  for (auto& e : v) e.second = f.mul(e.second, c);
}

template <class F>
typename F::Element sparse_get(const F& f, const SparseVec<F>& v, std::uint32_t idx) {
  auto it = std::lower_bound(v.begin(), v.end(), idx,
                             [](const Entry<F>& e, std::uint32_t i) { return e.first < i; });
  if (it != v.end() && it->first == idx) return it->second;
  return f.zero();
}

// Column-major sparse matrix.
template <class F>
class SparseMatrix {
 public:
  using Element = typename F::Element;

  SparseMatrix() = default;
  SparseMatrix(F f, std::size_t rows, std::size_t cols)
      : f_(std::move(f)), rows_(rows), cols_(cols) {}
  SparseMatrix(F f, std::size_t rows, std::vector<SparseVec<F>> cols)
      : f_(std::move(f)), rows_(rows), cols_(std::move(cols)) {}

  static SparseMatrix identity(F f, std::size_t n) {
    SparseMatrix m(f, n, n);
    for (std::size_t i = 0; i < n; ++i) m.cols_[i].emplace_back(static_cast<std::uint32_t>(i), f.one());
    return m;
  }

  // Duplicate (row, col) pairs are summed; zeros dropped.
  static SparseMatrix from_triplets(F f, std::size_t rows, std::size_t cols,
                                    std::vector<std::tuple<std::uint32_t, std::uint32_t, Element>> t) {
    for (auto& [r, c, v] : t)
      if (r >= rows || c >= cols) throw std::out_of_range("triplet index out of range");
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<1>(a), std::get<0>(a)) < std::tie(std::get<1>(b), std::get<0>(b));
    });
    SparseMatrix m(f, rows, cols);
    for (std::size_t i = 0; i < t.size();) {
      auto [r, c, v] = t[i];
      Element acc = v;
      std::size_t j = i + 1;
      for (; j < t.size() && std::get<0>(t[j]) == r && std::get<1>(t[j]) == c; ++j)
        acc = f.add(acc, std::get<2>(t[j]));
      if (!f.is_zero(acc)) m.cols_[c].emplace_back(r, acc);
      i = j;
    }
    return m;
  }

  static SparseMatrix from_dense(F f, const std::vector<std::vector<long long>>& rows) {
    std::size_t nr = rows.size(), nc = nr ? rows[0].size() : 0;
    SparseMatrix m(f, nr, nc);
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t r = 0; r < nr; ++r) {
        auto v = f.from_int(rows[r][c]);
        if (!f.is_zero(v)) m.cols_[c].emplace_back(static_cast<std::uint32_t>(r), v);
      }
    return m;
  }

  const F& field() const { return f_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_.size(); }
  const SparseVec<F>& col(std::size_t j) const { return cols_[j]; }
  SparseVec<F>& col_mut(std::size_t j) { return cols_[j]; }
  void set_col(std::size_t j, SparseVec<F> v) { cols_[j] = std::move(v); }

  Element at(std::size_t r, std::size_t c) const {
    return sparse_get(f_, cols_[c], static_cast<std::uint32_t>(r));
  }
  std::size_t nnz() const {
    std::size_t n = 0;
    for (auto& c : cols_) n += c.size();
    return n;
  }

  SparseVec<F> apply(const SparseVec<F>& x) const {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, Element>> t;
    for (auto& [j, xj] : x)
      for (auto& [i, a] : cols_[j]) t.emplace_back(i, 0, f_.mul(a, xj));
    auto m = from_triplets(f_, rows_, 1, std::move(t));
    return m.cols_[0];
  }

  std::vector<Element> apply_dense(const std::vector<Element>& x) const {
    if (x.size() != cols_.size()) throw std::invalid_argument("apply: dimension mismatch");
    std::vector<Element> y(rows_, f_.zero());
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      if (f_.is_zero(x[j])) continue;
      for (auto& [i, a] : cols_[j]) y[i] = f_.add(y[i], f_.mul(a, x[j]));
    }
    return y;
  }

  SparseMatrix transpose() const {
    SparseMatrix t(f_, cols_.size(), rows_);
    for (std::size_t j = 0; j < cols_.size(); ++j)
      for (auto& [i, a] : cols_[j]) t.cols_[i].emplace_back(static_cast<std::uint32_t>(j), a);
    return t;
  }

  friend SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
    SparseMatrix out(a.f_, a.rows_, b.cols());
    for (std::size_t j = 0; j < b.cols_.size(); ++j) {
      std::vector<std::tuple<std::uint32_t, std::uint32_t, Element>> t;
      for (auto& [k, bk] : b.cols_[j])
        for (auto& [i, aik] : a.cols_[k]) t.emplace_back(i, 0, a.f_.mul(aik, bk));
      out.cols_[j] = from_triplets(a.f_, a.rows_, 1, std::move(t)).cols_[0];
    }
    return out;
  }

  bool is_zero() const {
    for (auto& c : cols_)
      if (!c.empty()) return false;
    return true;
  }

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_;
  }

 private:
  F f_{};
  std::size_t rows_ = 0;
  std::vector<SparseVec<F>> cols_;
};

// Incremental column echelon form with pivots on the largest row index.
// Stored pivot columns are normalized to have leading entry 1. Each inserted
// vector may carry a tracked id; stored pivots remember their expression in
// tracked ids, so reductions can report coordinates in that basis.
template <class F>
class ColumnEchelon {
 public:
  using Element = typename F::Element;

  ColumnEchelon() = default;
  ColumnEchelon(F f, std::size_t dim, bool track = false)
      : f_(std::move(f)), pivot_of_row_(dim, -1), track_(track) {}

  struct Insertion {
    bool independent = false;
    SparseVec<F> relation;  // when dependent: combination of tracked ids equal to zero
  };

  Insertion insert(SparseVec<F> v, long tracked_id = -1) {
    SparseVec<F> combo;
    if (track_ && tracked_id >= 0) combo.emplace_back(static_cast<std::uint32_t>(tracked_id), f_.one());
    while (!v.empty()) {
      std::uint32_t p = v.back().first;
      int k = pivot_of_row_[p];
      if (k < 0) break;
      Element c = v.back().second;
      v = sub_scaled(f_, v, c, cols_[k]);
      if (track_) combo = sub_scaled(f_, combo, c, combos_[k]);
    }
    Insertion out;
    if (v.empty()) {
      out.relation = std::move(combo);
      return out;
    }
    Element lead_inv = f_.inv(v.back().second);
    scale_in_place(f_, v, lead_inv);
    pivot_of_row_[v.back().first] = static_cast<int>(cols_.size());
    cols_.push_back(std::move(v));
    if (track_) {
      scale_in_place(f_, combo, lead_inv);
      combos_.push_back(std::move(combo));
    }
    out.independent = true;
    return out;
  }

  struct Reduction {
    SparseVec<F> residual;
    SparseVec<F> coeffs;  // over tracked ids: v - residual = sum coeffs[id] * inserted[id] (+ untracked)
  };

  Reduction reduce(SparseVec<F> v) const {
    Reduction out;
    while (!v.empty()) {
      std::uint32_t p = v.back().first;
      int k = pivot_of_row_[p];
      if (k < 0) break;
      Element c = v.back().second;
      v = sub_scaled(f_, v, c, cols_[k]);
      if (track_) out.coeffs = sub_scaled(f_, out.coeffs, f_.neg(c), combos_[k]);
    }
    out.residual = std::move(v);
    return out;
  }

  bool in_span(const SparseVec<F>& v) const { return reduce(v).residual.empty(); }
  std::size_t rank() const { return cols_.size(); }
  std::size_t dim() const { return pivot_of_row_.size(); }
  const F& field() const { return f_; }

 private:
  F f_{};
  std::vector<int> pivot_of_row_;
  std::vector<SparseVec<F>> cols_;
  std::vector<SparseVec<F>> combos_;
  bool track_ = false;
};

template <class F>
std::size_t rank(const SparseMatrix<F>& m) {
  ColumnEchelon<F> e(m.field(), m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) e.insert(m.col(j));
  return e.rank();
}

template <class F>
struct RankKernel {
  std::size_t rank = 0;
  std::vector<SparseVec<F>> kernel;  // vectors indexed by column
};

template <class F>
RankKernel<F> rank_kernel(const SparseMatrix<F>& m) {
  ColumnEchelon<F> e(m.field(), m.rows(), true);
  RankKernel<F> out;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    auto ins = e.insert(m.col(j), static_cast<long>(j));
    if (!ins.independent) out.kernel.push_back(std::move(ins.relation));
  }
  out.rank = e.rank();
  return out;
}

// Some x with m x = rhs, or nothing when rhs is outside the column span.
template <class F>
std::optional<SparseVec<F>> solve_sparse(const SparseMatrix<F>& m, const SparseVec<F>& rhs) {
  ColumnEchelon<F> e(m.field(), m.rows(), true);
  for (std::size_t j = 0; j < m.cols(); ++j) e.insert(m.col(j), static_cast<long>(j));
  auto red = e.reduce(rhs);
  if (!red.residual.empty()) return std::nullopt;
  return red.coeffs;
}

template <class F>
std::optional<std::vector<typename F::Element>> solve(const SparseMatrix<F>& m,
                                                      const std::vector<typename F::Element>& rhs) {
  const F& f = m.field();
  if (rhs.size() != m.rows()) throw std::invalid_argument("solve: rhs length differs from row count");
  SparseVec<F> r;
  for (std::size_t i = 0; i < rhs.size(); ++i)
    if (!f.is_zero(rhs[i])) r.emplace_back(static_cast<std::uint32_t>(i), rhs[i]);
  auto x = solve_sparse(m, r);
  if (!x) return std::nullopt;
  std::vector<typename F::Element> out(m.cols(), f.zero());
  for (auto& [j, v] : *x) out[j] = v;
  return out;
}

// Small dense matrices, used for maps between homology spaces.
template <class F>
struct DenseMatrix {
  using Element = typename F::Element;
  std::size_t rows = 0, cols = 0;
  std::vector<Element> a;  // row-major

  DenseMatrix() = default;
  DenseMatrix(const F& f, std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, f.zero()) {}
  Element& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const Element& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static DenseMatrix identity(const F& f, std::size_t n) {
    DenseMatrix m(f, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = f.one();
    return m;
  }
};

template <class F>
DenseMatrix<F> multiply(const F& f, const DenseMatrix<F>& a, const DenseMatrix<F>& b) {
  if (a.cols != b.rows) throw std::invalid_argument("dense multiply: dimension mismatch");
  DenseMatrix<F> c(f, a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      if (f.is_zero(a(i, k))) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) = f.add(c(i, j), f.mul(a(i, k), b(k, j)));
    }
  return c;
}

template <class F>
std::size_t rank(const F& f, DenseMatrix<F> m) {
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols && r < m.rows; ++c) {
    std::size_t piv = m.rows;
    for (std::size_t i = r; i < m.rows; ++i)
      if (!f.is_zero(m(i, c))) {
        piv = i;
        break;
      }
    if (piv == m.rows) continue;
    for (std::size_t j = 0; j < m.cols; ++j) std::swap(m(r, j), m(piv, j));
    auto inv = f.inv(m(r, c));
    for (std::size_t i = r + 1; i < m.rows; ++i) {
      if (f.is_zero(m(i, c))) continue;
      auto factor = f.mul(m(i, c), inv);
      for (std::size_t j = c; j < m.cols; ++j) m(i, j) = f.sub(m(i, j), f.mul(factor, m(r, j)));
    }
    ++r;
  }
  return r;
}

}  // namespace idemq
