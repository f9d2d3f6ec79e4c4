#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

namespace idemq {

// Exact rational with an int64 fast path. Values whose numerator or
// denominator leave the small range are held as a shared immutable mpq.
// Representation is canonical: a value that fits the small range is never big.
class Rational {
 public:
  Rational() = default;
  Rational(long long n) { *this = make(static_cast<i128>(n), 1); }
  Rational(long long n, long long d) {
    if (d == 0) throw std::domain_error("zero denominator");
    *this = make(static_cast<i128>(n), static_cast<i128>(d));
  }
  explicit Rational(const mpq_class& q) { *this = make_big(q); }

  bool is_zero() const { return !big_ && num_ == 0; }
  bool is_one() const { return !big_ && num_ == 1 && den_ == 1; }
  bool is_pm_one() const { return !big_ && den_ == 1 && (num_ == 1 || num_ == -1); }
  bool is_big() const { return static_cast<bool>(big_); }

  mpq_class to_mpq() const {
    if (big_) return *big_;
    mpq_class q;
    mpz_set_si(q.get_num_mpz_t(), num_);
    mpz_set_si(q.get_den_mpz_t(), den_);
    return q;
  }

  std::string str() const {
    if (big_) return big_->get_str();
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
      if (a.den_ == b.den_) {
        i128 n = static_cast<i128>(a.num_) + b.num_;
        if (a.den_ == 1) return make_reduced(n, 1);
        return make(n, a.den_);
      }
      i128 n = static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_;
      return make(n, static_cast<i128>(a.den_) * b.den_);
    }
    return make_big(a.to_mpq() + b.to_mpq());
  }
  friend Rational operator-(const Rational& a) {
    if (a.big_) return make_big(-*a.big_);
    return make_reduced(-static_cast<i128>(a.num_), a.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
      if (a.num_ == 0 || b.num_ == 0) return Rational();
      std::int64_t g1 = gcd64(abs64(a.num_), b.den_);
      std::int64_t g2 = gcd64(abs64(b.num_), a.den_);
      i128 n = static_cast<i128>(a.num_ / g1) * (b.num_ / g2);
      i128 d = static_cast<i128>(a.den_ / g2) * (b.den_ / g1);
      return make_reduced(n, d);
    }
    return make_big(a.to_mpq() * b.to_mpq());
  }
  Rational inverse() const {
    if (is_zero()) throw std::domain_error("inverse of zero");
    if (big_) return make_big(1 / *big_);
    if (num_ < 0) return make_reduced(-static_cast<i128>(den_), -static_cast<i128>(num_));
    return make_reduced(den_, num_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) { return a * b.inverse(); }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    if (a.big_ || b.big_) {
      if (!a.big_ || !b.big_) return false;
      return *a.big_ == *b.big_;
    }
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& q) { return os << q.str(); }

 private:
  using i128 = __int128;
  using u128 = unsigned __int128;
  static constexpr std::int64_t kLimit = std::int64_t(1) << 62;

  static std::int64_t abs64(std::int64_t v) { return v < 0 ? -v : v; }
  static std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    while (b) {
      std::int64_t t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  static u128 gcd128(u128 a, u128 b) {
    while (b) {
      u128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  static bool small(i128 n, i128 d) { return n > -kLimit && n < kLimit && d < kLimit; }

  static void set_mpz(mpz_t z, i128 v) {
    u128 m = v < 0 ? static_cast<u128>(-v) : static_cast<u128>(v);
    std::uint64_t words[2] = {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(m >> 64)};
    mpz_import(z, 2, -1, sizeof(std::uint64_t), 0, 0, words);
    if (v < 0) mpz_neg(z, z);
  }

  // n/d with d > 0 already coprime.
  static Rational make_reduced(i128 n, i128 d) {
    Rational r;
    if (small(n, d)) {
      r.num_ = static_cast<std::int64_t>(n);
      r.den_ = static_cast<std::int64_t>(d);
      return r;
    }
    mpq_class q;
    set_mpz(q.get_num_mpz_t(), n);
    set_mpz(q.get_den_mpz_t(), d);
    r.big_ = std::make_shared<const mpq_class>(std::move(q));
    return r;
  }
  static Rational make(i128 n, i128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    if (n == 0) return Rational();
    u128 g = gcd128(n < 0 ? static_cast<u128>(-n) : static_cast<u128>(n), static_cast<u128>(d));
    if (g != 1) {
      n /= static_cast<i128>(g);
      d /= static_cast<i128>(g);
    }
    return make_reduced(n, d);
  }
  static Rational make_big(mpq_class q) {
    q.canonicalize();
    Rational r;
    if (mpz_fits_slong_p(q.get_num_mpz_t()) && mpz_fits_slong_p(q.get_den_mpz_t())) {
      long n = mpz_get_si(q.get_num_mpz_t());
      long d = mpz_get_si(q.get_den_mpz_t());
      if (small(n, d)) {
        r.num_ = n;
        r.den_ = d;
        return r;
      }
    }
    r.big_ = std::make_shared<const mpq_class>(std::move(q));
    return r;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  std::shared_ptr<const mpq_class> big_;
};

struct RationalField {
  using Element = Rational;

  Element zero() const { return Element(); }
  Element one() const { return Element(1); }
  Element from_int(long long v) const { return Element(v); }
  Element add(const Element& a, const Element& b) const { return a + b; }
  Element sub(const Element& a, const Element& b) const { return a - b; }
  Element mul(const Element& a, const Element& b) const { return a * b; }
  Element div(const Element& a, const Element& b) const { return a / b; }
  Element neg(const Element& a) const { return -a; }
  Element inv(const Element& a) const { return a.inverse(); }
  bool is_zero(const Element& a) const { return a.is_zero(); }
  bool is_one(const Element& a) const { return a.is_one(); }
  // Pivots equal to +-1 keep coefficients integral during elimination.
  bool preferred_pivot(const Element& a) const { return a.is_pm_one(); }
  std::string format(const Element& a) const { return a.str(); }
  std::string name() const { return "Q"; }
  friend bool operator==(const RationalField&, const RationalField&) { return true; }
};

inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

struct PrimeField {
  using Element = std::uint32_t;

  std::uint32_t p = 2;

  PrimeField() = default;
  explicit PrimeField(std::uint32_t prime) : p(prime) {
    if (prime >= (1u << 31) || !is_prime_u64(prime))
      throw std::invalid_argument("PrimeField: " + std::to_string(prime) + " is not a prime below 2^31");
  }

  Element zero() const { return 0; }
  Element one() const { return 1 % p; }
  Element from_int(long long v) const {
    long long r = v % static_cast<long long>(p);
    return static_cast<Element>(r < 0 ? r + p : r);
  }
  Element add(Element a, Element b) const {
    std::uint32_t s = a + b;
    return s >= p ? s - p : s;
  }
  Element sub(Element a, Element b) const { return a >= b ? a - b : a + p - b; }
  Element mul(Element a, Element b) const {
    return static_cast<Element>(static_cast<std::uint64_t>(a) * b % p);
  }
  Element neg(Element a) const { return a == 0 ? 0 : p - a; }
  Element inv(Element a) const {
    if (a == 0) throw std::domain_error("inverse of zero");
    std::int64_t t = 0, nt = 1, r = p, nr = a;
    while (nr) {
      std::int64_t q = r / nr;
      std::int64_t tmp = t - q * nt;
      t = nt;
      nt = tmp;
      tmp = r - q * nr;
      r = nr;
      nr = tmp;
    }
    return static_cast<Element>(t < 0 ? t + p : t);
  }
  Element div(Element a, Element b) const { return mul(a, inv(b)); }
  bool is_zero(Element a) const { return a == 0; }
  bool is_one(Element a) const { return a == one(); }
  bool preferred_pivot(Element a) const { return a == 1 || a == p - 1; }
  std::string format(Element a) const { return std::to_string(a); }
  std::string name() const { return "F_" + std::to_string(p); }
  friend bool operator==(const PrimeField& a, const PrimeField& b) { return a.p == b.p; }
};

// Runtime description of the ground field, as read from a problem spec.
struct FieldSpec {
  enum class Kind { Rationals, Prime };
  Kind kind = Kind::Rationals;
  std::uint32_t p = 0;

  static FieldSpec rationals() { return {}; }
  static FieldSpec prime(std::uint32_t prime) {
    if (!is_prime_u64(prime) || prime >= (1u << 31))
      throw std::invalid_argument(std::to_string(prime) + " is not a prime below 2^31");
    return {Kind::Prime, prime};
  }
  std::string str() const { return kind == Kind::Rationals ? "Q" : "Fp " + std::to_string(p); }
  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

}  // namespace idemq
