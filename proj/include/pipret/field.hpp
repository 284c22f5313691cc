#pragma once

/**
 * @file field.hpp
 * @brief Prime-field arithmetic, replicated databases, and inner-product tables.
 *
 * A database is K files of length L over F(q). Its inner-product table lists
 * <W_i, W_j> for every unordered pair {i, j} (diagonal included), in the order
 * {1,1}, {1,2}, ..., {1,K}, {2,2}, ..., {K,K}. Pair indices are 1-based to
 * match the usual file numbering; ranks are 0-based.
 */

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pipret/errors.hpp"

namespace pipret {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline constexpr u64 kMaxModulus = u64{1} << 61;

namespace detail {

inline constexpr u64 mul_mod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline constexpr u64 pow_mod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

// Deterministic Miller-Rabin; the witness set is exact for all 64-bit inputs.
inline constexpr bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    u64 x = detail::pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = detail::mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

inline void require_prime_modulus(u64 q) {
  if (q >= kMaxModulus) throw ValidationError("modulus " + std::to_string(q) + " exceeds 2^61");
  if (!is_prime(q)) throw ValidationError("modulus " + std::to_string(q) + " is not prime");
}

/// Element of F(q) for prime q. Always reduced.
class FieldElement {
 public:
  FieldElement(u64 value, u64 modulus) : value_(0), modulus_(modulus) {
    require_prime_modulus(modulus);
    value_ = value % modulus;
  }

  static FieldElement from_signed(std::int64_t v, u64 modulus) {
    require_prime_modulus(modulus);
    auto m = static_cast<std::int64_t>(modulus);
    std::int64_t r = v % m;
    if (r < 0) r += m;
    return FieldElement(static_cast<u64>(r), modulus);
  }

  u64 value() const noexcept { return value_; }
  u64 modulus() const noexcept { return modulus_; }

  // Centered representative in (-q/2, q/2].
  std::int64_t centered() const noexcept {
    return value_ > modulus_ / 2 ? static_cast<std::int64_t>(value_) - static_cast<std::int64_t>(modulus_)
                                 : static_cast<std::int64_t>(value_);
  }

  friend FieldElement operator+(const FieldElement& a, const FieldElement& b) {
    check_same(a, b);
    u64 s = a.value_ + b.value_;
    return raw(s >= a.modulus_ ? s - a.modulus_ : s, a.modulus_);
  }
  friend FieldElement operator-(const FieldElement& a, const FieldElement& b) {
    check_same(a, b);
    return raw(a.value_ >= b.value_ ? a.value_ - b.value_ : a.value_ + a.modulus_ - b.value_, a.modulus_);
  }
  friend FieldElement operator*(const FieldElement& a, const FieldElement& b) {
    check_same(a, b);
    return raw(detail::mul_mod(a.value_, b.value_, a.modulus_), a.modulus_);
  }
  FieldElement operator-() const { return raw(value_ == 0 ? 0 : modulus_ - value_, modulus_); }

  FieldElement inverse() const {
    if (value_ == 0) throw ValidationError("zero has no multiplicative inverse");
    return raw(detail::pow_mod(value_, modulus_ - 2, modulus_), modulus_);
  }

  friend bool operator==(const FieldElement&, const FieldElement&) = default;

 private:
  struct RawTag {};
  FieldElement(RawTag, u64 value, u64 modulus) : value_(value), modulus_(modulus) {}
  static FieldElement raw(u64 value, u64 modulus) { return FieldElement(RawTag{}, value, modulus); }

  static void check_same(const FieldElement& a, const FieldElement& b) {
    if (a.modulus_ != b.modulus_) {
      throw ValidationError("field modulus mismatch: " + std::to_string(a.modulus_) + " vs " +
                            std::to_string(b.modulus_));
    }
  }

  u64 value_;
  u64 modulus_;
};

/// Sum of a_l * b_l mod q over raw reduced residues.
inline u64 inner_product_mod(u64 q, std::span<const u64> a, std::span<const u64> b) {
  if (a.size() != b.size()) {
    throw ValidationError("inner product length mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  u64 acc = 0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    acc = (acc + detail::mul_mod(a[l], b[l], q)) % q;
  }
  return acc;
}

inline FieldElement inner_product(std::span<const FieldElement> a, std::span<const FieldElement> b) {
  if (a.size() != b.size()) {
    throw ValidationError("inner product length mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.empty()) throw ValidationError("inner product of empty vectors has no modulus");
  FieldElement acc(0, a.front().modulus());
  for (std::size_t l = 0; l < a.size(); ++l) acc = acc + a[l] * b[l];
  return acc;
}

// ---------------------------------------------------------------------------
// Pairs and their canonical order.

/// Unordered file pair {i, j}, 1-based, stored with i <= j.
class PairIndex {
 public:
  PairIndex(std::size_t i, std::size_t j) : i_(std::min(i, j)), j_(std::max(i, j)) {
    if (i_ == 0) throw ValidationError("pair indices are 1-based");
  }
  std::size_t first() const noexcept { return i_; }
  std::size_t second() const noexcept { return j_; }
  bool diagonal() const noexcept { return i_ == j_; }

  friend auto operator<=>(const PairIndex&, const PairIndex&) = default;

 private:
  std::size_t i_;
  std::size_t j_;
};

inline constexpr std::size_t pair_count(std::size_t K) { return K * (K + 1) / 2; }

inline std::size_t pair_rank(std::size_t K, const PairIndex& p) {
  if (p.second() > K) {
    throw ValidationError("pair {" + std::to_string(p.first()) + "," + std::to_string(p.second()) +
                          "} out of range for K=" + std::to_string(K));
  }
  // Rows 1..i-1 contribute K, K-1, ..., K-i+2 pairs.
  std::size_t i = p.first() - 1;
  std::size_t before = i * K - i * (i - 1) / 2;
  return before + (p.second() - p.first());
}

inline PairIndex pair_unrank(std::size_t K, std::size_t rank) {
  if (rank >= pair_count(K)) {
    throw ValidationError("pair rank " + std::to_string(rank) + " out of range for K=" + std::to_string(K));
  }
  std::size_t i = 1;
  std::size_t row = K;
  while (rank >= row) {
    rank -= row;
    --row;
    ++i;
  }
  return PairIndex(i, i + rank);
}

class PairOrdering {
 public:
  explicit PairOrdering(std::size_t K) : K_(K) {
    if (K == 0) throw ValidationError("file count K must be >= 1");
    pairs_.reserve(pair_count(K));
    for (std::size_t i = 1; i <= K; ++i)
      for (std::size_t j = i; j <= K; ++j) pairs_.emplace_back(i, j);
  }
  std::size_t files() const noexcept { return K_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  const PairIndex& operator[](std::size_t r) const { return pairs_.at(r); }
  std::span<const PairIndex> pairs() const noexcept { return pairs_; }

 private:
  std::size_t K_;
  std::vector<PairIndex> pairs_;
};

// ---------------------------------------------------------------------------
// Databases.

class Database {
 public:
  Database(u64 q, std::size_t K, std::size_t L, std::vector<u64> entries)
      : q_(q), K_(K), L_(L), entries_(std::move(entries)) {
    require_prime_modulus(q);
    if (K == 0 || L == 0) throw ValidationError("database needs K >= 1 and L >= 1");
    if (entries_.size() != K * L) throw ValidationError("database entry count does not match K*L");
    for (u64& e : entries_) {
      if (e >= q) throw ValidationError("database entry " + std::to_string(e) + " not reduced mod q");
    }
  }

  u64 modulus() const noexcept { return q_; }
  std::size_t files() const noexcept { return K_; }
  std::size_t length() const noexcept { return L_; }

  // Row k (0-based) is file W_{k+1}.
  std::span<const u64> file(std::size_t k) const {
    if (k >= K_) throw ValidationError("file index out of range");
    return std::span<const u64>(entries_).subspan(k * L_, L_);
  }
  FieldElement at(std::size_t k, std::size_t l) const { return FieldElement(file(k)[l], q_); }
  std::span<const u64> raw() const noexcept { return entries_; }

  Database with_column(std::span<const u64> column) const {
    if (column.size() != K_) throw ValidationError("appended column must have K entries");
    std::vector<u64> next;
    next.reserve(K_ * (L_ + 1));
    for (std::size_t k = 0; k < K_; ++k) {
      auto row = file(k);
      next.insert(next.end(), row.begin(), row.end());
      next.push_back(column[k] % q_);
    }
    return Database(q_, K_, L_ + 1, std::move(next));
  }

  friend bool operator==(const Database&, const Database&) = default;

 private:
  u64 q_;
  std::size_t K_;
  std::size_t L_;
  std::vector<u64> entries_;
};

inline Database random_database(u64 q, std::size_t K, std::size_t L, u64 seed) {
  require_prime_modulus(q);
  if (K == 0 || L == 0) throw ValidationError("database needs K >= 1 and L >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<u64> sym(0, q - 1);
  std::vector<u64> entries(K * L);
  for (u64& e : entries) e = sym(rng);
  return Database(q, K, L, std::move(entries));
}

/// X^(L): the inner products of all file pairs in canonical pair order.
struct InnerProductVector {
  u64 q = 2;
  std::size_t K = 0;
  std::vector<u64> values;

  FieldElement at(const PairIndex& p) const { return FieldElement(values.at(pair_rank(K, p)), q); }
  friend bool operator==(const InnerProductVector&, const InnerProductVector&) = default;
};

inline InnerProductVector compute_table(const Database& db) {
  InnerProductVector out{db.modulus(), db.files(), {}};
  out.values.reserve(pair_count(db.files()));
  for (std::size_t i = 0; i < db.files(); ++i)
    for (std::size_t j = i; j < db.files(); ++j)
      out.values.push_back(inner_product_mod(db.modulus(), db.file(i), db.file(j)));
  return out;
}

// ---------------------------------------------------------------------------
// CSV form: line 1 holds the values "q,K,L"; then K rows of L integers.

inline std::string to_csv(const Database& db) {
  std::ostringstream os;
  os << db.modulus() << ',' << db.files() << ',' << db.length() << '\n';
  for (std::size_t k = 0; k < db.files(); ++k) {
    auto row = db.file(k);
    for (std::size_t l = 0; l < row.size(); ++l) os << (l ? "," : "") << row[l];
    os << '\n';
  }
  return os.str();
}

namespace detail {

inline std::vector<u64> parse_csv_row(const std::string& line, std::size_t line_no) {
  std::vector<u64> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t pos = 0;
    try {
      if (cell.find('-') != std::string::npos) throw std::invalid_argument("negative");
      out.push_back(std::stoull(cell, &pos));
    } catch (const std::exception&) {
      throw ValidationError("database csv line " + std::to_string(line_no) + ": bad integer '" + cell + "'");
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
    if (pos != cell.size()) {
      throw ValidationError("database csv line " + std::to_string(line_no) + ": bad integer '" + cell + "'");
    }
  }
  return out;
}

}  // namespace detail

inline Database database_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("database csv is empty");
  auto header = detail::parse_csv_row(line, 1);
  if (header.size() != 3) throw ValidationError("database csv header must be q,K,L");
  const u64 q = header[0];
  const std::size_t K = header[1], L = header[2];
  std::vector<u64> entries;
  entries.reserve(K * L);
  std::size_t rows = 0;
  for (std::size_t line_no = 2; std::getline(is, line); ++line_no) {
    if (line.empty() || line == "\r") continue;
    auto row = detail::parse_csv_row(line, line_no);
    if (row.size() != L) throw ValidationError("database csv line " + std::to_string(line_no) + ": expected L values");
    entries.insert(entries.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows != K) throw ValidationError("database csv: expected " + std::to_string(K) + " rows");
  return Database(q, K, L, std::move(entries));
}

inline Database load_database(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open database file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return database_from_csv(buf.str());
}

}  // namespace pipret
