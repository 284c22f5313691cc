#pragma once

/**
 * @file markov.hpp
 * @brief The inner-product table as a random walk on F(q)^T.
 *
 * Appending one uniform column (w_1, ..., w_K) to every file adds the
 * increment Delta = (w_i w_j) in pair order to the table. The table therefore
 * performs a random walk on the abelian group F(q)^T whose step law is the
 * Delta distribution; its transition matrix is M[x][y] = Pr{Delta = x - y}.
 *
 * Because M is a convolution operator, the additive characters
 * chi(x) = exp(2 pi i <chi, x> / q) are a complete eigenbasis and the
 * eigenvalue for chi is the Fourier coefficient of the Delta law at chi. The
 * dense matrix is kept only as a cross-check for small state spaces.
 *
 * Group elements are indexed in base q with coordinate 0 (pair {1,1}) as the
 * most significant digit, so index 1 is the vector (0, ..., 0, 1).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pipret/errors.hpp"
#include "pipret/field.hpp"

namespace pipret {

inline constexpr std::size_t kMaxStates = std::size_t{1} << 20;
inline constexpr std::size_t kMaxDenseStates = std::size_t{1} << 12;
inline constexpr std::size_t kMaxGammaStates = std::size_t{1} << 9;
inline constexpr std::size_t kMaxTraceLength = 1000;

/// q^T, or nullopt if it exceeds `limit`.
inline std::optional<std::size_t> state_count(u64 q, std::size_t T, std::size_t limit = kMaxStates) {
  std::size_t n = 1;
  for (std::size_t c = 0; c < T; ++c) {
    if (n > limit / q) return std::nullopt;
    n *= static_cast<std::size_t>(q);
  }
  if (n > limit) return std::nullopt;
  return n;
}

/// Digits of F(q)^T elements and digitwise group operations on their indices.
class GroupIndexer {
 public:
  GroupIndexer(u64 q, std::size_t T, std::size_t limit = kMaxStates) : q_(q), T_(T) {
    auto n = state_count(q, T, limit);
    if (!n) {
      throw ValidationError("state space q^T for q=" + std::to_string(q) + ", T=" + std::to_string(T) +
                            " exceeds " + std::to_string(limit));
    }
    size_ = *n;
    weights_.assign(T, 1);
    for (std::size_t c = T; c-- > 1;) weights_[c - 1] = weights_[c] * static_cast<std::size_t>(q);
  }

  u64 modulus() const noexcept { return q_; }
  std::size_t dims() const noexcept { return T_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t weight(std::size_t coord) const { return weights_.at(coord); }

  std::size_t encode(std::span<const u64> digits) const {
    if (digits.size() != T_) throw ValidationError("group element has wrong dimension");
    std::size_t idx = 0;
    for (std::size_t c = 0; c < T_; ++c) idx += static_cast<std::size_t>(digits[c] % q_) * weights_[c];
    return idx;
  }

  std::vector<u64> decode(std::size_t idx) const {
    std::vector<u64> digits(T_);
    for (std::size_t c = 0; c < T_; ++c) {
      digits[c] = idx / weights_[c];
      idx %= weights_[c];
    }
    return digits;
  }

  u64 digit(std::size_t idx, std::size_t coord) const { return (idx / weights_.at(coord)) % q_; }

  std::size_t add(std::size_t a, std::size_t b) const {
    std::size_t out = 0;
    for (std::size_t c = 0; c < T_; ++c) out += ((digit(a, c) + digit(b, c)) % q_) * weights_[c];
    return out;
  }

  std::size_t sub(std::size_t a, std::size_t b) const {
    std::size_t out = 0;
    for (std::size_t c = 0; c < T_; ++c) out += ((digit(a, c) + q_ - digit(b, c)) % q_) * weights_[c];
    return out;
  }

 private:
  u64 q_;
  std::size_t T_;
  std::size_t size_ = 1;
  std::vector<std::size_t> weights_;
};

// ---------------------------------------------------------------------------
// Delta distribution.

struct DeltaDistribution {
  u64 q = 2;
  std::size_t K = 1;
  std::size_t T = 1;
  std::vector<u64> counts;    // columns w in F(q)^K producing each increment
  std::vector<double> probs;  // counts / q^K

  GroupIndexer indexer() const { return GroupIndexer(q, T); }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i] != 0) s.push_back(i);
    return s;
  }
};

/// The increment (w_i w_j) in pair order for one appended column w.
inline std::vector<u64> column_increment(u64 q, std::span<const u64> column) {
  std::vector<u64> out;
  out.reserve(pair_count(column.size()));
  for (std::size_t i = 0; i < column.size(); ++i)
    for (std::size_t j = i; j < column.size(); ++j) out.push_back(detail::mul_mod(column[i], column[j], q));
  return out;
}

namespace detail {

// Enumerates the first `columns` of the q^K fresh columns in lexicographic order.
// Normalization is always by q^K, so a truncated enumeration is visibly defective.
inline DeltaDistribution enumerate_delta(u64 q, std::size_t K, std::size_t columns) {
  require_prime_modulus(q);
  if (K == 0) throw ValidationError("file count K must be >= 1");
  DeltaDistribution d{q, K, pair_count(K), {}, {}};
  const GroupIndexer group(q, d.T);
  const std::size_t total = *state_count(q, K, group.size());
  d.counts.assign(group.size(), 0);
  std::vector<u64> w(K, 0);
  for (std::size_t n = 0; n < std::min(columns, total); ++n) {
    ++d.counts[group.encode(column_increment(q, w))];
    for (std::size_t c = K; c-- > 0;) {
      if (++w[c] < q) break;
      w[c] = 0;
    }
  }
  d.probs.resize(group.size());
  const double denom = static_cast<double>(total);
  for (std::size_t i = 0; i < group.size(); ++i) d.probs[i] = static_cast<double>(d.counts[i]) / denom;
  return d;
}

}  // namespace detail

inline DeltaDistribution delta_distribution(u64 q, std::size_t K) {
  return detail::enumerate_delta(q, K, static_cast<std::size_t>(-1));
}

// ---------------------------------------------------------------------------
// Transition operator and spectrum.

/// Dense M with M(x, y) = Pr{Delta = x - y}; column y is the law of the next state from y.
inline Eigen::MatrixXd transition_dense(const DeltaDistribution& d) {
  const GroupIndexer group(d.q, d.T, kMaxDenseStates);
  const auto n = static_cast<Eigen::Index>(group.size());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y)
      M(x, y) = d.probs[group.sub(static_cast<std::size_t>(x), static_cast<std::size_t>(y))];
  return M;
}

inline Eigen::MatrixXd transition_dense(u64 q, std::size_t K) {
  require_prime_modulus(q);
  if (K == 0 || !state_count(q, pair_count(K), kMaxDenseStates))
    throw ValidationError("dense transition matrix limited to q^T <= 4096");
  return transition_dense(delta_distribution(q, K));
}

struct Spectrum {
  // From the character method entry i is the eigenvalue of the character with
  // index i; from the dense oracle the order is the solver's.
  std::vector<std::complex<double>> eigenvalues;
  double lambda2 = 0.0;  // second-largest modulus
};

namespace detail {

inline double second_largest_modulus(std::span<const std::complex<double>> values) {
  if (values.size() < 2) return 0.0;
  std::vector<double> mods;
  mods.reserve(values.size());
  for (const auto& v : values) mods.push_back(std::abs(v));
  std::nth_element(mods.begin(), mods.begin() + 1, mods.end(), std::greater<>());
  return mods[1];
}

}  // namespace detail

/// lambda_chi = sum_delta Pr{delta} exp(2 pi i <chi, delta> / q), by a separable DFT over F(q)^T.
inline Spectrum spectrum_via_characters(const DeltaDistribution& d) {
  const GroupIndexer group(d.q, d.T);
  const std::size_t q = static_cast<std::size_t>(d.q);
  std::vector<std::complex<double>> roots(q);
  for (std::size_t k = 0; k < q; ++k)
    roots[k] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(q));

  std::vector<std::complex<double>> a(d.probs.begin(), d.probs.end());
  std::vector<std::complex<double>> line(q);
  for (std::size_t axis = 0; axis < d.T; ++axis) {
    const std::size_t stride = group.weight(axis);
    const std::size_t block = stride * q;
    for (std::size_t base = 0; base < group.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (std::size_t chi = 0; chi < q; ++chi) {
          std::complex<double> acc{};
          for (std::size_t x = 0; x < q; ++x) acc += a[base + off + x * stride] * roots[(chi * x) % q];
          line[chi] = acc;
        }
        for (std::size_t chi = 0; chi < q; ++chi) a[base + off + chi * stride] = line[chi];
      }
    }
  }

  Spectrum s;
  s.eigenvalues = std::move(a);
  double best = 0.0;
  for (std::size_t chi = 1; chi < s.eigenvalues.size(); ++chi) best = std::max(best, std::abs(s.eigenvalues[chi]));
  s.lambda2 = best;
  return s;
}

/// Eigenvalues of an explicit transition matrix; the cross-check for the character method.
inline Spectrum spectrum_dense_oracle(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || static_cast<std::size_t>(M.rows()) > kMaxDenseStates)
    throw ValidationError("dense spectrum needs a square matrix with at most 4096 rows");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericError("dense eigensolver did not converge");
  Spectrum s;
  const auto& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  s.lambda2 = detail::second_largest_modulus(s.eigenvalues);
  return s;
}

// ---------------------------------------------------------------------------
// Irreducibility.

struct IrreducibilityReport {
  bool irreducible = false;
  std::size_t support_size = 0;
  std::size_t rank = 0;                          // F(q)-rank of the support
  std::optional<std::size_t> generated_size;     // breadth-first closure size, when run
  bool gamma_checked = false;
  std::size_t gamma = 0;                         // 5 T
  bool gamma_all_positive = false;
};

/// Rank over F(q) of a set of vectors (Gaussian elimination).
inline std::size_t rank_mod(u64 q, std::vector<std::vector<u64>> rows) {
  if (rows.empty()) return 0;
  const std::size_t cols = rows.front().size();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][c] == 0) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[rank]);
    const u64 inv = FieldElement(rows[rank][c], q).inverse().value();
    for (u64& v : rows[rank]) v = detail::mul_mod(v, inv, q);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank || rows[r][c] == 0) continue;
      const u64 f = rows[r][c];
      for (std::size_t k = 0; k < cols; ++k)
        rows[r][k] = (rows[r][k] + q - detail::mul_mod(f, rows[rank][k], q)) % q;
    }
    ++rank;
  }
  return rank;
}

/// Size of the subgroup reachable from 0 by adding support elements.
inline std::size_t closure_size(const DeltaDistribution& d) {
  const GroupIndexer group(d.q, d.T);
  const auto support = d.support();
  std::vector<char> seen(group.size(), 0);
  std::vector<std::size_t> frontier{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t x : frontier) {
      for (std::size_t s : support) {
        const std::size_t y = group.add(x, s);
        if (!seen[y]) {
          seen[y] = 1;
          ++count;
          next.push_back(y);
        }
      }
    }
    frontier = std::move(next);
  }
  return count;
}

inline IrreducibilityReport is_irreducible(const DeltaDistribution& d) {
  const GroupIndexer group(d.q, d.T);
  const auto support = d.support();
  IrreducibilityReport rep;
  rep.support_size = support.size();

  std::vector<std::vector<u64>> rows;
  rows.reserve(support.size());
  for (std::size_t s : support) rows.push_back(group.decode(s));
  rep.rank = rank_mod(d.q, std::move(rows));
  rep.irreducible = rep.rank == d.T;

  // The closure is the definition; the rank is its fast equivalent. Run both when affordable.
  if (group.size() * std::max<std::size_t>(support.size(), 1) <= (std::size_t{1} << 26)) {
    rep.generated_size = closure_size(d);
    if ((*rep.generated_size == group.size()) != rep.irreducible)
      throw std::logic_error("closure and rank disagree on irreducibility");
  }

  if (group.size() <= kMaxGammaStates) {
    rep.gamma_checked = true;
    rep.gamma = 5 * d.T;
    const Eigen::MatrixXd M = transition_dense(d);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(M.rows(), M.cols());
    Eigen::MatrixXd base = M;
    for (std::size_t e = rep.gamma; e > 0; e >>= 1) {
      if (e & 1) power = power * base;
      if (e > 1) base = base * base;
    }
    rep.gamma_all_positive = (power.array() > 0.0).all();
  }
  return rep;
}

inline IrreducibilityReport is_irreducible(u64 q, std::size_t K) { return is_irreducible(delta_distribution(q, K)); }

/// (s, t) with s^2 + t^2 = a mod q and s >= t; first such pair in (s, t) lexicographic order.
inline std::pair<u64, u64> sum_two_squares(u64 q, u64 a) {
  require_prime_modulus(q);
  if (a >= q) throw ValidationError("sum_two_squares target must be reduced mod q");
  for (u64 s = 0; s < q; ++s) {
    const u64 s2 = detail::mul_mod(s, s, q);
    for (u64 t = 0; t <= s; ++t) {
      if ((s2 + detail::mul_mod(t, t, q)) % q == a) return {s, t};
    }
  }
  throw std::logic_error("no sum-of-two-squares representation of " + std::to_string(a) + " mod " +
                         std::to_string(q));
}

/// Five fresh columns whose accumulated increment is `value` at pair rank `target` and 0 elsewhere.
struct ReachabilityWitness {
  u64 q = 2;
  std::size_t K = 1;
  std::size_t target = 0;
  u64 value = 1;
  bool diagonal = true;
  std::array<std::vector<u64>, 5> columns;  // columns[step][file]
};

inline std::vector<u64> accumulated_increment(u64 q, std::span<const std::vector<u64>> columns) {
  if (columns.empty()) throw ValidationError("need at least one column");
  std::vector<u64> acc(pair_count(columns.front().size()), 0);
  for (const auto& col : columns) {
    const auto inc = column_increment(q, col);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = (acc[i] + inc[i]) % q;
  }
  return acc;
}

inline ReachabilityWitness reachability_witness(u64 q, std::size_t K, std::size_t target, u64 value) {
  require_prime_modulus(q);
  if (value == 0 || value >= q) throw ValidationError("witness value must be a nonzero reduced field element");
  const PairIndex pair = pair_unrank(K, target);
  const std::size_t i = pair.first() - 1;
  const std::size_t j = pair.second() - 1;

  ReachabilityWitness w{q, K, target, value, pair.diagonal(), {}};
  for (auto& col : w.columns) col.assign(K, 0);

  if (pair.diagonal()) {
    const auto [s, t] = sum_two_squares(q, value);
    w.columns[0][i] = t;
    w.columns[1][i] = s;
  } else {
    const u64 neg_sq = (q - detail::mul_mod(value, value, q)) % q;
    const auto [s1, t1] = sum_two_squares(q, neg_sq);
    const auto [s2, t2] = sum_two_squares(q, q - 1);
    w.columns[0][i] = value;
    w.columns[0][j] = 1;
    w.columns[1][i] = s1;
    w.columns[2][i] = t1;
    w.columns[3][j] = s2;
    w.columns[4][j] = t2;
  }

  auto acc = accumulated_increment(q, w.columns);
  for (std::size_t r = 0; r < acc.size(); ++r) {
    if (acc[r] != (r == target ? value : 0)) throw std::logic_error("reachability witness failed to verify");
  }
  return w;
}

// ---------------------------------------------------------------------------
// Convergence to uniform.

struct TracePoint {
  std::size_t L = 1;
  double sup_dist = 0.0;  // ||p^(L) - pi||_inf
  double l2_dist = 0.0;   // ||p^(L) - pi||_2
};

struct ConvergenceTrace {
  u64 q = 2;
  std::size_t K = 1;
  std::size_t T = 1;
  double lambda2 = 0.0;
  std::vector<TracePoint> points;
  std::vector<std::vector<double>> distributions;  // p^(L), when kept
  double fitted_rate = 0.0;      // exp of the log-l2 slope over the last half
  double fitted_constant = 0.0;  // c in sup_dist ~ c lambda2^(L-1)
};

/// p^(1..L_max) by repeated group convolution with Delta.
inline ConvergenceTrace evolve(const DeltaDistribution& d, std::size_t max_length, bool keep_distributions = true) {
  if (max_length == 0 || max_length > kMaxTraceLength)
    throw ValidationError("trace length must lie in [1, 1000]");
  const GroupIndexer group(d.q, d.T);
  const std::size_t n = group.size();
  const double uniform = 1.0 / static_cast<double>(n);

  ConvergenceTrace tr{d.q, d.K, d.T, spectrum_via_characters(d).lambda2, {}, {}, 0.0, 0.0};

  // The deviation p - pi is propagated instead of p (pi * Delta = pi), so the
  // distances keep full relative precision once they are far below 1/q^T.
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = d.probs[i] - uniform;
  const auto support = d.support();
  // Rounding leaves a residue on the constant mode, which never decays; strip it.
  auto center = [&] {
    double mean = 0.0;
    for (double e : dev) mean += e;
    mean /= static_cast<double>(n);
    for (double& e : dev) e -= mean;
  };
  center();

  for (std::size_t L = 1; L <= max_length; ++L) {
    if (L > 1) {
      std::vector<double> next(n, 0.0);
      for (std::size_t x = 0; x < n; ++x) {
        if (dev[x] == 0.0) continue;
        for (std::size_t s : support) next[group.add(x, s)] += dev[x] * d.probs[s];
      }
      dev = std::move(next);
      center();
    }
    TracePoint pt{L, 0.0, 0.0};
    double sq = 0.0;
    for (double e : dev) {
      pt.sup_dist = std::max(pt.sup_dist, std::abs(e));
      sq += e * e;
    }
    pt.l2_dist = std::sqrt(sq);
    tr.points.push_back(pt);
    if (keep_distributions) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = uniform + dev[i];
      tr.distributions.push_back(std::move(p));
    }
  }

  // Log-l2 slope by ordinary least squares over L in [ceil(L_max/2), L_max].
  const std::size_t first = (max_length + 1) / 2;
  std::vector<std::pair<double, double>> xy;
  bool hit_zero = false;
  for (std::size_t L = first; L <= max_length; ++L) {
    const double v = tr.points[L - 1].l2_dist;
    if (v <= 0.0) {
      hit_zero = true;
      break;
    }
    xy.emplace_back(static_cast<double>(L), std::log(v));
  }
  if (hit_zero) {
    tr.fitted_rate = 0.0;
  } else if (xy.size() >= 2) {
    double mx = 0, my = 0;
    for (auto [x, y] : xy) mx += x, my += y;
    mx /= static_cast<double>(xy.size());
    my /= static_cast<double>(xy.size());
    double sxy = 0, sxx = 0;
    for (auto [x, y] : xy) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
    tr.fitted_rate = std::exp(sxy / sxx);
  } else {
    tr.fitted_rate = tr.lambda2;
  }

  // Constant with the slope pinned at log lambda2: mean of log sup - (L-1) log lambda2.
  if (tr.lambda2 > 0.0) {
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t L = first; L <= max_length; ++L) {
      const double v = tr.points[L - 1].sup_dist;
      if (v <= 0.0) continue;
      acc += std::log(v) - static_cast<double>(L - 1) * std::log(tr.lambda2);
      ++used;
    }
    tr.fitted_constant = used ? std::exp(acc / static_cast<double>(used)) : tr.points.front().sup_dist;
  } else {
    tr.fitted_constant = tr.points.front().sup_dist;
  }
  return tr;
}

struct EntropyValue {
  double bits = 0.0;
  double logq_units = 0.0;
};

/// Shannon entropy of the marginal of p on the selected pair coordinates (pair ranks).
inline EntropyValue subset_entropy(std::span<const double> distribution, u64 q, std::size_t T,
                                   std::span<const std::size_t> coordinates) {
  if (coordinates.empty()) throw ValidationError("subset entropy needs a nonempty pair set");
  const GroupIndexer group(q, T);
  if (distribution.size() != group.size()) throw ValidationError("distribution size does not match q^T");
  std::vector<std::size_t> coords(coordinates.begin(), coordinates.end());
  std::sort(coords.begin(), coords.end());
  if (std::adjacent_find(coords.begin(), coords.end()) != coords.end() || coords.back() >= T)
    throw ValidationError("pair set has duplicate or out-of-range coordinates");

  const GroupIndexer marginal_group(q, coords.size());
  std::vector<double> marginal(marginal_group.size(), 0.0);
  for (std::size_t x = 0; x < group.size(); ++x) {
    std::size_t z = 0;
    for (std::size_t c = 0; c < coords.size(); ++c) z += group.digit(x, coords[c]) * marginal_group.weight(c);
    marginal[z] += distribution[x];
  }
  EntropyValue h;
  for (double p : marginal) {
    if (p < -1e-12) throw NumericError("negative probability in marginal");
    if (p > 1e-300) h.bits -= p * std::log2(p);
  }
  h.logq_units = h.bits / std::log2(static_cast<double>(q));
  return h;
}

/// Every nonempty subset of {0, ..., T-1}, as sorted rank lists, by bitmask order.
inline std::vector<std::vector<std::size_t>> all_pair_subsets(std::size_t T) {
  if (T == 0 || T > 20) throw ValidationError("subset enumeration limited to 1 <= T <= 20");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << T); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t c = 0; c < T; ++c)
      if (mask >> c & 1) s.push_back(c);
    out.push_back(std::move(s));
  }
  return out;
}

/// Largest entropy deficit (bits) over all pair subsets, per trace point.
inline std::vector<double> entropy_deficits(const ConvergenceTrace& tr) {
  if (tr.distributions.size() != tr.points.size()) throw ValidationError("trace was built without distributions");
  const auto subsets = all_pair_subsets(tr.T);
  const double logq = std::log2(static_cast<double>(tr.q));
  std::vector<double> out;
  for (const auto& p : tr.distributions) {
    double worst = 0.0;
    for (const auto& s : subsets) {
      const double h = subset_entropy(p, tr.q, tr.T, s).bits;
      worst = std::max(worst, static_cast<double>(s.size()) * logq - h);
    }
    out.push_back(worst);
  }
  return out;
}

/// Smallest c with deficit(L) <= c lambda2^(L-1) over L <= fit_window (the envelope fit).
inline double fit_entropy_constant(const ConvergenceTrace& tr, std::span<const double> deficits,
                                   std::size_t fit_window) {
  double c = 0.0;
  for (std::size_t L = 1; L <= std::min(fit_window, deficits.size()); ++L) {
    const double scale = std::pow(tr.lambda2, static_cast<double>(L - 1));
    if (scale > 0.0) c = std::max(c, deficits[L - 1] / scale);
    else if (deficits[L - 1] > 1e-12) throw NumericError("entropy deficit persists although lambda2 = 0");
  }
  return c;
}

}  // namespace pipret
