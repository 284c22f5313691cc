#pragma once

/**
 * @file capacity.hpp
 * @brief Inverse-rate bounds for multi-message PIR and their inner-product form.
 *
 * Inverse rate = downloaded symbols per requested symbol. Two formulas bracket
 * the MPIR capacity of K messages, P requested, N replicated servers:
 *
 *   converse side     1 + (K-P)/(PN)                          if K/P <= 2
 *                     sum_{i<floor(K/P)} N^-i
 *                       + (K/P - floor(K/P)) N^-floor(K/P)    otherwise
 *
 *   achievable side   1 + (K-P)/(PN)                          if K/P < 2
 *                     1 / F, where F is the beta/r fraction   otherwise
 *
 * F evaluates to a rate (for K=2, P=1, N=2 it is 2/3), so its reciprocal is
 * returned. For retrieving P of the K(K+1)/2 pairwise inner products of K
 * files, the same formulas apply with K_msg = K(K+1)/2; the converse side is
 * lowered by c * lambda2^(L-1) for finite file length L.
 */

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pipret/errors.hpp"
#include "pipret/field.hpp"

namespace pipret {

struct BoundQuery {
  std::size_t messages = 1;  // K_msg
  std::size_t requested = 1; // P
  std::size_t servers = 1;   // N

  void validate() const {
    if (messages == 0 || requested == 0 || servers == 0)
      throw ValidationError("bound query needs K_msg, P, N >= 1");
    if (requested > messages)
      throw ValidationError("requested count P=" + std::to_string(requested) + " exceeds K_msg=" +
                            std::to_string(messages));
  }
};

struct RootCoefficients {
  std::vector<std::complex<double>> roots;  // r_1..r_P
  std::vector<std::complex<double>> betas;  // beta_1..beta_P
  double max_residual = 0.0;
};

inline constexpr std::size_t kMaxRequestedForRoots = 64;
inline constexpr double kRootResidualTolerance = 1e-9;

inline double inverse_rate_converse(const BoundQuery& bq) {
  bq.validate();
  const double K = static_cast<double>(bq.messages);
  const double P = static_cast<double>(bq.requested);
  const double N = static_cast<double>(bq.servers);
  if (bq.messages <= 2 * bq.requested) return 1.0 + (K - P) / (P * N);
  const std::size_t whole = bq.messages / bq.requested;
  double sum = 0.0;
  for (std::size_t i = 0; i < whole; ++i) sum += std::pow(N, -static_cast<double>(i));
  const double frac = K / P - static_cast<double>(whole);
  return sum + frac * std::pow(N, -static_cast<double>(whole));
}

namespace detail {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<std::complex<double>> solve_complex(std::vector<std::vector<std::complex<double>>> A,
                                                       std::vector<std::complex<double>> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
    if (std::abs(A[pivot][col]) < 1e-300) throw NumericError("singular root-coefficient system");
    std::swap(A[pivot], A[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const auto f = A[r][col] / A[col][col];
      if (f == std::complex<double>{}) continue;
      for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<std::complex<double>> x(n);
  for (std::size_t i = n; i-- > 0;) {
    auto acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= A[i][c] * x[c];
    x[i] = acc / A[i][i];
  }
  return x;
}

}  // namespace detail

inline RootCoefficients solve_root_coefficients(const BoundQuery& bq) {
  bq.validate();
  if (bq.servers < 2) throw ValidationError("root coefficients need N >= 2 (N^(1/P) = 1 is degenerate)");
  const std::size_t P = bq.requested;
  if (P > kMaxRequestedForRoots) throw ValidationError("root coefficients capped at P <= 64");

  RootCoefficients rc;
  const double n_root = std::pow(static_cast<double>(bq.servers), 1.0 / static_cast<double>(P));
  for (std::size_t i = 0; i < P; ++i) {
    const auto unit = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(P));
    rc.roots.push_back(unit / (n_root - unit));
  }

  // Row k-1 holds r_i^{-k}, k = 1..P. Only the k = P row has a nonzero right side.
  std::vector<std::vector<std::complex<double>>> A(P, std::vector<std::complex<double>>(P));
  for (std::size_t k = 1; k <= P; ++k)
    for (std::size_t i = 0; i < P; ++i) A[k - 1][i] = std::pow(rc.roots[i], -static_cast<int>(k));
  std::vector<std::complex<double>> rhs(P);
  rhs[P - 1] = std::pow(static_cast<double>(bq.servers - 1), static_cast<double>(bq.messages - P));

  rc.betas = detail::solve_complex(A, rhs);

  const double scale = std::max(1.0, std::abs(rhs[P - 1]));
  for (std::size_t k = 0; k < P; ++k) {
    std::complex<double> acc{};
    for (std::size_t i = 0; i < P; ++i) acc += A[k][i] * rc.betas[i];
    rc.max_residual = std::max(rc.max_residual, std::abs(acc - rhs[k]) / scale);
  }
  if (!(rc.max_residual < kRootResidualTolerance))
  {
    char buf[160];
    std::snprintf(buf, sizeof buf, "root-coefficient residual %.3e exceeds 1e-9 (K_msg=%zu, P=%zu, N=%zu)",
                  rc.max_residual, bq.messages, bq.requested, bq.servers);
    throw NumericError(buf);
  }
  return rc;
}

/// The beta/r fraction exactly as it is usually displayed. Its real part is a rate.
inline std::complex<double> mpir_beta_fraction(const BoundQuery& bq) {
  const auto rc = solve_root_coefficients(bq);
  const int K = static_cast<int>(bq.messages);
  const int P = static_cast<int>(bq.requested);
  std::complex<double> num{}, den{};
  for (std::size_t i = 0; i < rc.roots.size(); ++i) {
    const auto r = rc.roots[i];
    const auto lift = 1.0 + 1.0 / r;
    const auto w = rc.betas[i] * std::pow(r, K - P);
    num += w * (std::pow(lift, K) - std::pow(lift, K - P));
    den += w * (std::pow(lift, K) - 1.0);
  }
  return num / den;
}

inline double inverse_rate_achievable(const BoundQuery& bq) {
  bq.validate();
  if (bq.messages < 2 * bq.requested) {
    const double K = static_cast<double>(bq.messages);
    const double P = static_cast<double>(bq.requested);
    return 1.0 + (K - P) / (P * static_cast<double>(bq.servers));
  }
  if (bq.servers == 1) return static_cast<double>(bq.messages) / static_cast<double>(bq.requested);
  const auto rate = mpir_beta_fraction(bq);
  if (std::abs(rate.imag()) >= 1e-9 * std::max(1.0, std::abs(rate.real())))
    throw NumericError("beta/r fraction has imaginary residue " + std::to_string(rate.imag()));
  return 1.0 / rate.real();
}

struct CapacityBounds {
  double inv_rate_converse = 0.0;     // lower end of the bracket on 1/C
  double inv_rate_achievable = 0.0;   // upper end
  std::optional<double> lambda2;
  std::optional<double> correction;   // c * lambda2^(L-1), absent for L -> infinity
};

/// Bracket on 1/C for P of the K(K+1)/2 inner products. length = nullopt means L -> infinity.
inline CapacityBounds theorem1_bounds(std::size_t files, std::size_t requested, std::size_t servers,
                                      std::optional<std::size_t> length, double lambda2, double c) {
  if (files == 0) throw ValidationError("file count K must be >= 1");
  const BoundQuery bq{pair_count(files), requested, servers};
  bq.validate();
  if (!(lambda2 >= 0.0 && lambda2 < 1.0)) throw ValidationError("lambda2 must lie in [0, 1)");
  if (!(c >= 0.0)) throw ValidationError("correction constant c must be >= 0");

  CapacityBounds out;
  out.inv_rate_converse = inverse_rate_converse(bq);
  out.inv_rate_achievable = inverse_rate_achievable(bq);
  out.lambda2 = lambda2;
  if (length) {
    if (*length == 0) throw ValidationError("file length L must be >= 1");
    const double corr = c * std::pow(lambda2, static_cast<double>(*length - 1));
    out.correction = corr;
    out.inv_rate_converse -= corr;
  }
  return out;
}

/// lim_{L->inf} 1/C when the bracket collapses (ratio <= 2 or integral), else nullopt.
inline std::optional<double> corollary_limits(std::size_t files, std::size_t requested, std::size_t servers) {
  if (files == 0 || requested == 0 || servers == 0) return std::nullopt;
  const std::size_t twice_msgs = files * (files + 1);  // K(K+1) = 2 * K_msg
  const double N = static_cast<double>(servers);
  const double P = static_cast<double>(requested);
  if (twice_msgs <= 4 * requested) {
    if (requested > twice_msgs / 2) return std::nullopt;
    return 1.0 + static_cast<double>(twice_msgs - 2 * requested) / (2.0 * P * N);
  }
  if (twice_msgs % (2 * requested) == 0) {
    const std::size_t ratio = twice_msgs / (2 * requested);
    double sum = 0.0;
    for (std::size_t i = 0; i < ratio; ++i) sum += std::pow(N, -static_cast<double>(i));
    return sum;
  }
  return std::nullopt;
}

}  // namespace pipret
