#include "pipret/markov.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

namespace pipret {
namespace {

struct Case {
  u64 q;
  std::size_t K;
  double lambda2;
};

const std::vector<Case> kKnown = {
    {2, 2, 0.5}, {3, 2, 1.0 / std::sqrt(3.0)}, {5, 2, 1.0 / std::sqrt(5.0)}, {7, 2, 1.0 / std::sqrt(7.0)},
    {2, 1, 0.0}, {2, 3, 0.5},                   {3, 3, 1.0 / std::sqrt(3.0)},
};

// Direct character sum over every column: (1/q^K) sum_w exp(2 pi i <y, inc(w)> / q).
std::complex<double> character_oracle(u64 q, std::size_t K, std::span<const u64> y) {
  std::size_t columns = 1;
  for (std::size_t k = 0; k < K; ++k) columns *= q;
  std::complex<double> acc{};
  std::vector<u64> w(K);
  for (std::size_t idx = 0; idx < columns; ++idx) {
    std::size_t rest = idx;
    for (std::size_t k = 0; k < K; ++k) {
      w[k] = rest % q;
      rest /= q;
    }
    u64 phase = 0;
    std::size_t r = 0;
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = i; j < K; ++j, ++r) phase = (phase + y[r] * (w[i] * w[j] % q)) % q;
    acc += std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(q));
  }
  return acc / static_cast<double>(columns);
}

// Law of the inner-product table over all q^(K L) databases, by enumeration.
std::vector<double> brute_force_law(u64 q, std::size_t K, std::size_t L) {
  const std::size_t T = pair_count(K);
  GroupIndexer group(q, T);
  std::vector<double> law(group.size(), 0.0);
  std::size_t total = 1;
  for (std::size_t k = 0; k < K * L; ++k) total *= q;
  std::vector<u64> entries(K * L);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (auto& e : entries) {
      e = rest % q;
      rest /= q;
    }
    const auto table = compute_table(Database(q, K, L, entries));
    law[group.encode(table.values)] += 1.0;
  }
  for (double& p : law) p /= static_cast<double>(total);
  return law;
}

TEST(Delta, Examples) {
  auto d = delta_distribution(2, 2);
  GroupIndexer g(2, 3);
  EXPECT_DOUBLE_EQ(d.probs[g.encode(std::vector<u64>{0, 0, 0})], 0.25);
  EXPECT_DOUBLE_EQ(d.probs[g.encode(std::vector<u64>{1, 0, 0})], 0.25);
  EXPECT_DOUBLE_EQ(d.probs[g.encode(std::vector<u64>{0, 0, 1})], 0.25);
  EXPECT_DOUBLE_EQ(d.probs[g.encode(std::vector<u64>{1, 1, 1})], 0.25);
  EXPECT_EQ(d.support().size(), 4u);

  d = delta_distribution(3, 1);
  EXPECT_NEAR(d.probs[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.probs[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(d.probs[2], 0.0);
}

TEST(Delta, SumsToOneAndCountsColumns) {
  for (u64 q : {2, 3, 5, 7})
    for (std::size_t K : {1, 2, 3}) {
      if (!state_count(q, pair_count(K))) continue;
      const auto d = delta_distribution(q, K);
      u64 columns = 0;
      for (u64 c : d.counts) columns += c;
      EXPECT_EQ(columns, static_cast<u64>(std::pow(q, K)));
      double s = 0;
      for (double p : d.probs) s += p;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Delta, RejectsOversizedStateSpace) {
  EXPECT_THROW(delta_distribution(2, 6), ValidationError);  // 2^21 states
  EXPECT_THROW(delta_distribution(4, 2), ValidationError);
}

TEST(Transition, DoublyStochastic) {
  for (auto [q, K] : std::vector<std::pair<u64, std::size_t>>{{2, 2}, {3, 2}, {5, 2}, {2, 3}, {3, 3}}) {
    const auto d = delta_distribution(q, K);
    if (d.probs.size() > kMaxDenseStates) continue;
    const auto M = transition_dense(d);
    EXPECT_LT((M.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LT((M.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_GE(M.minCoeff(), 0.0);
  }
}

TEST(Spectrum, KnownSecondEigenvalues) {
  for (const auto& c : kKnown) {
    const auto s = spectrum_via_characters(delta_distribution(c.q, c.K));
    EXPECT_NEAR(s.lambda2, c.lambda2, 1e-8) << c.q << "," << c.K;
  }
}

TEST(Spectrum, CharactersMatchDirectCharacterSum) {
  for (const auto& c : kKnown) {
    const auto d = delta_distribution(c.q, c.K);
    const auto s = spectrum_via_characters(d);
    const auto g = d.indexer();
    ASSERT_EQ(s.eigenvalues.size(), g.size());
    for (std::size_t y = 0; y < g.size(); ++y) {
      const auto want = character_oracle(c.q, c.K, g.decode(y));
      // Either sign convention for the character is an eigenvalue of M; accept both.
      const double err = std::min(std::abs(s.eigenvalues[y] - want), std::abs(s.eigenvalues[y] - std::conj(want)));
      EXPECT_LT(err, 1e-10) << c.q << "," << c.K << " y=" << y;
    }
  }
}

TEST(Spectrum, CharactersMatchDenseEigenSolver) {
  for (const auto& c : kKnown) {
    const auto d = delta_distribution(c.q, c.K);
    if (d.probs.size() > kMaxDenseStates) continue;
    const auto fast = spectrum_via_characters(d);
    const auto dense = spectrum_dense_oracle(transition_dense(d));
    EXPECT_NEAR(fast.lambda2, dense.lambda2, 1e-8);
    std::vector<double> a, b;
    for (auto z : fast.eigenvalues) a.push_back(std::abs(z));
    for (auto z : dense.eigenvalues) b.push_back(std::abs(z));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8);
  }
}

TEST(Spectrum, TrivialCharacterIsOneAndOthersContract) {
  for (const auto& c : kKnown) {
    const auto s = spectrum_via_characters(delta_distribution(c.q, c.K));
    EXPECT_NEAR(std::abs(s.eigenvalues[0] - 1.0), 0.0, 1e-12);
    for (std::size_t y = 1; y < s.eigenvalues.size(); ++y) EXPECT_LT(std::abs(s.eigenvalues[y]), 1.0 - 1e-9);
  }
}

TEST(Irreducible, KnownCases) {
  for (const auto& c : kKnown) {
    const auto r = is_irreducible(c.q, c.K);
    EXPECT_TRUE(r.irreducible);
    EXPECT_EQ(r.rank, pair_count(c.K));
    ASSERT_TRUE(r.generated_size.has_value());
    EXPECT_EQ(*r.generated_size, *state_count(c.q, pair_count(c.K)));
    if (r.gamma_checked) {
      EXPECT_EQ(r.gamma, 5 * pair_count(c.K));
      EXPECT_TRUE(r.gamma_all_positive);
    }
  }
}

TEST(Irreducible, DeficientDeltaIsCaught) {
  // Keeping only the zero column leaves a chain stuck at the origin.
  const auto d = detail::enumerate_delta(3, 2, 1);
  const auto r = is_irreducible(d);
  EXPECT_FALSE(r.irreducible);
  EXPECT_LT(r.rank, 3u);
}

TEST(SumTwoSquares, Examples) {
  EXPECT_EQ(sum_two_squares(5, 3), (std::pair<u64, u64>{2, 2}));
  EXPECT_EQ(sum_two_squares(2, 1), (std::pair<u64, u64>{1, 0}));
  EXPECT_EQ(sum_two_squares(7, 0), (std::pair<u64, u64>{0, 0}));
}

TEST(SumTwoSquares, AllResiduesForSmallPrimes) {
  for (u64 q = 2; q < 100; ++q) {
    if (!is_prime(q)) continue;
    for (u64 a = 0; a < q; ++a) {
      const auto [s, t] = sum_two_squares(q, a);
      EXPECT_EQ((s * s + t * t) % q, a);
      EXPECT_LE(t, s);
    }
  }
}

TEST(Witness, Examples) {
  const auto w = reachability_witness(3, 2, 1, 2);
  EXPECT_FALSE(w.diagonal);
  EXPECT_EQ(accumulated_increment(3, w.columns), (std::vector<u64>{0, 2, 0}));
  const auto v = reachability_witness(5, 1, 0, 3);
  EXPECT_TRUE(v.diagonal);
  EXPECT_EQ(accumulated_increment(5, v.columns), (std::vector<u64>{3}));
  EXPECT_THROW(reachability_witness(5, 2, 0, 0), ValidationError);
  EXPECT_THROW(reachability_witness(5, 2, 3, 1), ValidationError);
}

TEST(Witness, EveryPairAndValueForSmallPrimes) {
  for (u64 q : {2, 3, 5, 7, 11, 13, 97})
    for (std::size_t K = 1; K <= 4; ++K)
      for (std::size_t r = 0; r < pair_count(K); ++r)
        for (u64 a = 1; a < q; ++a) {
          const auto w = reachability_witness(q, K, r, a);
          const auto acc = accumulated_increment(q, w.columns);
          for (std::size_t s = 0; s < acc.size(); ++s) EXPECT_EQ(acc[s], s == r ? a : 0u);
        }
}

TEST(Evolve, MatchesBruteForceEnumeration) {
  for (auto [q, K, L] : std::vector<std::tuple<u64, std::size_t, std::size_t>>{
           {2, 2, 1}, {2, 2, 2}, {2, 2, 3}, {3, 2, 1}, {3, 2, 2}, {2, 3, 2}, {5, 1, 3}}) {
    const auto tr = evolve(delta_distribution(q, K), L);
    const auto truth = brute_force_law(q, K, L);
    ASSERT_EQ(tr.distributions.back().size(), truth.size());
    for (std::size_t x = 0; x < truth.size(); ++x)
      EXPECT_NEAR(tr.distributions.back()[x], truth[x], 1e-12) << q << "," << K << "," << L << " x=" << x;
  }
}

TEST(Evolve, L2DistanceObeysParseval) {
  for (const auto& c : kKnown) {
    const auto d = delta_distribution(c.q, c.K);
    const auto s = spectrum_via_characters(d);
    const auto tr = evolve(d, 12, false);
    const double n = static_cast<double>(s.eigenvalues.size());
    for (const auto& pt : tr.points) {
      double acc = 0;
      for (std::size_t y = 1; y < s.eigenvalues.size(); ++y)
        acc += std::pow(std::abs(s.eigenvalues[y]), 2.0 * static_cast<double>(pt.L));
      EXPECT_NEAR(pt.l2_dist, std::sqrt(acc / n), 1e-12 + 1e-9 * pt.l2_dist);
    }
  }
}

TEST(Evolve, ContractionAndFittedRate) {
  for (const auto& c : kKnown) {
    if (c.lambda2 == 0.0) continue;
    const auto tr = evolve(delta_distribution(c.q, c.K), 30, false);
    for (std::size_t i = 1; i < tr.points.size(); ++i) {
      if (tr.points[i - 1].l2_dist < 1e-280) break;
      EXPECT_LE(tr.points[i].l2_dist / tr.points[i - 1].l2_dist, c.lambda2 + 1e-9);
    }
    EXPECT_NEAR(tr.fitted_rate / c.lambda2, 1.0, 0.05);
  }
}

TEST(Evolve, ZeroLambdaMixesInOneStep) {
  const auto tr = evolve(delta_distribution(2, 1), 3);
  for (const auto& pt : tr.points) EXPECT_NEAR(pt.sup_dist, 0.0, 1e-15);
}

TEST(Evolve, RejectsBadLength) {
  const auto d = delta_distribution(2, 2);
  EXPECT_THROW(evolve(d, 0), ValidationError);
  EXPECT_THROW(evolve(d, 1001), ValidationError);
}

TEST(Entropy, QuarterBitReproduced) {
  // At L = 1 with q = 2, K = 2 the off-diagonal product is 1 with probability 1/4.
  const auto tr = evolve(delta_distribution(2, 2), 1);
  const std::vector<std::size_t> off{1};
  const double h = subset_entropy(tr.distributions[0], 2, 3, off).bits;
  EXPECT_NEAR(h, -0.25 * std::log2(0.25) - 0.75 * std::log2(0.75), 1e-12);
  EXPECT_NEAR(h, 0.8113, 1e-4);
}

TEST(Entropy, ChainRuleAndMonotoneInSubset) {
  const auto tr = evolve(delta_distribution(3, 2), 4);
  for (const auto& p : tr.distributions) {
    const auto subsets = all_pair_subsets(3);
    std::map<std::vector<std::size_t>, double> h;
    for (const auto& s : subsets) h[s] = subset_entropy(p, 3, 3, s).bits;
    for (const auto& a : subsets)
      for (const auto& b : subsets)
        if (std::includes(b.begin(), b.end(), a.begin(), a.end())) {
          EXPECT_LE(h[a], h[b] + 1e-12);
          EXPECT_LE(h[b], static_cast<double>(b.size()) * std::log2(3.0) + 1e-12);
        }
    const std::vector<std::size_t> all{0, 1, 2}, s0{0}, s1{1}, s2{2};
    EXPECT_LE(h[all], h[s0] + h[s1] + h[s2] + 1e-12);
  }
}

TEST(Entropy, DeficitBoundedByFittedEnvelope) {
  for (const auto& c : kKnown) {
    if (c.lambda2 == 0.0 || c.q * c.q * c.q > 1000) continue;
    const auto tr = evolve(delta_distribution(c.q, c.K), 20);
    const auto def = entropy_deficits(tr);
    const double cst = fit_entropy_constant(tr, def, 5);
    for (std::size_t L = 1; L <= 20; ++L)
      EXPECT_LE(def[L - 1], cst * std::pow(c.lambda2, static_cast<double>(L - 1)) + 1e-12) << c.q << "," << c.K;
  }
}

TEST(Entropy, Errors) {
  const auto tr = evolve(delta_distribution(2, 2), 1);
  EXPECT_THROW(subset_entropy(tr.distributions[0], 2, 3, std::vector<std::size_t>{}), ValidationError);
  EXPECT_THROW(subset_entropy(tr.distributions[0], 2, 3, std::vector<std::size_t>{3}), ValidationError);
  EXPECT_THROW(subset_entropy(tr.distributions[0], 2, 3, std::vector<std::size_t>{1, 1}), ValidationError);
}

}  // namespace
}  // namespace pipret
