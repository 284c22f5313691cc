#include "pipret/retrieval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace pipret {
namespace {

std::vector<Database> instances(u64 q, std::size_t K, std::size_t L, std::size_t nu, u64 seed) {
  std::vector<Database> dbs;
  for (std::size_t u = 0; u < nu; ++u) dbs.push_back(random_database(q, K, L, split_seed(seed, u)));
  return dbs;
}

TEST(VirtualFiles, FromDatabasesHoldsInnerProducts) {
  const auto dbs = instances(5, 2, 3, 4, 1);
  const auto space = VirtualFileSpace::from_databases(dbs);
  EXPECT_EQ(space.files(), 3u);
  EXPECT_EQ(space.batch(), 4u);
  for (std::size_t u = 0; u < 4; ++u) {
    const auto a = dbs[u].file(0), b = dbs[u].file(1);
    u64 ab = 0, aa = 0, bb = 0;
    for (std::size_t l = 0; l < 3; ++l) {
      aa += a[l] * a[l];
      ab += a[l] * b[l];
      bb += b[l] * b[l];
    }
    EXPECT_EQ(space.symbol(0, u), aa % 5);
    EXPECT_EQ(space.symbol(1, u), ab % 5);
    EXPECT_EQ(space.symbol(2, u), bb % 5);
  }
}

TEST(PairSetTest, CanonicalAndValidated) {
  const PairSet s(3, {PairIndex(3, 2), PairIndex(1, 1)});
  EXPECT_EQ(s.ranks(), (std::vector<std::size_t>{0, 4}));
  EXPECT_THROW(PairSet(3, {}), ValidationError);
  EXPECT_THROW(PairSet(3, {PairIndex(1, 2), PairIndex(2, 1)}), ValidationError);
  EXPECT_THROW(PairSet(2, {PairIndex(1, 3)}), ValidationError);
}

TEST(RequestSets, CountsAndOrder) {
  EXPECT_EQ(request_sets(3, 1), (std::vector<std::vector<std::size_t>>{{0}, {1}, {2}}));
  EXPECT_EQ(request_sets(3, 2), (std::vector<std::vector<std::size_t>>{{0, 1}, {0, 2}, {1, 2}}));
  EXPECT_EQ(request_sets(6, 3).size(), 20u);
  EXPECT_THROW(request_sets(3, 4), ValidationError);
}

TEST(RepeatedPir, DownloadCountExamples) {
  EXPECT_EQ(RepeatedPirScheme::per_server_download(3, 2), 7u);
  EXPECT_EQ(RepeatedPirScheme::per_server_download(2, 3), 4u);
  EXPECT_EQ(RepeatedPirScheme::per_server_download(1, 5), 1u);
}

TEST(RepeatedPir, SingleRequestHitsSingleMessageCapacity) {
  for (std::size_t T = 1; T <= 8; ++T)
    for (std::size_t N = 2; N <= 5; ++N) {
      double nu = std::pow(static_cast<double>(N), static_cast<double>(T));
      if (nu > 1e6) continue;
      double capacity_inverse = 0;
      for (std::size_t i = 0; i < T; ++i) capacity_inverse += std::pow(static_cast<double>(N), -static_cast<double>(i));
      const double measured = static_cast<double>(N * RepeatedPirScheme::per_server_download(T, N)) / nu;
      EXPECT_NEAR(measured, capacity_inverse, 1e-12) << T << " " << N;
    }
}

TEST(Retrieval, AllSchemesDecodeCorrectly) {
  for (const char* name : {"full_download", "repeated_pir", "planted_leak"}) {
    const auto scheme = make_scheme(name);
    for (auto [K, N] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 2}, {2, 3}, {3, 2}}) {
      const std::size_t T = pair_count(K);
      const std::size_t nu = std::string(name) == "repeated_pir" ? static_cast<std::size_t>(std::pow(N, T)) : 3;
      const auto dbs = instances(7, K, 2, nu, 42);
      const auto space = VirtualFileSpace::from_databases(dbs);
      for (std::size_t P = 1; P <= T; ++P)
        for (const auto& req : request_sets(T, P)) {
          for (u64 seed = 0; seed < 5; ++seed) {
            const auto tr = run_retrieval(*scheme, space, req, N, seed);
            // Independent check against the tables themselves.
            for (std::size_t p = 0; p < req.size(); ++p)
              for (std::size_t u = 0; u < nu; ++u)
                EXPECT_EQ(tr.decoded[p][u], compute_table(dbs[u]).values[req[p]]);
          }
        }
    }
  }
}

TEST(Retrieval, AnswersAreFieldSumsOfNamedSymbols) {
  const auto space = VirtualFileSpace::random(11, 3, 8, 3);
  RepeatedPirScheme scheme;
  const std::vector<std::size_t> req{1};
  const auto tr = run_retrieval(scheme, space, req, 2, 9);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < tr.queries[n].sums.size(); ++i) {
      u64 acc = 0;
      for (const auto& s : tr.queries[n].sums[i]) acc += space.symbol(s.file, s.index);
      EXPECT_EQ(tr.answers[n][i], acc % 11);
    }
}

TEST(RepeatedPir, QueriesNeverRepeatASymbolAtOneServer) {
  const auto space = VirtualFileSpace::random(5, 4, 81, 0);
  RepeatedPirScheme scheme;
  for (std::size_t theta = 0; theta < 4; ++theta) {
    const std::vector<std::size_t> req{theta};
    const auto tr = run_retrieval(scheme, space, req, 3, theta);
    for (const auto& q : tr.queries) {
      std::set<SymbolRef> seen;
      for (const auto& sum : q.sums) {
        std::set<std::uint32_t> files;
        for (const auto& s : sum) {
          EXPECT_TRUE(seen.insert(s).second);
          EXPECT_TRUE(files.insert(s.file).second);
        }
      }
    }
  }
}

TEST(RepeatedPir, InverseRateMatchesFormula) {
  const auto space = VirtualFileSpace::random(3, 3, 8, 5);
  RepeatedPirScheme scheme;
  for (std::size_t P = 1; P <= 3; ++P) {
    const auto tr = run_retrieval(scheme, space, request_sets(3, P).front(), 2, 1);
    EXPECT_EQ(tr.downloaded, P * 2 * 7);
    EXPECT_DOUBLE_EQ(tr.inverse_rate(), 1.75);
  }
  const auto c = compare_rate(1.75, 3, 1, 2);
  EXPECT_DOUBLE_EQ(c.converse, 1.75);
  EXPECT_NEAR(*c.achievable, 1.75, 1e-9);
  EXPECT_NEAR(c.gap_to_converse, 0.0, 1e-12);
}

TEST(Retrieval, Rejections) {
  const auto space = VirtualFileSpace::random(3, 3, 8, 5);
  RepeatedPirScheme scheme;
  EXPECT_THROW(run_retrieval(scheme, space, std::vector<std::size_t>{}, 2, 0), ValidationError);
  EXPECT_THROW(run_retrieval(scheme, space, std::vector<std::size_t>{1, 1}, 2, 0), ValidationError);
  EXPECT_THROW(run_retrieval(scheme, space, std::vector<std::size_t>{3}, 2, 0), ValidationError);
  EXPECT_THROW(run_retrieval(scheme, space, std::vector<std::size_t>{0}, 3, 0), ValidationError);  // nu != 27
  EXPECT_THROW(run_retrieval(scheme, space, std::vector<std::size_t>{0}, 1, 0), ValidationError);
  EXPECT_THROW(make_scheme("nope"), ValidationError);
  EXPECT_THROW(measure_rate(std::span<const RetrievalTranscript>{}), ValidationError);
}

TEST(ChiSquare, IdenticalAndDisjointSamples) {
  std::map<std::uint64_t, std::size_t> a{{0, 500}, {1, 500}}, c{{0, 1000}};
  EXPECT_NEAR(detail::chi_square_homogeneity(a, a).p_value, 1.0, 1e-12);
  const auto far = detail::chi_square_homogeneity(a, c);
  EXPECT_EQ(far.dof, 1u);
  EXPECT_LT(far.p_value, 1e-100);
  // One category only: nothing to compare.
  EXPECT_EQ(detail::chi_square_homogeneity(c, c).dof, 0u);
}

TEST(ChiSquare, StatisticMatchesHandComputation) {
  // 2x2 table [[30,70],[50,50]]: expected [[40,60],[40,60]].
  std::map<std::uint64_t, std::size_t> a{{0, 30}, {1, 70}}, b{{0, 50}, {1, 50}};
  const auto r = detail::chi_square_homogeneity(a, b);
  const double want = 2 * (100.0 / 40 + 100.0 / 60);
  EXPECT_NEAR(r.statistic, want, 1e-12);
  EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(want / 2)), 1e-12);
}

TEST(Audit, FullDownloadExactIsPrivate) {
  FullDownloadScheme scheme;
  for (std::size_t P : {1, 2}) {
    const auto rep = audit_privacy(scheme, {3, 3, 2, P, 4}, AuditMode::exact, 0, 7);
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(rep.max_tv_distance, 0.0);
    EXPECT_TRUE(rep.download_counts_symmetric);
  }
}

TEST(Audit, PlantedLeakFailsBothModes) {
  PlantedLeakScheme scheme;
  const auto exact = audit_privacy(scheme, {3, 3, 2, 1, 4}, AuditMode::exact, 0, 7);
  EXPECT_FALSE(exact.passed);
  EXPECT_EQ(exact.max_tv_distance, 1.0);
  const auto sampled = audit_privacy(scheme, {3, 3, 2, 1, 4}, AuditMode::sampled, kMinAuditSamples, 7);
  EXPECT_FALSE(sampled.passed);
  EXPECT_LT(sampled.min_p_value, kAuditSignificance);
}

TEST(Audit, RepeatedPirSampledIsPrivate) {
  RepeatedPirScheme scheme;
  for (std::size_t P : {1, 2}) {
    const auto rep = audit_privacy(scheme, {3, 3, 2, P, 8}, AuditMode::sampled, kMinAuditSamples, 11);
    EXPECT_TRUE(rep.passed) << "P=" << P << " min p " << rep.min_p_value;
    EXPECT_TRUE(rep.download_counts_symmetric);
  }
}

TEST(Audit, SampledAuditIsReproducible) {
  RepeatedPirScheme scheme;
  const auto a = audit_privacy(scheme, {3, 3, 2, 1, 8}, AuditMode::sampled, kMinAuditSamples, 3);
  const auto b = audit_privacy(scheme, {3, 3, 2, 1, 8}, AuditMode::sampled, kMinAuditSamples, 3);
  ASSERT_EQ(a.tests.size(), b.tests.size());
  for (std::size_t i = 0; i < a.tests.size(); ++i) EXPECT_EQ(a.tests[i].statistic, b.tests[i].statistic);
}

TEST(Audit, Rejections) {
  RepeatedPirScheme scheme;
  EXPECT_THROW(audit_privacy(scheme, {3, 3, 2, 1, 8}, AuditMode::exact, 0, 0), ValidationError);
  EXPECT_THROW(audit_privacy(scheme, {3, 3, 2, 1, 8}, AuditMode::sampled, 10, 0), ValidationError);
}

}  // namespace
}  // namespace pipret
