#include "pipret/gram_ml.hpp"

#include <gtest/gtest.h>

#include <random>

namespace pipret {
namespace {

Eigen::MatrixXd separable_points(std::size_t per_class, std::uint64_t seed, Eigen::VectorXd& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Eigen::MatrixXd X(2 * per_class, 2);
  y.resize(2 * per_class);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const double c = i < per_class ? 1.5 : -1.5;
    X(i, 0) = c + noise(rng);
    X(i, 1) = c + noise(rng);
    y(i) = i < per_class ? 1.0 : -1.0;
  }
  return X;
}

TEST(GramMatrixTest, Validation) {
  Eigen::MatrixXd ns(2, 2);
  ns << 1, 2, 0, 1;
  EXPECT_THROW(GramMatrix{ns}, ValidationError);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 2, 2, 1;
  EXPECT_THROW(GramMatrix{indef}, ValidationError);
  EXPECT_THROW(GramMatrix{Eigen::MatrixXd(2, 3)}, ValidationError);
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 0, 1, 1, 1;
  EXPECT_NO_THROW(GramMatrix::from_samples(X));
}

TEST(Svm, TwoPointExample) {
  // x1 = (1,0) label +1, x2 = (-1,0) label -1: alpha = 1/2 each, w = (1,0), b = 0.
  Eigen::MatrixXd X(2, 2);
  X << 1, 0, -1, 0;
  Eigen::VectorXd y(2);
  y << 1, -1;
  const auto G = GramMatrix::from_samples(X);
  const auto sol = svm_dual_train(G, y);
  EXPECT_NEAR(sol.alpha(0), 0.5, 1e-9);
  EXPECT_NEAR(sol.alpha(1), 0.5, 1e-9);
  EXPECT_NEAR(sol.bias, 0.0, 1e-9);
  EXPECT_NEAR(sol.objective, 0.5, 1e-9);
  Eigen::VectorXd inner(2);
  inner << 3, -3;  // point (3, 0)
  EXPECT_NEAR(svm_decision(sol, y, inner), 3.0, 1e-9);
}

TEST(Svm, MatchesGridOracleForThreePoints) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd X(3, 2);
    X << 1 + u(rng), 1 + u(rng), 2 + u(rng), 0.5 + u(rng), -1 + u(rng), -1 + u(rng);
    Eigen::VectorXd y(3);
    y << 1, 1, -1;
    const auto G = GramMatrix::from_samples(X);
    const auto sol = svm_dual_train(G, y, {.box = 5.0});
    // alpha_3 = alpha_1 + alpha_2; grid over (alpha_1, alpha_2) in [0, 5]^2 with alpha_3 <= 5.
    double best = -1e300;
    const int steps = 500;
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; b <= steps; ++b) {
        Eigen::VectorXd al(3);
        al << 5.0 * a / steps, 5.0 * b / steps, 0;
        al(2) = al(0) + al(1);
        if (al(2) > 5.0) continue;
        best = std::max(best, svm_dual_objective(G, y, al));
      }
    EXPECT_GE(sol.objective, best - 1e-9);
    EXPECT_LE(sol.objective - best, 0.05 * std::max(1.0, std::abs(best)));
    EXPECT_NEAR(y.dot(sol.alpha), 0.0, 1e-9);
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_GE(sol.alpha(i), -1e-12);
      EXPECT_LE(sol.alpha(i), 5.0 + 1e-12);
    }
  }
}

TEST(Svm, HardMarginKktOnSeparableData) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Eigen::VectorXd y;
    const auto X = separable_points(20, seed, y);
    const auto G = GramMatrix::from_samples(X);
    const auto sol = svm_dual_train(G, y);
    EXPECT_LT(svm_kkt_residual(G, y, sol), 1e-6);
    for (Eigen::Index i = 0; i < X.rows(); ++i) EXPECT_GT(y(i) * svm_decision(sol, y, G.matrix().col(i)), 0.0);
  }
}

TEST(Svm, Errors) {
  Eigen::MatrixXd X(2, 1);
  X << 1, -1;
  const auto G = GramMatrix::from_samples(X);
  Eigen::VectorXd bad(2);
  bad << 1, 0;
  EXPECT_THROW(svm_dual_train(G, bad), ValidationError);
  Eigen::VectorXd same(2);
  same << 1, 1;
  EXPECT_THROW(svm_dual_train(G, same), NumericError);
  Eigen::VectorXd ok(2);
  ok << 1, -1;
  EXPECT_THROW(svm_dual_train(G, ok, {.box = 0.0}), ValidationError);
}

TEST(Regression, MatchesRawLeastSquares) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index m = 12, L = 3 + trial % 3;
    Eigen::MatrixXd X(m, L);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index l = 0; l < L; ++l) X(i, l) = n(rng);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) y(i) = 2.0 * X(i, 0) - X(i, 1) + 0.5 + 0.1 * n(rng);

    Eigen::MatrixXd Xa(m, L + 1);
    Xa << X, Eigen::VectorXd::Ones(m);
    const Eigen::VectorXd wb = Xa.completeOrthogonalDecomposition().solve(y);

    const auto model = regression_fit(GramMatrix::from_samples(X), y);
    EXPECT_EQ(model.rank, static_cast<std::size_t>(L + 1));
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd x(L);
      for (Eigen::Index l = 0; l < L; ++l) x(l) = n(rng);
      const double want = wb.head(L).dot(x) + wb(L);
      EXPECT_NEAR(regression_predict(model, X * x), want, 1e-8);
    }
  }
}

TEST(Regression, RankDeficientUsesMinimumNorm) {
  Eigen::MatrixXd X(4, 3);
  X << 1, 2, 3, 2, 4, 6, 1, 2, 3, 3, 6, 9;  // rank one
  Eigen::VectorXd y(4);
  y << 1, 2, 1, 3;
  const auto model = regression_fit(GramMatrix::from_samples(X), y, false);
  EXPECT_EQ(model.rank, 1u);
  const Eigen::VectorXd w = X.completeOrthogonalDecomposition().solve(y);
  Eigen::VectorXd x(3);
  x << 0.3, -1, 2;
  EXPECT_NEAR(regression_predict(model, X * x), w.dot(x), 1e-9);
  EXPECT_THROW(regression_fit(GramMatrix::from_samples(X), Eigen::VectorXd(3)), ValidationError);
}

TEST(Pca, MatchesSvdOfRawData) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd X(15, 4);
  for (Eigen::Index i = 0; i < 15; ++i)
    for (Eigen::Index l = 0; l < 4; ++l) X(i, l) = n(rng) * (4.0 - static_cast<double>(l));
  const auto pca = pca_gram(GramMatrix::from_samples(X), 2);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
  for (Eigen::Index r = 0; r < 2; ++r) EXPECT_NEAR(pca.eigenvalues(r), svd.singularValues()(r) * svd.singularValues()(r), 1e-8);
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd x(4);
    for (Eigen::Index l = 0; l < 4; ++l) x(l) = n(rng);
    const auto proj = pca_project(pca, X * x);
    for (Eigen::Index r = 0; r < 2; ++r) EXPECT_NEAR(std::abs(proj(r)), std::abs(svd.matrixV().col(r).dot(x)), 1e-8);
  }
}

TEST(Pca, Errors) {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  const auto G = GramMatrix::from_samples(X);
  EXPECT_THROW(pca_gram(G, 0), ValidationError);
  EXPECT_THROW(pca_gram(G, 2), ValidationError);
  EXPECT_THROW(pca_project(pca_gram(G, 1), Eigen::VectorXd(2)), ValidationError);
}

TEST(Codec, RoundTripIsExactIntegerGram) {
  const u64 q = 1000000007;
  const FixedPointCodec codec{100.0, q, 2.0};
  Eigen::MatrixXd X(3, 2);
  X << 0.5, -1.25, 1.999, 0.0, -2.0, 0.37;
  const auto ints = quantize(X, codec);
  const auto table = compute_table(encode_dataset(X, codec));
  const auto decoded = decode_gram_integers(table, codec);
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> want = ints * ints.transpose();
  EXPECT_EQ(decoded, want);
  const auto G = decode_gram(table, codec);
  EXPECT_LT((G.matrix() - want.cast<double>() / 1e4).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Codec, WraparoundGuard) {
  const FixedPointCodec codec{100.0, 101, 1.0};
  Eigen::MatrixXd X(1, 1);
  X << 0.5;
  EXPECT_THROW(encode_dataset(X, codec), ValidationError);
  const FixedPointCodec bounds{1.0, 1000003, 1.0};
  Eigen::MatrixXd big(1, 1);
  big << 1.5;
  EXPECT_THROW(encode_dataset(big, bounds), ValidationError);
  EXPECT_THROW((FixedPointCodec{0.0, 5, 1.0}.validate()), ValidationError);
  EXPECT_THROW((FixedPointCodec{1.0, 6, 1.0}.validate()), ValidationError);
}

TEST(DatasetCsv, ParsesLabelsAndRejectsBadInput) {
  const auto ds = parse_dataset_csv("a, y ,b\n1,1,2\n3,-1,4\n", "y");
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
  ASSERT_TRUE(ds.labels.has_value());
  EXPECT_EQ((*ds.labels)(1), -1.0);
  EXPECT_EQ(ds.features(1, 1), 4.0);
  EXPECT_FALSE(parse_dataset_csv("a,b\n1,2\n", "").labels.has_value());
  EXPECT_THROW(parse_dataset_csv("", ""), ValidationError);
  EXPECT_THROW(parse_dataset_csv("a,b\n1\n", ""), ValidationError);
  EXPECT_THROW(parse_dataset_csv("a,b\n1,x\n", ""), ValidationError);
  EXPECT_THROW(parse_dataset_csv("a,b\n1,2\n", "z"), ValidationError);
  EXPECT_THROW(parse_dataset_csv("a,b\n", ""), ValidationError);
  EXPECT_THROW(load_dataset_csv("/nonexistent.csv", ""), IoError);
}

}  // namespace
}  // namespace pipret
