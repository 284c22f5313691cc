#pragma once

/**
 * @file gram_ml.hpp
 * @brief SVM, least-squares regression, and PCA driven only by a Gram matrix.
 *
 * Samples are the rows x_1..x_m of a data matrix; G[i][j] = <x_i, x_j>. A new
 * point enters every model through its inner products with the m samples.
 * FixedPointCodec bridges real data to F(q) so the Gram matrix can come out
 * of the retrieval simulator.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pipret/errors.hpp"
#include "pipret/field.hpp"

namespace pipret {

class GramMatrix {
 public:
  explicit GramMatrix(Eigen::MatrixXd g) : g_(std::move(g)) {
    if (g_.rows() != g_.cols() || g_.rows() == 0) throw ValidationError("Gram matrix must be square and nonempty");
    const double scale = std::max(1.0, g_.cwiseAbs().maxCoeff());
    if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError("Gram matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (lo < -1e-8 * std::max(hi, 1e-300) && lo < -1e-12)
      throw ValidationError("Gram matrix is not positive semidefinite");
  }

  static GramMatrix from_samples(const Eigen::MatrixXd& rows) { return GramMatrix(rows * rows.transpose()); }

  const Eigen::MatrixXd& matrix() const noexcept { return g_; }
  Eigen::Index size() const noexcept { return g_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return g_(i, j); }

 private:
  Eigen::MatrixXd g_;
};

// ---------------------------------------------------------------------------
// SVM dual.

struct SvmOptions {
  std::optional<double> box;  // soft-margin cap on alpha; hard margin when absent
  std::size_t max_updates = 100000;
  double tolerance = 1e-8;    // stop when the maximal KKT violation drops below this
};

struct DualSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  double objective = 0.0;
  std::size_t updates = 0;
  double max_violation = 0.0;
};

inline void require_binary_labels(const Eigen::VectorXd& y, Eigen::Index m) {
  if (y.size() != m) throw ValidationError("label count must equal the Gram size");
  for (Eigen::Index i = 0; i < m; ++i)
    if (y(i) != 1.0 && y(i) != -1.0) throw ValidationError("SVM labels must be -1 or +1");
}

inline double svm_dual_objective(const GramMatrix& G, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd ya = y.cwiseProduct(alpha);
  return alpha.sum() - 0.5 * ya.dot(G.matrix() * ya);
}

/// Sum_j alpha_j y_j <x_j, x> + b, given the point's inner products with the samples.
inline double svm_decision(const DualSolution& sol, const Eigen::VectorXd& y, const Eigen::VectorXd& inner) {
  return y.cwiseProduct(sol.alpha).dot(inner) + sol.bias;
}

/**
 * Maximizes sum alpha - 1/2 sum alpha_i alpha_j y_i y_j G_ij subject to
 * alpha >= 0 (and <= box) and sum alpha_i y_i = 0 by pairwise coordinate
 * ascent: each step picks the maximal-violating pair and solves the
 * two-variable problem on the constraint line in closed form.
 */
inline DualSolution svm_dual_train(const GramMatrix& G, const Eigen::VectorXd& y, const SvmOptions& opt = {}) {
  const Eigen::Index m = G.size();
  require_binary_labels(y, m);
  const double C = opt.box.value_or(std::numeric_limits<double>::infinity());
  if (!(C > 0.0)) throw ValidationError("box constraint must be positive");
  const bool bounded = std::isfinite(C);
  constexpr double kTau = 1e-12;

  auto Q = [&](Eigen::Index i, Eigen::Index j) { return y(i) * y(j) * G(i, j); };

  DualSolution sol;
  sol.alpha = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(m, -1.0);  // Q alpha - e
  Eigen::VectorXd& a = sol.alpha;

  auto in_up = [&](Eigen::Index t) { return y(t) > 0 ? a(t) < C : a(t) > 0; };
  auto in_low = [&](Eigen::Index t) { return y(t) > 0 ? a(t) > 0 : a(t) < C; };

  while (true) {
    Eigen::Index i = -1, j = -1;
    double up = -std::numeric_limits<double>::infinity(), low = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < m; ++t) {
      const double v = -y(t) * grad(t);
      if (in_up(t) && v > up) up = v, i = t;
      if (in_low(t) && v < low) low = v, j = t;
    }
    sol.max_violation = (i < 0 || j < 0) ? 0.0 : std::max(0.0, up - low);
    if (i < 0 || j < 0 || up - low < opt.tolerance) break;
    if (sol.updates >= opt.max_updates)
      throw NumericError("SVM solver did not converge within " + std::to_string(opt.max_updates) + " pair updates");
    ++sol.updates;

    const double old_i = a(i), old_j = a(j);
    if (y(i) != y(j)) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0) {
        if (a(j) < 0) a(j) = 0, a(i) = diff;
      } else if (a(i) < 0) {
        a(i) = 0, a(j) = -diff;
      }
      if (bounded) {
        if (diff > 0) {
          if (a(i) > C) a(i) = C, a(j) = C - diff;
        } else if (a(j) > C) {
          a(j) = C, a(i) = C + diff;
        }
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (bounded && sum > C) {
        if (a(i) > C) a(i) = C, a(j) = sum - C;
        if (a(j) > C) a(j) = C, a(i) = sum - C;
      } else {
        if (a(j) < 0) a(j) = 0, a(i) = sum;
        if (a(i) < 0) a(i) = 0, a(j) = sum;
      }
    }
    const double di = a(i) - old_i, dj = a(j) - old_j;
    for (Eigen::Index t = 0; t < m; ++t) grad(t) += Q(t, i) * di + Q(t, j) * dj;
  }

  constexpr double kSupport = 1e-8;
  double bias_sum = 0.0;
  std::size_t support = 0;
  const Eigen::VectorXd ya = y.cwiseProduct(a);
  for (Eigen::Index t = 0; t < m; ++t) {
    if (a(t) > kSupport && (!bounded || a(t) < C - kSupport)) {
      bias_sum += y(t) - ya.dot(G.matrix().col(t));
      ++support;
    }
  }
  if (support == 0) throw NumericError("SVM solution has no support vector (are both classes present?)");
  sol.bias = bias_sum / static_cast<double>(support);
  sol.objective = svm_dual_objective(G, y, a);
  return sol;
}

/// Largest hard-margin KKT residual: margin >= 1 off the support, == 1 on it.
inline double svm_kkt_residual(const GramMatrix& G, const Eigen::VectorXd& y, const DualSolution& sol) {
  double worst = std::abs(y.dot(sol.alpha));
  for (Eigen::Index i = 0; i < G.size(); ++i) {
    const double margin = y(i) * svm_decision(sol, y, G.matrix().col(i));
    if (sol.alpha(i) > 1e-8) worst = std::max(worst, std::abs(margin - 1.0));
    else worst = std::max(worst, std::max(0.0, 1.0 - margin));
    worst = std::max(worst, std::max(0.0, -sol.alpha(i)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Regression.

inline constexpr double kEigenCutoff = 1e-10;

/// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below cutoff * lambda_max count as zero.
inline Eigen::MatrixXd symmetric_pseudo_inverse(const Eigen::MatrixXd& A, std::size_t* rank = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  const auto& ev = es.eigenvalues();
  const double cut = kEigenCutoff * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut && ev(i) > 0) {
      inv(i) = 1.0 / ev(i);
      ++r;
    }
  }
  if (rank) *rank = r;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

struct RegressionModel {
  Eigen::VectorXd coefficients;  // a, with w = sum a_i x~_i
  bool augmented = true;         // samples carry an appended constant 1 (bias)
  std::size_t rank = 0;
};

/// a = G~^+ y, where G~ = G + 11^T when augmented. Minimum-norm least squares.
inline RegressionModel regression_fit(const GramMatrix& G, const Eigen::VectorXd& y, bool augmented = true) {
  if (y.size() != G.size()) throw ValidationError("target count must equal the Gram size");
  Eigen::MatrixXd g = G.matrix();
  if (augmented) g.array() += 1.0;
  RegressionModel model;
  model.augmented = augmented;
  model.coefficients = symmetric_pseudo_inverse(g, &model.rank) * y;
  return model;
}

/// f(x) = sum a_i <x~_i, x~> from the point's inner products with the samples.
inline double regression_predict(const RegressionModel& model, const Eigen::VectorXd& inner) {
  if (inner.size() != model.coefficients.size()) throw ValidationError("inner-product vector has wrong length");
  double f = model.coefficients.dot(inner);
  if (model.augmented) f += model.coefficients.sum();
  return f;
}

// ---------------------------------------------------------------------------
// PCA.

struct GramPca {
  Eigen::MatrixXd coefficients;  // column r is u_r (unit norm); direction r is X^T u_r / sqrt(lambda_r)
  Eigen::VectorXd eigenvalues;   // descending
  std::size_t rank = 0;
};

inline GramPca pca_gram(const GramMatrix& G, std::size_t d) {
  if (d == 0) throw ValidationError("PCA target dimension must be >= 1");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.matrix());
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  const Eigen::Index m = G.size();
  const double top = es.eigenvalues()(m - 1);
  GramPca out;
  for (Eigen::Index i = 0; i < m; ++i)
    if (es.eigenvalues()(i) > kEigenCutoff * top && es.eigenvalues()(i) > 0) ++out.rank;
  if (d > out.rank)
    throw ValidationError("PCA dimension " + std::to_string(d) + " exceeds numerical rank " + std::to_string(out.rank));
  const auto dd = static_cast<Eigen::Index>(d);
  out.coefficients.resize(m, dd);
  out.eigenvalues.resize(dd);
  for (Eigen::Index r = 0; r < dd; ++r) {
    out.eigenvalues(r) = es.eigenvalues()(m - 1 - r);
    out.coefficients.col(r) = es.eigenvectors().col(m - 1 - r);
  }
  return out;
}

/// Coordinates of a point along the principal directions, from its inner products with the samples.
inline Eigen::VectorXd pca_project(const GramPca& pca, const Eigen::VectorXd& inner) {
  if (inner.size() != pca.coefficients.rows()) throw ValidationError("inner-product vector has wrong length");
  Eigen::VectorXd out = pca.coefficients.transpose() * inner;
  for (Eigen::Index r = 0; r < out.size(); ++r) out(r) /= std::sqrt(pca.eigenvalues(r));
  return out;
}

// ---------------------------------------------------------------------------
// Fixed-point bridge to F(q).

struct FixedPointCodec {
  double scale = 1.0;
  u64 q = 2;
  double max_abs = 1.0;

  void validate() const {
    require_prime_modulus(q);
    if (!(scale > 0.0) || !(max_abs >= 0.0)) throw ValidationError("codec needs scale > 0 and max_abs >= 0");
  }

  /// m L (s max_abs)^2 < q/2, so every integer inner product is recoverable from its residue.
  void check_wraparound(std::size_t samples, std::size_t length) const {
    validate();
    const double per = scale * max_abs;
    const double bound = static_cast<double>(samples) * static_cast<double>(length) * per * per;
    if (!(bound < static_cast<double>(q) / 2.0))
      throw ValidationError("fixed-point wraparound guard violated: m*L*(s*max_abs)^2 = " + std::to_string(bound) +
                            " >= q/2");
  }
};

/// Scaled integer form of the data, exactly as it is encoded.
inline Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> quantize(const Eigen::MatrixXd& rows,
                                                                           const FixedPointCodec& codec) {
  codec.check_wraparound(static_cast<std::size_t>(rows.rows()), static_cast<std::size_t>(rows.cols()));
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index l = 0; l < rows.cols(); ++l) {
      if (!(std::abs(rows(i, l)) <= codec.max_abs))
        throw ValidationError("data value exceeds the codec max_abs bound");
      out(i, l) = std::llround(codec.scale * rows(i, l));
    }
  }
  return out;
}

/// Each sample becomes one file of length L over F(q).
inline Database encode_dataset(const Eigen::MatrixXd& rows, const FixedPointCodec& codec) {
  const auto ints = quantize(rows, codec);
  std::vector<u64> entries;
  entries.reserve(static_cast<std::size_t>(ints.size()));
  for (Eigen::Index i = 0; i < ints.rows(); ++i)
    for (Eigen::Index l = 0; l < ints.cols(); ++l) entries.push_back(FieldElement::from_signed(ints(i, l), codec.q).value());
  return Database(codec.q, static_cast<std::size_t>(rows.rows()), static_cast<std::size_t>(rows.cols()),
                  std::move(entries));
}

inline Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> decode_gram_integers(const InnerProductVector& table,
                                                                                       const FixedPointCodec& codec) {
  codec.validate();
  if (table.q != codec.q) throw ValidationError("table modulus does not match codec");
  const auto m = static_cast<Eigen::Index>(table.K);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> out(m, m);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const auto v = FieldElement(table.values.at(r++), codec.q).centered();
      out(i, j) = out(j, i) = v;
    }
  }
  return out;
}

inline Eigen::MatrixXd integer_gram_to_real(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& ints,
                                            double scale) {
  return ints.cast<double>() / (scale * scale);
}

inline GramMatrix decode_gram(const InnerProductVector& table, const FixedPointCodec& codec) {
  return GramMatrix(integer_gram_to_real(decode_gram_integers(table, codec), codec.scale));
}

// ---------------------------------------------------------------------------
// Dataset ingestion.

struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;  // one sample per row
  std::optional<Eigen::VectorXd> labels;
};

inline Dataset parse_dataset_csv(const std::string& text, const std::string& label_column) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("dataset csv is empty");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string c;
    while (std::getline(ss, c, ',')) {
      while (!c.empty() && std::isspace(static_cast<unsigned char>(c.back()))) c.pop_back();
      std::size_t b = 0;
      while (b < c.size() && std::isspace(static_cast<unsigned char>(c[b]))) ++b;
      cells.push_back(c.substr(b));
    }
    return cells;
  };
  const auto header = split(line);
  std::optional<std::size_t> label_at;
  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!label_column.empty() && header[c] == label_column) label_at = c;
    else ds.feature_names.push_back(header[c]);
  }
  if (!label_column.empty() && !label_at) throw ValidationError("label column '" + label_column + "' not in header");
  if (ds.feature_names.empty()) throw ValidationError("dataset has no feature columns");

  std::vector<std::vector<double>> feats;
  std::vector<double> labels;
  for (std::size_t line_no = 2; std::getline(is, line); ++line_no) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ValidationError("dataset line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " cells");
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      try {
        std::size_t pos = 0;
        v = std::stod(cells[c], &pos);
        if (pos != cells[c].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError("dataset line " + std::to_string(line_no) + ": non-numeric cell '" + cells[c] + "'");
      }
      if (label_at && c == *label_at) labels.push_back(v);
      else row.push_back(v);
    }
    feats.push_back(std::move(row));
  }
  if (feats.empty()) throw ValidationError("dataset has no rows");
  ds.features.resize(static_cast<Eigen::Index>(feats.size()), static_cast<Eigen::Index>(ds.feature_names.size()));
  for (std::size_t i = 0; i < feats.size(); ++i)
    for (std::size_t c = 0; c < feats[i].size(); ++c)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = feats[i][c];
  if (label_at) ds.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return ds;
}

inline Dataset load_dataset_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset_csv(buf.str(), label_column);
}

}  // namespace pipret
