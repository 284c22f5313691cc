#pragma once

/**
 * @file cli.hpp
 * @brief Run configurations, command dispatch, and report emission for the pipret tool.
 *
 * A config file is JSON of the form {"command": ..., "params": {...}} with
 * optional "output" and "format". Every command-line flag maps to the params
 * key of the same name. Reports carry no timings, so identical configs give
 * identical bytes.
 */

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pipret/acceptance.hpp"
#include "pipret/capacity.hpp"
#include "pipret/errors.hpp"
#include "pipret/gram_ml.hpp"
#include "pipret/markov.hpp"
#include "pipret/parallel.hpp"
#include "pipret/pipeline.hpp"
#include "pipret/retrieval.hpp"

#ifndef PIPRET_VERSION
#define PIPRET_VERSION "0.1.0"
#endif

namespace pipret::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = PIPRET_VERSION;
inline constexpr u64 kDefaultMasterSeed = 20240917;

enum ExitCode : int { kOk = 0, kValidation = 2, kAcceptance = 3, kIo = 4 };

struct RunConfig {
  std::string command;
  json params = json::object();
  std::string output;  // empty writes to stdout
  std::string format;  // json | csv; empty picks the command default
};

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"command", c.command}, {"params", c.params}};
  if (!c.output.empty()) j["output"] = c.output;
  if (!c.format.empty()) j["format"] = c.format;
}

inline void from_json(const json& j, RunConfig& c) {
  if (!j.is_object() || !j.contains("command") || !j["command"].is_string())
    throw ValidationError("config needs a string \"command\"");
  for (const auto& [key, value] : j.items())
    if (key != "command" && key != "params" && key != "output" && key != "format")
      throw ValidationError("unknown top-level config key '" + key + "'");
  c.command = j["command"].get<std::string>();
  c.params = j.value("params", json::object());
  if (!c.params.is_object()) throw ValidationError("config \"params\" must be an object");
  c.output = j.value("output", std::string{});
  c.format = j.value("format", std::string{});
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
  }
  return j.get<RunConfig>();
}

/// Writes via a sibling temp file and rename, so readers never see a partial report.
inline void write_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move report into place at " + path);
  }
}

// ---------------------------------------------------------------------------
// Parameter access.

/// Typed view of a params object; rejects unknown keys and records every resolved value.
class Params {
 public:
  Params(const json& raw, const std::string& command, std::set<std::string> allowed)
      : raw_(raw), allowed_(std::move(allowed)) {
    allowed_.insert("master_seed");
    for (const auto& [key, value] : raw_.items())
      if (!allowed_.count(key)) throw ValidationError(command + ": unknown parameter '" + key + "'");
  }

  bool has(const std::string& key) const { return raw_.contains(key) && !raw_[key].is_null(); }

  u64 uint(const std::string& key, u64 fallback) { return record(key, has(key) ? to_uint(key, raw_[key]) : fallback); }

  std::optional<u64> opt_uint(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return record(key, to_uint(key, raw_[key]));
  }

  double real(const std::string& key, double fallback) {
    if (!has(key)) return record(key, fallback);
    const auto& v = raw_[key];
    if (v.is_number()) return record(key, v.get<double>());
    if (v.is_string()) {
      try {
        std::size_t pos = 0;
        const double d = std::stod(v.get<std::string>(), &pos);
        if (pos == v.get<std::string>().size()) return record(key, d);
      } catch (const std::exception&) {
      }
    }
    throw ValidationError("parameter '" + key + "' must be a number");
  }

  std::optional<double> opt_real(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return real(key, 0.0);
  }

  std::string str(const std::string& key, const std::string& fallback) {
    if (!has(key)) return record(key, fallback);
    if (!raw_[key].is_string()) throw ValidationError("parameter '" + key + "' must be a string");
    return record(key, raw_[key].get<std::string>());
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return record(key, fallback);
    const auto& v = raw_[key];
    if (v.is_boolean()) return record(key, v.get<bool>());
    if (v.is_string() && (v == "true" || v == "false")) return record(key, v == "true");
    throw ValidationError("parameter '" + key + "' must be true or false");
  }

  /// "a..b", "a,b,c", a number, or an array of numbers.
  std::vector<std::size_t> range(const std::string& key, const std::string& fallback) {
    const json v = has(key) ? raw_[key] : json(fallback);
    std::vector<std::size_t> out;
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(static_cast<std::size_t>(to_uint(key, e)));
    } else if (v.is_number()) {
      out.push_back(static_cast<std::size_t>(to_uint(key, v)));
    } else if (v.is_string()) {
      const std::string s = v.get<std::string>();
      const auto dots = s.find("..");
      if (dots != std::string::npos) {
        const u64 lo = to_uint(key, json(s.substr(0, dots))), hi = to_uint(key, json(s.substr(dots + 2)));
        if (lo > hi) throw ValidationError("range '" + s + "' for '" + key + "' is empty");
        if (hi - lo > 10000) throw ValidationError("range '" + s + "' for '" + key + "' is too long");
        for (u64 x = lo; x <= hi; ++x) out.push_back(static_cast<std::size_t>(x));
      } else {
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ',')) out.push_back(static_cast<std::size_t>(to_uint(key, json(part))));
      }
    } else {
      throw ValidationError("parameter '" + key + "' must be a range");
    }
    if (out.empty()) throw ValidationError("parameter '" + key + "' names no values");
    resolved_[key] = out;
    return out;
  }

  u64 master_seed() { return uint("master_seed", kDefaultMasterSeed); }
  const json& resolved() const { return resolved_; }

 private:
  template <class V>
  V record(const std::string& key, V value) {
    resolved_[key] = value;
    return value;
  }

  static u64 to_uint(const std::string& key, const json& v) {
    if (v.is_number_unsigned()) return v.get<u64>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ValidationError("parameter '" + key + "' must be non-negative");
      return v.get<u64>();
    }
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
        try {
          return std::stoull(s);
        } catch (const std::exception&) {
        }
      }
    }
    throw ValidationError("parameter '" + key + "' must be a non-negative integer");
  }

  json raw_;
  std::set<std::string> allowed_;
  json resolved_ = json::object();
};

struct Report {
  json document;
  std::string text;
  bool passed = true;  // false marks an acceptance or audit failure (exit 3)
};

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json pair_names(std::size_t K, const std::vector<std::size_t>& ranks) {
  json out = json::array();
  for (std::size_t r : ranks) {
    const auto p = pair_unrank(K, r);
    out.push_back("{" + std::to_string(p.first()) + "," + std::to_string(p.second()) + "}");
  }
  return out;
}

inline std::size_t checked_size(u64 v, const std::string& key) {
  if (v == 0) throw ValidationError("parameter '" + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands.

inline json run_capacity(Params& p) {
  const auto Ks = p.range("K", "2"), Ps = p.range("P", "1"), Ns = p.range("N", "2");
  const bool verbose = p.flag("verbose", false);
  const auto L = p.opt_uint("L");
  const u64 q = L ? p.uint("q", 2) : 2;
  const auto c_given = L ? p.opt_real("c") : std::nullopt;

  struct Cell {
    std::size_t K, P, N;
  };
  std::vector<Cell> grid;
  for (auto K : Ks)
    for (auto P : Ps)
      for (auto N : Ns) {
        if (K == 0 || P == 0 || N == 0) throw ValidationError("capacity grid values must be >= 1");
        if (P <= pair_count(K)) grid.push_back({K, P, N});
      }

  auto rows = parallel_map(grid.size(), [&](std::size_t i) {
    const auto [K, P, N] = grid[i];
    const std::size_t T = pair_count(K);
    json row{{"K_files", K}, {"K_msg", T}, {"P", P}, {"N", N}};
    double lambda2 = 0.0, c = 0.0;
    if (L) {
      const auto d = delta_distribution(q, K);
      lambda2 = spectrum_via_characters(d).lambda2;
      c = c_given ? *c_given : (lambda2 > 0.0 ? evolve(d, 30, false).fitted_constant : 0.0);
    }
    const auto b = theorem1_bounds(K, P, N, L ? std::optional<std::size_t>(*L) : std::nullopt, lambda2, c);
    row["inv_rate_converse"] = b.inv_rate_converse;
    row["inv_rate_achievable"] = b.inv_rate_achievable;
    const auto lim = corollary_limits(K, P, N);
    row["limit"] = lim ? json(*lim) : json(nullptr);
    if (L) {
      row["L"] = *L;
      row["q"] = q;
      row["lambda2"] = lambda2;
      row["c"] = c;
      row["correction"] = *b.correction;
    }
    if (verbose) {
      const BoundQuery bq{T, P, N};
      if (T >= 2 * P && N >= 2) {
        const auto f = mpir_beta_fraction(bq);
        row["beta_fraction"] = {{"re", f.real()}, {"im", f.imag()}};
      } else {
        row["beta_fraction"] = nullptr;
      }
      row["as_printed"] = {{"inv_rate_converse", inverse_rate_achievable(bq)},
                           {"inv_rate_achievable", inverse_rate_converse(bq)}};
    }
    return row;
  });
  json out = json::array();
  for (auto& r : rows) out.push_back(std::move(r));
  return out;
}

inline json run_spectrum(Params& p) {
  const u64 q = p.uint("q", 2);
  const auto K = detail::checked_size(p.uint("K", 2), "K");
  const bool verbose = p.flag("verbose", false);
  const auto d = delta_distribution(q, K);
  const auto s = spectrum_via_characters(d);
  const auto irr = is_irreducible(d);
  json out{{"q", q}, {"K", K}, {"T", d.T}, {"lambda2", s.lambda2}, {"irreducible", irr.irreducible},
           {"gamma_checked", irr.gamma_checked}};
  if (verbose) {
    out["states"] = s.eigenvalues.size();
    out["support_size"] = irr.support_size;
    out["rank"] = irr.rank;
    out["closure_size"] = irr.generated_size ? json(*irr.generated_size) : json(nullptr);
    out["gamma"] = irr.gamma;
    out["gamma_all_positive"] = irr.gamma_all_positive;
    if (s.eigenvalues.size() <= kMaxDenseStates)
      out["lambda2_dense"] = spectrum_dense_oracle(transition_dense(d)).lambda2;
  }
  return out;
}

inline json run_converge(Params& p, std::string* csv) {
  const u64 q = p.uint("q", 2);
  const auto K = detail::checked_size(p.uint("K", 2), "K");
  const auto Lmax = detail::checked_size(p.uint("Lmax", 30), "Lmax");
  const auto tr = evolve(delta_distribution(q, K), Lmax, false);
  json rows = json::array();
  std::string text = "L,sup_dist,l2_dist,lambda2_power\n";
  for (const auto& pt : tr.points) {
    const double power = std::pow(tr.lambda2, static_cast<double>(pt.L - 1));
    rows.push_back({{"L", pt.L}, {"sup_dist", pt.sup_dist}, {"l2_dist", pt.l2_dist}, {"lambda2_power", power}});
    text += std::to_string(pt.L) + "," + detail::fmt(pt.sup_dist) + "," + detail::fmt(pt.l2_dist) + "," +
            detail::fmt(power) + "\n";
  }
  if (csv) *csv = std::move(text);
  return {{"q", q}, {"K", K}, {"T", tr.T}, {"lambda2", tr.lambda2}, {"fitted_rate", tr.fitted_rate},
          {"fitted_constant", tr.fitted_constant}, {"rows", rows}};
}

namespace detail {

struct SpaceParams {
  std::string scheme;
  u64 q = 5;
  std::optional<std::size_t> K;
  std::size_t T = 3, N = 2, P = 1, nu = 1, L = 3;
};

inline SpaceParams space_params(Params& p, std::size_t default_nu_other) {
  SpaceParams sp;
  sp.scheme = p.str("scheme", "repeated_pir");
  (void)make_scheme(sp.scheme);
  sp.q = p.uint("q", 5);
  require_prime_modulus(sp.q);
  if (p.has("K") && p.has("T")) throw ValidationError("give --K or --T, not both");
  if (p.has("K")) {
    sp.K = checked_size(p.uint("K", 2), "K");
    sp.T = pair_count(*sp.K);
    sp.L = checked_size(p.uint("L", 3), "L");
  } else {
    sp.T = checked_size(p.uint("T", 3), "T");
  }
  sp.N = checked_size(p.uint("N", 2), "N");
  sp.P = checked_size(p.uint("P", 1), "P");
  std::size_t nu_default = default_nu_other;
  if (sp.scheme == "repeated_pir") {
    nu_default = 1;
    for (std::size_t i = 0; i < sp.T && nu_default <= kMaxSubpacketization; ++i) nu_default *= sp.N;
  }
  sp.nu = checked_size(p.uint("nu", nu_default), "nu");
  make_scheme(sp.scheme)->check_supported({sp.q, sp.T, sp.N, sp.P, sp.nu});
  return sp;
}

inline json space_json(const SpaceParams& sp) {
  json j{{"q", sp.q}, {"T", sp.T}, {"N", sp.N}, {"P", sp.P}, {"nu", sp.nu}};
  if (sp.K) {
    j["K"] = *sp.K;
    j["L"] = sp.L;
  }
  return j;
}

}  // namespace detail

inline json run_simulate(Params& p) {
  const auto sp = detail::space_params(p, 1);
  const auto seeds = detail::checked_size(p.uint("seeds", 100), "seeds");
  const u64 master = p.master_seed();
  const auto scheme = make_scheme(sp.scheme);
  const auto sets = request_sets(sp.T, sp.P);

  auto transcripts = parallel_map(seeds, [&](std::size_t s) {
    const u64 seed = split_seed(master, s);
    std::optional<VirtualFileSpace> space;
    if (sp.K) {
      std::vector<Database> dbs;
      for (std::size_t u = 0; u < sp.nu; ++u) dbs.push_back(random_database(sp.q, *sp.K, sp.L, split_seed(seed, u + 1)));
      space.emplace(VirtualFileSpace::from_databases(dbs));
    } else {
      space.emplace(VirtualFileSpace::random(sp.q, sp.T, sp.nu, split_seed(seed, 0)));
    }
    return run_retrieval(*scheme, *space, sets[s % sets.size()], sp.N, seed);
  });

  json summaries = json::array();
  for (std::size_t s = 0; s < transcripts.size(); ++s) {
    const auto& tr = transcripts[s];
    json per_server = json::array();
    for (const auto& a : tr.answers) per_server.push_back(a.size());
    json row{{"run", s}, {"seed", tr.seed}, {"requested", tr.requested}};
    if (sp.K) row["requested_pairs"] = detail::pair_names(*sp.K, tr.requested);
    row["downloaded"] = tr.downloaded;
    row["per_server"] = per_server;
    row["inverse_rate"] = tr.inverse_rate();
    row["decoded_exact"] = true;
    summaries.push_back(std::move(row));
  }
  const auto m = measure_rate(transcripts);
  const auto cmp = compare_rate(m.mean_inverse_rate, sp.T, sp.P, sp.N);
  json rate{{"transcripts", m.transcripts},
            {"mean_inverse_rate", m.mean_inverse_rate},
            {"min_inverse_rate", m.min_inverse_rate},
            {"max_inverse_rate", m.max_inverse_rate},
            {"inv_rate_converse", cmp.converse},
            {"inv_rate_achievable", cmp.achievable ? json(*cmp.achievable) : json(nullptr)},
            {"gap_to_converse", cmp.gap_to_converse}};
  if (sp.K) {
    const auto lim = corollary_limits(*sp.K, sp.P, sp.N);
    rate["limit"] = lim ? json(*lim) : json(nullptr);
  }
  return {{"scheme", sp.scheme},
          {"params", detail::space_json(sp)},
          {"batching", "virtual file r is table entry r across nu independent database instances"},
          {"rate", rate},
          {"transcripts", summaries}};
}

inline json run_audit(Params& p, bool& passed) {
  const auto sp = detail::space_params(p, 4);
  const auto scheme = make_scheme(sp.scheme);
  const std::string mode_name = p.str("mode", scheme->deterministic_queries() ? "exact" : "sampled");
  AuditMode mode;
  if (mode_name == "exact") mode = AuditMode::exact;
  else if (mode_name == "sampled") mode = AuditMode::sampled;
  else throw ValidationError("audit mode must be exact or sampled");
  const auto samples = static_cast<std::size_t>(p.uint("samples", mode == AuditMode::sampled ? 100000 : 0));
  const auto rep = audit_privacy(*scheme, {sp.q, sp.T, sp.N, sp.P, sp.nu}, mode, samples, p.master_seed());
  passed = rep.passed;

  json tests = json::array();
  for (const auto& t : rep.tests) {
    json row{{"request_a", t.request_a}, {"request_b", t.request_b}, {"server", t.server}, {"feature", t.feature}};
    if (mode == AuditMode::sampled) {
      row["chi_square"] = t.statistic;
      row["dof"] = t.dof;
      row["p_value"] = t.p_value;
    } else {
      row["tv_distance"] = t.tv_distance;
    }
    row["passed"] = t.passed;
    tests.push_back(std::move(row));
  }
  return {{"scheme", rep.scheme},
          {"mode", mode_name},
          {"params", detail::space_json(sp)},
          {"samples", rep.samples},
          {"significance", rep.significance},
          {"download_counts_symmetric", rep.download_counts_symmetric},
          {"max_tv_distance", rep.max_tv_distance},
          {"min_p_value", rep.min_p_value},
          {"passed", rep.passed},
          {"tests", tests}};
}

inline json run_ml_demo(Params& p) {
  const std::string task = p.str("task", "svm");
  if (task != "svm" && task != "regression" && task != "pca")
    throw ValidationError("ml-demo task must be svm, regression or pca");
  const std::string path = p.str("data", "");
  if (path.empty()) throw ValidationError("ml-demo needs --data");
  const std::string label = p.str("label", task == "pca" ? "" : "label");
  const bool use_private = p.flag("private", true);
  const u64 master = p.master_seed();

  const Dataset ds = load_dataset_csv(path, label);
  const Eigen::MatrixXd& X = ds.features;
  const double observed_max = X.cwiseAbs().maxCoeff();
  const FixedPointCodec codec{p.real("scale", 100.0), p.uint("q", 2305843009213693951ull),
                              p.real("max_abs", observed_max)};
  const std::size_t servers = detail::checked_size(p.uint("N", 2), "N");

  const IntMatrix direct = direct_integer_gram(X, codec);
  const Eigen::MatrixXd Xq = quantize(X, codec).cast<double>() / codec.scale;

  json out{{"task", task},
           {"mode", use_private ? "private" : "direct"},
           {"samples", X.rows()},
           {"features", X.cols()},
           {"feature_names", ds.feature_names},
           {"codec", {{"scale", codec.scale}, {"q", codec.q}, {"max_abs", codec.max_abs}}}};

  Eigen::MatrixXd g;
  if (use_private) {
    const auto pg = private_gram(X, codec, servers, master);
    out["retrieval"] = {{"scheme", pg.scheme}, {"servers", pg.servers}, {"batch", pg.batch},
                        {"downloaded", pg.downloaded}, {"inverse_rate", pg.inverse_rate}};
    out["gram_bit_identical"] = pg.integers == direct;
    g = pg.real;
  } else {
    g = integer_gram_to_real(direct, codec.scale);
  }
  const GramMatrix G(g);

  if (task == "svm") {
    if (!ds.labels) throw ValidationError("svm needs a label column");
    const Eigen::VectorXd& y = *ds.labels;
    SvmOptions opt;
    if (const auto box = p.opt_real("box")) opt.box = *box;
    const auto sol = svm_dual_train(G, y, opt);
    const Eigen::VectorXd w = Xq.transpose() * y.cwiseProduct(sol.alpha);
    double delta = 0.0;
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double f = svm_decision(sol, y, G.matrix().col(i));
      delta = std::max(delta, std::abs(f - (w.dot(Xq.row(i)) + sol.bias)));
      correct += (f > 0) == (y(i) > 0);
    }
    out["solution"] = {{"alpha", detail::vec(sol.alpha)}, {"bias", sol.bias}, {"objective", sol.objective},
                       {"updates", sol.updates}};
    out["certificates"] = {{"kkt_residual", svm_kkt_residual(G, y, sol)}, {"sum_alpha_y", y.dot(sol.alpha)},
                           {"max_violation", sol.max_violation},
                           {"training_accuracy", static_cast<double>(correct) / static_cast<double>(X.rows())}};
    out["oracle_delta"] = {{"primal_prediction_max_abs", delta}};
  } else if (task == "regression") {
    if (!ds.labels) throw ValidationError("regression needs a label column");
    const Eigen::VectorXd& y = *ds.labels;
    const bool augmented = p.flag("augmented", true);
    const auto model = regression_fit(G, y, augmented);
    Eigen::MatrixXd Xa = Xq;
    if (augmented) {
      Xa.conservativeResize(Eigen::NoChange, Xq.cols() + 1);
      Xa.col(Xq.cols()).setOnes();
    }
    const Eigen::VectorXd w = Xa.completeOrthogonalDecomposition().solve(y);
    double delta = 0.0;
    Eigen::VectorXd fitted(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      fitted(i) = regression_predict(model, G.matrix().col(i));
      delta = std::max(delta, std::abs(fitted(i) - Xa.row(i).dot(w)));
    }
    out["solution"] = {{"coefficients", detail::vec(model.coefficients)}, {"augmented", augmented},
                       {"rank", model.rank}};
    out["certificates"] = {{"residual_norm", (fitted - y).norm()}};
    out["oracle_delta"] = {{"raw_least_squares_max_abs", delta}};
  } else {
    const auto d = detail::checked_size(p.uint("d", 1), "d");
    const auto pca = pca_gram(G, d);
    const Eigen::MatrixXd A = Xq.transpose() * Xq;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xq, Eigen::ComputeThinV);
    double lift = 0.0, delta = 0.0;
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(d); ++r) {
      const Eigen::VectorXd v = Xq.transpose() * pca.coefficients.col(r) / std::sqrt(pca.eigenvalues(r));
      lift = std::max(lift, (A * v - pca.eigenvalues(r) * v).norm() / std::max(A.norm(), 1e-300));
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double gram_energy = pca_project(pca, G.matrix().col(i)).squaredNorm();
      const double raw = (svd.matrixV().leftCols(static_cast<Eigen::Index>(d)).transpose() * Xq.row(i).transpose()).squaredNorm();
      delta = std::max(delta, std::abs(gram_energy - raw));
    }
    json coeffs = json::array();
    for (Eigen::Index r = 0; r < pca.coefficients.cols(); ++r) coeffs.push_back(detail::vec(pca.coefficients.col(r)));
    out["solution"] = {{"eigenvalues", detail::vec(pca.eigenvalues)}, {"coefficients", coeffs}, {"rank", pca.rank}};
    out["certificates"] = {{"lift_residual", lift}};
    out["oracle_delta"] = {{"projection_energy_max_abs", delta}};
  }
  return out;
}

inline json run_reproduce(Params& p, bool& passed) {
  acceptance::Options opt;
  opt.master_seed = p.master_seed();
  opt.inject_fault = p.str("inject_fault", "");
  if (!opt.inject_fault.empty() && opt.inject_fault != acceptance::kFaultDeltaOffByOne)
    throw ValidationError("unknown fault '" + opt.inject_fault + "' (known: delta-off-by-one)");
  const auto results = acceptance::run_all(opt, [](const acceptance::CriterionResult& r) {
    std::fprintf(stderr, "%s criterion %d %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds);
  });
  auto v = acceptance::verdict(results);
  passed = v["passed"].get<bool>();
  return v;
}

// ---------------------------------------------------------------------------
// Dispatch.

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"capacity", "spectrum", "converge", "simulate",
                                                 "audit",    "ml-demo",  "reproduce"};
  return names;
}

inline Report dispatch(const RunConfig& config) {
  const std::string& cmd = config.command;
  std::string format = config.format;
  if (format.empty()) format = cmd == "converge" ? "csv" : "json";
  if (format != "json" && format != "csv") throw ValidationError("format must be json or csv");
  if (format == "csv" && cmd != "converge") throw ValidationError("csv output is only available for converge");

  static const std::map<std::string, std::set<std::string>> keys = {
      {"capacity", {"K", "P", "N", "verbose", "L", "q", "c"}},
      {"spectrum", {"q", "K", "verbose"}},
      {"converge", {"q", "K", "Lmax"}},
      {"simulate", {"scheme", "q", "K", "T", "N", "P", "nu", "L", "seeds"}},
      {"audit", {"scheme", "q", "K", "T", "N", "P", "nu", "L", "mode", "samples"}},
      {"ml-demo", {"task", "data", "label", "private", "scale", "q", "max_abs", "N", "d", "box", "augmented"}},
      {"reproduce", {"inject_fault"}},
  };
  const auto it = keys.find(cmd);
  if (it == keys.end()) throw ValidationError("unknown command '" + cmd + "'");
  Params params(config.params, cmd, it->second);

  Report rep;
  json results;
  std::string csv;
  if (cmd == "capacity") results = run_capacity(params);
  else if (cmd == "spectrum") results = run_spectrum(params);
  else if (cmd == "converge") results = run_converge(params, &csv);
  else if (cmd == "simulate") results = run_simulate(params);
  else if (cmd == "audit") results = run_audit(params, rep.passed);
  else if (cmd == "ml-demo") results = run_ml_demo(params);
  else results = run_reproduce(params, rep.passed);

  const u64 seed = params.master_seed();
  rep.document = {{"command", cmd},
                  {"version", kVersion},
                  {"master_seed", seed},
                  {"config", params.resolved()},
                  {"results", std::move(results)}};
  rep.text = format == "csv" ? csv : rep.document.dump(2) + "\n";
  return rep;
}

inline void emit(const RunConfig& config, const Report& rep) {
  if (config.output.empty()) {
    std::fwrite(rep.text.data(), 1, rep.text.size(), stdout);
    std::fflush(stdout);
  } else {
    write_atomic(config.output, rep.text);
  }
}

}  // namespace pipret::cli
