#pragma once

/**
 * @file retrieval.hpp
 * @brief Replicated-server retrieval of virtual files, with privacy auditing.
 *
 * Each pairwise inner product is treated as a message ("virtual file"). A
 * single inner product is one field symbol, so the simulator batches nu
 * independent database instances: virtual file r is the length-nu vector of
 * table entry r across the instances.
 *
 * A query to a server is a list of sums, each sum naming distinct-file
 * symbols (file, index). Servers answer every sum with the field sum of the
 * named symbols; that rule is shared by all schemes. A scheme supplies the
 * queries and a recipe per requested symbol: a signed combination of answer
 * positions that reproduces it.
 */

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pipret/capacity.hpp"
#include "pipret/errors.hpp"
#include "pipret/field.hpp"
#include "pipret/parallel.hpp"

namespace pipret {

class VirtualFileSpace {
 public:
  VirtualFileSpace(u64 q, std::size_t files, std::size_t batch, std::vector<u64> symbols)
      : q_(q), T_(files), nu_(batch), symbols_(std::move(symbols)) {
    require_prime_modulus(q);
    if (files == 0 || batch == 0) throw ValidationError("virtual file space needs T >= 1 and nu >= 1");
    if (symbols_.size() != files * batch) throw ValidationError("virtual file space symbol count mismatch");
    for (u64 s : symbols_)
      if (s >= q) throw ValidationError("virtual symbol not reduced mod q");
  }

  /// One instance per database; T = K(K+1)/2, virtual file r = table entry r across instances.
  static VirtualFileSpace from_databases(std::span<const Database> dbs) {
    if (dbs.empty()) throw ValidationError("need at least one database instance");
    const u64 q = dbs.front().modulus();
    const std::size_t K = dbs.front().files();
    const std::size_t T = pair_count(K), nu = dbs.size();
    std::vector<u64> symbols(T * nu);
    for (std::size_t u = 0; u < nu; ++u) {
      if (dbs[u].modulus() != q || dbs[u].files() != K)
        throw ValidationError("database instances must share q and K");
      const auto table = compute_table(dbs[u]);
      for (std::size_t r = 0; r < T; ++r) symbols[r * nu + u] = table.values[r];
    }
    return VirtualFileSpace(q, T, nu, std::move(symbols));
  }

  static VirtualFileSpace random(u64 q, std::size_t files, std::size_t batch, u64 seed) {
    require_prime_modulus(q);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<u64> sym(0, q - 1);
    std::vector<u64> symbols(files * batch);
    for (u64& s : symbols) s = sym(rng);
    return VirtualFileSpace(q, files, batch, std::move(symbols));
  }

  u64 modulus() const noexcept { return q_; }
  std::size_t files() const noexcept { return T_; }
  std::size_t batch() const noexcept { return nu_; }
  u64 symbol(std::size_t file, std::size_t index) const {
    if (file >= T_ || index >= nu_) throw ValidationError("virtual symbol out of range");
    return symbols_[file * nu_ + index];
  }

 private:
  u64 q_;
  std::size_t T_;
  std::size_t nu_;
  std::vector<u64> symbols_;
};

/// The user's request: a set of P distinct pairs, kept sorted in canonical order.
class PairSet {
 public:
  PairSet(std::size_t K, std::vector<PairIndex> pairs) : K_(K), pairs_(std::move(pairs)) {
    std::sort(pairs_.begin(), pairs_.end());
    if (pairs_.empty()) throw ValidationError("pair set must be nonempty");
    if (std::adjacent_find(pairs_.begin(), pairs_.end()) != pairs_.end())
      throw ValidationError("pair set has duplicate pairs");
    for (const auto& p : pairs_) (void)pair_rank(K, p);
  }
  std::size_t size() const noexcept { return pairs_.size(); }
  std::span<const PairIndex> pairs() const noexcept { return pairs_; }
  std::vector<std::size_t> ranks() const {
    std::vector<std::size_t> r;
    for (const auto& p : pairs_) r.push_back(pair_rank(K_, p));
    return r;
  }

 private:
  std::size_t K_;
  std::vector<PairIndex> pairs_;
};

// ---------------------------------------------------------------------------
// Queries, answers, decoding recipes.

struct SymbolRef {
  std::uint32_t file = 0;
  std::uint32_t index = 0;
  friend auto operator<=>(const SymbolRef&, const SymbolRef&) = default;
};

using SumRequest = std::vector<SymbolRef>;  // sorted by file, distinct files

struct ServerQuery {
  std::vector<SumRequest> sums;
  friend bool operator==(const ServerQuery&, const ServerQuery&) = default;
};

struct DecodeTerm {
  std::size_t server = 0;
  std::size_t position = 0;
  bool subtract = false;
};

struct SymbolRecipe {
  std::size_t file = 0;
  std::size_t index = 0;
  std::vector<DecodeTerm> terms;
};

struct QueryPlan {
  std::vector<ServerQuery> queries;  // one per server
  std::vector<SymbolRecipe> recipes;
};

struct SchemeParams {
  u64 q = 2;
  std::size_t files = 1;      // T
  std::size_t servers = 1;    // N
  std::size_t requested = 1;  // P
  std::size_t batch = 1;      // nu
};

class RetrievalScheme {
 public:
  virtual ~RetrievalScheme() = default;
  virtual std::string name() const = 0;
  /// Throws ValidationError when the scheme cannot run with these parameters.
  virtual void check_supported(const SchemeParams& params) const = 0;
  /// Queries and recipes for the requested virtual files (sorted, distinct ranks).
  virtual QueryPlan plan(const SchemeParams& params, std::span<const std::size_t> requested,
                         std::mt19937_64& rng) const = 0;
  /// True when plan() ignores its randomness, so exact query-law comparison is a point-mass check.
  virtual bool deterministic_queries() const { return false; }

  bool supports(const SchemeParams& params) const {
    try {
      check_supported(params);
      return true;
    } catch (const ValidationError&) {
      return false;
    }
  }
};

/// Server-side answer: the field sum of each requested symbol group.
inline std::vector<u64> answer_query(const ServerQuery& query, const VirtualFileSpace& space) {
  std::vector<u64> out;
  out.reserve(query.sums.size());
  const u64 q = space.modulus();
  for (const auto& sum : query.sums) {
    u64 acc = 0;
    for (const auto& s : sum) acc = (acc + space.symbol(s.file, s.index)) % q;
    out.push_back(acc);
  }
  return out;
}

namespace detail {

inline void check_common(const SchemeParams& p) {
  require_prime_modulus(p.q);
  if (p.files == 0 || p.servers == 0 || p.batch == 0) throw ValidationError("need T, N, nu >= 1");
  if (p.requested == 0 || p.requested > p.files)
    throw ValidationError("requested count P must lie in [1, T]");
}

inline std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t limit) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (v > limit / base) throw ValidationError("subpacketization N^T exceeds " + std::to_string(limit));
    v *= base;
  }
  return v;
}

}  // namespace detail

/// Baseline: server 1 returns every symbol of every virtual file.
class FullDownloadScheme final : public RetrievalScheme {
 public:
  std::string name() const override { return "full_download"; }
  void check_supported(const SchemeParams& p) const override { detail::check_common(p); }
  bool deterministic_queries() const override { return true; }

  QueryPlan plan(const SchemeParams& p, std::span<const std::size_t> requested, std::mt19937_64&) const override {
    check_supported(p);
    QueryPlan out;
    out.queries.resize(p.servers);
    auto& sums = out.queries[0].sums;
    for (std::size_t f = 0; f < p.files; ++f)
      for (std::size_t u = 0; u < p.batch; ++u)
        sums.push_back({SymbolRef{static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(u)}});
    for (std::size_t f : requested)
      for (std::size_t u = 0; u < p.batch; ++u) out.recipes.push_back({f, u, {{0, f * p.batch + u, false}}});
    return out;
  }
};

inline constexpr std::size_t kMaxSubpacketization = std::size_t{1} << 20;

/**
 * P independent runs of the capacity-achieving single-message scheme, one per
 * requested file theta, each with subpacketization nu = N^T.
 *
 * Round t asks every server for sums of t distinct-file symbols, grouped by
 * file subset in lexicographic order, (N-1)^(t-1) sums per subset:
 *  - subsets without theta: fresh symbols of every member file;
 *  - subsets with theta (t >= 2): a fresh theta symbol added to one undesired
 *    (t-1)-sum over the remaining files that another server returned in the
 *    previous round. Each such sum is reused exactly once by every other server.
 * Every symbol index is drawn through an independent uniform permutation per
 * file, so within one server each file's indices are a uniform random
 * injection whatever theta is.
 */
class RepeatedPirScheme final : public RetrievalScheme {
 public:
  std::string name() const override { return "repeated_pir"; }

  void check_supported(const SchemeParams& p) const override {
    detail::check_common(p);
    if (p.servers < 2) throw ValidationError("repeated_pir needs N >= 2");
    if (p.files > 20) throw ValidationError("repeated_pir limited to T <= 20");
    const std::size_t nu = detail::checked_power(p.servers, p.files, kMaxSubpacketization);
    if (p.batch != nu)
      throw ValidationError("repeated_pir needs nu = N^T = " + std::to_string(nu) + ", got " +
                            std::to_string(p.batch));
  }

  static std::size_t per_server_download(std::size_t T, std::size_t N) {
    std::size_t total = 0;
    for (std::size_t t = 1; t <= T; ++t) total += binomial(T, t) * power(N - 1, t - 1);
    return total;
  }

  QueryPlan plan(const SchemeParams& p, std::span<const std::size_t> requested,
                 std::mt19937_64& rng) const override {
    check_supported(p);
    QueryPlan out;
    out.queries.resize(p.servers);
    for (std::size_t theta : requested) single_run(p, theta, rng, out);
    return out;
  }

 private:
  static std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }
  static std::size_t power(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    while (e--) r *= b;
    return r;
  }

  static void single_run(const SchemeParams& p, std::size_t theta, std::mt19937_64& rng, QueryPlan& out) {
    const std::size_t T = p.files, N = p.servers, nu = p.batch;
    if (theta >= T) throw ValidationError("requested file out of range");

    std::vector<std::vector<std::uint32_t>> perm(T, std::vector<std::uint32_t>(nu));
    for (auto& pm : perm) {
      std::iota(pm.begin(), pm.end(), 0u);
      std::shuffle(pm.begin(), pm.end(), rng);
    }
    std::vector<std::size_t> used(T, 0);
    auto fresh = [&](std::size_t f) {
      if (used[f] >= nu) throw std::logic_error("repeated_pir ran out of fresh symbols");
      return SymbolRef{static_cast<std::uint32_t>(f), perm[f][used[f]++]};
    };

    struct Stored {
      std::size_t position;
      SumRequest sum;
    };
    // undesired[n][mask]: undesired sums server n returned for file subset `mask`.
    std::vector<std::map<std::uint32_t, std::vector<Stored>>> undesired(N), next_undesired(N);

    std::vector<std::uint32_t> masks;
    for (std::size_t t = 1; t <= T; ++t) {
      masks.clear();
      for (std::uint32_t m = 1; m < (1u << T); ++m)
        if (static_cast<std::size_t>(std::popcount(m)) == t) masks.push_back(m);
      // Lexicographic order of the sorted member lists.
      std::sort(masks.begin(), masks.end(), [&](std::uint32_t a, std::uint32_t b) {
        for (std::size_t f = 0; f < T; ++f) {
          const bool ia = a >> f & 1, ib = b >> f & 1;
          if (ia != ib) return ia;
        }
        return false;
      });
      const std::size_t repeats = power(N - 1, t - 1);

      for (std::size_t n = 0; n < N; ++n) {
        auto& sums = out.queries[n].sums;
        for (std::uint32_t mask : masks) {
          if (mask >> theta & 1) {
            const std::uint32_t rest = mask & ~(1u << theta);
            if (rest == 0) {
              const SymbolRef d = fresh(theta);
              out.recipes.push_back({theta, d.index, {{n, sums.size(), false}}});
              sums.push_back({d});
              continue;
            }
            for (std::size_t other = 0; other < N; ++other) {
              if (other == n) continue;
              for (const Stored& side : undesired[other].at(rest)) {
                const SymbolRef d = fresh(theta);
                SumRequest sum = side.sum;
                sum.insert(std::upper_bound(sum.begin(), sum.end(), d,
                                            [](const SymbolRef& a, const SymbolRef& b) { return a.file < b.file; }),
                           d);
                out.recipes.push_back({theta, d.index, {{n, sums.size(), false}, {other, side.position, true}}});
                sums.push_back(std::move(sum));
              }
            }
          } else {
            for (std::size_t r = 0; r < repeats; ++r) {
              SumRequest sum;
              for (std::size_t f = 0; f < T; ++f)
                if (mask >> f & 1) sum.push_back(fresh(f));
              next_undesired[n][mask].push_back({sums.size(), sum});
              sums.push_back(std::move(sum));
            }
          }
        }
      }
      undesired.swap(next_undesired);
      for (auto& m : next_undesired) m.clear();
    }
    if (used[theta] != nu) throw std::logic_error("repeated_pir did not cover every desired symbol");
  }
};

/// Negative control: asks server 1 for the requested files directly. Not private.
class PlantedLeakScheme final : public RetrievalScheme {
 public:
  std::string name() const override { return "planted_leak"; }
  void check_supported(const SchemeParams& p) const override { detail::check_common(p); }
  bool deterministic_queries() const override { return true; }

  QueryPlan plan(const SchemeParams& p, std::span<const std::size_t> requested, std::mt19937_64&) const override {
    check_supported(p);
    QueryPlan out;
    out.queries.resize(p.servers);
    auto& sums = out.queries[0].sums;
    for (std::size_t f : requested) {
      for (std::size_t u = 0; u < p.batch; ++u) {
        out.recipes.push_back({f, u, {{0, sums.size(), false}}});
        sums.push_back({SymbolRef{static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(u)}});
      }
    }
    return out;
  }
};

inline std::unique_ptr<RetrievalScheme> make_scheme(const std::string& name) {
  if (name == "full_download") return std::make_unique<FullDownloadScheme>();
  if (name == "repeated_pir") return std::make_unique<RepeatedPirScheme>();
  if (name == "planted_leak") return std::make_unique<PlantedLeakScheme>();
  throw ValidationError("unknown scheme '" + name + "' (expected full_download, repeated_pir, planted_leak)");
}

// ---------------------------------------------------------------------------
// Running a retrieval.

struct RetrievalTranscript {
  std::string scheme;
  u64 seed = 0;
  SchemeParams params;
  std::vector<std::size_t> requested;
  std::vector<ServerQuery> queries;
  std::vector<std::vector<u64>> answers;
  std::size_t downloaded = 0;               // field symbols returned by all servers
  std::vector<std::vector<u64>> decoded;    // decoded[p][u] for requested[p]

  double inverse_rate() const {
    return static_cast<double>(downloaded) / static_cast<double>(params.requested * params.batch);
  }
};

inline std::vector<std::size_t> normalize_request(std::span<const std::size_t> requested, std::size_t T) {
  std::vector<std::size_t> r(requested.begin(), requested.end());
  std::sort(r.begin(), r.end());
  if (r.empty()) throw ValidationError("request must name at least one virtual file");
  if (std::adjacent_find(r.begin(), r.end()) != r.end()) throw ValidationError("request has duplicate files");
  if (r.back() >= T) throw ValidationError("requested file out of range");
  return r;
}

/// Runs one retrieval and checks every decoded symbol against the space. Throws ProtocolError on mismatch.
inline RetrievalTranscript run_retrieval(const RetrievalScheme& scheme, const VirtualFileSpace& space,
                                         std::span<const std::size_t> requested, std::size_t servers, u64 seed) {
  RetrievalTranscript tr;
  tr.scheme = scheme.name();
  tr.seed = seed;
  tr.requested = normalize_request(requested, space.files());
  tr.params = {space.modulus(), space.files(), servers, tr.requested.size(), space.batch()};
  scheme.check_supported(tr.params);

  std::mt19937_64 rng(seed);
  QueryPlan plan = scheme.plan(tr.params, tr.requested, rng);
  if (plan.queries.size() != servers) throw std::logic_error("scheme produced the wrong number of queries");

  for (const auto& query : plan.queries) {
    tr.answers.push_back(answer_query(query, space));
    tr.downloaded += tr.answers.back().size();
  }

  const u64 q = space.modulus();
  tr.decoded.assign(tr.requested.size(), std::vector<u64>(space.batch(), 0));
  std::vector<std::vector<char>> seen(tr.requested.size(), std::vector<char>(space.batch(), 0));
  for (const auto& recipe : plan.recipes) {
    const auto slot = std::lower_bound(tr.requested.begin(), tr.requested.end(), recipe.file);
    if (slot == tr.requested.end() || *slot != recipe.file || recipe.index >= space.batch())
      throw ProtocolError("decoding recipe names a symbol that was not requested");
    u64 value = 0;
    for (const auto& term : recipe.terms) {
      const u64 a = tr.answers.at(term.server).at(term.position);
      value = term.subtract ? (value + q - a) % q : (value + a) % q;
    }
    const auto p = static_cast<std::size_t>(slot - tr.requested.begin());
    tr.decoded[p][recipe.index] = value;
    seen[p][recipe.index] = 1;
  }
  tr.queries = std::move(plan.queries);

  for (std::size_t p = 0; p < tr.requested.size(); ++p) {
    for (std::size_t u = 0; u < space.batch(); ++u) {
      if (!seen[p][u]) throw ProtocolError("scheme left a requested symbol undecoded");
      if (tr.decoded[p][u] != space.symbol(tr.requested[p], u))
        throw ProtocolError(scheme.name() + ": decoded symbol mismatch for file " + std::to_string(tr.requested[p]) +
                            ", instance " + std::to_string(u) + ", seed " + std::to_string(seed));
    }
  }
  return tr;
}

inline RetrievalTranscript run_retrieval(const RetrievalScheme& scheme, const VirtualFileSpace& space,
                                         const PairSet& pairs, std::size_t servers, u64 seed) {
  return run_retrieval(scheme, space, pairs.ranks(), servers, seed);
}

struct RateMeasurement {
  std::size_t transcripts = 0;
  double mean_inverse_rate = 0.0;
  double min_inverse_rate = 0.0;
  double max_inverse_rate = 0.0;
};

inline RateMeasurement measure_rate(std::span<const RetrievalTranscript> transcripts) {
  if (transcripts.empty()) throw ValidationError("rate measurement needs at least one transcript");
  RateMeasurement m;
  m.transcripts = transcripts.size();
  m.min_inverse_rate = m.max_inverse_rate = transcripts.front().inverse_rate();
  double sum = 0.0;
  for (const auto& t : transcripts) {
    const double r = t.inverse_rate();
    sum += r;
    m.min_inverse_rate = std::min(m.min_inverse_rate, r);
    m.max_inverse_rate = std::max(m.max_inverse_rate, r);
  }
  m.mean_inverse_rate = sum / static_cast<double>(transcripts.size());
  return m;
}

struct RateComparison {
  double measured = 0.0;
  double converse = 0.0;
  std::optional<double> achievable;
  double gap_to_converse = 0.0;  // measured - converse, never negative for a valid scheme
};

inline RateComparison compare_rate(double measured, std::size_t T, std::size_t P, std::size_t N) {
  const BoundQuery bq{T, P, N};
  RateComparison c{measured, inverse_rate_converse(bq), std::nullopt, 0.0};
  try {
    c.achievable = inverse_rate_achievable(bq);
  } catch (const NumericError&) {
  }
  c.gap_to_converse = measured - c.converse;
  return c;
}

// ---------------------------------------------------------------------------
// Privacy audit.

enum class AuditMode { exact, sampled };

struct PairwiseTest {
  std::vector<std::size_t> request_a, request_b;
  std::size_t server = 0;
  std::string feature;
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  double tv_distance = 0.0;
  bool passed = true;
};

struct PrivacyAuditReport {
  std::string scheme;
  AuditMode mode = AuditMode::sampled;
  SchemeParams params;
  std::size_t samples = 0;
  double significance = 1e-3;
  bool download_counts_symmetric = true;
  double max_tv_distance = 0.0;
  double min_p_value = 1.0;
  std::vector<PairwiseTest> tests;
  bool passed = true;
};

inline constexpr std::size_t kMinAuditSamples = 10000;
inline constexpr double kAuditSignificance = 1e-3;

/// All P-subsets of [0, T) in lexicographic order.
inline std::vector<std::vector<std::size_t>> request_sets(std::size_t T, std::size_t P) {
  if (P == 0 || P > T) throw ValidationError("need 1 <= P <= T");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(P);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    if (out.size() > 4096) throw ValidationError("too many request sets to audit");
    std::size_t i = P;
    while (i > 0 && cur[i - 1] == T - P + i - 1) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t k = i; k < P; ++k) cur[k] = cur[k - 1] + 1;
  }
  return out;
}

namespace detail {

// Support sequence with each symbol replaced by its first-appearance label, so
// reuse structure survives but index values do not.
inline std::string query_structure(const ServerQuery& q) {
  std::map<SymbolRef, std::size_t> label;
  std::string s;
  for (const auto& sum : q.sums) {
    for (const auto& sym : sum) {
      auto [it, inserted] = label.try_emplace(sym, label.size());
      s += std::to_string(sym.file) + ':' + std::to_string(it->second) + ',';
    }
    s += '|';
  }
  return s;
}

// Smallest index of each file at this server (nu if absent), packed into one category.
inline std::uint64_t query_min_indices(const ServerQuery& q, std::size_t T, std::size_t nu) {
  std::vector<std::size_t> mins(T, nu);
  for (const auto& sum : q.sums)
    for (const auto& sym : sum) mins[sym.file] = std::min<std::size_t>(mins[sym.file], sym.index);
  std::uint64_t code = 0;
  for (std::size_t f = T; f-- > 0;) code = code * (nu + 1) + mins[f];
  return code;
}

inline std::string query_exact(const ServerQuery& q) {
  std::string s;
  for (const auto& sum : q.sums) {
    for (const auto& sym : sum) s += std::to_string(sym.file) + ':' + std::to_string(sym.index) + ',';
    s += '|';
  }
  return s;
}

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

// Two-sample homogeneity test. Categories whose pooled expected count is below
// 5 per sample are merged into one bucket.
inline ChiSquare chi_square_homogeneity(const std::map<std::uint64_t, std::size_t>& a,
                                        const std::map<std::uint64_t, std::size_t>& b) {
  std::map<std::uint64_t, std::pair<double, double>> cells;
  double na = 0, nb = 0;
  for (auto [k, v] : a) cells[k].first += static_cast<double>(v), na += static_cast<double>(v);
  for (auto [k, v] : b) cells[k].second += static_cast<double>(v), nb += static_cast<double>(v);
  const double total = na + nb;
  std::vector<std::pair<double, double>> kept;
  std::pair<double, double> pooled{0, 0};
  for (const auto& [k, c] : cells) {
    const double col = c.first + c.second;
    if (col * std::min(na, nb) / total < 5.0) {
      pooled.first += c.first;
      pooled.second += c.second;
    } else {
      kept.push_back(c);
    }
  }
  if (pooled.first + pooled.second > 0) kept.push_back(pooled);
  ChiSquare out;
  if (kept.size() < 2) return out;
  for (const auto& [oa, ob] : kept) {
    const double col = oa + ob;
    const double ea = col * na / total, eb = col * nb / total;
    if (ea > 0) out.statistic += (oa - ea) * (oa - ea) / ea;
    if (eb > 0) out.statistic += (ob - eb) * (ob - eb) / eb;
  }
  out.dof = kept.size() - 1;
  boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

}  // namespace detail

/**
 * Compares each server's query law across every request set of size P.
 *
 * exact: only for schemes whose queries ignore randomness; the law is a point
 * mass, so the total-variation distance between two requests is 0 or 1.
 * sampled: per server, two categorical features are tallied over `samples`
 * draws per request set (query structure, and the per-file minimum index) and
 * every pair of request sets is compared by a chi-square homogeneity test.
 */
inline PrivacyAuditReport audit_privacy(const RetrievalScheme& scheme, const SchemeParams& params, AuditMode mode,
                                        std::size_t samples, u64 master_seed) {
  scheme.check_supported(params);
  PrivacyAuditReport rep;
  rep.scheme = scheme.name();
  rep.mode = mode;
  rep.params = params;
  rep.samples = samples;
  rep.significance = kAuditSignificance;

  const auto requests = request_sets(params.files, params.requested);
  const std::size_t N = params.servers;

  // Download counts must not depend on the request.
  {
    std::mt19937_64 rng(master_seed);
    std::vector<std::size_t> baseline;
    for (const auto& r : requests) {
      const auto plan = scheme.plan(params, r, rng);
      std::vector<std::size_t> counts;
      for (const auto& q : plan.queries) counts.push_back(q.sums.size());
      if (baseline.empty()) baseline = counts;
      else if (counts != baseline) rep.download_counts_symmetric = false;
    }
  }

  if (mode == AuditMode::exact) {
    if (!scheme.deterministic_queries())
      throw ValidationError("exact audit needs enumerable query randomness; scheme '" + scheme.name() +
                            "' draws random permutations (use sampled mode)");
    std::vector<std::vector<std::string>> views;
    for (const auto& r : requests) {
      std::mt19937_64 rng(master_seed);
      const auto plan = scheme.plan(params, r, rng);
      std::vector<std::string> v;
      for (const auto& q : plan.queries) v.push_back(detail::query_exact(q));
      views.push_back(std::move(v));
    }
    for (std::size_t a = 0; a < requests.size(); ++a) {
      for (std::size_t b = a + 1; b < requests.size(); ++b) {
        for (std::size_t n = 0; n < N; ++n) {
          PairwiseTest t{requests[a], requests[b], n, "query", 0.0, 0, 1.0, 0.0, true};
          t.tv_distance = views[a][n] == views[b][n] ? 0.0 : 1.0;
          t.passed = t.tv_distance == 0.0;
          if (!t.passed) t.p_value = 0.0;
          rep.max_tv_distance = std::max(rep.max_tv_distance, t.tv_distance);
          rep.tests.push_back(std::move(t));
        }
      }
    }
  } else {
    if (samples < kMinAuditSamples) throw ValidationError("sampled audit needs at least 10^4 samples");
    // tallies[request][server][feature] : category -> count
    using Tally = std::map<std::uint64_t, std::size_t>;
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;

    std::unordered_map<std::string, std::uint64_t> structure_ids;
    std::vector<std::vector<std::array<Tally, 2>>> tallies(requests.size(), std::vector<std::array<Tally, 2>>(N));

    for (std::size_t ri = 0; ri < requests.size(); ++ri) {
      struct ChunkTally {
        std::vector<std::map<std::string, std::size_t>> structure;
        std::vector<Tally> mins;
      };
      auto parts = parallel_map(chunks, [&](std::size_t c) {
        ChunkTally ct{std::vector<std::map<std::string, std::size_t>>(N), std::vector<Tally>(N)};
        const std::size_t begin = c * kChunk, end = std::min(samples, begin + kChunk);
        for (std::size_t s = begin; s < end; ++s) {
          std::mt19937_64 rng(split_seed(master_seed, ri * samples + s));
          const auto plan = scheme.plan(params, requests[ri], rng);
          for (std::size_t n = 0; n < N; ++n) {
            ++ct.structure[n][detail::query_structure(plan.queries[n])];
            ++ct.mins[n][detail::query_min_indices(plan.queries[n], params.files, params.batch)];
          }
        }
        return ct;
      });
      for (const auto& part : parts) {
        for (std::size_t n = 0; n < N; ++n) {
          for (const auto& [key, count] : part.structure[n]) {
            auto [it, inserted] = structure_ids.try_emplace(key, structure_ids.size());
            tallies[ri][n][0][it->second] += count;
          }
          for (const auto& [key, count] : part.mins[n]) tallies[ri][n][1][key] += count;
        }
      }
    }

    static constexpr const char* kFeatures[2] = {"structure", "min_index"};
    for (std::size_t a = 0; a < requests.size(); ++a) {
      for (std::size_t b = a + 1; b < requests.size(); ++b) {
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t f = 0; f < 2; ++f) {
            const auto chi = detail::chi_square_homogeneity(tallies[a][n][f], tallies[b][n][f]);
            PairwiseTest t{requests[a], requests[b], n, kFeatures[f], chi.statistic, chi.dof, chi.p_value, 0.0, true};
            t.passed = chi.p_value >= kAuditSignificance;
            rep.min_p_value = std::min(rep.min_p_value, chi.p_value);
            rep.tests.push_back(std::move(t));
          }
        }
      }
    }
  }

  rep.passed = rep.download_counts_symmetric &&
               std::all_of(rep.tests.begin(), rep.tests.end(), [](const PairwiseTest& t) { return t.passed; });
  if (mode == AuditMode::exact) rep.min_p_value = rep.passed ? 1.0 : 0.0;
  return rep;
}

}  // namespace pipret
