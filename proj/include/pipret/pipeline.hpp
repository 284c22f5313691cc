#pragma once

/**
 * @file pipeline.hpp
 * @brief Gram matrix of a real dataset obtained through the retrieval simulator.
 *
 * Each sample is one file; the user requests every pair, so the retrieved
 * table is the full integer Gram matrix of the quantized data.
 */

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "pipret/gram_ml.hpp"
#include "pipret/parallel.hpp"
#include "pipret/retrieval.hpp"

namespace pipret {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr std::size_t kMaxPipelineBatch = 4096;

struct PrivateGram {
  IntMatrix integers;
  Eigen::MatrixXd real;
  std::string scheme;
  std::size_t servers = 0;
  std::size_t batch = 0;
  std::size_t downloaded = 0;
  double inverse_rate = 0.0;
};

/// Integer Gram of the quantized data, computed in the clear.
inline IntMatrix direct_integer_gram(const Eigen::MatrixXd& rows, const FixedPointCodec& codec) {
  const IntMatrix ints = quantize(rows, codec);
  return ints * ints.transpose();
}

/**
 * repeated_pir when N >= 2 and N^T fits the batch cap; the dataset is
 * instance 0 and the other instances are seeded padding databases. Otherwise
 * full_download with a single instance.
 */
inline PrivateGram private_gram(const Eigen::MatrixXd& rows, const FixedPointCodec& codec, std::size_t servers,
                                u64 seed) {
  if (servers == 0) throw ValidationError("need at least one server");
  const Database db = encode_dataset(rows, codec);
  const std::size_t m = db.files(), T = pair_count(m);

  std::size_t nu = 1;
  bool use_pir = servers >= 2 && T <= 20;
  if (use_pir) {
    for (std::size_t i = 0; i < T && use_pir; ++i) {
      nu *= servers;
      if (nu > kMaxPipelineBatch) use_pir = false;
    }
  }
  if (!use_pir) nu = 1;

  std::vector<Database> instances{db};
  for (std::size_t u = 1; u < nu; ++u) instances.push_back(random_database(codec.q, m, db.length(), split_seed(seed, u)));
  const auto space = VirtualFileSpace::from_databases(instances);

  const auto scheme = make_scheme(use_pir ? "repeated_pir" : "full_download");
  std::vector<std::size_t> all(T);
  for (std::size_t r = 0; r < T; ++r) all[r] = r;
  const auto tr = run_retrieval(*scheme, space, all, servers, seed);

  InnerProductVector table{codec.q, m, std::vector<u64>(T)};
  for (std::size_t r = 0; r < T; ++r) table.values[r] = tr.decoded[r][0];

  PrivateGram out;
  out.integers = decode_gram_integers(table, codec);
  out.real = integer_gram_to_real(out.integers, codec.scale);
  out.scheme = scheme->name();
  out.servers = servers;
  out.batch = nu;
  out.downloaded = tr.downloaded;
  out.inverse_rate = tr.inverse_rate();
  return out;
}

}  // namespace pipret
