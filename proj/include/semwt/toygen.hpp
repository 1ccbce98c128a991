// Small disentangled generator: K latent codes of dimension D map to a
// length-M observation built from H blocks.  Block h depends only on the
// shared codes and local group h, and the map is affine, so inversion by
// gradient descent is convex.
#ifndef SEMWT_TOYGEN_HPP
#define SEMWT_TOYGEN_HPP

#include <string>
#include <utility>
#include <vector>

#include "semwt/tensor.hpp"

namespace semwt::toygen {

struct PartitionSpec {
  int total_codes = 8;    // K
  int code_dim = 16;      // D
  int shared_count = 2;
  std::vector<int> private_indices;  // sorted; always contains 0..shared-1

  int group_count() const { return (total_codes - shared_count) / 2; }
  int private_count() const { return static_cast<int>(private_indices.size()); }
  std::vector<int> common_indices() const;
  bool is_private(int index) const;
  void validate() const;

  // Local group g covers codes {shared + 2g, shared + 2g + 1}.
  std::vector<int> group_codes(int g) const;
};

struct LatentCodes {
  Tensor codes;  // [K, D]
  PartitionSpec spec;

  LatentCodes() = default;
  LatentCodes(Tensor c, PartitionSpec s);
};

struct GeneratorParams {
  int obs_dim = 96;  // M
  PartitionSpec spec;
  // Per block h: weights over the shared codes and over local group h, plus
  // a bias.  Rows are orthonormalized and scaled so the nonzero spectrum of
  // the assembled map stays well away from zero (fast, provable inversion).
  std::vector<Tensor> w_shared;  // H x [Mb, shared*D]
  std::vector<Tensor> w_local;   // H x [Mb, 2*D]
  std::vector<Tensor> bias;      // H x [Mb]

  int block_size() const { return obs_dim / spec.group_count(); }

  // Assembled [M, K*D] matrix and [M] bias of the full affine map.
  Tensor full_matrix() const;
  Tensor full_bias() const;

  static GeneratorParams pretrained(const PartitionSpec& spec, int obs_dim,
                                    std::uint64_t seed);
};

Tensor generate(const LatentCodes& z, const GeneratorParams& gen);

double observation_mse(const Tensor& x, const Tensor& y);

// Gradient descent on MSE(x, generate(z)) for exactly `iters` accepted steps,
// starting from `warm_start` if given, else from zero.  Backtracks by halving
// the step on any MSE increase (max 20 halvings per step); throws
// InversionFailure if the objective exceeds 1e6.
LatentCodes invert(const Tensor& x, const GeneratorParams& gen, int iters,
                   double eta, const LatentCodes* warm_start = nullptr);

// Rows selected by private_indices in ascending order, and the complement.
std::pair<Tensor, Tensor> split(const LatentCodes& z);
LatentCodes merge(const Tensor& private_rows, const Tensor& common_rows,
                  const PartitionSpec& spec);

struct DatasetRecord {
  long identity = 0;
  LatentCodes latents;
  Tensor observation;  // [M]
};

struct Dataset {
  std::vector<DatasetRecord> records;
  std::size_t size() const { return records.size(); }
};

// One identity per record; latent factors i.i.d. standard normal.
Dataset sample_dataset(int count, long identity_offset,
                       const GeneratorParams& gen, std::uint64_t seed);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path, const PartitionSpec& spec);

}  // namespace semwt::toygen

#endif  // SEMWT_TOYGEN_HPP
