#pragma once

#include <cstdint>
#include <vector>

#include "reidaudit/features.hpp"

namespace reidaudit {

enum class EncoderRole { profile_encoder_f, note_encoder_g };

// Dense linear projection from the hash space to the embedding space.
// Stored column-major (one contiguous dim-vector per hash index) so
// sparse encode and per-column optimizer updates touch contiguous memory.
// float storage keeps a default-sized encoder (128 x 2^18) at 128 MiB;
// all arithmetic on top of it runs in double.
struct EncoderParams {
  EncoderRole role = EncoderRole::note_encoder_g;
  std::uint32_t dim = 128;
  std::uint32_t hash_space = 1u << 18;
  std::vector<float> weights;  // dim * hash_space, [h * dim + r]

  float* column(std::uint32_t h) { return weights.data() + std::size_t(h) * dim; }
  const float* column(std::uint32_t h) const {
    return weights.data() + std::size_t(h) * dim;
  }
};

// Entries drawn uniformly from (-1/sqrt(H), 1/sqrt(H)) so initial logits
// are O(1).
EncoderParams init_encoder(EncoderRole role, std::uint32_t dim,
                           std::uint32_t hash_space, std::uint64_t seed);

// v = projection * features. Throws on an index outside the hash space.
std::vector<double> encode(const SparseFeatures& features,
                           const EncoderParams& params);

}  // namespace reidaudit
