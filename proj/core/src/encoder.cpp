#include "reidaudit/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "reidaudit/rng.hpp"

namespace reidaudit {

EncoderParams init_encoder(EncoderRole role, std::uint32_t dim,
                           std::uint32_t hash_space, std::uint64_t seed) {
  EncoderParams p;
  p.role = role;
  p.dim = dim;
  p.hash_space = hash_space;
  p.weights.resize(std::size_t(dim) * hash_space);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hash_space));
  Rng rng(seed);
  for (float& w : p.weights)
    w = static_cast<float>((2.0 * rng.real() - 1.0) * scale);
  return p;
}

std::vector<double> encode(const SparseFeatures& features,
                           const EncoderParams& params) {
  std::vector<double> v(params.dim, 0.0);
  for (std::size_t i = 0; i < features.index.size(); ++i) {
    const std::uint32_t h = features.index[i];
    if (h >= params.hash_space)
      throw std::invalid_argument("feature index outside encoder hash space");
    const float* col = params.column(h);
    const double w = features.weight[i];
    for (std::uint32_t r = 0; r < params.dim; ++r) v[r] += w * col[r];
  }
  return v;
}

}  // namespace reidaudit
