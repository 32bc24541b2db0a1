#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reidaudit {

// Identifies the hashing scheme baked into stored models. Bump only when
// the hash or key construction changes.
inline constexpr std::string_view kHashVersion = "fnv1a64/1";

struct FeaturizerConfig {
  std::uint32_t hash_space = 1u << 18;  // power of two, >= 2^10
  int ngram_min = 3;
  int ngram_max = 5;
  bool word_unigrams = true;
  int prefix_tokens = 512;
};

// Throws std::invalid_argument on a malformed config.
void validate_config(const FeaturizerConfig& cfg);

// Sparse hashed bag of features. Indices unique and sorted; weights
// L2-normalized at construction unless the feature set is empty.
struct SparseFeatures {
  std::vector<std::uint32_t> index;
  std::vector<double> weight;

  std::size_t size() const { return index.size(); }
  bool empty() const { return index.empty(); }
};

// Hashed lowercased word unigrams plus character n-grams of each of the
// first prefix_tokens tokens; weights are occurrence counts, collisions
// summed, then L2-normalized.
SparseFeatures featurize_text(const std::vector<std::string>& tokens,
                              const FeaturizerConfig& cfg);

double dot(const SparseFeatures& a, const SparseFeatures& b);

}  // namespace reidaudit
