#include "reidaudit/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "reidaudit/rng.hpp"

namespace reidaudit {

void validate_config(const FeaturizerConfig& cfg) {
  if (cfg.hash_space < (1u << 10) || (cfg.hash_space & (cfg.hash_space - 1)) != 0)
    throw std::invalid_argument("hash_space must be a power of two >= 2^10");
  if (cfg.ngram_min < 1 || cfg.ngram_max < cfg.ngram_min)
    throw std::invalid_argument("char n-gram range is empty");
  if (cfg.prefix_tokens < 1)
    throw std::invalid_argument("prefix_tokens must be >= 1");
}

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Key prefixes keep unigram and n-gram feature spaces apart before hashing.
constexpr char kWordTag[] = {'w', '\x1e'};
constexpr char kGramTag[] = {'g', '\x1e'};

std::uint32_t hash_feature(const char* tag, std::string_view body,
                           std::uint32_t hash_space) {
  std::uint64_t h = fnv1a64(tag, 2);
  h = fnv1a64(body.data(), body.size(), h);
  return static_cast<std::uint32_t>(h & (hash_space - 1));
}

}  // namespace

SparseFeatures featurize_text(const std::vector<std::string>& tokens,
                              const FeaturizerConfig& cfg) {
  validate_config(cfg);
  std::unordered_map<std::uint32_t, double> counts;
  const std::size_t limit =
      std::min(tokens.size(), static_cast<std::size_t>(cfg.prefix_tokens));
  for (std::size_t t = 0; t < limit; ++t) {
    std::string low = lowercase(tokens[t]);
    if (cfg.word_unigrams)
      counts[hash_feature(kWordTag, low, cfg.hash_space)] += 1.0;
    for (int n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
      if (low.size() < static_cast<std::size_t>(n)) break;
      for (std::size_t i = 0; i + n <= low.size(); ++i)
        counts[hash_feature(kGramTag, std::string_view(low).substr(i, n),
                            cfg.hash_space)] += 1.0;
    }
  }

  SparseFeatures out;
  out.index.reserve(counts.size());
  for (const auto& [idx, w] : counts) out.index.push_back(idx);
  std::sort(out.index.begin(), out.index.end());
  out.weight.resize(out.index.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < out.index.size(); ++i) {
    double w = counts[out.index[i]];
    out.weight[i] = w;
    sq += w * w;
  }
  if (sq > 0.0) {
    double inv = 1.0 / std::sqrt(sq);
    for (double& w : out.weight) w *= inv;
  }
  return out;
}

double dot(const SparseFeatures& a, const SparseFeatures& b) {
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.index.size() && j < b.index.size()) {
    if (a.index[i] == b.index[j])
      acc += a.weight[i++] * b.weight[j++];
    else if (a.index[i] < b.index[j])
      ++i;
    else
      ++j;
  }
  return acc;
}

}  // namespace reidaudit
