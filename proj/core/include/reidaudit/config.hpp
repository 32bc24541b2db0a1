#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "reidaudit/corpus.hpp"
#include "reidaudit/eval.hpp"

namespace reidaudit {

// One flat, namespaced key-value configuration covering every knob of the
// pipeline. Unknown keys are rejected; the effective config is echoed into
// each output directory so any run can be reproduced from its artifacts.
struct RunConfig {
  std::uint64_t seed = 7;

  int n_patients = 1000;
  GeneratorConfig generator;
  std::array<double, 3> split_ratios = {0.70, 0.15, 0.15};

  FeaturizerConfig featurizer;
  TrainConfig train;

  TaggerKind tagger = TaggerKind::scored;
  MaskOrder order = MaskOrder::confidence_desc;
  ConfidenceTable confidences = default_confidences();
  std::filesystem::path blocklist_path;  // empty: built-in lexicons
  std::filesystem::path allowlist_path;

  std::vector<double> fractions = {0.0, 0.05, 0.10, 0.15, 0.20};
  double target = 0.01;
  double resolution = 0.01;
  double low_cut = 0.05;
  double high_cut = 0.15;
  std::vector<int> ks = {1, 5, 10};
  int jobs = 1;

  // Applies "key=value"; throws std::invalid_argument for unknown keys or
  // unparsable values.
  void set(const std::string& key, const std::string& value);

  // Sorted "key=value" lines reproducing this config exactly.
  std::string to_text() const;

  static RunConfig from_file(const std::filesystem::path& path);
  void apply_file(const std::filesystem::path& path);

  Lexicons load_lexicons() const;
  PipelineConfig pipeline() const;
};

}  // namespace reidaudit
