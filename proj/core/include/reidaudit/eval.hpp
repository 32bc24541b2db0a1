#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reidaudit/corpus.hpp"
#include "reidaudit/deid.hpp"
#include "reidaudit/reid.hpp"

namespace reidaudit {

enum class TaggerKind { rule, scored };

// Everything one masking-level run needs besides the corpus and splits.
struct PipelineConfig {
  FeaturizerConfig featurizer;
  TrainConfig train;
  TaggerKind tagger = TaggerKind::scored;
  MaskOrder order = MaskOrder::confidence_desc;
  ConfidenceTable confidences = default_confidences();
  const Lexicons* lexicons = &Lexicons::builtin();
  std::vector<int> ks = {1, 5, 10};
  std::uint64_t base_seed = 7;
  // Mask every token instead of tagger spans (perfect-masking test mode).
  bool mask_all_tokens = false;
  int jobs = 1;  // parallel curve points
};

struct CurvePoint {
  double requested_fraction = 0.0;
  double mean_achieved_fraction = 0.0;
  double top1 = 0.0;
  std::map<int, double> topk;
  std::uint64_t seed = 0;
};

// One fully-trained masking level: masks the selected train and test
// notes at `fraction`, trains a fresh model on the masked train split,
// and scores the masked test split against the test-split profiles.
struct PointResult {
  CurvePoint point;
  BiencoderModel model;
  std::vector<EpochStats> train_log;
  std::vector<RetrievalResult> test_results;
  std::vector<MaskedNote> masked_test;
  std::vector<PatientProfile> test_profiles;
};

PointResult run_masking_point(const Corpus& corpus, const SplitAssignment& splits,
                              const PipelineConfig& pipe, double fraction);

// One split's selected notes masked at `fraction` with per-note seeds
// derived from mask_seed. Shared by the point runner and by evaluation of
// a stored model against its training-time masking.
struct MaskedLabeledSplit {
  std::vector<LabeledNote> labeled;
  std::vector<MaskedNote> masked;
  std::vector<PatientProfile> profiles;
  double mean_achieved = 0.0;
};

MaskedLabeledSplit build_masked_split(
    const Corpus& corpus, const std::map<std::string, std::string>& selected,
    const std::vector<std::string>& patient_ids, const PipelineConfig& pipe,
    double fraction, std::uint64_t mask_seed);

// Fresh model per fraction; points are independent jobs seeded from
// (base seed, fraction). Throws on an empty fraction list.
std::vector<CurvePoint> masking_curve(const Corpus& corpus,
                                      const SplitAssignment& splits,
                                      const PipelineConfig& pipe,
                                      const std::vector<double>& fractions);

struct ThresholdResult {
  std::optional<double> fraction;  // empty: target unreachable on the grid
  std::vector<std::pair<double, double>> evaluated;  // (fraction, accuracy)
  std::vector<std::string> warnings;                 // non-monotonicity notes
};

using CurveEvaluator = std::function<double(double fraction)>;

// Binary search over {lo, lo+res, ..., hi} for the smallest fraction with
// accuracy <= target. Assumes a non-increasing curve; violations among
// the evaluated points are reported as warnings.
ThresholdResult find_threshold_binary(const CurveEvaluator& evaluator,
                                      double target, double grid_resolution = 0.01,
                                      double lo = 0.0, double hi = 1.0);

// Ascending scan; the oracle for the binary variant.
ThresholdResult find_threshold_exhaustive(const CurveEvaluator& evaluator,
                                          double target,
                                          double grid_resolution = 0.01,
                                          double lo = 0.0, double hi = 1.0);

enum class Quadrant { low_incorrect, low_correct, high_correct, high_incorrect, mid };
std::string_view to_string(Quadrant q);

struct AuditEntry {
  std::string note_id;
  double achieved_fraction = 0.0;
  bool correct = false;
  double mapped_probability = 0.0;  // probability of the top-1 mapping
  Quadrant quadrant = Quadrant::mid;
  std::vector<std::pair<std::string, std::string>> verbatim_hits;  // (field, value)
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  std::map<Quadrant, double> rates;  // fraction of the test split per quadrant
  double low_cut = 0.05;
  double high_cut = 0.15;
};

// Classifies each test note by achieved masking vs the cuts and mapping
// correctness. Low-masked-incorrect and high-masked-correct entries carry
// the profile values still readable in the masked text.
AuditReport error_report(const std::vector<RetrievalResult>& results,
                         const std::vector<MaskedNote>& masked_notes,
                         const std::vector<PatientProfile>& profiles,
                         double low_cut = 0.05, double high_cut = 0.15);

// Populated profile fields whose normalized value survives unmasked in
// the text; masked tokens never match, dates match both surface formats.
std::vector<std::pair<std::string, std::string>> verbatim_field_hits(
    const std::string& masked_text, const PatientProfile& profile);

struct LinkageResult {
  std::vector<std::string> field_subset;
  double uniqueness_rate = 0.0;             // fraction in classes of size 1
  std::map<int, double> k_anonymity_violations;  // k -> fraction in classes < k
};

// Groups profiles by the normalized values of field_subset (absent fields
// share a distinct absent marker) and measures equivalence-class sizes.
LinkageResult linkage_uniqueness(const std::vector<PatientProfile>& profiles,
                                 const std::vector<std::string>& field_subset);

std::string curve_to_csv(const std::vector<CurvePoint>& points);
std::string audit_to_jsonl(const AuditReport& report);
std::string threshold_to_text(const ThresholdResult& result, double target);
std::string linkage_to_csv(const std::vector<LinkageResult>& results);

}  // namespace reidaudit
