#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reidaudit/corpus.hpp"

namespace reidaudit {

enum class PhiCategory {
  MRN,
  DATE,
  PHONE,
  ZIP,
  NAME,
  ADDRESS,
  CITY,
  STATE,
  OTHER
};
inline constexpr std::size_t kPhiCategoryCount = 9;

std::string_view to_string(PhiCategory c);
std::optional<PhiCategory> phi_category_from_string(std::string_view s);

// Tagged token range [token_start, token_end). Spans from one tagger run
// never overlap. Confidence is absent for the plain rule tagger.
struct PhiSpan {
  std::size_t token_start = 0;
  std::size_t token_end = 0;
  PhiCategory category = PhiCategory::OTHER;
  std::optional<double> confidence;
};

// Term lists matched case-insensitively. A term on both lists is kept on
// the blocklist and dropped from the allowlist, with a warning.
struct Lexicons {
  std::set<std::string> blocklist;  // lowercased name/PHI terms
  std::set<std::string> allowlist;  // lowercased safe clinical terms
  std::vector<std::string> warnings;

  static Lexicons from_terms(std::vector<std::string> block,
                             std::vector<std::string> allow);
  static Lexicons load(const std::filesystem::path& blocklist_path,
                       const std::filesystem::path& allowlist_path);
  // Lists matched to the synthetic generator's vocabulary.
  static const Lexicons& builtin();
};

// Pattern rules (dates and timestamps, phones, zips, MRN-like digit runs,
// address shapes), then blocklist terms as NAME, then a safety net that
// tags any capitalized token missing from the allowlist as OTHER.
// Earlier rules win; spans are maximal and non-overlapping.
std::vector<PhiSpan> tag_rule(const ClinicalNote& note, const Lexicons& lexicons);

// Per-category confidence for the scored tagger, indexable by PhiCategory.
using ConfidenceTable = std::array<double, kPhiCategoryCount>;
const ConfidenceTable& default_confidences();

// Same spans as tag_rule with confidences attached from the table.
std::vector<PhiSpan> tag_scored(const ClinicalNote& note, const Lexicons& lexicons,
                                const ConfidenceTable& table = default_confidences());

enum class MaskOrder { confidence_desc, random_order };

struct MaskedNote {
  std::string note_id;
  std::string masked_text;
  std::vector<std::size_t> masked_token_indices;  // sorted
  double requested_fraction = 0.0;
  double achieved_fraction = 0.0;
};

// Replaces span tokens with "*****" until round(requested_fraction *
// token_count) tokens are masked or the spans run out. confidence_desc
// masks in descending confidence (earlier token first on ties) and
// requires every span to carry a confidence; random_order uses a seeded
// permutation. Both orders are nested across fractions for a fixed seed.
MaskedNote mask(const ClinicalNote& note, const std::vector<PhiSpan>& spans,
                double requested_fraction, MaskOrder order, std::uint64_t seed);

// |masked_token_indices| / token count, recomputed from the masked text.
double achieved_fraction(const MaskedNote& masked);

// One OTHER span over every token; drives the mask-everything test mode.
std::vector<PhiSpan> full_cover_spans(const ClinicalNote& note);

// Debug span dump: JSONL of note_id, token_start, token_end, category,
// confidence.
std::string spans_to_jsonl(const std::string& note_id,
                           const std::vector<PhiSpan>& spans);

}  // namespace reidaudit
