#include "reidaudit/deid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "gen_vocab.hpp"
#include "reidaudit/io.hpp"
#include "reidaudit/rng.hpp"
#include "reidaudit/text.hpp"

namespace reidaudit {

std::string_view to_string(PhiCategory c) {
  switch (c) {
    case PhiCategory::MRN: return "MRN";
    case PhiCategory::DATE: return "DATE";
    case PhiCategory::PHONE: return "PHONE";
    case PhiCategory::ZIP: return "ZIP";
    case PhiCategory::NAME: return "NAME";
    case PhiCategory::ADDRESS: return "ADDRESS";
    case PhiCategory::CITY: return "CITY";
    case PhiCategory::STATE: return "STATE";
    default: return "OTHER";
  }
}

std::optional<PhiCategory> phi_category_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kPhiCategoryCount; ++i) {
    auto c = static_cast<PhiCategory>(i);
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

Lexicons Lexicons::from_terms(std::vector<std::string> block,
                              std::vector<std::string> allow) {
  auto lower = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  Lexicons lex;
  for (std::string& t : block)
    if (!t.empty()) lex.blocklist.insert(lower(std::move(t)));
  for (std::string& t : allow) {
    if (t.empty()) continue;
    std::string low = lower(std::move(t));
    if (lex.blocklist.count(low)) {
      lex.warnings.push_back("term '" + low +
                             "' on both lists; keeping it on the blocklist");
      continue;
    }
    lex.allowlist.insert(std::move(low));
  }
  return lex;
}

namespace {

std::vector<std::string> read_terms(const std::filesystem::path& path) {
  std::vector<std::string> terms;
  for (std::string& line : read_lines(path)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() &&
           std::isspace(static_cast<unsigned char>(line[start])))
      ++start;
    if (start < line.size()) terms.push_back(line.substr(start));
  }
  return terms;
}

}  // namespace

Lexicons Lexicons::load(const std::filesystem::path& blocklist_path,
                        const std::filesystem::path& allowlist_path) {
  return from_terms(read_terms(blocklist_path), read_terms(allowlist_path));
}

const Lexicons& Lexicons::builtin() {
  static const Lexicons lex = [] {
    std::vector<std::string> block;
    block.insert(block.end(), gen_vocab::kFirstNames.begin(),
                 gen_vocab::kFirstNames.end());
    block.insert(block.end(), gen_vocab::kLastNames.begin(),
                 gen_vocab::kLastNames.end());
    return from_terms(std::move(block), gen_vocab::kAllowlistTerms);
  }();
  return lex;
}

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_time_token(const std::string& t) {
  auto digits2 = [](std::string_view s) {
    return s.size() == 2 && is_ascii_digit(s[0]) && is_ascii_digit(s[1]);
  };
  if (t.size() == 5)
    return digits2(std::string_view(t).substr(0, 2)) && t[2] == ':' &&
           digits2(std::string_view(t).substr(3, 2));
  if (t.size() == 8)
    return digits2(std::string_view(t).substr(0, 2)) && t[2] == ':' &&
           digits2(std::string_view(t).substr(3, 2)) && t[5] == ':' &&
           digits2(std::string_view(t).substr(6, 2));
  return false;
}

bool is_date_token(const std::string& t) { return parse_date(t).has_value(); }

bool is_phone_token(const std::string& t) {
  // DDD-DDD-DDDD
  return t.size() == 12 && all_digits(std::string_view(t).substr(0, 3)) &&
         t[3] == '-' && all_digits(std::string_view(t).substr(4, 3)) &&
         t[7] == '-' && all_digits(std::string_view(t).substr(8, 4));
}

bool is_phone_tail(const std::string& t) {
  // DDD-DDDD after a parenthesized area code
  return t.size() == 8 && all_digits(std::string_view(t).substr(0, 3)) &&
         t[3] == '-' && all_digits(std::string_view(t).substr(4, 4));
}

bool is_zip_token(const std::string& t) { return valid_zip(t); }

bool is_mrn_token(const std::string& t) { return t.size() >= 6 && all_digits(t); }

bool is_alpha_token(const std::string& t) {
  if (t.empty()) return false;
  for (char c : t)
    if (std::isalpha(static_cast<unsigned char>(c)) == 0) return false;
  return true;
}

bool is_street_suffix(const std::string& t) {
  static const std::set<std::string> suffixes = {
      "ave", "avenue", "st", "street", "blvd", "boulevard", "rd",  "road",
      "ln",  "lane",   "dr", "drive",  "ct",   "court",     "pl",  "place",
      "way"};
  return suffixes.count(lowercase(t)) != 0;
}

bool is_unit_keyword(const std::string& t) {
  static const std::set<std::string> keywords = {"apt", "unit", "ste", "suite",
                                                 "box"};
  return keywords.count(lowercase(t)) != 0;
}

bool has_digit(const std::string& t) {
  for (char c : t)
    if (is_ascii_digit(c)) return true;
  return false;
}

bool is_capitalized(const std::string& t) {
  return !t.empty() && t[0] >= 'A' && t[0] <= 'Z';
}

// Pattern match starting at token i; returns the span end or 0.
std::size_t match_pattern(const std::vector<std::string>& tok, std::size_t i,
                          PhiCategory& category) {
  const std::size_t n = tok.size();
  if (is_date_token(tok[i])) {
    category = PhiCategory::DATE;
    return (i + 1 < n && is_time_token(tok[i + 1])) ? i + 2 : i + 1;
  }
  if (tok[i] == "(" && i + 3 < n && tok[i + 1].size() == 3 &&
      all_digits(tok[i + 1]) && tok[i + 2] == ")" && is_phone_tail(tok[i + 3])) {
    category = PhiCategory::PHONE;
    return i + 4;
  }
  if (is_phone_token(tok[i])) {
    category = PhiCategory::PHONE;
    return i + 1;
  }
  if (is_zip_token(tok[i])) {
    category = PhiCategory::ZIP;
    return i + 1;
  }
  if (is_mrn_token(tok[i])) {
    category = PhiCategory::MRN;
    return i + 1;
  }
  if (tok[i].size() <= 5 && all_digits(tok[i])) {
    // house number followed by up to three street words ending in a suffix
    std::size_t j = i + 1;
    for (; j < n && j <= i + 3; ++j) {
      if (!is_alpha_token(tok[j])) break;
      if (is_street_suffix(tok[j]) && j > i + 1) {
        category = PhiCategory::ADDRESS;
        return j + 1;
      }
    }
  }
  if (is_unit_keyword(tok[i]) && i + 1 < n && has_digit(tok[i + 1])) {
    category = PhiCategory::ADDRESS;
    return i + 2;
  }
  return 0;
}

void merge_adjacent(std::vector<PhiSpan>& spans) {
  std::sort(spans.begin(), spans.end(), [](const PhiSpan& a, const PhiSpan& b) {
    return a.token_start < b.token_start;
  });
  std::vector<PhiSpan> merged;
  for (const PhiSpan& s : spans) {
    if (!merged.empty() && merged.back().category == s.category &&
        merged.back().token_end == s.token_start)
      merged.back().token_end = s.token_end;
    else
      merged.push_back(s);
  }
  spans = std::move(merged);
}

}  // namespace

std::vector<PhiSpan> tag_rule(const ClinicalNote& note, const Lexicons& lexicons) {
  const std::vector<std::string>& tok = note.tokens;
  std::vector<PhiSpan> spans;
  std::vector<char> covered(tok.size(), 0);

  // pattern pass; earlier rules win and the scan consumes whole spans
  for (std::size_t i = 0; i < tok.size();) {
    PhiCategory category = PhiCategory::OTHER;
    std::size_t end = match_pattern(tok, i, category);
    if (end == 0) {
      ++i;
      continue;
    }
    spans.push_back({i, end, category, std::nullopt});
    for (std::size_t k = i; k < end; ++k) covered[k] = 1;
    i = end;
  }

  // blocklist terms become NAME; the safety net tags remaining
  // capitalized tokens missing from the allowlist as OTHER
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (covered[i] || tok[i] == kMaskToken) continue;
    std::string low = lowercase(tok[i]);
    if (lexicons.blocklist.count(low)) {
      spans.push_back({i, i + 1, PhiCategory::NAME, std::nullopt});
      covered[i] = 1;
      continue;
    }
    if (is_capitalized(tok[i]) && !lexicons.allowlist.count(low)) {
      spans.push_back({i, i + 1, PhiCategory::OTHER, std::nullopt});
      covered[i] = 1;
    }
  }

  merge_adjacent(spans);
  return spans;
}

const ConfidenceTable& default_confidences() {
  static const ConfidenceTable table = [] {
    ConfidenceTable t{};
    t[static_cast<std::size_t>(PhiCategory::MRN)] = 0.99;
    t[static_cast<std::size_t>(PhiCategory::DATE)] = 0.95;
    t[static_cast<std::size_t>(PhiCategory::PHONE)] = 0.92;
    t[static_cast<std::size_t>(PhiCategory::ZIP)] = 0.90;
    t[static_cast<std::size_t>(PhiCategory::NAME)] = 0.85;
    t[static_cast<std::size_t>(PhiCategory::ADDRESS)] = 0.80;
    t[static_cast<std::size_t>(PhiCategory::CITY)] = 0.70;
    t[static_cast<std::size_t>(PhiCategory::STATE)] = 0.60;
    t[static_cast<std::size_t>(PhiCategory::OTHER)] = 0.40;
    return t;
  }();
  return table;
}

std::vector<PhiSpan> tag_scored(const ClinicalNote& note, const Lexicons& lexicons,
                                const ConfidenceTable& table) {
  std::vector<PhiSpan> spans = tag_rule(note, lexicons);
  for (PhiSpan& s : spans)
    s.confidence = table[static_cast<std::size_t>(s.category)];
  return spans;
}

namespace {

void validate_spans(const std::vector<PhiSpan>& spans, std::size_t token_count) {
  std::vector<PhiSpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end(), [](const PhiSpan& a, const PhiSpan& b) {
    return a.token_start < b.token_start;
  });
  std::size_t prev_end = 0;
  for (const PhiSpan& s : sorted) {
    if (s.token_start >= s.token_end || s.token_end > token_count)
      throw std::invalid_argument("span outside note token range");
    if (s.token_start < prev_end)
      throw std::invalid_argument("overlapping spans");
    prev_end = s.token_end;
  }
}

}  // namespace

MaskedNote mask(const ClinicalNote& note, const std::vector<PhiSpan>& spans,
                double requested_fraction, MaskOrder order, std::uint64_t seed) {
  if (requested_fraction < 0.0 || requested_fraction > 1.0)
    throw std::invalid_argument("requested_fraction outside [0,1]");
  const std::size_t token_count = note.tokens.size();
  validate_spans(spans, token_count);

  std::vector<std::size_t> candidates;
  if (order == MaskOrder::confidence_desc) {
    for (const PhiSpan& s : spans)
      if (!s.confidence)
        throw std::invalid_argument(
            "confidence_desc order requires scored spans");
    std::vector<PhiSpan> by_conf = spans;
    std::sort(by_conf.begin(), by_conf.end(),
              [](const PhiSpan& a, const PhiSpan& b) {
                if (*a.confidence != *b.confidence)
                  return *a.confidence > *b.confidence;
                return a.token_start < b.token_start;
              });
    for (const PhiSpan& s : by_conf)
      for (std::size_t t = s.token_start; t < s.token_end; ++t)
        candidates.push_back(t);
  } else {
    for (const PhiSpan& s : spans)
      for (std::size_t t = s.token_start; t < s.token_end; ++t)
        candidates.push_back(t);
    std::sort(candidates.begin(), candidates.end());
    Rng rng(derive_seed(seed, "mask-order"));
    rng.shuffle(candidates);
  }

  const auto budget = static_cast<std::size_t>(
      std::llround(requested_fraction * static_cast<double>(token_count)));
  const std::size_t take = std::min(budget, candidates.size());

  MaskedNote out;
  out.note_id = note.note_id;
  out.requested_fraction = requested_fraction;
  out.masked_token_indices.assign(candidates.begin(),
                                  candidates.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(out.masked_token_indices.begin(), out.masked_token_indices.end());
  out.achieved_fraction =
      token_count == 0 ? 0.0
                       : static_cast<double>(take) / static_cast<double>(token_count);

  // splice "*****" over the chosen tokens' byte ranges
  std::vector<TokenSpan> token_spans = tokenize_spans(note.text);
  std::string& text = out.masked_text;
  std::size_t cursor = 0;
  for (std::size_t t : out.masked_token_indices) {
    const TokenSpan& ts = token_spans[t];
    text.append(note.text, cursor, ts.begin - cursor);
    text.append(kMaskToken);
    cursor = ts.end;
  }
  text.append(note.text, cursor, note.text.size() - cursor);
  return out;
}

double achieved_fraction(const MaskedNote& masked) {
  std::size_t count = tokenize_spans(masked.masked_text).size();
  if (count == 0) return 0.0;
  return static_cast<double>(masked.masked_token_indices.size()) /
         static_cast<double>(count);
}

std::vector<PhiSpan> full_cover_spans(const ClinicalNote& note) {
  if (note.tokens.empty()) return {};
  return {{0, note.tokens.size(), PhiCategory::OTHER, 1.0}};
}

std::string spans_to_jsonl(const std::string& note_id,
                           const std::vector<PhiSpan>& spans) {
  std::string out;
  for (const PhiSpan& s : spans) {
    nlohmann::json j;
    j["note_id"] = note_id;
    j["token_start"] = s.token_start;
    j["token_end"] = s.token_end;
    j["category"] = std::string(to_string(s.category));
    if (s.confidence) j["confidence"] = *s.confidence;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace reidaudit
