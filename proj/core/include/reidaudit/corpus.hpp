#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "reidaudit/profile.hpp"

namespace reidaudit {

// Where the generator put an identifier. `field` is a profile schema name,
// or "phone" for the free-floating phone numbers notes carry. Generator
// metadata only; ingested notes have no plants.
struct PlantRecord {
  std::string field;
  std::string value;
};

struct ClinicalNote {
  std::string note_id;
  std::string patient_id;
  std::string text;
  std::vector<std::string> tokens;  // always tokenize(text)
  std::vector<PlantRecord> plants;
};

// Builds a note with tokens derived from the text.
ClinicalNote make_note(std::string note_id, std::string patient_id,
                       std::string text);

struct Corpus {
  std::vector<PatientProfile> profiles;
  std::vector<ClinicalNote> notes;
  std::uint64_t seed = 0;
};

struct SplitAssignment {
  std::vector<std::string> train;       // sorted patient ids
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct GeneratorConfig {
  // Presence probability per optional field, schema order.
  std::array<double, kProfileFieldCount> presence = [] {
    std::array<double, kProfileFieldCount> a{};
    a.fill(0.7);
    return a;
  }();
  int notes_per_patient = 3;
  int template_pool = 20;      // filler sentences drawn from this many
  int filler_min = 3;          // filler sentences per note
  int filler_max = 5;
  // Value pool sizes; fields repeat across patients like real demographics.
  int pool_birth_dates = 30;
  int pool_note_datetimes = 20;
  int pool_death_dates = 12;
  int pool_addresses = 20;
  int pool_zips = 20;
  double plant_prob = 0.9;     // chance a populated field is planted in a note
  int min_planted = 3;         // floor on planted fields (capped by populated)
  int plant_repeats = 2;       // template lines per planted field (1 or 2)
  double quasi_prob = 0.4;     // chance of a lowercase age/gender/city prose line
  double phone_prob = 0.25;    // chance of a contact/fax phone line
  double name_prob = 0.25;     // chance of a physician-name line
};

// Deterministic synthetic population. Profiles follow the presence
// probabilities; note text interleaves filler prose with verbatim values
// of a per-note random subset of the patient's fields. MRNs are unique.
// Throws std::invalid_argument on bad parameters.
Corpus generate_population(int n_patients, int notes_per_patient,
                           const GeneratorConfig& cfg, std::uint64_t seed);

// CSV/JSONL ingestion with full invariant validation; errors name the
// offending row and field.
std::vector<PatientProfile> ingest_profiles(const std::filesystem::path& path);
std::vector<ClinicalNote> ingest_notes(const std::filesystem::path& path,
                                       const std::vector<PatientProfile>& profiles);
// Standalone note ingestion without the referential check, for tools that
// operate on notes alone.
std::vector<ClinicalNote> ingest_notes(const std::filesystem::path& path);

void write_profiles_csv(const std::filesystem::path& path,
                        const std::vector<PatientProfile>& profiles);
void write_notes_jsonl(const std::filesystem::path& path,
                       const std::vector<ClinicalNote>& notes);

std::string profiles_to_csv(const std::vector<PatientProfile>& profiles);
std::string notes_to_jsonl(const std::vector<ClinicalNote>& notes);

// Number of distinct populated profile fields whose normalized value
// occurs token-aligned within the first prefix_tokens tokens of the note.
int relevancy(const ClinicalNote& note, const PatientProfile& profile,
              int prefix_tokens);

// Per patient, the note maximizing relevancy at prefix_tokens; ties go to
// the smallest note_id.
std::map<std::string, std::string> select_note_per_patient(const Corpus& corpus,
                                                           int prefix_tokens);

// Seeded shuffle then largest-remainder partition by patient. Ratios must
// be positive and sum to 1 (1e-9 slack).
SplitAssignment split_corpus(const Corpus& corpus,
                             const std::array<double, 3>& ratios,
                             std::uint64_t seed);

// Referential and uniqueness checks; throws std::runtime_error naming the
// first violation.
void validate_corpus(const Corpus& corpus);

namespace detail {

// Normalized word sequences a field value may appear as; dates (and the
// date part of timestamps) produce both surface formats.
std::vector<std::vector<std::string>> value_variants(const std::string& value);

// Whether the value occurs token-aligned in the first token_limit tokens.
// Mask tokens never match.
bool value_in_tokens(const std::vector<std::string>& tokens,
                     std::size_t token_limit, const std::string& value);

}  // namespace detail

}  // namespace reidaudit
