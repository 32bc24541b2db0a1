#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reidaudit {

// Structured demographic record serving as the reidentification target.
// All identifier fields are optional; patient_id is the artifact key.
struct PatientProfile {
  std::string patient_id;
  std::optional<std::string> note_datetime;
  std::optional<std::string> note_class;
  std::optional<std::string> mrn;
  std::optional<std::string> gender;
  std::optional<std::string> date_of_birth;
  std::optional<std::string> race;
  std::optional<std::string> ethnicity;
  std::optional<std::string> death_date;
  std::optional<std::string> death_datetime;
  std::optional<std::string> address_1;
  std::optional<std::string> address_2;
  std::optional<std::string> city;
  std::optional<std::string> state;
  std::optional<std::string> zip;
};

inline constexpr std::size_t kProfileFieldCount = 14;

// Canonical schema order; also the column order of profiles.csv after
// patient_id.
const std::array<std::string_view, kProfileFieldCount>& profile_field_names();

const std::optional<std::string>& profile_field(const PatientProfile& p,
                                                std::size_t index);
std::optional<std::string>& profile_field(PatientProfile& p, std::size_t index);

// Index in schema order, or -1 for an unknown name.
int profile_field_index(std::string_view name);

std::size_t populated_field_count(const PatientProfile& p);

// One "name: value" line per populated field, schema order, '\n'
// separated, patient_id excluded. Canonical flattening fed to the
// profile encoder.
std::string serialize_profile(const PatientProfile& p);

bool valid_zip(std::string_view zip);  // DDDDD or DDDDD-DDDD

// Field-level violations ("zip: ...", "death_date: ..."); empty when valid.
std::vector<std::string> profile_violations(const PatientProfile& p);

}  // namespace reidaudit
