#include "reidaudit/profile.hpp"

#include "reidaudit/text.hpp"

namespace reidaudit {

const std::array<std::string_view, kProfileFieldCount>& profile_field_names() {
  static const std::array<std::string_view, kProfileFieldCount> names = {
      "note_datetime", "note_class", "mrn",        "gender",
      "date_of_birth", "race",       "ethnicity",  "death_date",
      "death_datetime", "address_1", "address_2",  "city",
      "state",         "zip"};
  return names;
}

const std::optional<std::string>& profile_field(const PatientProfile& p,
                                                std::size_t index) {
  return profile_field(const_cast<PatientProfile&>(p), index);
}

std::optional<std::string>& profile_field(PatientProfile& p, std::size_t index) {
  switch (index) {
    case 0: return p.note_datetime;
    case 1: return p.note_class;
    case 2: return p.mrn;
    case 3: return p.gender;
    case 4: return p.date_of_birth;
    case 5: return p.race;
    case 6: return p.ethnicity;
    case 7: return p.death_date;
    case 8: return p.death_datetime;
    case 9: return p.address_1;
    case 10: return p.address_2;
    case 11: return p.city;
    case 12: return p.state;
    default: return p.zip;
  }
}

int profile_field_index(std::string_view name) {
  const auto& names = profile_field_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

std::size_t populated_field_count(const PatientProfile& p) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kProfileFieldCount; ++i)
    if (profile_field(p, i).has_value()) ++n;
  return n;
}

std::string serialize_profile(const PatientProfile& p) {
  std::string out;
  const auto& names = profile_field_names();
  for (std::size_t i = 0; i < kProfileFieldCount; ++i) {
    const auto& value = profile_field(p, i);
    if (!value) continue;
    if (!out.empty()) out.push_back('\n');
    out.append(names[i]);
    out.append(": ");
    out.append(*value);
  }
  return out;
}

bool valid_zip(std::string_view zip) {
  if (zip.size() == 5) return all_digits(zip);
  if (zip.size() == 10)
    return all_digits(zip.substr(0, 5)) && zip[5] == '-' && all_digits(zip.substr(6));
  return false;
}

std::vector<std::string> profile_violations(const PatientProfile& p) {
  std::vector<std::string> out;
  if (p.patient_id.empty()) out.push_back("patient_id: empty");
  if (p.zip && !valid_zip(*p.zip))
    out.push_back("zip: '" + *p.zip + "' is not DDDDD or DDDDD-DDDD");
  if (p.date_of_birth && p.death_date) {
    auto birth = parse_date(*p.date_of_birth);
    auto death = parse_date(*p.death_date);
    if (birth && death) {
      auto key = [](const Date& d) { return d.year * 10000 + d.month * 100 + d.day; };
      if (key(*death) < key(*birth))
        out.push_back("death_date: precedes date_of_birth");
    }
  }
  return out;
}

}  // namespace reidaudit
