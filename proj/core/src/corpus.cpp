#include "reidaudit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "gen_vocab.hpp"
#include "reidaudit/io.hpp"
#include "reidaudit/rng.hpp"
#include "reidaudit/text.hpp"

namespace reidaudit {

ClinicalNote make_note(std::string note_id, std::string patient_id,
                       std::string text) {
  ClinicalNote n;
  n.note_id = std::move(note_id);
  n.patient_id = std::move(patient_id);
  n.text = std::move(text);
  n.tokens = tokenize(n.text);
  return n;
}

namespace {

const std::vector<std::string> kNoteClasses = {
    "Telephone encounter", "Progress note", "Discharge summary",
    "Office visit", "Radiology report"};
const std::vector<std::string> kGenders = {"Female", "Male"};
const std::vector<std::string> kRaces = {"White", "Black or African American",
                                         "Asian", "Other"};
const std::vector<std::string> kEthnicities = {"Not Hispanic or Latino",
                                               "Hispanic or Latino"};

struct CityState {
  const char* city;
  const char* state;
};
const std::vector<CityState> kCities = {
    {"NEW YORK", "NY"},  {"BROOKLYN", "NY"}, {"BOSTON", "MA"},
    {"MIAMI", "FL"},     {"CHICAGO", "IL"},  {"HOUSTON", "TX"},
    {"SEATTLE", "WA"},   {"DENVER", "CO"},   {"ATLANTA", "GA"},
    {"PHOENIX", "AZ"},   {"PORTLAND", "OR"}, {"DETROIT", "MI"},
    {"BALTIMORE", "MD"}, {"OAKLAND", "CA"},  {"MEMPHIS", "TN"},
    {"TUCSON", "AZ"}};

const std::vector<std::string> kStreetNames = {
    "ETHAN", "MAPLE", "CEDAR",  "HUDSON",   "LENOX",  "FRANKLIN",
    "WILLOW", "SPRUCE", "HARRISON", "MONROE", "GRAND",  "LAUREL"};
const std::vector<std::string> kStreetSuffixes = {"AVE", "ST", "BLVD",
                                                  "RD",  "LN", "DR"};

// Filler clinical prose. Sentence-initial words are carried by the
// built-in allowlist so the safety net leaves shared prose alone.
const std::vector<std::string> kFillerSentences = {
    "Patient reports intermittent chest discomfort with exertion over the past week.",
    "Denies fever, chills, or recent weight change.",
    "Lungs clear to auscultation bilaterally with no wheezes or crackles.",
    "Cardiac exam reveals regular rate and rhythm without murmur.",
    "Continue current medication regimen and follow up in two weeks.",
    "Blood pressure well controlled on current therapy.",
    "Patient ambulates without assistance and tolerates activity well.",
    "Mild bilateral lower extremity edema noted on examination.",
    "Echocardiogram shows preserved ejection fraction with mild diastolic dysfunction.",
    "Labs reviewed and discussed with the patient in detail.",
    "Sodium restriction and daily weights advised at discharge.",
    "No acute distress observed during the visit.",
    "Follow up scheduled with cardiology for further evaluation.",
    "Medication list reconciled and updated in the chart.",
    "Patient counseled on diet, exercise, and smoking cessation.",
    "Symptoms improved since the last clinic visit.",
    "Renal function stable on repeat laboratory testing.",
    "Plan to titrate diuretic dose as tolerated.",
    "Telemetry monitoring discontinued prior to discharge.",
    "Orthopnea and paroxysmal nocturnal dyspnea denied.",
    "Appetite fair and fluid intake within recommended limits.",
    "Wound site clean, dry, and intact without erythema.",
    "Gait steady with no focal neurological deficits appreciated.",
    "Chest radiograph without acute cardiopulmonary process."};

// Two header-style template variants per schema field, "{}" is the value.
const std::array<std::array<const char*, 2>, kProfileFieldCount> kFieldLines = {{
    {"Encounter date {}.", "Visit recorded {}."},
    {"Note class: {}.", "Encounter type: {}."},
    {"MRN: {}.", "Medical record number {}."},
    {"Gender: {}.", "Sex: {}."},
    {"DOB: {}.", "Date of birth {}."},
    {"Race: {}.", "Race listed as {}."},
    {"Ethnicity: {}.", "Ethnicity recorded as {}."},
    {"Date of death {}.", "Deceased {}."},
    {"Death recorded {}.", "Time of death {}."},
    {"Address: {}.", "Resides at {}."},
    {"Address line two {}.", "Secondary address {}."},
    {"City: {}.", "Lives in {}."},
    {"State: {}.", "State code {}."},
    {"Zip: {}.", "Postal code {}."},
}};

std::string fill_template(const char* tmpl, const std::string& value) {
  std::string out = tmpl;
  std::size_t pos = out.find("{}");
  out.replace(pos, 2, value);
  return out;
}

Date random_date(Rng& rng, int year_lo, int year_hi) {
  Date d;
  d.year = static_cast<int>(rng.range(year_lo, year_hi));
  d.month = static_cast<int>(rng.range(1, 12));
  d.day = static_cast<int>(rng.range(1, 28));
  return d;
}

std::string random_time(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d",
                static_cast<int>(rng.range(0, 23)),
                static_cast<int>(rng.range(0, 59)),
                static_cast<int>(rng.range(0, 59)));
  return buf;
}

// Shared value pools drawn once per corpus. Field values repeat across
// patients the way real demographics do, so identity rests on value
// combinations (plus the unique MRN), not on every field being unique.
struct ValuePools {
  std::vector<Date> birth_dates;
  std::vector<std::string> note_datetimes;
  std::vector<Date> death_dates;
  std::vector<std::string> addresses_1;
  std::vector<std::string> addresses_2;
  std::vector<std::string> zips;

  ValuePools(const GeneratorConfig& cfg, Rng& rng) {
    for (int i = 0; i < cfg.pool_birth_dates; ++i)
      birth_dates.push_back(random_date(rng, 1925, 2000));
    for (int i = 0; i < cfg.pool_note_datetimes; ++i)
      note_datetimes.push_back(format_date_iso(random_date(rng, 2008, 2018)) +
                               " " + random_time(rng));
    for (int i = 0; i < cfg.pool_death_dates; ++i)
      death_dates.push_back(random_date(rng, 2001, 2018));
    for (int i = 0; i < cfg.pool_addresses; ++i)
      addresses_1.push_back(std::to_string(rng.range(1, 9999)) + " " +
                            rng.pick(kStreetNames) + " " +
                            rng.pick(kStreetSuffixes));
    for (int i = 0; i < cfg.pool_addresses; ++i) {
      switch (rng.index(3)) {
        case 0:
          addresses_2.push_back("APT " + std::to_string(rng.range(1, 99)) +
                                static_cast<char>('A' + rng.index(6)));
          break;
        case 1:
          addresses_2.push_back("UNIT " + std::to_string(rng.range(1, 999)));
          break;
        default:
          addresses_2.push_back("STE " + std::to_string(rng.range(100, 999)));
          break;
      }
    }
    for (int i = 0; i < cfg.pool_zips; ++i) {
      std::string zip = std::to_string(rng.range(10000, 99999));
      if (rng.bernoulli(0.5)) {
        char plus4[8];
        std::snprintf(plus4, sizeof(plus4), "-%04d",
                      static_cast<int>(rng.range(0, 9999)));
        zip += plus4;
      }
      zips.push_back(zip);
    }
  }
};

std::string random_phone(Rng& rng) {
  int a = static_cast<int>(rng.range(200, 999));
  int b = static_cast<int>(rng.range(200, 999));
  int c = static_cast<int>(rng.range(0, 9999));
  char buf[32];
  if (rng.bernoulli(0.5))
    std::snprintf(buf, sizeof(buf), "%03d-%03d-%04d", a, b, c);
  else
    std::snprintf(buf, sizeof(buf), "(%03d) %03d-%04d", a, b, c);
  return buf;
}

int age_in_years(const Date& birth, const Date& ref) {
  int age = ref.year - birth.year;
  if (ref.month < birth.month || (ref.month == birth.month && ref.day < birth.day))
    --age;
  return age;
}

// Reference date used for the prose age mention.
constexpr Date kAgeReference{2018, 7, 1};

PatientProfile generate_profile(int index, const GeneratorConfig& cfg,
                                const ValuePools& pools, Rng& rng,
                                std::set<std::string>& used_mrns) {
  PatientProfile p;
  char id[16];
  std::snprintf(id, sizeof(id), "P%06d", index);
  p.patient_id = id;

  std::array<bool, kProfileFieldCount> present{};
  for (std::size_t i = 0; i < kProfileFieldCount; ++i)
    present[i] = rng.bernoulli(cfg.presence[i]);

  std::optional<Date> birth;
  if (present[4]) {
    birth = pools.birth_dates[rng.index(pools.birth_dates.size())];
    p.date_of_birth = rng.bernoulli(0.5) ? format_date_iso(*birth)
                                         : format_date_us(*birth);
  }
  if (present[0])
    p.note_datetime = pools.note_datetimes[rng.index(pools.note_datetimes.size())];
  if (present[1]) p.note_class = rng.pick(kNoteClasses);
  if (present[2]) {
    std::string mrn;
    do {
      mrn = std::to_string(rng.range(1000000, 9999999));
    } while (!used_mrns.insert(mrn).second);
    p.mrn = mrn;
  }
  if (present[3]) p.gender = rng.pick(kGenders);
  if (present[5]) p.race = rng.pick(kRaces);
  if (present[6]) p.ethnicity = rng.pick(kEthnicities);

  std::optional<Date> death;
  if (present[7] || present[8]) {
    // resample until the death date does not precede a known birth date
    std::size_t tries = 0;
    do {
      death = pools.death_dates[rng.index(pools.death_dates.size())];
      ++tries;
    } while (birth && death->year <= birth->year && tries < 64);
    if (birth && death->year <= birth->year) death = Date{2018, 12, 28};
  }
  if (present[7])
    p.death_date = rng.bernoulli(0.5) ? format_date_iso(*death)
                                      : format_date_us(*death);
  if (present[8])
    p.death_datetime = format_date_iso(*death) + " " + random_time(rng);

  if (present[9]) p.address_1 = pools.addresses_1[rng.index(pools.addresses_1.size())];
  if (present[10]) p.address_2 = pools.addresses_2[rng.index(pools.addresses_2.size())];
  const CityState& cs = kCities[rng.index(kCities.size())];
  if (present[11]) p.city = cs.city;
  if (present[12]) p.state = cs.state;
  if (present[13]) p.zip = pools.zips[rng.index(pools.zips.size())];
  return p;
}

ClinicalNote generate_note(const PatientProfile& p, int note_index,
                           const GeneratorConfig& cfg, Rng& rng) {
  std::vector<std::size_t> populated;
  for (std::size_t i = 0; i < kProfileFieldCount; ++i)
    if (profile_field(p, i).has_value()) populated.push_back(i);

  std::vector<std::size_t> planted, skipped;
  for (std::size_t f : populated)
    (rng.bernoulli(cfg.plant_prob) ? planted : skipped).push_back(f);
  const std::size_t floor_planted =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.min_planted, 0)),
                            populated.size());
  rng.shuffle(skipped);
  while (planted.size() < floor_planted && !skipped.empty()) {
    planted.push_back(skipped.back());
    skipped.pop_back();
  }
  std::sort(planted.begin(), planted.end());

  ClinicalNote note;
  std::vector<std::string> lines;
  const int repeats = std::clamp(cfg.plant_repeats, 1, 2);
  for (std::size_t f : planted) {
    const std::string& value = *profile_field(p, f);
    std::size_t first = rng.index(2);
    for (int r = 0; r < repeats; ++r)
      lines.push_back(fill_template(kFieldLines[f][(first + r) % 2], value));
    note.plants.push_back({std::string(profile_field_names()[f]), value});
  }

  // Lowercase age/gender/city prose. Mirrors quasi-identifiers that sit
  // in free text where pattern- and capitalization-based tagging cannot
  // see them.
  if (rng.bernoulli(cfg.quasi_prob) &&
      (p.date_of_birth || p.gender || p.city)) {
    auto lower = [](std::string s) {
      for (char& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return s;
    };
    std::string line = "The patient is";
    if (p.date_of_birth) {
      Date birth = *parse_date(*p.date_of_birth);
      line += " aged " + std::to_string(age_in_years(birth, kAgeReference)) +
              " years";
      if (p.gender || p.city) line += ",";
    }
    if (p.gender) line += " " + lower(*p.gender);
    if (p.city) line += std::string(p.gender ? "," : "") + " from " + lower(*p.city);
    line += ", and presents for routine follow up.";
    lines.push_back(line);
  }

  if (rng.bernoulli(cfg.phone_prob)) {
    static const std::vector<std::string> phone_lines = {
        "Contact number {}.", "Office phone {}.", "Fax {}."};
    std::string phone = random_phone(rng);
    lines.push_back(fill_template(rng.pick(phone_lines).c_str(), phone));
    note.plants.push_back({"phone", phone});
  }

  if (rng.bernoulli(cfg.name_prob)) {
    std::string who = rng.pick(gen_vocab::kFirstNames) + " " + rng.pick(gen_vocab::kLastNames);
    lines.push_back(rng.bernoulli(0.5) ? "Seen by Dr. " + who + " in clinic."
                                       : "Reviewed by Dr. " + who + ".");
  }

  const int pool = std::clamp<int>(cfg.template_pool, 1,
                                   static_cast<int>(kFillerSentences.size()));
  const int fillers =
      static_cast<int>(rng.range(cfg.filler_min, std::max(cfg.filler_min, cfg.filler_max)));
  for (int i = 0; i < fillers; ++i)
    lines.push_back(kFillerSentences[rng.index(static_cast<std::size_t>(pool))]);

  rng.shuffle(lines);

  std::string text;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) text.push_back(' ');
    text.append(lines[i]);
  }

  char nid[32];
  std::snprintf(nid, sizeof(nid), "%s-N%02d", p.patient_id.c_str(), note_index);
  note.note_id = nid;
  note.patient_id = p.patient_id;
  note.text = std::move(text);
  note.tokens = tokenize(note.text);
  return note;
}

}  // namespace

Corpus generate_population(int n_patients, int notes_per_patient,
                           const GeneratorConfig& cfg, std::uint64_t seed) {
  if (n_patients < 1) throw std::invalid_argument("n_patients must be >= 1");
  if (notes_per_patient < 1)
    throw std::invalid_argument("notes_per_patient must be >= 1");
  for (double pr : cfg.presence)
    if (pr < 0.0 || pr > 1.0)
      throw std::invalid_argument("presence probability outside [0,1]");
  for (double pr : {cfg.plant_prob, cfg.quasi_prob, cfg.phone_prob, cfg.name_prob})
    if (pr < 0.0 || pr > 1.0)
      throw std::invalid_argument("probability outside [0,1]");

  Corpus corpus;
  corpus.seed = seed;
  Rng rng(derive_seed(seed, "population"));
  ValuePools pools(cfg, rng);
  std::set<std::string> used_mrns;
  corpus.profiles.reserve(static_cast<std::size_t>(n_patients));
  for (int i = 0; i < n_patients; ++i)
    corpus.profiles.push_back(generate_profile(i, cfg, pools, rng, used_mrns));
  for (const PatientProfile& p : corpus.profiles)
    for (int j = 0; j < notes_per_patient; ++j)
      corpus.notes.push_back(generate_note(p, j, cfg, rng));
  return corpus;
}

std::string profiles_to_csv(const std::vector<PatientProfile>& profiles) {
  std::vector<std::string> header = {"patient_id"};
  for (std::string_view n : profile_field_names()) header.emplace_back(n);
  std::string out = join_csv_row(header) + "\n";
  for (const PatientProfile& p : profiles) {
    std::vector<std::string> row = {p.patient_id};
    for (std::size_t i = 0; i < kProfileFieldCount; ++i)
      row.push_back(profile_field(p, i).value_or(""));
    out += join_csv_row(row) + "\n";
  }
  return out;
}

std::string notes_to_jsonl(const std::vector<ClinicalNote>& notes) {
  std::string out;
  for (const ClinicalNote& n : notes) {
    nlohmann::json j;
    j["note_id"] = n.note_id;
    j["patient_id"] = n.patient_id;
    j["text"] = n.text;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

void write_profiles_csv(const std::filesystem::path& path,
                        const std::vector<PatientProfile>& profiles) {
  atomic_write(path, profiles_to_csv(profiles));
}

void write_notes_jsonl(const std::filesystem::path& path,
                       const std::vector<ClinicalNote>& notes) {
  atomic_write(path, notes_to_jsonl(notes));
}

std::vector<PatientProfile> ingest_profiles(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path.string() + ": missing header row");

  std::vector<std::string> header = split_csv_row(lines[0]);
  std::vector<int> column_field(header.size(), -2);  // -2 = patient_id
  bool saw_patient_id = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "patient_id") {
      saw_patient_id = true;
      column_field[c] = -2;
      continue;
    }
    int f = profile_field_index(header[c]);
    if (f < 0)
      throw std::runtime_error(path.string() + ": unknown column '" + header[c] + "'");
    column_field[c] = f;
  }
  if (!saw_patient_id)
    throw std::runtime_error(path.string() + ": header lacks patient_id");

  std::vector<PatientProfile> profiles;
  std::unordered_set<std::string> seen_ids;
  std::vector<std::string> problems;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    std::vector<std::string> row = split_csv_row(lines[r]);
    if (row.size() != header.size()) {
      problems.push_back("row " + std::to_string(r + 1) + ": expected " +
                         std::to_string(header.size()) + " cells, got " +
                         std::to_string(row.size()));
      continue;
    }
    PatientProfile p;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (header[c] == "patient_id")
        p.patient_id = row[c];
      else if (!row[c].empty())
        profile_field(p, static_cast<std::size_t>(column_field[c])) = row[c];
    }
    if (!seen_ids.insert(p.patient_id).second)
      problems.push_back("row " + std::to_string(r + 1) +
                         ": duplicate patient_id '" + p.patient_id + "'");
    for (const std::string& v : profile_violations(p))
      problems.push_back("row " + std::to_string(r + 1) + ": " + v);
    profiles.push_back(std::move(p));
  }
  if (!problems.empty()) {
    std::string msg = path.string() + ": invalid profiles";
    for (const std::string& pr : problems) msg += "\n  " + pr;
    throw std::runtime_error(msg);
  }
  return profiles;
}

namespace {

std::vector<ClinicalNote> ingest_notes_impl(
    const std::filesystem::path& path,
    const std::unordered_set<std::string>* known) {

  std::vector<ClinicalNote> notes;
  std::unordered_set<std::string> seen_note_ids;
  std::vector<std::string> problems;
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    nlohmann::json j = nlohmann::json::parse(lines[r], nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("note_id") ||
        !j.contains("patient_id") || !j.contains("text") ||
        !j["note_id"].is_string() || !j["patient_id"].is_string() ||
        !j["text"].is_string()) {
      problems.push_back("row " + std::to_string(r + 1) +
                         ": not an object with string note_id/patient_id/text");
      continue;
    }
    std::string nid = j["note_id"], pid = j["patient_id"];
    if (known != nullptr && !known->count(pid))
      problems.push_back("row " + std::to_string(r + 1) +
                         ": unknown patient_id '" + pid + "'");
    if (!seen_note_ids.insert(nid).second)
      problems.push_back("row " + std::to_string(r + 1) + ": duplicate note_id '" +
                         nid + "'");
    notes.push_back(make_note(std::move(nid), std::move(pid), j["text"]));
  }
  if (!problems.empty()) {
    std::string msg = path.string() + ": invalid notes";
    for (const std::string& pr : problems) msg += "\n  " + pr;
    throw std::runtime_error(msg);
  }
  return notes;
}

}  // namespace

std::vector<ClinicalNote> ingest_notes(const std::filesystem::path& path,
                                       const std::vector<PatientProfile>& profiles) {
  std::unordered_set<std::string> known;
  for (const PatientProfile& p : profiles) known.insert(p.patient_id);
  return ingest_notes_impl(path, &known);
}

std::vector<ClinicalNote> ingest_notes(const std::filesystem::path& path) {
  return ingest_notes_impl(path, nullptr);
}

void validate_corpus(const Corpus& corpus) {
  std::unordered_set<std::string> ids;
  for (const PatientProfile& p : corpus.profiles)
    if (!ids.insert(p.patient_id).second)
      throw std::runtime_error("duplicate patient_id '" + p.patient_id + "'");
  std::unordered_set<std::string> with_notes;
  for (const ClinicalNote& n : corpus.notes) {
    if (!ids.count(n.patient_id))
      throw std::runtime_error("note '" + n.note_id +
                               "' references unknown patient_id '" +
                               n.patient_id + "'");
    with_notes.insert(n.patient_id);
  }
  for (const PatientProfile& p : corpus.profiles)
    if (!with_notes.count(p.patient_id))
      throw std::runtime_error("patient '" + p.patient_id + "' has no notes");
}

namespace {

// Normalized word stream of a token prefix; one flag per word marks words
// from mask tokens, which never participate in a match.
struct WordStream {
  std::vector<std::string> words;
  std::vector<char> masked;
};

WordStream word_stream(const std::vector<std::string>& tokens,
                       std::size_t token_limit) {
  WordStream s;
  const std::size_t n = std::min(tokens.size(), token_limit);
  for (std::size_t t = 0; t < n; ++t) {
    if (tokens[t] == kMaskToken) {
      s.words.emplace_back();
      s.masked.push_back(1);
      continue;
    }
    for (std::string& w : normalize_words(tokens[t])) {
      s.words.push_back(std::move(w));
      s.masked.push_back(0);
    }
  }
  return s;
}

bool stream_contains(const WordStream& s, const std::vector<std::string>& value) {
  if (value.empty() || s.words.size() < value.size()) return false;
  for (std::size_t i = 0; i + value.size() <= s.words.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < value.size(); ++j) {
      if (s.masked[i + j] || s.words[i + j] != value[j]) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

namespace detail {

// Normalized word sequences a field value may appear as. Dates (and the
// date part of timestamps) match under both generated surface formats.
std::vector<std::vector<std::string>> value_variants(const std::string& value) {
  std::vector<std::vector<std::string>> out;
  std::string date_part = value, time_part;
  std::size_t space = value.find(' ');
  if (space != std::string::npos) {
    date_part = value.substr(0, space);
    time_part = value.substr(space + 1);
  }
  if (auto d = parse_date(date_part)) {
    std::vector<std::string> tail =
        time_part.empty() ? std::vector<std::string>{} : normalize_words(time_part);
    for (const std::string& surface : {format_date_iso(*d), format_date_us(*d)}) {
      std::vector<std::string> words = normalize_words(surface);
      words.insert(words.end(), tail.begin(), tail.end());
      out.push_back(std::move(words));
    }
    return out;
  }
  out.push_back(normalize_words(value));
  return out;
}

bool value_in_tokens(const std::vector<std::string>& tokens,
                     std::size_t token_limit, const std::string& value) {
  WordStream s = word_stream(tokens, token_limit);
  for (const auto& variant : value_variants(value))
    if (stream_contains(s, variant)) return true;
  return false;
}

}  // namespace detail

int relevancy(const ClinicalNote& note, const PatientProfile& profile,
              int prefix_tokens) {
  if (prefix_tokens < 1) throw std::invalid_argument("prefix_tokens must be >= 1");
  WordStream s = word_stream(note.tokens, static_cast<std::size_t>(prefix_tokens));
  int count = 0;
  for (std::size_t f = 0; f < kProfileFieldCount; ++f) {
    const auto& value = profile_field(profile, f);
    if (!value) continue;
    for (const auto& variant : detail::value_variants(*value)) {
      if (stream_contains(s, variant)) {
        ++count;
        break;
      }
    }
  }
  return count;
}

std::map<std::string, std::string> select_note_per_patient(const Corpus& corpus,
                                                           int prefix_tokens) {
  std::unordered_map<std::string, const PatientProfile*> by_id;
  for (const PatientProfile& p : corpus.profiles) by_id[p.patient_id] = &p;

  std::map<std::string, std::pair<int, std::string>> best;  // pid -> (rel, nid)
  for (const ClinicalNote& n : corpus.notes) {
    auto it = by_id.find(n.patient_id);
    if (it == by_id.end())
      throw std::runtime_error("note '" + n.note_id + "' has no profile");
    int rel = relevancy(n, *it->second, prefix_tokens);
    auto [slot, inserted] = best.try_emplace(n.patient_id, rel, n.note_id);
    if (!inserted) {
      auto& [best_rel, best_id] = slot->second;
      if (rel > best_rel || (rel == best_rel && n.note_id < best_id)) {
        best_rel = rel;
        best_id = n.note_id;
      }
    }
  }
  std::map<std::string, std::string> out;
  for (auto& [pid, rel_id] : best) out[pid] = rel_id.second;
  return out;
}

SplitAssignment split_corpus(const Corpus& corpus,
                             const std::array<double, 3>& ratios,
                             std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  for (double r : ratios)
    if (r <= 0.0) throw std::invalid_argument("split ratios must be positive");
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  const std::size_t n = corpus.profiles.size();
  if (n < 3) throw std::invalid_argument("fewer patients than splits");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const PatientProfile& p : corpus.profiles) ids.push_back(p.patient_id);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(ids);

  // Largest-remainder apportionment; remainder ties go to the earlier split.
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a < b;
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];

  SplitAssignment split;
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::string> out(ids.begin() + static_cast<std::ptrdiff_t>(from),
                                 ids.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(out.begin(), out.end());
    return out;
  };
  split.train = take(0, sizes[0]);
  split.validation = take(sizes[0], sizes[1]);
  split.test = take(sizes[0] + sizes[1], sizes[2]);
  return split;
}

}  // namespace reidaudit
