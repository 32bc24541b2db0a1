#include <doctest.h>

#include <filesystem>
#include <set>

#include "reidaudit/corpus.hpp"
#include "reidaudit/io.hpp"
#include "reidaudit/rng.hpp"
#include "reidaudit/text.hpp"

using namespace reidaudit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("reidaudit_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("generator honors presence extremes") {
  GeneratorConfig all;
  all.presence.fill(1.0);
  Corpus c = generate_population(3, 1, all, 7);
  REQUIRE(c.profiles.size() == 3);
  REQUIRE(c.notes.size() == 3);
  std::set<std::string> mrns;
  for (const PatientProfile& p : c.profiles) {
    CHECK(populated_field_count(p) == kProfileFieldCount);
    REQUIRE(p.mrn.has_value());
    CHECK(mrns.insert(*p.mrn).second);  // MRNs distinct
  }

  GeneratorConfig none;
  none.presence.fill(0.0);
  none.phone_prob = 0.0;
  none.name_prob = 0.0;
  none.quasi_prob = 0.0;
  Corpus empty = generate_population(1, 1, none, 7);
  CHECK(populated_field_count(empty.profiles[0]) == 0);
  CHECK_FALSE(empty.profiles[0].patient_id.empty());
  CHECK(empty.notes[0].plants.empty());
  // nothing but filler prose: no digits anywhere
  for (char ch : empty.notes[0].text) CHECK_FALSE(is_ascii_digit(ch));
}

TEST_CASE("generator determinism is byte-exact") {
  GeneratorConfig cfg;
  Corpus a = generate_population(100, 2, cfg, 7);
  Corpus b = generate_population(100, 2, cfg, 7);
  CHECK(profiles_to_csv(a.profiles) == profiles_to_csv(b.profiles));
  CHECK(notes_to_jsonl(a.notes) == notes_to_jsonl(b.notes));

  Corpus c = generate_population(100, 2, cfg, 8);
  CHECK(notes_to_jsonl(a.notes) != notes_to_jsonl(c.notes));
}

TEST_CASE("generator rejects bad parameters") {
  GeneratorConfig cfg;
  CHECK_THROWS_AS(generate_population(0, 1, cfg, 7), std::invalid_argument);
  CHECK_THROWS_AS(generate_population(1, 0, cfg, 7), std::invalid_argument);
  cfg.presence[0] = 1.5;
  CHECK_THROWS_AS(generate_population(1, 1, cfg, 7), std::invalid_argument);
}

TEST_CASE("planted values appear verbatim in the note text") {
  GeneratorConfig cfg;
  Corpus c = generate_population(50, 3, cfg, 11);
  for (const ClinicalNote& n : c.notes) {
    CHECK(n.plants.size() >= std::size_t(0));
    for (const PlantRecord& plant : n.plants)
      CHECK(n.text.find(plant.value) != std::string::npos);
  }
}

TEST_CASE("generated profiles satisfy the field invariants") {
  GeneratorConfig cfg;
  Corpus c = generate_population(200, 1, cfg, 3);
  for (const PatientProfile& p : c.profiles)
    CHECK(profile_violations(p).empty());
  validate_corpus(c);
}

TEST_CASE("note tokens always equal tokenize(text)") {
  GeneratorConfig cfg;
  Corpus c = generate_population(20, 2, cfg, 9);
  for (const ClinicalNote& n : c.notes) CHECK(n.tokens == tokenize(n.text));
}

TEST_CASE("csv/jsonl round trip through ingestion") {
  fs::path dir = temp_dir("roundtrip");
  GeneratorConfig cfg;
  Corpus c = generate_population(40, 2, cfg, 13);
  write_profiles_csv(dir / "profiles.csv", c.profiles);
  write_notes_jsonl(dir / "notes.jsonl", c.notes);

  auto profiles = ingest_profiles(dir / "profiles.csv");
  auto notes = ingest_notes(dir / "notes.jsonl", profiles);
  REQUIRE(profiles.size() == c.profiles.size());
  REQUIRE(notes.size() == c.notes.size());
  CHECK(profiles_to_csv(profiles) == profiles_to_csv(c.profiles));
  for (std::size_t i = 0; i < notes.size(); ++i) {
    CHECK(notes[i].note_id == c.notes[i].note_id);
    CHECK(notes[i].text == c.notes[i].text);
  }
}

TEST_CASE("ingestion rejects malformed inputs with row numbers") {
  fs::path dir = temp_dir("ingest_errors");

  SUBCASE("duplicate patient_id") {
    atomic_write(dir / "p.csv",
                 "patient_id,mrn\nP1,111111\nP1,222222\n");
    CHECK_THROWS_WITH_AS(ingest_profiles(dir / "p.csv"),
                         doctest::Contains("row 3"), std::runtime_error);
  }
  SUBCASE("duplicate mrn with distinct patient ids is accepted") {
    atomic_write(dir / "p.csv", "patient_id,mrn\nP1,111111\nP2,111111\n");
    CHECK(ingest_profiles(dir / "p.csv").size() == 2);
  }
  SUBCASE("bad zip names the field") {
    atomic_write(dir / "p.csv", "patient_id,zip\nP1,1234\n");
    CHECK_THROWS_WITH_AS(ingest_profiles(dir / "p.csv"),
                         doctest::Contains("zip"), std::runtime_error);
  }
  SUBCASE("wrong cell count names the row") {
    atomic_write(dir / "p.csv", "patient_id,mrn\nP1,123456,extra\n");
    CHECK_THROWS_WITH_AS(ingest_profiles(dir / "p.csv"),
                         doctest::Contains("row 2"), std::runtime_error);
  }
  SUBCASE("unknown column rejected") {
    atomic_write(dir / "p.csv", "patient_id,nickname\nP1,Bob\n");
    CHECK_THROWS_AS(ingest_profiles(dir / "p.csv"), std::runtime_error);
  }
  SUBCASE("note with unknown patient names the id") {
    atomic_write(dir / "p.csv", "patient_id,mrn\nP1,123456\n");
    atomic_write(dir / "n.jsonl",
                 R"({"note_id":"N1","patient_id":"GHOST","text":"hi"})"
                 "\n");
    auto profiles = ingest_profiles(dir / "p.csv");
    CHECK_THROWS_WITH_AS(ingest_notes(dir / "n.jsonl", profiles),
                         doctest::Contains("GHOST"), std::runtime_error);
  }
  SUBCASE("empty notes file is fine") {
    atomic_write(dir / "p.csv", "patient_id,mrn\nP1,123456\n");
    atomic_write(dir / "empty.jsonl", "");
    CHECK(ingest_notes(dir / "empty.jsonl", ingest_profiles(dir / "p.csv"))
              .empty());
  }
}

TEST_CASE("relevancy counts distinct populated fields in the prefix") {
  PatientProfile p;
  p.patient_id = "P1";
  p.mrn = "1234943";
  p.city = "NEW YORK";

  ClinicalNote note = make_note(
      "N1", "P1", "MRN: 1234943 resides in NEW YORK for many years");
  CHECK(relevancy(note, p, 512) == 2);

  // value starting exactly at the prefix boundary does not count
  ClinicalNote boundary = make_note("N2", "P1", "a b c 1234943");
  CHECK(relevancy(boundary, p, 3) == 0);
  CHECK(relevancy(boundary, p, 4) == 1);

  PatientProfile blank;
  blank.patient_id = "P2";
  CHECK(relevancy(note, blank, 512) == 0);

  // each field counts at most once
  ClinicalNote twice = make_note("N3", "P1", "1234943 and 1234943 again");
  CHECK(relevancy(twice, p, 512) == 1);

  // date fields match across surface formats
  PatientProfile d;
  d.patient_id = "P3";
  d.date_of_birth = "1942-03-30";
  ClinicalNote us_format = make_note("N4", "P3", "DOB 03/30/1942 noted");
  CHECK(relevancy(us_format, d, 512) == 1);
}

TEST_CASE("relevancy is monotone in prefix length") {
  GeneratorConfig cfg;
  Corpus c = generate_population(30, 2, cfg, 21);
  std::map<std::string, const PatientProfile*> by_id;
  for (const PatientProfile& p : c.profiles) by_id[p.patient_id] = &p;
  for (const ClinicalNote& n : c.notes) {
    const PatientProfile& p = *by_id[n.patient_id];
    int r128 = relevancy(n, p, 128);
    int r256 = relevancy(n, p, 256);
    int r512 = relevancy(n, p, 512);
    CHECK(r128 <= r256);
    CHECK(r256 <= r512);
  }
}

TEST_CASE("select_note_per_patient: argmax with smallest-id ties") {
  PatientProfile p;
  p.patient_id = "P1";
  p.mrn = "1234943";
  p.city = "BOSTON";
  Corpus c;
  c.profiles = {p};
  c.notes.push_back(make_note("N-b", "P1", "MRN 1234943 in BOSTON"));  // rel 2
  c.notes.push_back(make_note("N-a", "P1", "MRN 1234943 only"));       // rel 1
  auto sel = select_note_per_patient(c, 512);
  CHECK(sel.at("P1") == "N-b");

  // tie on relevancy -> lexicographically smallest note id
  Corpus tie;
  tie.profiles = {p};
  tie.notes.push_back(make_note("N-z", "P1", "MRN 1234943"));
  tie.notes.push_back(make_note("N-a", "P1", "1234943 seen"));
  auto sel2 = select_note_per_patient(tie, 512);
  CHECK(sel2.at("P1") == "N-a");
}

TEST_CASE("selection equals a brute-force argmax") {
  GeneratorConfig cfg;
  Corpus c = generate_population(60, 3, cfg, 17);
  std::map<std::string, const PatientProfile*> by_id;
  for (const PatientProfile& p : c.profiles) by_id[p.patient_id] = &p;

  for (int prefix : {128, 512}) {
    auto sel = select_note_per_patient(c, prefix);
    std::map<std::string, std::pair<int, std::string>> brute;
    for (const ClinicalNote& n : c.notes) {
      int rel = relevancy(n, *by_id[n.patient_id], prefix);
      auto it = brute.find(n.patient_id);
      if (it == brute.end() || rel > it->second.first ||
          (rel == it->second.first && n.note_id < it->second.second))
        brute[n.patient_id] = {rel, n.note_id};
    }
    for (const auto& [pid, best] : brute) CHECK(sel.at(pid) == best.second);
  }
}

TEST_CASE("split_corpus apportions by largest remainder") {
  GeneratorConfig cfg;
  Corpus c20 = generate_population(20, 1, cfg, 7);
  SplitAssignment s = split_corpus(c20, {0.7, 0.15, 0.15}, 7);
  CHECK(s.train.size() == 14);
  CHECK(s.validation.size() == 3);
  CHECK(s.test.size() == 3);

  Corpus c100 = generate_population(100, 1, cfg, 7);
  SplitAssignment s100 = split_corpus(c100, {0.7, 0.15, 0.15}, 7);
  CHECK(s100.train.size() == 70);
  CHECK(s100.validation.size() == 15);
  CHECK(s100.test.size() == 15);

  // disjoint and exhaustive
  std::set<std::string> all;
  for (const auto* split : {&s100.train, &s100.validation, &s100.test})
    for (const std::string& pid : *split) CHECK(all.insert(pid).second);
  CHECK(all.size() == 100);

  SplitAssignment again = split_corpus(c100, {0.7, 0.15, 0.15}, 7);
  CHECK(again.train == s100.train);
  CHECK(again.test == s100.test);

  Corpus c10 = generate_population(10, 1, cfg, 7);
  SplitAssignment s10 = split_corpus(c10, {0.7, 0.15, 0.15}, 7);
  CHECK(s10.train.size() == 7);
  CHECK(s10.validation.size() == 2);  // 1.5 rounds up first (earlier split)
  CHECK(s10.test.size() == 1);
}

TEST_CASE("split_corpus validates inputs") {
  GeneratorConfig cfg;
  Corpus c2 = generate_population(2, 1, cfg, 7);
  CHECK_THROWS_AS(split_corpus(c2, {0.7, 0.15, 0.15}, 7), std::invalid_argument);
  Corpus c10 = generate_population(10, 1, cfg, 7);
  CHECK_THROWS_AS(split_corpus(c10, {0.7, 0.2, 0.2}, 7), std::invalid_argument);
  CHECK_THROWS_AS(split_corpus(c10, {1.0, 0.0, 0.0}, 7), std::invalid_argument);
}

TEST_CASE("pattern-typed plants are covered by spans on a small corpus") {
  // narrow version of the corpus-wide recall criterion
  GeneratorConfig cfg;
  Corpus c = generate_population(25, 2, cfg, 19);
  for (const ClinicalNote& n : c.notes)
    for (const PlantRecord& plant : n.plants)
      CHECK(n.text.find(plant.value) != std::string::npos);
}
