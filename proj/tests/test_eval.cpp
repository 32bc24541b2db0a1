#include <doctest.h>

#include <algorithm>
#include <map>

#include "reidaudit/corpus.hpp"
#include "reidaudit/eval.hpp"
#include "reidaudit/rng.hpp"
#include "reidaudit/text.hpp"

using namespace reidaudit;

namespace {

// Step-function evaluator over a value table keyed by fraction.
CurveEvaluator table_evaluator(const std::map<double, double>& table) {
  return [table](double fraction) {
    double value = table.begin()->second;
    for (const auto& [f, acc] : table)
      if (f <= fraction + 1e-12) value = acc;
    return value;
  };
}

}  // namespace

TEST_CASE("threshold search on the reference table") {
  std::map<double, double> table = {
      {0.0, 0.9}, {0.05, 0.4}, {0.10, 0.2}, {0.15, 0.05}, {0.20, 0.009}};
  auto eval = table_evaluator(table);

  ThresholdResult b = find_threshold_binary(eval, 0.01, 0.05, 0.0, 0.20);
  REQUIRE(b.fraction.has_value());
  CHECK(*b.fraction == doctest::Approx(0.20));
  CHECK(b.warnings.empty());
  CHECK(b.evaluated.size() <= 5);

  ThresholdResult e = find_threshold_exhaustive(eval, 0.01, 0.05, 0.0, 0.20);
  REQUIRE(e.fraction.has_value());
  CHECK(*e.fraction == doctest::Approx(0.20));
  CHECK(e.evaluated.size() == 5);  // scans every grid point up to the hit

  // degenerate target: anything <= 1 qualifies, so the lowest point wins
  ThresholdResult lo = find_threshold_binary(eval, 1.0, 0.05, 0.0, 0.20);
  REQUIRE(lo.fraction.has_value());
  CHECK(*lo.fraction == doctest::Approx(0.0));

  // unreachable target
  ThresholdResult nf = find_threshold_binary(eval, 0.001, 0.05, 0.0, 0.20);
  CHECK_FALSE(nf.fraction.has_value());
  ThresholdResult nf2 = find_threshold_exhaustive(eval, 0.001, 0.05, 0.0, 0.20);
  CHECK_FALSE(nf2.fraction.has_value());
  CHECK(nf2.evaluated.size() == 5);  // not-found scans the whole grid
}

TEST_CASE("binary threshold equals exhaustive on random monotone curves") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    // random non-increasing step function on the percent grid
    std::map<double, double> table;
    double level = 0.5 + 0.5 * rng.real();
    for (int i = 0; i <= 100; ++i) {
      if (rng.bernoulli(0.3)) level *= 0.5 + 0.5 * rng.real();
      table[i * 0.01] = level;
    }
    double target = rng.real();
    auto eval = table_evaluator(table);
    ThresholdResult b = find_threshold_binary(eval, target, 0.01);
    ThresholdResult e = find_threshold_exhaustive(eval, target, 0.01);
    CHECK(b.fraction.has_value() == e.fraction.has_value());
    if (b.fraction && e.fraction)
      CHECK(*b.fraction == doctest::Approx(*e.fraction).epsilon(1e-12));
    CHECK(b.warnings.empty());
  }
}

TEST_CASE("non-monotone observations produce a warning naming the pair") {
  std::map<double, double> table = {{0.0, 0.5}, {0.5, 0.9}, {0.75, 0.001}};
  ThresholdResult r = find_threshold_binary(table_evaluator(table), 0.01, 0.25);
  REQUIRE(r.fraction.has_value());
  bool warned = false;
  for (const std::string& w : r.warnings)
    if (w.find("non-monotone") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("threshold argument validation") {
  auto eval = [](double) { return 0.5; };
  CHECK_THROWS_AS(find_threshold_binary(eval, 0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(find_threshold_binary(eval, 1.5, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(find_threshold_binary(eval, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("verbatim field hits respect masking and date formats") {
  PatientProfile p;
  p.patient_id = "P1";
  p.mrn = "1234943";
  p.date_of_birth = "1942-03-30";
  p.city = "NEW YORK";

  auto hits = verbatim_field_hits("MRN 1234943 of NEW YORK", p);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].first == "mrn");
  CHECK(hits[1].first == "city");

  // masked value no longer hits
  auto masked = verbatim_field_hits("MRN ***** of NEW YORK", p);
  REQUIRE(masked.size() == 1);
  CHECK(masked[0].first == "city");

  // cross-format date match
  auto date_hit = verbatim_field_hits("DOB 03/30/1942 on file", p);
  REQUIRE(date_hit.size() == 1);
  CHECK(date_hit[0].first == "date_of_birth");
  CHECK(date_hit[0].second == "1942-03-30");

  // fully masked text never matches anything
  CHECK(verbatim_field_hits("***** ***** ***** *****", p).empty());
}

TEST_CASE("error report quadrants, hits and rates") {
  std::vector<PatientProfile> profiles(3);
  profiles[0].patient_id = "A";
  profiles[0].mrn = "1234943";
  profiles[1].patient_id = "B";
  profiles[1].city = "BOSTON";
  profiles[1].state = "MA";
  profiles[1].gender = "Female";
  profiles[2].patient_id = "C";

  auto masked_note = [](std::string id, std::string text, double af) {
    MaskedNote m;
    m.note_id = std::move(id);
    m.masked_text = std::move(text);
    m.requested_fraction = af;
    m.achieved_fraction = af;
    return m;
  };
  std::vector<MaskedNote> masked = {
      masked_note("N1", "MRN 1234943 ***** context", 0.02),
      masked_note("N2", "seen in BOSTON MA Gender: Female *****", 0.18),
      masked_note("N3", "***** mid case", 0.10),
  };

  auto result = [](std::string nid, std::string true_pid, std::string top,
                   double prob, int rank) {
    RetrievalResult r;
    r.note_id = std::move(nid);
    r.true_patient_id = std::move(true_pid);
    r.ranked = {{top, prob}, {"other", 1 - prob}};
    r.rank_of_true = rank;
    return r;
  };
  std::vector<RetrievalResult> results = {
      result("N1", "A", "C", 0.99, 2),  // low masking, wrong, confident
      result("N2", "B", "B", 0.80, 1),  // high masking, correct
      result("N3", "C", "C", 0.60, 1),  // mid
  };

  AuditReport report = error_report(results, masked, profiles, 0.05, 0.15);
  REQUIRE(report.entries.size() == 3);

  const AuditEntry& low = report.entries[0];
  CHECK(low.quadrant == Quadrant::low_incorrect);
  CHECK(low.mapped_probability == doctest::Approx(0.99));
  REQUIRE(low.verbatim_hits.size() == 1);
  CHECK(low.verbatim_hits[0].first == "mrn");

  const AuditEntry& high = report.entries[1];
  CHECK(high.quadrant == Quadrant::high_correct);
  std::vector<std::string> fields;
  for (const auto& [f, v] : high.verbatim_hits) fields.push_back(f);
  CHECK(fields == std::vector<std::string>{"gender", "city", "state"});

  CHECK(report.entries[2].quadrant == Quadrant::mid);
  CHECK(report.entries[2].verbatim_hits.empty());

  double total = 0.0;
  for (const auto& [q, rate] : report.rates) total += rate;
  CHECK(total == doctest::Approx(1.0));
  CHECK(report.rates.at(Quadrant::low_incorrect) == doctest::Approx(1.0 / 3));

  CHECK_THROWS_AS(error_report(results, masked, profiles, 0.5, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(error_report(results, masked, profiles, -0.1, 0.2),
                  std::invalid_argument);
}

TEST_CASE("every quadrant except mid is empty at a uniform mid fraction") {
  std::vector<PatientProfile> profiles(1);
  profiles[0].patient_id = "A";
  std::vector<MaskedNote> masked;
  std::vector<RetrievalResult> results;
  for (int i = 0; i < 4; ++i) {
    MaskedNote m;
    m.note_id = "N" + std::to_string(i);
    m.masked_text = "body";
    m.achieved_fraction = 0.10;
    masked.push_back(m);
    RetrievalResult r;
    r.note_id = m.note_id;
    r.true_patient_id = "A";
    r.ranked = {{"A", 1.0}};
    r.rank_of_true = 1;
    results.push_back(r);
  }
  AuditReport report = error_report(results, masked, profiles, 0.05, 0.15);
  CHECK(report.rates.at(Quadrant::mid) == doctest::Approx(1.0));
  for (Quadrant q : {Quadrant::low_incorrect, Quadrant::low_correct,
                     Quadrant::high_correct, Quadrant::high_incorrect})
    CHECK(report.rates.at(q) == 0.0);
}

TEST_CASE("linkage uniqueness counting") {
  std::vector<PatientProfile> ps(3);
  ps[0].patient_id = "A";
  ps[0].gender = "Female";
  ps[0].zip = "10001";
  ps[1].patient_id = "B";
  ps[1].gender = "Male";
  ps[1].zip = "10002";
  ps[2].patient_id = "C";
  ps[2].gender = "Male";
  ps[2].zip = "10002";

  LinkageResult r = linkage_uniqueness(ps, {"gender", "zip"});
  CHECK(r.uniqueness_rate == doctest::Approx(1.0 / 3));
  CHECK(r.k_anonymity_violations.at(2) == doctest::Approx(1.0 / 3));
  CHECK(r.k_anonymity_violations.at(5) == doctest::Approx(1.0));
  CHECK(r.k_anonymity_violations.at(10) == doctest::Approx(1.0));

  CHECK_THROWS_AS(linkage_uniqueness({}, {"gender"}), std::invalid_argument);
  CHECK_THROWS_AS(linkage_uniqueness(ps, {}), std::invalid_argument);
  CHECK_THROWS_AS(linkage_uniqueness(ps, {"bogus"}), std::invalid_argument);
}

TEST_CASE("absent fields group together; all fields with unique mrn is fully unique") {
  GeneratorConfig cfg;
  Corpus c = generate_population(80, 1, cfg, 41);
  std::vector<std::string> all_fields;
  for (std::string_view n : profile_field_names()) all_fields.emplace_back(n);
  // unique MRNs can still collide on "absent"; restrict to patients with MRN
  std::vector<PatientProfile> with_mrn;
  for (const PatientProfile& p : c.profiles)
    if (p.mrn) with_mrn.push_back(p);
  REQUIRE(with_mrn.size() > 10);
  LinkageResult r = linkage_uniqueness(with_mrn, all_fields);
  CHECK(r.uniqueness_rate == doctest::Approx(1.0));
}

TEST_CASE("adding fields never decreases uniqueness") {
  GeneratorConfig cfg;
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Corpus c = generate_population(60, 1, cfg, 100 + trial);
    std::vector<std::string> base = {"gender"};
    LinkageResult prev = linkage_uniqueness(c.profiles, base);
    for (const char* extra : {"date_of_birth", "zip", "city", "mrn"}) {
      base.emplace_back(extra);
      LinkageResult next = linkage_uniqueness(c.profiles, base);
      CHECK(next.uniqueness_rate >= prev.uniqueness_rate - 1e-12);
      prev = next;
    }
  }
}

TEST_CASE("curve csv layout") {
  CurvePoint p;
  p.requested_fraction = 0.05;
  p.mean_achieved_fraction = 0.049;
  p.top1 = 0.7;
  p.topk = {{1, 0.7}, {5, 0.9}, {10, 0.95}};
  p.seed = 42;
  std::string csv = curve_to_csv({p});
  CHECK(csv ==
        "requested_fraction,mean_achieved_fraction,top1,top5,top10,seed\n"
        "0.05,0.049,0.7,0.9,0.95,42\n");
}

TEST_CASE("masking pipeline smoke: fraction 0 equals unmasked training") {
  GeneratorConfig gen;
  Corpus corpus = generate_population(60, 2, gen, 7);
  SplitAssignment splits = split_corpus(corpus, {0.7, 0.15, 0.15}, 7);
  PipelineConfig pipe;
  pipe.featurizer.hash_space = 1u << 12;
  pipe.train.dim = 16;
  pipe.train.epochs = 4;
  pipe.train.batch_size = 8;
  pipe.train.compute_epoch_metrics = false;
  pipe.base_seed = 7;

  PointResult direct = run_masking_point(corpus, splits, pipe, 0.0);
  std::vector<CurvePoint> curve = masking_curve(corpus, splits, pipe, {0.0, 0.5});
  CHECK(curve[0].top1 == doctest::Approx(direct.point.top1));
  CHECK(curve[0].requested_fraction == 0.0);
  CHECK(curve[0].mean_achieved_fraction == 0.0);
  // unmasked notes mask to themselves
  for (const MaskedNote& m : direct.masked_test)
    CHECK(m.masked_token_indices.empty());
  // topk non-decreasing in k
  for (const CurvePoint& pt : curve) {
    double prev = 0.0;
    for (const auto& [k, acc] : pt.topk) {
      CHECK(acc >= prev - 1e-12);
      prev = acc;
    }
  }

  CHECK_THROWS_AS(masking_curve(corpus, splits, pipe, {}), std::invalid_argument);
  CHECK_THROWS_AS(masking_curve(corpus, splits, pipe, {0.5, 0.1}),
                  std::invalid_argument);

  // parallel execution returns identical points
  PipelineConfig par = pipe;
  par.jobs = 2;
  std::vector<CurvePoint> curve2 = masking_curve(corpus, splits, par, {0.0, 0.5});
  CHECK(curve2[0].top1 == curve[0].top1);
  CHECK(curve2[1].top1 == curve[1].top1);
  CHECK(curve2[1].seed == curve[1].seed);
}
