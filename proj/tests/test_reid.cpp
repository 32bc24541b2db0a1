#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "reidaudit/corpus.hpp"
#include "reidaudit/io.hpp"
#include "reidaudit/eval.hpp"
#include "reidaudit/reid.hpp"
#include "reidaudit/rng.hpp"
#include "reidaudit/text.hpp"

using namespace reidaudit;
namespace fs = std::filesystem;

namespace {

// Small-scale config: everything the training tests need in well under a
// second per run.
struct SmallWorld {
  Corpus corpus;
  SplitAssignment splits;
  FeaturizerConfig featurizer;
  TrainConfig train_cfg;
  std::vector<LabeledNote> train_notes;
  std::vector<PatientProfile> train_profiles;

  explicit SmallWorld(std::uint64_t seed = 7, int patients = 60) {
    GeneratorConfig gen;
    corpus = generate_population(patients, 1, gen, seed);
    splits = split_corpus(corpus, {0.7, 0.15, 0.15}, seed);
    featurizer.hash_space = 1u << 12;
    train_cfg.dim = 16;
    train_cfg.epochs = 6;
    train_cfg.batch_size = 8;
    train_cfg.seed = seed;
    train_cfg.compute_epoch_metrics = false;

    std::set<std::string> train_ids(splits.train.begin(), splits.train.end());
    for (const PatientProfile& p : corpus.profiles)
      if (train_ids.count(p.patient_id)) train_profiles.push_back(p);
    for (const ClinicalNote& n : corpus.notes)
      if (train_ids.count(n.patient_id))
        train_notes.push_back({n.note_id, n.patient_id, n.text});
  }
};

}  // namespace

TEST_CASE("score_matrix hand case and bilinearity") {
  std::vector<std::vector<double>> notes = {{1, 0}, {0, 2}};
  std::vector<std::vector<double>> profiles = {{1, 1}, {1, 0}};
  auto logits = score_matrix(notes, profiles);
  CHECK(logits[0][0] == doctest::Approx(1.0));
  CHECK(logits[0][1] == doctest::Approx(1.0));
  CHECK(logits[1][0] == doctest::Approx(2.0));
  CHECK(logits[1][1] == doctest::Approx(0.0));

  // orthonormal vectors give identity-patterned logits
  std::vector<std::vector<double>> ortho = {{1, 0}, {0, 1}};
  auto eye = score_matrix(ortho, ortho);
  CHECK(eye[0][0] == 1.0);
  CHECK(eye[0][1] == 0.0);
  CHECK(eye[1][0] == 0.0);
  CHECK(eye[1][1] == 1.0);

  // scaling note vectors scales logit rows
  std::vector<std::vector<double>> scaled = {{3, 0}, {0, 6}};
  auto tripled = score_matrix(scaled, profiles);
  for (std::size_t j = 0; j < 2; ++j)
    CHECK(tripled[0][j] == doctest::Approx(3.0 * logits[0][j]));

  std::vector<std::vector<double>> wrong = {{1, 2, 3}};
  CHECK_THROWS_AS(score_matrix(wrong, profiles), std::invalid_argument);
}

TEST_CASE("posterior closed forms") {
  auto uniform = posterior({0, 0, 0});
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3));

  auto soft = posterior({1, 0, 0});
  const double e = std::exp(1.0);
  CHECK(soft[0] == doctest::Approx(e / (e + 2)).epsilon(1e-12));
  CHECK(soft[1] == doctest::Approx(1 / (e + 2)).epsilon(1e-12));
  CHECK(soft[2] == doctest::Approx(1 / (e + 2)).epsilon(1e-12));
  CHECK(soft[0] + soft[1] + soft[2] == doctest::Approx(1.0).epsilon(1e-9));

  // shift invariance
  auto shifted = posterior({101, 100, 100});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(shifted[i] == doctest::Approx(soft[i]).epsilon(1e-12));

  // numerically stable on large logits
  auto big = posterior({1000, 999, 0});
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] + big[1] + big[2] == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(posterior({std::nan(""), 0.0}), std::invalid_argument);
}

TEST_CASE("initial in-batch loss is near ln(batch)") {
  SmallWorld w;
  std::vector<SparseFeatures> nf, pf;
  std::map<std::string, const PatientProfile*> by_id;
  for (const PatientProfile& p : w.train_profiles) by_id[p.patient_id] = &p;
  const std::size_t b = 12;
  for (std::size_t i = 0; i < b; ++i) {
    nf.push_back(featurize_text(tokenize(w.train_notes[i].text), w.featurizer));
    pf.push_back(featurize_text(
        tokenize(serialize_profile(*by_id[w.train_notes[i].patient_id])),
        w.featurizer));
  }
  std::vector<const SparseFeatures*> nfp, pfp;
  for (auto& f : nf) nfp.push_back(&f);
  for (auto& f : pf) pfp.push_back(&f);

  EncoderParams f_enc = init_encoder(EncoderRole::profile_encoder_f, 16,
                                     w.featurizer.hash_space, 1);
  EncoderParams g_enc = init_encoder(EncoderRole::note_encoder_g, 16,
                                     w.featurizer.hash_space, 1);
  double loss = in_batch_loss_grad(f_enc, g_enc, pfp, nfp, 1.0, nullptr, nullptr);
  CHECK(loss == doctest::Approx(std::log(double(b))).epsilon(0.2));

  // doubling the loss scale doubles every gradient entry
  EncoderGrad g1, g2;
  in_batch_loss_grad(f_enc, g_enc, pfp, nfp, 1.0, &g1, nullptr);
  double loss2 = in_batch_loss_grad(f_enc, g_enc, pfp, nfp, 2.0, &g2, nullptr);
  CHECK(loss2 == doctest::Approx(2.0 * loss).epsilon(1e-12));
  REQUIRE(g1.cols == g2.cols);
  for (std::size_t i = 0; i < g1.values.size(); ++i)
    CHECK(g2.values[i] == doctest::Approx(2.0 * g1.values[i]).epsilon(1e-9));
}

TEST_CASE("training is deterministic and zero-lr is a no-op") {
  SmallWorld w;
  TrainResult a = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);
  TrainResult b = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);
  CHECK(a.model.note_encoder.weights == b.model.note_encoder.weights);
  CHECK(a.model.profile_encoder.weights == b.model.profile_encoder.weights);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].mean_loss == b.log[i].mean_loss);

  TrainConfig frozen = w.train_cfg;
  frozen.learning_rate = 0.0;
  TrainResult f = train(w.train_notes, w.train_profiles, w.featurizer, frozen);
  EncoderParams init_f = init_encoder(EncoderRole::profile_encoder_f, frozen.dim,
                                      w.featurizer.hash_space,
                                      derive_seed(frozen.seed, "init"));
  CHECK(f.model.profile_encoder.weights == init_f.weights);
  CHECK(f.model.note_encoder.weights == init_f.weights);
}

TEST_CASE("per-epoch loss descends across same-phase epochs") {
  SmallWorld w(7, 80);
  TrainConfig cfg = w.train_cfg;
  cfg.epochs = 12;
  cfg.learning_rate = 0.02;
  TrainResult r = train(w.train_notes, w.train_profiles, w.featurizer, cfg);
  REQUIRE(r.log.size() == 12);
  for (int e = 0; e + 2 < 10; ++e)
    CHECK(r.log[std::size_t(e + 2)].mean_loss <=
          r.log[std::size_t(e)].mean_loss + 1e-9);
  // alternation: g on even epochs, f on odd
  for (int e = 0; e < 12; ++e)
    CHECK(r.log[std::size_t(e)].phase == (e % 2 == 0 ? 'g' : 'f'));
}

TEST_CASE("training rejects invalid setups") {
  SmallWorld w;
  TrainConfig cfg = w.train_cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(train(w.train_notes, w.train_profiles, w.featurizer, cfg),
                  std::invalid_argument);
  cfg = w.train_cfg;
  cfg.batch_size = static_cast<int>(w.train_notes.size()) + 1;
  CHECK_THROWS_AS(train(w.train_notes, w.train_profiles, w.featurizer, cfg),
                  std::invalid_argument);
  cfg = w.train_cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(w.train_notes, w.train_profiles, w.featurizer, cfg),
                  std::invalid_argument);

  std::vector<LabeledNote> orphan = w.train_notes;
  orphan[0].patient_id = "GHOST";
  CHECK_THROWS_AS(train(orphan, w.train_profiles, w.featurizer, w.train_cfg),
                  std::invalid_argument);
}

TEST_CASE("gradient check against finite differences") {
  SmallWorld w;
  TrainResult r = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);
  std::vector<LabeledNote> batch(w.train_notes.begin(), w.train_notes.begin() + 8);
  double err = grad_check(r.model, batch, w.train_profiles, 1e-5, 100, 3);
  CHECK(err <= 1e-4);

  // zero-feature batch has an exactly zero gradient
  std::vector<LabeledNote> empty_batch = {
      {"E1", w.train_profiles[0].patient_id, ""},
      {"E2", w.train_profiles[1].patient_id, ""}};
  std::vector<PatientProfile> empty_profiles = {w.train_profiles[0],
                                                w.train_profiles[1]};
  empty_profiles[0] = PatientProfile{};
  empty_profiles[0].patient_id = w.train_profiles[0].patient_id;
  empty_profiles[1] = PatientProfile{};
  empty_profiles[1].patient_id = w.train_profiles[1].patient_id;
  CHECK(grad_check(r.model, empty_batch, empty_profiles) == 0.0);
}

TEST_CASE("rank degenerate and tie cases") {
  SmallWorld w;
  TrainResult r = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);

  std::vector<PatientProfile> one = {w.train_profiles[0]};
  ProfileIndex db1 = ProfileIndex::build(one, w.featurizer);
  LabeledNote note = w.train_notes[0];
  note.patient_id = one[0].patient_id;
  RetrievalResult res = rank(r.model, note, db1);
  CHECK(res.rank_of_true == 1);
  CHECK(res.ranked[0].second == doctest::Approx(1.0));

  // duplicate profiles tie and resolve by patient_id order
  PatientProfile dup = w.train_profiles[0];
  PatientProfile dup2 = dup;
  dup.patient_id = "ZZZ";
  dup2.patient_id = "AAA";
  ProfileIndex db2 = ProfileIndex::build({dup, dup2}, w.featurizer);
  RetrievalResult res2 = rank(r.model, note, db2);
  CHECK(res2.ranked[0].first == "AAA");
  CHECK(res2.ranked[0].second == doctest::Approx(res2.ranked[1].second));

  ProfileIndex empty_db = ProfileIndex::build({}, w.featurizer);
  CHECK_THROWS_AS(rank(r.model, note, empty_db), std::invalid_argument);
}

TEST_CASE("retrieval results are sorted with probabilities summing to one") {
  SmallWorld w;
  TrainResult r = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);
  ProfileIndex db = ProfileIndex::build(w.train_profiles, w.featurizer);
  RetrievalResult res = rank(r.model, w.train_notes[3], db);
  double sum = 0.0;
  for (std::size_t i = 1; i < res.ranked.size(); ++i)
    CHECK(res.ranked[i - 1].second >= res.ranked[i].second);
  for (const auto& [pid, p] : res.ranked) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.rank_of_true >= 1);
}

TEST_CASE("top-k accuracy counts ranks and is monotone in k") {
  SmallWorld w;
  TrainResult r = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);
  ProfileIndex db = ProfileIndex::build(w.train_profiles, w.featurizer);

  std::vector<LabeledNote> notes(w.train_notes.begin(), w.train_notes.begin() + 12);
  // independent recount from rank_of_true
  std::size_t manual_k1 = 0, manual_k5 = 0;
  for (const LabeledNote& n : notes) {
    int rot = rank(r.model, n, db).rank_of_true;
    if (rot >= 1 && rot <= 1) ++manual_k1;
    if (rot >= 1 && rot <= 5) ++manual_k5;
  }
  double k1 = top_k_accuracy(r.model, notes, db, 1);
  double k5 = top_k_accuracy(r.model, notes, db, 5);
  double kall = top_k_accuracy(r.model, notes, db,
                               static_cast<int>(w.train_profiles.size()));
  CHECK(k1 == doctest::Approx(double(manual_k1) / notes.size()));
  CHECK(k5 == doctest::Approx(double(manual_k5) / notes.size()));
  CHECK(k1 <= k5);
  CHECK(kall == doctest::Approx(1.0));
}

TEST_CASE("factored pipeline matches the pairwise oracle") {
  SmallWorld w(11, 70);
  TrainResult r = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);

  std::vector<LabeledNote> notes(w.train_notes.begin(), w.train_notes.begin() + 40);
  std::vector<PatientProfile> profiles(w.train_profiles.begin(),
                                       w.train_profiles.begin() + 40);
  auto table = oracle_pairwise(r.model, notes, profiles);
  ProfileIndex db = ProfileIndex::build(profiles, w.featurizer);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    RetrievalResult res = rank(r.model, notes[i], db);
    std::map<std::string, double> by_pid;
    for (const auto& [pid, p] : res.ranked) by_pid[pid] = p;
    for (std::size_t j = 0; j < profiles.size(); ++j)
      max_diff = std::max(
          max_diff, std::abs(by_pid[profiles[j].patient_id] - table[i][j]));
  }
  CHECK(max_diff <= 1e-9);

  // duplicated note gives identical rows
  std::vector<LabeledNote> dup = {notes[0], notes[0]};
  auto t2 = oracle_pairwise(r.model, dup, profiles);
  CHECK(t2[0] == t2[1]);

  // permuting profiles permutes columns identically
  std::vector<PatientProfile> rev(profiles.rbegin(), profiles.rend());
  auto t3 = oracle_pairwise(r.model, {notes[0]}, rev);
  for (std::size_t j = 0; j < profiles.size(); ++j)
    CHECK(t3[0][profiles.size() - 1 - j] ==
          doctest::Approx(table[0][j]).epsilon(1e-12));

  std::vector<LabeledNote> too_many(501, notes[0]);
  CHECK_THROWS_AS(oracle_pairwise(r.model, too_many, profiles),
                  std::invalid_argument);
}

TEST_CASE("model files round-trip bit-exactly") {
  SmallWorld w;
  TrainResult r = train(w.train_notes, w.train_profiles, w.featurizer, w.train_cfg);
  r.model.provenance = {0.15, "scored", "confidence_desc", 12345};

  fs::path path = fs::temp_directory_path() / "reidaudit_model_roundtrip.bin";
  save_model(path, r.model);
  BiencoderModel loaded = load_model(path);
  CHECK(loaded.note_encoder.weights == r.model.note_encoder.weights);
  CHECK(loaded.profile_encoder.weights == r.model.profile_encoder.weights);
  CHECK(loaded.featurizer.hash_space == w.featurizer.hash_space);
  CHECK(loaded.train_seed == r.model.train_seed);
  CHECK(loaded.provenance.fraction == 0.15);
  CHECK(loaded.provenance.order == "confidence_desc");
  CHECK(loaded.provenance.mask_seed == 12345);

  // second save of the loaded model is byte-identical
  fs::path path2 = fs::temp_directory_path() / "reidaudit_model_roundtrip2.bin";
  save_model(path2, loaded);
  CHECK(read_file(path) == read_file(path2));
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("training log CSV format") {
  std::vector<EpochStats> log = {{0, 'g', 3.5, 0.5, 0.25}, {1, 'f', 2.0, -1, -1}};
  std::string csv = train_log_to_csv(log);
  CHECK(csv.find("epoch,phase,mean_loss,train_top1,validation_top1\n") == 0);
  CHECK(csv.find("0,g,3.5,0.5,0.25\n") != std::string::npos);
  CHECK(csv.find("1,f,2,,\n") != std::string::npos);
}
