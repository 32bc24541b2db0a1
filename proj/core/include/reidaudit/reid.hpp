#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reidaudit/encoder.hpp"
#include "reidaudit/features.hpp"
#include "reidaudit/profile.hpp"

namespace reidaudit {

struct TrainConfig {
  int epochs = 55;
  int batch_size = 35;
  double learning_rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  enum class Alternation { per_epoch, per_step };
  Alternation alternation = Alternation::per_epoch;
  std::uint32_t dim = 128;
  std::uint64_t seed = 7;
  bool compute_epoch_metrics = true;  // train/validation top-1 per epoch
};

// How the notes a model was trained on were masked; lets evaluation
// reproduce the same masking for held-out notes.
struct MaskProvenance {
  double fraction = 0.0;
  std::string tagger = "scored";          // rule | scored
  std::string order = "confidence_desc";  // confidence_desc | random
  std::uint64_t mask_seed = 0;
};

struct BiencoderModel {
  EncoderParams profile_encoder;  // f
  EncoderParams note_encoder;     // g
  FeaturizerConfig featurizer;
  std::uint64_t train_seed = 0;
  MaskProvenance provenance;
};

struct EpochStats {
  int epoch = 0;
  char phase = 'g';  // encoder updated this epoch
  double mean_loss = 0.0;
  double train_top1 = -1.0;  // -1 when metrics disabled
  double validation_top1 = -1.0;
};

struct TrainResult {
  BiencoderModel model;
  std::vector<EpochStats> log;
};

// A (note text, true patient) pair as fed to training or evaluation.
struct LabeledNote {
  std::string note_id;
  std::string patient_id;
  std::string text;
};

// Cached featurized profile database; evaluation reuses it across notes.
struct ProfileIndex {
  std::vector<std::string> patient_ids;
  std::vector<SparseFeatures> features;

  static ProfileIndex build(const std::vector<PatientProfile>& profiles,
                            const FeaturizerConfig& cfg);
};

// Coordinate-ascent maximum-likelihood training: both projections start
// from a seeded uniform init scaled by 1/sqrt(H); every epoch shuffles
// the pairs, forms batches, computes in-batch softmax cross-entropy and
// applies Adam updates to exactly one encoder (g on even epochs, f on
// odd). Deterministic per (data, config, seed). Throws on a non-finite
// loss, naming epoch and batch.
TrainResult train(const std::vector<LabeledNote>& train_notes,
                  const std::vector<PatientProfile>& profiles,
                  const FeaturizerConfig& featurizer, const TrainConfig& cfg,
                  const std::vector<LabeledNote>* validation_notes = nullptr,
                  const std::vector<PatientProfile>* validation_profiles = nullptr);

// logits[i][j] = dot(note_i, profile_j). Throws on mismatched dims.
std::vector<std::vector<double>> score_matrix(
    const std::vector<std::vector<double>>& note_vectors,
    const std::vector<std::vector<double>>& profile_vectors);

// Numerically stable softmax; sums to 1 within 1e-9.
std::vector<double> posterior(const std::vector<double>& logits_row);

struct RetrievalResult {
  std::string note_id;
  std::string true_patient_id;
  std::vector<std::pair<std::string, double>> ranked;  // (patient_id, prob)
  int rank_of_true = 0;  // 1-based; 0 when the true patient is not in the db
};

// Scores one note against the whole profile database; ties broken by
// patient_id order.
RetrievalResult rank(const BiencoderModel& model, const LabeledNote& note,
                     const ProfileIndex& db);

double top_k_accuracy(const BiencoderModel& model,
                      const std::vector<LabeledNote>& notes,
                      const ProfileIndex& db, int k = 1);

// Full m x n probability table computed with independent scalar loops;
// the correctness oracle for the factored path. m, n <= 500.
std::vector<std::vector<double>> oracle_pairwise(
    const BiencoderModel& model, const std::vector<LabeledNote>& notes,
    const std::vector<PatientProfile>& profiles);

// In-batch softmax cross-entropy and its analytic gradient for one
// encoder, as sparse per-column blocks. loss_scale multiplies both.
struct EncoderGrad {
  std::vector<std::uint32_t> cols;  // sorted touched columns
  std::vector<double> values;       // cols.size() * dim, blocked per column
  std::uint32_t dim = 0;
};

double in_batch_loss_grad(const EncoderParams& profile_encoder,
                          const EncoderParams& note_encoder,
                          std::span<const SparseFeatures* const> profile_feats,
                          std::span<const SparseFeatures* const> note_feats,
                          double loss_scale, EncoderGrad* grad_f,
                          EncoderGrad* grad_g);

// Central finite differences against the analytic gradient on sampled
// coordinates of both encoders; returns the max relative error.
double grad_check(const BiencoderModel& model,
                  const std::vector<LabeledNote>& batch,
                  const std::vector<PatientProfile>& profiles,
                  double epsilon = 1e-5, int coords_per_encoder = 100,
                  std::uint64_t sample_seed = 0);

// Bit-exact binary model round trip.
void save_model(const std::filesystem::path& path, const BiencoderModel& model);
BiencoderModel load_model(const std::filesystem::path& path);

// Training log CSV: epoch, phase, mean_loss, train_top1, validation_top1.
std::string train_log_to_csv(const std::vector<EpochStats>& log);

std::string retrieval_results_to_jsonl(const std::vector<RetrievalResult>& results,
                                       std::size_t top_n = 10);

}  // namespace reidaudit
