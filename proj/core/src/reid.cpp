#include "reidaudit/reid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "reidaudit/io.hpp"
#include "reidaudit/rng.hpp"
#include "reidaudit/text.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian");

namespace reidaudit {

ProfileIndex ProfileIndex::build(const std::vector<PatientProfile>& profiles,
                                 const FeaturizerConfig& cfg) {
  ProfileIndex idx;
  idx.patient_ids.reserve(profiles.size());
  idx.features.reserve(profiles.size());
  for (const PatientProfile& p : profiles) {
    idx.patient_ids.push_back(p.patient_id);
    idx.features.push_back(featurize_text(tokenize(serialize_profile(p)), cfg));
  }
  return idx;
}

namespace {

double dot_embed(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void accumulate_grad(EncoderGrad& grad,
                     std::span<const SparseFeatures* const> feats,
                     const std::vector<std::vector<double>>& backprop,
                     std::uint32_t dim) {
  grad.dim = dim;
  grad.cols.clear();
  for (const SparseFeatures* f : feats)
    grad.cols.insert(grad.cols.end(), f->index.begin(), f->index.end());
  std::sort(grad.cols.begin(), grad.cols.end());
  grad.cols.erase(std::unique(grad.cols.begin(), grad.cols.end()),
                  grad.cols.end());

  std::unordered_map<std::uint32_t, std::size_t> slot;
  slot.reserve(grad.cols.size() * 2);
  for (std::size_t s = 0; s < grad.cols.size(); ++s) slot[grad.cols[s]] = s;

  grad.values.assign(grad.cols.size() * dim, 0.0);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const SparseFeatures& x = *feats[i];
    const std::vector<double>& d = backprop[i];
    for (std::size_t k = 0; k < x.index.size(); ++k) {
      double* block = grad.values.data() + slot[x.index[k]] * dim;
      const double w = x.weight[k];
      for (std::uint32_t r = 0; r < dim; ++r) block[r] += w * d[r];
    }
  }
}

}  // namespace

double in_batch_loss_grad(const EncoderParams& profile_encoder,
                          const EncoderParams& note_encoder,
                          std::span<const SparseFeatures* const> profile_feats,
                          std::span<const SparseFeatures* const> note_feats,
                          double loss_scale, EncoderGrad* grad_f,
                          EncoderGrad* grad_g) {
  if (profile_feats.size() != note_feats.size() || note_feats.empty())
    throw std::invalid_argument("batch must pair notes with profiles");
  if (profile_encoder.dim != note_encoder.dim)
    throw std::invalid_argument("encoder dims differ");
  const std::size_t b = note_feats.size();
  const std::uint32_t dim = note_encoder.dim;

  std::vector<std::vector<double>> v(b), u(b);
  for (std::size_t i = 0; i < b; ++i) {
    v[i] = encode(*note_feats[i], note_encoder);
    u[i] = encode(*profile_feats[i], profile_encoder);
  }

  // row-stable softmax cross-entropy with the batch's profiles as candidates
  std::vector<std::vector<double>> dlogits(b, std::vector<double>(b, 0.0));
  double loss = 0.0;
  std::vector<double> row(b);
  for (std::size_t i = 0; i < b; ++i) {
    double mx = -1e300;
    for (std::size_t j = 0; j < b; ++j) {
      row[j] = dot_embed(v[i], u[j]);
      mx = std::max(mx, row[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      row[j] = std::exp(row[j] - mx);
      denom += row[j];
    }
    loss += -std::log(row[i] / denom);
    const double g = loss_scale / static_cast<double>(b);
    for (std::size_t j = 0; j < b; ++j)
      dlogits[i][j] = (row[j] / denom - (i == j ? 1.0 : 0.0)) * g;
  }
  loss = loss * loss_scale / static_cast<double>(b);

  if (grad_g != nullptr) {
    std::vector<std::vector<double>> a(b, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        const double d = dlogits[i][j];
        for (std::uint32_t r = 0; r < dim; ++r) a[i][r] += d * u[j][r];
      }
    accumulate_grad(*grad_g, note_feats, a, dim);
  }
  if (grad_f != nullptr) {
    std::vector<std::vector<double>> bk(b, std::vector<double>(dim, 0.0));
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t i = 0; i < b; ++i) {
        const double d = dlogits[i][j];
        for (std::uint32_t r = 0; r < dim; ++r) bk[j][r] += d * v[i][r];
      }
    accumulate_grad(*grad_f, profile_feats, bk, dim);
  }
  return loss;
}

namespace {

// Adam over the touched columns only. Skipped steps decay the moments
// geometrically on the next touch and leave the parameter in place
// (sparse-gradient Adam semantics).
class LazyAdam {
 public:
  LazyAdam(std::uint32_t dim, std::uint32_t hash_space, const TrainConfig& cfg)
      : dim_(dim),
        lr_(cfg.learning_rate),
        b1_(cfg.beta1),
        b2_(cfg.beta2),
        eps_(cfg.adam_epsilon),
        m_(std::size_t(dim) * hash_space, 0.0f),
        v_(std::size_t(dim) * hash_space, 0.0f),
        last_(hash_space, 0) {}

  void apply(EncoderParams& p, const EncoderGrad& g) {
    ++step_;
    const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(step_));
    for (std::size_t c = 0; c < g.cols.size(); ++c) {
      const std::uint32_t col = g.cols[c];
      const std::uint64_t skipped = step_ - last_[col] - 1;
      const double decay1 = skipped ? std::pow(b1_, static_cast<double>(skipped)) : 1.0;
      const double decay2 = skipped ? std::pow(b2_, static_cast<double>(skipped)) : 1.0;
      float* m = m_.data() + std::size_t(col) * dim_;
      float* v = v_.data() + std::size_t(col) * dim_;
      float* w = p.column(col);
      const double* gv = g.values.data() + c * dim_;
      for (std::uint32_t r = 0; r < dim_; ++r) {
        double mi = static_cast<double>(m[r]) * decay1;
        double vi = static_cast<double>(v[r]) * decay2;
        mi = b1_ * mi + (1.0 - b1_) * gv[r];
        vi = b2_ * vi + (1.0 - b2_) * gv[r] * gv[r];
        m[r] = static_cast<float>(mi);
        v[r] = static_cast<float>(vi);
        const double update = lr_ * (mi / bc1) / (std::sqrt(vi / bc2) + eps_);
        w[r] = static_cast<float>(static_cast<double>(w[r]) - update);
      }
      last_[col] = step_;
    }
  }

 private:
  std::uint32_t dim_;
  double lr_, b1_, b2_, eps_;
  std::vector<float> m_, v_;
  std::vector<std::uint32_t> last_;
  std::uint64_t step_ = 0;
};

struct EncodedSet {
  std::vector<std::vector<double>> embeddings;
};

EncodedSet encode_all(const std::vector<SparseFeatures>& feats,
                      const EncoderParams& params) {
  EncodedSet out;
  out.embeddings.reserve(feats.size());
  for (const SparseFeatures& f : feats) out.embeddings.push_back(encode(f, params));
  return out;
}

// Top-1 with ties resolved toward the smaller patient_id.
double top1_fraction(const std::vector<std::vector<double>>& note_emb,
                     const std::vector<std::string>& true_ids,
                     const std::vector<std::vector<double>>& profile_emb,
                     const std::vector<std::string>& profile_ids) {
  if (note_emb.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < note_emb.size(); ++i) {
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t j = 0; j < profile_emb.size(); ++j) {
      double s = dot_embed(note_emb[i], profile_emb[j]);
      if (s > best_score ||
          (s == best_score && profile_ids[j] < profile_ids[best])) {
        best_score = s;
        best = j;
      }
    }
    if (profile_ids[best] == true_ids[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(note_emb.size());
}

}  // namespace

TrainResult train(const std::vector<LabeledNote>& train_notes,
                  const std::vector<PatientProfile>& profiles,
                  const FeaturizerConfig& featurizer, const TrainConfig& cfg,
                  const std::vector<LabeledNote>* validation_notes,
                  const std::vector<PatientProfile>* validation_profiles) {
  validate_config(featurizer);
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 2)
    throw std::invalid_argument("batch_size must be >= 2 for in-batch softmax");
  if (train_notes.size() < static_cast<std::size_t>(cfg.batch_size))
    throw std::invalid_argument("batch_size exceeds the number of training pairs");

  std::unordered_map<std::string, std::size_t> profile_of;
  for (std::size_t j = 0; j < profiles.size(); ++j)
    profile_of[profiles[j].patient_id] = j;

  std::vector<SparseFeatures> profile_feats;
  profile_feats.reserve(profiles.size());
  std::vector<std::string> profile_ids;
  for (const PatientProfile& p : profiles) {
    profile_feats.push_back(
        featurize_text(tokenize(serialize_profile(p)), featurizer));
    profile_ids.push_back(p.patient_id);
  }

  std::vector<SparseFeatures> note_feats;
  std::vector<std::size_t> true_profile;
  std::vector<std::string> true_ids;
  note_feats.reserve(train_notes.size());
  for (const LabeledNote& n : train_notes) {
    auto it = profile_of.find(n.patient_id);
    if (it == profile_of.end())
      throw std::invalid_argument("training note '" + n.note_id +
                                  "' has no profile for patient '" +
                                  n.patient_id + "'");
    note_feats.push_back(featurize_text(tokenize(n.text), featurizer));
    true_profile.push_back(it->second);
    true_ids.push_back(n.patient_id);
  }

  std::vector<SparseFeatures> val_note_feats;
  std::vector<std::string> val_true_ids;
  std::vector<SparseFeatures> val_profile_feats;
  std::vector<std::string> val_profile_ids;
  if (validation_notes != nullptr && validation_profiles != nullptr) {
    for (const LabeledNote& n : *validation_notes) {
      val_note_feats.push_back(featurize_text(tokenize(n.text), featurizer));
      val_true_ids.push_back(n.patient_id);
    }
    for (const PatientProfile& p : *validation_profiles) {
      val_profile_feats.push_back(
          featurize_text(tokenize(serialize_profile(p)), featurizer));
      val_profile_ids.push_back(p.patient_id);
    }
  }

  BiencoderModel model;
  model.featurizer = featurizer;
  model.train_seed = cfg.seed;
  // One seeded draw initializes both projections. Identical starting
  // points make the initial bilinear form an approximate scaled identity
  // over the hash space, so shared note/profile features score positively
  // before any training.
  model.profile_encoder =
      init_encoder(EncoderRole::profile_encoder_f, cfg.dim,
                   featurizer.hash_space, derive_seed(cfg.seed, "init"));
  model.note_encoder =
      init_encoder(EncoderRole::note_encoder_g, cfg.dim, featurizer.hash_space,
                   derive_seed(cfg.seed, "init"));

  LazyAdam adam_f(cfg.dim, featurizer.hash_space, cfg);
  LazyAdam adam_g(cfg.dim, featurizer.hash_space, cfg);

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(train_notes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  EncoderGrad grad;
  std::uint64_t global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    const bool epoch_updates_g = (epoch % 2 == 0);  // g first, then alternate

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      if (end - start < 2) break;  // softmax needs at least two candidates

      std::vector<const SparseFeatures*> bprof, bnote;
      bprof.reserve(end - start);
      bnote.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        bnote.push_back(&note_feats[order[k]]);
        bprof.push_back(&profile_feats[true_profile[order[k]]]);
      }

      const bool update_g = cfg.alternation == TrainConfig::Alternation::per_epoch
                                ? epoch_updates_g
                                : (global_step % 2 == 0);
      double loss = in_batch_loss_grad(model.profile_encoder, model.note_encoder,
                                       bprof, bnote, 1.0,
                                       update_g ? nullptr : &grad,
                                       update_g ? &grad : nullptr);
      if (!std::isfinite(loss))
        throw std::runtime_error("non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batches));
      if (update_g)
        adam_g.apply(model.note_encoder, grad);
      else
        adam_f.apply(model.profile_encoder, grad);
      loss_sum += loss;
      ++batches;
      ++global_step;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.phase = epoch_updates_g ? 'g' : 'f';
    stats.mean_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    if (cfg.compute_epoch_metrics) {
      EncodedSet notes_now = encode_all(note_feats, model.note_encoder);
      EncodedSet profs_now = encode_all(profile_feats, model.profile_encoder);
      stats.train_top1 = top1_fraction(notes_now.embeddings, true_ids,
                                       profs_now.embeddings, profile_ids);
      if (!val_note_feats.empty() && !val_profile_feats.empty()) {
        EncodedSet vn = encode_all(val_note_feats, model.note_encoder);
        EncodedSet vp = encode_all(val_profile_feats, model.profile_encoder);
        stats.validation_top1 = top1_fraction(vn.embeddings, val_true_ids,
                                              vp.embeddings, val_profile_ids);
      }
    }
    result.log.push_back(stats);
  }

  result.model = std::move(model);
  return result;
}

std::vector<std::vector<double>> score_matrix(
    const std::vector<std::vector<double>>& note_vectors,
    const std::vector<std::vector<double>>& profile_vectors) {
  for (const auto& v : note_vectors)
    if (!profile_vectors.empty() && v.size() != profile_vectors[0].size())
      throw std::invalid_argument("embedding dimensions differ");
  std::vector<std::vector<double>> logits(
      note_vectors.size(), std::vector<double>(profile_vectors.size(), 0.0));
  for (std::size_t i = 0; i < note_vectors.size(); ++i)
    for (std::size_t j = 0; j < profile_vectors.size(); ++j)
      logits[i][j] = dot_embed(note_vectors[i], profile_vectors[j]);
  return logits;
}

std::vector<double> posterior(const std::vector<double>& logits_row) {
  std::vector<double> p(logits_row.size(), 0.0);
  if (logits_row.empty()) return p;
  double mx = logits_row[0];
  for (double l : logits_row) {
    if (!std::isfinite(l)) throw std::invalid_argument("non-finite logit");
    mx = std::max(mx, l);
  }
  double denom = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = std::exp(logits_row[j] - mx);
    denom += p[j];
  }
  for (double& x : p) x /= denom;
  return p;
}

namespace {

struct EncodedProfiles {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> emb;
};

EncodedProfiles encode_profiles(const BiencoderModel& model,
                                const ProfileIndex& db) {
  EncodedProfiles out;
  out.ids = db.patient_ids;
  out.emb.reserve(db.features.size());
  for (const SparseFeatures& f : db.features)
    out.emb.push_back(encode(f, model.profile_encoder));
  return out;
}

RetrievalResult rank_against(const BiencoderModel& model, const LabeledNote& note,
                             const EncodedProfiles& db) {
  if (db.ids.empty()) throw std::invalid_argument("profile database is empty");
  SparseFeatures nf = featurize_text(tokenize(note.text), model.featurizer);
  std::vector<double> v = encode(nf, model.note_encoder);
  std::vector<double> logits(db.ids.size());
  for (std::size_t j = 0; j < db.ids.size(); ++j)
    logits[j] = dot_embed(v, db.emb[j]);
  std::vector<double> probs = posterior(logits);

  std::vector<std::size_t> idx(db.ids.size());
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return db.ids[a] < db.ids[b];
  });

  RetrievalResult r;
  r.note_id = note.note_id;
  r.true_patient_id = note.patient_id;
  r.ranked.reserve(idx.size());
  for (std::size_t pos = 0; pos < idx.size(); ++pos) {
    r.ranked.emplace_back(db.ids[idx[pos]], probs[idx[pos]]);
    if (db.ids[idx[pos]] == note.patient_id)
      r.rank_of_true = static_cast<int>(pos) + 1;
  }
  return r;
}

}  // namespace

RetrievalResult rank(const BiencoderModel& model, const LabeledNote& note,
                     const ProfileIndex& db) {
  return rank_against(model, note, encode_profiles(model, db));
}

double top_k_accuracy(const BiencoderModel& model,
                      const std::vector<LabeledNote>& notes,
                      const ProfileIndex& db, int k) {
  if (notes.empty()) return 0.0;
  EncodedProfiles encoded = encode_profiles(model, db);
  std::size_t hits = 0;
  for (const LabeledNote& n : notes) {
    RetrievalResult r = rank_against(model, n, encoded);
    if (r.rank_of_true >= 1 && r.rank_of_true <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(notes.size());
}

std::vector<std::vector<double>> oracle_pairwise(
    const BiencoderModel& model, const std::vector<LabeledNote>& notes,
    const std::vector<PatientProfile>& profiles) {
  if (notes.size() > 500 || profiles.size() > 500)
    throw std::invalid_argument("oracle_pairwise is limited to 500x500");

  // Everything below is deliberately self-contained scalar code; it must
  // not share the factored pipeline's matrix routines.
  const std::uint32_t dim = model.note_encoder.dim;
  std::vector<std::vector<double>> table(
      notes.size(), std::vector<double>(profiles.size(), 0.0));

  std::vector<SparseFeatures> nf, pf;
  for (const LabeledNote& n : notes)
    nf.push_back(featurize_text(tokenize(n.text), model.featurizer));
  for (const PatientProfile& p : profiles)
    pf.push_back(featurize_text(tokenize(serialize_profile(p)), model.featurizer));

  for (std::size_t i = 0; i < notes.size(); ++i) {
    std::vector<double> row(profiles.size(), 0.0);
    for (std::size_t j = 0; j < profiles.size(); ++j) {
      double logit = 0.0;
      for (std::uint32_t r = 0; r < dim; ++r) {
        double vr = 0.0;
        for (std::size_t k = 0; k < nf[i].index.size(); ++k)
          vr += nf[i].weight[k] *
                static_cast<double>(model.note_encoder.column(nf[i].index[k])[r]);
        double ur = 0.0;
        for (std::size_t k = 0; k < pf[j].index.size(); ++k)
          ur += pf[j].weight[k] * static_cast<double>(
                                      model.profile_encoder.column(pf[j].index[k])[r]);
        logit += vr * ur;
      }
      row[j] = logit;
    }
    double mx = row.empty() ? 0.0 : row[0];
    for (double l : row) mx = std::max(mx, l);
    double denom = 0.0;
    for (double l : row) denom += std::exp(l - mx);
    for (std::size_t j = 0; j < profiles.size(); ++j)
      table[i][j] = std::exp(row[j] - mx) / denom;
  }
  return table;
}

double grad_check(const BiencoderModel& model,
                  const std::vector<LabeledNote>& batch,
                  const std::vector<PatientProfile>& profiles,
                  double epsilon, int coords_per_encoder,
                  std::uint64_t sample_seed) {
  std::unordered_map<std::string, const PatientProfile*> by_id;
  for (const PatientProfile& p : profiles) by_id[p.patient_id] = &p;

  std::vector<SparseFeatures> nf, pf;
  for (const LabeledNote& n : batch) {
    auto it = by_id.find(n.patient_id);
    if (it == by_id.end())
      throw std::invalid_argument("batch note without profile: " + n.note_id);
    nf.push_back(featurize_text(tokenize(n.text), model.featurizer));
    pf.push_back(
        featurize_text(tokenize(serialize_profile(*it->second)), model.featurizer));
  }
  std::vector<const SparseFeatures*> nfp, pfp;
  for (auto& f : nf) nfp.push_back(&f);
  for (auto& f : pf) pfp.push_back(&f);

  BiencoderModel work = model;
  EncoderGrad gf, gg;
  in_batch_loss_grad(work.profile_encoder, work.note_encoder, pfp, nfp, 1.0,
                     &gf, &gg);

  auto loss_only = [&]() {
    return in_batch_loss_grad(work.profile_encoder, work.note_encoder, pfp, nfp,
                              1.0, nullptr, nullptr);
  };

  Rng rng(derive_seed(sample_seed, "grad-check"));
  double max_rel = 0.0;
  auto probe = [&](EncoderParams& params, const EncoderGrad& grad) {
    if (grad.cols.empty()) return;
    for (int s = 0; s < coords_per_encoder; ++s) {
      const std::size_t c = rng.index(grad.cols.size());
      const std::uint32_t col = grad.cols[c];
      const std::uint32_t row = static_cast<std::uint32_t>(rng.index(grad.dim));
      float* w = params.column(col) + row;
      const float orig = *w;
      const float plus = static_cast<float>(static_cast<double>(orig) + epsilon);
      const float minus = static_cast<float>(static_cast<double>(orig) - epsilon);
      *w = plus;
      const double loss_plus = loss_only();
      *w = minus;
      const double loss_minus = loss_only();
      *w = orig;
      const double step = static_cast<double>(plus) - static_cast<double>(minus);
      const double fd = (loss_plus - loss_minus) / step;
      const double analytic = grad.values[c * grad.dim + row];
      const double rel = std::abs(analytic - fd) /
                         std::max({std::abs(analytic), std::abs(fd), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
  };
  probe(work.profile_encoder, gf);
  probe(work.note_encoder, gg);
  return max_rel;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::string& out, double v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw std::runtime_error("truncated model file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, data.data() + pos, 8);
    pos += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, data.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

constexpr char kModelMagic[4] = {'R', 'D', 'A', 'M'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

void save_model(const std::filesystem::path& path, const BiencoderModel& model) {
  std::string out;
  out.append(kModelMagic, 4);
  put_u32(out, kModelVersion);
  put_str(out, kHashVersion);
  put_u32(out, model.featurizer.hash_space);
  put_u32(out, static_cast<std::uint32_t>(model.featurizer.ngram_min));
  put_u32(out, static_cast<std::uint32_t>(model.featurizer.ngram_max));
  put_u32(out, model.featurizer.word_unigrams ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(model.featurizer.prefix_tokens));
  put_u32(out, model.note_encoder.dim);
  put_u64(out, model.train_seed);
  put_f64(out, model.provenance.fraction);
  put_str(out, model.provenance.tagger);
  put_str(out, model.provenance.order);
  put_u64(out, model.provenance.mask_seed);
  for (const EncoderParams* p : {&model.profile_encoder, &model.note_encoder}) {
    put_u64(out, p->weights.size());
    out.append(reinterpret_cast<const char*>(p->weights.data()),
               p->weights.size() * sizeof(float));
  }
  atomic_write(path, out);
}

BiencoderModel load_model(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader r{data};
  r.need(4);
  if (std::memcmp(data.data(), kModelMagic, 4) != 0)
    throw std::runtime_error(path.string() + ": not a model file");
  r.pos = 4;
  if (r.u32() != kModelVersion)
    throw std::runtime_error(path.string() + ": unsupported model version");
  std::string hash_version = r.str();
  if (hash_version != kHashVersion)
    throw std::runtime_error(path.string() + ": hash version mismatch (" +
                             hash_version + ")");
  BiencoderModel m;
  m.featurizer.hash_space = r.u32();
  m.featurizer.ngram_min = static_cast<int>(r.u32());
  m.featurizer.ngram_max = static_cast<int>(r.u32());
  m.featurizer.word_unigrams = r.u32() != 0;
  m.featurizer.prefix_tokens = static_cast<int>(r.u32());
  const std::uint32_t dim = r.u32();
  m.train_seed = r.u64();
  m.provenance.fraction = r.f64();
  m.provenance.tagger = r.str();
  m.provenance.order = r.str();
  m.provenance.mask_seed = r.u64();
  for (EncoderParams* p : {&m.profile_encoder, &m.note_encoder}) {
    p->dim = dim;
    p->hash_space = m.featurizer.hash_space;
    const std::uint64_t count = r.u64();
    if (count != std::uint64_t(dim) * m.featurizer.hash_space)
      throw std::runtime_error(path.string() + ": weight count mismatch");
    p->weights.resize(count);
    r.need(count * sizeof(float));
    std::memcpy(p->weights.data(), data.data() + r.pos, count * sizeof(float));
    r.pos += count * sizeof(float);
  }
  m.profile_encoder.role = EncoderRole::profile_encoder_f;
  m.note_encoder.role = EncoderRole::note_encoder_g;
  return m;
}

std::string train_log_to_csv(const std::vector<EpochStats>& log) {
  std::string out = "epoch,phase,mean_loss,train_top1,validation_top1\n";
  for (const EpochStats& e : log) {
    out += std::to_string(e.epoch);
    out.push_back(',');
    out.push_back(e.phase);
    out.push_back(',');
    out += format_double(e.mean_loss);
    out.push_back(',');
    if (e.train_top1 >= 0.0) out += format_double(e.train_top1);
    out.push_back(',');
    if (e.validation_top1 >= 0.0) out += format_double(e.validation_top1);
    out.push_back('\n');
  }
  return out;
}

std::string retrieval_results_to_jsonl(const std::vector<RetrievalResult>& results,
                                       std::size_t top_n) {
  std::string out;
  for (const RetrievalResult& r : results) {
    nlohmann::json j;
    j["note_id"] = r.note_id;
    j["true_patient_id"] = r.true_patient_id;
    j["rank_of_true"] = r.rank_of_true;
    nlohmann::json top = nlohmann::json::array();
    for (std::size_t i = 0; i < std::min(top_n, r.ranked.size()); ++i)
      top.push_back({{"patient_id", r.ranked[i].first},
                     {"probability", r.ranked[i].second}});
    j["top"] = top;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace reidaudit
