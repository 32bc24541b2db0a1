#include "reidaudit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "reidaudit/io.hpp"
#include "reidaudit/rng.hpp"
#include "reidaudit/text.hpp"

namespace reidaudit {

namespace {

std::uint64_t point_seed(std::uint64_t base, double fraction) {
  return derive_seed(base, "point/" + std::to_string(std::llround(fraction * 1e6)));
}

std::vector<PhiSpan> spans_for(const ClinicalNote& note, const PipelineConfig& pipe) {
  if (pipe.mask_all_tokens) return full_cover_spans(note);
  if (pipe.tagger == TaggerKind::rule) return tag_rule(note, *pipe.lexicons);
  return tag_scored(note, *pipe.lexicons, pipe.confidences);
}

}  // namespace

MaskedLabeledSplit build_masked_split(
    const Corpus& corpus, const std::map<std::string, std::string>& selected,
    const std::vector<std::string>& patient_ids, const PipelineConfig& pipe,
    double fraction, std::uint64_t mask_seed) {
  std::unordered_map<std::string, const ClinicalNote*> by_note_id;
  for (const ClinicalNote& n : corpus.notes) by_note_id[n.note_id] = &n;
  std::unordered_map<std::string, const PatientProfile*> by_patient;
  for (const PatientProfile& p : corpus.profiles) by_patient[p.patient_id] = &p;

  MaskedLabeledSplit out;
  double achieved_sum = 0.0;
  for (const std::string& pid : patient_ids) {
    const ClinicalNote* note = by_note_id.at(selected.at(pid));
    out.profiles.push_back(*by_patient.at(pid));
    MaskedNote m = mask(*note, spans_for(*note, pipe), fraction, pipe.order,
                        derive_seed(mask_seed, "mask/" + note->note_id));
    achieved_sum += m.achieved_fraction;
    out.labeled.push_back({note->note_id, note->patient_id, m.masked_text});
    out.masked.push_back(std::move(m));
  }
  if (!out.labeled.empty())
    out.mean_achieved = achieved_sum / static_cast<double>(out.labeled.size());
  return out;
}

PointResult run_masking_point(const Corpus& corpus, const SplitAssignment& splits,
                              const PipelineConfig& pipe, double fraction) {
  validate_corpus(corpus);
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("fraction outside [0,1]");
  if (pipe.tagger == TaggerKind::rule && !pipe.mask_all_tokens &&
      pipe.order == MaskOrder::confidence_desc)
    throw std::invalid_argument(
        "rule tagger emits no confidences; use random order");

  const std::uint64_t seed = point_seed(pipe.base_seed, fraction);
  const auto selected =
      select_note_per_patient(corpus, pipe.featurizer.prefix_tokens);

  MaskedLabeledSplit train_masked =
      build_masked_split(corpus, selected, splits.train, pipe, fraction, seed);
  MaskedLabeledSplit val_masked =
      build_masked_split(corpus, selected, splits.validation, pipe, fraction, seed);
  MaskedLabeledSplit test_masked =
      build_masked_split(corpus, selected, splits.test, pipe, fraction, seed);

  TrainConfig tcfg = pipe.train;
  tcfg.seed = derive_seed(seed, "train");
  TrainResult trained = train(
      train_masked.labeled, train_masked.profiles, pipe.featurizer, tcfg,
      tcfg.compute_epoch_metrics ? &val_masked.labeled : nullptr,
      tcfg.compute_epoch_metrics ? &val_masked.profiles : nullptr);

  ProfileIndex test_db = ProfileIndex::build(test_masked.profiles, pipe.featurizer);

  PointResult out;
  out.model = std::move(trained.model);
  out.model.provenance.fraction = fraction;
  out.model.provenance.tagger =
      pipe.mask_all_tokens ? "all" : (pipe.tagger == TaggerKind::rule ? "rule" : "scored");
  out.model.provenance.order =
      pipe.order == MaskOrder::confidence_desc ? "confidence_desc" : "random";
  out.model.provenance.mask_seed = seed;
  out.train_log = std::move(trained.log);

  for (const LabeledNote& n : test_masked.labeled)
    out.test_results.push_back(rank(out.model, n, test_db));

  CurvePoint& pt = out.point;
  pt.requested_fraction = fraction;
  pt.mean_achieved_fraction = test_masked.mean_achieved;
  pt.seed = seed;
  const double total = static_cast<double>(out.test_results.size());
  for (int k : pipe.ks) {
    std::size_t hits = 0;
    for (const RetrievalResult& r : out.test_results)
      if (r.rank_of_true >= 1 && r.rank_of_true <= k) ++hits;
    pt.topk[k] = total > 0 ? static_cast<double>(hits) / total : 0.0;
  }
  pt.top1 = pt.topk.count(1) ? pt.topk[1] : 0.0;

  out.masked_test = std::move(test_masked.masked);
  out.test_profiles = std::move(test_masked.profiles);
  return out;
}

std::vector<CurvePoint> masking_curve(const Corpus& corpus,
                                      const SplitAssignment& splits,
                                      const PipelineConfig& pipe,
                                      const std::vector<double>& fractions) {
  if (fractions.empty()) throw std::invalid_argument("empty fraction list");
  if (!std::is_sorted(fractions.begin(), fractions.end()))
    throw std::invalid_argument("fractions must be sorted ascending");
  for (double f : fractions)
    if (f < 0.0 || f > 1.0)
      throw std::invalid_argument("fraction outside [0,1]");

  std::vector<CurvePoint> points(fractions.size());
  const int jobs = std::max(1, pipe.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < fractions.size(); ++i)
      points[i] = run_masking_point(corpus, splits, pipe, fractions[i]).point;
    return points;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= fractions.size()) return;
      try {
        points[i] = run_masking_point(corpus, splits, pipe, fractions[i]).point;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const std::size_t workers =
      std::min(static_cast<std::size_t>(jobs), fractions.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return points;
}

namespace {

void check_threshold_args(double target, double res, double lo, double hi) {
  if (target <= 0.0 || target > 1.0)
    throw std::invalid_argument("target must be in (0,1]");
  if (res <= 0.0) throw std::invalid_argument("grid resolution must be > 0");
  if (hi < lo) throw std::invalid_argument("hi < lo");
}

std::vector<std::string> monotonicity_warnings(
    const std::vector<std::pair<double, double>>& evaluated) {
  std::vector<std::string> warnings;
  for (std::size_t i = 1; i < evaluated.size(); ++i) {
    if (evaluated[i].second > evaluated[i - 1].second) {
      warnings.push_back(
          "non-monotone: accuracy " + format_double(evaluated[i - 1].second) +
          " at fraction " + format_double(evaluated[i - 1].first) + " vs " +
          format_double(evaluated[i].second) + " at fraction " +
          format_double(evaluated[i].first));
    }
  }
  return warnings;
}

}  // namespace

ThresholdResult find_threshold_binary(const CurveEvaluator& evaluator,
                                      double target, double grid_resolution,
                                      double lo, double hi) {
  check_threshold_args(target, grid_resolution, lo, hi);
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / grid_resolution));
  auto frac = [&](std::size_t i) { return lo + static_cast<double>(i) * grid_resolution; };

  std::map<std::size_t, double> cache;
  auto eval_at = [&](std::size_t i) {
    auto it = cache.find(i);
    if (it != cache.end()) return it->second;
    double acc = evaluator(frac(i));
    cache[i] = acc;
    return acc;
  };

  std::size_t left = 0, right = n;
  while (left < right) {
    std::size_t mid = left + (right - left) / 2;
    if (eval_at(mid) <= target)
      right = mid;
    else
      left = mid + 1;
  }

  ThresholdResult out;
  const bool found = eval_at(left) <= target;
  if (found) out.fraction = frac(left);
  for (const auto& [i, acc] : cache) out.evaluated.emplace_back(frac(i), acc);
  out.warnings = monotonicity_warnings(out.evaluated);
  return out;
}

ThresholdResult find_threshold_exhaustive(const CurveEvaluator& evaluator,
                                          double target, double grid_resolution,
                                          double lo, double hi) {
  check_threshold_args(target, grid_resolution, lo, hi);
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / grid_resolution));
  ThresholdResult out;
  for (std::size_t i = 0; i <= n; ++i) {
    double f = lo + static_cast<double>(i) * grid_resolution;
    double acc = evaluator(f);
    out.evaluated.emplace_back(f, acc);
    if (acc <= target) {
      out.fraction = f;
      break;
    }
  }
  return out;
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::low_incorrect: return "low_incorrect";
    case Quadrant::low_correct: return "low_correct";
    case Quadrant::high_correct: return "high_correct";
    case Quadrant::high_incorrect: return "high_incorrect";
    default: return "mid";
  }
}

std::vector<std::pair<std::string, std::string>> verbatim_field_hits(
    const std::string& masked_text, const PatientProfile& profile) {
  std::vector<std::pair<std::string, std::string>> hits;
  std::vector<std::string> tokens = tokenize(masked_text);
  for (std::size_t f = 0; f < kProfileFieldCount; ++f) {
    const auto& value = profile_field(profile, f);
    if (!value) continue;
    if (detail::value_in_tokens(tokens, tokens.size(), *value))
      hits.emplace_back(std::string(profile_field_names()[f]), *value);
  }
  return hits;
}

AuditReport error_report(const std::vector<RetrievalResult>& results,
                         const std::vector<MaskedNote>& masked_notes,
                         const std::vector<PatientProfile>& profiles,
                         double low_cut, double high_cut) {
  if (!(0.0 <= low_cut && low_cut < high_cut && high_cut <= 1.0))
    throw std::invalid_argument("cuts must satisfy 0 <= low < high <= 1");

  std::unordered_map<std::string, const MaskedNote*> masked_by_id;
  for (const MaskedNote& m : masked_notes) masked_by_id[m.note_id] = &m;
  std::unordered_map<std::string, const PatientProfile*> profile_by_id;
  for (const PatientProfile& p : profiles) profile_by_id[p.patient_id] = &p;

  AuditReport report;
  report.low_cut = low_cut;
  report.high_cut = high_cut;
  std::map<Quadrant, std::size_t> counts = {{Quadrant::low_incorrect, 0},
                                            {Quadrant::low_correct, 0},
                                            {Quadrant::high_correct, 0},
                                            {Quadrant::high_incorrect, 0},
                                            {Quadrant::mid, 0}};
  for (const RetrievalResult& r : results) {
    auto mit = masked_by_id.find(r.note_id);
    if (mit == masked_by_id.end())
      throw std::invalid_argument("no masked note for result '" + r.note_id + "'");
    const MaskedNote& m = *mit->second;

    AuditEntry e;
    e.note_id = r.note_id;
    e.achieved_fraction = m.achieved_fraction;
    e.correct = r.rank_of_true == 1;
    e.mapped_probability = r.ranked.empty() ? 0.0 : r.ranked.front().second;
    if (m.achieved_fraction <= low_cut)
      e.quadrant = e.correct ? Quadrant::low_correct : Quadrant::low_incorrect;
    else if (m.achieved_fraction >= high_cut)
      e.quadrant = e.correct ? Quadrant::high_correct : Quadrant::high_incorrect;
    else
      e.quadrant = Quadrant::mid;

    if (e.quadrant == Quadrant::low_incorrect ||
        e.quadrant == Quadrant::high_correct) {
      auto pit = profile_by_id.find(r.true_patient_id);
      if (pit != profile_by_id.end())
        e.verbatim_hits = verbatim_field_hits(m.masked_text, *pit->second);
    }
    ++counts[e.quadrant];
    report.entries.push_back(std::move(e));
  }
  const double total = static_cast<double>(results.size());
  for (const auto& [q, c] : counts)
    report.rates[q] = total > 0 ? static_cast<double>(c) / total : 0.0;
  return report;
}

LinkageResult linkage_uniqueness(const std::vector<PatientProfile>& profiles,
                                 const std::vector<std::string>& field_subset) {
  if (profiles.empty()) throw std::invalid_argument("profiles must be nonempty");
  if (field_subset.empty()) throw std::invalid_argument("field subset is empty");
  std::vector<std::size_t> indices;
  for (const std::string& name : field_subset) {
    int f = profile_field_index(name);
    if (f < 0) throw std::invalid_argument("unknown field '" + name + "'");
    indices.push_back(static_cast<std::size_t>(f));
  }

  std::map<std::string, std::size_t> class_sizes;
  std::vector<std::string> key_of(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    std::string key;
    for (std::size_t f : indices) {
      const auto& value = profile_field(profiles[i], f);
      key += value ? normalize(*value) : std::string("\x01<absent>");
      key.push_back('\x1f');
    }
    ++class_sizes[key];
    key_of[i] = std::move(key);
  }

  LinkageResult out;
  out.field_subset = field_subset;
  std::size_t unique = 0;
  std::map<int, std::size_t> violating = {{2, 0}, {5, 0}, {10, 0}};
  for (const std::string& key : key_of) {
    std::size_t size = class_sizes[key];
    if (size == 1) ++unique;
    for (auto& [k, count] : violating)
      if (size < static_cast<std::size_t>(k)) ++count;
  }
  const double n = static_cast<double>(profiles.size());
  out.uniqueness_rate = static_cast<double>(unique) / n;
  for (const auto& [k, count] : violating)
    out.k_anonymity_violations[k] = static_cast<double>(count) / n;
  return out;
}

std::string curve_to_csv(const std::vector<CurvePoint>& points) {
  std::string out =
      "requested_fraction,mean_achieved_fraction,top1,top5,top10,seed\n";
  for (const CurvePoint& p : points) {
    out += format_double(p.requested_fraction);
    out.push_back(',');
    out += format_double(p.mean_achieved_fraction);
    for (int k : {1, 5, 10}) {
      out.push_back(',');
      auto it = p.topk.find(k);
      if (it != p.topk.end()) out += format_double(it->second);
    }
    out.push_back(',');
    out += std::to_string(p.seed);
    out.push_back('\n');
  }
  return out;
}

std::string audit_to_jsonl(const AuditReport& report) {
  std::string out;
  for (const AuditEntry& e : report.entries) {
    nlohmann::json j;
    j["note_id"] = e.note_id;
    j["achieved_fraction"] = e.achieved_fraction;
    j["correct"] = e.correct;
    j["mapped_probability"] = e.mapped_probability;
    j["quadrant"] = std::string(to_string(e.quadrant));
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& [field, value] : e.verbatim_hits)
      hits.push_back({{"field", field}, {"value", value}});
    j["verbatim_hits"] = hits;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::string threshold_to_text(const ThresholdResult& result, double target) {
  std::string out = "target: " + format_double(target) + "\n";
  out += "threshold: ";
  out += result.fraction ? format_double(*result.fraction) : std::string("not-found");
  out.push_back('\n');
  out += "evaluated:\n";
  for (const auto& [f, acc] : result.evaluated)
    out += "  " + format_double(f) + " " + format_double(acc) + "\n";
  if (!result.warnings.empty()) {
    out += "warnings:\n";
    for (const std::string& w : result.warnings) out += "  " + w + "\n";
  }
  return out;
}

std::string linkage_to_csv(const std::vector<LinkageResult>& results) {
  std::string out =
      "field_subset,uniqueness_rate,violations_k2,violations_k5,violations_k10\n";
  for (const LinkageResult& r : results) {
    std::string fields;
    for (std::size_t i = 0; i < r.field_subset.size(); ++i) {
      if (i) fields.push_back('+');
      fields += r.field_subset[i];
    }
    out += fields;
    out.push_back(',');
    out += format_double(r.uniqueness_rate);
    for (int k : {2, 5, 10}) {
      out.push_back(',');
      auto it = r.k_anonymity_violations.find(k);
      if (it != r.k_anonymity_violations.end()) out += format_double(it->second);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace reidaudit
