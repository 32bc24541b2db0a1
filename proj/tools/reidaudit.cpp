// reidaudit: generate synthetic corpora, deidentify notes, train the
// reidentification model, sweep masking curves, search masking
// thresholds, and emit audit reports. Outputs are deterministic per
// (config, seed) and carry no timestamps.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reidaudit/config.hpp"
#include "reidaudit/corpus.hpp"
#include "reidaudit/deid.hpp"
#include "reidaudit/eval.hpp"
#include "reidaudit/io.hpp"
#include "reidaudit/reid.hpp"
#include "reidaudit/rng.hpp"

namespace ra = reidaudit;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "key=value config file");
  cmd->add_option("--set", common.overrides,
                  "config override key=value (repeatable)");
  cmd->add_option("--seed", common.seed, "global seed")
      ->each([&common](const std::string&) { common.seed_set = true; });
}

ra::RunConfig resolve_config(const Common& common) {
  ra::RunConfig cfg;
  if (!common.config_path.empty()) cfg.apply_file(common.config_path);
  for (const std::string& kv : common.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (common.seed_set) cfg.seed = common.seed;
  return cfg;
}

void echo_config(const ra::RunConfig& cfg, const fs::path& out_dir) {
  ra::atomic_write(out_dir / "config.effective", cfg.to_text());
}

void echo_config_for_file(const ra::RunConfig& cfg, const fs::path& out_file) {
  ra::atomic_write(fs::path(out_file.string() + ".config"), cfg.to_text());
}

ra::Corpus load_corpus(const fs::path& dir) {
  ra::Corpus corpus;
  corpus.profiles = ra::ingest_profiles(dir / "profiles.csv");
  corpus.notes = ra::ingest_notes(dir / "notes.jsonl", corpus.profiles);
  ra::validate_corpus(corpus);
  return corpus;
}

ra::PipelineConfig pipeline_with_lexicons(const ra::RunConfig& cfg,
                                          const ra::Lexicons& lexicons) {
  ra::PipelineConfig pipe = cfg.pipeline();
  pipe.lexicons = &lexicons;
  return pipe;
}

std::vector<double> parse_fraction_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i <= csv.size()) {
    std::size_t j = csv.find(',', i);
    if (j == std::string::npos) j = csv.size();
    if (j > i) out.push_back(std::stod(csv.substr(i, j - i)));
    i = j + 1;
  }
  return out;
}

int cmd_generate(const Common& common, const std::string& out_dir) {
  ra::RunConfig cfg = resolve_config(common);
  ra::Corpus corpus = ra::generate_population(
      cfg.n_patients, cfg.generator.notes_per_patient, cfg.generator, cfg.seed);
  fs::create_directories(out_dir);
  ra::write_profiles_csv(fs::path(out_dir) / "profiles.csv", corpus.profiles);
  ra::write_notes_jsonl(fs::path(out_dir) / "notes.jsonl", corpus.notes);
  echo_config(cfg, out_dir);
  std::cout << "wrote " << corpus.profiles.size() << " profiles, "
            << corpus.notes.size() << " notes to " << out_dir << "\n";
  return 0;
}

int cmd_deid(const Common& common, const std::string& notes_path,
             const std::string& fraction_text, const std::string& out_path,
             const std::string& spans_out) {
  ra::RunConfig cfg = resolve_config(common);
  const double fraction = std::stod(fraction_text);
  ra::Lexicons lexicons = cfg.load_lexicons();
  std::vector<ra::ClinicalNote> notes = ra::ingest_notes(notes_path);

  std::string masked_out, spans_dump;
  for (const ra::ClinicalNote& note : notes) {
    std::vector<ra::PhiSpan> spans =
        cfg.tagger == ra::TaggerKind::rule
            ? ra::tag_rule(note, lexicons)
            : ra::tag_scored(note, lexicons, cfg.confidences);
    if (!spans_out.empty()) spans_dump += ra::spans_to_jsonl(note.note_id, spans);
    ra::MaskedNote m =
        ra::mask(note, spans, fraction, cfg.order,
                 ra::derive_seed(cfg.seed, "mask/" + note.note_id));
    nlohmann::json j;
    j["note_id"] = m.note_id;
    j["masked_text"] = m.masked_text;
    j["masked_token_indices"] = m.masked_token_indices;
    j["requested_fraction"] = m.requested_fraction;
    j["achieved_fraction"] = m.achieved_fraction;
    masked_out += j.dump();
    masked_out.push_back('\n');
  }
  ra::atomic_write(out_path, masked_out);
  if (!spans_out.empty()) ra::atomic_write(spans_out, spans_dump);
  echo_config_for_file(cfg, out_path);
  std::cout << "masked " << notes.size() << " notes at fraction " << fraction
            << " -> " << out_path << "\n";
  return 0;
}

int cmd_train(const Common& common, const std::string& corpus_dir,
              const std::string& fraction_text, const std::string& model_out,
              const std::string& log_out) {
  ra::RunConfig cfg = resolve_config(common);
  const double fraction = std::stod(fraction_text);
  ra::Corpus corpus = load_corpus(corpus_dir);
  ra::SplitAssignment splits = ra::split_corpus(corpus, cfg.split_ratios, cfg.seed);
  ra::Lexicons lexicons = cfg.load_lexicons();
  ra::PipelineConfig pipe = pipeline_with_lexicons(cfg, lexicons);

  ra::PointResult result = ra::run_masking_point(corpus, splits, pipe, fraction);
  ra::save_model(model_out, result.model);
  if (!log_out.empty())
    ra::atomic_write(log_out, ra::train_log_to_csv(result.train_log));
  echo_config_for_file(cfg, model_out);
  std::cout << "trained at fraction " << fraction << "; test top-1 "
            << result.point.top1 << "; model -> " << model_out << "\n";
  return 0;
}

int cmd_eval(const Common& common, const std::string& model_path,
             const std::string& corpus_dir, const std::string& report_out) {
  ra::RunConfig cfg = resolve_config(common);
  ra::BiencoderModel model = ra::load_model(model_path);
  ra::Corpus corpus = load_corpus(corpus_dir);
  ra::SplitAssignment splits = ra::split_corpus(corpus, cfg.split_ratios, cfg.seed);
  ra::Lexicons lexicons = cfg.load_lexicons();

  // Reproduce the masking the model was trained against.
  ra::PipelineConfig pipe = pipeline_with_lexicons(cfg, lexicons);
  pipe.featurizer = model.featurizer;
  pipe.mask_all_tokens = model.provenance.tagger == "all";
  if (model.provenance.tagger == "rule") pipe.tagger = ra::TaggerKind::rule;
  if (model.provenance.tagger == "scored") pipe.tagger = ra::TaggerKind::scored;
  pipe.order = model.provenance.order == "random" ? ra::MaskOrder::random_order
                                                  : ra::MaskOrder::confidence_desc;

  auto selected = ra::select_note_per_patient(corpus, pipe.featurizer.prefix_tokens);
  ra::MaskedLabeledSplit test = ra::build_masked_split(
      corpus, selected, splits.test, pipe, model.provenance.fraction,
      model.provenance.mask_seed);

  ra::ProfileIndex db = ra::ProfileIndex::build(test.profiles, pipe.featurizer);
  std::vector<ra::RetrievalResult> results;
  for (const ra::LabeledNote& n : test.labeled)
    results.push_back(ra::rank(model, n, db));
  ra::atomic_write(report_out, ra::retrieval_results_to_jsonl(results));
  echo_config_for_file(cfg, report_out);

  for (int k : cfg.ks) {
    std::size_t hits = 0;
    for (const ra::RetrievalResult& r : results)
      if (r.rank_of_true >= 1 && r.rank_of_true <= k) ++hits;
    std::cout << "top-" << k << " accuracy: "
              << static_cast<double>(hits) /
                     static_cast<double>(std::max<std::size_t>(1, results.size()))
              << "\n";
  }
  return 0;
}

int cmd_curve(const Common& common, const std::string& corpus_dir,
              const std::string& fractions_csv, const std::string& out_dir,
              bool save_models) {
  ra::RunConfig cfg = resolve_config(common);
  if (!fractions_csv.empty()) cfg.fractions = parse_fraction_list(fractions_csv);
  ra::Corpus corpus = load_corpus(corpus_dir);
  ra::SplitAssignment splits = ra::split_corpus(corpus, cfg.split_ratios, cfg.seed);
  ra::Lexicons lexicons = cfg.load_lexicons();
  ra::PipelineConfig pipe = pipeline_with_lexicons(cfg, lexicons);

  fs::create_directories(out_dir);
  std::vector<ra::CurvePoint> points;
  if (save_models) {
    for (double f : cfg.fractions) {
      ra::PointResult r = ra::run_masking_point(corpus, splits, pipe, f);
      char name[64];
      std::snprintf(name, sizeof(name), "model_%07.4f.bin", f);
      ra::save_model(fs::path(out_dir) / name, r.model);
      points.push_back(r.point);
    }
  } else {
    points = ra::masking_curve(corpus, splits, pipe, cfg.fractions);
  }
  ra::atomic_write(fs::path(out_dir) / "curve.csv", ra::curve_to_csv(points));
  echo_config(cfg, out_dir);
  for (const ra::CurvePoint& p : points)
    std::cout << "fraction " << p.requested_fraction << ": top-1 " << p.top1
              << "\n";
  return 0;
}

int cmd_threshold(const Common& common, const std::string& corpus_dir,
                  const std::string& mode, const std::string& out_path) {
  ra::RunConfig cfg = resolve_config(common);
  ra::Corpus corpus = load_corpus(corpus_dir);
  ra::SplitAssignment splits = ra::split_corpus(corpus, cfg.split_ratios, cfg.seed);
  ra::Lexicons lexicons = cfg.load_lexicons();
  ra::PipelineConfig pipe = pipeline_with_lexicons(cfg, lexicons);

  ra::CurveEvaluator evaluator = [&](double fraction) {
    double top1 = ra::run_masking_point(corpus, splits, pipe, fraction).point.top1;
    std::cout << "  evaluated fraction " << fraction << ": top-1 " << top1
              << "\n";
    return top1;
  };
  ra::ThresholdResult result =
      mode == "exhaustive"
          ? ra::find_threshold_exhaustive(evaluator, cfg.target, cfg.resolution)
          : ra::find_threshold_binary(evaluator, cfg.target, cfg.resolution);
  ra::atomic_write(out_path, ra::threshold_to_text(result, cfg.target));
  echo_config_for_file(cfg, out_path);
  if (result.fraction)
    std::cout << "threshold: " << *result.fraction << "\n";
  else
    std::cout << "threshold: not-found (target unreachable)\n";
  for (const std::string& w : result.warnings) std::cout << "warning: " << w << "\n";
  return result.fraction ? 0 : 2;
}

int cmd_audit(const Common& common, const std::string& model_path,
              const std::string& corpus_dir, const std::string& fraction_text,
              const std::string& out_path) {
  ra::RunConfig cfg = resolve_config(common);
  const double fraction = std::stod(fraction_text);
  ra::BiencoderModel model = ra::load_model(model_path);
  ra::Corpus corpus = load_corpus(corpus_dir);
  ra::SplitAssignment splits = ra::split_corpus(corpus, cfg.split_ratios, cfg.seed);
  ra::Lexicons lexicons = cfg.load_lexicons();
  ra::PipelineConfig pipe = pipeline_with_lexicons(cfg, lexicons);
  pipe.featurizer = model.featurizer;

  auto selected = ra::select_note_per_patient(corpus, pipe.featurizer.prefix_tokens);
  ra::MaskedLabeledSplit test = ra::build_masked_split(
      corpus, selected, splits.test, pipe, fraction,
      ra::derive_seed(cfg.seed, "audit-mask"));

  ra::ProfileIndex db = ra::ProfileIndex::build(test.profiles, pipe.featurizer);
  std::vector<ra::RetrievalResult> results;
  for (const ra::LabeledNote& n : test.labeled)
    results.push_back(ra::rank(model, n, db));

  ra::AuditReport report = ra::error_report(results, test.masked, test.profiles,
                                            cfg.low_cut, cfg.high_cut);
  ra::atomic_write(out_path, ra::audit_to_jsonl(report));
  echo_config_for_file(cfg, out_path);
  for (const auto& [q, rate] : report.rates)
    std::cout << ra::to_string(q) << ": " << rate << "\n";
  return 0;
}

int cmd_linkage(const Common& common, const std::string& profiles_path,
                const std::string& fields_csv, const std::string& out_path) {
  ra::RunConfig cfg = resolve_config(common);
  std::vector<ra::PatientProfile> profiles = ra::ingest_profiles(profiles_path);
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i <= fields_csv.size()) {
    std::size_t j = fields_csv.find(',', i);
    if (j == std::string::npos) j = fields_csv.size();
    if (j > i) fields.push_back(fields_csv.substr(i, j - i));
    i = j + 1;
  }
  ra::LinkageResult result = ra::linkage_uniqueness(profiles, fields);
  ra::atomic_write(out_path, ra::linkage_to_csv({result}));
  echo_config_for_file(cfg, out_path);
  std::cout << "uniqueness_rate: " << result.uniqueness_rate << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial reidentification audit toolkit"};
  app.require_subcommand(1);

  Common common;
  std::string out_dir, out_path, notes_path, corpus_dir, model_path;
  std::string fraction_text = "0", fractions_csv, spans_out, log_out;
  std::string mode = "binary", fields_csv, profiles_path, report_out;
  bool save_models = false;

  CLI::App* generate = app.add_subcommand("generate", "generate a synthetic corpus");
  add_common(generate, common);
  generate->add_option("--out", out_dir, "output directory")->required();

  CLI::App* deid = app.add_subcommand("deid", "tag and mask a notes file");
  add_common(deid, common);
  deid->add_option("--notes", notes_path, "notes.jsonl")->required();
  deid->add_option("--fraction", fraction_text, "masking fraction")->required();
  deid->add_option("--out", out_path, "masked notes JSONL")->required();
  deid->add_option("--spans-out", spans_out, "optional span dump JSONL");

  CLI::App* train = app.add_subcommand("train", "train a reidentification model");
  add_common(train, common);
  train->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train->add_option("--fraction", fraction_text, "masking fraction")->required();
  train->add_option("--model-out", model_path, "model file")->required();
  train->add_option("--log", log_out, "training log CSV");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a model on the test split");
  add_common(eval, common);
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--corpus", corpus_dir, "corpus directory")->required();
  eval->add_option("--report", report_out, "retrieval results JSONL")->required();

  CLI::App* curve = app.add_subcommand("curve", "sweep masking fractions");
  add_common(curve, common);
  curve->add_option("--corpus", corpus_dir, "corpus directory")->required();
  curve->add_option("--fractions", fractions_csv, "comma-separated fractions");
  curve->add_option("--out", out_dir, "output directory")->required();
  curve->add_flag("--save-models", save_models, "write one model per point");

  CLI::App* threshold =
      app.add_subcommand("threshold", "find the minimum masking for a target");
  add_common(threshold, common);
  threshold->add_option("--corpus", corpus_dir, "corpus directory")->required();
  threshold->add_option("--mode", mode, "binary|exhaustive")
      ->check(CLI::IsMember({"binary", "exhaustive"}));
  threshold->add_option("--out", out_path, "threshold report file")->required();

  CLI::App* audit = app.add_subcommand("audit", "error-quadrant audit report");
  add_common(audit, common);
  audit->add_option("--model", model_path, "model file")->required();
  audit->add_option("--corpus", corpus_dir, "corpus directory")->required();
  audit->add_option("--fraction", fraction_text, "masking fraction")->required();
  audit->add_option("--out", out_path, "audit JSONL")->required();

  CLI::App* linkage = app.add_subcommand("linkage", "quasi-identifier uniqueness");
  add_common(linkage, common);
  linkage->add_option("--profiles", profiles_path, "profiles.csv")->required();
  linkage->add_option("--fields", fields_csv, "comma-separated field names")
      ->required();
  linkage->add_option("--out", out_path, "linkage CSV")->required();

  CLI::App* print_config =
      app.add_subcommand("print-config", "print the effective configuration");
  add_common(print_config, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(common, out_dir);
    if (deid->parsed())
      return cmd_deid(common, notes_path, fraction_text, out_path, spans_out);
    if (train->parsed())
      return cmd_train(common, corpus_dir, fraction_text, model_path, log_out);
    if (eval->parsed()) return cmd_eval(common, model_path, corpus_dir, report_out);
    if (curve->parsed())
      return cmd_curve(common, corpus_dir, fractions_csv, out_dir, save_models);
    if (threshold->parsed()) return cmd_threshold(common, corpus_dir, mode, out_path);
    if (audit->parsed())
      return cmd_audit(common, model_path, corpus_dir, fraction_text, out_path);
    if (linkage->parsed())
      return cmd_linkage(common, profiles_path, fields_csv, out_path);
    if (print_config->parsed()) {
      std::cout << resolve_config(common).to_text();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
