#include "reidaudit/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "reidaudit/io.hpp"

namespace reidaudit {

namespace {

long long to_int(const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("not an integer: '" + v + "'");
  return out;
}

double to_real(const std::string& v) {
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw std::invalid_argument("not a number: '" + v + "'");
  }
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i <= v.size()) {
    std::size_t j = v.find(',', i);
    if (j == std::string::npos) j = v.size();
    parts.push_back(v.substr(i, j - i));
    i = j + 1;
  }
  while (!parts.empty() && parts.back().empty()) parts.pop_back();
  return parts;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Entry {
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

std::map<std::string, Entry> registry(RunConfig& c) {
  std::map<std::string, Entry> reg;
  auto add_int = [&](const std::string& key, auto& field) {
    reg[key] = {[&field] { return std::to_string(field); },
                [&field](const std::string& v) {
                  field = static_cast<std::remove_reference_t<decltype(field)>>(
                      to_int(v));
                }};
  };
  auto add_real = [&](const std::string& key, double& field) {
    reg[key] = {[&field] { return format_double(field); },
                [&field](const std::string& v) { field = to_real(v); }};
  };
  auto add_bool = [&](const std::string& key, bool& field) {
    reg[key] = {[&field] { return bool_text(field); },
                [&field](const std::string& v) { field = to_bool(v); }};
  };

  reg["seed"] = {[&c] { return std::to_string(c.seed); },
                 [&c](const std::string& v) {
                   c.seed = static_cast<std::uint64_t>(to_int(v));
                 }};
  add_int("corpus.n_patients", c.n_patients);
  add_int("corpus.notes_per_patient", c.generator.notes_per_patient);
  add_int("corpus.template_pool", c.generator.template_pool);
  add_int("corpus.filler_min", c.generator.filler_min);
  add_int("corpus.filler_max", c.generator.filler_max);
  add_int("corpus.pool_birth_dates", c.generator.pool_birth_dates);
  add_int("corpus.pool_note_datetimes", c.generator.pool_note_datetimes);
  add_int("corpus.pool_death_dates", c.generator.pool_death_dates);
  add_int("corpus.pool_addresses", c.generator.pool_addresses);
  add_int("corpus.pool_zips", c.generator.pool_zips);
  add_int("corpus.min_planted", c.generator.min_planted);
  add_int("corpus.plant_repeats", c.generator.plant_repeats);
  add_real("corpus.plant_prob", c.generator.plant_prob);
  add_real("corpus.quasi_prob", c.generator.quasi_prob);
  add_real("corpus.phone_prob", c.generator.phone_prob);
  add_real("corpus.name_prob", c.generator.name_prob);
  for (std::size_t f = 0; f < kProfileFieldCount; ++f)
    add_real("corpus.presence." + std::string(profile_field_names()[f]),
             c.generator.presence[f]);
  add_real("corpus.split_train", c.split_ratios[0]);
  add_real("corpus.split_validation", c.split_ratios[1]);
  add_real("corpus.split_test", c.split_ratios[2]);

  add_int("featurizer.hash_space", c.featurizer.hash_space);
  add_int("featurizer.ngram_min", c.featurizer.ngram_min);
  add_int("featurizer.ngram_max", c.featurizer.ngram_max);
  add_bool("featurizer.word_unigrams", c.featurizer.word_unigrams);
  add_int("featurizer.prefix_tokens", c.featurizer.prefix_tokens);

  add_int("reid.epochs", c.train.epochs);
  add_int("reid.batch_size", c.train.batch_size);
  add_real("reid.learning_rate", c.train.learning_rate);
  add_real("reid.beta1", c.train.beta1);
  add_real("reid.beta2", c.train.beta2);
  add_real("reid.adam_epsilon", c.train.adam_epsilon);
  add_int("reid.dim", c.train.dim);
  add_bool("reid.epoch_metrics", c.train.compute_epoch_metrics);
  reg["reid.alternation"] = {
      [&c] {
        return c.train.alternation == TrainConfig::Alternation::per_epoch
                   ? "epoch"
                   : "step";
      },
      [&c](const std::string& v) {
        if (v == "epoch")
          c.train.alternation = TrainConfig::Alternation::per_epoch;
        else if (v == "step")
          c.train.alternation = TrainConfig::Alternation::per_step;
        else
          throw std::invalid_argument("reid.alternation must be epoch or step");
      }};

  reg["deid.tagger"] = {
      [&c] { return c.tagger == TaggerKind::rule ? "rule" : "scored"; },
      [&c](const std::string& v) {
        if (v == "rule")
          c.tagger = TaggerKind::rule;
        else if (v == "scored")
          c.tagger = TaggerKind::scored;
        else
          throw std::invalid_argument("deid.tagger must be rule or scored");
      }};
  reg["deid.order"] = {
      [&c] {
        return c.order == MaskOrder::confidence_desc ? "confidence_desc"
                                                     : "random";
      },
      [&c](const std::string& v) {
        if (v == "confidence_desc")
          c.order = MaskOrder::confidence_desc;
        else if (v == "random")
          c.order = MaskOrder::random_order;
        else
          throw std::invalid_argument(
              "deid.order must be confidence_desc or random");
      }};
  for (std::size_t cat = 0; cat < kPhiCategoryCount; ++cat) {
    add_real("deid.confidence." +
                 std::string(to_string(static_cast<PhiCategory>(cat))),
             c.confidences[cat]);
  }
  reg["lexicons.blocklist"] = {
      [&c] { return c.blocklist_path.string(); },
      [&c](const std::string& v) { c.blocklist_path = v; }};
  reg["lexicons.allowlist"] = {
      [&c] { return c.allowlist_path.string(); },
      [&c](const std::string& v) { c.allowlist_path = v; }};

  reg["eval.fractions"] = {
      [&c] {
        std::string out;
        for (std::size_t i = 0; i < c.fractions.size(); ++i) {
          if (i) out.push_back(',');
          out += format_double(c.fractions[i]);
        }
        return out;
      },
      [&c](const std::string& v) {
        std::vector<double> fr;
        for (const std::string& part : split_list(v)) fr.push_back(to_real(part));
        if (fr.empty()) throw std::invalid_argument("eval.fractions is empty");
        c.fractions = std::move(fr);
      }};
  add_real("eval.target", c.target);
  add_real("eval.resolution", c.resolution);
  add_real("eval.low_cut", c.low_cut);
  add_real("eval.high_cut", c.high_cut);
  reg["eval.ks"] = {
      [&c] {
        std::string out;
        for (std::size_t i = 0; i < c.ks.size(); ++i) {
          if (i) out.push_back(',');
          out += std::to_string(c.ks[i]);
        }
        return out;
      },
      [&c](const std::string& v) {
        std::vector<int> ks;
        for (const std::string& part : split_list(v))
          ks.push_back(static_cast<int>(to_int(part)));
        if (ks.empty()) throw std::invalid_argument("eval.ks is empty");
        c.ks = std::move(ks);
      }};
  add_int("jobs", c.jobs);
  return reg;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto reg = registry(*this);
  auto it = reg.find(key);
  if (it == reg.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  try {
    it->second.set(value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(key + ": " + e.what());
  }
}

std::string RunConfig::to_text() const {
  auto reg = registry(const_cast<RunConfig&>(*this));
  std::string out;
  for (const auto& [key, entry] : reg) {
    out += key;
    out.push_back('=');
    out += entry.get();
    out.push_back('\n');
  }
  return out;
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t");
    line = line.substr(begin, end - begin + 1);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(i + 1) +
                                  ": expected key=value");
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(i + 1) +
                                  ": " + e.what());
    }
  }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  RunConfig cfg;
  cfg.apply_file(path);
  return cfg;
}

Lexicons RunConfig::load_lexicons() const {
  if (blocklist_path.empty() && allowlist_path.empty())
    return Lexicons::builtin();
  if (blocklist_path.empty() || allowlist_path.empty())
    throw std::invalid_argument(
        "lexicons.blocklist and lexicons.allowlist must be set together");
  return Lexicons::load(blocklist_path, allowlist_path);
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig pipe;
  pipe.featurizer = featurizer;
  pipe.train = train;
  pipe.tagger = tagger;
  pipe.order = order;
  pipe.confidences = confidences;
  pipe.ks = ks;
  pipe.base_seed = seed;
  pipe.jobs = jobs;
  return pipe;
}

}  // namespace reidaudit
