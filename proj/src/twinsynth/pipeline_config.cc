// Copyright 2026 The TwinSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twinsynth/pipeline_config.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "twinsynth/common.h"
#include "twinsynth/io_util.h"
#include "twinsynth/tokenizer.h"

namespace twinsynth {
namespace {

using nlohmann::json;

bool IsCount(const json& v) {
  return v.is_number_unsigned() ||
         (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Typed, strict access to one JSON object; remembers which keys were read
// so that leftovers can be reported as unknown fields.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Where() + "expected an object");
  }

  bool Has(const char* key) const { return j_.contains(key); }

  const json* Get(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string Path(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void Read(const char* key, bool& out) {
    if (const json* v = Get(key)) {
      if (!v->is_boolean()) throw Type(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void Read(const char* key, double& out) {
    if (const json* v = Get(key)) out = NumberFromJson(*v, Path(key));
  }
  void Read(const char* key, std::size_t& out) {
    if (const json* v = Get(key)) {
      if (!IsCount(*v)) throw Type(key, "a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void ReadU64(const char* key, std::uint64_t& out) {
    if (const json* v = Get(key)) {
      if (!IsCount(*v)) throw Type(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void Read(const char* key, std::string& out) {
    if (const json* v = Get(key)) {
      if (!v->is_string()) throw Type(key, "a string");
      out = v->get<std::string>();
    }
  }
  void Read(const char* key, std::vector<std::string>& out) {
    if (const json* v = Get(key)) out = Strings(*v, Path(key));
  }

  // Rejects keys that were never read.
  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError("unknown field '" + Path(key.c_str()) + "'");
      }
    }
  }

  static std::vector<std::string> Strings(const json& v,
                                          const std::string& path) {
    if (!v.is_array()) {
      throw ConfigError("field '" + path + "': expected a list of strings");
    }
    std::vector<std::string> out;
    for (const auto& s : v) {
      if (!s.is_string()) {
        throw ConfigError("field '" + path + "': expected a list of strings");
      }
      out.push_back(s.get<std::string>());
    }
    return out;
  }

 private:
  std::string Where() const {
    return path_.empty() ? "config: " : "field '" + path_ + "': ";
  }
  Error Type(const char* key, const char* what) const {
    return ConfigError("field '" + Path(key) + "': expected " + what);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* WrongModeName(WrongPromptMode m) {
  return m == WrongPromptMode::kAllAttributesDiffer ? "all_attributes_differ"
                                                    : "any_attribute_differs";
}

WrongPromptMode ParseWrongMode(const std::string& s) {
  if (s == "all_attributes_differ")
    return WrongPromptMode::kAllAttributesDiffer;
  if (s == "any_attribute_differs")
    return WrongPromptMode::kAnyAttributeDiffers;
  throw ConfigError(
      "field 'train.wrong_mode': expected all_attributes_differ "
      "or any_attribute_differs");
}

Conversion ParseConversionField(Fields& f, const char* key, Conversion def) {
  std::string name = ConversionName(def);
  f.Read(key, name);
  try {
    return ParseConversion(name);
  } catch (const Error&) {
    throw ConfigError("field '" + f.Path(key) + "': expected simple or tight");
  }
}

// "inf" or null -> nullopt; positive number otherwise.
std::optional<double> ReadEpsilon(const json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  const double e = NumberFromJson(v, path);
  if (std::isinf(e) && e > 0) return std::nullopt;
  return e;
}

std::filesystem::path Resolve(const std::string& p,
                              const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

void ParseToy(const json& j, CorpusSourceConfig& c) {
  Fields f(j, "corpus.toy");
  ToyCorpusSpec& t = c.toy;
  if (const json* v = f.Get("lexicons")) {
    if (!v->is_object()) {
      throw ConfigError("field 'corpus.toy.lexicons': expected an object");
    }
    for (const auto& [attr, values] : v->items()) {
      const std::string path = "corpus.toy.lexicons." + attr;
      if (!values.is_object()) {
        throw ConfigError("field '" + path + "': expected an object");
      }
      for (const auto& [value, words] : values.items()) {
        t.lexicons[attr][value] = Fields::Strings(words, path + "." + value);
      }
    }
  }
  f.Read("neutral_lexicon", t.neutral_lexicon);
  if (const json* v = f.Get("pseudo_lexicon")) {
    Fields p(*v, "corpus.toy.pseudo_lexicon");
    PseudoLexiconSpec s;
    p.Read("signature_words", s.signature_words);
    p.Read("neutral_words", s.neutral_words);
    p.ReadU64("seed", s.seed);
    p.Finish();
    c.pseudo_lexicon = s;
  }
  f.Read("records_per_class", t.records_per_class);
  f.Read("public_records", t.public_records);
  f.Read("min_length", t.min_length);
  f.Read("max_length", t.max_length);
  f.Read("signature_fraction", t.signature_fraction);
  f.Read("zipf_exponent", t.zipf_exponent);
  if (const json* v = f.Get("canaries")) {
    if (!v->is_array()) {
      throw ConfigError("field 'corpus.toy.canaries': expected a list");
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      Fields cf((*v)[i], "corpus.toy.canaries[" + std::to_string(i) + "]");
      Canary canary;
      cf.Read("text", canary.text);
      cf.Read("insertions", canary.insertions);
      cf.Finish();
      t.canaries.push_back(std::move(canary));
    }
  }
  f.Finish();
}

void ParseCorpus(const json& j, CorpusSourceConfig& c,
                 const std::filesystem::path& base) {
  Fields f(j, "corpus");
  std::string source = "toy";
  f.Read("source", source);
  if (source == "toy") {
    c.kind = CorpusSourceConfig::Kind::kToy;
  } else if (source == "jsonl") {
    c.kind = CorpusSourceConfig::Kind::kJsonl;
  } else {
    throw ConfigError("field 'corpus.source': expected toy or jsonl");
  }
  f.Read("train_fraction", c.train_fraction);
  const json* toy = f.Get("toy");
  const json* jsonl = f.Get("jsonl");
  if (c.kind == CorpusSourceConfig::Kind::kToy) {
    if (!toy)
      throw ConfigError("field 'corpus.toy' is required for source toy");
    if (jsonl)
      throw ConfigError("field 'corpus.jsonl' conflicts with source toy");
    ParseToy(*toy, c);
  } else {
    if (!jsonl) {
      throw ConfigError("field 'corpus.jsonl' is required for source jsonl");
    }
    if (toy)
      throw ConfigError("field 'corpus.toy' conflicts with source jsonl");
    Fields jf(*jsonl, "corpus.jsonl");
    std::string priv, pub, test;
    jf.Read("private", priv);
    jf.Read("public", pub);
    jf.Read("test", test);
    jf.Finish();
    if (priv.empty())
      throw ConfigError("field 'corpus.jsonl.private' is required");
    if (pub.empty())
      throw ConfigError("field 'corpus.jsonl.public' is required");
    c.private_path = Resolve(priv, base);
    c.public_path = Resolve(pub, base);
    if (!test.empty()) c.test_path = Resolve(test, base);
  }
  f.Finish();
}

void ParseTrain(const json& j, TrainPlan& t) {
  Fields f(j, "train");
  if (const json* v = f.Get("model")) {
    Fields m(*v, "train.model");
    m.Read("embed_dim", t.model.embed_dim);
    m.Read("hidden_dim", t.model.hidden_dim);
    m.Read("context_length", t.model.context_length);
    m.Finish();
  }
  if (const json* v = f.Get("pretrain")) {
    Fields p(*v, "train.pretrain");
    p.Read("epochs", t.pretrain_epochs);
    p.Read("batch_size", t.pretrain_batch_size);
    p.Read("learning_rate", t.pretrain_learning_rate);
    p.Finish();
  }
  if (const json* v = f.Get("epsilon")) {
    t.target_epsilon = ReadEpsilon(*v, "train.epsilon");
  }
  if (const json* v = f.Get("delta")) {
    if (v->is_null()) {
      t.delta.reset();
    } else {
      t.delta = NumberFromJson(*v, "train.delta");
    }
  }
  if (const json* v = f.Get("dp")) {
    Fields p(*v, "train.dp");
    p.Read("epochs", t.dp_epochs);
    p.Read("sampling_rate", t.sampling_rate);
    p.Read("clip_norm", t.clip_norm);
    p.Read("learning_rate", t.dp_learning_rate);
    p.Finish();
  }
  if (const json* v = f.Get("nonprivate")) {
    Fields p(*v, "train.nonprivate");
    p.Read("epochs", t.nonprivate_epochs);
    p.Read("batch_size", t.nonprivate_batch_size);
    p.Read("learning_rate", t.nonprivate_learning_rate);
    p.Finish();
  }
  t.conversion = ParseConversionField(f, "conversion", t.conversion);
  f.Read("sigma_max", t.sigma_max);
  if (const json* v = f.Get("loss")) {
    Fields l(*v, "train.loss");
    l.Read("lambda", t.loss.lambda);
    l.Read("wrong_samples", t.loss.wrong_samples);
    if (const json* c = l.Get("wrong_cap_per_token")) {
      if (c->is_null()) {
        t.loss.wrong_cap_per_token.reset();
      } else {
        t.loss.wrong_cap_per_token =
            NumberFromJson(*c, "train.loss.wrong_cap_per_token");
      }
    }
    l.Read("text_only_loss", t.loss.text_only_loss);
    l.Finish();
  }
  std::string mode = WrongModeName(t.wrong_mode);
  f.Read("wrong_mode", mode);
  t.wrong_mode = ParseWrongMode(mode);
  f.Finish();
}

void ParseGenerate(const json& j, GenerateConfig& g) {
  Fields f(j, "generate");
  if (const json* v = f.Get("total")) {
    if (v->is_null()) {
      g.total.reset();
    } else if (IsCount(*v)) {
      g.total = v->get<std::size_t>();
    } else {
      throw ConfigError(
          "field 'generate.total': expected a non-negative integer or null");
    }
  }
  f.Read("total_multiplier", g.total_multiplier);
  if (const json* v = f.Get("distribution")) {
    if (!v->is_array()) {
      throw ConfigError("field 'generate.distribution': expected a list");
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string path =
          "generate.distribution[" + std::to_string(i) + "]";
      Fields d((*v)[i], path);
      AttributeAssignment a;
      if (const json* attrs = d.Get("attrs")) {
        if (!attrs->is_object()) {
          throw ConfigError("field '" + path + ".attrs': expected an object");
        }
        for (const auto& [k, val] : attrs->items()) {
          if (!val.is_string()) {
            throw ConfigError("field '" + path + ".attrs." + k +
                              "': expected a string");
          }
          a[k] = val.get<std::string>();
        }
      }
      double p = 0.0;
      d.Read("proportion", p);
      d.Finish();
      g.distribution.emplace_back(std::move(a), p);
    }
  }
  f.Read("nucleus_p", g.sampler.nucleus_p);
  f.Read("max_new_tokens", g.sampler.max_new_tokens);
  f.Read("min_words", g.min_words);
  f.Finish();
}

void ParseEvaluate(const json& j, EvaluateConfig& e) {
  Fields f(j, "evaluate");
  f.Read("utility", e.utility);
  f.Read("dp_classifier", e.dp_classifier);
  f.Read("duplicates", e.duplicates);
  f.Read("similarity", e.similarity);
  f.Read("canaries", e.canaries);
  if (const json* v = f.Get("classifier")) {
    Fields c(*v, "evaluate.classifier");
    c.Read("l2", e.classifier.l2);
    c.Read("tolerance", e.classifier.tolerance);
    c.Read("max_iterations", e.classifier.max_iterations);
    c.Finish();
  }
  if (const json* v = f.Get("dp_classifier_plan")) {
    Fields p(*v, "evaluate.dp_classifier_plan");
    DpClassifierPlan& d = e.dp_classifier_plan;
    if (const json* eps = p.Get("epsilon")) {
      if (eps->is_string() && eps->get<std::string>() == "train") {
        e.dp_classifier_epsilon_follows_train = true;
      } else {
        e.dp_classifier_epsilon_follows_train = false;
        d.epsilon = ReadEpsilon(*eps, "evaluate.dp_classifier_plan.epsilon");
      }
    }
    if (const json* dl = p.Get("delta")) {
      if (dl->is_null()) {
        d.delta.reset();
      } else {
        d.delta = NumberFromJson(*dl, "evaluate.dp_classifier_plan.delta");
      }
    }
    p.Read("sampling_rate", d.sampling_rate);
    p.ReadU64("steps", d.steps);
    p.Read("clip_norm", d.clip_norm);
    p.Read("learning_rate", d.learning_rate);
    p.Read("l2", d.l2);
    d.conversion = ParseConversionField(p, "conversion", d.conversion);
    p.Finish();
  }
  f.Finish();
}

json EpsilonToJson(const std::optional<double>& e) {
  return e ? json(*e) : json("inf");
}

json OptionalNumber(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::vector<std::string> AttributeValues(const PipelineConfig& c) {
  std::vector<std::string> out;
  for (const auto& a : c.schema) {
    for (const auto& v : a.values) out.push_back(a.name + "=" + v);
  }
  return out;
}

}  // namespace

PipelineConfig ParsePipelineConfig(const json& j,
                                   const std::filesystem::path& base_dir) {
  PipelineConfig c;
  Fields f(j, "");
  c.seed = 0;
  f.ReadU64("seed", c.seed);
  std::string out = c.output_dir.string();
  f.Read("output_dir", out);
  c.output_dir = out;
  const json* schema = f.Get("schema");
  if (!schema || !schema->is_array()) {
    throw ConfigError("field 'schema': expected a list of attributes");
  }
  for (std::size_t i = 0; i < schema->size(); ++i) {
    Fields a((*schema)[i], "schema[" + std::to_string(i) + "]");
    Attribute attr;
    a.Read("name", attr.name);
    a.Read("values", attr.values);
    a.Read("verbalizations", attr.verbalizations);
    a.Finish();
    if (attr.verbalizations.empty()) attr.verbalizations = attr.values;
    c.schema.push_back(std::move(attr));
  }
  f.Read("template", c.template_text);
  const json* corpus = f.Get("corpus");
  if (!corpus) throw ConfigError("field 'corpus' is required");
  ParseCorpus(*corpus, c.corpus, base_dir);
  if (const json* v = f.Get("vocabulary")) {
    Fields vf(*v, "vocabulary");
    vf.Read("max_size", c.train.vocab_max_size);
    vf.Read("extra_tokens", c.extra_tokens);
    vf.Read("declare_toy_tokens", c.declare_toy_tokens);
    vf.Finish();
  }
  if (const json* v = f.Get("train")) ParseTrain(*v, c.train);
  if (const json* v = f.Get("generate")) ParseGenerate(*v, c.generate);
  if (const json* v = f.Get("evaluate")) ParseEvaluate(*v, c.evaluate);
  f.Finish();
  return c;
}

PipelineConfig LoadPipelineConfig(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = ReadFile(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return ParsePipelineConfig(j, path.parent_path());
}

void PipelineConfig::Validate() const {
  std::shared_ptr<const AttributeSchema> s;
  try {
    s = BuildSchema(*this);
  } catch (const Error& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  try {
    PromptTemplate t(template_text, *s);
  } catch (const Error& e) {
    throw ConfigError(std::string("template: ") + e.what());
  }
  const CorpusSourceConfig& c = corpus;
  if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0)) {
    throw ConfigError("corpus.train_fraction must lie in (0, 1]");
  }
  if (c.kind == CorpusSourceConfig::Kind::kToy) {
    const ToyCorpusSpec& t = c.toy;
    if (t.records_per_class == 0) {
      throw ConfigError("corpus.toy.records_per_class must be positive");
    }
    if (t.public_records == 0) {
      throw ConfigError("corpus.toy.public_records must be positive");
    }
    if (t.min_length == 0 || t.max_length < t.min_length) {
      throw ConfigError(
          "corpus.toy.min_length/max_length must satisfy 1 <= min <= max");
    }
    if (!(t.signature_fraction >= 0.6 && t.signature_fraction <= 1.0)) {
      throw ConfigError("corpus.toy.signature_fraction must lie in [0.6, 1]");
    }
    if (!(t.zipf_exponent >= 0.0)) {
      throw ConfigError("corpus.toy.zipf_exponent must be >= 0");
    }
    if (c.pseudo_lexicon &&
        (!t.lexicons.empty() || !t.neutral_lexicon.empty())) {
      throw ConfigError(
          "corpus.toy.pseudo_lexicon conflicts with explicit lexicons");
    }
    if (c.pseudo_lexicon && (c.pseudo_lexicon->signature_words == 0 ||
                             c.pseudo_lexicon->neutral_words == 0)) {
      throw ConfigError(
          "corpus.toy.pseudo_lexicon word counts must be positive");
    }
    if (!c.pseudo_lexicon) {
      for (const auto& a : schema) {
        for (const auto& v : a.values) {
          auto it = t.lexicons.find(a.name);
          if (it == t.lexicons.end() || !it->second.contains(v) ||
              it->second.at(v).empty()) {
            throw ConfigError("corpus.toy.lexicons." + a.name + "." + v +
                              " is missing or empty");
          }
        }
      }
      if (t.neutral_lexicon.empty()) {
        throw ConfigError("corpus.toy.neutral_lexicon must not be empty");
      }
    }
    for (std::size_t i = 0; i < t.canaries.size(); ++i) {
      if (NormalizeWords(t.canaries[i].text).empty()) {
        throw ConfigError("corpus.toy.canaries[" + std::to_string(i) +
                          "].text must not be empty");
      }
    }
  } else {
    auto must_exist = [](const std::filesystem::path& p, const char* field) {
      if (!std::filesystem::is_regular_file(p)) {
        throw ConfigError(std::string(field) +
                          ": file not found: " + p.string());
      }
    };
    must_exist(c.private_path, "corpus.jsonl.private");
    must_exist(c.public_path, "corpus.jsonl.public");
    if (c.test_path) must_exist(*c.test_path, "corpus.jsonl.test");
  }
  if (train.vocab_max_size <= Vocabulary::kNumSpecial) {
    throw ConfigError("vocabulary.max_size must exceed " +
                      std::to_string(Vocabulary::kNumSpecial));
  }
  if (train.model.embed_dim == 0 || train.model.hidden_dim == 0) {
    throw ConfigError("train.model dimensions must be positive");
  }
  if (train.model.context_length < 2) {
    throw ConfigError("train.model.context_length must be >= 2");
  }
  train.Validate();
  if (!(generate.total_multiplier > 0.0)) {
    throw ConfigError("generate.total_multiplier must be positive");
  }
  if (!(generate.sampler.nucleus_p > 0.0 &&
        generate.sampler.nucleus_p <= 1.0)) {
    throw ConfigError("generate.nucleus_p must lie in (0, 1]");
  }
  if (!generate.distribution.empty()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < generate.distribution.size(); ++i) {
      const auto& [a, p] = generate.distribution[i];
      const std::string path =
          "generate.distribution[" + std::to_string(i) + "]";
      try {
        s->ValidateComplete(a);
      } catch (const Error& e) {
        throw ConfigError(path + ".attrs: " + e.what());
      }
      if (!(p >= 0.0)) throw ConfigError(path + ".proportion must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("generate.distribution proportions must sum to 1");
    }
  }
  const DpClassifierPlan& d = evaluate.dp_classifier_plan;
  if (!(d.sampling_rate > 0.0 && d.sampling_rate <= 1.0)) {
    throw ConfigError(
        "evaluate.dp_classifier_plan.sampling_rate must lie in (0, 1]");
  }
  if (!(d.clip_norm > 0.0) || !(d.learning_rate > 0.0) || !(d.l2 >= 0.0)) {
    throw ConfigError(
        "evaluate.dp_classifier_plan clip_norm and learning_rate "
        "must be positive, l2 non-negative");
  }
  if (!evaluate.dp_classifier_epsilon_follows_train && d.epsilon &&
      !(*d.epsilon > 0.0)) {
    throw ConfigError("evaluate.dp_classifier_plan.epsilon must be positive");
  }
  if (d.delta && !(*d.delta > 0.0 && *d.delta < 1.0)) {
    throw ConfigError("evaluate.dp_classifier_plan.delta must lie in (0, 1)");
  }
  if (!(evaluate.classifier.tolerance > 0.0) ||
      !(evaluate.classifier.l2 >= 0.0)) {
    throw ConfigError(
        "evaluate.classifier tolerance must be positive, l2 "
        "non-negative");
  }
}

json PipelineConfigToJson(const PipelineConfig& c) {
  json schema = json::array();
  for (const auto& a : c.schema) {
    schema.push_back({{"name", a.name},
                      {"values", a.values},
                      {"verbalizations", a.verbalizations}});
  }
  json corpus = {{"train_fraction", c.corpus.train_fraction}};
  if (c.corpus.kind == CorpusSourceConfig::Kind::kToy) {
    const ToyCorpusSpec& t = c.corpus.toy;
    json canaries = json::array();
    for (const auto& k : t.canaries) {
      canaries.push_back({{"text", k.text}, {"insertions", k.insertions}});
    }
    json toy = {{"records_per_class", t.records_per_class},
                {"public_records", t.public_records},
                {"min_length", t.min_length},
                {"max_length", t.max_length},
                {"signature_fraction", t.signature_fraction},
                {"zipf_exponent", t.zipf_exponent},
                {"canaries", std::move(canaries)}};
    if (c.corpus.pseudo_lexicon) {
      const auto& p = *c.corpus.pseudo_lexicon;
      toy["pseudo_lexicon"] = {{"signature_words", p.signature_words},
                               {"neutral_words", p.neutral_words},
                               {"seed", p.seed}};
    } else {
      toy["lexicons"] = t.lexicons;
      toy["neutral_lexicon"] = t.neutral_lexicon;
    }
    corpus["source"] = "toy";
    corpus["toy"] = std::move(toy);
  } else {
    json jsonl = {{"private", c.corpus.private_path.generic_string()},
                  {"public", c.corpus.public_path.generic_string()}};
    if (c.corpus.test_path)
      jsonl["test"] = c.corpus.test_path->generic_string();
    corpus["source"] = "jsonl";
    corpus["jsonl"] = std::move(jsonl);
  }
  const TrainPlan& t = c.train;
  json train = {
      {"model",
       {{"embed_dim", t.model.embed_dim},
        {"hidden_dim", t.model.hidden_dim},
        {"context_length", t.model.context_length}}},
      {"pretrain",
       {{"epochs", t.pretrain_epochs},
        {"batch_size", t.pretrain_batch_size},
        {"learning_rate", t.pretrain_learning_rate}}},
      {"epsilon", EpsilonToJson(t.target_epsilon)},
      {"delta", OptionalNumber(t.delta)},
      {"dp",
       {{"epochs", t.dp_epochs},
        {"sampling_rate", t.sampling_rate},
        {"clip_norm", t.clip_norm},
        {"learning_rate", t.dp_learning_rate}}},
      {"nonprivate",
       {{"epochs", t.nonprivate_epochs},
        {"batch_size", t.nonprivate_batch_size},
        {"learning_rate", t.nonprivate_learning_rate}}},
      {"conversion", ConversionName(t.conversion)},
      {"sigma_max", t.sigma_max},
      {"loss",
       {{"lambda", t.loss.lambda},
        {"wrong_samples", t.loss.wrong_samples},
        {"wrong_cap_per_token", OptionalNumber(t.loss.wrong_cap_per_token)},
        {"text_only_loss", t.loss.text_only_loss}}},
      {"wrong_mode", WrongModeName(t.wrong_mode)}};
  json distribution = json::array();
  for (const auto& [a, p] : c.generate.distribution) {
    distribution.push_back({{"attrs", a}, {"proportion", p}});
  }
  json generate = {
      {"total", c.generate.total ? json(*c.generate.total) : json(nullptr)},
      {"total_multiplier", c.generate.total_multiplier},
      {"distribution", std::move(distribution)},
      {"nucleus_p", c.generate.sampler.nucleus_p},
      {"max_new_tokens", c.generate.sampler.max_new_tokens},
      {"min_words", c.generate.min_words}};
  const DpClassifierPlan& d = c.evaluate.dp_classifier_plan;
  json evaluate = {{"utility", c.evaluate.utility},
                   {"dp_classifier", c.evaluate.dp_classifier},
                   {"duplicates", c.evaluate.duplicates},
                   {"similarity", c.evaluate.similarity},
                   {"canaries", c.evaluate.canaries},
                   {"classifier",
                    {{"l2", c.evaluate.classifier.l2},
                     {"tolerance", c.evaluate.classifier.tolerance},
                     {"max_iterations", c.evaluate.classifier.max_iterations}}},
                   {"dp_classifier_plan",
                    {{"epsilon", c.evaluate.dp_classifier_epsilon_follows_train
                                     ? json("train")
                                     : EpsilonToJson(d.epsilon)},
                     {"delta", OptionalNumber(d.delta)},
                     {"sampling_rate", d.sampling_rate},
                     {"steps", d.steps},
                     {"clip_norm", d.clip_norm},
                     {"learning_rate", d.learning_rate},
                     {"l2", d.l2},
                     {"conversion", ConversionName(d.conversion)}}}};
  return {{"seed", c.seed},
          {"output_dir", c.output_dir.generic_string()},
          {"schema", std::move(schema)},
          {"template", c.template_text},
          {"corpus", std::move(corpus)},
          {"vocabulary",
           {{"max_size", c.train.vocab_max_size},
            {"extra_tokens", c.extra_tokens},
            {"declare_toy_tokens", c.declare_toy_tokens}}},
          {"train", std::move(train)},
          {"generate", std::move(generate)},
          {"evaluate", std::move(evaluate)}};
}

std::string ConfigHash(const PipelineConfig& config) {
  json j = PipelineConfigToJson(config);
  j.erase("output_dir");
  return Fnv1aHex(j.dump());
}

ToyCorpusSpec ResolveToySpec(const PipelineConfig& config) {
  ToyCorpusSpec spec = config.corpus.toy;
  spec.seed = config.seed;
  if (config.corpus.pseudo_lexicon) {
    const PseudoLexiconSpec& p = *config.corpus.pseudo_lexicon;
    const auto keys = AttributeValues(config);
    std::vector<std::string> exclude;
    for (const auto& c : spec.canaries) {
      for (auto& w : NormalizeWords(c.text)) exclude.push_back(std::move(w));
    }
    const auto words = PseudoWords(
        keys.size() * p.signature_words + p.neutral_words, p.seed, exclude);
    auto it = words.begin();
    spec.lexicons.clear();
    for (const auto& a : config.schema) {
      for (const auto& v : a.values) {
        spec.lexicons[a.name][v] = {it, it + p.signature_words};
        it += p.signature_words;
      }
    }
    spec.neutral_lexicon = {it, words.end()};
  }
  return spec;
}

std::vector<std::string> DeclaredPublicTokens(const PipelineConfig& config) {
  std::vector<std::string> out = config.extra_tokens;
  if (config.declare_toy_tokens &&
      config.corpus.kind == CorpusSourceConfig::Kind::kToy) {
    const ToyCorpusSpec spec = ResolveToySpec(config);
    for (const auto& [attr, values] : spec.lexicons) {
      for (const auto& [value, words] : values) {
        out.insert(out.end(), words.begin(), words.end());
      }
    }
    for (const auto& c : spec.canaries) out.push_back(c.text);
  }
  return out;
}

std::vector<std::string> AuditCanaries(const PipelineConfig& config) {
  std::vector<std::string> out = config.evaluate.canaries;
  if (config.corpus.kind == CorpusSourceConfig::Kind::kToy) {
    for (const auto& c : config.corpus.toy.canaries) {
      if (std::find(out.begin(), out.end(), c.text) == out.end()) {
        out.push_back(c.text);
      }
    }
  }
  return out;
}

std::shared_ptr<const AttributeSchema> BuildSchema(
    const PipelineConfig& config) {
  return std::make_shared<const AttributeSchema>(config.schema);
}

}  // namespace twinsynth
