// Copyright 2026 The draftsel Authors
// SPDX-License-Identifier: Apache-2.0

#include "draftsel/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "draftsel/error.hpp"

namespace draftsel {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw Error("config-invalid", key + ": " + why);
}

template <class E>
struct Names {
  std::vector<std::pair<E, const char*>> entries;

  std::string name(E e) const {
    for (const auto& [v, n] : entries) {
      if (v == e) return n;
    }
    return "?";
  }
  E parse(const std::string& key, const json& j) const {
    if (!j.is_string()) fail(key, "expected a string");
    const auto s = j.get<std::string>();
    std::string allowed;
    for (const auto& [v, n] : entries) {
      if (s == n) return v;
      allowed += (allowed.empty() ? "" : "|") + std::string(n);
    }
    fail(key, "unknown value \"" + s + "\" (expected " + allowed + ")");
  }
};

const Names<Mechanism> kMechanism{{{Mechanism::chain, "chain"}, {Mechanism::tree, "tree"}}};
const Names<DelayMode> kDelay{{{DelayMode::none, "none"}, {DelayMode::qfid, "qfid"}}};
const Names<LossKind> kLoss{
    {{LossKind::prob, "prob"}, {LossKind::length, "length"}, {LossKind::hybrid, "hybrid"}}};
const Names<Game> kGame{{{Game::token, "token"}, {Game::chunk, "chunk"}}};
const Names<OnsetAnchoring> kAnchoring{
    {{OnsetAnchoring::realized, "realized"}, {OnsetAnchoring::sliding, "sliding"}}};
const Names<WithinChunk> kWithin{{{WithinChunk::stick, "stick"}, {WithinChunk::resample, "resample"}}};
const Names<Study> kStudy{{{Study::specialist, "specialist"}, {Study::censor, "censor"}}};

std::uint64_t get_uint(const std::string& key, const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) fail(key, "must be non-negative");
  fail(key, "expected a non-negative integer");
}

std::size_t get_size(const std::string& key, const json& j) {
  return static_cast<std::size_t>(get_uint(key, j));
}

double get_real(const std::string& key, const json& j) {
  if (!j.is_number()) fail(key, "expected a number");
  return j.get<double>();
}

bool get_bool(const std::string& key, const json& j) {
  if (!j.is_boolean()) fail(key, "expected true or false");
  return j.get<bool>();
}

template <class T, class Fn>
std::vector<T> get_list(const std::string& key, const json& j, Fn item) {
  if (!j.is_array()) fail(key, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(key + "[" + std::to_string(i) + "]", j[i]));
  return out;
}

std::optional<double> get_optional_real(const std::string& key, const json& j) {
  if (j.is_null()) return std::nullopt;
  return get_real(key, j);
}

}  // namespace

std::string to_string(Mechanism m) { return kMechanism.name(m); }
std::string to_string(DelayMode m) { return kDelay.name(m); }
std::string to_string(LossKind k) { return kLoss.name(k); }
std::string to_string(Game g) { return kGame.name(g); }
std::string to_string(OnsetAnchoring a) { return kAnchoring.name(a); }
std::string to_string(WithinChunk w) { return kWithin.name(w); }

std::vector<std::uint64_t> ToolConfig::resolved_seeds() const {
  return seeds.empty() ? std::vector<std::uint64_t>{run.scenario.seed} : seeds;
}

CensoringConfig ToolConfig::censoring() const {
  CensoringConfig c;
  c.drafter1 = censor_drafter1;
  c.drafter2 = censor_drafter2;
  c.draft_depth = run.scenario.draft_depth;
  c.episode_tokens = run.scenario.episode_tokens;
  c.n_seeds = censor_seeds;
  c.seed = run.scenario.seed;
  c.learner = run.learner.learner;
  c.anchoring = run.learner.anchoring;
  return c;
}

ToolConfig parse_config(const json& input) {
  const json* doc = &input;
  if (doc->is_object() && doc->contains("tool_version") && doc->contains("config")) {
    doc = &(*doc)["config"];
  }
  if (!doc->is_object()) fail("<root>", "expected a JSON object");

  ToolConfig c;
  auto& s = c.run.scenario;
  auto& l = c.run.learner;
  for (const auto& [key, v] : doc->items()) {
    if (key == "vocab_size") s.vocab_size = get_size(key, v);
    else if (key == "n_drafters") s.n_drafters = get_size(key, v);
    else if (key == "draft_depth") s.draft_depth = get_size(key, v);
    else if (key == "branch_factor") s.branch_factor = get_size(key, v);
    else if (key == "in_domain_tv") s.in_domain_tv = get_real(key, v);
    else if (key == "off_domain_tv") s.off_domain_tv = get_real(key, v);
    else if (key == "episode_tokens") s.episode_tokens = get_size(key, v);
    else if (key == "prompt_domain") {
      if (v.is_string() && v.get<std::string>() == "mixed") s.prompt_domain = std::nullopt;
      else if (v.is_number_unsigned()) s.prompt_domain = v.get<std::size_t>();
      else fail(key, "expected a domain index or \"mixed\"");
    } else if (key == "seed") s.seed = get_uint(key, v);
    else if (key == "learner") l.learner = parse_learner_kind(v.is_string() ? v.get<std::string>() : "");
    else if (key == "delay_mode") l.delay_mode = kDelay.parse(key, v);
    else if (key == "loss_kind") l.loss_kind = kLoss.parse(key, v);
    else if (key == "game") l.game = kGame.parse(key, v);
    else if (key == "warmup") l.warmup = get_size(key, v);
    else if (key == "batch") l.batch = get_size(key, v);
    else if (key == "skip") l.skip = get_size(key, v);
    else if (key == "hybrid_warmup") l.hybrid_warmup = get_size(key, v);
    else if (key == "onset_anchoring") l.anchoring = kAnchoring.parse(key, v);
    else if (key == "within_chunk") l.within_chunk = kWithin.parse(key, v);
    else if (key == "eta") l.eta = get_optional_real(key, v);
    else if (key == "exploration") l.exploration = get_optional_real(key, v);
    else if (key == "mechanism") c.run.mechanism = kMechanism.parse(key, v);
    else if (key == "study") c.study = kStudy.parse(key, v);
    else if (key == "seeds") c.seeds = get_list<std::uint64_t>(key, v, get_uint);
    else if (key == "learners") {
      c.learners = get_list<LearnerKind>(key, v, [](const std::string& k, const json& j) {
        if (!j.is_string()) fail(k, "expected a learner name");
        return parse_learner_kind(j.get<std::string>());
      });
    } else if (key == "pool_sizes") c.pool_sizes = get_list<std::size_t>(key, v, get_size);
    else if (key == "censor_drafter1") c.censor_drafter1 = get_list<double>(key, v, get_real);
    else if (key == "censor_drafter2") c.censor_drafter2 = get_list<double>(key, v, get_real);
    else if (key == "censor_seeds") c.censor_seeds = get_size(key, v);
    else if (key == "oracle_length") c.oracle_length = get_size(key, v);
    else if (key == "include_target_drafter") c.include_target_drafter = get_bool(key, v);
    else fail(key, "unknown key");
  }
  validate(c);
  return c;
}

ToolConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("<json>", e.what());
  }
  return parse_config(doc);
}

ToolConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("--config", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void validate(const ToolConfig& c) {
  c.run.scenario.validate();
  const auto& l = c.run.learner;
  if (l.batch == 0) fail("batch", "must be >= 1");
  if (l.eta && !(*l.eta > 0.0)) fail("eta", "must be > 0");
  if (l.exploration && !(*l.exploration > 0.0 && *l.exploration <= 1.0)) fail("exploration", "must lie in (0,1]");
  if (c.learners.empty()) fail("learners", "must not be empty");
  if (c.pool_sizes.empty()) fail("pool_sizes", "must not be empty");
  for (std::size_t i = 0; i < c.pool_sizes.size(); ++i) {
    if (c.pool_sizes[i] == 0) fail("pool_sizes", "entries must be >= 1");
    if (i && c.pool_sizes[i] <= c.pool_sizes[i - 1]) fail("pool_sizes", "must be strictly ascending");
  }
  for (const auto* key : {"censor_drafter1", "censor_drafter2"}) {
    const auto& g = std::string(key) == "censor_drafter1" ? c.censor_drafter1 : c.censor_drafter2;
    if (g.empty()) fail(key, "must not be empty");
    for (double x : g) {
      if (!(x >= 0.0 && x <= 1.0)) fail(key, "entries must lie in [0,1]");
    }
  }
  if (c.censor_seeds == 0) fail("censor_seeds", "must be >= 1");
  if (c.oracle_length == 0) fail("oracle_length", "must be >= 1");
}

ordered_json to_json(const ToolConfig& c) {
  const auto& s = c.run.scenario;
  const auto& l = c.run.learner;
  ordered_json j;
  j["study"] = kStudy.name(c.study);
  j["vocab_size"] = s.vocab_size;
  j["n_drafters"] = s.n_drafters;
  j["draft_depth"] = s.draft_depth;
  j["branch_factor"] = s.branch_factor;
  j["in_domain_tv"] = s.in_domain_tv;
  j["off_domain_tv"] = s.off_domain_tv;
  j["episode_tokens"] = s.episode_tokens;
  if (s.prompt_domain) j["prompt_domain"] = *s.prompt_domain;
  else j["prompt_domain"] = "mixed";
  j["seed"] = s.seed;
  j["mechanism"] = to_string(c.run.mechanism);
  j["learner"] = to_string(l.learner);
  j["delay_mode"] = to_string(l.delay_mode);
  j["loss_kind"] = to_string(l.loss_kind);
  j["game"] = to_string(l.game);
  j["warmup"] = l.warmup;
  j["batch"] = l.batch;
  j["skip"] = l.skip;
  j["hybrid_warmup"] = l.hybrid_warmup;
  j["onset_anchoring"] = to_string(l.anchoring);
  j["within_chunk"] = to_string(l.within_chunk);
  j["eta"] = l.eta ? ordered_json(*l.eta) : ordered_json(nullptr);
  j["exploration"] = l.exploration ? ordered_json(*l.exploration) : ordered_json(nullptr);
  j["seeds"] = c.seeds;
  std::vector<std::string> learners;
  for (auto k : c.learners) learners.push_back(to_string(k));
  j["learners"] = learners;
  j["pool_sizes"] = c.pool_sizes;
  j["censor_drafter1"] = c.censor_drafter1;
  j["censor_drafter2"] = c.censor_drafter2;
  j["censor_seeds"] = c.censor_seeds;
  j["oracle_length"] = c.oracle_length;
  j["include_target_drafter"] = c.include_target_drafter;
  return j;
}

}  // namespace draftsel
