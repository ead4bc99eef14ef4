#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "xent/arena.hpp"
#include "xent/metaobjective.hpp"
#include "xent/remote.hpp"
#include "xent/transferlab.hpp"

namespace xent {

struct ModelSpec {
  std::string name;
  BackendKind backend = BackendKind::Uniform;
  std::size_t order = 2;     // ngram
  std::string path;          // logit_table
  RemoteEndpoint endpoint;   // remote
};

struct PlayerSpec {
  std::uint32_t window = 1;
  std::uint64_t rows = 0;    // 0: exact table when small enough
  std::string checkpoint;    // optional file for M_0
};

struct ExternalSpec {
  std::string kind = "none";  // none | heldout_game | callback
  std::string source;         // heldout_game: SXGL text
  std::string callback;       // callback: "heldout_corpus"
  std::vector<std::string> texts;
};

struct SamplerSpec {
  std::string kind = "template";  // template | mutation | remote_llm
  std::uint64_t seed = 3;
  std::vector<std::string> templates;  // empty: all shipped templates
  double p_insert = 0.25;
  double p_delete = 0.25;
  double p_rename = 0.2;
  double p_judge = 0.15;
  double p_concat = 0.15;
  RemoteEndpoint remote;
  std::string prompt_id = "sxgl-v1";
  std::size_t max_tokens = 512;
};

struct CurriculumSpec {
  std::size_t candidates = 32;
  std::size_t l_max = 512;
  lab::GateMode gate = lab::GateMode::Clipped;
  lab::ArchiveMode archive = lab::ArchiveMode::Full;
  double theta_scale = 0.05;
  double theta_offset = 1e-6;
  std::size_t retries = 3;
  bool fallback_clipped = true;
};

struct Config {
  std::string vocab = "bytes";
  std::uint32_t vocab_size = 256;  // sampleable ids of a synthetic vocabulary
  sxgl::MachineConfig machine;
  std::vector<ModelSpec> models;
  PlayerSpec player;
  lab::PhiConfig phi;
  std::size_t n_rollouts = 32;
  std::uint64_t eval_seed = 11;
  meta::MetaConfig meta;
  ExternalSpec external;
  CurriculumSpec curriculum;
  SamplerSpec sampler;
  std::vector<std::string> corpus;
  std::size_t jobs = 1;

  static Config defaults();
  lab::EvalPlan plan() const { return lab::EvalPlan::make(n_rollouts, eval_seed); }
};

// Built-in toy corpus: short lines of plain English.
const std::vector<std::string>& builtin_corpus();

nlohmann::json to_json(const Config& c);
// Strict: unknown keys and ill-typed values raise ConfigError.
Config config_from_json(const nlohmann::json& j);

// Sets a.b.c := value on a JSON document. The value text is parsed as JSON
// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Defaults, merged with the file at `path` (if non-empty), then overrides.
Config load_config(const std::string& path, const std::vector<std::string>& overrides);

// Everything a run needs, built from a Config.
struct World {
  Config config;
  std::shared_ptr<const Arena> arena;
  lab::CheckpointPtr initial;
};

World build_world(const Config& cfg);

}  // namespace xent
