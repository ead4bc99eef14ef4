#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xent/config.hpp"
#include "xent/errors.hpp"
#include "xent/metaobjective.hpp"
#include "xent/transferlab.hpp"

namespace xent::curriculum {

struct Candidate {
  sxgl::Program program;
  std::string origin;
};

struct Proposal {
  std::vector<Candidate> candidates;
  bool fallback = false;  // remote sampler fell back to templates
  std::string note;
};

// Proposes candidate games. Output depends only on the sampler settings, the history
// and `round`, so a step can be replayed without sampler state.
class MetaSampler {
 public:
  MetaSampler(SamplerSpec spec, std::shared_ptr<const Arena> arena, std::vector<std::string> corpus,
              std::size_t l_max);

  Proposal propose(const lab::History& hist, std::size_t count, std::uint64_t round = 0) const;

  const SamplerSpec& spec() const noexcept { return spec_; }

 private:
  Candidate from_template(Rng& rng) const;
  Candidate mutate(const lab::History& hist, Rng& rng) const;
  std::optional<Candidate> from_remote(Rng& rng) const;

  SamplerSpec spec_;
  std::shared_ptr<const Arena> arena_;
  std::vector<std::string> corpus_;
  std::vector<std::string> pool_;
  std::size_t l_max_;
};

// The SXGL prompt sent to the remote generator.
std::string sampler_prompt(const std::string& prompt_id, const sxgl::MachineConfig& machine);

class CulDeSac : public Error {
 public:
  explicit CulDeSac(const std::string& what) : Error("transfer-cul-de-sac", what) {}
};

struct CandidateRecord {
  std::size_t index = 0;
  std::string origin;
  sxgl::Program program;
  meta::OBreakdown breakdown;
  bool survived = false;
};

struct StepRecord {
  std::size_t step = 0;
  std::uint64_t phi_seed = 0;
  lab::GateMode gate = lab::GateMode::Clipped;
  std::size_t attempts = 1;
  bool clipped_fallback = false;
  bool sampler_fallback = false;
  std::size_t chosen = 0;
  std::vector<CandidateRecord> candidates;
  std::optional<std::string> phi_flag;
  std::string checkpoint_digest;
  double theta = 0.0;
  bool novel = false;
  std::vector<double> maintenance;  // S_{M_{k+1}}(G_j), j <= k
};

struct StepResult {
  sxgl::Program chosen;
  lab::CheckpointPtr ckpt;
  StepRecord record;
};

// Index of the best survivor: highest O, then smaller code length, then
// lexicographically smaller source. Throws CulDeSac when nothing survived.
std::size_t select(const std::vector<CandidateRecord>& records);

// One greedy step: propose, measure and gate every candidate, pick the
// argmax of O among survivors and train the player on it.
StepResult cog_step(const Arena& arena, const lab::History& hist, const MetaSampler& sampler,
                    const meta::MetaConfig& cfg, std::size_t count, const lab::EvalPlan& plan,
                    const lab::PhiConfig& phi, std::uint64_t round = 0);

struct RunSummary {
  std::size_t requested = 0;
  std::size_t completed = 0;
  bool halted = false;
  std::string reason;
  std::vector<StepRecord> steps;
  std::vector<std::vector<double>> maintenance;  // row r: S_{M_r}(G_j), j < r
};

// Runs `steps` cognitive-training steps from M_0 and writes the run
// directory: config.json, steps.jsonl, candidates/step-N.jsonl,
// checkpoints/step-N.json, games/step-N.sxgl, maintenance.json and
// status.json.
RunSummary run_loop(const World& world, std::size_t steps, const std::string& dir);

struct ReplayReport {
  bool identical = true;
  std::vector<std::string> mismatches;
  RunSummary summary;
};

// Re-runs the loop from dir/config.json into `into` and compares every file.
ReplayReport replay(const std::string& dir, const std::string& into);

}  // namespace xent::curriculum
