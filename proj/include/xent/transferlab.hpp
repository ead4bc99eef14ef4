#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xent/arena.hpp"
#include "xent/model.hpp"
#include "xent/sxgl.hpp"

namespace xent::lab {

using CheckpointPtr = std::shared_ptr<const Checkpoint>;

// Seeds for n paired rollouts. Rollout i runs with seed list rollouts[i]:
// live segment m uses rollouts[i][m], or derive_seed(rollouts[i][0], m)
// past the end of the list.
struct EvalPlan {
  std::vector<std::vector<std::uint64_t>> rollouts;

  static EvalPlan make(std::size_t n, std::uint64_t seed);
  std::size_t size() const noexcept { return rollouts.size(); }
  // Throws InvalidArgument unless there is at least one rollout, every
  // rollout has a seed and the first seeds are pairwise distinct.
  void validate() const;
  // Every rollout's seeds written out for each live segment of h.
  EvalPlan expanded(const sxgl::Program& h) const;
  // The plan for h (+) h that replays each rollout's seeds of h twice.
  EvalPlan doubled(const sxgl::Program& h) const;
};

// anchor + exact_sum(x_i - anchor) / n with anchor = x_0: exact for a
// constant sample and commutes with scaling by powers of two.
double mean_of(std::span<const double> xs);

struct ScoreEstimate {
  double mean = 0.0;
  double sd = 0.0;                                   // sample standard deviation
  std::size_t aborted = 0;                           // rollouts with an aborted segment
  std::vector<double> rewards;                       // player reward per rollout
  std::vector<std::vector<double>> segment_rewards;  // [rollout][live segment]
};

// Mean player reward of h over the plan's rollouts. Aborted segments count
// as zero. Throws EstimationError when every segment of every rollout
// aborted.
ScoreEstimate estimate(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& h,
                       const EvalPlan& plan);
double score(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& h, const EvalPlan& plan);

struct PhiConfig {
  std::size_t batch = 16;
  double eta = 1e-3;
  std::uint64_t seed = 1;
  // Rewards enter training as scale * r + shift; scale must be positive.
  double reward_scale = 1.0;
  double reward_shift = 0.0;
  // Optional explicit seed lists, one per rollout; replaces the derived
  // seeds when non-empty and must then hold `batch` entries.
  std::vector<std::vector<std::uint64_t>> schedule;

  void validate() const;
  std::vector<std::uint64_t> rollout_seeds(std::size_t b) const;
};

struct PhiResult {
  CheckpointPtr ckpt;
  std::optional<std::string> flag;  // set when the input is returned unchanged
  std::size_t episodes = 0;
  std::size_t trajectories = 0;
  std::size_t aborted_segments = 0;
};

// One run of the training scheme: `batch` seeded rollouts of g, each live
// segment an episode rewarded with the player's segment reward, then one
// policy-gradient step on the player's elicitations. Frozen bindings are
// never touched.
PhiResult train_phi(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& g, const PhiConfig& cfg);

struct TransferResult {
  double value = 0.0;
  ScoreEstimate before;
  ScoreEstimate after;
  PhiResult trained;
};

// score(train_phi(ckpt, g), h) - score(ckpt, h) on one paired plan.
TransferResult transfer(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& g,
                        const sxgl::Program& h, const EvalPlan& plan, const PhiConfig& phi);

enum class ArchiveMode { Full, Latest };
enum class GateMode { Strict, Clipped };

std::string to_string(ArchiveMode m);
std::string to_string(GateMode m);
ArchiveMode archive_mode_from_string(const std::string& s);
GateMode gate_mode_from_string(const std::string& s);

// Games G_0..G_{k-1} and the checkpoints they produced. A full archive
// keeps M_0..M_k; a latest archive keeps only M_0 and M_k.
class History {
 public:
  History(CheckpointPtr initial, ArchiveMode mode = ArchiveMode::Full);

  ArchiveMode mode() const noexcept { return mode_; }
  std::size_t k() const noexcept { return games_.size(); }
  const std::vector<sxgl::Program>& games() const noexcept { return games_; }
  const std::vector<std::uint64_t>& phi_seeds() const noexcept { return phi_seeds_; }
  const CheckpointPtr& initial() const noexcept { return checkpoints_.front(); }
  const CheckpointPtr& latest() const noexcept { return checkpoints_.back(); }
  // M_j; full archive only.
  const CheckpointPtr& checkpoint(std::size_t j) const;
  const std::vector<CheckpointPtr>& checkpoints() const noexcept { return checkpoints_; }

  void push(sxgl::Program game, CheckpointPtr trained, std::uint64_t phi_seed);

  // Steps (G_{j-1}, G_j) replaced by (G_{j-1} (+) G_j, idle), where idle is
  // the program x<<x. The stored M_{j+1} stands in for the intermediate
  // checkpoint. Full archive, 1 <= j < k.
  History fused(std::size_t j) const;

 private:
  ArchiveMode mode_;
  std::vector<sxgl::Program> games_;
  std::vector<CheckpointPtr> checkpoints_;
  std::vector<std::uint64_t> phi_seeds_;
};

// Per-segment scores of the concatenated old curriculum under M_k, shared
// by every candidate of a selection round.
struct Baseline {
  std::optional<sxgl::Program> old_games;     // G_0 (+) ... (+) G_{k-1}
  std::vector<std::size_t> segment_game;      // owning game of each live segment
  ScoreEstimate at_latest;                    // under M_k
};

Baseline make_baseline(const Arena& arena, const History& hist, const EvalPlan& plan);

struct Measurement {
  PhiResult trained;                       // Phi_H(M_k)
  double score_latest = 0.0;               // S_{M_k}(H)
  double score_trained = 0.0;              // S_{Phi_H M_k}(H)
  double self_transfer = 0.0;              // T_H(H)
  double score_initial = 0.0;              // S_{M_0}(H)
  std::vector<double> archive_scores;      // S_{M_j}(H), j = 0..k (full archive)
  std::vector<double> old_to_new;          // T_{G_j}^{M_j}(H) (full archive)
  double old_to_new_sum = 0.0;             // exactly S_{M_k}(H) - S_{M_0}(H), rounded once
  std::vector<double> new_to_old;          // T_H^{M_k}(G_j)
  std::vector<double> segment_new_to_old;  // per live segment of the old curriculum
};

Measurement measure(const Arena& arena, const History& hist, const Baseline& base, const sxgl::Program& h,
                    const EvalPlan& plan, const PhiConfig& phi);

struct GateResult {
  bool accepted = true;
  GateMode mode = GateMode::Clipped;
  std::vector<double> new_to_old;
  std::vector<double> old_to_new;   // per j, empty for a latest archive
  double old_to_new_telescoped = 0.0;
  bool telescoped_only = false;
  // Sum of the new-to-old transfers, exact over segments; clipped per
  // segment in clipped mode.
  double new_to_old_sum = 0.0;
};

GateResult gate(const History& hist, const Measurement& m, GateMode mode);
GateResult gate_positive(const Arena& arena, const History& hist, const sxgl::Program& h, const EvalPlan& plan,
                         const PhiConfig& phi, GateMode mode);

}  // namespace xent::lab
