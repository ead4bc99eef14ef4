#include "xent/transferlab.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "xent/errors.hpp"
#include "xent/exact_sum.hpp"
#include "xent/rng.hpp"

namespace xent::lab {

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double anchor = xs.front();
  std::vector<double> dev;
  dev.reserve(xs.size());
  for (double x : xs) dev.push_back(x - anchor);
  return anchor + exact_sum(dev) / static_cast<double>(xs.size());
}

EvalPlan EvalPlan::make(std::size_t n, std::uint64_t seed) {
  EvalPlan plan;
  plan.rollouts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) plan.rollouts.push_back({derive_seed(seed, i + 1)});
  return plan;
}

void EvalPlan::validate() const {
  if (rollouts.empty()) throw InvalidArgument("evaluation plan has no rollouts");
  std::unordered_set<std::uint64_t> seen;
  for (const auto& r : rollouts) {
    if (r.empty()) throw InvalidArgument("evaluation plan has a rollout without seeds");
    if (!seen.insert(r.front()).second) throw InvalidArgument("evaluation plan seeds are not distinct");
  }
}

EvalPlan EvalPlan::expanded(const sxgl::Program& h) const {
  const std::size_t live = std::max<std::size_t>(h.live_segments(), 1);
  EvalPlan out;
  out.rollouts.reserve(rollouts.size());
  for (const auto& r : rollouts) {
    std::vector<std::uint64_t> seeds(live);
    for (std::size_t m = 0; m < live; ++m) seeds[m] = m < r.size() ? r[m] : derive_seed(r.front(), m);
    out.rollouts.push_back(std::move(seeds));
  }
  return out;
}

EvalPlan EvalPlan::doubled(const sxgl::Program& h) const {
  EvalPlan out = expanded(h);
  if (h.live_segments() == 0) return out;
  for (auto& r : out.rollouts) r.insert(r.end(), r.begin(), r.end());
  return out;
}

ScoreEstimate estimate(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& h,
                       const EvalPlan& plan) {
  plan.validate();
  const sxgl::ModelSet models = arena.models_for(ckpt);
  const std::size_t n = plan.size();
  const std::size_t player = arena.player();
  std::vector<sxgl::GameOutcome> outs(n);
  parallel_for(n, arena.jobs(), [&](std::size_t i) { outs[i] = sxgl::run(h, models, arena.machine(), plan.rollouts[i]); });

  ScoreEstimate est;
  est.rewards.resize(n);
  est.segment_rewards.resize(n);
  bool any_alive = h.live_segments() == 0;
  for (std::size_t i = 0; i < n; ++i) {
    const sxgl::GameOutcome& o = outs[i];
    est.rewards[i] = o.rewards[player];
    if (o.aborted) ++est.aborted;
    auto& segs = est.segment_rewards[i];
    segs.reserve(o.segments.size());
    for (const sxgl::SegmentResult& s : o.segments) {
      segs.push_back(s.rewards[player]);
      if (!s.aborted) any_alive = true;
    }
  }
  if (!any_alive) throw EstimationError("every rollout aborted");
  est.mean = mean_of(est.rewards);
  if (n > 1) {
    double ss = 0.0;
    for (double r : est.rewards) ss += (r - est.mean) * (r - est.mean);
    est.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return est;
}

double score(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& h, const EvalPlan& plan) {
  return estimate(arena, ckpt, h, plan).mean;
}

void PhiConfig::validate() const {
  if (batch < 2) throw ConfigError("training batch must hold at least 2 rollouts");
  if (!std::isfinite(eta) || eta < 0.0) throw ConfigError("learning rate must be finite and non-negative");
  if (!(reward_scale > 0.0) || !std::isfinite(reward_scale) || !std::isfinite(reward_shift))
    throw ConfigError("reward transform needs a finite positive scale");
  if (!schedule.empty() && schedule.size() != batch)
    throw ConfigError("explicit training schedule must hold one seed list per rollout");
  for (const auto& s : schedule)
    if (s.empty()) throw ConfigError("explicit training schedule has an empty seed list");
}

std::vector<std::uint64_t> PhiConfig::rollout_seeds(std::size_t b) const {
  if (!schedule.empty()) return schedule.at(b);
  return {derive_seed(seed, b + 1)};
}

PhiResult train_phi(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& g, const PhiConfig& cfg) {
  cfg.validate();
  PhiResult res;
  res.ckpt = ckpt;
  const sxgl::ModelSet models = arena.models_for(ckpt);
  std::vector<sxgl::GameOutcome> outs(cfg.batch);
  parallel_for(cfg.batch, arena.jobs(), [&](std::size_t b) {
    const std::vector<std::uint64_t> seeds = cfg.rollout_seeds(b);
    outs[b] = sxgl::run(g, models, arena.machine(), seeds);
  });

  std::vector<Episode> episodes;
  for (sxgl::GameOutcome& o : outs) {
    for (sxgl::SegmentResult& s : o.segments) {
      if (s.aborted) {
        ++res.aborted_segments;
        continue;
      }
      res.trajectories += s.player_moves.size();
      episodes.push_back({std::move(s.player_moves), cfg.reward_scale * s.rewards[arena.player()] + cfg.reward_shift});
    }
  }
  res.episodes = episodes.size();
  if (res.trajectories == 0) {
    res.flag = "no-player-elicit";
    return res;
  }
  if (episodes.size() < 2) {
    res.flag = "too-few-episodes";
    return res;
  }
  Checkpoint next = train_policy_gradient(*ckpt, episodes, cfg.eta);
  if (next.identical(*ckpt)) {
    res.flag = cfg.eta == 0.0 ? "zero-learning-rate" : "no-reward-variation";
    return res;
  }
  res.ckpt = std::make_shared<const Checkpoint>(std::move(next));
  return res;
}

TransferResult transfer(const Arena& arena, const CheckpointPtr& ckpt, const sxgl::Program& g,
                        const sxgl::Program& h, const EvalPlan& plan, const PhiConfig& phi) {
  TransferResult t;
  t.trained = train_phi(arena, ckpt, g, phi);
  t.before = estimate(arena, ckpt, h, plan);
  t.after = t.trained.ckpt == ckpt ? t.before : estimate(arena, t.trained.ckpt, h, plan);
  t.value = t.after.mean - t.before.mean;
  return t;
}

std::string to_string(ArchiveMode m) { return m == ArchiveMode::Full ? "full" : "latest"; }
std::string to_string(GateMode m) { return m == GateMode::Strict ? "strict" : "clipped"; }

ArchiveMode archive_mode_from_string(const std::string& s) {
  if (s == "full") return ArchiveMode::Full;
  if (s == "latest") return ArchiveMode::Latest;
  throw ConfigError("archive mode must be 'full' or 'latest'");
}

GateMode gate_mode_from_string(const std::string& s) {
  if (s == "strict") return GateMode::Strict;
  if (s == "clipped") return GateMode::Clipped;
  throw ConfigError("gate mode must be 'strict' or 'clipped'");
}

History::History(CheckpointPtr initial, ArchiveMode mode) : mode_(mode) {
  if (!initial) throw InvalidArgument("history needs an initial checkpoint");
  checkpoints_.push_back(std::move(initial));
}

const CheckpointPtr& History::checkpoint(std::size_t j) const {
  if (mode_ != ArchiveMode::Full) throw InvalidArgument("intermediate checkpoints need a full archive");
  return checkpoints_.at(j);
}

void History::push(sxgl::Program game, CheckpointPtr trained, std::uint64_t phi_seed) {
  games_.push_back(std::move(game));
  phi_seeds_.push_back(phi_seed);
  if (mode_ == ArchiveMode::Latest && checkpoints_.size() == 2) checkpoints_.back() = std::move(trained);
  else checkpoints_.push_back(std::move(trained));
}

History History::fused(std::size_t j) const {
  if (mode_ != ArchiveMode::Full) throw InvalidArgument("history fusion needs a full archive");
  if (j < 1 || j >= k()) throw InvalidArgument("fusion index out of range");
  History out = *this;
  out.games_[j - 1] = sxgl::concat(games_[j - 1], games_[j]);
  out.games_[j] = sxgl::parse("x<<x", games_[j].shape());
  out.checkpoints_[j] = checkpoints_[j + 1];
  return out;
}

namespace {

sxgl::Program concat_all(const std::vector<sxgl::Program>& games, std::vector<std::size_t>& segment_game) {
  sxgl::Program all = games.front();
  for (std::size_t j = 1; j < games.size(); ++j) all = sxgl::concat(all, games[j]);
  std::vector<std::size_t> line_owner;
  for (std::size_t j = 0; j < games.size(); ++j) line_owner.insert(line_owner.end(), games[j].lines().size(), j);
  for (const sxgl::Segment& s : all.segments())
    if (!s.empty()) segment_game.push_back(line_owner.at(s.first));
  return all;
}

double segment_mean(const ScoreEstimate& e, std::size_t m) {
  std::vector<double> col;
  col.reserve(e.segment_rewards.size());
  for (const auto& r : e.segment_rewards) col.push_back(r[m]);
  return mean_of(col);
}

}  // namespace

Baseline make_baseline(const Arena& arena, const History& hist, const EvalPlan& plan) {
  Baseline base;
  if (hist.k() == 0) return base;
  base.old_games = concat_all(hist.games(), base.segment_game);
  base.at_latest = estimate(arena, hist.latest(), *base.old_games, plan);
  return base;
}

Measurement measure(const Arena& arena, const History& hist, const Baseline& base, const sxgl::Program& h,
                    const EvalPlan& plan, const PhiConfig& phi) {
  Measurement m;
  m.trained = train_phi(arena, hist.latest(), h, phi);
  const bool unchanged = m.trained.ckpt == hist.latest();
  m.score_latest = score(arena, hist.latest(), h, plan);
  m.score_trained = unchanged ? m.score_latest : score(arena, m.trained.ckpt, h, plan);
  m.self_transfer = m.score_trained - m.score_latest;

  const std::size_t k = hist.k();
  if (hist.mode() == ArchiveMode::Full) {
    m.archive_scores.resize(k + 1);
    m.archive_scores[k] = m.score_latest;
    for (std::size_t j = 0; j < k; ++j) m.archive_scores[j] = score(arena, hist.checkpoint(j), h, plan);
    std::vector<double> terms;
    for (std::size_t j = 0; j < k; ++j) {
      m.old_to_new.push_back(m.archive_scores[j + 1] - m.archive_scores[j]);
      terms.push_back(m.archive_scores[j + 1]);
      terms.push_back(-m.archive_scores[j]);
    }
    m.score_initial = m.archive_scores[0];
    m.old_to_new_sum = exact_sum(terms);
  } else {
    m.score_initial = k == 0 ? m.score_latest : score(arena, hist.initial(), h, plan);
    const double terms[] = {m.score_latest, -m.score_initial};
    m.old_to_new_sum = exact_sum(terms);
  }

  if (k == 0) return m;
  if (!base.old_games) throw InvalidArgument("baseline does not match the history");
  const ScoreEstimate& before = base.at_latest;
  const ScoreEstimate after = unchanged ? before : estimate(arena, m.trained.ckpt, *base.old_games, plan);
  const std::size_t segs = base.segment_game.size();
  m.segment_new_to_old.resize(segs);
  for (std::size_t s = 0; s < segs; ++s) m.segment_new_to_old[s] = segment_mean(after, s) - segment_mean(before, s);

  // Per game: the same arithmetic as a direct paired transfer() on G_j.
  m.new_to_old.assign(k, 0.0);
  const std::size_t n = plan.size();
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> total_before(n);
    std::vector<double> total_after(n);
    std::vector<double> tb;
    std::vector<double> ta;
    for (std::size_t i = 0; i < n; ++i) {
      tb.clear();
      ta.clear();
      for (std::size_t s = 0; s < segs; ++s) {
        if (base.segment_game[s] != j) continue;
        tb.push_back(before.segment_rewards[i][s]);
        ta.push_back(after.segment_rewards[i][s]);
      }
      total_before[i] = exact_sum(tb);
      total_after[i] = exact_sum(ta);
    }
    m.new_to_old[j] = mean_of(total_after) - mean_of(total_before);
  }
  return m;
}

GateResult gate(const History& hist, const Measurement& m, GateMode mode) {
  GateResult g;
  g.mode = mode;
  g.new_to_old = m.new_to_old;
  g.old_to_new = m.old_to_new;
  g.old_to_new_telescoped = m.old_to_new_sum;
  g.telescoped_only = hist.mode() == ArchiveMode::Latest;
  if (hist.k() == 0) {
    g.old_to_new.clear();
    return g;
  }
  std::vector<double> segs = m.segment_new_to_old;
  if (mode == GateMode::Strict) {
    auto positive = [](double v) { return v > 0.0; };
    g.accepted = std::all_of(g.new_to_old.begin(), g.new_to_old.end(), positive) &&
                 (g.telescoped_only ? g.old_to_new_telescoped > 0.0
                                    : std::all_of(g.old_to_new.begin(), g.old_to_new.end(), positive));
  } else {
    auto clip = [](double& v) { v = std::max(v, 0.0); };
    std::for_each(g.new_to_old.begin(), g.new_to_old.end(), clip);
    std::for_each(g.old_to_new.begin(), g.old_to_new.end(), clip);
    std::for_each(segs.begin(), segs.end(), clip);
    g.accepted = true;
  }
  g.new_to_old_sum = exact_sum(segs);
  return g;
}

GateResult gate_positive(const Arena& arena, const History& hist, const sxgl::Program& h, const EvalPlan& plan,
                         const PhiConfig& phi, GateMode mode) {
  const Baseline base = make_baseline(arena, hist, plan);
  return gate(hist, measure(arena, hist, base, h, plan, phi), mode);
}

}  // namespace xent::lab
