#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "xent/errors.hpp"
#include "xent/exact_sum.hpp"
#include "xent/transferlab.hpp"
#include "xent/xentcore.hpp"

using namespace xent;
using namespace xent::lab;
using xt::phi;

namespace {


sxgl::Program rp(const World& w, const std::string& text, double prompt = 3) {
  return xt::game(w, "reverse_prompt", {{"text", text}}, {{"judge", "m1"}}, {{"prompt", prompt}});
}

}  // namespace

TEST_CASE("mean_of is exact on constant samples") {
  const double v = -22.18070977791825;
  std::vector<double> xs(37, v);
  CHECK(xt::same_bits(mean_of(xs), v));
  std::vector<double> ys = {1.0, 2.0, 4.0};
  CHECK(mean_of(ys) == doctest::Approx(7.0 / 3.0));
}

TEST_CASE("eval plans") {
  const EvalPlan p = EvalPlan::make(5, 9);
  CHECK(p.size() == 5);
  CHECK(p.rollouts[0][0] == derive_seed(9, 1));
  CHECK_NOTHROW(p.validate());
  EvalPlan dup = p;
  dup.rollouts[1] = dup.rollouts[0];
  CHECK_THROWS_AS(dup.validate(), InvalidArgument);
  CHECK_THROWS_AS(EvalPlan{}.validate(), InvalidArgument);
}

TEST_CASE("score of an elicit-free game on the uniform judge") {
  auto w = xt::toy();
  const auto h = xt::game(w, "pretraining", {{"text", "abcd"}}, {{"judge", "m2"}});
  const auto est = estimate(*w.arena, w.initial, h, EvalPlan::make(16, 1));
  UniformModel u(Vocab::bytes());
  CHECK(xt::same_bits(est.mean, 0.0 - xent::xent(u, xt::bytes("abcd"), {})));
  CHECK(est.mean == doctest::Approx(-4 * std::log(256.0)).epsilon(1e-14));
  CHECK(est.sd == 0.0);
}

TEST_CASE("score of the pretraining game under a bigram matches a count oracle") {
  auto w = xt::toy({"corpus=[\"abab\"]"});
  const auto h = xt::game(w, "pretraining", {{"text", "abab"}}, {{"judge", "m1"}});
  // Windows seen in training: start->a once, a->b twice, b->a once.
  const double oracle = std::log(2.0 / 257) + std::log(3.0 / 258) + std::log(2.0 / 257) + std::log(3.0 / 258);
  CHECK(score(*w.arena, w.initial, h, EvalPlan::make(4, 2)) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("doubling the game doubles the score") {
  auto w = xt::toy();
  const auto player = xt::jittered(w.arena->vocab(), 1, 77, 1.0);
  Rng rng(6);
  for (const char* t : {"the cat", "a dog ran", "xyz"}) {
    const auto h = rp(w, t);
    const EvalPlan plan = EvalPlan::make(24, rng.next_u64());
    const double once = score(*w.arena, player, h, plan);
    const double twice = score(*w.arena, player, sxgl::concat(h, h), plan.doubled(h));
    CHECK(xt::same_bits(twice, 2 * once));
  }
}

TEST_CASE("estimation fails when every rollout aborts") {
  auto w = xt::toy();
  const auto bad = w.arena->parse("s0>>s0\nm0<<x");
  CHECK_THROWS_AS(estimate(*w.arena, w.initial, bad, EvalPlan::make(3, 1)), EstimationError);
}

TEST_CASE("train_phi flags and identities") {
  auto w = xt::toy();
  const auto g = rp(w, "the cat sat");
  const auto id = train_phi(*w.arena, w.initial, g, phi(0.0));
  CHECK(id.flag == std::optional<std::string>("zero-learning-rate"));
  CHECK(id.ckpt->identical(*w.initial));

  const auto pre = xt::game(w, "pretraining", {{"text", "abcd"}});
  const auto none = train_phi(*w.arena, w.initial, pre, phi(0.1));
  CHECK(none.flag == std::optional<std::string>("no-player-elicit"));
  CHECK(none.ckpt->identical(*w.initial));

  const auto moved = train_phi(*w.arena, w.initial, g, phi(0.1, 64));
  CHECK_FALSE(moved.flag);
  CHECK(moved.episodes == 64);
  CHECK_FALSE(moved.ckpt->identical(*w.initial));

  PhiConfig affine = phi(0.1, 64);
  affine.reward_scale = 2.0;
  affine.reward_shift = -1.0;
  CHECK(train_phi(*w.arena, w.initial, g, affine).ckpt->identical(*moved.ckpt));

  CHECK_THROWS_AS(train_phi(*w.arena, w.initial, g, phi(0.1, 1)), ConfigError);
  PhiConfig neg = phi(0.1);
  neg.reward_scale = -1.0;
  CHECK_THROWS_AS(train_phi(*w.arena, w.initial, g, neg), ConfigError);
}

TEST_CASE("transfer identities") {
  auto w = xt::toy();
  // h scores text with the player as judge, so its score moves smoothly
  // with the parameters.
  const auto g = rp(w, "the cat sat");
  const auto h = xt::game(w, "pretraining", {{"text", "at the cat"}});
  const EvalPlan plan = EvalPlan::make(32, 4);
  CHECK(transfer(*w.arena, w.initial, g, h, plan, phi(0.0)).value == 0.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto one = transfer(*w.arena, w.initial, g, h, plan, phi(0.5, 64, s));
    const auto two = transfer(*w.arena, w.initial, g, sxgl::concat(h, h), plan.doubled(h), phi(0.5, 64, s));
    CHECK(one.value != 0.0);
    CHECK(xt::same_bits(two.value, 2 * one.value));
  }
}

TEST_CASE("history bookkeeping") {
  auto w = xt::toy();
  History full(w.initial);
  History latest(w.initial, ArchiveMode::Latest);
  const auto g = rp(w, "abc");
  CheckpointPtr cur = w.initial;
  for (int j = 0; j < 3; ++j) {
    cur = train_phi(*w.arena, cur, g, phi(0.1, 8, j)).ckpt;
    full.push(g, cur, j);
    latest.push(g, cur, j);
  }
  CHECK(full.k() == 3);
  CHECK(full.checkpoints().size() == 4);
  CHECK(latest.checkpoints().size() == 2);
  CHECK_THROWS_AS(latest.checkpoint(1), InvalidArgument);
  CHECK(latest.latest()->identical(*full.latest()));
  const History f = full.fused(1);
  CHECK(f.k() == 3);
  CHECK(f.games()[1].source() == "x<<x");
  CHECK(f.games()[0].source() == sxgl::concat(g, g).source());
  CHECK(f.checkpoint(1) == full.checkpoint(2));
  CHECK_THROWS_AS(full.fused(0), InvalidArgument);
  CHECK_THROWS_AS(latest.fused(1), InvalidArgument);
}

TEST_CASE("gate boundaries") {
  auto w = xt::toy();
  const auto h = rp(w, "the cat");
  const EvalPlan plan = EvalPlan::make(16, 5);
  History empty(w.initial);
  const auto g0 = gate_positive(*w.arena, empty, h, plan, phi(0.1), GateMode::Strict);
  CHECK(g0.accepted);
  CHECK(g0.new_to_old.empty());
  CHECK(g0.old_to_new.empty());

  History frozen(w.initial);
  frozen.push(rp(w, "dog"), w.initial, 1);
  frozen.push(rp(w, "bird"), w.initial, 2);
  const auto strict = gate_positive(*w.arena, frozen, h, plan, phi(0.0), GateMode::Strict);
  CHECK_FALSE(strict.accepted);
  const auto clipped = gate_positive(*w.arena, frozen, h, plan, phi(0.0), GateMode::Clipped);
  CHECK(clipped.accepted);
  for (double v : clipped.new_to_old) CHECK(v == 0.0);
  for (double v : clipped.old_to_new) CHECK(v == 0.0);
}

TEST_CASE("new-to-old transfer onto the first game matches a direct measurement") {
  auto w = xt::toy();
  const auto g0 = rp(w, "the cat", 2);
  const auto g1 = rp(w, "a dog", 2);
  const PhiConfig p = phi(1.0, 64, 8);
  History hist(w.initial);
  CheckpointPtr m1 = train_phi(*w.arena, w.initial, g0, phi(1.0, 64, 1)).ckpt;
  hist.push(g0, m1, 1);
  CheckpointPtr m2 = train_phi(*w.arena, m1, g1, phi(1.0, 64, 2)).ckpt;
  hist.push(g1, m2, 2);
  const EvalPlan plan = EvalPlan::make(256, 10);
  const Baseline base = make_baseline(*w.arena, hist, plan);
  const auto m = measure(*w.arena, hist, base, g0, plan, p);
  const auto direct = transfer(*w.arena, hist.latest(), g0, g0, plan, p);
  REQUIRE(m.new_to_old.size() == 2);
  CHECK(xt::same_bits(m.new_to_old[0], direct.value));
  CHECK(m.new_to_old[0] > 0.0);
}

TEST_CASE("property: old-to-new transfers telescope exactly") {
  auto w = xt::toy();
  const EvalPlan plan = EvalPlan::make(32, 12);
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    History hist(w.initial);
    const char* texts[] = {"the cat", "sat on", "a mat", "dogs run"};
    CheckpointPtr cur = w.initial;
    for (int j = 0; j < 3; ++j) {
      const auto g = rp(w, texts[rng.next_u64() % 4]);
      cur = train_phi(*w.arena, cur, g, phi(0.3, 16, rng.next_u64())).ckpt;
      hist.push(g, cur, j);
    }
    const auto h = rp(w, texts[rng.next_u64() % 4]);
    const Baseline base = make_baseline(*w.arena, hist, plan);
    const auto m = measure(*w.arena, hist, base, h, plan, phi(0.3));
    const double s0 = score(*w.arena, hist.checkpoint(0), h, plan);
    const double s3 = score(*w.arena, hist.checkpoint(3), h, plan);
    CHECK(xt::same_bits(m.old_to_new_sum - (s3 - s0), 0.0));
    REQUIRE(m.old_to_new.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
      const double direct = score(*w.arena, hist.checkpoint(j + 1), h, plan) - score(*w.arena, hist.checkpoint(j), h, plan);
      CHECK(xt::same_bits(m.old_to_new[j], direct));
    }
    const auto g = gate(hist, m, GateMode::Clipped);
    CHECK(xt::same_bits(g.old_to_new_telescoped, m.old_to_new_sum));
    const auto st = gate(hist, m, GateMode::Strict);
    if (st.accepted) CHECK(g.accepted);
  }
}
