#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "support.hpp"
#include "xent/errors.hpp"
#include "xent/model.hpp"

using namespace xent;

namespace {

// Fixed-advantage objective sum_e A_e sum_tokens log pi(token | window),
// evaluated through the public model interface only.
double objective(const Checkpoint& c, const std::vector<Episode>& eps, const std::vector<double>& adv) {
  double j = 0.0;
  std::vector<double> lp;
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (const Trajectory& tr : eps[e].trajectories) {
      TokenSeq hist = tr.context;
      for (TokenId t : tr.tokens) {
        c.row_logprobs(c.row_index(hist), tr.temperature, lp);
        j += adv[e] * lp[t];
        hist.push_back(t);
      }
    }
  return j;
}

std::vector<Episode> random_episodes(const Vocab& v, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<Episode> eps(n);
  for (auto& e : eps) {
    e.reward = rng.uniform() * 4 - 2;
    for (int k = 0; k < 2; ++k) {
      Trajectory tr;
      tr.temperature = k == 0 ? 1.0 : 0.7;
      for (std::size_t i = rng.next_u64() % 3; i > 0; --i) tr.context.push_back(rng.next_u64() % v.sampleable());
      for (std::size_t i = 1 + rng.next_u64() % 3; i > 0; --i) tr.tokens.push_back(rng.next_u64() % v.sampleable());
      e.trajectories.push_back(tr);
    }
  }
  return eps;
}

}  // namespace

TEST_CASE("uniform logprobs are -ln 256 per token") {
  UniformModel m(Vocab::bytes());
  const auto lp = m.logprobs(xt::bytes(""), xt::bytes("abcd"));
  REQUIRE(lp.size() == 4);
  for (double x : lp) CHECK(x == doctest::Approx(-5.54518).epsilon(1e-6));
  for (double x : lp) CHECK(x == -std::log(256.0));
  CHECK(m.logprobs(xt::bytes("ctx"), {}).empty());
}

TEST_CASE("bigram matches a hand count over abab") {
  const Vocab v = Vocab::bytes();
  const std::vector<TokenSeq> corpus = {xt::bytes("abab")};
  NgramModel m(v, 2, corpus);
  // Oracle: scan the corpus for windows starting with 'a'.
  const std::string text = "abab";
  int ab = 0, a_any = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i)
    if (text[i] == 'a') {
      ++a_any;
      if (text[i + 1] == 'b') ++ab;
    }
  const double expected = std::log((ab + 1.0) / (a_any + 256.0));
  const auto lp = m.logprobs(xt::bytes("a"), xt::bytes("b"));
  REQUIRE(lp.size() == 1);
  CHECK(std::abs(lp[0] - expected) < 1e-12);
  CHECK(m.count(xt::bytes("a"), 'b') == 2);
  CHECK(m.total(xt::bytes("a")) == 2);
}

TEST_CASE("sampling contract") {
  UniformModel u(Vocab::bytes());
  CHECK(u.sample(xt::bytes("x"), 0, 1.0, 5).empty());
  CHECK(u.sample(xt::bytes("x"), 32, 1.0, 5) == u.sample(xt::bytes("x"), 32, 1.0, 5));
  CHECK(u.sample(xt::bytes("x"), 32, 1.0, 5) != u.sample(xt::bytes("x"), 32, 1.0, 6));
  for (TokenId t : u.sample({}, 500, 1.0, 1)) CHECK(t != 256);
  CHECK_THROWS_AS(u.sample({}, 1, 0.0, 1), InvalidArgument);

  auto c = std::make_shared<Checkpoint>(Checkpoint::zeros(Vocab::bytes(), 0));
  c->table[7] = 1e9;
  LogitTableModel m(c);
  for (TokenId t : m.sample(xt::bytes("abc"), 200, 1.0, 3)) CHECK(t == 7);

  // Even a pad logit of +1e9 never leaks into samples.
  auto p = std::make_shared<Checkpoint>(Checkpoint::zeros(Vocab::bytes(), 0));
  p->table[256] = 1e9;
  for (TokenId t : LogitTableModel(p).sample({}, 200, 1.0, 3)) CHECK(t != 256);
}

TEST_CASE("property: softmax rows sum to one over non-pad ids") {
  for (std::uint32_t w : {0u, 1u, 2u}) {
    const auto c = xt::jittered(Vocab::synthetic(5), w, 17 + w, 30.0);
    std::vector<double> lp;
    for (std::uint64_t r = 0; r < c->rows; ++r)
      for (double temp : {0.3, 1.0, 2.5}) {
        c->row_logprobs(r, temp, lp);
        double s = 0.0;
        for (std::size_t j = 0; j < lp.size(); ++j)
          if (j != c->vocab.pad_id()) s += std::exp(lp[j]);
        CHECK(std::abs(s - 1.0) < 1e-9);
        CHECK(std::isinf(lp[c->vocab.pad_id()]));
      }
  }
}

TEST_CASE("property: logprobs are additive over continuation splits") {
  const Vocab v = Vocab::bytes();
  const std::vector<TokenSeq> corpus = {xt::bytes("the cat sat on the mat"), xt::bytes("a bat")};
  NgramModel ng(v, 3, corpus);
  LogitTableModel lt(xt::jittered(v, 1, 4));
  UniformModel un(v);
  const LanguageModel* models[] = {&ng, &lt, &un};
  Rng rng(12);
  for (const LanguageModel* m : models)
    for (int trial = 0; trial < 50; ++trial) {
      TokenSeq ctx, x, y;
      for (auto* s : {&ctx, &x, &y})
        for (std::size_t i = rng.next_u64() % 6; i > 0; --i) s->push_back(97 + rng.next_u64() % 8);
      TokenSeq xy = x;
      xy.insert(xy.end(), y.begin(), y.end());
      TokenSeq cx = ctx;
      cx.insert(cx.end(), x.begin(), x.end());
      const auto whole = m->logprobs(ctx, xy);
      auto parts = m->logprobs(ctx, x);
      const auto tail = m->logprobs(cx, y);
      parts.insert(parts.end(), tail.begin(), tail.end());
      REQUIRE(whole.size() == parts.size());
      for (std::size_t i = 0; i < whole.size(); ++i) {
        CHECK(std::abs(whole[i] - parts[i]) <= 1e-9);
        CHECK(whole[i] <= 0.0);
        CHECK(std::isfinite(whole[i]));
      }
    }
}

TEST_CASE("policy gradient: trivial updates") {
  const Checkpoint c = *xt::jittered(Vocab::synthetic(3), 1, 2);
  auto eps = random_episodes(c.vocab, 5, 4);
  for (auto& e : eps) e.reward = 0.25;
  CHECK(train_policy_gradient(c, eps, 0.1).identical(c));
  eps = random_episodes(c.vocab, 5, 4);
  CHECK(train_policy_gradient(c, eps, 0.0).identical(c));
  CHECK_FALSE(train_policy_gradient(c, eps, 0.1).identical(c));
  CHECK_THROWS_AS(train_policy_gradient(c, std::span(eps).first(1), 0.1), InvalidArgument);
  eps[0].reward = NAN;
  CHECK_THROWS_AS(train_policy_gradient(c, eps, 0.1), InvalidArgument);
}

TEST_CASE("policy gradient: two-token window-0 step matches a finite-difference oracle") {
  const Vocab v = Vocab::synthetic(2);
  const Checkpoint c = Checkpoint::zeros(v, 0);
  std::vector<Episode> eps(2);
  eps[0].reward = 0.0;
  eps[0].trajectories = {Trajectory{{}, {0}, 1.0}};
  eps[1].reward = 1.0;
  eps[1].trajectories = {Trajectory{{}, {1}, 1.0}};
  const double eta = 0.01;
  const Checkpoint out = train_policy_gradient(c, eps, eta);
  // Oracle: advantages are -1 and +1 for rewards {0, 1}; differentiate J numerically.
  const std::vector<double> adv = {-1.0, 1.0};
  const double h = 1e-6;
  for (std::size_t i = 0; i < 2; ++i) {
    Checkpoint plus = c, minus = c;
    plus.table[i] += h;
    minus.table[i] -= h;
    const double fd = (objective(plus, eps, adv) - objective(minus, eps, adv)) / (2 * h);
    const double step = out.table[i] - c.table[i];
    CHECK(std::abs(step - eta * fd) <= 1e-4 * std::abs(eta * fd));
  }
  CHECK(out.table[0] == doctest::Approx(-eta));
  CHECK(out.table[1] == doctest::Approx(eta));
  CHECK(out.table[2] == 0.0);
}

TEST_CASE("policy gradient agrees with central differences on a 3-token vocab") {
  for (std::uint32_t w : {0u, 1u}) {
    const Checkpoint c = *xt::jittered(Vocab::synthetic(3), w, 40 + w);
    const auto eps = random_episodes(c.vocab, 90 + w, 5);
    std::vector<double> rewards;
    for (auto& e : eps) rewards.push_back(e.reward);
    const auto adv = normalized_advantages(rewards);
    const auto grad = policy_gradient(c, eps, adv);
    const double h = 1e-6;
    for (std::size_t i = 0; i < c.table.size(); ++i) {
      Checkpoint plus = c, minus = c;
      plus.table[i] += h;
      minus.table[i] -= h;
      const double fd = (objective(plus, eps, adv) - objective(minus, eps, adv)) / (2 * h);
      CHECK(std::abs(grad[i] - fd) <= 1e-4 * std::max(std::abs(fd), 1e-3));
    }
  }
}

TEST_CASE("property: affine reward transforms give bit-identical updates") {
  const Checkpoint c = *xt::jittered(Vocab::synthetic(4), 1, 8);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto eps = random_episodes(c.vocab, 300 + s, 6);
    const Checkpoint base = train_policy_gradient(c, eps, 0.05);
    for (double a : {0.5, 2.0, 10.0})
      for (double b : {-1.0, 0.0, 3.0}) {
        auto moved = eps;
        for (auto& e : moved) e.reward = a * e.reward + b;
        CHECK(train_policy_gradient(c, moved, 0.05).identical(base));
      }
  }
}

TEST_CASE("checkpoint digest tracks parameters") {
  Checkpoint a = Checkpoint::zeros(Vocab::synthetic(3), 1);
  Checkpoint b = a;
  CHECK(a.digest() == b.digest());
  b.table[1] = 1e-300;
  CHECK(a.digest() != b.digest());
  CHECK_FALSE(a.identical(b));
  CHECK_THROWS_AS(Checkpoint::zeros(Vocab::synthetic(3), 0, 2), InvalidArgument);
}
