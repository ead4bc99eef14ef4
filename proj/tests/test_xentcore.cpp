#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "xent/errors.hpp"
#include "xent/xentcore.hpp"

using namespace xent;

namespace {

// Puts nearly all mass on one token, 1e-9 on token 'q'.
class Peaked final : public LocalModel {
 public:
  Peaked() : LocalModel(Vocab::bytes()) {}
  std::string kind() const override { return "peaked"; }
  void next_logprobs(std::span<const TokenId>, double, std::vector<double>& out) const override {
    out.assign(257, -1000.0);
    out['q'] = std::log(1e-9);
    out['a'] = std::log1p(-1e-9);
    out[256] = -INFINITY;
  }
};

double count_logp(const std::string& corpus_text, const std::string& window, char next) {
  // Oracle over a single training string: add-one smoothing, 256 symbols.
  int hit = 0, all = 0;
  const std::size_t w = window.size();
  for (std::size_t i = w; i < corpus_text.size(); ++i)
    if (corpus_text.compare(i - w, w, window) == 0) {
      ++all;
      if (corpus_text[i] == next) ++hit;
    }
  return std::log((hit + 1.0) / (all + 256.0));
}

}  // namespace

TEST_CASE("xent examples") {
  UniformModel u(Vocab::bytes());
  CHECK(xent::xent(u, xt::bytes("abcd"), {}, 1e-6) == doctest::Approx(22.18071).epsilon(1e-6));
  CHECK(xent::xent(u, {}, xt::bytes("abc")) == 0.0);
  Peaked p;
  CHECK(xent::xent(p, xt::bytes("q"), {}, 1e-6) == doctest::Approx(-std::log(1e-6)));
  CHECK(-std::log(1e-6) == doctest::Approx(13.81551).epsilon(1e-6));
  CHECK_THROWS_AS(xent::xent(u, xt::bytes("a"), {}, 1.0), ConfigError);
}

TEST_CASE("xent_sum examples") {
  UniformModel u(Vocab::bytes());
  const XentTerm t{1, &u, xt::bytes("abcd"), {}};
  const XentTerm neg{-1, &u, xt::bytes("abcd"), {}};
  const XentTerm three{-1, &u, xt::bytes("abc"), {}};
  CHECK(xent_sum(std::vector{t}) == xent::xent(u, t.target, t.prefix));
  CHECK(xent_sum(std::vector{t, neg}) == 0.0);
  CHECK(xent_sum(std::vector{t, three}) == doctest::Approx(std::log(256.0)).epsilon(1e-12));
  CHECK_THROWS_AS(xent_sum(std::vector<XentTerm>{}), InvalidArgument);
}

TEST_CASE("ensure") {
  CHECK(ensure(3, 2) == 1.5);
  CHECK(ensure(0, 2) == 0.0);
  CHECK(ensure(-1, 2) == -2.0);
  CHECK_THROWS_AS(ensure(1, 1.0), ConfigError);
  for (double s = -5; s <= 5; s += 0.25)
    for (double l : {1.5, 2.0, 7.0}) CHECK(ensure(s, l) <= s / l);
  CHECK(std::abs(ensure(1e-300, 2.0) - ensure(-1e-300, 2.0)) < 1e-299);
}

TEST_CASE("property: xent is non-negative, monotone in p_min, and sums its profile") {
  const std::vector<TokenSeq> corpus = {xt::bytes("hello world hello there")};
  NgramModel ng(Vocab::bytes(), 2, corpus);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    TokenSeq x, c;
    for (std::size_t i = rng.next_u64() % 10; i > 0; --i) x.push_back(rng.next_u64() % 256);
    for (std::size_t i = rng.next_u64() % 4; i > 0; --i) c.push_back(rng.next_u64() % 256);
    double prev = INFINITY;
    for (double pm : {1e-12, 1e-6, 1e-3, 0.5}) {
      const double v = xent::xent(ng, x, c, pm);
      CHECK(v >= 0.0);
      CHECK(v <= prev);
      prev = v;
      const auto prof = anomaly_profile(ng, x, c, pm);
      double s = 0.0;
      for (double e : prof) s += e;
      CHECK(s == v);
    }
  }
}

TEST_CASE("deltas vanish under the uniform judge") {
  UniformModel u(Vocab::bytes());
  UniformModel u2(Vocab::bytes());
  const PromptPair pp = default_truth_prompts(Vocab::bytes());
  const std::vector<PromptPair> variants = {pp};
  CHECK(tf_delta(u, xt::bytes("the sky is blue"), xt::bytes("ctx"), variants) == 0.0);
  CHECK(tf_delta(u, {}, xt::bytes("ctx"), variants) == 0.0);
  CHECK(info_gain(u, xt::bytes("hint"), xt::bytes("q"), xt::bytes("answer")) == 0.0);
  CHECK(contrast_delta(u, u2, xt::bytes("abc"), xt::bytes("c")) == 0.0);
  CHECK(contrast_delta(u, u, xt::bytes("abc"), xt::bytes("c")) == 0.0);
  const auto prof = anomaly_profile(u, xt::bytes("abc"), {});
  for (double e : prof) CHECK(e == std::log(256.0));
  CHECK(anomaly_profile(u, {}, {}).empty());
}

TEST_CASE("info_gain with empty hint is zero") {
  const std::vector<TokenSeq> corpus = {xt::bytes("abcabd")};
  NgramModel ng(Vocab::bytes(), 2, corpus);
  CHECK(info_gain(ng, {}, xt::bytes("ab"), xt::bytes("c")) == 0.0);
}

TEST_CASE("tf_delta sign from a count oracle") {
  const std::vector<TokenSeq> corpus = {xt::bytes("true:x"), xt::bytes("false:y")};
  NgramModel ng(Vocab::bytes(), 4, corpus);
  const std::vector<PromptPair> variants = {{xt::bytes("true:"), xt::bytes("false:")}};
  const double d = tf_delta(ng, xt::bytes("x"), {}, variants);
  const double oracle = count_logp("true:x", "ue:", 'x') - count_logp("false:y", "se:", 'x');
  CHECK(d == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(d > 0.0);
  CHECK(tf_delta(ng, xt::bytes("y"), {}, variants) < 0.0);
}

TEST_CASE("info_gain from a count oracle") {
  const std::vector<TokenSeq> corpus = {xt::bytes("hzhzhz"), xt::bytes("qa")};
  NgramModel ng(Vocab::bytes(), 2, corpus);
  // With the hint the last token before x is 'h'; without it, 'q'.
  const double oracle = std::log(4.0 / 259.0) - std::log(1.0 / 257.0);
  CHECK(std::abs(count_logp("hzhzhz", "h", 'z') - std::log(4.0 / 259.0)) < 1e-15);
  CHECK(info_gain(ng, xt::bytes("h"), xt::bytes("q"), xt::bytes("z")) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("contrast_delta bigram vs uniform on abab") {
  const std::vector<TokenSeq> corpus = {xt::bytes("abab")};
  NgramModel ng(Vocab::bytes(), 2, corpus);
  UniformModel u(Vocab::bytes());
  const double oracle = count_logp("abab", "a", 'b') - (-std::log(256.0));
  CHECK(contrast_delta(ng, u, xt::bytes("b"), xt::bytes("a")) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("anomaly profile peaks at the out-of-distribution byte") {
  const std::string text = "the cat sat on the mat and the cat sat again";
  const std::vector<TokenSeq> corpus = {xt::bytes(text)};
  NgramModel ng(Vocab::bytes(), 2, corpus);
  const std::string probe = "the cat sat on the #at";
  const auto prof = anomaly_profile(ng, xt::bytes(probe), {});
  std::size_t arg = 0;
  for (std::size_t i = 1; i < prof.size(); ++i)
    if (prof[i] > prof[arg]) arg = i;
  CHECK(probe[arg] == '#');
  // Oracle for the element at '#': window ' ' never continued with '#'.
  CHECK(prof[arg] == doctest::Approx(-count_logp(text, " ", '#')).epsilon(1e-12));
}
