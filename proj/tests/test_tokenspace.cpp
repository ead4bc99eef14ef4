#include <doctest.h>

#include "support.hpp"
#include "xent/errors.hpp"
#include "xent/rng.hpp"
#include "xent/tokenspace.hpp"
#include "xent/vocab.hpp"

using xent::TokenSeq;
using xent::TokenString;

namespace {

constexpr xent::TokenId P = 256;

TokenString with(std::size_t len, const TokenSeq& left) {
  TokenString s(len, P);
  s.append_advance(left);
  return s;
}

}  // namespace

TEST_CASE("vocab: byte level round trip and pad") {
  const xent::Vocab v = xent::Vocab::bytes();
  CHECK(v.size() == 257);
  CHECK(v.pad_id() == 256);
  CHECK(v.sampleable() == 256);
  const std::string text = "h\xc3\xa9llo\n\t";
  CHECK(v.decode(v.encode(text)) == text);
  const TokenSeq ids = {0, 1, 200, 255};
  CHECK(v.encode(v.decode(ids)) == ids);
  CHECK(v.decode(TokenSeq{104, 256, 105}) == "hi");
  CHECK(v.hash() == xent::Vocab::bytes().hash());
  CHECK(v.hash() != xent::Vocab::synthetic(3).hash());
}

TEST_CASE("new_register") {
  TokenString four(4, P);
  CHECK(four.length() == 4);
  CHECK(four.caret() == 0);
  CHECK(four.tokens().size() == 4);
  for (auto t : four.tokens()) CHECK(t == P);
  TokenString one(1, P);
  CHECK(one.length() == 1);
  CHECK(one.caret() == 0);
  CHECK(one.at(0) == P);
  CHECK_THROWS_AS(TokenString(0, P), xent::InvalidArgument);
}

TEST_CASE("move_caret saturates") {
  TokenString s(4, P);
  s.move_caret(-1);
  CHECK(s.caret() == 0);
  s = with(4, {1, 2});
  s.move_caret(+1);
  CHECK(s.caret() == 3);
  s = with(4, {1, 2, 3, 4});
  s.move_caret(+1);
  CHECK(s.caret() == 4);
  CHECK_THROWS_AS(s.move_caret(2), xent::InvalidArgument);
}

TEST_CASE("append_advance") {
  TokenString s(4, P);
  s.append_advance(TokenSeq{7, 9});
  CHECK(s.tokens()[0] == 7);
  CHECK(s.tokens()[1] == 9);
  CHECK(s.tokens()[2] == P);
  CHECK(s.caret() == 2);

  TokenString t = with(4, {5, 5, 5});
  t.append_advance(TokenSeq{1, 2, 3});
  CHECK(t.caret() == 4);
  CHECK(t.at(3) == 1);

  TokenString u = with(4, {8});
  const TokenString before = u;
  u.append_advance(TokenSeq{});
  CHECK(u == before);
}

TEST_CASE("fill_left_region") {
  TokenString s = with(4, {1, 1, 1});
  s.fill_left_region(TokenSeq{5, 6, 7, 8});
  CHECK(s.left() == TokenSeq{5, 6, 7});
  CHECK(s.caret() == 3);
  CHECK(s.at(3) == P);

  TokenString e(4, P);
  e.fill_left_region(TokenSeq{1});
  CHECK(e == TokenString(4, P));

  TokenString p = with(4, {3, 4});
  p.fill_left_region(TokenSeq{9});
  CHECK(p.left() == TokenSeq{9, 4});
}

TEST_CASE("copy_into_left") {
  const TokenString src = with(4, {3, 4});
  TokenString dst = with(4, {1, 1, 1});
  dst.copy_into_left(src);
  CHECK(dst.tokens()[0] == 1);
  CHECK(dst.tokens()[1] == 3);
  CHECK(dst.tokens()[2] == 4);
  CHECK(dst.caret() == 1);

  TokenString d2 = with(4, {1, 2});
  const TokenString before = d2;
  d2.copy_into_left(TokenString(4, P));
  CHECK(d2 == before);

  TokenString small = with(4, {1, 2});
  CHECK_THROWS_AS(small.copy_into_left(with(4, {1, 2, 3})), xent::OverflowError);
  CHECK(small == with(4, {1, 2}));
}

TEST_CASE("property: random op sequences keep length and caret bounds") {
  xent::Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t len = 1 + rng.next_u64() % 9;
    TokenString s(len, P);
    TokenString other(len, P);
    for (int op = 0; op < 60; ++op) {
      TokenSeq xs(rng.next_u64() % 12);
      for (auto& x : xs) x = static_cast<xent::TokenId>(rng.next_u64() % 256);
      const std::size_t before = s.caret();
      switch (rng.next_u64() % 5) {
        case 0: s.move_caret(rng.next_u64() % 2 ? 1 : -1); break;
        case 1: {
          s.append_advance(xs);
          const std::size_t wrote = s.caret() - before;
          CHECK(wrote == std::min(xs.size(), len - before));
          for (std::size_t i = 0; i < wrote; ++i) CHECK(s.at(before + i) == xs[i]);
          break;
        }
        case 2: s.fill_left_region(xs); CHECK(s.caret() == before); break;
        case 3:
          if (other.caret() <= s.caret()) {
            s.copy_into_left(other);
            CHECK(s.caret() == before - other.caret());
          } else {
            CHECK_THROWS_AS(s.copy_into_left(other), xent::OverflowError);
          }
          break;
        default: other.append_advance(xs); other.move_caret(-1); break;
      }
      REQUIRE(s.tokens().size() == len);
      REQUIRE(s.caret() <= len);
    }
  }
}

TEST_CASE("property: +1 then -1 is identity strictly inside") {
  for (std::size_t c = 1; c < 5; ++c) {
    TokenString s = with(6, TokenSeq(c, 42));
    const TokenString before = s;
    s.move_caret(+1);
    s.move_caret(-1);
    CHECK(s == before);
  }
}
