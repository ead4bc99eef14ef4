#include "xent/tokenspace.hpp"

#include <algorithm>
#include <string>

#include "xent/errors.hpp"

namespace xent {

TokenString::TokenString(std::size_t length, TokenId pad) : tokens_(length, pad), pad_(pad) {
  if (length == 0) throw InvalidArgument("token register length must be at least 1");
}

TokenSeq TokenString::left() const {
  return TokenSeq(tokens_.begin(), tokens_.begin() + static_cast<std::ptrdiff_t>(caret_));
}

TokenSeq TokenString::right() const {
  return TokenSeq(tokens_.begin() + static_cast<std::ptrdiff_t>(caret_), tokens_.end());
}

TokenSeq TokenString::right_content() const {
  TokenSeq out;
  for (std::size_t i = caret_; i < tokens_.size(); ++i)
    if (tokens_[i] != pad_) out.push_back(tokens_[i]);
  return out;
}

void TokenString::move_caret(int delta) {
  if (delta == 1) {
    if (caret_ < tokens_.size()) ++caret_;
  } else if (delta == -1) {
    if (caret_ > 0) --caret_;
  } else {
    throw InvalidArgument("caret moves are unit steps");
  }
}

void TokenString::append_advance(std::span<const TokenId> xs) {
  const std::size_t n = std::min(xs.size(), tokens_.size() - caret_);
  std::copy_n(xs.begin(), n, tokens_.begin() + static_cast<std::ptrdiff_t>(caret_));
  caret_ += n;
}

void TokenString::fill_left_region(std::span<const TokenId> xs) {
  const std::size_t n = std::min(xs.size(), caret_);
  std::copy_n(xs.begin(), n, tokens_.begin());
}

void TokenString::copy_into_left(const TokenString& src) {
  const std::size_t n = src.caret_;
  if (n > caret_)
    throw OverflowError("copy of " + std::to_string(n) + " tokens does not fit left of caret " +
                        std::to_string(caret_));
  // src may alias *this only through distinct registers; copy via a buffer anyway.
  const TokenSeq chunk = src.left();
  std::copy(chunk.begin(), chunk.end(), tokens_.begin() + static_cast<std::ptrdiff_t>(caret_ - n));
  caret_ -= n;
}

}  // namespace xent
