#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xent/vocab.hpp"

namespace xent {

// Fixed-length token register with a caret separating the written (left)
// half from the unwritten (right) half. Length never changes after creation
// and the caret always stays in [0, L].
class TokenString {
 public:
  TokenString(std::size_t length, TokenId pad);

  std::size_t length() const noexcept { return tokens_.size(); }
  std::size_t caret() const noexcept { return caret_; }
  TokenId pad() const noexcept { return pad_; }
  std::span<const TokenId> tokens() const noexcept { return tokens_; }
  TokenId at(std::size_t i) const { return tokens_.at(i); }

  // Cells [0, caret).
  TokenSeq left() const;
  // Cells [caret, L) including pad cells.
  TokenSeq right() const;
  // Cells [caret, L) with pad cells dropped.
  TokenSeq right_content() const;

  // Saturating unit move; delta must be +1 or -1.
  void move_caret(int delta);
  // Write at the caret and advance it; tokens past L are cut.
  void append_advance(std::span<const TokenId> xs);
  // Write xs into [0, min(|xs|, caret)); caret unchanged.
  void fill_left_region(std::span<const TokenId> xs);
  // Copy src's left half into the cells just left of this caret and move
  // the caret left by src.caret(). Throws OverflowError if it does not fit.
  void copy_into_left(const TokenString& src);

  friend bool operator==(const TokenString&, const TokenString&) = default;

 private:
  std::vector<TokenId> tokens_;
  std::size_t caret_ = 0;
  TokenId pad_;
};

}  // namespace xent
