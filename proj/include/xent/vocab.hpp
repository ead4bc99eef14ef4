#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xent {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Token vocabulary shared by every model of a game space. The reference
// vocabulary is byte level: ids 0..255 are bytes and 256 is the pad id that
// marks unwritten register cells. `synthetic(n)` builds an abstract
// vocabulary of n sampleable ids plus pad, used by small numeric tests.
class Vocab {
 public:
  static Vocab bytes();
  static Vocab synthetic(std::uint32_t sampleable);

  std::uint32_t size() const noexcept { return size_; }
  TokenId pad_id() const noexcept { return pad_; }
  std::uint32_t sampleable() const noexcept { return size_ - 1; }
  bool is_byte_level() const noexcept { return bytes_; }
  bool valid(TokenId t) const noexcept { return t < size_; }

  TokenSeq encode(std::string_view text) const;
  // Pad ids are skipped; other non-byte ids are rejected.
  std::string decode(std::span<const TokenId> tokens) const;

  // Stable fingerprint used by checkpoints and the remote handshake.
  std::string hash() const;

  friend bool operator==(const Vocab&, const Vocab&) = default;

 private:
  Vocab(std::uint32_t size, TokenId pad, bool bytes) : size_(size), pad_(pad), bytes_(bytes) {}
  std::uint32_t size_;
  TokenId pad_;
  bool bytes_;
};

std::uint64_t fnv1a64(std::string_view data) noexcept;

}  // namespace xent
