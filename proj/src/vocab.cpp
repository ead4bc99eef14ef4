#include "xent/vocab.hpp"

#include <cstdio>

#include "xent/errors.hpp"

namespace xent {

Vocab Vocab::bytes() { return Vocab(257, 256, true); }

Vocab Vocab::synthetic(std::uint32_t sampleable) {
  if (sampleable == 0) throw InvalidArgument("synthetic vocabulary needs at least one token");
  return Vocab(sampleable + 1, sampleable, false);
}

TokenSeq Vocab::encode(std::string_view text) const {
  if (!bytes_) throw InvalidArgument("text encoding requires the byte vocabulary");
  TokenSeq out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(c);
  return out;
}

std::string Vocab::decode(std::span<const TokenId> tokens) const {
  if (!bytes_) throw InvalidArgument("text decoding requires the byte vocabulary");
  std::string out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) {
    if (t == pad_) continue;
    if (t > 255) throw InvalidArgument("token id " + std::to_string(t) + " is not a byte");
    out.push_back(static_cast<char>(t));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x00000100000001b3ull;
  }
  return h;
}

std::string Vocab::hash() const {
  std::string desc = std::string(bytes_ ? "bytes" : "synthetic") + "/v1;size=" +
                     std::to_string(size_) + ";pad=" + std::to_string(pad_);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(desc)));
  return buf;
}

}  // namespace xent
