#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "xent/model.hpp"

namespace xent {

struct RemoteEndpoint {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string model_id = "default";
  double timeout_s = 30.0;
  std::size_t retries = 2;  // extra attempts after the first
};

class HttpChannel;

// Frozen model served over HTTP. Tokens travel as ids; every response must
// echo the vocabulary hash agreed at construction.
class RemoteModel final : public LanguageModel {
 public:
  // Performs the /vocab handshake; throws ConfigError when the served
  // vocabulary differs from `vocab`, TransportError when unreachable.
  RemoteModel(RemoteEndpoint endpoint, Vocab vocab);
  ~RemoteModel() override;

  const Vocab& vocab() const override { return vocab_; }
  std::string kind() const override { return "remote"; }
  std::vector<double> logprobs(std::span<const TokenId> context,
                               std::span<const TokenId> continuation) const override;
  // Throws CapabilityError when the service cannot sample with a seed.
  TokenSeq sample(std::span<const TokenId> context, std::size_t n, double temperature,
                  Rng& rng) const override;
  using LanguageModel::sample;

 private:
  RemoteEndpoint endpoint_;
  Vocab vocab_;
  std::unique_ptr<HttpChannel> channel_;
};

// Text generation client used by the remote meta-sampler.
class RemoteGenerator {
 public:
  explicit RemoteGenerator(RemoteEndpoint endpoint);
  ~RemoteGenerator();
  std::string generate(const std::string& prompt, std::size_t max_tokens) const;

 private:
  std::unique_ptr<HttpChannel> channel_;
};

}  // namespace xent
