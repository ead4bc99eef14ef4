#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xent/rng.hpp"
#include "xent/vocab.hpp"

namespace xent {

// Log-probability reported for the pad id. Pad carries no mass under any
// backend; a finite floor keeps every reported value finite, and the xent
// clipping caps its contribution.
inline constexpr double kPadLogProb = -708.0;

// Autoregressive model contract shared by judges, players, data streams and
// NPCs. Implementations are immutable and safe to call concurrently.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocab& vocab() const = 0;
  virtual std::string kind() const = 0;

  // One natural-log probability per continuation token, each conditioned on
  // context ++ continuation[0, i).
  virtual std::vector<double> logprobs(std::span<const TokenId> context,
                                       std::span<const TokenId> continuation) const = 0;

  // n tokens, never the pad id.
  virtual TokenSeq sample(std::span<const TokenId> context, std::size_t n, double temperature,
                          Rng& rng) const = 0;

  TokenSeq sample(std::span<const TokenId> context, std::size_t n, double temperature,
                  std::uint64_t seed) const {
    Rng rng(seed);
    return sample(context, n, temperature, rng);
  }
};

// Base for in-process models defined by a next-token distribution.
class LocalModel : public LanguageModel {
 public:
  explicit LocalModel(Vocab vocab) : vocab_(vocab) {}
  const Vocab& vocab() const override { return vocab_; }

  std::vector<double> logprobs(std::span<const TokenId> context,
                               std::span<const TokenId> continuation) const override;
  TokenSeq sample(std::span<const TokenId> context, std::size_t n, double temperature,
                  Rng& rng) const override;
  using LanguageModel::sample;

  // Next-token log-probabilities over the whole vocabulary (pad entry is
  // -inf) given the full history, at the given temperature.
  virtual void next_logprobs(std::span<const TokenId> history, double temperature,
                             std::vector<double>& out) const = 0;

 private:
  Vocab vocab_;
};

// Draw from a log-probability vector by inverse CDF on one uniform.
TokenId draw_token(std::span<const double> logp, TokenId pad, Rng& rng);

class UniformModel final : public LocalModel {
 public:
  explicit UniformModel(Vocab vocab) : LocalModel(vocab) {}
  std::string kind() const override { return "uniform"; }
  void next_logprobs(std::span<const TokenId> history, double temperature,
                     std::vector<double>& out) const override;
};

// Count-based n-gram with add-one smoothing over the sampleable ids:
//   P(b | h) = (count(h, b) + 1) / (count(h, .) + |V \ pad|).
// Histories shorter than order-1 are left-padded with the pad id, which acts
// as a beginning-of-text marker during training.
class NgramModel final : public LocalModel {
 public:
  NgramModel(Vocab vocab, std::size_t order, std::span<const TokenSeq> corpus);
  std::string kind() const override { return "ngram"; }
  std::size_t order() const noexcept { return order_; }

  std::uint64_t count(std::span<const TokenId> window, TokenId next) const;
  std::uint64_t total(std::span<const TokenId> window) const;

  void next_logprobs(std::span<const TokenId> history, double temperature,
                     std::vector<double>& out) const override;

 private:
  struct Row {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> next;
  };
  std::uint64_t key(std::span<const TokenId> history) const;

  std::size_t order_;
  std::unordered_map<std::uint64_t, Row> rows_;
};

// Parameters of the trainable player: a table of logits, one row per hashed
// window of the last `window` tokens, one column per token id. The pad
// column is never used; softmax runs over the sampleable ids only.
struct Checkpoint {
  Vocab vocab = Vocab::bytes();
  std::uint32_t window = 1;
  std::uint64_t rows = 1;
  std::uint64_t step = 0;
  std::vector<double> table;

  static Checkpoint zeros(Vocab vocab, std::uint32_t window, std::uint64_t rows);
  // rows = size^window when that is small enough to index exactly.
  static Checkpoint zeros(Vocab vocab, std::uint32_t window);

  std::uint64_t row_index(std::span<const TokenId> history) const;
  std::span<const double> row(std::uint64_t r) const {
    return {table.data() + r * vocab.size(), vocab.size()};
  }
  std::span<double> row(std::uint64_t r) { return {table.data() + r * vocab.size(), vocab.size()}; }

  // Log-softmax of row r at the given temperature into out (pad = -inf).
  void row_logprobs(std::uint64_t r, double temperature, std::vector<double>& out) const;

  // Bit-level equality of the parameters and shape.
  bool identical(const Checkpoint& other) const;
  // FNV-1a over the shape and raw parameter bytes.
  std::string digest() const;
};

class LogitTableModel final : public LocalModel {
 public:
  explicit LogitTableModel(std::shared_ptr<const Checkpoint> ckpt);
  std::string kind() const override { return "logit-table"; }
  const Checkpoint& checkpoint() const noexcept { return *ckpt_; }
  void next_logprobs(std::span<const TokenId> history, double temperature,
                     std::vector<double>& out) const override;

 private:
  std::shared_ptr<const Checkpoint> ckpt_;
};

// One elicitation by the player: the context it was sampled from and the
// sampled tokens.
struct Trajectory {
  TokenSeq context;
  TokenSeq tokens;
  double temperature = 1.0;
};

struct Episode {
  std::vector<Trajectory> trajectories;
  double reward = 0.0;
};

// Centered, std-normalized rewards snapped to a 2^-24 grid. Positive affine
// rescalings of the rewards only perturb the normalized values by a few
// ulps, so the snap makes the resulting update bit-identical. Returns an
// empty vector when the batch standard deviation is below 1e-12.
std::vector<double> normalized_advantages(std::span<const double> rewards);

// Gradient of sum_e advantage_e * sum_tokens log pi(token | window), shaped
// like ckpt.table.
std::vector<double> policy_gradient(const Checkpoint& ckpt, std::span<const Episode> episodes,
                                    std::span<const double> advantages);

// One REINFORCE step with group-normalized rewards. Requires >= 2 episodes
// with finite rewards; returns the input unchanged when all rewards are
// equal or eta is 0.
Checkpoint train_policy_gradient(const Checkpoint& ckpt, std::span<const Episode> episodes,
                                 double eta);

}  // namespace xent
