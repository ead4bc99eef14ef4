#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xent/model.hpp"

namespace xent {

inline constexpr double kDefaultPMin = 1e-6;
inline constexpr double kDefaultLambda = 2.0;

// Clipped cross-entropy of `target` after `prefix`, in nats:
//   sum_i min(-log P(target_i | prefix, target_<i), -log p_min).
double xent(const LanguageModel& judge, std::span<const TokenId> target,
            std::span<const TokenId> prefix, double p_min = kDefaultPMin);

// Per-token clipped losses; their left-to-right sum is exactly xent().
std::vector<double> anomaly_profile(const LanguageModel& judge, std::span<const TokenId> target,
                                    std::span<const TokenId> prefix, double p_min = kDefaultPMin);

struct XentTerm {
  int sign = 1;  // +1 or -1
  const LanguageModel* judge = nullptr;
  TokenSeq target;
  TokenSeq prefix;
};

double xent_sum(std::span<const XentTerm> terms, double p_min = kDefaultPMin);

// Soft positivity constraint: S / lambda when S >= 0, lambda * S otherwise.
double ensure(double s, double lambda);

// Prompt assembly for the implicit-knowledge deltas: non-empty parts joined
// by a single separator token.
TokenSeq join_prompt(std::span<const TokenSeq> parts, TokenId separator);

struct PromptPair {
  TokenSeq true_prompt;
  TokenSeq false_prompt;
};

struct DeltaOptions {
  TokenId separator = '\n';
  double p_min = kDefaultPMin;
};

// log P(s | c, true prompt) - log P(s | c, false prompt), averaged over the
// given prompt variants (clipped log-probabilities). Positive means "true".
double tf_delta(const LanguageModel& judge, std::span<const TokenId> statement,
                std::span<const TokenId> context, std::span<const PromptPair> variants,
                const DeltaOptions& opt = {});

// log P(x | q, h) - log P(x | q).
double info_gain(const LanguageModel& judge, std::span<const TokenId> h,
                 std::span<const TokenId> q, std::span<const TokenId> x,
                 const DeltaOptions& opt = {});

// log P_m1(x | c) - log P_m2(x | c).
double contrast_delta(const LanguageModel& m1, const LanguageModel& m2,
                      std::span<const TokenId> x, std::span<const TokenId> c,
                      const DeltaOptions& opt = {});

PromptPair default_truth_prompts(const Vocab& vocab);

}  // namespace xent
