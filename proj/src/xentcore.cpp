#include "xent/xentcore.hpp"

#include <cmath>

#include "xent/errors.hpp"

namespace xent {

namespace {

void check_p_min(double p_min) {
  if (!(p_min > 0.0 && p_min < 1.0)) throw ConfigError("p_min must lie in (0, 1)");
}

}  // namespace

std::vector<double> anomaly_profile(const LanguageModel& judge, std::span<const TokenId> target,
                                    std::span<const TokenId> prefix, double p_min) {
  check_p_min(p_min);
  std::vector<double> losses = judge.logprobs(prefix, target);
  const double cap = -std::log(p_min);
  for (double& v : losses) v = std::min(-v, cap);
  return losses;
}

double xent(const LanguageModel& judge, std::span<const TokenId> target,
            std::span<const TokenId> prefix, double p_min) {
  double total = 0.0;
  for (double v : anomaly_profile(judge, target, prefix, p_min)) total += v;
  return total;
}

double xent_sum(std::span<const XentTerm> terms, double p_min) {
  if (terms.empty()) throw InvalidArgument("xent sum needs at least one term");
  double total = 0.0;
  for (const XentTerm& t : terms) {
    if (t.sign != 1 && t.sign != -1) throw InvalidArgument("xent term sign must be +1 or -1");
    if (t.judge == nullptr) throw InvalidArgument("xent term has no judge");
    const double v = xent(*t.judge, t.target, t.prefix, p_min);
    total = t.sign > 0 ? total + v : total - v;
  }
  return total;
}

double ensure(double s, double lambda) {
  if (!(lambda > 1.0)) throw ConfigError("ensure multiplier lambda must exceed 1");
  return s >= 0.0 ? s / lambda : lambda * s;
}

TokenSeq join_prompt(std::span<const TokenSeq> parts, TokenId separator) {
  TokenSeq out;
  for (const TokenSeq& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out.push_back(separator);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

double tf_delta(const LanguageModel& judge, std::span<const TokenId> statement,
                std::span<const TokenId> context, std::span<const PromptPair> variants,
                const DeltaOptions& opt) {
  if (variants.empty()) throw InvalidArgument("tf_delta needs at least one prompt pair");
  const TokenSeq c(context.begin(), context.end());
  double acc = 0.0;
  for (const PromptPair& v : variants) {
    const TokenSeq pt[] = {c, v.true_prompt};
    const TokenSeq pf[] = {c, v.false_prompt};
    const TokenSeq true_ctx = join_prompt(pt, opt.separator);
    const TokenSeq false_ctx = join_prompt(pf, opt.separator);
    acc += xent(judge, statement, false_ctx, opt.p_min) - xent(judge, statement, true_ctx, opt.p_min);
  }
  return acc / static_cast<double>(variants.size());
}

double info_gain(const LanguageModel& judge, std::span<const TokenId> h,
                 std::span<const TokenId> q, std::span<const TokenId> x, const DeltaOptions& opt) {
  const TokenSeq parts[] = {TokenSeq(q.begin(), q.end()), TokenSeq(h.begin(), h.end())};
  const TokenSeq with_h = join_prompt(parts, opt.separator);
  return xent(judge, x, q, opt.p_min) - xent(judge, x, with_h, opt.p_min);
}

double contrast_delta(const LanguageModel& m1, const LanguageModel& m2,
                      std::span<const TokenId> x, std::span<const TokenId> c,
                      const DeltaOptions& opt) {
  if (&m1 == &m2) return 0.0;
  return xent(m2, x, c, opt.p_min) - xent(m1, x, c, opt.p_min);
}

PromptPair default_truth_prompts(const Vocab& vocab) {
  return {vocab.encode("The following statement is true:"),
          vocab.encode("The following statement is false:")};
}

}  // namespace xent
