#include "xent/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "xent/errors.hpp"

namespace xent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw InvalidArgument("temperature must be a positive finite number");
}

// In-place log-softmax over all ids except pad; pad becomes -inf.
void log_softmax_excluding(std::vector<double>& v, TokenId pad) {
  double mx = kNegInf;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (i != pad) mx = std::max(mx, v[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (i != pad) z += std::exp(v[i] - mx);
  const double lz = mx + std::log(z);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i == pad) ? kNegInf : v[i] - lz;
}

}  // namespace

TokenId draw_token(std::span<const double> logp, TokenId pad, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  TokenId last = pad;
  for (TokenId t = 0; t < logp.size(); ++t) {
    if (t == pad) continue;
    const double p = std::exp(logp[t]);
    if (p <= 0.0) continue;
    last = t;
    cum += p;
    if (u < cum) return t;
  }
  if (last == pad) throw DomainError("distribution has no sampleable mass");
  return last;
}

std::vector<double> LocalModel::logprobs(std::span<const TokenId> context,
                                         std::span<const TokenId> continuation) const {
  std::vector<double> out;
  out.reserve(continuation.size());
  if (continuation.empty()) return out;
  TokenSeq history(context.begin(), context.end());
  std::vector<double> dist;
  for (TokenId t : continuation) {
    if (!vocab().valid(t)) throw InvalidArgument("token id out of vocabulary");
    if (t == vocab().pad_id()) {
      out.push_back(kPadLogProb);
    } else {
      next_logprobs(history, 1.0, dist);
      out.push_back(std::max(dist[t], kPadLogProb));
    }
    history.push_back(t);
  }
  return out;
}

TokenSeq LocalModel::sample(std::span<const TokenId> context, std::size_t n, double temperature,
                            Rng& rng) const {
  check_temperature(temperature);
  TokenSeq history(context.begin(), context.end());
  TokenSeq out;
  out.reserve(n);
  std::vector<double> dist;
  for (std::size_t i = 0; i < n; ++i) {
    next_logprobs(history, temperature, dist);
    const TokenId t = draw_token(dist, vocab().pad_id(), rng);
    out.push_back(t);
    history.push_back(t);
  }
  return out;
}

void UniformModel::next_logprobs(std::span<const TokenId>, double, std::vector<double>& out) const {
  const double lp = -std::log(static_cast<double>(vocab().sampleable()));
  out.assign(vocab().size(), lp);
  out[vocab().pad_id()] = kNegInf;
}

NgramModel::NgramModel(Vocab vocab, std::size_t order, std::span<const TokenSeq> corpus)
    : LocalModel(vocab), order_(order) {
  if (order < 1 || order > 8) throw InvalidArgument("n-gram order must be in [1, 8]");
  for (const TokenSeq& text : corpus) {
    TokenSeq history;
    for (TokenId t : text) {
      if (!vocab.valid(t) || t == vocab.pad_id())
        throw InvalidArgument("n-gram corpus contains an invalid token");
      Row& row = rows_[key(history)];
      ++row.total;
      ++row.next[t];
      history.push_back(t);
    }
  }
}

std::uint64_t NgramModel::key(std::span<const TokenId> history) const {
  const std::size_t h = order_ - 1;
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < h; ++i) {
    // Window cell i counts from the oldest; missing cells are pad.
    const std::size_t back = h - i;
    const TokenId t = back <= history.size() ? history[history.size() - back] : vocab().pad_id();
    k = k * vocab().size() + t;
  }
  return k;
}

std::uint64_t NgramModel::count(std::span<const TokenId> window, TokenId next) const {
  auto it = rows_.find(key(window));
  if (it == rows_.end()) return 0;
  auto jt = it->second.next.find(next);
  return jt == it->second.next.end() ? 0 : jt->second;
}

std::uint64_t NgramModel::total(std::span<const TokenId> window) const {
  auto it = rows_.find(key(window));
  return it == rows_.end() ? 0 : it->second.total;
}

void NgramModel::next_logprobs(std::span<const TokenId> history, double temperature,
                               std::vector<double>& out) const {
  const double vs = vocab().sampleable();
  auto it = rows_.find(key(history));
  const Row* row = it == rows_.end() ? nullptr : &it->second;
  const double denom = (row ? static_cast<double>(row->total) : 0.0) + vs;
  const double base = std::log(1.0 / denom);
  out.assign(vocab().size(), base);
  if (row)
    for (const auto& [t, c] : row->next) out[t] = std::log((static_cast<double>(c) + 1.0) / denom);
  out[vocab().pad_id()] = kNegInf;
  if (temperature != 1.0) {
    for (double& v : out) v /= temperature;
    log_softmax_excluding(out, vocab().pad_id());
  }
}

Checkpoint Checkpoint::zeros(Vocab vocab, std::uint32_t window, std::uint64_t rows) {
  if (rows == 0) throw InvalidArgument("checkpoint needs at least one row");
  if (window == 0 && rows != 1) throw InvalidArgument("a window-0 table has exactly one row");
  Checkpoint c;
  c.vocab = vocab;
  c.window = window;
  c.rows = rows;
  c.table.assign(rows * vocab.size(), 0.0);
  return c;
}

Checkpoint Checkpoint::zeros(Vocab vocab, std::uint32_t window) {
  std::uint64_t rows = 1;
  for (std::uint32_t i = 0; i < window; ++i) {
    rows *= vocab.size();
    if (rows > (1u << 20)) throw InvalidArgument("window too large for an exact table; give rows");
  }
  return zeros(vocab, window, rows);
}

std::uint64_t Checkpoint::row_index(std::span<const TokenId> history) const {
  std::uint64_t idx = 0;
  for (std::uint32_t i = 0; i < window; ++i) {
    const std::size_t back = window - i;
    const TokenId t = back <= history.size() ? history[history.size() - back] : vocab.pad_id();
    idx = (idx * vocab.size() + t) % rows;
  }
  return idx;
}

void Checkpoint::row_logprobs(std::uint64_t r, double temperature, std::vector<double>& out) const {
  const auto logits = row(r);
  out.assign(logits.begin(), logits.end());
  if (temperature != 1.0)
    for (double& v : out) v /= temperature;
  log_softmax_excluding(out, vocab.pad_id());
}

bool Checkpoint::identical(const Checkpoint& other) const {
  return vocab == other.vocab && window == other.window && rows == other.rows &&
         table.size() == other.table.size() &&
         std::memcmp(table.data(), other.table.data(), table.size() * sizeof(double)) == 0;
}

std::string Checkpoint::digest() const {
  std::string bytes = vocab.hash() + ":" + std::to_string(window) + ":" + std::to_string(rows) + ":";
  bytes.append(reinterpret_cast<const char*>(table.data()), table.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

LogitTableModel::LogitTableModel(std::shared_ptr<const Checkpoint> ckpt)
    : LocalModel(ckpt->vocab), ckpt_(std::move(ckpt)) {}

void LogitTableModel::next_logprobs(std::span<const TokenId> history, double temperature,
                                    std::vector<double>& out) const {
  ckpt_->row_logprobs(ckpt_->row_index(history), temperature, out);
}

std::vector<double> normalized_advantages(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  long double mean = 0.0L;
  for (double r : rewards) mean += r;
  mean /= static_cast<long double>(n);
  long double var = 0.0L;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<long double>(n);
  const long double sd = std::sqrt(var);
  if (sd < 1e-12L) return {};
  std::vector<double> adv;
  adv.reserve(n);
  for (double r : rewards) {
    const long double a = (r - mean) / sd;
    adv.push_back(static_cast<double>(std::nearbyint(a * 0x1.0p24L) / 0x1.0p24L));
  }
  return adv;
}

std::vector<double> policy_gradient(const Checkpoint& ckpt, std::span<const Episode> episodes,
                                    std::span<const double> advantages) {
  if (episodes.size() != advantages.size())
    throw InvalidArgument("one advantage per episode is required");
  std::vector<double> grad(ckpt.table.size(), 0.0);
  const std::size_t v = ckpt.vocab.size();
  const TokenId pad = ckpt.vocab.pad_id();
  std::vector<double> logp;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const double a = advantages[e];
    if (a == 0.0) continue;
    for (const Trajectory& tr : episodes[e].trajectories) {
      TokenSeq history = tr.context;
      for (TokenId t : tr.tokens) {
        if (t == pad || !ckpt.vocab.valid(t)) throw InvalidArgument("trajectory holds a non-sampleable token");
        const std::uint64_t r = ckpt.row_index(history);
        ckpt.row_logprobs(r, tr.temperature, logp);
        double* g = grad.data() + r * v;
        const double scale = a / tr.temperature;
        for (std::size_t j = 0; j < v; ++j) {
          if (j == pad) continue;
          g[j] -= scale * std::exp(logp[j]);
        }
        g[t] += scale;
        history.push_back(t);
      }
    }
  }
  return grad;
}

Checkpoint train_policy_gradient(const Checkpoint& ckpt, std::span<const Episode> episodes,
                                 double eta) {
  if (episodes.size() < 2) throw InvalidArgument("policy-gradient step needs at least 2 episodes");
  std::vector<double> rewards;
  rewards.reserve(episodes.size());
  for (const Episode& e : episodes) {
    if (!std::isfinite(e.reward)) throw InvalidArgument("episode reward is not finite");
    rewards.push_back(e.reward);
  }
  Checkpoint out = ckpt;
  if (eta == 0.0) return out;
  const std::vector<double> adv = normalized_advantages(rewards);
  if (adv.empty()) return out;
  const std::vector<double> grad = policy_gradient(ckpt, episodes, adv);
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (grad[i] != 0.0) out.table[i] += eta * grad[i];
  return out;
}

}  // namespace xent
