#pragma once

// Closed-form reward recomputation for the corpus templates. Each oracle
// reads only the elicited tokens from the trace and calls xent() directly,
// in the same order the machine accumulates the score.

#include <optional>
#include <string>
#include <vector>

#include "xent/arena.hpp"
#include "xent/config.hpp"
#include "xent/gamecorpus.hpp"
#include "xent/xentcore.hpp"

namespace xt {

inline std::vector<xent::sxgl::Elicitation> elicitations(const xent::sxgl::GameOutcome& out) {
  std::vector<xent::sxgl::Elicitation> e;
  for (const auto& fx : out.trace)
    if (fx.elicit) e.push_back(*fx.elicit);
  return e;
}

inline xent::TokenSeq clip(const std::string& s, std::size_t n) {
  return xent::Vocab::bytes().encode(s.substr(0, std::min(s.size(), n)));
}

inline xent::TokenSeq cat(xent::TokenSeq a, const xent::TokenSeq& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// The player's reward for one traced run of `name`, or nullopt when the
// trace does not have the expected shape.
inline std::optional<double> oracle_reward(const std::string& name, const xent::corpus::Emitted& em,
                                           const xent::corpus::GameMap& map,
                                           const xent::sxgl::ModelSet& models,
                                           const xent::sxgl::MachineConfig& cfg,
                                           const xent::sxgl::GameOutcome& out) {
  using xent::xent;
  const std::size_t L = cfg.length;
  const double pm = cfg.p_min;
  const auto el = elicitations(out);
  const auto& P = *models[em.roles.at("player")];
  auto slot = [&](const char* s) { return map.slots.at(s); };
  auto n = [&](const char* h) { return static_cast<std::size_t>(em.hyper.at(h)); };

  if (name == "pretraining") {
    const auto& J = *models[em.roles.at("judge")];
    return 0.0 - xent(J, clip(slot("text"), L), {}, pm);
  }
  if (name == "rlp") {
    const auto& J = *models[em.roles.at("judge")];
    const auto ctx = clip(slot("context"), L);
    xent::TokenSeq c;
    if (n("thought") > 0) {
      if (el.size() != 1 || el[0].context != ctx) return std::nullopt;
      c = el[0].tokens;
    }
    return 0.0 - xent(J, clip(slot("next"), L), cat(ctx, c), pm);
  }
  if (name == "reverse_prompt") {
    const auto& J = *models[em.roles.at("judge")];
    const auto s = clip(slot("text"), L);
    xent::TokenSeq t;
    if (n("prompt") > 0) {
      if (el.size() != 1 || el[0].context != s) return std::nullopt;
      t = el[0].tokens;
    }
    return 0.0 - xent(J, s, t, pm);
  }
  if (name == "distill") {
    const auto& J = *models[em.roles.at("teacher")];
    const auto x = clip(slot("context"), L);
    if (el.size() != 1 || el[0].context != x) return std::nullopt;
    const auto& c = el[0].tokens;
    return (0.0 + xent(P, c, x, pm)) - xent(J, c, x, pm);
  }
  if (name == "self_distill") {
    const auto& J = *models[em.roles.at("clone")];
    const auto x = clip(slot("context"), L);
    if (el.size() != 2 || el[0].context != x) return std::nullopt;
    const auto& c = el[0].tokens;
    if (el[1].context != cat(x, c)) return std::nullopt;
    const auto& f = el[1].tokens;
    return (0.0 + xent(P, c, x, pm)) - xent(J, c, cat(x, f), pm);
  }
  if (name == "common_explanation") {
    const auto& J = *models[em.roles.at("judge")];
    const auto joined = clip(slot("text1") + map.separator + slot("text2"), L);
    if (el.size() != 1 || el[0].context != joined) return std::nullopt;
    const auto& t = el[0].tokens;
    double score = 0.0 - xent(J, joined, t, pm);
    for (const char* s : {"text1", "text2"}) {
      const double v = xent(J, t, clip(slot(s), L), pm);
      for (std::size_t a = 0; a < n("alpha"); ++a) score += v;
    }
    return score;
  }
  return std::nullopt;
}

// A random game map for `name` drawn from the built-in corpus.
inline xent::corpus::GameMap random_map(const std::string& name, const xent::Arena& arena, xent::Rng& rng) {
  const auto& lines = xent::builtin_corpus();
  auto snippet = [&](std::size_t max_len) {
    const std::string& l = lines[rng.next_u64() % lines.size()];
    const std::size_t len = 1 + rng.next_u64() % std::min(max_len, l.size());
    const std::size_t at = rng.next_u64() % (l.size() - len + 1);
    return l.substr(at, len);
  };
  const std::size_t L = arena.machine().length;
  xent::corpus::GameMap m;
  const auto& t = xent::corpus::find_template(name);
  for (const auto& s : t.slots) m.slots[s.name] = snippet(L + 4);
  for (const auto& h : t.hyper) {
    if (h.name == "alpha") m.hyper[h.name] = static_cast<double>(1 + rng.next_u64() % 2);
    else m.hyper[h.name] = static_cast<double>(h.min + rng.next_u64() % (std::min<std::size_t>(6, L) + 1 - static_cast<std::size_t>(h.min)));
  }
  return m;
}

}  // namespace xt
