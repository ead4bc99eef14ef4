#include "xent/gamecorpus.hpp"

#include <algorithm>
#include <cmath>

#include "xent/errors.hpp"

namespace xent::corpus {

namespace {

std::vector<TemplateDescriptor> build_descriptors() {
  const RoleSpec player{"player", "trainable model that makes the moves", "player"};
  return {
      {"pretraining",
       "reward -xent_J(x); no move is elicited",
       {{"text", "data string x"}},
       {player, {"judge", "scores the data", "player"}},
       {},
       ""},
      {"rlp",
       "player writes a thought c after x_<t and is rewarded with -xent_J(x_t | x_<t, c)",
       {{"context", "x_<t"}, {"next", "x_t"}},
       {player, {"judge", "predicts x_t", "player"}},
       {{"thought", 4, true, 0}},
       ""},
      {"reverse_prompt",
       "player writes a prompt t for s; reward -xent_J(s | t)",
       {{"text", "target string s"}},
       {player, {"judge", "frozen judge", "m1"}},
       {{"prompt", 4, true, 0}},
       ""},
      {"distill",
       "player answers c to x; reward xent_M(c | x) - xent_J(c | x)",
       {{"context", "context x"}},
       {player, {"teacher", "frozen teacher", "m1"}},
       {{"answer", 4, true, 1}},
       ""},
      {"self_distill",
       "player answers c to x, a frozen clone gives feedback f; reward xent_M(c | x) - xent_J(c | x, f)",
       {{"context", "context x"}},
       {player, {"clone", "frozen copy of the player", "m3"}},
       {{"answer", 4, true, 1}, {"feedback", 4, true, 1}},
       ""},
      {"common_explanation",
       "player writes t; reward -xent_J(x1 x2 | t) + alpha * sum_i xent_J(t | x_i)",
       {{"text1", "first text"}, {"text2", "second text"}},
       {player, {"judge", "frozen judge", "m1"}},
       {{"prompt", 4, true, 1}, {"alpha", 1, true, 1}},
       " "},
  };
}

class Builder {
 public:
  Builder(const sxgl::MachineConfig& cfg, std::string game) : cfg_(cfg), game_(std::move(game)) {}

  void ins(const std::string& text) { lines_.push_back(text); }

  void data(const std::string& text, const std::string& slot) {
    if (text.find_first_of("\r\n") != std::string::npos)
      throw InvalidArgument(game_ + ": slot '" + slot + "' must be a single line");
    if (sxgl::parse_instruction(text, cfg_.shape))
      throw InvalidArgument(game_ + ": slot '" + slot + "' would parse as an instruction");
    lines_.push_back(text);
  }

  // Data line followed by s<r><<s<r>; returns the number of tokens that land
  // in the register given its current caret.
  std::size_t load(std::size_t r, const std::string& text, const std::string& slot, std::size_t caret) {
    data(text, slot);
    ins(reg(r) + "<<" + reg(r));
    const std::size_t room = cfg_.length - caret;
    if (text.size() > room)
      warnings_.push_back(slot + " truncated from " + std::to_string(text.size()) + " to " + std::to_string(room) +
                          " tokens");
    return std::min(text.size(), room);
  }

  void rewind(std::size_t r, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) ins(reg(r) + "<<x");
  }
  void advance(std::size_t r, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) ins("x>>" + reg(r));
  }

  static std::string reg(std::size_t r) { return "s" + std::to_string(r); }
  static std::string mod(std::size_t u) { return "m" + std::to_string(u); }

  Emitted finish() {
    std::string src;
    for (const std::string& l : lines_) {
      src += l;
      src += '\n';
    }
    Emitted out{sxgl::parse(src, cfg_.shape), std::move(warnings_), {}, {}};
    return out;
  }

 private:
  const sxgl::MachineConfig& cfg_;
  std::string game_;
  std::vector<std::string> lines_;
  std::vector<std::string> warnings_;
};

std::size_t resolve_role(const RoleSpec& spec, const GameMap& map, const sxgl::MachineConfig& cfg,
                         const std::string& game) {
  std::size_t u = 0;
  if (auto it = map.roles.find(spec.name); it != map.roles.end()) u = it->second;
  else if (spec.fallback == "player") u = cfg.player;
  else u = static_cast<std::size_t>(std::stoul(spec.fallback.substr(1)));
  if (u >= cfg.shape.models)
    throw InvalidArgument(game + ": role '" + spec.name + "' needs model m" + std::to_string(u) + " but U = " +
                          std::to_string(cfg.shape.models));
  return u;
}

}  // namespace

const std::vector<TemplateDescriptor>& list_templates() {
  static const std::vector<TemplateDescriptor> all = build_descriptors();
  return all;
}

const TemplateDescriptor& find_template(std::string_view name) {
  for (const TemplateDescriptor& t : list_templates())
    if (t.name == name) return t;
  for (const UnsupportedGame& g : unsupported_templates())
    if (g.name == name) throw InvalidArgument("template '" + g.name + "' is unsupported: " + g.reason);
  throw InvalidArgument("unknown template '" + std::string(name) + "'");
}

const std::vector<UnsupportedGame>& unsupported_templates() {
  static const std::vector<UnsupportedGame> all = {
      {"chess", "needs a judge strong enough to score move legality and quality"},
      {"proof", "needs a judge strong enough to score mathematical proofs"},
  };
  return all;
}

Emitted emit(std::string_view name, const GameMap& map, const sxgl::MachineConfig& cfg) {
  const TemplateDescriptor& t = find_template(name);
  const std::string game(t.name);
  if (!cfg.vocab.is_byte_level()) throw InvalidArgument(game + ": templates need the byte vocabulary");

  for (const auto& [slot, text] : map.slots) {
    (void)text;
    if (std::none_of(t.slots.begin(), t.slots.end(), [&](const SlotSpec& s) { return s.name == slot; }))
      throw InvalidArgument(game + ": unknown slot '" + slot + "'");
  }
  auto slot = [&](const std::string& s) -> const std::string& {
    auto it = map.slots.find(s);
    if (it == map.slots.end()) throw InvalidArgument(game + ": missing slot '" + s + "'");
    return it->second;
  };

  std::map<std::string, std::size_t> roles;
  for (const RoleSpec& r : t.roles) roles[r.name] = resolve_role(r, map, cfg, game);
  for (const auto& [role, u] : map.roles) {
    (void)u;
    if (!roles.count(role)) throw InvalidArgument(game + ": unknown role '" + role + "'");
  }

  std::map<std::string, double> hyper;
  for (const HyperSpec& h : t.hyper) {
    double v = h.value;
    if (auto it = map.hyper.find(h.name); it != map.hyper.end()) v = it->second;
    if (!std::isfinite(v) || v < h.min || (h.integral && v != std::floor(v)))
      throw InvalidArgument(game + ": hyper-parameter '" + h.name + "' is out of range");
    hyper[h.name] = v;
  }
  for (const auto& [h, v] : map.hyper) {
    (void)v;
    if (!hyper.count(h)) throw InvalidArgument(game + ": unknown hyper-parameter '" + h + "'");
  }
  auto count = [&](const std::string& h) {
    const double v = hyper.at(h);
    if (v > static_cast<double>(cfg.length))
      throw InvalidArgument(game + ": '" + h + "' exceeds the register length");
    return static_cast<std::size_t>(v);
  };

  static const std::map<std::string, std::size_t> registers_needed = {
      {"pretraining", 1}, {"rlp", 3},          {"reverse_prompt", 2},
      {"distill", 2},     {"self_distill", 3}, {"common_explanation", 4}};
  if (cfg.shape.registers < registers_needed.at(game))
    throw InvalidArgument(game + ": needs " + std::to_string(registers_needed.at(game)) + " registers");

  const std::size_t p = roles.at("player");
  const std::string P = Builder::mod(p);
  Builder b(cfg, game);
  auto dots = [](std::size_t n) { return std::string(n, '.'); };

  if (game == "pretraining") {
    const std::string J = Builder::mod(roles.at("judge"));
    b.load(0, slot("text"), "text", 0);
    b.ins("x<<s0");
    b.ins("x<<" + J);
    b.ins(P + ">>x");
  } else if (game == "rlp") {
    const std::string J = Builder::mod(roles.at("judge"));
    const std::size_t n = count("thought");
    const std::size_t nc = b.load(0, slot("context"), "context", 0);
    b.ins("s0>>" + P);
    if (n > 0) {
      b.load(1, dots(n), "thought", 0);
      b.ins(P + ">>s1");
    }
    b.rewind(0, nc);
    b.ins("s0>>x");
    if (n > 0) {
      b.rewind(1, n);
      b.ins("s1>>x");
    }
    b.load(2, slot("next"), "next", 0);
    b.ins("x<<s2");
    b.ins("x<<" + J);
    b.ins(P + ">>x");
  } else if (game == "reverse_prompt") {
    const std::string J = Builder::mod(roles.at("judge"));
    const std::size_t n = count("prompt");
    b.load(0, slot("text"), "text", 0);
    b.ins("s0>>" + P);
    if (n > 0) {
      b.load(1, dots(n), "prompt", 0);
      b.ins(P + ">>s1");
      b.rewind(1, n);
      b.ins("s1>>x");
    }
    b.ins("x<<s0");
    b.ins("x<<" + J);
    b.ins(P + ">>x");
  } else if (game == "distill") {
    const std::string J = Builder::mod(roles.at("teacher"));
    const std::size_t n = count("answer");
    const std::size_t nx = b.load(0, slot("context"), "context", 0);
    b.ins("s0>>" + P);
    b.load(1, dots(n), "answer", 0);
    b.ins(P + ">>s1");
    b.rewind(0, nx);
    b.ins("s0>>x");
    b.ins("x<<s1");
    b.ins("x<<" + P);
    b.ins(P + "<<x");
    b.ins("x<<" + J);
    b.ins(P + ">>x");
  } else if (game == "self_distill") {
    const std::string J = Builder::mod(roles.at("clone"));
    const std::size_t n = count("answer");
    const std::size_t nf = count("feedback");
    const std::size_t nx = b.load(0, slot("context"), "context", 0);
    b.ins("s0>>" + P);
    b.ins("s0>>" + J);
    b.load(1, dots(n), "answer", 0);
    b.ins(P + ">>s1");
    b.ins("s1>>" + J);
    if (nf < cfg.length) b.load(2, dots(cfg.length - nf), "feedback", 0);
    b.ins("s2<<" + J);
    b.rewind(0, nx);
    b.ins("s0>>x");
    b.ins("x<<s1");
    b.ins("x<<" + P);
    b.ins(P + "<<x");
    b.rewind(2, nf);
    b.ins("s2>>x");
    b.ins("x<<" + J);
    b.ins(P + ">>x");
  } else {  // common_explanation
    const std::string J = Builder::mod(roles.at("judge"));
    const std::size_t n = count("prompt");
    const auto alpha = static_cast<std::size_t>(hyper.at("alpha"));
    if (map.separator.size() != 1) throw InvalidArgument(game + ": separator must be a single token");
    std::size_t c0 = b.load(0, slot("text1"), "text1", 0);
    c0 += b.load(0, map.separator, "separator", c0);
    c0 += b.load(0, slot("text2"), "text2", c0);
    b.ins("s0>>" + P);
    b.load(1, dots(n), "prompt", 0);
    b.ins(P + ">>s1");
    b.rewind(1, n);
    b.ins("s1>>x");
    b.advance(1, n);
    b.ins("x<<s0");
    b.ins("x<<" + J);
    b.ins(P + ">>x");
    const char* texts[] = {"text1", "text2"};
    for (std::size_t i = 0; i < 2; ++i) {
      const std::size_t r = 2 + i;
      const std::size_t nr = b.load(r, slot(texts[i]), texts[i], 0);
      b.ins("x>>x");
      b.rewind(r, nr);
      b.ins(Builder::reg(r) + ">>x");
      b.ins("x<<s1");
      for (std::size_t a = 0; a < alpha; ++a) b.ins(P + "<<x");
    }
  }
  b.ins("x<<x");
  Emitted out = b.finish();
  out.roles = std::move(roles);
  out.hyper = std::move(hyper);
  return out;
}

}  // namespace xent::corpus
