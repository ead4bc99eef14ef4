#include "xent/sxgl.hpp"

#include <algorithm>
#include <cctype>

#include "xent/errors.hpp"
#include "xent/exact_sum.hpp"
#include "xent/xentcore.hpp"

namespace xent::sxgl {

namespace {

std::string_view trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

// Reads one operand at the front of s, advancing it.
std::optional<Operand> read_operand(std::string_view& s, const Shape& shape) {
  if (s.empty()) return std::nullopt;
  const char head = s.front();
  if (head == 'x') {
    s.remove_prefix(1);
    return Operand{OperandKind::Xent, 0};
  }
  if (head != 's' && head != 'm') return std::nullopt;
  s.remove_prefix(1);
  std::size_t n = 0;
  while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
  if (n == 0 || n > 9 || (n > 1 && s[0] == '0')) return std::nullopt;
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < n; ++i) value = value * 10 + static_cast<std::uint64_t>(s[i] - '0');
  s.remove_prefix(n);
  const std::size_t bound = head == 's' ? shape.registers : shape.models;
  if (value >= bound) return std::nullopt;
  return Operand{head == 's' ? OperandKind::String : OperandKind::Model,
                 static_cast<std::uint32_t>(value)};
}

std::string operand_text(const Operand& o) {
  switch (o.kind) {
    case OperandKind::Xent: return "x";
    case OperandKind::String: return "s" + std::to_string(o.index);
    case OperandKind::Model: return "m" + std::to_string(o.index);
  }
  return "?";
}

void append_bounded(TokenSeq& dst, std::span<const TokenId> xs, std::size_t bound,
                    std::size_t& truncations) {
  dst.insert(dst.end(), xs.begin(), xs.end());
  if (dst.size() > bound) {
    dst.erase(dst.begin(), dst.begin() + static_cast<std::ptrdiff_t>(dst.size() - bound));
    ++truncations;
  }
}

TokenSeq without_pad(const TokenSeq& xs, TokenId pad) {
  TokenSeq out;
  out.reserve(xs.size());
  for (TokenId t : xs)
    if (t != pad) out.push_back(t);
  return out;
}

}  // namespace

std::string Instruction::text() const {
  return operand_text(lhs) + (op == Op::Left ? "<<" : ">>") + operand_text(rhs);
}

std::optional<Instruction> parse_instruction(std::string_view line, const Shape& shape) {
  std::string_view s = trim(line);
  auto lhs = read_operand(s, shape);
  if (!lhs || s.size() < 2) return std::nullopt;
  Op op;
  if (s.substr(0, 2) == "<<") {
    op = Op::Left;
  } else if (s.substr(0, 2) == ">>") {
    op = Op::Right;
  } else {
    return std::nullopt;
  }
  s.remove_prefix(2);
  auto rhs = read_operand(s, shape);
  if (!rhs || !s.empty()) return std::nullopt;
  return Instruction{*lhs, op, *rhs};
}

std::size_t Program::live_segments() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(segments_.begin(), segments_.end(), [](const Segment& s) { return !s.empty(); }));
}

std::size_t Program::instruction_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      lines_.begin(), lines_.end(), [](const Line& l) { return l.instruction.has_value(); }));
}

void Program::index_segments() {
  segments_.clear();
  std::size_t first = 0;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (lines_[i].instruction && lines_[i].instruction->is_terminator()) {
      segments_.push_back({first, i});
      first = i + 1;
    }
  }
}

Program parse(std::string_view source, const Shape& shape) {
  Program p;
  p.shape_ = shape;
  std::string text(source);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty()) {
    std::size_t start = 0;
    while (true) {
      const std::size_t nl = text.find('\n', start);
      std::string raw = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
      auto ins = parse_instruction(raw, shape);
      p.lines_.push_back({std::move(raw), ins});
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  }
  const bool terminated = !p.lines_.empty() && p.lines_.back().instruction &&
                          p.lines_.back().instruction->is_terminator();
  if (!terminated) {
    const Instruction term{{OperandKind::Xent, 0}, Op::Left, {OperandKind::Xent, 0}};
    p.lines_.push_back({"x<<x", term});
    text = text.empty() && p.lines_.size() == 1 ? std::string("x<<x") : text + "\nx<<x";
  }
  p.source_ = std::move(text);
  p.index_segments();
  return p;
}

Program concat(const Program& a, const Program& b) {
  if (!(a.shape_ == b.shape_)) throw InvalidArgument("cannot concatenate programs of different shapes");
  Program p;
  p.shape_ = a.shape_;
  p.lines_ = a.lines_;
  p.lines_.insert(p.lines_.end(), b.lines_.begin(), b.lines_.end());
  p.source_ = a.source_ + "\n" + b.source_;
  p.index_segments();
  return p;
}

std::size_t code_length(const Program& p) { return p.source().size(); }

void MachineConfig::validate() const {
  if (shape.registers < 1) throw ConfigError("K must be at least 1");
  if (shape.models < 1) throw ConfigError("U must be at least 1");
  if (length < 1) throw ConfigError("L must be at least 1");
  if (max_context < 1) throw ConfigError("max_context must be at least 1");
  if (!(lambda > 1.0)) throw ConfigError("lambda must exceed 1");
  if (!(p_min > 0.0 && p_min < 1.0)) throw ConfigError("p_min must lie in (0, 1)");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (default_judge >= shape.models) throw ConfigError("default judge index out of range");
  if (player >= shape.models) throw ConfigError("player index out of range");
}

GameState GameState::fresh(const MachineConfig& cfg) {
  GameState s;
  s.registers.assign(cfg.shape.registers, TokenString(cfg.length, cfg.vocab.pad_id()));
  s.xent.judge = cfg.default_judge;
  s.models.assign(cfg.shape.models, ModelState{});
  return s;
}

void step(GameState& state, const Program& program, std::size_t line, std::size_t segment_first,
          const ModelSet& models, const MachineConfig& cfg, Rng& rng, StepEffects* fx) {
  const Line& ln = program.lines().at(line);
  if (!ln.instruction) return;
  const Instruction& ins = *ln.instruction;
  const Operand& a = ins.lhs;
  const Operand& b = ins.rhs;
  const bool left = ins.op == Op::Left;
  const TokenId pad = cfg.vocab.pad_id();
  if (fx) {
    fx->line = line;
    fx->op = ins.text();
  }

  auto reg = [&](const Operand& o) -> TokenString& { return state.registers.at(o.index); };
  auto model = [&](std::size_t u) -> const LanguageModel& {
    if (u >= models.size() || !models[u]) throw ConfigError("model m" + std::to_string(u) + " is not bound");
    return *models[u];
  };
  auto move = [&](std::size_t r, int delta) {
    TokenString& s = state.registers.at(r);
    const std::size_t from = s.caret();
    s.move_caret(delta);
    if (fx) fx->caret_moves.push_back({r, from, s.caret()});
  };
  auto add_reward = [&](std::size_t u, double v) {
    state.models[u].reward += v;
    if (fx) fx->reward_deltas.emplace_back(u, v);
  };
  auto add_score = [&](std::size_t u, double v, bool subtract) {
    double& sc = state.models[u].score;
    sc = subtract ? sc - v : sc + v;
    if (fx) fx->score_deltas.emplace_back(u, subtract ? -v : v);
  };
  auto elicit = [&](std::size_t u, std::size_t r, std::size_t n) {
    const TokenSeq ctx = state.models[u].context;
    TokenSeq toks = model(u).sample(ctx, n, cfg.temperature, rng);
    if (fx) fx->elicit = Elicitation{u, r, ctx, toks};
    return toks;
  };
  auto previous_line = [&]() -> TokenSeq {
    if (line == 0 || line <= segment_first)
      throw StepAbort("missing-previous-line", "line " + std::to_string(line) + " has no previous line to load");
    return cfg.vocab.encode(program.lines()[line - 1].raw);
  };
  auto caret_shift = [&](std::size_t r, std::size_t from) {
    if (fx && state.registers[r].caret() != from) fx->caret_moves.push_back({r, from, state.registers[r].caret()});
  };

  using K = OperandKind;
  if (a.kind == K::Xent && b.kind == K::Xent) {
    if (left) {
      for (std::size_t u = 0; u < state.models.size(); ++u) {
        ModelState& m = state.models[u];
        if (m.score != 0.0) add_reward(u, m.score);
        m.score = 0.0;
        m.context.clear();
      }
    }
    state.xent.prefix.clear();
  } else if (a.kind == K::Xent && b.kind == K::String) {
    if (left) state.xent.input = b.index;
    else move(b.index, +1);
  } else if (a.kind == K::Xent && b.kind == K::Model) {
    if (left) {
      model(b.index);
      state.xent.judge = b.index;
    } else {
      ModelState& m = state.models[b.index];
      add_reward(b.index, ensure(m.score, cfg.lambda));
      m.score = 0.0;
    }
  } else if (a.kind == K::String && b.kind == K::Xent) {
    if (left) move(a.index, -1);
    else append_bounded(state.xent.prefix, reg(a).right_content(), cfg.max_context, state.truncations);
  } else if (a.kind == K::String && b.kind == K::Model) {
    TokenString& s = reg(a);
    if (left) {
      const std::size_t from = s.caret();
      const TokenSeq toks = elicit(b.index, a.index, s.length() - s.caret());
      s.append_advance(toks);
      caret_shift(a.index, from);
    } else {
      append_bounded(state.models[b.index].context, without_pad(s.left(), pad), cfg.max_context,
                     state.truncations);
    }
  } else if (a.kind == K::String && b.kind == K::String) {
    TokenString& sl = reg(a);
    const std::size_t from_l = sl.caret();
    if (a.index != b.index) {
      TokenString& sr = reg(b);
      const std::size_t from_r = sr.caret();
      if (left) {
        sl.append_advance(sr.right_content());
        caret_shift(a.index, from_l);
      } else {
        try {
          sr.copy_into_left(sl);
        } catch (const OverflowError& e) {
          throw StepAbort("overflow", e.what());
        }
        caret_shift(b.index, from_r);
      }
    } else {
      const TokenSeq prev = previous_line();
      if (left) {
        sl.append_advance(prev);
        caret_shift(a.index, from_l);
      } else {
        sl.fill_left_region(prev);
      }
    }
  } else if (a.kind == K::Model && b.kind == K::Xent) {
    const TokenSeq target = state.xent.input ? state.registers[*state.xent.input].left() : TokenSeq{};
    const double v = xent(model(state.xent.judge), target, state.xent.prefix, cfg.p_min);
    add_score(a.index, v, !left);
  } else if (a.kind == K::Model && b.kind == K::String) {
    TokenString& s = reg(b);
    if (left) {
      append_bounded(state.models[a.index].context, s.right_content(), cfg.max_context, state.truncations);
    } else {
      const TokenSeq toks = elicit(a.index, b.index, s.caret());
      s.fill_left_region(toks);
    }
  } else {  // model, model
    ModelState& ml = state.models[a.index];
    ModelState& mr = state.models[b.index];
    if (left) {
      if (a.index != b.index) ml.context = std::move(mr.context);
      mr.context.clear();
    } else {
      if (a.index != b.index) {
        add_score(b.index, ml.score, false);
        if (ml.score != 0.0) add_score(a.index, ml.score, true);
      } else if (ml.score != 0.0) {
        add_score(a.index, ml.score, true);
      }
      ml.score = 0.0;
    }
  }
}

namespace {

void check_bindings(const Program& program, const ModelSet& models, const MachineConfig& cfg) {
  auto need = [&](std::size_t u) {
    if (u >= models.size() || !models[u])
      throw ConfigError("program references m" + std::to_string(u) + " but no model is bound to it");
    if (!(models[u]->vocab() == cfg.vocab)) throw ConfigError("model m" + std::to_string(u) + " uses a different vocabulary");
  };
  need(cfg.default_judge);
  for (const Line& l : program.lines()) {
    if (!l.instruction) continue;
    if (l.instruction->lhs.kind == OperandKind::Model) need(l.instruction->lhs.index);
    if (l.instruction->rhs.kind == OperandKind::Model) need(l.instruction->rhs.index);
  }
}

}  // namespace

GameOutcome run(const Program& program, const ModelSet& models, const MachineConfig& cfg,
                std::span<const std::uint64_t> seeds, TraceMode trace) {
  cfg.validate();
  if (seeds.empty()) throw InvalidArgument("run needs at least one seed");
  if (!(program.shape() == cfg.shape)) throw ConfigError("program shape does not match the machine");
  check_bindings(program, models, cfg);

  GameOutcome out;
  out.rewards.assign(cfg.shape.models, 0.0);
  GameState state = GameState::fresh(cfg);
  std::size_t live = 0;
  for (const Segment& seg : program.segments()) {
    if (seg.empty()) continue;
    SegmentResult res;
    res.ordinal = live;
    res.first_line = seg.first;
    res.last_line = seg.last;
    res.seed = live < seeds.size() ? seeds[live] : derive_seed(seeds[0], live);
    ++live;
    Rng rng(res.seed);
    try {
      for (std::size_t i = seg.first; i <= seg.last; ++i) {
        state.program_counter = i;
        if (!program.lines()[i].instruction) continue;
        StepEffects fx;
        step(state, program, i, seg.first, models, cfg, rng, &fx);
        if (fx.elicit && fx.elicit->model == cfg.player)
          res.player_moves.push_back({fx.elicit->context, fx.elicit->tokens, cfg.temperature});
        if (trace == TraceMode::On) out.trace.push_back(std::move(fx));
      }
    } catch (const StepAbort& e) {
      res.aborted = e.tag();
    } catch (const TransportError&) {
      res.aborted = "transport";
    } catch (const CapabilityError&) {
      res.aborted = "capability";
    }
    if (res.aborted) {
      res.rewards.assign(cfg.shape.models, 0.0);
      if (!out.aborted) out.aborted = res.aborted;
      if (trace == TraceMode::On) {
        StepEffects fx;
        fx.line = state.program_counter;
        fx.op = "abort:" + *res.aborted;
        out.trace.push_back(std::move(fx));
      }
    } else {
      res.rewards.reserve(cfg.shape.models);
      for (std::size_t u = 0; u < cfg.shape.models; ++u) res.rewards.push_back(state.models[u].reward);
    }
    out.truncations += state.truncations;
    out.segments.push_back(std::move(res));
    state = GameState::fresh(cfg);
  }
  std::vector<double> column(out.segments.size());
  for (std::size_t u = 0; u < cfg.shape.models; ++u) {
    for (std::size_t m = 0; m < out.segments.size(); ++m) column[m] = out.segments[m].rewards[u];
    out.rewards[u] = exact_sum(column);
  }
  return out;
}

GameOutcome run(const Program& program, const ModelSet& models, const MachineConfig& cfg,
                std::uint64_t seed, TraceMode trace) {
  const std::uint64_t seeds[] = {seed};
  return run(program, models, cfg, seeds, trace);
}

}  // namespace xent::sxgl
