#include "xent/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "xent/errors.hpp"

namespace xent::io {

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json checkpoint_to_json(const Checkpoint& c) {
  return {{"format", "xent-logit-table"}, {"version", kCheckpointVersion}, {"vocab_hash", c.vocab.hash()},
          {"vocab_size", c.vocab.size()}, {"window", c.window}, {"rows", c.rows}, {"step", c.step},
          {"table", c.table}};
}

Checkpoint checkpoint_from_json(const json& j, const Vocab& expected) {
  try {
    if (j.at("format").get<std::string>() != "xent-logit-table") throw ConfigError("not a logit-table checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
    if (j.at("vocab_hash").get<std::string>() != expected.hash() ||
        j.at("vocab_size").get<std::size_t>() != expected.size())
      throw ConfigError("checkpoint vocabulary does not match");
    Checkpoint c = Checkpoint::zeros(expected, j.at("window").get<std::uint32_t>(), j.at("rows").get<std::uint64_t>());
    c.step = j.at("step").get<std::uint64_t>();
    c.table = j.at("table").get<std::vector<double>>();
    if (c.table.size() != c.rows * expected.size()) throw ConfigError("checkpoint table has the wrong size");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& c, const std::string& path) { write_file(path, checkpoint_to_json(c).dump()); }

Checkpoint load_checkpoint(const std::string& path, const Vocab& expected) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("checkpoint " + path + " is not JSON");
  return checkpoint_from_json(j, expected);
}

json effects_to_json(const sxgl::StepEffects& fx) {
  json j = {{"line", fx.line}, {"op", fx.op}};
  if (!fx.reward_deltas.empty()) {
    json r = json::array();
    for (const auto& [u, v] : fx.reward_deltas) r.push_back({{"model", u}, {"delta", number(v)}});
    j["reward"] = r;
  }
  if (!fx.score_deltas.empty()) {
    json s = json::array();
    for (const auto& [u, v] : fx.score_deltas) s.push_back({{"model", u}, {"delta", number(v)}});
    j["score"] = s;
  }
  if (!fx.caret_moves.empty()) {
    json c = json::array();
    for (const auto& m : fx.caret_moves) c.push_back({{"register", m.reg}, {"from", m.from}, {"to", m.to}});
    j["caret"] = c;
  }
  if (fx.elicit)
    j["elicit"] = {{"model", fx.elicit->model}, {"register", fx.elicit->reg}, {"context", fx.elicit->context},
                   {"tokens", fx.elicit->tokens}};
  return j;
}

json outcome_to_json(const sxgl::GameOutcome& o) {
  json rewards = json::array();
  for (double r : o.rewards) rewards.push_back(number(r));
  json segs = json::array();
  for (const sxgl::SegmentResult& s : o.segments) {
    json sr = json::array();
    for (double r : s.rewards) sr.push_back(number(r));
    json seg = {{"ordinal", s.ordinal}, {"first_line", s.first_line}, {"last_line", s.last_line},
                {"seed", s.seed}, {"rewards", sr}, {"player_moves", s.player_moves.size()}};
    if (s.aborted) seg["aborted"] = *s.aborted;
    segs.push_back(seg);
  }
  json j = {{"rewards", rewards}, {"segments", segs}, {"truncations", o.truncations},
            {"aborted", o.aborted ? json(*o.aborted) : json(nullptr)}};
  if (!o.trace.empty()) {
    json t = json::array();
    for (const auto& fx : o.trace) t.push_back(effects_to_json(fx));
    j["trace"] = t;
  }
  return j;
}

json program_to_json(const sxgl::Program& p) {
  json lines = json::array();
  for (std::size_t i = 0; i < p.lines().size(); ++i) {
    const sxgl::Line& l = p.lines()[i];
    json e = {{"index", i}, {"raw", l.raw}, {"kind", l.instruction ? "instruction" : "data"}};
    if (l.instruction) e["instruction"] = l.instruction->text();
    lines.push_back(e);
  }
  json segs = json::array();
  for (const sxgl::Segment& s : p.segments()) segs.push_back({{"first", s.first}, {"last", s.last}, {"live", !s.empty()}});
  return {{"lines", lines}, {"segments", segs}, {"instructions", p.instruction_count()},
          {"code_length", sxgl::code_length(p)}, {"source", p.source()}};
}

json estimate_to_json(const lab::ScoreEstimate& e) {
  return {{"mean", number(e.mean)}, {"sd", number(e.sd)}, {"n_rollouts", e.rewards.size()},
          {"aborted", e.aborted}};
}

json gate_to_json(const lab::GateResult& g) {
  json n = json::array();
  for (double v : g.new_to_old) n.push_back(number(v));
  json o = json::array();
  for (double v : g.old_to_new) o.push_back(number(v));
  return {{"accepted", g.accepted}, {"mode", lab::to_string(g.mode)}, {"new_to_old", n}, {"old_to_new", o},
          {"old_to_new_telescoped", number(g.old_to_new_telescoped)}, {"telescoped_only", g.telescoped_only},
          {"new_to_old_sum", number(g.new_to_old_sum)}};
}

json breakdown_to_json(const meta::OBreakdown& o) {
  json j = {{"q", number(o.q)}, {"d", number(o.d)}, {"b", number(o.b)}, {"l", number(o.l)},
            {"qd", number(o.qd)}, {"O", number(o.O)}, {"new_to_old_sum", number(o.new_to_old_sum)},
            {"old_to_new_sum", number(o.old_to_new_sum)}, {"self_transfer", number(o.self_transfer)}, {"score", number(o.score)},
            {"delta", number(o.delta)}, {"pressure", number(o.pressure)}, {"bootstrap", o.bootstrap},
            {"denominator_floored", o.denominator_floored}, {"gate", gate_to_json(o.gate)}};
  if (o.error) j["error"] = *o.error;
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace xent::io
