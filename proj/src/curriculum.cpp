#include "xent/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "xent/gamecorpus.hpp"
#include "xent/io.hpp"
#include "xent/remote.hpp"

namespace xent::curriculum {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng.next_u64() % n); }

std::vector<std::size_t> frozen_bindings(const Arena& arena) {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < arena.bindings().size(); ++u) {
    const BackendKind k = arena.bindings()[u].backend;
    if (k != BackendKind::Player && k != BackendKind::Clone) out.push_back(u);
  }
  return out;
}

std::vector<std::string> canonical_lines(const sxgl::Program& p) {
  std::vector<std::string> out;
  out.reserve(p.lines().size());
  for (const sxgl::Line& l : p.lines()) out.push_back(l.instruction ? l.instruction->text() : l.raw);
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) s += '\n';
    s += lines[i];
  }
  return s;
}

std::string random_instruction(Rng& rng, const sxgl::Shape& shape) {
  auto operand = [&]() -> std::string {
    switch (pick(rng, 3)) {
      case 0: return "x";
      case 1: return "s" + std::to_string(pick(rng, shape.registers));
      default: return "m" + std::to_string(pick(rng, shape.models));
    }
  };
  std::string a = operand();
  const std::string op = pick(rng, 2) == 0 ? "<<" : ">>";
  return a + op + operand();
}

}  // namespace

std::string sampler_prompt(const std::string& prompt_id, const sxgl::MachineConfig& machine) {
  std::ostringstream p;
  p << "[" << prompt_id << "] Write a game in the Streamlined Xent Game Language.\n"
    << "Each line is either an instruction A<<B or A>>B, where A and B are x (the xent object), "
    << "s0..s" << machine.shape.registers - 1 << " (string registers of length " << machine.length << ") or "
    << "m0..m" << machine.shape.models - 1 << " (models; m" << machine.player << " is the player), "
    << "or a data line that s<<s and s>>s load. The line x<<x pays out the score registers.\n"
    << "Example:\nthe cat sat\ns0<<s0\nx<<s0\nx<<m1\nm0>>x\nx<<x\n"
    << "Reply with the game only.\n";
  return p.str();
}

MetaSampler::MetaSampler(SamplerSpec spec, std::shared_ptr<const Arena> arena, std::vector<std::string> corpus,
                         std::size_t l_max)
    : spec_(std::move(spec)), arena_(std::move(arena)), corpus_(std::move(corpus)), l_max_(l_max) {
  if (corpus_.empty()) throw ConfigError("meta-sampler needs a non-empty corpus");
  if (spec_.templates.empty()) {
    for (const auto& t : corpus::list_templates()) pool_.push_back(t.name);
  } else {
    for (const std::string& name : spec_.templates) {
      try {
        corpus::find_template(name);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      pool_.push_back(name);
    }
  }
}

Candidate MetaSampler::from_template(Rng& rng) const {
  const sxgl::MachineConfig& m = arena_->machine();
  const std::vector<std::size_t> frozen = frozen_bindings(*arena_);
  std::size_t clone = m.player;
  for (std::size_t u = 0; u < arena_->bindings().size(); ++u)
    if (arena_->bindings()[u].backend == BackendKind::Clone) clone = u;

  auto line = [&]() -> const std::string& { return corpus_[pick(rng, corpus_.size())]; };
  auto snippet = [&](std::size_t max_len) {
    const std::string& l = line();
    if (l.empty()) return std::string();
    const std::size_t len = 1 + pick(rng, std::min(max_len, l.size()));
    return l.substr(pick(rng, l.size() - len + 1), len);
  };

  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::string& name = pool_[pick(rng, pool_.size())];
    const corpus::TemplateDescriptor& t = corpus::find_template(name);
    corpus::GameMap map;
    if (name == "rlp") {
      const std::string& l = line();
      if (l.size() < 2) continue;
      const std::size_t split = 1 + pick(rng, l.size() - 1);
      const std::size_t ctx_len = 1 + pick(rng, std::min(split, m.length));
      const std::size_t next_len = 1 + pick(rng, std::min<std::size_t>(l.size() - split, 4));
      map.slots["context"] = l.substr(split - ctx_len, ctx_len);
      map.slots["next"] = l.substr(split, next_len);
    } else {
      for (const corpus::SlotSpec& s : t.slots) map.slots[s.name] = snippet(m.length);
    }
    for (const corpus::HyperSpec& h : t.hyper) {
      if (h.name == "alpha") map.hyper[h.name] = static_cast<double>(1 + pick(rng, 2));
      else map.hyper[h.name] = static_cast<double>(1 + pick(rng, std::min<std::size_t>(6, m.length)));
    }
    for (const corpus::RoleSpec& r : t.roles) {
      if (r.name == "player") continue;
      if (r.name == "clone") {
        map.roles[r.name] = clone;
      } else if (r.fallback == "player") {
        const std::size_t i = pick(rng, frozen.size() + 1);
        map.roles[r.name] = i == frozen.size() ? m.player : frozen[i];
      } else {
        map.roles[r.name] = frozen.empty() ? m.player : frozen[pick(rng, frozen.size())];
      }
    }
    try {
      corpus::Emitted e = corpus::emit(name, map, m);
      if (sxgl::code_length(e.program) > l_max_) continue;
      return {std::move(e.program), "template:" + name};
    } catch (const InvalidArgument&) {
      continue;
    }
  }
  throw ConfigError("template sampler cannot produce a game within l_max");
}

Candidate MetaSampler::mutate(const lab::History& hist, Rng& rng) const {
  const sxgl::Shape shape = arena_->shape();
  const double weights[] = {spec_.p_insert, spec_.p_delete, spec_.p_rename, spec_.p_judge, spec_.p_concat};
  const char* names[] = {"insert", "delete", "rename", "judge", "concat"};
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw ConfigError("mutation weights sum to zero");

  for (int attempt = 0; attempt < 64; ++attempt) {
    const bool from_history = hist.k() > 0 && rng.uniform() < 0.5;
    const sxgl::Program base = from_history ? hist.games()[pick(rng, hist.k())] : from_template(rng).program;
    double u = rng.uniform() * total;
    std::size_t op = 0;
    while (op + 1 < 5 && u >= weights[op]) u -= weights[op++];

    std::vector<std::string> lines = canonical_lines(base);
    std::optional<sxgl::Program> out;
    switch (op) {
      case 0:
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(pick(rng, lines.size())),
                     random_instruction(rng, shape));
        break;
      case 1:
        if (lines.size() < 2) continue;
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(pick(rng, lines.size() - 1)));
        break;
      case 2: {
        if (shape.registers < 2) continue;
        const auto a = static_cast<std::uint32_t>(pick(rng, shape.registers));
        auto b = static_cast<std::uint32_t>(pick(rng, shape.registers - 1));
        if (b >= a) ++b;
        for (std::size_t i = 0; i < lines.size(); ++i) {
          const sxgl::Line& l = base.lines()[i];
          if (!l.instruction) continue;
          sxgl::Instruction ins = *l.instruction;
          for (sxgl::Operand* o : {&ins.lhs, &ins.rhs}) {
            if (o->kind != sxgl::OperandKind::String) continue;
            if (o->index == a) o->index = b;
            else if (o->index == b) o->index = a;
          }
          lines[i] = ins.text();
        }
        break;
      }
      case 3: {
        std::vector<std::size_t> judges;
        for (std::size_t i = 0; i < lines.size(); ++i) {
          const auto& ins = base.lines()[i].instruction;
          if (ins && ins->lhs.kind == sxgl::OperandKind::Xent && ins->op == sxgl::Op::Left &&
              ins->rhs.kind == sxgl::OperandKind::Model)
            judges.push_back(i);
        }
        const std::string repl = "x<<m" + std::to_string(pick(rng, shape.models));
        if (judges.empty())
          lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(pick(rng, lines.size())), repl);
        else
          lines[judges[pick(rng, judges.size())]] = repl;
        break;
      }
      default: {
        const sxgl::Program other = hist.k() > 0 ? hist.games()[pick(rng, hist.k())] : base;
        out = sxgl::concat(base, other);
        break;
      }
    }
    if (!out) out = sxgl::parse(join_lines(lines), shape);
    if (sxgl::code_length(*out) > l_max_ || out->live_segments() == 0) continue;
    return {std::move(*out), std::string("mutation:") + names[op]};
  }
  return from_template(rng);
}

std::optional<Candidate> MetaSampler::from_remote(Rng& rng) const {
  (void)rng;
  RemoteGenerator gen(spec_.remote);
  const std::string text = gen.generate(sampler_prompt(spec_.prompt_id, arena_->machine()), spec_.max_tokens);
  const sxgl::Shape shape = arena_->shape();
  bool has_instruction = false;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (sxgl::parse_instruction(l, shape)) has_instruction = true;
  if (!has_instruction) return std::nullopt;
  sxgl::Program p = sxgl::parse(text, shape);
  if (sxgl::code_length(p) > l_max_) return std::nullopt;
  return Candidate{std::move(p), "remote:" + spec_.prompt_id};
}

Proposal MetaSampler::propose(const lab::History& hist, std::size_t count, std::uint64_t round) const {
  if (count < 1) throw InvalidArgument("propose needs at least one candidate");
  Rng rng(derive_seed(derive_seed(spec_.seed, hist.k() + 1), round + 1));
  Proposal out;
  bool remote_ok = spec_.kind == "remote_llm";
  for (std::size_t i = 0; i < count; ++i) {
    if (remote_ok) {
      try {
        std::optional<Candidate> c;
        for (int tries = 0; tries < 3 && !c; ++tries) c = from_remote(rng);
        if (c) {
          out.candidates.push_back(std::move(*c));
          continue;
        }
        out.note = "remote reply without instructions";
      } catch (const TransportError& e) {
        remote_ok = false;
        out.fallback = true;
        out.note = e.what();
      } catch (const CapabilityError& e) {
        remote_ok = false;
        out.fallback = true;
        out.note = e.what();
      }
      out.fallback = true;
    }
    if (spec_.kind == "mutation") out.candidates.push_back(mutate(hist, rng));
    else out.candidates.push_back(from_template(rng));
  }
  return out;
}

std::size_t select(const std::vector<CandidateRecord>& records) {
  std::size_t best = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CandidateRecord& r = records[i];
    if (!r.survived) continue;
    if (best == records.size()) {
      best = i;
      continue;
    }
    const CandidateRecord& b = records[best];
    const double lr = r.breakdown.l;
    const double lb = b.breakdown.l;
    if (r.breakdown.O > b.breakdown.O ||
        (r.breakdown.O == b.breakdown.O &&
         (lr < lb || (lr == lb && r.program.source() < b.program.source()))))
      best = i;
  }
  if (best == records.size()) throw CulDeSac("no candidate passed the positive-correlation gate");
  return best;
}

StepResult cog_step(const Arena& arena, const lab::History& hist, const MetaSampler& sampler,
                    const meta::MetaConfig& cfg, std::size_t count, const lab::EvalPlan& plan,
                    const lab::PhiConfig& phi, std::uint64_t round) {
  Proposal prop = sampler.propose(hist, count, round);
  const lab::Baseline base = lab::make_baseline(arena, hist, plan);
  StepRecord rec;
  rec.step = hist.k();
  rec.phi_seed = phi.seed;
  rec.gate = cfg.gate;
  rec.sampler_fallback = prop.fallback;
  std::vector<lab::PhiResult> trained(prop.candidates.size());
  for (std::size_t i = 0; i < prop.candidates.size(); ++i) {
    CandidateRecord r;
    r.index = i;
    r.origin = prop.candidates[i].origin;
    r.program = std::move(prop.candidates[i].program);
    r.breakdown = meta::evaluate(arena, hist, base, r.program, cfg, plan, phi, &trained[i]);
    r.survived = r.breakdown.gate.accepted && !r.breakdown.error && std::isfinite(r.breakdown.O);
    rec.candidates.push_back(std::move(r));
  }
  rec.chosen = select(rec.candidates);
  const lab::PhiResult& t = trained[rec.chosen];
  rec.phi_flag = t.flag;
  auto next = std::make_shared<Checkpoint>(*t.ckpt);
  next->step = hist.k() + 1;
  rec.checkpoint_digest = next->digest();
  return {rec.candidates[rec.chosen].program, std::move(next), std::move(rec)};
}

namespace {

json step_json(const StepRecord& r) {
  const CandidateRecord& c = r.candidates[r.chosen];
  json m = json::array();
  for (double v : r.maintenance) m.push_back(io::number(v));
  return {{"step", r.step},
          {"phi_seed", r.phi_seed},
          {"gate", lab::to_string(r.gate)},
          {"attempts", r.attempts},
          {"clipped_fallback", r.clipped_fallback},
          {"sampler_fallback", r.sampler_fallback},
          {"chosen_index", r.chosen},
          {"chosen_origin", c.origin},
          {"chosen_source", c.program.source()},
          {"breakdown", io::breakdown_to_json(c.breakdown)},
          {"phi_flag", r.phi_flag ? json(*r.phi_flag) : json(nullptr)},
          {"checkpoint_digest", r.checkpoint_digest},
          {"novelty", {{"theta", io::number(r.theta)}, {"novel", r.novel}}},
          {"maintenance", m}};
}

json candidate_json(const CandidateRecord& c) {
  return {{"index", c.index},
          {"origin", c.origin},
          {"source", c.program.source()},
          {"code_length", sxgl::code_length(c.program)},
          {"survived", c.survived},
          {"breakdown", io::breakdown_to_json(c.breakdown)}};
}

void write_status(const fs::path& dir, const RunSummary& s) {
  json rows = json::array();
  for (const auto& row : s.maintenance) {
    json r = json::array();
    for (double v : row) r.push_back(io::number(v));
    rows.push_back(r);
  }
  io::write_file((dir / "maintenance.json").string(), json{{"rows", rows}}.dump(2) + "\n");
  io::write_file((dir / "status.json").string(),
                 json{{"requested_steps", s.requested},
                      {"completed_steps", s.completed},
                      {"halted", s.halted},
                      {"reason", s.reason}}
                         .dump(2) +
                     "\n");
}

}  // namespace

RunSummary run_loop(const World& world, std::size_t steps, const std::string& dir_str) {
  const Config& cfg = world.config;
  const Arena& arena = *world.arena;
  const fs::path dir(dir_str);
  fs::create_directories(dir / "candidates");
  fs::create_directories(dir / "checkpoints");
  fs::create_directories(dir / "games");
  io::write_file((dir / "config.json").string(), to_json(cfg).dump(2) + "\n");
  io::write_file((dir / "steps.jsonl").string(), "");
  io::save_checkpoint(*world.initial, (dir / "checkpoints" / "step-0.json").string());

  RunSummary summary;
  summary.requested = steps;
  summary.maintenance.emplace_back();
  const MetaSampler sampler(cfg.sampler, world.arena, cfg.corpus, cfg.curriculum.l_max);
  const lab::EvalPlan plan = cfg.plan();
  lab::History hist(world.initial, cfg.curriculum.archive);

  for (std::size_t k = 0; k < steps; ++k) {
    lab::PhiConfig phi = cfg.phi;
    phi.seed = derive_seed(cfg.phi.seed, k + 1);
    meta::MetaConfig mc = cfg.meta;
    mc.gate = cfg.curriculum.gate;

    std::optional<StepResult> result;
    std::size_t attempts = 0;
    for (; attempts < cfg.curriculum.retries && !result; ++attempts) {
      try {
        result = cog_step(arena, hist, sampler, mc, cfg.curriculum.candidates, plan, phi, attempts);
      } catch (const CulDeSac&) {
      }
    }
    bool clipped_fallback = false;
    if (!result && mc.gate == lab::GateMode::Strict && cfg.curriculum.fallback_clipped) {
      mc.gate = lab::GateMode::Clipped;
      clipped_fallback = true;
      try {
        result = cog_step(arena, hist, sampler, mc, cfg.curriculum.candidates, plan, phi, attempts++);
      } catch (const CulDeSac&) {
      }
    }
    if (!result) {
      summary.halted = true;
      summary.reason = "transfer cul-de-sac at step " + std::to_string(k) + " after " + std::to_string(attempts) +
                       " attempts";
      break;
    }
    StepRecord& rec = result->record;
    rec.attempts = attempts;
    rec.clipped_fallback = clipped_fallback;
    const CandidateRecord& chosen = rec.candidates[rec.chosen];
    rec.theta = cfg.curriculum.theta_scale * std::fabs(chosen.breakdown.score) + cfg.curriculum.theta_offset;
    rec.novel = chosen.breakdown.old_to_new_sum < rec.theta;

    hist.push(result->chosen, result->ckpt, phi.seed);
    for (const sxgl::Program& g : hist.games()) rec.maintenance.push_back(lab::score(arena, hist.latest(), g, plan));
    summary.maintenance.push_back(rec.maintenance);

    std::string lines;
    for (const CandidateRecord& c : rec.candidates) lines += candidate_json(c).dump() + "\n";
    io::write_file((dir / "candidates" / ("step-" + std::to_string(k) + ".jsonl")).string(), lines);
    io::write_file((dir / "games" / ("step-" + std::to_string(k) + ".sxgl")).string(), result->chosen.file_text());
    io::save_checkpoint(*result->ckpt, (dir / "checkpoints" / ("step-" + std::to_string(k + 1) + ".json")).string());
    {
      std::ofstream out((dir / "steps.jsonl").string(), std::ios::app | std::ios::binary);
      out << step_json(rec).dump() << "\n";
    }
    summary.steps.push_back(std::move(rec));
    summary.completed = k + 1;
  }
  write_status(dir, summary);
  return summary;
}

ReplayReport replay(const std::string& dir_str, const std::string& into) {
  const fs::path dir(dir_str);
  const json status = json::parse(io::read_file((dir / "status.json").string()), nullptr, false);
  const json config = json::parse(io::read_file((dir / "config.json").string()), nullptr, false);
  if (status.is_discarded() || config.is_discarded()) throw ConfigError("run directory holds malformed JSON");
  const World world = build_world(config_from_json(config));
  if (fs::exists(into) && fs::equivalent(dir, into)) throw InvalidArgument("replay target must differ from the run directory");
  ReplayReport report;
  if (fs::exists(into)) fs::remove_all(into);
  report.summary = run_loop(world, status.at("requested_steps").get<std::size_t>(), into);

  std::vector<std::string> files;
  for (const auto& base : {dir, fs::path(into)})
    for (const auto& e : fs::recursive_directory_iterator(base))
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), base).generic_string());
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  for (const std::string& f : files) {
    const fs::path a = dir / f;
    const fs::path b = fs::path(into) / f;
    if (!fs::exists(a) || !fs::exists(b) || io::read_file(a.string()) != io::read_file(b.string())) {
      report.identical = false;
      report.mismatches.push_back(f);
    }
  }
  return report;
}

}  // namespace xent::curriculum
