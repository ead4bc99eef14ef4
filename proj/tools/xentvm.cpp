#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xent/config.hpp"
#include "xent/curriculum.hpp"
#include "xent/errors.hpp"
#include "xent/gamecorpus.hpp"
#include "xent/io.hpp"
#include "xent/metaobjective.hpp"
#include "xent/transferlab.hpp"
#include "xent/xentcore.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xent;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::size_t jobs = 0;
  std::string checkpoint;
};

World world_from(const Common& c) {
  std::vector<std::string> overrides = c.overrides;
  if (c.jobs > 0) overrides.push_back("jobs=" + std::to_string(c.jobs));
  World w = build_world(load_config(c.config, overrides));
  if (!c.checkpoint.empty())
    w.initial = std::make_shared<const Checkpoint>(io::load_checkpoint(c.checkpoint, w.arena->vocab()));
  return w;
}

sxgl::Program load_program(const World& w, const std::string& path) { return w.arena->parse(io::read_file(path)); }

// Games and checkpoints of a finished run directory.
lab::History load_history(const World& w, const std::string& dir) {
  const fs::path d(dir);
  auto ckpt = [&](std::size_t j) {
    return std::make_shared<const Checkpoint>(
        io::load_checkpoint((d / "checkpoints" / ("step-" + std::to_string(j) + ".json")).string(), w.arena->vocab()));
  };
  lab::History hist(ckpt(0), w.config.curriculum.archive);
  for (std::size_t j = 0;; ++j) {
    const fs::path g = d / "games" / ("step-" + std::to_string(j) + ".sxgl");
    if (!fs::exists(g)) break;
    hist.push(w.arena->parse(io::read_file(g.string())), ckpt(j + 1), 0);
  }
  return hist;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

TokenSeq encode(const World& w, const std::string& s) { return w.arena->vocab().encode(s); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SXGL virtual machine and cognitive-training engine"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "JSON config file");
  app.add_option("--set", common.overrides, "Override a config field, e.g. --set machine.L=32");
  app.add_option("--jobs", common.jobs, "Maximum concurrent rollouts");
  app.add_option("--checkpoint", common.checkpoint, "Player checkpoint file (default: config player)");

  std::string file;
  auto* parse_cmd = app.add_subcommand("parse", "Classify the lines of an SXGL file");
  parse_cmd->add_option("file", file)->required();

  std::uint64_t seed = 1;
  bool trace = false;
  auto* run_cmd = app.add_subcommand("run", "Run an SXGL game once");
  run_cmd->add_option("file", file)->required();
  run_cmd->add_option("--seed", seed, "Rollout seed");
  run_cmd->add_flag("--trace", trace, "Include the step trace");

  auto* score_cmd = app.add_subcommand("score", "Estimate the player's mean score on a game");
  score_cmd->add_option("file", file)->required();

  std::string g_file, h_file;
  auto* transfer_cmd = app.add_subcommand("transfer", "Transfer value of training on G when evaluated on H");
  transfer_cmd->add_option("G", g_file)->required();
  transfer_cmd->add_option("H", h_file)->required();

  std::string history_dir;
  auto* meta_cmd = app.add_subcommand("meta", "Meta-objective breakdown of a candidate game");
  meta_cmd->add_option("file", file)->required();
  meta_cmd->add_option("--history", history_dir, "Run directory supplying the curriculum so far");

  std::size_t steps = 0;
  std::string out_dir = "run";
  auto* train_cmd = app.add_subcommand("train", "Run the greedy curriculum loop");
  train_cmd->add_option("--steps", steps)->required();
  train_cmd->add_option("--out", out_dir, "Run directory");

  std::string into;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a run directory and compare every file");
  replay_cmd->add_option("dir", out_dir)->required();
  replay_cmd->add_option("--into", into, "Directory for the replayed run (default: DIR.replay)");

  auto* corpus_cmd = app.add_subcommand("corpus", "Game templates");
  corpus_cmd->require_subcommand(1);
  corpus_cmd->add_subcommand("list", "List the shipped templates");
  std::string template_name, map_file, emit_out;
  auto* emit_cmd = corpus_cmd->add_subcommand("emit", "Emit a template as SXGL");
  emit_cmd->add_option("--template", template_name)->required();
  emit_cmd->add_option("--map", map_file, "JSON game map {slots, roles, hyper, separator}")->required();
  emit_cmd->add_option("--out", emit_out, "Output .sxgl path (default: stdout JSON only)");

  std::string judge = "m1", other, x_text, c_text, h_text, q_text;
  auto* deltas_cmd = app.add_subcommand("deltas", "Implicit-knowledge quantities on given texts");
  deltas_cmd->add_option("--judge", judge, "Judge binding name");
  deltas_cmd->add_option("--other", other, "Second model for the contrast delta");
  deltas_cmd->add_option("--x", x_text, "Text x (statement)")->required();
  deltas_cmd->add_option("--c", c_text, "Context c");
  deltas_cmd->add_option("--hint", h_text, "Hint h for the information gain");
  deltas_cmd->add_option("--question", q_text, "Question q for the information gain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    if (parse_cmd->parsed()) {
      const World w = world_from(common);
      print(io::program_to_json(load_program(w, file)));
    } else if (run_cmd->parsed()) {
      const World w = world_from(common);
      const sxgl::Program p = load_program(w, file);
      const auto out = sxgl::run(p, w.arena->models_for(w.initial), w.arena->machine(), seed,
                                 trace ? sxgl::TraceMode::On : sxgl::TraceMode::Off);
      print(io::outcome_to_json(out));
    } else if (score_cmd->parsed()) {
      const World w = world_from(common);
      print(io::estimate_to_json(lab::estimate(*w.arena, w.initial, load_program(w, file), w.config.plan())));
    } else if (transfer_cmd->parsed()) {
      const World w = world_from(common);
      const auto t = lab::transfer(*w.arena, w.initial, load_program(w, g_file), load_program(w, h_file),
                                   w.config.plan(), w.config.phi);
      print({{"value", io::number(t.value)},
             {"before", io::estimate_to_json(t.before)},
             {"after", io::estimate_to_json(t.after)},
             {"phi", {{"episodes", t.trained.episodes}, {"trajectories", t.trained.trajectories},
                      {"flag", t.trained.flag ? json(*t.trained.flag) : json(nullptr)}}}});
    } else if (meta_cmd->parsed()) {
      const World w = world_from(common);
      const lab::History hist =
          history_dir.empty() ? lab::History(w.initial, w.config.curriculum.archive) : load_history(w, history_dir);
      meta::MetaConfig mc = w.config.meta;
      mc.gate = w.config.curriculum.gate;
      lab::PhiConfig phi = w.config.phi;
      phi.seed = derive_seed(w.config.phi.seed, hist.k() + 1);
      print(io::breakdown_to_json(meta::evaluate(*w.arena, hist, load_program(w, file), mc, w.config.plan(), phi)));
    } else if (train_cmd->parsed()) {
      const World w = world_from(common);
      const auto s = curriculum::run_loop(w, steps, out_dir);
      json chosen = json::array();
      for (const auto& r : s.steps) chosen.push_back(r.candidates[r.chosen].program.source());
      print({{"dir", out_dir}, {"completed_steps", s.completed}, {"halted", s.halted}, {"reason", s.reason},
             {"chosen", chosen}});
      if (s.halted) return 3;
    } else if (replay_cmd->parsed()) {
      if (into.empty()) into = out_dir + ".replay";
      const auto r = curriculum::replay(out_dir, into);
      print({{"identical", r.identical}, {"mismatches", r.mismatches}, {"into", into}});
      if (!r.identical) return 3;
    } else if (corpus_cmd->parsed()) {
      if (!emit_cmd->parsed()) {
        json list = json::array();
        for (const auto& t : corpus::list_templates()) {
          json slots = json::array(), roles = json::object(), hyper = json::object();
          for (const auto& s : t.slots) slots.push_back(s.name);
          for (const auto& r : t.roles) roles[r.name] = r.fallback;
          for (const auto& h : t.hyper) hyper[h.name] = h.value;
          list.push_back({{"name", t.name}, {"summary", t.summary}, {"slots", slots}, {"roles", roles},
                          {"hyper", hyper}});
        }
        json unsupported = json::array();
        for (const auto& u : corpus::unsupported_templates())
          unsupported.push_back({{"name", u.name}, {"reason", u.reason}});
        print({{"templates", list}, {"unsupported", unsupported}});
      } else {
        const World w = world_from(common);
        const json m = json::parse(io::read_file(map_file), nullptr, false);
        if (m.is_discarded() || !m.is_object()) throw ConfigError("map " + map_file + " must be a JSON object");
        corpus::GameMap map;
        for (auto it = m.begin(); it != m.end(); ++it) {
          const std::string& key = it.key();
          if (key == "slots") map.slots = it->get<std::map<std::string, std::string>>();
          else if (key == "hyper") map.hyper = it->get<std::map<std::string, double>>();
          else if (key == "separator") map.separator = it->get<std::string>();
          else if (key == "roles")
            for (auto r = it->begin(); r != it->end(); ++r) map.roles[r.key()] = w.arena->index_of(r->get<std::string>());
          else throw ConfigError("unknown map key '" + key + "'");
        }
        const corpus::Emitted e = corpus::emit(template_name, map, w.arena->machine());
        if (!emit_out.empty()) io::write_file(emit_out, e.program.file_text());
        print({{"template", template_name}, {"path", emit_out}, {"code_length", sxgl::code_length(e.program)},
               {"warnings", e.warnings}, {"source", e.program.source()}});
      }
    } else if (deltas_cmd->parsed()) {
      const World w = world_from(common);
      const auto models = w.arena->models_for(w.initial);
      const LanguageModel& j = *models.at(w.arena->index_of(judge));
      const TokenSeq x = encode(w, x_text), c = encode(w, c_text);
      DeltaOptions opt;
      opt.p_min = w.arena->machine().p_min;
      json profile = json::array();
      for (double v : anomaly_profile(j, x, c, opt.p_min)) profile.push_back(io::number(v));
      const auto prompts = default_truth_prompts(w.arena->vocab());
      json out = {{"judge", judge},
                  {"xent", io::number(xent::xent(j, x, c, opt.p_min))},
                  {"anomaly_profile", profile},
                  {"tf_delta", io::number(tf_delta(j, x, c, std::span(&prompts, 1), opt))}};
      if (!h_text.empty() || !q_text.empty())
        out["info_gain"] = io::number(info_gain(j, encode(w, h_text), encode(w, q_text), x, opt));
      if (!other.empty())
        out["contrast_delta"] = io::number(contrast_delta(j, *models.at(w.arena->index_of(other)), x, c, opt));
      print(out);
    }
  } catch (const ConfigError& e) {
    std::cerr << json{{"error", e.tag()}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << json{{"error", e.tag()}, {"message", e.what()}}.dump() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
  return 0;
}
