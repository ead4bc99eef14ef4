#include "xent/config.hpp"

#include <set>

#include "xent/errors.hpp"
#include "xent/io.hpp"
#include "xent/xentcore.hpp"

namespace xent {

using nlohmann::json;

const std::vector<std::string>& builtin_corpus() {
  static const std::vector<std::string> lines = {
      "the cat sat on the mat",
      "a dog ran in the park",
      "the sun is warm today",
      "we read a book at night",
      "the bird sings at dawn",
      "she made tea for two",
      "rain fell on the roof",
      "he walks to the store",
      "the tree has green leaves",
      "a ship sails on the sea",
      "they play ball after school",
      "the moon is bright and round",
      "bread is baked in the oven",
      "the river runs to the sea",
      "a small fox hides in the grass",
      "the clock on the wall ticks",
      "snow covers the quiet town",
      "the baby sleeps in the crib",
      "a red car stops at the light",
      "the old man tells a story",
      "fish swim in the clear lake",
      "the wind blows the door shut",
      "we plant seeds in the spring",
      "the farmer feeds the hens",
      "a bee flies from rose to rose",
      "the train leaves at noon",
      "she paints the fence white",
      "the kettle sings on the stove",
      "stars shine over the hills",
      "the girl ties her shoes",
      "a cold wind comes from the north",
      "the boy climbs the tall tree",
  };
  return lines;
}

Config Config::defaults() {
  Config c;
  c.machine.shape = {4, 4};
  c.machine.length = 16;
  c.machine.max_context = 256;
  c.machine.lambda = 2.0;
  c.machine.p_min = 1e-6;
  c.machine.temperature = 1.0;
  c.machine.default_judge = 0;
  c.models = {{"m0", BackendKind::Player, 2, "", {}},
              {"m1", BackendKind::Ngram, 2, "", {}},
              {"m2", BackendKind::Uniform, 2, "", {}},
              {"m3", BackendKind::Clone, 2, "", {}}};
  c.phi.batch = 16;
  c.phi.eta = 1e-3;
  c.phi.seed = 7;
  c.corpus = builtin_corpus();
  return c;
}

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void uint(const char* key, T& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
      out = v->get<T>();
    }
  }
  void real(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void string(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }
  void strings(const char* key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + " must be a list of strings");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_string()) throw ConfigError(where(key) + " must be a list of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void reals(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->empty()) throw ConfigError(where(key) + " must be a non-empty list of numbers");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number()) throw ConfigError(where(key) + " must be a non-empty list of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where(const std::string& key = "") const {
    const std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    return p.empty() ? "config" : "'" + p + "'";
  }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + child_path(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json endpoint_json(const RemoteEndpoint& e) {
  return {{"host", e.host}, {"port", static_cast<std::size_t>(e.port)}, {"model_id", e.model_id}, {"timeout_s", e.timeout_s},
          {"retries", e.retries}};
}

void read_endpoint(Reader& r, RemoteEndpoint& e) {
  r.string("host", e.host);
  std::size_t port = static_cast<std::size_t>(e.port);
  r.uint("port", port);
  if (port == 0 || port > 65535) throw ConfigError("remote port out of range");
  e.port = static_cast<int>(port);
  r.string("model_id", e.model_id);
  r.real("timeout_s", e.timeout_s);
  if (!(e.timeout_s > 0.0)) throw ConfigError("remote timeout must be positive");
  r.uint("retries", e.retries);
}

json rational_json(const meta::Rational& r) { return {{"num", r.num}, {"den", r.den}}; }

}  // namespace

json to_json(const Config& c) {
  json models = json::array();
  for (const ModelSpec& m : c.models) {
    json e = {{"name", m.name}, {"backend", to_string(m.backend)}};
    if (m.backend == BackendKind::Ngram) e["order"] = m.order;
    if (m.backend == BackendKind::LogitTable) e["path"] = m.path;
    if (m.backend == BackendKind::Remote) e["endpoint"] = endpoint_json(m.endpoint);
    models.push_back(e);
  }
  return {
      {"vocab", {{"kind", c.vocab}, {"size", c.vocab_size}}},
      {"machine",
       {{"K", c.machine.shape.registers}, {"U", c.machine.shape.models}, {"L", c.machine.length},
        {"max_context", c.machine.max_context}, {"lambda", c.machine.lambda}, {"p_min", c.machine.p_min},
        {"temperature", c.machine.temperature}, {"default_judge", c.machine.default_judge}}},
      {"models", models},
      {"player", {{"window", c.player.window}, {"rows", c.player.rows}, {"checkpoint", c.player.checkpoint}}},
      {"phi", {{"batch", c.phi.batch}, {"eta", c.phi.eta}, {"seed", c.phi.seed}}},
      {"eval", {{"n_rollouts", c.n_rollouts}, {"seed", c.eval_seed}}},
      {"meta",
       {{"delta", c.meta.delta}, {"pressure", c.meta.pressure}, {"schedule", meta::to_string(c.meta.schedule)},
        {"delta_scale", rational_json(c.meta.delta_scale)}, {"pressure_scale", rational_json(c.meta.pressure_scale)},
        {"epsilon_floor", c.meta.epsilon_floor},
        {"external", {{"kind", c.external.kind}, {"source", c.external.source}, {"callback", c.external.callback},
                      {"texts", c.external.texts}}}}},
      {"curriculum",
       {{"candidates", c.curriculum.candidates}, {"l_max", c.curriculum.l_max},
        {"gate", lab::to_string(c.curriculum.gate)}, {"archive", lab::to_string(c.curriculum.archive)},
        {"theta_scale", c.curriculum.theta_scale}, {"theta_offset", c.curriculum.theta_offset},
        {"retries", c.curriculum.retries}, {"fallback_clipped", c.curriculum.fallback_clipped}}},
      {"sampler",
       {{"kind", c.sampler.kind}, {"seed", c.sampler.seed}, {"templates", c.sampler.templates},
        {"p_insert", c.sampler.p_insert}, {"p_delete", c.sampler.p_delete}, {"p_rename", c.sampler.p_rename},
        {"p_judge", c.sampler.p_judge}, {"p_concat", c.sampler.p_concat}, {"remote", endpoint_json(c.sampler.remote)},
        {"prompt_id", c.sampler.prompt_id}, {"max_tokens", c.sampler.max_tokens}}},
      {"corpus", c.corpus},
      {"jobs", c.jobs},
  };
}

Config config_from_json(const json& j) {
  Config c = Config::defaults();
  Reader root(j, "");
  if (const json* v = root.find("vocab")) {
    Reader r(*v, "vocab");
    r.string("kind", c.vocab);
    r.uint("size", c.vocab_size);
    r.finish();
    if (c.vocab != "bytes" && c.vocab != "synthetic") throw ConfigError("vocab.kind must be 'bytes' or 'synthetic'");
    if (c.vocab_size < 2) throw ConfigError("vocab.size must be at least 2");
  }
  if (const json* v = root.find("machine")) {
    Reader r(*v, "machine");
    r.uint("K", c.machine.shape.registers);
    r.uint("U", c.machine.shape.models);
    r.uint("L", c.machine.length);
    r.uint("max_context", c.machine.max_context);
    r.real("lambda", c.machine.lambda);
    r.real("p_min", c.machine.p_min);
    r.real("temperature", c.machine.temperature);
    r.uint("default_judge", c.machine.default_judge);
    r.finish();
  }
  if (const json* v = root.find("models")) {
    if (!v->is_array()) throw ConfigError("'models' must be a list");
    c.models.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      Reader r((*v)[i], "models[" + std::to_string(i) + "]");
      ModelSpec m;
      m.name = "m" + std::to_string(i);
      std::string backend = "uniform";
      r.string("name", m.name);
      r.string("backend", backend);
      m.backend = backend_from_string(backend);
      if (m.backend == BackendKind::Ngram) {
        r.uint("order", m.order);
        if (m.order < 1 || m.order > 8) throw ConfigError("ngram order must lie in [1, 8]");
      }
      if (m.backend == BackendKind::LogitTable) r.string("path", m.path);
      if (m.backend == BackendKind::Remote) {
        if (const json* e = r.find("endpoint")) {
          Reader er(*e, r.child_path("endpoint"));
          read_endpoint(er, m.endpoint);
          er.finish();
        }
      }
      r.finish();
      c.models.push_back(m);
    }
  }
  if (const json* v = root.find("player")) {
    Reader r(*v, "player");
    r.uint("window", c.player.window);
    r.uint("rows", c.player.rows);
    r.string("checkpoint", c.player.checkpoint);
    r.finish();
    if (c.player.window > 8) throw ConfigError("player.window must be at most 8");
  }
  if (const json* v = root.find("phi")) {
    Reader r(*v, "phi");
    r.uint("batch", c.phi.batch);
    r.real("eta", c.phi.eta);
    r.uint("seed", c.phi.seed);
    r.finish();
  }
  if (const json* v = root.find("eval")) {
    Reader r(*v, "eval");
    r.uint("n_rollouts", c.n_rollouts);
    r.uint("seed", c.eval_seed);
    r.finish();
    if (c.n_rollouts < 1) throw ConfigError("eval.n_rollouts must be at least 1");
  }
  if (const json* v = root.find("meta")) {
    Reader r(*v, "meta");
    r.real("delta", c.meta.delta);
    r.real("pressure", c.meta.pressure);
    std::string sched = meta::to_string(c.meta.schedule);
    r.string("schedule", sched);
    c.meta.schedule = meta::schedule_from_string(sched);
    for (auto [key, target] : {std::pair{"delta_scale", &c.meta.delta_scale},
                               std::pair{"pressure_scale", &c.meta.pressure_scale}}) {
      if (const json* s = r.find(key)) {
        Reader sr(*s, r.child_path(key));
        sr.reals("num", target->num);
        sr.reals("den", target->den);
        sr.finish();
      }
    }
    r.real("epsilon_floor", c.meta.epsilon_floor);
    if (const json* e = r.find("external")) {
      Reader er(*e, "meta.external");
      er.string("kind", c.external.kind);
      er.string("source", c.external.source);
      er.string("callback", c.external.callback);
      er.strings("texts", c.external.texts);
      er.finish();
      if (c.external.kind != "none" && c.external.kind != "heldout_game" && c.external.kind != "callback")
        throw ConfigError("meta.external.kind must be none, heldout_game or callback");
    }
    r.finish();
  }
  if (const json* v = root.find("curriculum")) {
    Reader r(*v, "curriculum");
    r.uint("candidates", c.curriculum.candidates);
    r.uint("l_max", c.curriculum.l_max);
    std::string gate = lab::to_string(c.curriculum.gate);
    std::string archive = lab::to_string(c.curriculum.archive);
    r.string("gate", gate);
    r.string("archive", archive);
    c.curriculum.gate = lab::gate_mode_from_string(gate);
    c.curriculum.archive = lab::archive_mode_from_string(archive);
    r.real("theta_scale", c.curriculum.theta_scale);
    r.real("theta_offset", c.curriculum.theta_offset);
    r.uint("retries", c.curriculum.retries);
    r.boolean("fallback_clipped", c.curriculum.fallback_clipped);
    r.finish();
    if (c.curriculum.candidates < 1) throw ConfigError("curriculum.candidates must be at least 1");
    if (c.curriculum.l_max < 4) throw ConfigError("curriculum.l_max must be at least 4");
    if (c.curriculum.retries < 1) throw ConfigError("curriculum.retries must be at least 1");
  }
  if (const json* v = root.find("sampler")) {
    Reader r(*v, "sampler");
    r.string("kind", c.sampler.kind);
    r.uint("seed", c.sampler.seed);
    r.strings("templates", c.sampler.templates);
    r.real("p_insert", c.sampler.p_insert);
    r.real("p_delete", c.sampler.p_delete);
    r.real("p_rename", c.sampler.p_rename);
    r.real("p_judge", c.sampler.p_judge);
    r.real("p_concat", c.sampler.p_concat);
    if (const json* e = r.find("remote")) {
      Reader er(*e, "sampler.remote");
      read_endpoint(er, c.sampler.remote);
      er.finish();
    }
    r.string("prompt_id", c.sampler.prompt_id);
    r.uint("max_tokens", c.sampler.max_tokens);
    r.finish();
    if (c.sampler.kind != "template" && c.sampler.kind != "mutation" && c.sampler.kind != "remote_llm")
      throw ConfigError("sampler.kind must be template, mutation or remote_llm");
    for (double p : {c.sampler.p_insert, c.sampler.p_delete, c.sampler.p_rename, c.sampler.p_judge, c.sampler.p_concat})
      if (!(p >= 0.0)) throw ConfigError("sampler mutation weights must be non-negative");
  }
  root.strings("corpus", c.corpus);
  root.uint("jobs", c.jobs);
  root.finish();
  if (c.corpus.empty()) throw ConfigError("corpus must hold at least one line");
  if (c.jobs < 1) throw ConfigError("jobs must be at least 1");
  c.phi.validate();
  c.meta.validate();
  c.machine.validate();
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like a.b=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw ConfigError("override path '" + path + "' indexes a list with '" + key + "'");
      }
      if (idx >= node->size()) throw ConfigError("override path '" + path + "' is out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) throw ConfigError("override path '" + path + "' descends into a scalar");
      node = &(*node)[key];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = to_json(Config::defaults());
  if (!path.empty()) {
    const json user = json::parse(io::read_file(path), nullptr, false);
    if (user.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");
    if (!user.is_object()) throw ConfigError("config " + path + " must be a JSON object");
    doc.merge_patch(user);
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

World build_world(const Config& cfg) {
  World w;
  w.config = cfg;
  sxgl::MachineConfig machine = cfg.machine;
  machine.vocab = cfg.vocab == "bytes" ? Vocab::bytes() : Vocab::synthetic(cfg.vocab_size);
  if (cfg.models.size() != machine.shape.models)
    throw ConfigError("models lists " + std::to_string(cfg.models.size()) + " bindings but U = " +
                      std::to_string(machine.shape.models));

  std::vector<TokenSeq> corpus;
  if (machine.vocab.is_byte_level())
    for (const std::string& line : cfg.corpus) corpus.push_back(machine.vocab.encode(line));

  std::vector<ModelBinding> bindings;
  for (const ModelSpec& m : cfg.models) {
    ModelBinding b{m.name, m.backend, nullptr, ""};
    switch (m.backend) {
      case BackendKind::Uniform: b.model = std::make_shared<UniformModel>(machine.vocab); break;
      case BackendKind::Ngram:
        b.model = std::make_shared<NgramModel>(machine.vocab, m.order, corpus);
        b.params_ref = "corpus";
        break;
      case BackendKind::LogitTable:
        b.model = std::make_shared<LogitTableModel>(
            std::make_shared<const Checkpoint>(io::load_checkpoint(m.path, machine.vocab)));
        b.params_ref = m.path;
        break;
      case BackendKind::Remote:
        b.model = std::make_shared<RemoteModel>(m.endpoint, machine.vocab);
        b.params_ref = m.endpoint.host + ":" + std::to_string(m.endpoint.port) + "/" + m.endpoint.model_id;
        break;
      case BackendKind::Player:
      case BackendKind::Clone: break;
    }
    bindings.push_back(std::move(b));
  }
  w.arena = std::make_shared<const Arena>(machine, std::move(bindings), cfg.jobs);

  meta::Evaluation& ext = w.config.meta.external;
  if (cfg.external.kind == "heldout_game") {
    if (cfg.external.source.empty()) throw ConfigError("meta.external.source must hold an SXGL game");
    ext.kind = meta::Evaluation::Kind::HeldoutGame;
    ext.game = w.arena->parse(cfg.external.source);
    ext.id = "heldout_game";
  } else if (cfg.external.kind == "callback") {
    if (cfg.external.callback != "heldout_corpus")
      throw ConfigError("unknown external callback '" + cfg.external.callback + "'");
    if (cfg.external.texts.empty() || !machine.vocab.is_byte_level())
      throw ConfigError("heldout_corpus needs texts and the byte vocabulary");
    std::vector<TokenSeq> texts;
    for (const std::string& t : cfg.external.texts) texts.push_back(machine.vocab.encode(t));
    const double p_min = machine.p_min;
    ext.kind = meta::Evaluation::Kind::Callback;
    ext.id = "heldout_corpus";
    ext.callback = [texts, p_min](const Checkpoint& c) {
      const LogitTableModel model(std::shared_ptr<const Checkpoint>(std::shared_ptr<const Checkpoint>(), &c));
      double sum = 0.0;
      for (const TokenSeq& t : texts) sum -= xent(model, t, {}, p_min);
      return sum / static_cast<double>(texts.size());
    };
  } else {
    ext = {};
  }
  w.config.meta.validate();

  if (!cfg.player.checkpoint.empty()) {
    w.initial = std::make_shared<const Checkpoint>(io::load_checkpoint(cfg.player.checkpoint, machine.vocab));
  } else {
    w.initial = std::make_shared<const Checkpoint>(
        cfg.player.rows == 0 ? Checkpoint::zeros(machine.vocab, cfg.player.window)
                             : Checkpoint::zeros(machine.vocab, cfg.player.window, cfg.player.rows));
  }
  return w;
}

}  // namespace xent
