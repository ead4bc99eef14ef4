#include "xent/arena.hpp"

#include "xent/errors.hpp"

namespace xent {

std::string to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Uniform: return "uniform";
    case BackendKind::Ngram: return "ngram";
    case BackendKind::LogitTable: return "logit_table";
    case BackendKind::Remote: return "remote";
    case BackendKind::Player: return "player";
    case BackendKind::Clone: return "clone";
  }
  return "?";
}

BackendKind backend_from_string(const std::string& s) {
  if (s == "uniform") return BackendKind::Uniform;
  if (s == "ngram") return BackendKind::Ngram;
  if (s == "logit_table") return BackendKind::LogitTable;
  if (s == "remote") return BackendKind::Remote;
  if (s == "player") return BackendKind::Player;
  if (s == "clone") return BackendKind::Clone;
  throw ConfigError("unknown backend '" + s + "'");
}

Arena::Arena(sxgl::MachineConfig machine, std::vector<ModelBinding> bindings, std::size_t jobs)
    : machine_(std::move(machine)), bindings_(std::move(bindings)), jobs_(jobs == 0 ? 1 : jobs) {
  if (bindings_.size() != machine_.shape.models)
    throw ConfigError("expected " + std::to_string(machine_.shape.models) + " model bindings, got " +
                      std::to_string(bindings_.size()));
  std::size_t players = 0;
  for (std::size_t u = 0; u < bindings_.size(); ++u) {
    const ModelBinding& b = bindings_[u];
    if (b.trainable()) {
      ++players;
      machine_.player = u;
    } else if (b.backend != BackendKind::Clone) {
      if (!b.model) throw ConfigError("binding " + b.name + " has no model");
      if (!(b.model->vocab() == machine_.vocab))
        throw ConfigError("binding " + b.name + " uses a different vocabulary");
    }
  }
  if (players != 1) throw ConfigError("exactly one binding must be the trainable player");
  machine_.validate();
}

std::size_t Arena::index_of(const std::string& name) const {
  for (std::size_t u = 0; u < bindings_.size(); ++u)
    if (bindings_[u].name == name) return u;
  throw ConfigError("no model binding named '" + name + "'");
}

sxgl::ModelSet Arena::models_for(std::shared_ptr<const Checkpoint> player) const {
  if (!(player->vocab == machine_.vocab)) throw ConfigError("checkpoint vocabulary does not match");
  auto live = std::make_shared<const LogitTableModel>(std::move(player));
  sxgl::ModelSet set;
  set.reserve(bindings_.size());
  for (const ModelBinding& b : bindings_) {
    if (b.backend == BackendKind::Player || b.backend == BackendKind::Clone) set.push_back(live);
    else set.push_back(b.model);
  }
  return set;
}

}  // namespace xent
