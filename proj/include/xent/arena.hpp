#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "xent/model.hpp"
#include "xent/sxgl.hpp"

namespace xent {

enum class BackendKind { Uniform, Ngram, LogitTable, Remote, Player, Clone };

std::string to_string(BackendKind k);
BackendKind backend_from_string(const std::string& s);

// Binds a model variable (m0, m1, ...) to a backend. The player binding is
// the trainable model whose parameters come from the checkpoint being
// evaluated or trained; a clone binding is a frozen copy of that same
// checkpoint. Every other binding carries its own frozen model.
struct ModelBinding {
  std::string name;
  BackendKind backend = BackendKind::Uniform;
  std::shared_ptr<const LanguageModel> model;  // null for player and clone
  std::string params_ref;

  bool trainable() const noexcept { return backend == BackendKind::Player; }
};

// The global metadata of a game space: machine parameters plus the model
// bindings, shared read-only by every rollout.
class Arena {
 public:
  Arena(sxgl::MachineConfig machine, std::vector<ModelBinding> bindings, std::size_t jobs = 1);

  const sxgl::MachineConfig& machine() const noexcept { return machine_; }
  const std::vector<ModelBinding>& bindings() const noexcept { return bindings_; }
  std::size_t player() const noexcept { return machine_.player; }
  std::size_t jobs() const noexcept { return jobs_; }
  const Vocab& vocab() const noexcept { return machine_.vocab; }
  sxgl::Shape shape() const noexcept { return machine_.shape; }

  // Index of the binding with the given name (e.g. "m1").
  std::size_t index_of(const std::string& name) const;

  sxgl::ModelSet models_for(std::shared_ptr<const Checkpoint> player) const;

  sxgl::Program parse(std::string_view source) const { return sxgl::parse(source, machine_.shape); }

 private:
  sxgl::MachineConfig machine_;
  std::vector<ModelBinding> bindings_;
  std::size_t jobs_;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn);

}  // namespace xent

#include "xent/detail/parallel.hpp"
