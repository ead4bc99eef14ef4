#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "xent/config.hpp"
#include "xent/model.hpp"
#include "xent/sxgl.hpp"

namespace xt {

inline bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

inline xent::TokenSeq bytes(const std::string& s) { return xent::Vocab::bytes().encode(s); }

// The default toy world: m0 player (zero logit table), m1 bigram teacher on
// the built-in corpus, m2 uniform, m3 clone of the player.
inline xent::World toy(std::vector<std::string> overrides = {}) {
  return xent::build_world(xent::load_config("", overrides));
}

inline xent::sxgl::Program parse(const xent::World& w, const std::string& src) { return w.arena->parse(src); }

// A player checkpoint with small deterministic pseudo-random logits.
inline std::shared_ptr<const xent::Checkpoint> jittered(const xent::Vocab& v, std::uint32_t window,
                                                        std::uint64_t seed, double scale = 0.5) {
  auto c = std::make_shared<xent::Checkpoint>(xent::Checkpoint::zeros(v, window));
  xent::Rng rng(seed);
  for (double& x : c->table) x = scale * (2.0 * rng.uniform() - 1.0);
  return c;
}

}  // namespace xt

#include "xent/gamecorpus.hpp"

namespace xt {

inline xent::sxgl::Program game(const xent::World& w, const std::string& name,
                                std::map<std::string, std::string> slots,
                                std::map<std::string, std::string> roles = {},
                                std::map<std::string, double> hyper = {}) {
  xent::corpus::GameMap m;
  m.slots = std::move(slots);
  for (const auto& [role, binding] : roles) m.roles[role] = w.arena->index_of(binding);
  m.hyper = std::move(hyper);
  return xent::corpus::emit(name, m, w.arena->machine()).program;
}

}  // namespace xt

#include "xent/transferlab.hpp"

namespace xt {

inline xent::lab::PhiConfig phi(double eta, std::size_t batch = 16, std::uint64_t seed = 3) {
  xent::lab::PhiConfig p;
  p.eta = eta;
  p.batch = batch;
  p.seed = seed;
  return p;
}

// Trains through `games` in order, recording each step in a history.
inline xent::lab::History train_history(const xent::World& w, const std::vector<xent::sxgl::Program>& games,
                                        xent::lab::PhiConfig p, xent::lab::ArchiveMode mode = xent::lab::ArchiveMode::Full) {
  xent::lab::History hist(w.initial, mode);
  xent::lab::CheckpointPtr cur = w.initial;
  for (std::size_t j = 0; j < games.size(); ++j) {
    p.seed = xent::derive_seed(p.seed, j + 1);
    cur = xent::lab::train_phi(*w.arena, cur, games[j], p).ckpt;
    hist.push(games[j], cur, p.seed);
  }
  return hist;
}

}  // namespace xt

#include <unistd.h>

#include <atomic>
#include <filesystem>

namespace xt {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("xent-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string str(const std::string& sub = "") const { return (path_ / sub).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace xt
