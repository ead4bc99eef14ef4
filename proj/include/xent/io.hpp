#pragma once

#include <string>

#include <json.hpp>

#include "xent/metaobjective.hpp"
#include "xent/model.hpp"
#include "xent/sxgl.hpp"
#include "xent/transferlab.hpp"

namespace xent::io {

using nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

json checkpoint_to_json(const Checkpoint& c);
// Throws ConfigError on a wrong format, version or vocabulary.
Checkpoint checkpoint_from_json(const json& j, const Vocab& expected);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path, const Vocab& expected);

json outcome_to_json(const sxgl::GameOutcome& o);
json effects_to_json(const sxgl::StepEffects& fx);
json program_to_json(const sxgl::Program& p);
json estimate_to_json(const lab::ScoreEstimate& e);
json gate_to_json(const lab::GateResult& g);
json breakdown_to_json(const meta::OBreakdown& o);

// Non-finite doubles become strings ("-inf", "inf", "nan").
json number(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace xent::io
