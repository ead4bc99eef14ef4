#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xent/sxgl.hpp"

namespace xent::corpus {

struct SlotSpec {
  std::string name;
  std::string description;
};

struct RoleSpec {
  std::string name;
  std::string description;
  // Binding used when the map does not name one; "player" means the
  // machine's trainable player.
  std::string fallback;
};

struct HyperSpec {
  std::string name;
  double value = 0.0;
  bool integral = true;
  double min = 0.0;
};

struct TemplateDescriptor {
  std::string name;
  std::string summary;
  std::vector<SlotSpec> slots;
  std::vector<RoleSpec> roles;
  std::vector<HyperSpec> hyper;
  std::string separator;  // only used by common_explanation
};

// The six shipped templates in a fixed order.
const std::vector<TemplateDescriptor>& list_templates();
const TemplateDescriptor& find_template(std::string_view name);

// Games that are described but need judges far beyond toy scale.
struct UnsupportedGame {
  std::string name;
  std::string reason;
};
const std::vector<UnsupportedGame>& unsupported_templates();

// A game map: texts per slot, model indices per role, hyper-parameter
// overrides.
struct GameMap {
  std::map<std::string, std::string> slots;
  std::map<std::string, std::size_t> roles;
  std::map<std::string, double> hyper;
  std::string separator = " ";
};

struct Emitted {
  sxgl::Program program;
  std::vector<std::string> warnings;  // truncation notices
  std::map<std::string, std::size_t> roles;
  std::map<std::string, double> hyper;
};

// Builds the SXGL program for a template. Slot texts longer than L tokens
// are cut by the machine; each cut is reported in `warnings`. Throws
// InvalidArgument for an unknown template, a missing slot, a slot text that
// contains a line break or would itself parse as an instruction, or an
// out-of-range hyper-parameter.
Emitted emit(std::string_view name, const GameMap& map, const sxgl::MachineConfig& cfg);

}  // namespace xent::corpus
