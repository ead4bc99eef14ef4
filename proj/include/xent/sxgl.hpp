#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xent/model.hpp"
#include "xent/rng.hpp"
#include "xent/tokenspace.hpp"

namespace xent::sxgl {

enum class OperandKind : std::uint8_t { Xent, String, Model };
enum class Op : std::uint8_t { Left /* << */, Right /* >> */ };

struct Operand {
  OperandKind kind = OperandKind::Xent;
  std::uint32_t index = 0;
  friend bool operator==(const Operand&, const Operand&) = default;
};

struct Instruction {
  Operand lhs;
  Op op = Op::Left;
  Operand rhs;

  bool is_terminator() const noexcept {
    return lhs.kind == OperandKind::Xent && rhs.kind == OperandKind::Xent && op == Op::Left;
  }
  // Canonical spelling, e.g. "s0<<m1".
  std::string text() const;
  friend bool operator==(const Instruction&, const Instruction&) = default;
};

// Number of string registers (K) and models (U) an instruction may address.
struct Shape {
  std::size_t registers = 4;
  std::size_t models = 4;
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Recognizes a single line. After trimming surrounding whitespace the line
// must be exactly <operand><op><operand> with in-range indices.
std::optional<Instruction> parse_instruction(std::string_view line, const Shape& shape);

struct Line {
  std::string raw;
  std::optional<Instruction> instruction;
};

// A run of lines closed by a clearing x<<x line.
struct Segment {
  std::size_t first = 0;  // first line index
  std::size_t last = 0;   // index of the closing x<<x
  bool empty() const noexcept { return first == last; }
};

// Parsed SXGL source. The canonical source drops one trailing newline and
// always ends with an x<<x line (appended when missing); every raw line is
// retained verbatim.
class Program {
 public:
  const std::vector<Line>& lines() const noexcept { return lines_; }
  const std::string& source() const noexcept { return source_; }
  const Shape& shape() const noexcept { return shape_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  // Segments holding at least one line besides their closing x<<x. Only
  // these consume a seed and produce rewards.
  std::size_t live_segments() const noexcept;
  std::size_t instruction_count() const noexcept;

  // Source text as written to .sxgl files (canonical source + newline).
  std::string file_text() const { return source_ + "\n"; }

  friend Program parse(std::string_view source, const Shape& shape);
  friend Program concat(const Program& a, const Program& b);

 private:
  void index_segments();

  std::vector<Line> lines_;
  std::vector<Segment> segments_;
  std::string source_;
  Shape shape_;
};

Program parse(std::string_view source, const Shape& shape);
// Line lists concatenated; a's terminator stays in place as a reset.
Program concat(const Program& a, const Program& b);
// Token count of the canonical source under the byte vocabulary.
std::size_t code_length(const Program& p);

struct MachineConfig {
  Shape shape;
  std::size_t length = 16;  // L
  std::size_t max_context = 256;
  double lambda = 2.0;
  double p_min = 1e-6;
  double temperature = 1.0;
  std::size_t default_judge = 0;
  std::size_t player = 0;
  Vocab vocab = Vocab::bytes();

  void validate() const;
};

struct ModelState {
  TokenSeq context;
  double score = 0.0;
  double reward = 0.0;  // cumulative within the current segment
};

struct XentObject {
  std::size_t judge = 0;
  std::optional<std::size_t> input;
  TokenSeq prefix;
};

struct GameState {
  std::vector<TokenString> registers;
  XentObject xent;
  std::vector<ModelState> models;
  std::size_t program_counter = 0;
  std::size_t truncations = 0;

  static GameState fresh(const MachineConfig& cfg);
};

using ModelSet = std::vector<std::shared_ptr<const LanguageModel>>;

struct CaretMove {
  std::size_t reg = 0;
  std::size_t from = 0;
  std::size_t to = 0;
};

struct Elicitation {
  std::size_t model = 0;
  std::size_t reg = 0;
  TokenSeq context;
  TokenSeq tokens;
};

// What one executed line did.
struct StepEffects {
  std::size_t line = 0;
  std::string op;
  std::vector<std::pair<std::size_t, double>> reward_deltas;
  std::vector<std::pair<std::size_t, double>> score_deltas;
  std::vector<CaretMove> caret_moves;
  std::optional<Elicitation> elicit;
};

// Raised inside a step for conditions that abort the current segment.
class StepAbort : public std::runtime_error {
 public:
  StepAbort(std::string tag, const std::string& what)
      : std::runtime_error(what), tag_(std::move(tag)) {}
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

// Executes the instruction on line `line` of `program` against `state`.
// Data lines are no-ops. `segment_first` bounds the search for the previous
// raw line used by s>>s and s<<s. Throws StepAbort on overflow or a missing
// previous line.
void step(GameState& state, const Program& program, std::size_t line, std::size_t segment_first,
          const ModelSet& models, const MachineConfig& cfg, Rng& rng, StepEffects* effects);

struct SegmentResult {
  std::size_t ordinal = 0;  // index among live segments
  std::size_t first_line = 0;
  std::size_t last_line = 0;
  std::uint64_t seed = 0;
  std::vector<double> rewards;            // per model; zero when aborted
  std::vector<Trajectory> player_moves;   // player elicitations
  std::optional<std::string> aborted;
};

struct GameOutcome {
  std::vector<double> rewards;  // per model, exact sum over live segments
  std::vector<SegmentResult> segments;
  std::vector<StepEffects> trace;
  std::optional<std::string> aborted;  // tag of the first aborted segment
  std::size_t truncations = 0;
};

enum class TraceMode { Off, On };

// Runs every line in order. Live segment m draws its randomness from
// seeds[m], or derive_seed(seeds[0], m) when fewer seeds are given. An x<<x
// line rewards the models and then restores the fresh state, so segments
// are independent. An aborted segment contributes zero rewards.
GameOutcome run(const Program& program, const ModelSet& models, const MachineConfig& cfg,
                std::span<const std::uint64_t> seeds, TraceMode trace = TraceMode::Off);

GameOutcome run(const Program& program, const ModelSet& models, const MachineConfig& cfg,
                std::uint64_t seed, TraceMode trace = TraceMode::Off);

}  // namespace xent::sxgl
