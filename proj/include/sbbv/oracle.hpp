#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbbv/asmnorm.hpp"
#include "sbbv/rng.hpp"

namespace sbbv {

// ---------------------------------------------------------------------------
// Synthetic workloads. Deterministic stand-ins for the benchmark suite:
// seeded phase plans realized as dialect loops, executed by a flat-memory
// interpreter, costed by two documented cost models.
// ---------------------------------------------------------------------------

enum class PhaseKind { compute, memory_stream, memory_random, branchy, mixed };
const char* to_string(PhaseKind k);
PhaseKind phase_kind_from(const std::string& name);

struct PhaseSpec {
  PhaseKind kind = PhaseKind::compute;
  std::uint64_t budget = 0;       // dynamic instructions to spend in this phase
  std::uint64_t working_set = 0;  // bytes; memory phases only, power of two
};

struct WorkloadSpec {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<PhaseSpec> phases;

  std::string serialize() const;
  static WorkloadSpec deserialize(const std::string& text);
};

// Assembled dialect program: instructions at fixed 4-byte pcs, labels
// resolved to instruction indices.
struct Program {
  static constexpr std::uint64_t kBasePc = 0x401000;
  static constexpr std::uint64_t kInstrBytes = 4;

  std::vector<Instruction> code;
  std::map<std::string, std::size_t> labels;

  std::uint64_t pc_of(std::size_t index) const { return kBasePc + kInstrBytes * index; }
  std::string listing() const;

  // Parses program text; `name:` lines bind labels to the next instruction.
  static Program assemble(const std::string& text);
};

// Emits the phase plan as dialect code. Loop iteration counts are chosen
// so the dynamic instruction count lands within +-1% of the budget;
// throws BudgetInfeasible when a budget is too small for its loop shape.
Program gen_program(const WorkloadSpec& spec);

// Two-level counted loop, the seven-basic-block demo shape.
Program nested_loop_program(std::uint64_t outer, std::uint64_t inner);

// One executed instruction, with the side information the cost models
// need (the on-disk trace format keeps only pc + text).
struct TraceEvent {
  std::uint64_t pc = 0;
  const Instruction* ins = nullptr;
  std::optional<std::uint64_t> mem_addr;  // effective address, if the instruction accessed memory
  bool is_cond_branch = false;
  bool taken = false;
};

using EventSink = std::function<void(const TraceEvent&)>;

// Executes with a 1 MiB flat memory (addresses reduced modulo size) and a
// shadow call stack; halts at top-level `ret` or after `max_instructions`.
// Returns the number of instructions executed.
std::uint64_t interpret(const Program& program, const EventSink& sink,
                        std::uint64_t max_instructions = 1ull << 32);

std::string format_trace_line(const TraceEvent& ev);

// ---------------------------------------------------------------------------
// Cost models. Ground truth by construction: base cycles per instruction
// class, a direct-mapped cache, a 2-bit branch predictor, and (complex
// model) an issue-width divisor on the base component.
// ---------------------------------------------------------------------------

struct CostModel {
  std::string name;
  std::array<double, 7> base_cycles{};  // indexed by InstrType
  std::size_t cache_sets = 64;
  std::size_t cache_line_bytes = 64;
  double miss_penalty = 20.0;
  std::size_t predictor_entries = 512;
  double mispredict_penalty = 3.0;
  double issue_width = 1.0;

  static CostModel simple();
  static CostModel complex();
  static CostModel by_name(const std::string& name);
};

// Streaming cost accumulator. Cache and predictor state persist across
// interval boundaries; cold at program start.
class CostSim {
 public:
  CostSim(CostModel model, const SemanticTable& table, std::uint64_t interval_len);

  void on_event(const TraceEvent& ev);
  void finish();  // closes the trailing partial interval, if any

  const std::vector<double>& interval_cpi() const { return cpi_; }
  std::uint64_t instructions() const { return instr_total_; }

 private:
  void close_interval(std::uint64_t instrs);

  CostModel model_;
  const SemanticTable& table_;
  std::uint64_t interval_len_;
  std::map<std::string, InstrType> type_cache_;

  std::vector<std::uint64_t> cache_tags_;
  std::vector<bool> cache_valid_;
  std::vector<std::uint8_t> predictor_;

  double base_acc_ = 0.0;
  std::uint64_t misses_ = 0;
  std::uint64_t mispredicts_ = 0;
  std::uint64_t in_interval_ = 0;
  std::uint64_t instr_total_ = 0;
  std::vector<double> cpi_;
};

// Convenience over a materialized event list.
std::vector<double> cost_cpi(const std::vector<TraceEvent>& events, std::uint64_t interval_len,
                             const CostModel& model, const SemanticTable& table);

// ---------------------------------------------------------------------------
// Stage-1 metric-learning corpus: straight-line synthetic functions plus
// semantics-preserving transforms (register renaming, independent
// adjacent reordering, imul-by-2 <-> shl-1, nop insertion) standing in
// for compiler optimization variance.
// ---------------------------------------------------------------------------

std::vector<std::vector<Instruction>> gen_functions(std::uint64_t seed, std::size_t count);
std::vector<Instruction> transform_variant(const std::vector<Instruction>& fn, Rng& rng);

}  // namespace sbbv
