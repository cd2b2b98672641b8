#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sbbv/asmnorm.hpp"

namespace sbbv {

// Straight-line instruction sequence, single entry and exit. Identity is
// a content hash of the normalized text, so identical blocks from
// different programs share one id.
struct BasicBlock {
  std::string block_id;
  std::vector<Instruction> instructions;  // normalized

  std::size_t static_len() const { return instructions.size(); }
  std::string text() const;

  static std::string id_for(const std::vector<Instruction>& normalized);
};

// Global content-addressed registry. Single writer during ingestion,
// read-only afterwards.
class BlockStore {
 public:
  const BasicBlock* intern(std::vector<Instruction> normalized);
  const BasicBlock* find(const std::string& block_id) const;
  const BasicBlock& at(const std::string& block_id) const;  // throws MissingArtifact
  std::vector<const BasicBlock*> all_sorted() const;
  std::size_t size() const { return blocks_.size(); }

  std::string serialize() const;
  static BlockStore deserialize(const std::string& text);

 private:
  std::map<std::string, std::unique_ptr<BasicBlock>> blocks_;
};

// One fixed-length window of dynamic execution. Per-block instruction
// counts are kept as exact integers; fractional block execution counts
// (boundary-straddling occurrences) derive from them.
struct IntervalProfile {
  std::string program_id;
  std::size_t interval_index = 0;
  std::map<std::string, std::uint64_t> instr_counts;  // block_id -> instructions executed here
  std::uint64_t instr_total = 0;
  bool partial = false;
  std::optional<double> cpi_true;

  // Execution count of a block within this interval; fractional when the
  // occurrence straddles an interval boundary.
  double count_of(const std::string& block_id, const BlockStore& store) const;
};

// Per-program ingestion result. first_seen_order is the traditional BBV's
// program-local id assignment.
struct ProgramIngest {
  std::string program_id;
  std::vector<IntervalProfile> intervals;
  std::vector<std::string> first_seen_order;
  std::uint64_t total_instructions = 0;

  double true_cpi() const;  // instruction-weighted mean over intervals with cpi_true
};

// Streaming segmentation: a block ends immediately after a control
// transfer, or when the next pc is not sequential. `on_block` fires per
// dynamic occurrence; new blocks are interned into the store first.
class TraceSegmenter {
 public:
  using BlockCallback =
      std::function<void(const BasicBlock&, bool is_new, std::uint64_t first_instr_index)>;

  TraceSegmenter(BlockStore& store, BlockCallback on_block);
  void push(std::uint64_t pc, const Instruction& parsed);
  void finish();
  std::uint64_t instructions_seen() const { return instr_index_; }

 private:
  void flush();

  BlockStore& store_;
  BlockCallback on_block_;
  std::vector<Instruction> pending_;
  std::uint64_t pending_start_ = 0;
  std::uint64_t next_pc_ = 0;
  bool have_next_pc_ = false;
  std::uint64_t instr_index_ = 0;
};

// Parses the trace format (`<pc-hex> <TAB> <asm-text>` per line),
// segments, and slices into consecutive intervals of `interval_len`
// instructions. Instructions of a straddling occurrence are attributed to
// the interval in which each executes. Throws EmptyTrace, propagates
// parse errors with the trace line number.
ProgramIngest ingest_trace(BlockStore& store, const std::string& program_id, std::istream& trace,
                           std::uint64_t interval_len);

// Traditional BBV over per-program first-seen ids. The value at index i
// is the execution count weighted by instruction count of block
// first_seen_order[i].
struct TraditionalBBV {
  std::vector<double> weights;

  double l1_norm() const;
  TraditionalBBV normalized_l1() const;
};

TraditionalBBV traditional_bbv(const IntervalProfile& iv,
                               const std::vector<std::string>& first_seen_order);

// Instruction weights keyed by content id (shared across programs);
// cosine over this keying equals per-program-id cosine within one program
// and extends it across programs.
std::map<std::string, double> bbv_weight_map(const IntervalProfile& iv);
double bbv_cosine(const std::map<std::string, double>& x, const std::map<std::string, double>& y);

// Interval profile persistence (exact integer instruction counts, sorted
// block-id pairs).
std::string serialize_intervals(const std::vector<ProgramIngest>& programs);
std::vector<ProgramIngest> deserialize_intervals(const std::string& text);

// CPI record files: `cpi <program> <interval> <value>` lines.
std::string serialize_cpi_records(const std::string& program_id,
                                  const std::vector<double>& per_interval);
void attach_cpi_records(std::vector<ProgramIngest>& programs, const std::string& text);

}  // namespace sbbv
