#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbbv/errors.hpp"

namespace sbbv {

// ---------------------------------------------------------------------------
// Dialect model. A constrained Intel-syntax subset: ~25 mnemonics, gp
// registers, base+displacement memory operands, label control flow.
// ---------------------------------------------------------------------------

enum class InstrType { arith, logic, datamove, control, compare, stack, other };
enum class OperandType { none, register_, immediate, memory, label };
enum class RegisterClass { none, gp64, gp32, stack_ptr, base_ptr, instr_ptr, flags_reg };
enum class AccessType { none, read, write, readwrite };
enum class FlagEffect { none, sets_flags, reads_flags, sets_and_reads };

const char* to_string(InstrType v);
const char* to_string(OperandType v);
const char* to_string(RegisterClass v);
const char* to_string(AccessType v);
const char* to_string(FlagEffect v);

struct Operand {
  OperandType kind = OperandType::none;
  RegisterClass reg_class = RegisterClass::none;  // base register's class for memory
  bool displacement_present = false;

  std::string reg_name;               // register operands and memory bases
  std::optional<std::int64_t> imm;    // literal immediate / displacement; absent once normalized
  std::string label_name;             // literal label; empty once normalized

  std::string text() const;
};

struct Instruction {
  std::string mnemonic;
  std::vector<Operand> operands;
  std::string raw_text;

  // Canonical rendering (lowercase mnemonic, ", "-joined operands).
  std::string text() const;
  bool is_control_transfer() const;
};

// One token with all six dimensions populated; `none` is explicit.
struct TokenRecord {
  std::string asm_token;
  InstrType instr_type = InstrType::other;
  OperandType operand_type = OperandType::none;
  RegisterClass register_class = RegisterClass::none;
  AccessType access_type = AccessType::none;
  FlagEffect flag_effect = FlagEffect::none;

  bool operator==(const TokenRecord&) const = default;
};

// Per-mnemonic semantics (instruction type, flag effect, per-position
// access). Shipped as a config file; rows may be arity-qualified
// ("imul/3") to override the base row.
class SemanticTable {
 public:
  struct Row {
    InstrType type = InstrType::other;
    FlagEffect flags = FlagEffect::none;
    std::vector<AccessType> access;  // per operand position
  };

  static SemanticTable load(const std::string& path);
  static SemanticTable parse(const std::string& text);

  // Unknown mnemonics classify as `other` with no accesses.
  Row lookup(const std::string& mnemonic, std::size_t arity) const;
  bool known(const std::string& mnemonic) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::map<std::string, Row> rows_;
};

RegisterClass classify_register(const std::string& name);
bool is_register_name(const std::string& name);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Line-oriented parse; `;` comments and blank lines are skipped. Unknown
// mnemonics parse fine (they classify as `other` later). Malformed
// operands throw MalformedOperand with a 1-based line number.
std::vector<Instruction> parse_listing(const std::string& text);
Instruction parse_instruction(const std::string& line, std::size_t line_no = 0);

// Immediates -> IMM, displacements collapsed (flag retained), labels ->
// LABEL. Idempotent.
Instruction normalize(const Instruction& ins);

// 1 mnemonic token + 1 token per operand; no boundary tokens.
std::vector<TokenRecord> tokenize(const Instruction& ins, const SemanticTable& table);

// ---------------------------------------------------------------------------
// Vocabulary: per-dimension token<->id bijections. Dimension 1 is built
// from the corpus; dimensions 2-6 are the fixed enum domains. Ids are
// implicit by position in the persisted file.
// ---------------------------------------------------------------------------

using EncodedToken = std::array<int, 6>;

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  // Dim-1 fixed specials continue: IMM=3, MEM=4, LABEL=5.

  static Vocabulary build(const std::vector<std::vector<TokenRecord>>& corpus);

  EncodedToken encode(const TokenRecord& t) const;
  TokenRecord decode(const EncodedToken& ids) const;

  int dim1_id(const std::string& token) const;  // kUnk when unseen
  const std::string& dim_token(std::size_t dim, int id) const;
  std::size_t dim_size(std::size_t dim) const { return dims_[dim].size(); }

  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);
  std::string content_hash() const;

 private:
  std::array<std::vector<std::string>, 6> dims_;
  std::map<std::string, int> dim1_index_;
  void rebuild_index();
};

}  // namespace sbbv
