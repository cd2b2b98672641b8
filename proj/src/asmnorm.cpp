#include "sbbv/asmnorm.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "sbbv/hash.hpp"
#include "sbbv/io.hpp"

namespace sbbv {

namespace {

const char* kInstrTypeNames[] = {"arith", "logic", "datamove", "control", "compare", "stack",
                                 "other"};
const char* kOperandTypeNames[] = {"none", "register", "immediate", "memory", "label"};
const char* kRegisterClassNames[] = {"none",     "gp64",      "gp32",     "stack_ptr",
                                     "base_ptr", "instr_ptr", "flags_reg"};
const char* kAccessTypeNames[] = {"none", "read", "write", "readwrite"};
const char* kFlagEffectNames[] = {"none", "sets_flags", "reads_flags", "sets_and_reads"};

template <typename E, std::size_t N>
E enum_from_name(const std::string& s, const char* (&names)[N], const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (s == names[i]) return static_cast<E>(i);
  throw ConfigInvalid(std::string("unknown ") + what + " '" + s + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

const std::set<std::string>& gp64_names() {
  static const std::set<std::string> s = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "r8", "r9",
                                          "r10", "r11", "r12", "r13", "r14", "r15"};
  return s;
}
const std::set<std::string>& gp32_names() {
  static const std::set<std::string> s = {"eax", "ebx", "ecx", "edx", "esi", "edi", "r8d", "r9d",
                                          "r10d", "r11d", "r12d", "r13d", "r14d", "r15d"};
  return s;
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

bool parse_int_literal(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  bool neg = false;
  if (s[pos] == '-') {
    neg = true;
    ++pos;
  }
  if (pos >= s.size()) return false;
  int base = 10;
  if (s.size() - pos > 2 && s[pos] == '0' && (s[pos + 1] == 'x' || s[pos + 1] == 'X')) {
    base = 16;
    pos += 2;
  }
  std::int64_t v = 0;
  bool any = false;
  for (; pos < s.size(); ++pos) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[pos])));
    int d;
    if (c >= '0' && c <= '9')
      d = c - '0';
    else if (base == 16 && c >= 'a' && c <= 'f')
      d = 10 + (c - 'a');
    else
      return false;
    v = v * base + d;
    any = true;
  }
  if (!any) return false;
  out = neg ? -v : v;
  return true;
}

Operand parse_operand(const std::string& raw, std::size_t line_no) {
  const std::string s = trim(raw);
  if (s.empty())
    throw MalformedOperand("line " + std::to_string(line_no) + ": empty operand");

  Operand op;
  if (s.front() == '[') {
    if (s.back() != ']')
      throw MalformedOperand("line " + std::to_string(line_no) + ": unbalanced bracket in '" + s +
                             "'");
    const std::string inner = trim(s.substr(1, s.size() - 2));
    if (inner.empty())
      throw MalformedOperand("line " + std::to_string(line_no) + ": empty memory operand");
    std::size_t split = inner.find_first_of("+-", 1);
    std::string base = trim(split == std::string::npos ? inner : inner.substr(0, split));
    const std::string base_l = lowercase(base);
    if (!is_register_name(base_l))
      throw MalformedOperand("line " + std::to_string(line_no) + ": memory base '" + base +
                             "' is not a register (dialect requires base+displacement)");
    op.kind = OperandType::memory;
    op.reg_name = base_l;
    op.reg_class = classify_register(base_l);
    if (split != std::string::npos) {
      std::string disp = trim(inner.substr(split + 1));
      const bool neg = inner[split] == '-';
      if (disp == "IMM") {
        op.displacement_present = true;  // already normalized
      } else {
        std::int64_t v = 0;
        if (!parse_int_literal(disp, v))
          throw MalformedOperand("line " + std::to_string(line_no) + ": bad displacement '" +
                                 disp + "'");
        op.displacement_present = true;
        op.imm = neg ? -v : v;
      }
    }
    return op;
  }
  if (s.find_first_of("[]") != std::string::npos)
    throw MalformedOperand("line " + std::to_string(line_no) + ": unbalanced bracket in '" + s +
                           "'");

  const std::string sl = lowercase(s);
  if (is_register_name(sl)) {
    op.kind = OperandType::register_;
    op.reg_name = sl;
    op.reg_class = classify_register(sl);
    return op;
  }
  if (s == "IMM") {
    op.kind = OperandType::immediate;  // already normalized
    return op;
  }
  if (s == "LABEL") {
    op.kind = OperandType::label;  // already normalized
    return op;
  }
  std::int64_t v = 0;
  if (parse_int_literal(s, v)) {
    op.kind = OperandType::immediate;
    op.imm = v;
    return op;
  }
  if (is_identifier(s)) {
    op.kind = OperandType::label;
    op.label_name = s;
    return op;
  }
  throw MalformedOperand("line " + std::to_string(line_no) + ": cannot parse operand '" + s +
                         "'");
}

}  // namespace

const char* to_string(InstrType v) { return kInstrTypeNames[static_cast<int>(v)]; }
const char* to_string(OperandType v) { return kOperandTypeNames[static_cast<int>(v)]; }
const char* to_string(RegisterClass v) { return kRegisterClassNames[static_cast<int>(v)]; }
const char* to_string(AccessType v) { return kAccessTypeNames[static_cast<int>(v)]; }
const char* to_string(FlagEffect v) { return kFlagEffectNames[static_cast<int>(v)]; }

RegisterClass classify_register(const std::string& name) {
  if (name == "rsp") return RegisterClass::stack_ptr;
  if (name == "rbp") return RegisterClass::base_ptr;
  if (name == "rip") return RegisterClass::instr_ptr;
  if (name == "rflags") return RegisterClass::flags_reg;
  if (gp64_names().count(name)) return RegisterClass::gp64;
  if (gp32_names().count(name)) return RegisterClass::gp32;
  return RegisterClass::none;
}

bool is_register_name(const std::string& name) {
  return classify_register(name) != RegisterClass::none;
}

std::string Operand::text() const {
  switch (kind) {
    case OperandType::register_:
      return reg_name;
    case OperandType::immediate:
      return imm ? std::to_string(*imm) : "IMM";
    case OperandType::label:
      return label_name.empty() ? "LABEL" : label_name;
    case OperandType::memory: {
      std::string s = "[" + reg_name;
      if (displacement_present) s += imm ? ("+" + std::to_string(*imm)) : "+IMM";
      return s + "]";
    }
    case OperandType::none:
      break;
  }
  return "";
}

std::string Instruction::text() const {
  std::string s = mnemonic;
  for (std::size_t i = 0; i < operands.size(); ++i) {
    s += (i == 0 ? " " : ", ");
    s += operands[i].text();
  }
  return s;
}

bool Instruction::is_control_transfer() const {
  return mnemonic == "jmp" || mnemonic == "je" || mnemonic == "jne" || mnemonic == "jl" ||
         mnemonic == "jge" || mnemonic == "call" || mnemonic == "ret";
}

SemanticTable SemanticTable::load(const std::string& path) {
  return parse(read_text_file(path));
}

SemanticTable SemanticTable::parse(const std::string& text) {
  SemanticTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, type, flags, access;
    if (!(ls >> key >> type >> flags >> access))
      throw ConfigInvalid("semantic table line " + std::to_string(line_no) +
                          ": expected 'mnemonic type flags access'");
    Row row;
    row.type = enum_from_name<InstrType>(type, kInstrTypeNames, "instr_type");
    row.flags = enum_from_name<FlagEffect>(flags, kFlagEffectNames, "flag_effect");
    if (access != "-") {
      std::istringstream as(access);
      std::string tok;
      while (std::getline(as, tok, ','))
        row.access.push_back(enum_from_name<AccessType>(tok, kAccessTypeNames, "access_type"));
    }
    table.rows_[lowercase(key)] = row;
  }
  return table;
}

SemanticTable::Row SemanticTable::lookup(const std::string& mnemonic, std::size_t arity) const {
  auto it = rows_.find(mnemonic + "/" + std::to_string(arity));
  if (it != rows_.end()) return it->second;
  it = rows_.find(mnemonic);
  if (it != rows_.end()) return it->second;
  return Row{};  // unknown mnemonic: `other`, no flags, no accesses
}

bool SemanticTable::known(const std::string& mnemonic) const {
  return rows_.count(mnemonic) > 0;
}

Instruction parse_instruction(const std::string& line, std::size_t line_no) {
  std::string body = line;
  const std::size_t comment = body.find(';');
  if (comment != std::string::npos) body = body.substr(0, comment);
  body = trim(body);

  Instruction ins;
  ins.raw_text = trim(line);
  const std::size_t sp = body.find_first_of(" \t");
  ins.mnemonic = lowercase(sp == std::string::npos ? body : body.substr(0, sp));
  if (sp != std::string::npos) {
    const std::string rest = trim(body.substr(sp + 1));
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= rest.size(); ++i) {
      if (i == rest.size() || (rest[i] == ',' && depth == 0)) {
        ins.operands.push_back(parse_operand(rest.substr(start, i - start), line_no));
        start = i + 1;
      } else if (rest[i] == '[') {
        ++depth;
      } else if (rest[i] == ']') {
        --depth;
      }
    }
  }
  if (ins.operands.size() > 3)
    throw MalformedOperand("line " + std::to_string(line_no) + ": more than 3 operands");
  return ins;
}

std::vector<Instruction> parse_listing(const std::string& text) {
  std::vector<Instruction> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = line;
    const std::size_t comment = body.find(';');
    if (comment != std::string::npos) body = body.substr(0, comment);
    if (trim(body).empty()) continue;
    out.push_back(parse_instruction(line, line_no));
  }
  return out;
}

Instruction normalize(const Instruction& ins) {
  Instruction out = ins;
  for (Operand& op : out.operands) {
    switch (op.kind) {
      case OperandType::immediate:
        op.imm.reset();
        break;
      case OperandType::label:
        op.label_name.clear();
        break;
      case OperandType::memory:
        op.imm.reset();  // displacement_present flag is retained
        break;
      default:
        break;
    }
  }
  return out;
}

std::vector<TokenRecord> tokenize(const Instruction& ins, const SemanticTable& table) {
  const SemanticTable::Row row = table.lookup(ins.mnemonic, ins.operands.size());
  std::vector<TokenRecord> out;
  out.reserve(1 + ins.operands.size());

  TokenRecord mn;
  mn.asm_token = ins.mnemonic;
  mn.instr_type = row.type;
  mn.operand_type = OperandType::none;
  mn.register_class = RegisterClass::none;
  mn.access_type = AccessType::none;
  mn.flag_effect = row.flags;
  out.push_back(mn);

  for (std::size_t i = 0; i < ins.operands.size(); ++i) {
    const Operand& op = ins.operands[i];
    TokenRecord tr;
    tr.instr_type = row.type;
    tr.operand_type = op.kind;
    tr.access_type = i < row.access.size() ? row.access[i] : AccessType::none;
    tr.flag_effect = FlagEffect::none;
    switch (op.kind) {
      case OperandType::register_:
        tr.asm_token = op.reg_name;
        tr.register_class = op.reg_class;
        break;
      case OperandType::immediate:
        tr.asm_token = "IMM";
        tr.register_class = RegisterClass::none;
        break;
      case OperandType::memory:
        tr.asm_token = "MEM";
        tr.register_class = op.reg_class;  // base register's class
        break;
      case OperandType::label:
        tr.asm_token = "LABEL";
        tr.register_class = RegisterClass::none;
        break;
      case OperandType::none:
        break;
    }
    out.push_back(tr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

namespace {

const char* kDimNames[6] = {"asm_token", "instr_type",  "operand_type",
                            "register_class", "access_type", "flag_effect"};

std::vector<std::string> fixed_dim(const char* const* names, std::size_t n) {
  std::vector<std::string> v = {"<PAD>", "<BOS>"};
  for (std::size_t i = 0; i < n; ++i) v.push_back(names[i]);
  return v;
}

int fixed_dim_id(const std::vector<std::string>& dim, const std::string& name) {
  for (std::size_t i = 0; i < dim.size(); ++i)
    if (dim[i] == name) return static_cast<int>(i);
  throw IdOutOfRange("token '" + name + "' missing from fixed dimension");
}

}  // namespace

Vocabulary Vocabulary::build(const std::vector<std::vector<TokenRecord>>& corpus) {
  Vocabulary v;
  std::set<std::string> dim1;
  for (const auto& block : corpus)
    for (const TokenRecord& t : block) dim1.insert(t.asm_token);
  // IMM/MEM/LABEL have fixed special slots; drop duplicates from the corpus.
  dim1.erase("IMM");
  dim1.erase("MEM");
  dim1.erase("LABEL");

  v.dims_[0] = {"<PAD>", "<UNK>", "<BOS>", "IMM", "MEM", "LABEL"};
  for (const std::string& t : dim1) v.dims_[0].push_back(t);  // std::set: sorted order

  v.dims_[1] = fixed_dim(kInstrTypeNames, 7);
  v.dims_[2] = fixed_dim(kOperandTypeNames, 5);
  v.dims_[3] = fixed_dim(kRegisterClassNames, 7);
  v.dims_[4] = fixed_dim(kAccessTypeNames, 4);
  v.dims_[5] = fixed_dim(kFlagEffectNames, 4);
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  dim1_index_.clear();
  for (std::size_t i = 0; i < dims_[0].size(); ++i) dim1_index_[dims_[0][i]] = static_cast<int>(i);
}

int Vocabulary::dim1_id(const std::string& token) const {
  auto it = dim1_index_.find(token);
  return it == dim1_index_.end() ? kUnk : it->second;
}

EncodedToken Vocabulary::encode(const TokenRecord& t) const {
  EncodedToken ids;
  ids[0] = dim1_id(t.asm_token);
  ids[1] = fixed_dim_id(dims_[1], to_string(t.instr_type));
  ids[2] = fixed_dim_id(dims_[2], to_string(t.operand_type));
  ids[3] = fixed_dim_id(dims_[3], to_string(t.register_class));
  ids[4] = fixed_dim_id(dims_[4], to_string(t.access_type));
  ids[5] = fixed_dim_id(dims_[5], to_string(t.flag_effect));
  return ids;
}

TokenRecord Vocabulary::decode(const EncodedToken& ids) const {
  TokenRecord t;
  t.asm_token = dim_token(0, ids[0]);
  t.instr_type = enum_from_name<InstrType>(dim_token(1, ids[1]), kInstrTypeNames, "instr_type");
  t.operand_type =
      enum_from_name<OperandType>(dim_token(2, ids[2]), kOperandTypeNames, "operand_type");
  t.register_class = enum_from_name<RegisterClass>(dim_token(3, ids[3]), kRegisterClassNames,
                                                   "register_class");
  t.access_type =
      enum_from_name<AccessType>(dim_token(4, ids[4]), kAccessTypeNames, "access_type");
  t.flag_effect =
      enum_from_name<FlagEffect>(dim_token(5, ids[5]), kFlagEffectNames, "flag_effect");
  return t;
}

const std::string& Vocabulary::dim_token(std::size_t dim, int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= dims_[dim].size())
    throw IdOutOfRange("id " + std::to_string(id) + " outside dimension " +
                       std::string(kDimNames[dim]));
  return dims_[dim][static_cast<std::size_t>(id)];
}

std::string Vocabulary::serialize() const {
  std::string out = "# sbbv-vocab v1\n";
  for (std::size_t d = 0; d < 6; ++d) {
    out += "[" + std::string(kDimNames[d]) + "]\n";
    for (const std::string& t : dims_[d]) out += t + "\n";
  }
  return out;
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  Vocabulary v;
  std::istringstream in(text);
  std::string line;
  int dim = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      const std::string name = line.substr(1, line.size() - 2);
      dim = -1;
      for (int d = 0; d < 6; ++d)
        if (name == kDimNames[d]) dim = d;
      if (dim < 0) throw ConfigInvalid("vocab file: unknown dimension '" + name + "'");
      continue;
    }
    if (dim < 0) throw ConfigInvalid("vocab file: token before any [dimension] header");
    v.dims_[static_cast<std::size_t>(dim)].push_back(line);
  }
  v.rebuild_index();
  return v;
}

std::string Vocabulary::content_hash() const { return hash_string(serialize()); }

}  // namespace sbbv
