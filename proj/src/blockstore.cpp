#include "sbbv/blockstore.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sbbv/errors.hpp"
#include "sbbv/hash.hpp"

namespace sbbv {

namespace {

// Nominal fixed 4-byte encoding; the trace format carries explicit pcs so
// "sequential" is checked, not inferred.
constexpr std::uint64_t kInstrBytes = 4;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string BasicBlock::text() const {
  std::string s;
  for (const Instruction& ins : instructions) {
    s += ins.text();
    s += '\n';
  }
  return s;
}

std::string BasicBlock::id_for(const std::vector<Instruction>& normalized) {
  std::uint64_t h = kFnvOffset;
  for (const Instruction& ins : normalized) {
    const std::string t = ins.text();
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return hex64(h);
}

const BasicBlock* BlockStore::intern(std::vector<Instruction> normalized) {
  std::string id = BasicBlock::id_for(normalized);
  auto it = blocks_.find(id);
  if (it != blocks_.end()) return it->second.get();
  auto block = std::make_unique<BasicBlock>();
  block->block_id = id;
  block->instructions = std::move(normalized);
  const BasicBlock* ptr = block.get();
  blocks_.emplace(std::move(id), std::move(block));
  return ptr;
}

const BasicBlock* BlockStore::find(const std::string& block_id) const {
  auto it = blocks_.find(block_id);
  return it == blocks_.end() ? nullptr : it->second.get();
}

const BasicBlock& BlockStore::at(const std::string& block_id) const {
  const BasicBlock* b = find(block_id);
  if (!b) throw MissingArtifact("block " + block_id + " is not in the block store");
  return *b;
}

std::vector<const BasicBlock*> BlockStore::all_sorted() const {
  std::vector<const BasicBlock*> out;
  out.reserve(blocks_.size());
  for (const auto& [id, b] : blocks_) out.push_back(b.get());
  return out;
}

std::string BlockStore::serialize() const {
  std::string out = "# sbbv-blockstore v1\n";
  for (const auto& [id, b] : blocks_) {
    out += "block " + id + " " + std::to_string(b->static_len()) + "\n";
    for (const Instruction& ins : b->instructions) out += "\t" + ins.text() + "\n";
  }
  return out;
}

BlockStore BlockStore::deserialize(const std::string& text) {
  BlockStore store;
  std::istringstream in(text);
  std::string line;
  std::vector<Instruction> current;
  std::string current_id;
  auto flush = [&]() {
    if (current_id.empty()) return;
    const BasicBlock* b = store.intern(std::move(current));
    if (b->block_id != current_id)
      throw HashMismatch("block store record " + current_id + " rehashes to " + b->block_id +
                         "; file is corrupt");
    current.clear();
    current_id.clear();
  };
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '\t') {
      if (current_id.empty())
        throw ConfigInvalid("block store line " + std::to_string(line_no) +
                            ": continuation before any block header");
      current.push_back(parse_instruction(line.substr(1), line_no));
      continue;
    }
    flush();
    std::istringstream ls(line);
    std::string kw, id;
    std::size_t len = 0;
    if (!(ls >> kw >> id >> len) || kw != "block")
      throw ConfigInvalid("block store line " + std::to_string(line_no) + ": bad header");
    current_id = id;
    current.reserve(len);
  }
  flush();
  return store;
}

double IntervalProfile::count_of(const std::string& block_id, const BlockStore& store) const {
  auto it = instr_counts.find(block_id);
  if (it == instr_counts.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(store.at(block_id).static_len());
}

double ProgramIngest::true_cpi() const {
  double cycles = 0.0;
  std::uint64_t instrs = 0;
  for (const IntervalProfile& iv : intervals) {
    if (!iv.cpi_true) continue;
    cycles += *iv.cpi_true * static_cast<double>(iv.instr_total);
    instrs += iv.instr_total;
  }
  if (instrs == 0) throw MissingArtifact("program " + program_id + " has no oracle CPI attached");
  return cycles / static_cast<double>(instrs);
}

TraceSegmenter::TraceSegmenter(BlockStore& store, BlockCallback on_block)
    : store_(store), on_block_(std::move(on_block)) {}

void TraceSegmenter::flush() {
  if (pending_.empty()) return;
  const std::size_t before = store_.size();
  const BasicBlock* b = store_.intern(std::move(pending_));
  pending_.clear();
  on_block_(*b, store_.size() > before, pending_start_);
}

void TraceSegmenter::push(std::uint64_t pc, const Instruction& parsed) {
  if (have_next_pc_ && pc != next_pc_) flush();  // taken-branch target starts a new block
  if (pending_.empty()) pending_start_ = instr_index_;
  pending_.push_back(normalize(parsed));
  ++instr_index_;
  next_pc_ = pc + kInstrBytes;
  have_next_pc_ = true;
  if (parsed.is_control_transfer()) flush();
}

void TraceSegmenter::finish() { flush(); }

ProgramIngest ingest_trace(BlockStore& store, const std::string& program_id, std::istream& trace,
                           std::uint64_t interval_len) {
  if (interval_len < 1) throw ConfigInvalid("interval_len must be >= 1");
  ProgramIngest out;
  out.program_id = program_id;

  std::vector<IntervalProfile>& ivs = out.intervals;
  auto interval_at = [&](std::size_t idx) -> IntervalProfile& {
    while (ivs.size() <= idx) {
      IntervalProfile iv;
      iv.program_id = program_id;
      iv.interval_index = ivs.size();
      ivs.push_back(std::move(iv));
    }
    return ivs[idx];
  };

  std::map<std::string, bool> seen;
  TraceSegmenter seg(store, [&](const BasicBlock& b, bool, std::uint64_t start) {
    if (!seen.count(b.block_id)) {
      seen[b.block_id] = true;
      out.first_seen_order.push_back(b.block_id);
    }
    const std::uint64_t end = start + b.static_len();
    for (std::uint64_t iv = start / interval_len; iv * interval_len < end; ++iv) {
      const std::uint64_t lo = std::max(start, iv * interval_len);
      const std::uint64_t hi = std::min(end, (iv + 1) * interval_len);
      IntervalProfile& p = interval_at(iv);
      p.instr_counts[b.block_id] += hi - lo;
      p.instr_total += hi - lo;
    }
  });

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(trace, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw MalformedOperand("trace line " + std::to_string(line_no) +
                             ": expected '<pc-hex> <TAB> <asm>'");
    std::uint64_t pc = 0;
    try {
      pc = std::stoull(line.substr(0, tab), nullptr, 16);
    } catch (const std::exception&) {
      throw MalformedOperand("trace line " + std::to_string(line_no) + ": bad pc '" +
                             line.substr(0, tab) + "'");
    }
    seg.push(pc, parse_instruction(line.substr(tab + 1), line_no));
  }
  seg.finish();
  if (seg.instructions_seen() == 0) throw EmptyTrace("trace for " + program_id + " is empty");

  out.total_instructions = seg.instructions_seen();
  for (IntervalProfile& iv : ivs) iv.partial = iv.instr_total < interval_len;
  return out;
}

double TraditionalBBV::l1_norm() const {
  double s = 0.0;
  for (double w : weights) s += std::fabs(w);
  return s;
}

TraditionalBBV TraditionalBBV::normalized_l1() const {
  TraditionalBBV out = *this;
  const double n = l1_norm();
  if (n > 0.0)
    for (double& w : out.weights) w /= n;
  return out;
}

TraditionalBBV traditional_bbv(const IntervalProfile& iv,
                               const std::vector<std::string>& first_seen_order) {
  TraditionalBBV out;
  out.weights.assign(first_seen_order.size(), 0.0);
  for (std::size_t i = 0; i < first_seen_order.size(); ++i) {
    auto it = iv.instr_counts.find(first_seen_order[i]);
    if (it != iv.instr_counts.end()) out.weights[i] = static_cast<double>(it->second);
  }
  return out;
}

std::map<std::string, double> bbv_weight_map(const IntervalProfile& iv) {
  std::map<std::string, double> out;
  for (const auto& [id, n] : iv.instr_counts) out[id] = static_cast<double>(n);
  return out;
}

double bbv_cosine(const std::map<std::string, double>& x, const std::map<std::string, double>& y) {
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (const auto& [k, v] : x) {
    xx += v * v;
    auto it = y.find(k);
    if (it != y.end()) xy += v * it->second;
  }
  for (const auto& [k, v] : y) yy += v * v;
  if (xx == 0.0 || yy == 0.0) return 0.0;
  return xy / std::sqrt(xx * yy);
}

std::string serialize_intervals(const std::vector<ProgramIngest>& programs) {
  std::string out = "# sbbv-intervals v1 (pair unit: instructions executed)\n";
  for (const ProgramIngest& p : programs) {
    out += "program " + p.program_id + " " + std::to_string(p.total_instructions) + "\n";
    for (const IntervalProfile& iv : p.intervals) {
      out += "interval " + p.program_id + " " + std::to_string(iv.interval_index) + " " +
             std::to_string(iv.instr_total) + " " + (iv.partial ? "1" : "0") + " " +
             (iv.cpi_true ? format_double(*iv.cpi_true) : "nan") + "\n";
      for (const auto& [id, n] : iv.instr_counts)
        out += "\t" + id + " " + std::to_string(n) + "\n";
    }
  }
  return out;
}

std::vector<ProgramIngest> deserialize_intervals(const std::string& text) {
  std::vector<ProgramIngest> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '\t') {
      if (out.empty() || out.back().intervals.empty())
        throw ConfigInvalid("intervals line " + std::to_string(line_no) +
                            ": pair before any interval header");
      std::istringstream ls(line);
      std::string id;
      std::uint64_t n = 0;
      if (!(ls >> id >> n))
        throw ConfigInvalid("intervals line " + std::to_string(line_no) + ": bad pair");
      out.back().intervals.back().instr_counts[id] = n;
      continue;
    }
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "program") {
      ProgramIngest p;
      if (!(ls >> p.program_id >> p.total_instructions))
        throw ConfigInvalid("intervals line " + std::to_string(line_no) + ": bad program header");
      out.push_back(std::move(p));
    } else if (kw == "interval") {
      if (out.empty())
        throw ConfigInvalid("intervals line " + std::to_string(line_no) +
                            ": interval before program header");
      IntervalProfile iv;
      std::string cpi;
      int partial = 0;
      if (!(ls >> iv.program_id >> iv.interval_index >> iv.instr_total >> partial >> cpi))
        throw ConfigInvalid("intervals line " + std::to_string(line_no) + ": bad interval header");
      iv.partial = partial != 0;
      if (cpi != "nan") iv.cpi_true = std::stod(cpi);
      out.back().intervals.push_back(std::move(iv));
    } else {
      throw ConfigInvalid("intervals line " + std::to_string(line_no) + ": unknown record '" +
                          kw + "'");
    }
  }
  return out;
}

std::string serialize_cpi_records(const std::string& program_id,
                                  const std::vector<double>& per_interval) {
  std::string out = "# sbbv-cpi v1\n";
  for (std::size_t i = 0; i < per_interval.size(); ++i)
    out += "cpi " + program_id + " " + std::to_string(i) + " " + format_double(per_interval[i]) +
           "\n";
  return out;
}

void attach_cpi_records(std::vector<ProgramIngest>& programs, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kw, prog;
    std::size_t idx = 0;
    double v = 0.0;
    if (!(ls >> kw >> prog >> idx >> v) || kw != "cpi")
      throw ConfigInvalid("cpi record line " + std::to_string(line_no) + ": bad record");
    for (ProgramIngest& p : programs) {
      if (p.program_id != prog) continue;
      if (idx >= p.intervals.size())
        throw ConfigInvalid("cpi record line " + std::to_string(line_no) + ": interval " +
                            std::to_string(idx) + " out of range for " + prog);
      p.intervals[idx].cpi_true = v;
    }
  }
}

}  // namespace sbbv
