#include "agora/vm.hpp"

#include <cmath>
#include <sstream>

#include "agora/bytes.hpp"

namespace agora::vm {

namespace {

struct OpInfo {
  Opcode op;
  const char* mnemonic;
};

constexpr OpInfo kOps[] = {
    {Opcode::Const, "CONST"},     {Opcode::Vconst, "VCONST"},
    {Opcode::Input, "INPUT"},     {Opcode::Dot, "DOT"},
    {Opcode::Add, "ADD"},         {Opcode::Sub, "SUB"},
    {Opcode::Mul, "MUL"},         {Opcode::Vadd, "VADD"},
    {Opcode::Vscale, "VSCALE"},   {Opcode::Sigmoid, "SIGMOID"},
    {Opcode::Dup, "DUP"},         {Opcode::Swap, "SWAP"},
    {Opcode::Pop, "POP"},         {Opcode::Load, "LOAD"},
    {Opcode::Store, "STORE"},     {Opcode::Begin, "BEGIN"},
    {Opcode::Commit, "COMMIT"},   {Opcode::Abort, "ABORT"},
    {Opcode::Jmp, "JMP"},         {Opcode::Jz, "JZ"},
    {Opcode::Emit, "EMIT"},       {Opcode::Halt, "HALT"},
};

const char* mnemonic(Opcode op) {
  for (const auto& info : kOps)
    if (info.op == op) return info.mnemonic;
  return "?";
}

std::optional<Opcode> opcode_of(const std::string& word) {
  for (const auto& info : kOps)
    if (word == info.mnemonic) return info.op;
  return std::nullopt;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

bool parse_addr(const std::string& s, std::size_t& out) {
  if (s.empty() || s.size() > 9) return false;
  out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    out = out * 10 + static_cast<std::size_t>(c - '0');
  }
  return true;
}

bool parse_vector_literal(const std::string& s, std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    std::string part =
        comma == std::string::npos ? s.substr(start) : s.substr(start, comma - start);
    double v = 0.0;
    if (!parse_double(part, v)) return false;
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return !out.empty();
}

std::string emit_line(const Instruction& ins) {
  std::string line = mnemonic(ins.op);
  switch (ins.op) {
    case Opcode::Const:
      line += " " + format_double(ins.f);
      break;
    case Opcode::Vconst: {
      line += " ";
      for (std::size_t i = 0; i < ins.vec.size(); ++i) {
        if (i) line += ",";
        line += format_double(ins.vec[i]);
      }
      break;
    }
    case Opcode::Input:
    case Opcode::Jmp:
    case Opcode::Jz:
      line += " " + std::to_string(ins.addr);
      break;
    case Opcode::Load:
    case Opcode::Store:
      line += " " + ins.name;
      break;
    default:
      break;
  }
  return line;
}

void fail(std::string* err, std::size_t line_no, const std::string& what) {
  if (err) *err = "line " + std::to_string(line_no) + ": " + what;
}

std::string serialize_value(const Value& v) {
  if (std::holds_alternative<double>(v)) return format_double(std::get<double>(v));
  const auto& vec = std::get<std::vector<double>>(v);
  std::string out;
  for (std::size_t i = 0; i < vec.size(); ++i) {
    if (i) out += ",";
    out += format_double(vec[i]);
  }
  return out;
}

}  // namespace

std::optional<Program> assemble(const std::string& text, ProgramKind kind,
                                std::string* err) {
  Program prog;
  prog.kind = kind;
  std::vector<std::size_t> line_of;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty()) continue;
    std::vector<std::string> toks = tokenize(line);
    auto op = opcode_of(toks[0]);
    if (!op) {
      fail(err, line_no, "unknown opcode " + toks[0]);
      return std::nullopt;
    }
    Instruction ins;
    ins.op = *op;
    bool wants_operand = false;
    switch (*op) {
      case Opcode::Const:
        wants_operand = true;
        if (toks.size() == 2 && parse_double(toks[1], ins.f)) break;
        fail(err, line_no, "malformed literal");
        return std::nullopt;
      case Opcode::Vconst:
        wants_operand = true;
        if (toks.size() == 2 && parse_vector_literal(toks[1], ins.vec)) break;
        fail(err, line_no, "malformed literal");
        return std::nullopt;
      case Opcode::Input:
      case Opcode::Jmp:
      case Opcode::Jz:
        wants_operand = true;
        if (toks.size() == 2 && parse_addr(toks[1], ins.addr)) break;
        fail(err, line_no, "malformed jump target");
        return std::nullopt;
      case Opcode::Load:
      case Opcode::Store:
        wants_operand = true;
        if (toks.size() == 2 && valid_name(toks[1])) {
          ins.name = toks[1];
          break;
        }
        fail(err, line_no, "bad object name");
        return std::nullopt;
      default:
        break;
    }
    if (!wants_operand && toks.size() != 1) {
      fail(err, line_no, "unexpected operand");
      return std::nullopt;
    }
    prog.instructions.push_back(std::move(ins));
    line_of.push_back(line_no);
  }
  for (std::size_t i = 0; i < prog.instructions.size(); ++i) {
    const Instruction& ins = prog.instructions[i];
    if (ins.op != Opcode::Input && ins.op != Opcode::Jmp && ins.op != Opcode::Jz)
      continue;
    if (ins.addr >= prog.instructions.size()) {
      fail(err, line_of[i], "jump target out of range");
      return std::nullopt;
    }
  }
  for (const Instruction& ins : prog.instructions) prog.text += emit_line(ins) + "\n";
  prog.program_hash = crypto::digest(prog.text);
  return prog;
}

void InputChannel::set_depth(std::size_t depth) { depth_ = depth == 0 ? 1 : depth; }

void InputChannel::push(Record r) { pending_.push_back(std::move(r)); }

std::optional<Record> InputChannel::next(std::vector<std::string>* trace) {
  if (staged_.empty()) {
    if (pending_.empty()) return std::nullopt;
    std::size_t k = std::min(depth_, pending_.size());
    for (std::size_t i = 0; i < k; ++i) {
      staged_.push_back(std::move(pending_.front()));
      pending_.pop_front();
    }
    if (trace) trace->push_back("refill " + std::to_string(k));
  }
  Record r = std::move(staged_.front());
  staged_.pop_front();
  return r;
}

bool ObjectStore::attach(const Digest& program_hash) {
  if (attached_ && !(*attached_ == program_hash)) return false;
  attached_ = program_hash;
  return true;
}

bool ObjectStore::begin_txn() {
  if (open_) return false;
  buffer_.clear();
  open_ = true;
  return true;
}

void ObjectStore::write(const std::string& name, Value v) {
  if (!open_) return;
  buffer_[name] = std::move(v);
}

std::optional<Value> ObjectStore::read(const std::string& name) const {
  if (open_) {
    auto it = buffer_.find(name);
    if (it != buffer_.end()) return it->second;
  }
  auto it = committed_.find(name);
  if (it == committed_.end()) return std::nullopt;
  return it->second;
}

void ObjectStore::commit() {
  for (auto& [name, v] : buffer_) committed_[name] = std::move(v);
  buffer_.clear();
  open_ = false;
}

void ObjectStore::abort() {
  buffer_.clear();
  open_ = false;
}

void ObjectStore::put_committed(const std::string& name, Value v) {
  committed_[name] = std::move(v);
}

void ObjectStore::ensure(const std::string& name, Value v) {
  if (!committed_.count(name)) committed_[name] = std::move(v);
}

std::optional<Value> ObjectStore::committed(const std::string& name) const {
  auto it = committed_.find(name);
  if (it == committed_.end()) return std::nullopt;
  return it->second;
}

std::string ObjectStore::dump() const {
  std::string out = "store v1\n";
  for (const auto& [name, v] : committed_) {
    if (std::holds_alternative<double>(v)) {
      out += "n " + name + " " + format_double(std::get<double>(v)) + "\n";
    } else {
      const auto& vec = std::get<std::vector<double>>(v);
      out += "v " + name + " " + std::to_string(vec.size());
      for (double f : vec) out += " " + format_double(f);
      out += "\n";
    }
  }
  return out;
}

bool ObjectStore::load(const std::string& text) {
  std::map<std::string, Value> parsed;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "store v1") return false;
  while (std::getline(in, line)) {
    if (line.empty()) return false;
    std::vector<std::string> toks = tokenize(line);
    if (toks.size() < 3 || !valid_name(toks[1]) || parsed.count(toks[1])) return false;
    if (toks[0] == "n") {
      double v = 0.0;
      if (toks.size() != 3 || !parse_double(toks[2], v)) return false;
      parsed[toks[1]] = v;
    } else if (toks[0] == "v") {
      std::size_t n = 0;
      if (!parse_addr(toks[2], n) || toks.size() != 3 + n) return false;
      std::vector<double> vec(n);
      for (std::size_t i = 0; i < n; ++i)
        if (!parse_double(toks[3 + i], vec[i])) return false;
      parsed[toks[1]] = std::move(vec);
    } else {
      return false;
    }
  }
  committed_ = std::move(parsed);
  buffer_.clear();
  open_ = false;
  attached_.reset();
  return true;
}

Env Env::from_rng(Rng& base, const SessionConfig& cfg) {
  Env env;
  env.algorithm = base.split("algorithm");
  env.buffer = base.split("buffer");
  env.dummy = base.split("dummy");
  env.dummy_p = cfg.dummy_p;
  env.step_budget = cfg.step_budget;
  env.crash_at_step = cfg.crash_at_step;
  std::size_t lo = cfg.min_depth == 0 ? 1 : cfg.min_depth;
  std::size_t hi = cfg.max_depth < lo ? lo : cfg.max_depth;
  env.input.set_depth(lo + env.buffer.below(hi - lo + 1));
  return env;
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Running: return "running";
    case RunStatus::Halted: return "halted";
    case RunStatus::BudgetExceeded: return "budget-exceeded";
    case RunStatus::Trapped: return "trapped";
    case RunStatus::Crashed: return "crashed";
  }
  return "?";
}

void Machine::trap(const std::string& reason) {
  status_ = RunStatus::Trapped;
  trap_reason_ = reason;
  if (in_txn_) {
    if (env_->store) env_->store->abort();
    in_txn_ = false;
  }
}

bool Machine::pop(Value* out) {
  if (stack_.empty()) {
    trap("stack-underflow");
    return false;
  }
  *out = std::move(stack_.back());
  stack_.pop_back();
  return true;
}

bool Machine::pop_scalar(double* out) {
  Value v;
  if (!pop(&v)) return false;
  if (!std::holds_alternative<double>(v)) {
    trap("type");
    return false;
  }
  *out = std::get<double>(v);
  return true;
}

bool Machine::pop_vector(std::vector<double>* out) {
  Value v;
  if (!pop(&v)) return false;
  if (!std::holds_alternative<std::vector<double>>(v)) {
    trap("type");
    return false;
  }
  *out = std::move(std::get<std::vector<double>>(v));
  return true;
}

void Machine::step() {
  if (status_ != RunStatus::Running) return;
  at_boundary_ = false;
  if (env_->crash_at_step && steps_ == *env_->crash_at_step) {
    if (in_txn_ && env_->store) env_->store->crash();
    in_txn_ = false;
    status_ = RunStatus::Crashed;
    return;
  }
  if (steps_ >= env_->step_budget) {
    if (in_txn_ && env_->store) env_->store->abort();
    in_txn_ = false;
    status_ = RunStatus::BudgetExceeded;
    return;
  }
  if (pc_ >= prog_->instructions.size()) {
    trap("pc-range");
    return;
  }
  const Instruction& ins = prog_->instructions[pc_];
  ++steps_;
  ++pc_;
  env_->trace.push_back(mnemonic(ins.op));
  switch (ins.op) {
    case Opcode::Const:
      stack_.push_back(ins.f);
      break;
    case Opcode::Vconst:
      stack_.push_back(ins.vec);
      break;
    case Opcode::Input: {
      if (env_->input.empty()) {
        pc_ = ins.addr;
        break;
      }
      auto r = env_->input.next(&env_->trace);
      stack_.push_back(std::move(r->features));
      stack_.push_back(r->label);
      break;
    }
    case Opcode::Dot: {
      std::vector<double> a, b;
      if (!pop_vector(&a) || !pop_vector(&b)) break;
      if (a.size() != b.size()) {
        trap("shape");
        break;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) acc += b[i] * a[i];
      stack_.push_back(acc);
      break;
    }
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul: {
      double a = 0.0, b = 0.0;
      if (!pop_scalar(&a) || !pop_scalar(&b)) break;
      double r = ins.op == Opcode::Add ? b + a : ins.op == Opcode::Sub ? b - a : b * a;
      stack_.push_back(r);
      break;
    }
    case Opcode::Vadd: {
      std::vector<double> a, b;
      if (!pop_vector(&a) || !pop_vector(&b)) break;
      if (a.size() != b.size()) {
        trap("shape");
        break;
      }
      for (std::size_t i = 0; i < a.size(); ++i) b[i] += a[i];
      stack_.push_back(std::move(b));
      break;
    }
    case Opcode::Vscale: {
      double s = 0.0;
      std::vector<double> v;
      if (!pop_scalar(&s) || !pop_vector(&v)) break;
      for (double& f : v) f *= s;
      stack_.push_back(std::move(v));
      break;
    }
    case Opcode::Sigmoid: {
      double x = 0.0;
      if (!pop_scalar(&x)) break;
      stack_.push_back(1.0 / (1.0 + std::exp(-x)));
      break;
    }
    case Opcode::Dup:
      if (stack_.empty()) {
        trap("stack-underflow");
        break;
      }
      stack_.push_back(stack_.back());
      break;
    case Opcode::Swap: {
      if (stack_.size() < 2) {
        trap("stack-underflow");
        break;
      }
      std::swap(stack_[stack_.size() - 1], stack_[stack_.size() - 2]);
      break;
    }
    case Opcode::Pop: {
      Value v;
      pop(&v);
      break;
    }
    case Opcode::Load: {
      if (!in_txn_) {
        trap("transaction-required");
        break;
      }
      auto v = env_->store->read(ins.name);
      if (!v) {
        trap("missing-object");
        break;
      }
      stack_.push_back(std::move(*v));
      break;
    }
    case Opcode::Store: {
      if (!in_txn_) {
        trap("transaction-required");
        break;
      }
      Value v;
      if (!pop(&v)) break;
      env_->store->write(ins.name, std::move(v));
      break;
    }
    case Opcode::Begin:
      if (in_txn_) {
        trap("nested-transaction");
        break;
      }
      if (!env_->store || !env_->store->begin_txn()) {
        trap("store-busy");
        break;
      }
      in_txn_ = true;
      break;
    case Opcode::Commit:
      if (!in_txn_) {
        trap("stray-commit");
        break;
      }
      env_->store->commit();
      in_txn_ = false;
      at_boundary_ = true;
      break;
    case Opcode::Abort:
      if (!in_txn_) {
        trap("stray-abort");
        break;
      }
      env_->store->abort();
      in_txn_ = false;
      at_boundary_ = true;
      break;
    case Opcode::Jmp:
      pc_ = ins.addr;
      break;
    case Opcode::Jz: {
      double x = 0.0;
      if (!pop_scalar(&x)) break;
      if (x == 0.0) pc_ = ins.addr;
      break;
    }
    case Opcode::Emit: {
      if (prog_->kind != ProgramKind::Query || !env_->gate ||
          !env_->gate->is_registered ||
          !env_->gate->is_registered(prog_->program_hash)) {
        trap("gate");
        break;
      }
      Value v;
      if (!pop(&v)) break;
      std::string text = serialize_value(v) + "\n";
      Bytes b = to_bytes(text);
      env_->gate->emitted.insert(env_->gate->emitted.end(), b.begin(), b.end());
      break;
    }
    case Opcode::Halt:
      if (in_txn_) {
        trap("open-transaction");
        break;
      }
      status_ = RunStatus::Halted;
      break;
  }
  bool executed = status_ == RunStatus::Running || status_ == RunStatus::Halted;
  if (executed && env_->dummy.next_unit() < env_->dummy_p)
    env_->trace.push_back(env_->dummy.below(2) == 0 ? "dummy-read" : "dummy-page");
}

void Machine::run() {
  while (running()) step();
}

RunResult execute(const Program& prog, Env& env) {
  Machine m(&prog, &env);
  m.run();
  return m.result();
}

namespace {

void queue_epochs(InputChannel& input, const std::vector<Record>& records,
                  std::size_t epochs, Rng& algorithm) {
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t e = 0; e < epochs; ++e) {
    algorithm.shuffle(order);
    for (std::size_t i : order) input.push(records[i]);
  }
}

bool uniform_width(const std::vector<Record>& records, std::size_t* dim) {
  if (records.empty()) return true;
  *dim = records[0].features.size();
  for (const Record& r : records)
    if (r.features.size() != *dim) return false;
  return true;
}

std::vector<double> snapshot_params(const ObjectStore& store) {
  auto v = store.committed("w");
  if (!v) return {};
  if (std::holds_alternative<double>(*v)) return {std::get<double>(*v)};
  return std::get<std::vector<double>>(*v);
}

}  // namespace

TrainOutcome run_training(const Program& prog, const std::vector<Record>& records,
                          std::size_t epochs, ObjectStore& store, Rng& rng,
                          const SessionConfig& cfg) {
  TrainOutcome out;
  std::size_t dim = 0;
  if (!uniform_width(records, &dim)) {
    out.run = {RunStatus::Trapped, "record-shape", 0};
    return out;
  }
  if (!store.attach(prog.program_hash)) {
    out.run = {RunStatus::Trapped, "attach-denied", 0};
    return out;
  }
  Env env = Env::from_rng(rng, cfg);
  env.store = &store;
  if (!records.empty()) store.ensure("w", std::vector<double>(dim, 0.0));
  queue_epochs(env.input, records, epochs, env.algorithm);
  out.run = execute(prog, env);
  out.params = snapshot_params(store);
  out.trace_ops = env.trace.size();
  return out;
}

QueryOutcome run_query(const Program& prog, const std::vector<Record>& inputs,
                       ObjectStore& store, OutputGate& gate, Rng& rng,
                       const SessionConfig& cfg) {
  QueryOutcome out;
  if (prog.kind != ProgramKind::Query || !gate.is_registered ||
      !gate.is_registered(prog.program_hash)) {
    out.refused = true;
    return out;
  }
  Env env = Env::from_rng(rng, cfg);
  env.store = &store;
  env.gate = &gate;
  for (const Record& r : inputs) env.input.push(r);
  std::size_t before = gate.emitted.size();
  out.run = execute(prog, env);
  out.emitted.assign(gate.emitted.begin() + static_cast<std::ptrdiff_t>(before),
                     gate.emitted.end());
  return out;
}

SharedOutcome shared_store_training(
    const std::vector<Program>& instances,
    const std::vector<std::vector<Record>>& shards, std::size_t epochs,
    const std::vector<std::pair<std::string, Value>>& init, ObjectStore& store,
    Rng& rng, const SessionConfig& cfg) {
  SharedOutcome out;
  if (instances.empty() || instances.size() != shards.size()) {
    out.error = "shape";
    return out;
  }
  for (const Program& prog : instances) {
    if (!store.attach(prog.program_hash)) {
      out.error = "attach-denied";
      return out;
    }
  }
  for (const auto& [name, v] : init) store.ensure(name, v);
  std::vector<Env> envs;
  envs.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    envs.push_back(Env::from_rng(rng, cfg));
    envs[i].store = &store;
    queue_epochs(envs[i].input, shards[i], epochs, envs[i].algorithm);
  }
  std::vector<Machine> machines;
  machines.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i)
    machines.emplace_back(&instances[i], &envs[i]);
  bool any = true;
  while (any) {
    any = false;
    for (Machine& m : machines) {
      if (!m.running()) continue;
      any = true;
      // A turn ends when the machine stops or closes a transaction, so
      // commits from different instances never interleave.
      do {
        m.step();
      } while (m.running() && !m.at_txn_boundary());
    }
  }
  out.ok = true;
  for (Machine& m : machines) {
    out.runs.push_back(m.result());
    if (m.result().status != RunStatus::Halted) out.ok = false;
  }
  if (!out.ok) out.error = "run-failed";
  return out;
}

std::string sgd_linear_trainer_text(double rate) {
  return
      "INPUT 20\n"
      "BEGIN\n"
      "STORE y\n"
      "STORE x\n"
      "LOAD w\n"
      "LOAD x\n"
      "DOT\n"
      "LOAD y\n"
      "SWAP\n"
      "SUB\n"
      "CONST " + format_double(rate) + "\n"
      "MUL\n"
      "LOAD x\n"
      "SWAP\n"
      "VSCALE\n"
      "LOAD w\n"
      "VADD\n"
      "STORE w\n"
      "COMMIT\n"
      "JMP 0\n"
      "HALT\n";
}

std::string linear_scorer_text() {
  return
      "INPUT 8\n"
      "POP\n"
      "BEGIN\n"
      "LOAD w\n"
      "COMMIT\n"
      "DOT\n"
      "EMIT\n"
      "JMP 0\n"
      "HALT\n";
}

}  // namespace agora::vm
