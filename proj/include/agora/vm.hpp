#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "agora/crypto.hpp"
#include "agora/rng.hpp"

namespace agora::vm {

using agora::Bytes;
using crypto::Digest;

using Value = std::variant<double, std::vector<double>>;

enum class Opcode {
  Const, Vconst, Input, Dot, Add, Sub, Mul, Vadd, Vscale, Sigmoid,
  Dup, Swap, Pop, Load, Store, Begin, Commit, Abort, Jmp, Jz, Emit, Halt,
};

struct Instruction {
  Opcode op;
  double f = 0.0;
  std::vector<double> vec;
  std::string name;
  std::size_t addr = 0;
};

enum class ProgramKind { Training, Query };

struct Program {
  std::vector<Instruction> instructions;
  ProgramKind kind = ProgramKind::Training;
  std::string text;  // canonical assembly
  Digest program_hash;
};

// Canonicalizes (trimmed lines, single spaces, LF, shortest round-trip
// literals), validates jump targets, and hashes the re-emitted text.
std::optional<Program> assemble(const std::string& text, ProgramKind kind,
                                std::string* err = nullptr);

struct Record {
  std::vector<double> features;
  double label = 0.0;
};

// Staged delivery: records move into an internal buffer `depth` at a time,
// so the refill pattern varies with the drawn depth but the record order
// never does.
class InputChannel {
 public:
  void set_depth(std::size_t depth);
  std::size_t depth() const { return depth_; }
  void push(Record r);
  bool empty() const { return staged_.empty() && pending_.empty(); }
  std::size_t size() const { return staged_.size() + pending_.size(); }
  std::optional<Record> next(std::vector<std::string>* trace);

 private:
  std::deque<Record> pending_;
  std::deque<Record> staged_;
  std::size_t depth_ = 1;
};

// Committed map plus one open transaction buffer. External readers see only
// committed state; an abort or crash leaves it byte-identical.
class ObjectStore {
 public:
  bool attach(const Digest& program_hash);
  bool txn_open() const { return open_; }
  bool begin_txn();
  void write(const std::string& name, Value v);
  std::optional<Value> read(const std::string& name) const;
  void commit();
  void abort();
  void crash() { abort(); }

  void put_committed(const std::string& name, Value v);
  void ensure(const std::string& name, Value v);
  std::optional<Value> committed(const std::string& name) const;
  const std::map<std::string, Value>& committed_all() const { return committed_; }

  std::string dump() const;
  bool load(const std::string& text);

 private:
  std::map<std::string, Value> committed_;
  std::map<std::string, Value> buffer_;
  bool open_ = false;
  std::optional<Digest> attached_;
};

struct OutputGate {
  std::function<bool(const Digest&)> is_registered;
  Bytes emitted;
};

struct SessionConfig {
  double dummy_p = 0.1;
  std::size_t min_depth = 1;
  std::size_t max_depth = 8;
  std::uint64_t step_budget = 1'000'000;
  std::optional<std::uint64_t> crash_at_step;
};

struct Env {
  InputChannel input;
  ObjectStore* store = nullptr;
  OutputGate* gate = nullptr;
  Rng algorithm{0};
  Rng buffer{0};
  Rng dummy{0};
  double dummy_p = 0.1;
  std::uint64_t step_budget = 1'000'000;
  std::optional<std::uint64_t> crash_at_step;
  std::vector<std::string> trace;

  // Splits the base generator into named streams and draws the session's
  // buffer depth, so randomization draws never perturb algorithmic ones.
  static Env from_rng(Rng& base, const SessionConfig& cfg);
};

enum class RunStatus { Running, Halted, BudgetExceeded, Trapped, Crashed };

std::string to_string(RunStatus s);

struct RunResult {
  RunStatus status = RunStatus::Running;
  std::string trap_reason;
  std::uint64_t steps = 0;
};

class Machine {
 public:
  Machine(const Program* prog, Env* env) : prog_(prog), env_(env) {}
  bool running() const { return status_ == RunStatus::Running; }
  bool in_txn() const { return in_txn_; }
  // True right after a COMMIT or ABORT retired, until the next step.
  bool at_txn_boundary() const { return at_boundary_; }
  void step();
  void run();
  RunResult result() const { return {status_, trap_reason_, steps_}; }
  const std::vector<Value>& stack() const { return stack_; }

 private:
  void trap(const std::string& reason);
  bool pop(Value* out);
  bool pop_scalar(double* out);
  bool pop_vector(std::vector<double>* out);

  const Program* prog_;
  Env* env_;
  std::size_t pc_ = 0;
  std::vector<Value> stack_;
  std::uint64_t steps_ = 0;
  bool in_txn_ = false;
  bool at_boundary_ = false;
  RunStatus status_ = RunStatus::Running;
  std::string trap_reason_;
};

RunResult execute(const Program& prog, Env& env);

struct TrainOutcome {
  RunResult run;
  std::vector<double> params;
  std::size_t trace_ops = 0;
};

// Queues records * epochs (order reshuffled per epoch from the algorithm
// stream), zero-initializes the parameter vector "w" to the feature width,
// and runs to completion against the attached store.
TrainOutcome run_training(const Program& prog, const std::vector<Record>& records,
                          std::size_t epochs, ObjectStore& store, Rng& rng,
                          const SessionConfig& cfg = {});

struct QueryOutcome {
  bool refused = false;
  RunResult run;
  Bytes emitted;
};

// Refuses before a single step unless the program is Query-kind and its hash
// passes the gate's registration check.
QueryOutcome run_query(const Program& prog, const std::vector<Record>& inputs,
                       ObjectStore& store, OutputGate& gate, Rng& rng,
                       const SessionConfig& cfg = {});

struct SharedOutcome {
  bool ok = false;
  std::string error;
  std::vector<RunResult> runs;
};

// Round-robin over k machines on one store, switching only at transaction
// boundaries so every commit sequence is a serial interleaving. Instances
// whose program hash does not match the store attachment are denied up front.
SharedOutcome shared_store_training(
    const std::vector<Program>& instances,
    const std::vector<std::vector<Record>>& shards, std::size_t epochs,
    const std::vector<std::pair<std::string, Value>>& init, ObjectStore& store,
    Rng& rng, const SessionConfig& cfg = {});

// Reference programs used by the training and query flows.
std::string sgd_linear_trainer_text(double rate);
std::string linear_scorer_text();

}  // namespace agora::vm
