#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agora/bytes.hpp"
#include "agora/clock.hpp"
#include "agora/crypto.hpp"
#include "agora/rng.hpp"

namespace agora {

struct ContractCall {
  std::string contract;  // empty = no-op transaction
  std::string op;
  nlohmann::json args = nlohmann::json::object();
};

struct Transaction {
  crypto::PublicKey sender;
  std::uint64_t nonce = 0;
  ContractCall call;
  crypto::Signature sig;

  // Canonical JSON of everything but the signature; this is what gets signed.
  std::string signing_text() const;
  // Canonical JSON including the signature; this is what blocks carry.
  std::string wire_text() const;
  crypto::Digest tx_hash() const;
  static std::optional<Transaction> from_wire(std::string_view text);
};

struct Block {
  std::uint64_t index = 0;
  crypto::Digest prev_hash;
  std::uint64_t timestamp = 0;
  std::vector<Transaction> txs;
  std::vector<std::string> results;  // parallel to txs: "ok" or "failed:<reason>"
  crypto::PublicKey miner;
  crypto::Signature miner_sig;  // over header_bytes
  crypto::Digest block_hash;    // over full_bytes

  Bytes header_bytes() const;
  Bytes full_bytes() const;
};

// Actor-side account: keypair plus the next nonce to use.
struct ChainAccount {
  crypto::KeyPair key;
  std::uint64_t next_nonce = 0;

  Transaction make_tx(const std::string& contract, const std::string& op,
                      nlohmann::json args = nlohmann::json::object());
  Transaction make_noop();
};

ChainAccount create_account(Rng& rng);

// Contract execution hook. apply() must leave state untouched when it fails.
class ContractExecutor {
 public:
  virtual ~ContractExecutor() = default;
  virtual bool known_op(const std::string& contract, const std::string& op) const = 0;
  // empty string = success, anything else = failure reason
  virtual std::string apply(const Transaction& tx) = 0;
};

struct SubmitResult {
  bool accepted = false;
  std::string reason;  // "signature" | "nonce" | "unknown-operation"
};

struct ValidateResult {
  bool ok = true;
  std::uint64_t index = 0;
  std::string reason;
};

struct TxFilter {
  std::optional<crypto::PublicKey> sender;
  std::optional<std::string> contract;
  std::optional<std::string> op;
  std::optional<std::string> model_id;  // matches args["model_id"]
};

class Chain {
 public:
  // executor may be null (no-op-only chain, used by low-level tests)
  Chain(ContractExecutor* executor, Clock* clock, std::uint64_t max_txs_per_block = 64);

  SubmitResult submit_tx(const Transaction& tx);
  const Block& mine_block(ChainAccount& miner);

  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t pending_count() const { return pending_.size(); }
  std::uint64_t next_nonce(const crypto::PublicKey& sender) const;
  std::vector<Transaction> query_txs(const TxFilter& filter) const;

  std::string dump() const { return dump_blocks(blocks_); }

  static std::string dump_blocks(const std::vector<Block>& blocks);
  static ValidateResult validate(const std::vector<Block>& blocks);
  ValidateResult validate() const { return validate(blocks_); }
  static std::optional<std::vector<Block>> parse_dump(std::string_view text,
                                                      std::string* err = nullptr);

 private:
  ContractExecutor* executor_;
  Clock* clock_;
  std::uint64_t max_txs_per_block_;
  std::vector<Block> blocks_;
  std::deque<Transaction> pending_;
  std::map<crypto::PublicKey, std::uint64_t> mined_nonce_;
  std::map<crypto::PublicKey, std::uint64_t> pending_nonce_count_;
};

}  // namespace agora
