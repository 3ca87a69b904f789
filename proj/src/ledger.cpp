#include "agora/ledger.hpp"

#include <sstream>

namespace agora {

namespace {

nlohmann::json tx_body_json(const Transaction& tx) {
  // nlohmann objects keep keys sorted, so dump() is canonical
  nlohmann::json j;
  j["sender"] = tx.sender.hex();
  j["nonce"] = tx.nonce;
  j["contract"] = tx.call.contract;
  j["op"] = tx.call.op;
  j["args"] = tx.call.args;
  return j;
}

}  // namespace

std::string Transaction::signing_text() const { return tx_body_json(*this).dump(); }

std::string Transaction::wire_text() const {
  nlohmann::json j = tx_body_json(*this);
  j["sig"] = sig.hex();
  return j.dump();
}

crypto::Digest Transaction::tx_hash() const { return crypto::digest(wire_text()); }

std::optional<Transaction> Transaction::from_wire(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (!j.contains("sender") || !j["sender"].is_string() || !j.contains("nonce") ||
      !j["nonce"].is_number_unsigned() || !j.contains("contract") ||
      !j["contract"].is_string() || !j.contains("op") || !j["op"].is_string() ||
      !j.contains("args") || !j["args"].is_object() || !j.contains("sig") ||
      !j["sig"].is_string())
    return std::nullopt;

  Transaction tx;
  auto sender = crypto::PublicKey::from_hex(j["sender"].get<std::string>());
  if (!sender) return std::nullopt;
  tx.sender = *sender;
  tx.nonce = j["nonce"].get<std::uint64_t>();
  tx.call.contract = j["contract"].get<std::string>();
  tx.call.op = j["op"].get<std::string>();
  tx.call.args = j["args"];

  Bytes sig_raw;
  if (!hex_decode(j["sig"].get<std::string>(), sig_raw) ||
      sig_raw.size() != crypto::kSignatureSize)
    return std::nullopt;
  std::copy(sig_raw.begin(), sig_raw.end(), tx.sig.bytes.begin());
  tx.sig.signer = tx.sender;

  // reject non-canonical encodings so wire bytes are unique per tx
  if (tx.wire_text() != text) return std::nullopt;
  return tx;
}

Bytes Block::header_bytes() const {
  Encoder e;
  e.u64(index);
  e.raw(prev_hash.bytes.data(), prev_hash.bytes.size());
  e.u64(timestamp);
  e.u64(txs.size());
  for (const auto& tx : txs) e.str(tx.wire_text());
  e.raw(miner.bytes.data(), miner.bytes.size());
  return e.out;
}

Bytes Block::full_bytes() const {
  Encoder e;
  e.blob(header_bytes());
  e.u64(results.size());
  for (const auto& r : results) e.str(r);
  e.raw(miner_sig.bytes.data(), miner_sig.bytes.size());
  return e.out;
}

Transaction ChainAccount::make_tx(const std::string& contract, const std::string& op,
                                  nlohmann::json args) {
  Transaction tx;
  tx.sender = key.pub;
  tx.nonce = next_nonce++;
  tx.call = ContractCall{contract, op, std::move(args)};
  tx.sig = crypto::sign(key.sec, to_bytes(tx.signing_text()));
  return tx;
}

Transaction ChainAccount::make_noop() { return make_tx("", ""); }

ChainAccount create_account(Rng& rng) { return ChainAccount{crypto::keygen(rng), 0}; }

Chain::Chain(ContractExecutor* executor, Clock* clock, std::uint64_t max_txs_per_block)
    : executor_(executor), clock_(clock), max_txs_per_block_(max_txs_per_block) {
  Block genesis;
  genesis.index = 0;
  genesis.timestamp = 0;
  genesis.block_hash = crypto::digest(genesis.full_bytes());
  blocks_.push_back(std::move(genesis));
}

std::uint64_t Chain::next_nonce(const crypto::PublicKey& sender) const {
  std::uint64_t n = 0;
  if (auto it = mined_nonce_.find(sender); it != mined_nonce_.end()) n = it->second;
  if (auto it = pending_nonce_count_.find(sender); it != pending_nonce_count_.end())
    n += it->second;
  return n;
}

SubmitResult Chain::submit_tx(const Transaction& tx) {
  if (tx.sig.signer != tx.sender ||
      !crypto::verify(tx.sender, to_bytes(tx.signing_text()), tx.sig))
    return {false, "signature"};
  if (tx.nonce != next_nonce(tx.sender)) return {false, "nonce"};
  if (!tx.call.contract.empty() &&
      (!executor_ || !executor_->known_op(tx.call.contract, tx.call.op)))
    return {false, "unknown-operation"};
  pending_.push_back(tx);
  ++pending_nonce_count_[tx.sender];
  return {true, ""};
}

const Block& Chain::mine_block(ChainAccount& miner) {
  Block b;
  b.index = blocks_.size();
  b.prev_hash = blocks_.back().block_hash;
  b.timestamp = clock_ ? clock_->advance() : b.index;
  b.miner = miner.key.pub;

  while (!pending_.empty() && b.txs.size() < max_txs_per_block_) {
    Transaction tx = pending_.front();
    pending_.pop_front();
    --pending_nonce_count_[tx.sender];
    mined_nonce_[tx.sender] = tx.nonce + 1;
    std::string outcome = "ok";
    if (!tx.call.contract.empty()) {
      std::string failure = executor_ ? executor_->apply(tx) : "no-executor";
      if (!failure.empty()) outcome = "failed:" + failure;
    }
    b.txs.push_back(std::move(tx));
    b.results.push_back(std::move(outcome));
  }

  b.miner_sig = crypto::sign(miner.key.sec, b.header_bytes());
  b.block_hash = crypto::digest(b.full_bytes());
  blocks_.push_back(std::move(b));
  return blocks_.back();
}

ValidateResult Chain::validate(const std::vector<Block>& blocks) {
  if (blocks.empty()) return {false, 0, "empty"};

  const Block& g = blocks[0];
  if (g.index != 0 || !g.prev_hash.is_zero() || !g.txs.empty() || !g.miner.is_zero())
    return {false, 0, "genesis"};
  if (crypto::digest(g.full_bytes()) != g.block_hash) return {false, 0, "hash"};

  std::map<crypto::PublicKey, std::uint64_t> expected_nonce;
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.index != i) return {false, i, "index"};
    if (b.prev_hash != blocks[i - 1].block_hash) return {false, i, "link"};
    if (crypto::digest(b.full_bytes()) != b.block_hash) return {false, i, "hash"};
    if (b.results.size() != b.txs.size()) return {false, i, "results"};
    if (b.miner_sig.signer != b.miner ||
        !crypto::verify(b.miner, b.header_bytes(), b.miner_sig))
      return {false, i, "miner-signature"};
    for (const auto& tx : b.txs) {
      if (tx.sig.signer != tx.sender ||
          !crypto::verify(tx.sender, to_bytes(tx.signing_text()), tx.sig))
        return {false, i, "tx-signature"};
      if (tx.nonce != expected_nonce[tx.sender]) return {false, i, "nonce"};
      expected_nonce[tx.sender] = tx.nonce + 1;
    }
  }
  return {true, 0, ""};
}

std::vector<Transaction> Chain::query_txs(const TxFilter& filter) const {
  std::vector<Transaction> out;
  for (const auto& b : blocks_) {
    for (const auto& tx : b.txs) {
      if (filter.sender && tx.sender != *filter.sender) continue;
      if (filter.contract && tx.call.contract != *filter.contract) continue;
      if (filter.op && tx.call.op != *filter.op) continue;
      if (filter.model_id) {
        auto it = tx.call.args.find("model_id");
        if (it == tx.call.args.end() || !it->is_string() ||
            it->get<std::string>() != *filter.model_id)
          continue;
      }
      out.push_back(tx);
    }
  }
  return out;
}

std::string Chain::dump_blocks(const std::vector<Block>& blocks) {
  std::string out = "agora-chain v1\n";
  for (const auto& b : blocks) {
    out += std::to_string(b.index);
    out += ' ';
    out += b.prev_hash.hex();
    out += ' ';
    out += std::to_string(b.timestamp);
    out += ' ';
    out += b.miner.hex();
    out += ' ';
    out += b.miner_sig.hex();
    out += ' ';
    out += b.block_hash.hex();
    out += ' ';
    out += std::to_string(b.txs.size());
    for (std::size_t i = 0; i < b.txs.size(); ++i) {
      out += ' ';
      out += hex_encode(to_bytes(b.txs[i].wire_text()));
      out += ' ';
      out += hex_encode(to_bytes(b.results[i]));
    }
    out += '\n';
  }
  return out;
}

namespace {

bool dump_fail(std::string* err, std::size_t line_no, const std::string& what) {
  if (err) *err = "line " + std::to_string(line_no) + ": " + what;
  return false;
}

}  // namespace

std::optional<std::vector<Block>> Chain::parse_dump(std::string_view text, std::string* err) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "agora-chain v1") {
    dump_fail(err, 1, "missing header");
    return std::nullopt;
  }

  std::vector<Block> blocks;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      dump_fail(err, line_no, "empty line");
      return std::nullopt;
    }
    std::istringstream f(line);
    Block b;
    std::string prev_hex, miner_hex, miner_sig_hex, hash_hex;
    std::size_t n_txs = 0;
    if (!(f >> b.index >> prev_hex >> b.timestamp >> miner_hex >> miner_sig_hex >>
          hash_hex >> n_txs)) {
      dump_fail(err, line_no, "malformed block fields");
      return std::nullopt;
    }
    auto prev = crypto::Digest::from_hex(prev_hex);
    auto miner = crypto::PublicKey::from_hex(miner_hex);
    auto hash = crypto::Digest::from_hex(hash_hex);
    Bytes sig_raw;
    if (!prev || !miner || !hash || !hex_decode(miner_sig_hex, sig_raw) ||
        sig_raw.size() != crypto::kSignatureSize) {
      dump_fail(err, line_no, "bad hex field");
      return std::nullopt;
    }
    b.prev_hash = *prev;
    b.miner = *miner;
    b.block_hash = *hash;
    std::copy(sig_raw.begin(), sig_raw.end(), b.miner_sig.bytes.begin());
    b.miner_sig.signer = b.miner;

    for (std::size_t i = 0; i < n_txs; ++i) {
      std::string tx_hex, result_hex;
      if (!(f >> tx_hex >> result_hex)) {
        dump_fail(err, line_no, "truncated tx list");
        return std::nullopt;
      }
      Bytes tx_raw, result_raw;
      if (!hex_decode(tx_hex, tx_raw) || !hex_decode(result_hex, result_raw)) {
        dump_fail(err, line_no, "bad tx hex");
        return std::nullopt;
      }
      auto tx = Transaction::from_wire(to_string(tx_raw));
      if (!tx) {
        dump_fail(err, line_no, "bad tx encoding");
        return std::nullopt;
      }
      b.txs.push_back(std::move(*tx));
      b.results.push_back(to_string(result_raw));
    }
    std::string extra;
    if (f >> extra) {
      dump_fail(err, line_no, "trailing fields");
      return std::nullopt;
    }
    blocks.push_back(std::move(b));
  }
  if (blocks.empty()) {
    dump_fail(err, line_no, "no blocks");
    return std::nullopt;
  }
  return blocks;
}

}  // namespace agora
