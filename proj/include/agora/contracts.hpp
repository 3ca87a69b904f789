#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agora/crypto.hpp"
#include "agora/ledger.hpp"

namespace agora {

enum class EnclaveKind { Validation, Training, Query };

std::string to_string(EnclaveKind k);
std::optional<EnclaveKind> enclave_kind_from(std::string_view s);

enum class ModelStatus { Recruiting, Training, Trained };

std::string to_string(ModelStatus s);
std::optional<ModelStatus> model_status_from(std::string_view s);

struct AuditEntry {
  crypto::PublicKey auditor;
  crypto::Digest report_hash;
};

struct EnclavePackage {
  crypto::Digest measurement;
  crypto::Digest source_hash;
  crypto::PublicKey developer;
  std::vector<AuditEntry> audits;
};

struct EnclaveInstanceRecord {
  crypto::PublicKey enclave_pubkey;
  crypto::Digest measurement;
  crypto::PublicKey runner;
  crypto::Digest ias_report_hash;
  EnclaveKind kind = EnclaveKind::Validation;
};

struct DataRegistration {
  crypto::PublicKey owner;
  crypto::Digest report_hash;
  bool active = true;
};

struct SplitSpec {
  std::uint64_t trainer_bp = 0;
  std::uint64_t runner_bp = 0;
  std::uint64_t donor_pool_bp = 0;
};

struct DonorEntry {
  crypto::PublicKey owner;
  std::uint64_t quality = 0;
  crypto::Digest receipt_hash;
  bool withdrawn = false;
};

struct ModelRecord {
  crypto::Digest model_id;
  crypto::PublicKey trainer;
  crypto::Digest whitepaper_hash;
  ModelStatus status = ModelStatus::Recruiting;
  crypto::PublicKey training_enclave;
  std::optional<crypto::PublicKey> runner_enclave;
  std::uint64_t price = 0;
  SplitSpec split;
  crypto::Digest query_program_hash;
  std::vector<DonorEntry> donors;
};

enum class CodeStatus { Paid, Consumed };

struct AccessCode {
  crypto::Digest code_hash;
  crypto::Digest model_id;
  crypto::PublicKey payer;
  std::uint64_t amount = 0;
  CodeStatus status = CodeStatus::Paid;
};

struct CreditEntry {
  crypto::Digest code_hash;
  crypto::PublicKey recipient;
  std::uint64_t amount = 0;
  std::string role;  // "trainer" | "runner" | "donor"
};

struct WorldState {
  std::map<crypto::Digest, EnclavePackage> packages;
  std::map<crypto::PublicKey, EnclaveInstanceRecord> instances;
  std::vector<DataRegistration> data_regs;  // append-only
  std::map<crypto::Digest, ModelRecord> models;
  std::map<crypto::PublicKey, std::uint64_t> balances;
  std::map<crypto::Digest, std::uint64_t> escrow;
  std::map<crypto::Digest, AccessCode> codes;
  std::vector<CreditEntry> credits;
  std::uint64_t initial_mint = 0;
};

// What a training enclave signs when issuing a donor receipt.
Bytes receipt_signing_bytes(const crypto::Digest& model_id, const crypto::PublicKey& owner,
                            std::uint64_t quality);
// What the serving enclave signs when consuming an access code.
Bytes consume_signing_bytes(const crypto::Digest& code_hash);

crypto::Digest make_model_id(const crypto::Digest& whitepaper_hash,
                             const crypto::PublicKey& trainer);

// Registry + token contracts, executed by the ledger. Failed calls roll back.
class Contracts : public ContractExecutor {
 public:
  bool known_op(const std::string& contract, const std::string& op) const override;
  std::string apply(const Transaction& tx) override;

  // harness setup, not a transaction
  void mint_initial(const crypto::PublicKey& account, std::uint64_t amount);

  const WorldState& state() const { return state_; }
  std::optional<AccessCode> verify_payment(const crypto::Digest& code_hash) const;
  const EnclaveInstanceRecord* instance(const crypto::PublicKey& enclave_pubkey) const;
  const ModelRecord* model(const crypto::Digest& model_id) const;
  bool is_trainer(const crypto::PublicKey& account) const;
  bool registration_active(const crypto::PublicKey& owner,
                           const crypto::Digest& report_hash) const;
  bool anchored(const crypto::Digest& hash) const;
  bool query_hash_registered(const crypto::Digest& program_hash) const;
  std::uint64_t balance_of(const crypto::PublicKey& account) const;
  std::uint64_t total_balances() const;
  std::uint64_t total_escrow() const;

 private:
  std::string dispatch(const Transaction& tx);

  std::string op_register_package(const Transaction& tx);
  std::string op_register_audit(const Transaction& tx);
  std::string op_register_instance(const Transaction& tx);
  std::string op_register_data(const Transaction& tx);
  std::string op_withdraw_data(const Transaction& tx);
  std::string op_register_model(const Transaction& tx);
  std::string op_register_donor(const Transaction& tx);
  std::string op_withdraw_donor(const Transaction& tx);
  std::string op_set_model_status(const Transaction& tx);
  std::string op_purchase_access_code(const Transaction& tx);
  std::string op_consume_and_distribute(const Transaction& tx);

  WorldState state_;
};

}  // namespace agora
