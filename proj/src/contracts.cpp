#include "agora/contracts.hpp"

#include <algorithm>

namespace agora {

std::string to_string(EnclaveKind k) {
  switch (k) {
    case EnclaveKind::Validation: return "validation";
    case EnclaveKind::Training: return "training";
    case EnclaveKind::Query: return "query";
  }
  return "?";
}

std::optional<EnclaveKind> enclave_kind_from(std::string_view s) {
  if (s == "validation") return EnclaveKind::Validation;
  if (s == "training") return EnclaveKind::Training;
  if (s == "query") return EnclaveKind::Query;
  return std::nullopt;
}

std::string to_string(ModelStatus s) {
  switch (s) {
    case ModelStatus::Recruiting: return "recruiting";
    case ModelStatus::Training: return "training";
    case ModelStatus::Trained: return "trained";
  }
  return "?";
}

std::optional<ModelStatus> model_status_from(std::string_view s) {
  if (s == "recruiting") return ModelStatus::Recruiting;
  if (s == "training") return ModelStatus::Training;
  if (s == "trained") return ModelStatus::Trained;
  return std::nullopt;
}

Bytes receipt_signing_bytes(const crypto::Digest& model_id, const crypto::PublicKey& owner,
                            std::uint64_t quality) {
  Encoder e;
  e.str("agora.receipt.v1");
  e.raw(model_id.bytes.data(), model_id.bytes.size());
  e.raw(owner.bytes.data(), owner.bytes.size());
  e.u64(quality);
  return e.out;
}

Bytes consume_signing_bytes(const crypto::Digest& code_hash) {
  Encoder e;
  e.str("agora.consume.v1");
  e.raw(code_hash.bytes.data(), code_hash.bytes.size());
  return e.out;
}

crypto::Digest make_model_id(const crypto::Digest& whitepaper_hash,
                             const crypto::PublicKey& trainer) {
  Encoder e;
  e.str("agora.model.v1");
  e.raw(whitepaper_hash.bytes.data(), whitepaper_hash.bytes.size());
  e.raw(trainer.bytes.data(), trainer.bytes.size());
  return crypto::digest(e.out);
}

namespace {

// arg extraction; each returns false on missing/ill-typed fields
bool arg_digest(const nlohmann::json& args, const char* key, crypto::Digest& out) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_string()) return false;
  auto d = crypto::Digest::from_hex(it->get<std::string>());
  if (!d) return false;
  out = *d;
  return true;
}

bool arg_pk(const nlohmann::json& args, const char* key, crypto::PublicKey& out) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_string()) return false;
  auto k = crypto::PublicKey::from_hex(it->get<std::string>());
  if (!k) return false;
  out = *k;
  return true;
}

bool arg_u64(const nlohmann::json& args, const char* key, std::uint64_t& out) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_number_integer()) return false;
  if (it->is_number_integer() && !it->is_number_unsigned() &&
      it->get<std::int64_t>() < 0)
    return false;
  out = it->get<std::uint64_t>();
  return true;
}

bool arg_str(const nlohmann::json& args, const char* key, std::string& out) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_string()) return false;
  out = it->get<std::string>();
  return true;
}

bool arg_sig(const nlohmann::json& args, const char* key, const crypto::PublicKey& signer,
             crypto::Signature& out) {
  std::string hex;
  if (!arg_str(args, key, hex)) return false;
  Bytes raw;
  if (!hex_decode(hex, raw) || raw.size() != crypto::kSignatureSize) return false;
  std::copy(raw.begin(), raw.end(), out.bytes.begin());
  out.signer = signer;
  return true;
}

}  // namespace

bool Contracts::known_op(const std::string& contract, const std::string& op) const {
  if (contract == "registry")
    return op == "register_package" || op == "register_audit" || op == "register_instance" ||
           op == "register_data" || op == "withdraw_data" || op == "register_model" ||
           op == "register_donor" || op == "withdraw_donor" || op == "set_model_status";
  if (contract == "token")
    return op == "purchase_access_code" || op == "consume_and_distribute";
  return false;
}

std::string Contracts::apply(const Transaction& tx) {
  WorldState before = state_;
  std::string failure = dispatch(tx);
  if (!failure.empty()) state_ = std::move(before);
  return failure;
}

std::string Contracts::dispatch(const Transaction& tx) {
  const std::string& op = tx.call.op;
  if (tx.call.contract == "registry") {
    if (op == "register_package") return op_register_package(tx);
    if (op == "register_audit") return op_register_audit(tx);
    if (op == "register_instance") return op_register_instance(tx);
    if (op == "register_data") return op_register_data(tx);
    if (op == "withdraw_data") return op_withdraw_data(tx);
    if (op == "register_model") return op_register_model(tx);
    if (op == "register_donor") return op_register_donor(tx);
    if (op == "withdraw_donor") return op_withdraw_donor(tx);
    if (op == "set_model_status") return op_set_model_status(tx);
  } else if (tx.call.contract == "token") {
    if (op == "purchase_access_code") return op_purchase_access_code(tx);
    if (op == "consume_and_distribute") return op_consume_and_distribute(tx);
  }
  return "unknown-operation";
}

void Contracts::mint_initial(const crypto::PublicKey& account, std::uint64_t amount) {
  state_.balances[account] += amount;
  state_.initial_mint += amount;
}

std::string Contracts::op_register_package(const Transaction& tx) {
  crypto::Digest source_hash, measurement;
  if (!arg_digest(tx.call.args, "source_hash", source_hash) ||
      !arg_digest(tx.call.args, "measurement", measurement))
    return "args";
  if (state_.packages.count(measurement)) return "duplicate-measurement";
  state_.packages[measurement] =
      EnclavePackage{measurement, source_hash, tx.sender, {}};
  return "";
}

std::string Contracts::op_register_audit(const Transaction& tx) {
  crypto::Digest measurement, report_hash;
  if (!arg_digest(tx.call.args, "measurement", measurement) ||
      !arg_digest(tx.call.args, "report_hash", report_hash))
    return "args";
  auto it = state_.packages.find(measurement);
  if (it == state_.packages.end()) return "unknown-measurement";
  it->second.audits.push_back(AuditEntry{tx.sender, report_hash});
  return "";
}

std::string Contracts::op_register_instance(const Transaction& tx) {
  crypto::Digest measurement, ias_report_hash;
  crypto::PublicKey enclave_pubkey;
  std::string kind_text;
  if (!arg_digest(tx.call.args, "measurement", measurement) ||
      !arg_pk(tx.call.args, "enclave_pubkey", enclave_pubkey) ||
      !arg_digest(tx.call.args, "ias_report_hash", ias_report_hash) ||
      !arg_str(tx.call.args, "kind", kind_text))
    return "args";
  auto kind = enclave_kind_from(kind_text);
  if (!kind) return "args";
  auto pkg = state_.packages.find(measurement);
  if (pkg == state_.packages.end()) return "unknown-measurement";
  if (pkg->second.audits.empty()) return "unaudited-package";
  if (state_.instances.count(enclave_pubkey)) return "duplicate-enclave-key";
  state_.instances[enclave_pubkey] =
      EnclaveInstanceRecord{enclave_pubkey, measurement, tx.sender, ias_report_hash, *kind};
  return "";
}

std::string Contracts::op_register_data(const Transaction& tx) {
  crypto::Digest report_hash;
  if (!arg_digest(tx.call.args, "report_hash", report_hash)) return "args";
  for (const auto& reg : state_.data_regs)
    if (reg.active && reg.owner == tx.sender && reg.report_hash == report_hash)
      return "already-active";
  state_.data_regs.push_back(DataRegistration{tx.sender, report_hash, true});
  return "";
}

std::string Contracts::op_withdraw_data(const Transaction& tx) {
  crypto::Digest report_hash;
  if (!arg_digest(tx.call.args, "report_hash", report_hash)) return "args";
  for (auto it = state_.data_regs.rbegin(); it != state_.data_regs.rend(); ++it) {
    if (it->active && it->report_hash == report_hash) {
      if (it->owner != tx.sender) return "not-owner";
      it->active = false;
      return "";
    }
  }
  return "not-active";
}

std::string Contracts::op_register_model(const Transaction& tx) {
  crypto::Digest whitepaper_hash, query_program_hash;
  crypto::PublicKey training_enclave;
  SplitSpec split;
  std::uint64_t price = 0;
  if (!arg_digest(tx.call.args, "whitepaper_hash", whitepaper_hash) ||
      !arg_pk(tx.call.args, "training_enclave", training_enclave) ||
      !arg_u64(tx.call.args, "price", price) ||
      !arg_u64(tx.call.args, "trainer_bp", split.trainer_bp) ||
      !arg_u64(tx.call.args, "runner_bp", split.runner_bp) ||
      !arg_u64(tx.call.args, "donor_pool_bp", split.donor_pool_bp) ||
      !arg_digest(tx.call.args, "query_program_hash", query_program_hash))
    return "args";
  if (split.trainer_bp + split.runner_bp + split.donor_pool_bp != 10000)
    return "bad-split-sum";
  auto inst = state_.instances.find(training_enclave);
  if (inst == state_.instances.end()) return "unknown-enclave";
  if (inst->second.kind != EnclaveKind::Training) return "not-a-training-enclave";

  crypto::Digest model_id = make_model_id(whitepaper_hash, tx.sender);
  if (state_.models.count(model_id)) return "duplicate-model";
  ModelRecord m;
  m.model_id = model_id;
  m.trainer = tx.sender;
  m.whitepaper_hash = whitepaper_hash;
  m.status = ModelStatus::Recruiting;
  m.training_enclave = training_enclave;
  m.price = price;
  m.split = split;
  m.query_program_hash = query_program_hash;
  state_.models[model_id] = std::move(m);
  return "";
}

std::string Contracts::op_register_donor(const Transaction& tx) {
  crypto::Digest model_id;
  crypto::PublicKey owner;
  std::uint64_t quality = 0;
  if (!arg_digest(tx.call.args, "model_id", model_id) ||
      !arg_pk(tx.call.args, "owner", owner) || !arg_u64(tx.call.args, "quality", quality))
    return "args";
  auto it = state_.models.find(model_id);
  if (it == state_.models.end()) return "unknown-model";
  ModelRecord& m = it->second;
  if (m.status == ModelStatus::Trained) return "model-trained";
  if (owner != tx.sender) return "not-owner";
  if (quality < 1 || quality > 5) return "bad-quality";

  crypto::Signature enclave_sig;
  if (!arg_sig(tx.call.args, "enclave_sig", m.training_enclave, enclave_sig)) return "args";
  if (!crypto::verify(m.training_enclave, receipt_signing_bytes(model_id, owner, quality),
                      enclave_sig))
    return "bad-receipt-signature";

  bool has_active = false;
  for (const auto& reg : state_.data_regs)
    if (reg.active && reg.owner == owner) has_active = true;
  if (!has_active) return "no-active-registration";

  for (const auto& d : m.donors)
    if (d.owner == owner) return "duplicate-donor";

  Encoder receipt;
  receipt.blob(receipt_signing_bytes(model_id, owner, quality));
  receipt.raw(enclave_sig.bytes.data(), enclave_sig.bytes.size());
  m.donors.push_back(DonorEntry{owner, quality, crypto::digest(receipt.out), false});
  return "";
}

std::string Contracts::op_withdraw_donor(const Transaction& tx) {
  crypto::Digest model_id;
  if (!arg_digest(tx.call.args, "model_id", model_id)) return "args";
  auto it = state_.models.find(model_id);
  if (it == state_.models.end()) return "unknown-model";
  ModelRecord& m = it->second;
  if (m.status == ModelStatus::Trained) return "model-trained";
  for (auto& d : m.donors) {
    if (d.owner == tx.sender && !d.withdrawn) {
      d.withdrawn = true;
      return "";
    }
  }
  return "not-a-donor";
}

std::string Contracts::op_set_model_status(const Transaction& tx) {
  crypto::Digest model_id;
  std::string status_text;
  if (!arg_digest(tx.call.args, "model_id", model_id) ||
      !arg_str(tx.call.args, "status", status_text))
    return "args";
  auto status = model_status_from(status_text);
  if (!status) return "args";
  auto it = state_.models.find(model_id);
  if (it == state_.models.end()) return "unknown-model";
  ModelRecord& m = it->second;
  if (tx.sender != m.trainer) return "not-trainer";

  bool legal = (m.status == ModelStatus::Recruiting && *status == ModelStatus::Training) ||
               (m.status == ModelStatus::Training && *status == ModelStatus::Trained);
  if (!legal) return "illegal-transition";

  if (*status == ModelStatus::Trained) {
    crypto::PublicKey runner_enclave;
    if (!arg_pk(tx.call.args, "runner_enclave", runner_enclave)) return "args";
    auto inst = state_.instances.find(runner_enclave);
    if (inst == state_.instances.end()) return "unknown-enclave";
    if (inst->second.kind != EnclaveKind::Query) return "not-a-query-enclave";
    m.runner_enclave = runner_enclave;
  }
  m.status = *status;
  return "";
}

std::string Contracts::op_purchase_access_code(const Transaction& tx) {
  crypto::Digest model_id, code_hash;
  std::uint64_t amount = 0;
  if (!arg_digest(tx.call.args, "model_id", model_id) ||
      !arg_digest(tx.call.args, "code_hash", code_hash) ||
      !arg_u64(tx.call.args, "amount", amount))
    return "args";
  auto it = state_.models.find(model_id);
  if (it == state_.models.end()) return "unknown-model";
  const ModelRecord& m = it->second;
  if (m.status == ModelStatus::Recruiting) return "model-not-ready";
  if (amount < m.price) return "below-price";
  if (state_.codes.count(code_hash)) return "duplicate-code";
  std::uint64_t& balance = state_.balances[tx.sender];
  if (balance < amount) return "insufficient-balance";

  balance -= amount;
  state_.escrow[code_hash] = amount;
  state_.codes[code_hash] = AccessCode{code_hash, model_id, tx.sender, amount, CodeStatus::Paid};
  return "";
}

std::string Contracts::op_consume_and_distribute(const Transaction& tx) {
  crypto::Digest code_hash;
  if (!arg_digest(tx.call.args, "code_hash", code_hash)) return "args";
  auto cit = state_.codes.find(code_hash);
  if (cit == state_.codes.end()) return "unknown-code";
  AccessCode& code = cit->second;
  if (code.status != CodeStatus::Paid) return "already-consumed";

  auto mit = state_.models.find(code.model_id);
  if (mit == state_.models.end()) return "unknown-model";
  ModelRecord& m = mit->second;

  // while the model is still in training, the training enclave serves
  // evaluation queries; once trained, only the runner enclave may consume
  crypto::PublicKey signer = m.training_enclave;
  if (m.status == ModelStatus::Trained) {
    if (!m.runner_enclave) return "no-runner-enclave";
    signer = *m.runner_enclave;
  }
  crypto::Signature enclave_sig;
  if (!arg_sig(tx.call.args, "enclave_sig", signer, enclave_sig)) return "args";
  if (!crypto::verify(signer, consume_signing_bytes(code_hash), enclave_sig))
    return "bad-enclave-signature";

  auto sit = state_.instances.find(signer);
  if (sit == state_.instances.end()) return "unregistered-enclave";
  const crypto::PublicKey& runner_account = sit->second.runner;

  std::uint64_t amount = state_.escrow.at(code_hash);
  std::uint64_t trainer_amt = amount * m.split.trainer_bp / 10000;
  std::uint64_t runner_amt = amount * m.split.runner_bp / 10000;
  std::uint64_t pool = amount * m.split.donor_pool_bp / 10000;

  std::uint64_t quality_sum = 0;
  for (const auto& d : m.donors)
    if (!d.withdrawn) quality_sum += d.quality;

  std::uint64_t distributed = trainer_amt + runner_amt;
  std::vector<CreditEntry> credits;
  credits.push_back(CreditEntry{code_hash, m.trainer, trainer_amt, "trainer"});
  credits.push_back(CreditEntry{code_hash, runner_account, runner_amt, "runner"});
  if (quality_sum > 0) {
    for (const auto& d : m.donors) {
      if (d.withdrawn) continue;
      std::uint64_t share = pool * d.quality / quality_sum;
      credits.push_back(CreditEntry{code_hash, d.owner, share, "donor"});
      distributed += share;
    }
  }
  // flooring leftovers go to the trainer
  credits[0].amount += amount - distributed;

  state_.escrow.erase(code_hash);
  for (const auto& c : credits) {
    state_.balances[c.recipient] += c.amount;
    state_.credits.push_back(c);
  }
  code.status = CodeStatus::Consumed;
  return "";
}

std::optional<AccessCode> Contracts::verify_payment(const crypto::Digest& code_hash) const {
  auto it = state_.codes.find(code_hash);
  if (it == state_.codes.end()) return std::nullopt;
  return it->second;
}

const EnclaveInstanceRecord* Contracts::instance(const crypto::PublicKey& enclave_pubkey) const {
  auto it = state_.instances.find(enclave_pubkey);
  return it == state_.instances.end() ? nullptr : &it->second;
}

const ModelRecord* Contracts::model(const crypto::Digest& model_id) const {
  auto it = state_.models.find(model_id);
  return it == state_.models.end() ? nullptr : &it->second;
}

bool Contracts::is_trainer(const crypto::PublicKey& account) const {
  for (const auto& [id, m] : state_.models)
    if (m.trainer == account) return true;
  return false;
}

bool Contracts::registration_active(const crypto::PublicKey& owner,
                                    const crypto::Digest& report_hash) const {
  for (const auto& reg : state_.data_regs)
    if (reg.active && reg.owner == owner && reg.report_hash == report_hash) return true;
  return false;
}

bool Contracts::anchored(const crypto::Digest& hash) const {
  for (const auto& [measurement, pkg] : state_.packages) {
    if (measurement == hash || pkg.source_hash == hash) return true;
    for (const auto& a : pkg.audits)
      if (a.report_hash == hash) return true;
  }
  for (const auto& [pk, inst] : state_.instances)
    if (inst.ias_report_hash == hash) return true;
  for (const auto& reg : state_.data_regs)
    if (reg.report_hash == hash) return true;
  for (const auto& [id, m] : state_.models) {
    if (m.whitepaper_hash == hash || m.query_program_hash == hash) return true;
    for (const auto& d : m.donors)
      if (d.receipt_hash == hash) return true;
  }
  return false;
}

bool Contracts::query_hash_registered(const crypto::Digest& program_hash) const {
  for (const auto& [id, m] : state_.models)
    if (m.query_program_hash == program_hash) return true;
  return false;
}

std::uint64_t Contracts::balance_of(const crypto::PublicKey& account) const {
  auto it = state_.balances.find(account);
  return it == state_.balances.end() ? 0 : it->second;
}

std::uint64_t Contracts::total_balances() const {
  std::uint64_t sum = 0;
  for (const auto& [pk, v] : state_.balances) sum += v;
  return sum;
}

std::uint64_t Contracts::total_escrow() const {
  std::uint64_t sum = 0;
  for (const auto& [h, v] : state_.escrow) sum += v;
  return sum;
}

}  // namespace agora
