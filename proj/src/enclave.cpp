#include "agora/enclave.hpp"

#include <algorithm>
#include <sstream>

namespace agora::enclave {

Bytes EnclaveImage::image_bytes() const {
  Encoder e;
  e.str("agora.enclave-image.v1");
  e.u32(version);
  std::uint8_t mask = 0;
  for (EnclaveKind k : roles) mask |= static_cast<std::uint8_t>(1u << static_cast<int>(k));
  e.u8(mask);
  e.str(training_program);
  e.str(query_program);
  return e.out;
}

std::string to_string(Verdict v) { return v == Verdict::Valid ? "Valid" : "Fake"; }

Bytes ValidationReport::signing_bytes() const {
  Encoder e;
  e.str("agora.valreport.v1");
  e.raw(data_fingerprint.bytes.data(), data_fingerprint.bytes.size());
  e.u64(quality);
  e.u8(verdict == Verdict::Valid ? 1 : 0);
  e.raw(validator_measurement.bytes.data(), validator_measurement.bytes.size());
  return e.out;
}

std::string ValidationReport::to_text() const {
  std::string out = "validation-report v1\n";
  out += "fingerprint " + data_fingerprint.hex() + "\n";
  out += "quality " + std::to_string(quality) + "\n";
  out += "verdict " + to_string(verdict) + "\n";
  out += "validator " + validator_measurement.hex() + "\n";
  out += "signer " + enclave_sig.signer.hex() + "\n";
  out += "sig " + enclave_sig.hex() + "\n";
  return out;
}

std::optional<ValidationReport> ValidationReport::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "validation-report v1") return std::nullopt;

  auto next_field = [&](const std::string& key, std::string& value) {
    if (!std::getline(in, line)) return false;
    if (line.rfind(key + " ", 0) != 0) return false;
    value = line.substr(key.size() + 1);
    return true;
  };

  ValidationReport r;
  std::string v;
  if (!next_field("fingerprint", v)) return std::nullopt;
  auto fp = crypto::Digest::from_hex(v);
  if (!fp) return std::nullopt;
  r.data_fingerprint = *fp;

  if (!next_field("quality", v)) return std::nullopt;
  try {
    r.quality = std::stoull(v);
  } catch (...) {
    return std::nullopt;
  }

  if (!next_field("verdict", v) || (v != "Valid" && v != "Fake")) return std::nullopt;
  r.verdict = v == "Valid" ? Verdict::Valid : Verdict::Fake;

  if (!next_field("validator", v)) return std::nullopt;
  auto m = crypto::Digest::from_hex(v);
  if (!m) return std::nullopt;
  r.validator_measurement = *m;

  if (!next_field("signer", v)) return std::nullopt;
  auto pk = crypto::PublicKey::from_hex(v);
  if (!pk) return std::nullopt;
  r.enclave_sig.signer = *pk;

  if (!next_field("sig", v)) return std::nullopt;
  Bytes raw;
  if (!hex_decode(v, raw) || raw.size() != crypto::kSignatureSize) return std::nullopt;
  std::copy(raw.begin(), raw.end(), r.enclave_sig.bytes.begin());
  return r;
}

Digest DonorReceipt::receipt_hash() const {
  Encoder e;
  e.blob(receipt_signing_bytes(model_id, owner, quality));
  e.raw(enclave_sig.bytes.data(), enclave_sig.bytes.size());
  return crypto::digest(e.out);
}

Bytes grant_signing_bytes(const Digest& model_id, const Digest& importer_measurement,
                          const PublicKey& importer_pubkey) {
  Encoder e;
  e.str("agora.grant.v1");
  e.raw(model_id.bytes.data(), model_id.bytes.size());
  e.raw(importer_measurement.bytes.data(), importer_measurement.bytes.size());
  e.raw(importer_pubkey.bytes.data(), importer_pubkey.bytes.size());
  return e.out;
}

TransferGrant make_grant(const crypto::KeyPair& trainer_key, const Digest& model_id,
                         const Digest& importer_measurement,
                         const PublicKey& importer_pubkey) {
  TransferGrant g{model_id, importer_measurement, importer_pubkey, {}};
  g.trainer_sig = crypto::sign(
      trainer_key.sec, grant_signing_bytes(model_id, importer_measurement, importer_pubkey));
  return g;
}

std::optional<Enclave> launch(const CpuIdentity* cpu, const EnclaveImage& image,
                              EnclaveKind kind, Contracts* hub, Chain* chain, Rng& rng) {
  if (!image.roles.count(kind)) return std::nullopt;
  Enclave e;
  e.image_ = image;
  e.kind_ = kind;
  e.measurement_ = image.measurement();
  e.cpu_ = cpu;
  e.hub_ = hub;
  e.chain_ = chain;
  e.account_ = create_account(rng);
  Encoder root;
  root.raw(cpu->key.sec.bytes.data(), cpu->key.sec.bytes.size());
  root.raw(e.measurement_.bytes.data(), e.measurement_.bytes.size());
  e.seal_key_ = crypto::kdf(root.out, "agora.seal.v1");
  e.session_key_ = crypto::kdf(rng.next_bytes(32), "agora.session-mem.v1");
  if (!image.query_program.empty())
    e.query_prog_ = vm::assemble(image.query_program, vm::ProgramKind::Query);
  return e;
}

Quote Enclave::make_quote(const Bytes& nonce) const {
  return generate_quote(*cpu_, image_.image_bytes(), account_.key.pub, nonce);
}

std::optional<Bytes> Enclave::open_envelope(const Bytes& envelope) const {
  return crypto::pk_decrypt(account_.key, envelope);
}

std::optional<ValidationReport> Enclave::validate(const Bytes& envelope,
                                                  const ValidationConfig& cfg) {
  if (kind_ != EnclaveKind::Validation) return std::nullopt;
  auto plain = open_envelope(envelope);
  if (!plain) return std::nullopt;

  ValidationReport rep;
  rep.validator_measurement = measurement_;
  bool ok = true;
  auto ds = parse_dataset(to_string(*plain));
  if (!ds) {
    rep.data_fingerprint = crypto::digest(*plain);
    ok = false;
  } else {
    rep.data_fingerprint = fingerprint(*ds);
    std::size_t present = 0;
    for (const auto& t : cfg.requested_traits)
      if (ds->phenotype.count(t)) ++present;
    double c = cfg.requested_traits.empty()
                   ? 1.0
                   : static_cast<double>(present) / cfg.requested_traits.size();
    rep.quality = 1 + (c > 0.2) + (c > 0.4) + (c > 0.6) + (c > 0.8);
    if (validated_.count(rep.data_fingerprint)) ok = false;
    double het = heterozygosity(*ds);
    if (het < cfg.het_lo || het > cfg.het_hi) ok = false;
    for (const auto& [trait, range] : cfg.trait_ranges) {
      auto it = ds->phenotype.find(trait);
      if (it != ds->phenotype.end() &&
          (it->second < range.first || it->second > range.second))
        ok = false;
    }
  }
  rep.verdict = ok ? Verdict::Valid : Verdict::Fake;
  if (ok) validated_.insert(rep.data_fingerprint);
  rep.enclave_sig = crypto::sign(account_.key.sec, rep.signing_bytes());
  return rep;
}

std::optional<DonorReceipt> Enclave::ingest(const Bytes& envelope,
                                            const ValidationReport& report,
                                            const Digest& model_id, const PublicKey& owner,
                                            std::string* why) {
  auto reject = [&](const char* reason) -> std::optional<DonorReceipt> {
    if (why) *why = reason;
    return std::nullopt;
  };
  if (kind_ != EnclaveKind::Training) return reject("not-a-training-enclave");
  auto plain = open_envelope(envelope);
  if (!plain) return reject("channel");
  auto ds = parse_dataset(to_string(*plain));
  if (!ds) return reject("schema");
  if (report.verdict != Verdict::Valid) return reject("fake-report");
  if (!crypto::verify(report.enclave_sig.signer, report.signing_bytes(),
                      report.enclave_sig))
    return reject("bad-report-signature");
  const EnclaveInstanceRecord* validator = hub_->instance(report.enclave_sig.signer);
  if (!validator || validator->kind != EnclaveKind::Validation)
    return reject("unregistered-validator");
  if (!(report.data_fingerprint == fingerprint(*ds))) return reject("fingerprint-mismatch");
  if (!hub_->registration_active(owner, report.report_hash()))
    return reject("no-active-registration");
  const ModelRecord* m = hub_->model(model_id);
  if (!m) return reject("unknown-model");
  if (!(m->training_enclave == id())) return reject("wrong-enclave");
  if (model_id_ && !(*model_id_ == model_id)) return reject("model-mismatch");

  model_id_ = model_id;
  held_datasets_.push_back(std::move(*ds));
  DonorReceipt receipt{model_id, owner, report.quality, {}};
  receipt.enclave_sig = crypto::sign(
      account_.key.sec, receipt_signing_bytes(model_id, owner, report.quality));
  ingest_log_.push_back(IngestEvent{receipt, report});
  return receipt;
}

TrainSummary Enclave::train(const vm::Program& program,
                            const std::vector<std::string>& panel,
                            const std::string& label_trait, std::size_t epochs, Rng& rng,
                            const vm::SessionConfig& cfg) {
  TrainSummary s;
  if (kind_ != EnclaveKind::Training) {
    s.status = vm::RunStatus::Trapped;
    s.trap_reason = "not-a-training-enclave";
    return s;
  }
  std::uint64_t bytes_before = external_bytes_;
  // data is purged on every exit path below, success or not
  auto finish = [&](TrainSummary out) {
    held_datasets_.clear();
    out.external_bytes = external_bytes_ - bytes_before;
    return out;
  };
  if (held_datasets_.empty()) {
    s.status = vm::RunStatus::Trapped;
    s.trap_reason = "no-data";
    return finish(s);
  }
  if (program.kind != vm::ProgramKind::Training) {
    s.status = vm::RunStatus::Trapped;
    s.trap_reason = "not-a-training-program";
    return finish(s);
  }
  std::vector<vm::Record> records;
  for (const Dataset& d : held_datasets_) {
    auto feats = features_for(d, panel);
    auto label = label_for(d, label_trait);
    if (feats && label) records.push_back(vm::Record{*feats, *label});
  }
  s.donors_used = records.size();
  if (records.empty()) {
    s.status = vm::RunStatus::Trapped;
    s.trap_reason = "no-usable-data";
    return finish(s);
  }
  params_store_ = vm::ObjectStore{};
  vm::TrainOutcome out = run_training(program, records, epochs, params_store_, rng, cfg);
  s.status = out.run.status;
  s.trap_reason = out.run.trap_reason;
  s.steps = out.run.steps;
  if (s.status == vm::RunStatus::Halted) {
    trained_ = true;
    panel_ = panel;
    label_trait_ = label_trait;
  }
  return finish(s);
}

namespace {

std::string params_payload(const Digest& model_id, const std::string& label_trait,
                           const std::vector<std::string>& panel,
                           const vm::ObjectStore& store) {
  std::string out = "model-params v1\n";
  out += "model " + model_id.hex() + "\n";
  out += "label " + label_trait + "\n";
  out += "panel " + std::to_string(panel.size()) + "\n";
  for (const auto& rsid : panel) out += rsid + "\n";
  out += store.dump();
  return out;
}

}  // namespace

std::optional<SealedBlob> Enclave::export_trained(const TransferGrant& grant,
                                                  std::string* why) {
  auto reject = [&](const char* reason) -> std::optional<SealedBlob> {
    if (why) *why = reason;
    return std::nullopt;
  };
  if (!trained_ || !model_id_) return reject("not-trained");
  if (!(grant.model_id == *model_id_)) return reject("wrong-model");
  const ModelRecord* m = hub_->model(*model_id_);
  if (!m) return reject("unknown-model");
  if (!(grant.trainer_sig.signer == m->trainer) ||
      !crypto::verify(m->trainer,
                      grant_signing_bytes(grant.model_id, grant.importer_measurement,
                                          grant.importer_pubkey),
                      grant.trainer_sig))
    return reject("bad-grant");
  const EnclaveInstanceRecord* importer = hub_->instance(grant.importer_pubkey);
  if (!importer || !(importer->measurement == grant.importer_measurement))
    return reject("unknown-importer");
  if (importer->kind != EnclaveKind::Query) return reject("not-a-query-enclave");

  Bytes payload = to_bytes(params_payload(*model_id_, label_trait_, panel_, params_store_));
  return SealedBlob{crypto::pk_encrypt(grant.importer_pubkey, payload),
                    grant.importer_measurement};
}

bool Enclave::import_trained(const SealedBlob& blob, std::string* why) {
  auto reject = [&](const char* reason) {
    if (why) *why = reason;
    return false;
  };
  if (!(blob.measurement_tag == measurement_)) return reject("measurement-mismatch");
  auto plain = crypto::pk_decrypt(account_.key, blob.ciphertext);
  if (!plain) return reject("decrypt");

  std::istringstream in{to_string(*plain)};
  std::string line;
  if (!std::getline(in, line) || line != "model-params v1") return reject("malformed");
  if (!std::getline(in, line) || line.rfind("model ", 0) != 0) return reject("malformed");
  auto mid = crypto::Digest::from_hex(line.substr(6));
  if (!mid) return reject("malformed");
  if (!std::getline(in, line) || line.rfind("label ", 0) != 0) return reject("malformed");
  std::string label = line.substr(6);
  if (!std::getline(in, line) || line.rfind("panel ", 0) != 0) return reject("malformed");
  std::size_t count = 0;
  try {
    count = std::stoull(line.substr(6));
  } catch (...) {
    return reject("malformed");
  }
  std::vector<std::string> panel;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line) || line.empty()) return reject("malformed");
    panel.push_back(line);
  }
  std::string store_text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  if (!params_store_.load(store_text)) return reject("malformed");

  model_id_ = *mid;
  label_trait_ = label;
  panel_ = std::move(panel);
  trained_ = true;
  return true;
}

QueryResult Enclave::serve_query(const Bytes& envelope, Rng& rng,
                                 const vm::SessionConfig& cfg) {
  QueryResult r;
  auto refuse = [&](std::string reason) {
    r.refused = true;
    r.reason = std::move(reason);
    return r;
  };
  auto plain = open_envelope(envelope);
  if (!plain) return refuse("channel");

  std::istringstream in{to_string(*plain)};
  std::string line;
  if (!std::getline(in, line) || line != "query-request v1") return refuse("malformed");
  if (!std::getline(in, line) || line.rfind("code ", 0) != 0) return refuse("malformed");
  Bytes code_secret;
  if (!hex_decode(line.substr(5), code_secret)) return refuse("malformed");
  if (!std::getline(in, line) || line.rfind("requester ", 0) != 0)
    return refuse("malformed");
  auto requester = crypto::PublicKey::from_hex(line.substr(10));
  if (!requester) return refuse("malformed");
  std::string dataset_text((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
  auto ds = parse_dataset(dataset_text);
  if (!ds) return refuse("malformed");

  if (!trained_ || !model_id_ || !query_prog_) return refuse("not-ready");
  Digest code_hash = crypto::digest(code_secret);
  auto code = hub_->verify_payment(code_hash);
  if (!code) return refuse("unknown-code");
  if (code->status != CodeStatus::Paid) return refuse("consumed");
  if (!(code->model_id == *model_id_)) return refuse("wrong-model");
  if (served_codes_.count(code_hash)) return refuse("already-served");
  auto feats = features_for(*ds, panel_);
  if (!feats) return refuse("panel-mismatch");

  vm::OutputGate gate;
  gate.is_registered = [this](const Digest& h) { return hub_->query_hash_registered(h); };
  vm::QueryOutcome out =
      run_query(*query_prog_, {vm::Record{*feats, 0.0}}, params_store_, gate, rng, cfg);
  if (out.refused) return refuse("gate");
  r.vm_steps = out.run.steps;
  if (out.run.status != vm::RunStatus::Halted)
    return refuse("trap:" + out.run.trap_reason);

  Signature sig = crypto::sign(account_.key.sec, consume_signing_bytes(code_hash));
  auto submitted = chain_->submit_tx(account_.make_tx(
      "token", "consume_and_distribute",
      {{"code_hash", code_hash.hex()}, {"enclave_sig", sig.hex()}}));
  if (!submitted.accepted) {
    --account_.next_nonce;  // the rejected tx never landed
    return refuse("chain-reject:" + submitted.reason);
  }

  r.encrypted_prediction = crypto::pk_encrypt(*requester, out.emitted);
  external_bytes_ += r.encrypted_prediction.size();
  served_codes_.insert(code_hash);
  ++successful_queries_;
  r.refused = false;
  r.reason.clear();
  return r;
}

SealedBlob Enclave::seal(const Bytes& plaintext) const {
  return SealedBlob{crypto::sym_encrypt(seal_key_, plaintext), measurement_};
}

std::optional<Bytes> Enclave::unseal(const SealedBlob& blob) const {
  if (!(blob.measurement_tag == measurement_)) return std::nullopt;
  return crypto::sym_decrypt(seal_key_, blob.ciphertext);
}

std::optional<Bytes> Enclave::page_out(const Bytes& page) const {
  if (page.size() != kPageSize) return std::nullopt;
  return crypto::sym_encrypt(session_key_, page);
}

std::optional<Bytes> Enclave::page_in(const Bytes& encrypted_page) const {
  auto page = crypto::sym_decrypt(session_key_, encrypted_page);
  if (!page || page->size() != kPageSize) return std::nullopt;
  return page;
}

std::vector<double> Enclave::params_snapshot() const {
  auto v = params_store_.committed("w");
  if (!v) return {};
  if (std::holds_alternative<double>(*v)) return {std::get<double>(*v)};
  return std::get<std::vector<double>>(*v);
}

Bytes encode_query_request(const Bytes& code_secret, const PublicKey& requester,
                           const Dataset& dataset) {
  std::string text = "query-request v1\n";
  text += "code " + hex_encode(code_secret) + "\n";
  text += "requester " + requester.hex() + "\n";
  text += canonical_text(dataset);
  return to_bytes(text);
}

}  // namespace agora::enclave
