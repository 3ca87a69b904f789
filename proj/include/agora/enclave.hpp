#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "agora/attestation.hpp"
#include "agora/contracts.hpp"
#include "agora/dataset.hpp"
#include "agora/ledger.hpp"
#include "agora/vm.hpp"

namespace agora::enclave {

using agora::Bytes;
using crypto::Digest;
using crypto::PublicKey;
using crypto::Signature;

// Code identity. The VM programs ship inside the image, so the measurement
// covers the exact bytecode a launched instance will run.
struct EnclaveImage {
  std::uint32_t version = 1;
  std::set<EnclaveKind> roles;
  std::string training_program;
  std::string query_program;

  Bytes image_bytes() const;
  Digest measurement() const { return crypto::digest(image_bytes()); }
};

struct ValidationConfig {
  double het_lo = 0.15;
  double het_hi = 0.60;
  std::vector<std::string> requested_traits;
  std::map<std::string, std::pair<double, double>> trait_ranges;
};

enum class Verdict { Valid, Fake };

std::string to_string(Verdict v);

struct ValidationReport {
  Digest data_fingerprint;
  std::uint64_t quality = 1;
  Verdict verdict = Verdict::Fake;
  Digest validator_measurement;
  Signature enclave_sig;

  Bytes signing_bytes() const;
  std::string to_text() const;
  static std::optional<ValidationReport> from_text(std::string_view text);
  Digest report_hash() const { return crypto::digest(to_text()); }
};

struct DonorReceipt {
  Digest model_id;
  PublicKey owner;
  std::uint64_t quality = 0;
  Signature enclave_sig;

  Digest receipt_hash() const;
};

struct SealedBlob {
  Bytes ciphertext;
  Digest measurement_tag;
};

// Trainer authorization for moving trained parameters into a named importer.
struct TransferGrant {
  Digest model_id;
  Digest importer_measurement;
  PublicKey importer_pubkey;
  Signature trainer_sig;
};

Bytes grant_signing_bytes(const Digest& model_id, const Digest& importer_measurement,
                          const PublicKey& importer_pubkey);
TransferGrant make_grant(const crypto::KeyPair& trainer_key, const Digest& model_id,
                         const Digest& importer_measurement,
                         const PublicKey& importer_pubkey);

struct TrainSummary {
  vm::RunStatus status = vm::RunStatus::Running;
  std::string trap_reason;
  std::uint64_t steps = 0;
  std::size_t donors_used = 0;
  std::uint64_t external_bytes = 0;
};

struct QueryResult {
  bool refused = true;
  std::string reason;
  Bytes encrypted_prediction;
  std::uint64_t vm_steps = 0;
};

struct IngestEvent {
  DonorReceipt receipt;
  ValidationReport report;
};

class Enclave {
 public:
  const PublicKey& id() const { return account_.key.pub; }
  EnclaveKind kind() const { return kind_; }
  const Digest& measurement() const { return measurement_; }
  const EnclaveImage& image() const { return image_; }
  Quote make_quote(const Bytes& nonce) const;
  ChainAccount& chain_account() { return account_; }

  // Validation role. The envelope is the dataset's canonical text encrypted
  // to this instance's identity key; failure to open it is a channel error.
  std::optional<ValidationReport> validate(const Bytes& envelope,
                                           const ValidationConfig& cfg);

  // Training role.
  std::optional<DonorReceipt> ingest(const Bytes& envelope, const ValidationReport& report,
                                     const Digest& model_id, const PublicKey& owner,
                                     std::string* why = nullptr);
  TrainSummary train(const vm::Program& program, const std::vector<std::string>& panel,
                     const std::string& label_trait, std::size_t epochs, Rng& rng,
                     const vm::SessionConfig& cfg = {});

  std::optional<SealedBlob> export_trained(const TransferGrant& grant,
                                           std::string* why = nullptr);
  bool import_trained(const SealedBlob& blob, std::string* why = nullptr);

  // Query role (and paid evaluation against a Training instance).
  QueryResult serve_query(const Bytes& envelope, Rng& rng,
                          const vm::SessionConfig& cfg = {});

  SealedBlob seal(const Bytes& plaintext) const;
  std::optional<Bytes> unseal(const SealedBlob& blob) const;

  static constexpr std::size_t kPageSize = 4096;
  std::optional<Bytes> page_out(const Bytes& page) const;
  std::optional<Bytes> page_in(const Bytes& encrypted_page) const;

  // audit hooks
  std::size_t held_dataset_count() const { return held_datasets_.size(); }
  std::vector<double> params_snapshot() const;
  const std::vector<IngestEvent>& ingest_log() const { return ingest_log_; }
  std::uint64_t external_bytes() const { return external_bytes_; }
  std::size_t successful_queries() const { return successful_queries_; }
  bool trained() const { return trained_; }
  std::optional<Digest> model_id() const { return model_id_; }

 private:
  friend std::optional<Enclave> launch(const CpuIdentity* cpu, const EnclaveImage& image,
                                       EnclaveKind kind, Contracts* hub, Chain* chain,
                                       Rng& rng);
  Enclave() = default;

  std::optional<Bytes> open_envelope(const Bytes& envelope) const;

  EnclaveImage image_;
  EnclaveKind kind_ = EnclaveKind::Validation;
  Digest measurement_;
  const CpuIdentity* cpu_ = nullptr;
  ChainAccount account_;
  crypto::SymKey seal_key_;
  crypto::SymKey session_key_;
  Contracts* hub_ = nullptr;
  Chain* chain_ = nullptr;

  std::set<Digest> validated_;
  std::vector<Dataset> held_datasets_;
  std::vector<IngestEvent> ingest_log_;
  vm::ObjectStore params_store_;
  std::optional<vm::Program> query_prog_;
  std::optional<Digest> model_id_;
  std::vector<std::string> panel_;
  std::string label_trait_;
  bool trained_ = false;
  std::set<Digest> served_codes_;
  std::size_t successful_queries_ = 0;
  std::uint64_t external_bytes_ = 0;
};

// Fails only when the requested role is not in the image's role set.
std::optional<Enclave> launch(const CpuIdentity* cpu, const EnclaveImage& image,
                              EnclaveKind kind, Contracts* hub, Chain* chain, Rng& rng);

// What a querying user sends: the access-code secret, a reply key, and the
// dataset to score, all inside one encrypted envelope.
Bytes encode_query_request(const Bytes& code_secret, const PublicKey& requester,
                           const Dataset& dataset);

}  // namespace agora::enclave
