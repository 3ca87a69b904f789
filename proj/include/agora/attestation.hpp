#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "agora/bytes.hpp"
#include "agora/clock.hpp"
#include "agora/crypto.hpp"
#include "agora/rng.hpp"

namespace agora {

// The CPU-resident key. Lives only in the simulator and (public half) in the
// attestation service's private registry.
struct CpuIdentity {
  crypto::KeyPair key;
};

struct Quote {
  crypto::Digest measurement;
  crypto::PublicKey enclave_pubkey;
  Bytes nonce;
  crypto::Signature cpu_sig;

  Bytes signing_bytes() const;
};

struct AttestationReport {
  crypto::Digest measurement;
  crypto::PublicKey enclave_pubkey;
  Bytes nonce;
  bool ok = false;
  std::uint64_t timestamp = 0;
  crypto::Signature ias_sig;

  Bytes signing_bytes() const;
  std::string to_text() const;
  static std::optional<AttestationReport> from_text(std::string_view text);
  crypto::Digest report_hash() const { return crypto::digest(to_text()); }
};

Quote generate_quote(const CpuIdentity& cpu, const Bytes& image,
                     const crypto::PublicKey& enclave_pubkey, const Bytes& nonce);

// The mock verification service: the only party that knows which CPU keys are
// genuine, plus the report-signing key everyone trusts.
class AttestationService {
 public:
  AttestationService(Rng& rng, Clock* clock);

  CpuIdentity manufacture_cpu(Rng& rng);
  AttestationReport verify(const Quote& quote) const;
  const crypto::PublicKey& ias_public() const { return key_.pub; }

  // test hooks; nothing outside the tests may touch the registry
  bool cpu_registered(const crypto::PublicKey& cpu_public) const {
    return cpus_.count(cpu_public) > 0;
  }
  std::size_t cpu_count() const { return cpus_.size(); }

 private:
  crypto::KeyPair key_;
  Clock* clock_;
  std::set<crypto::PublicKey> cpus_;
};

// Service-provider pass-through; keeps an exchange log for audits.
class AttestationProxy {
 public:
  explicit AttestationProxy(const AttestationService* ias) : ias_(ias) {}

  AttestationReport forward(const Quote& quote);
  const std::vector<std::pair<Quote, AttestationReport>>& log() const { return log_; }

 private:
  const AttestationService* ias_;
  std::vector<std::pair<Quote, AttestationReport>> log_;
};

// True iff the report is signed by the given service key and its verdict is OK.
bool verify_report(const AttestationReport& report, const crypto::PublicKey& ias_public);

}  // namespace agora
