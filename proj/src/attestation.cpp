#include "agora/attestation.hpp"

#include <sstream>

namespace agora {

Bytes Quote::signing_bytes() const {
  Encoder e;
  e.str("agora.quote.v1");
  e.raw(measurement.bytes.data(), measurement.bytes.size());
  e.raw(enclave_pubkey.bytes.data(), enclave_pubkey.bytes.size());
  e.blob(nonce);
  return e.out;
}

Bytes AttestationReport::signing_bytes() const {
  Encoder e;
  e.str("agora.report.v1");
  e.raw(measurement.bytes.data(), measurement.bytes.size());
  e.raw(enclave_pubkey.bytes.data(), enclave_pubkey.bytes.size());
  e.blob(nonce);
  e.u8(ok ? 1 : 0);
  e.u64(timestamp);
  return e.out;
}

std::string AttestationReport::to_text() const {
  std::string out = "attestation-report v1\n";
  out += "measurement " + measurement.hex() + "\n";
  out += "enclave " + enclave_pubkey.hex() + "\n";
  out += "nonce " + hex_encode(nonce) + "\n";
  out += std::string("verdict ") + (ok ? "OK" : "INVALID") + "\n";
  out += "timestamp " + std::to_string(timestamp) + "\n";
  out += "signer " + ias_sig.signer.hex() + "\n";
  out += "sig " + ias_sig.hex() + "\n";
  return out;
}

std::optional<AttestationReport> AttestationReport::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "attestation-report v1") return std::nullopt;

  auto next_field = [&](const std::string& key, std::string& value) {
    if (!std::getline(in, line)) return false;
    if (line.rfind(key + " ", 0) != 0) return false;
    value = line.substr(key.size() + 1);
    return true;
  };

  AttestationReport r;
  std::string v;
  if (!next_field("measurement", v)) return std::nullopt;
  auto measurement = crypto::Digest::from_hex(v);
  if (!measurement) return std::nullopt;
  r.measurement = *measurement;

  if (!next_field("enclave", v)) return std::nullopt;
  auto pk = crypto::PublicKey::from_hex(v);
  if (!pk) return std::nullopt;
  r.enclave_pubkey = *pk;

  if (!next_field("nonce", v) || !hex_decode(v, r.nonce)) return std::nullopt;

  if (!next_field("verdict", v) || (v != "OK" && v != "INVALID")) return std::nullopt;
  r.ok = v == "OK";

  if (!next_field("timestamp", v)) return std::nullopt;
  try {
    r.timestamp = std::stoull(v);
  } catch (...) {
    return std::nullopt;
  }

  if (!next_field("signer", v)) return std::nullopt;
  auto signer = crypto::PublicKey::from_hex(v);
  if (!signer) return std::nullopt;
  r.ias_sig.signer = *signer;

  if (!next_field("sig", v)) return std::nullopt;
  Bytes sig_raw;
  if (!hex_decode(v, sig_raw) || sig_raw.size() != crypto::kSignatureSize) return std::nullopt;
  std::copy(sig_raw.begin(), sig_raw.end(), r.ias_sig.bytes.begin());
  return r;
}

Quote generate_quote(const CpuIdentity& cpu, const Bytes& image,
                     const crypto::PublicKey& enclave_pubkey, const Bytes& nonce) {
  Quote q;
  q.measurement = crypto::digest(image);
  q.enclave_pubkey = enclave_pubkey;
  q.nonce = nonce;
  q.cpu_sig = crypto::sign(cpu.key.sec, q.signing_bytes());
  return q;
}

AttestationService::AttestationService(Rng& rng, Clock* clock)
    : key_(crypto::keygen(rng)), clock_(clock) {}

CpuIdentity AttestationService::manufacture_cpu(Rng& rng) {
  CpuIdentity cpu{crypto::keygen(rng)};
  cpus_.insert(cpu.key.pub);
  return cpu;
}

AttestationReport AttestationService::verify(const Quote& quote) const {
  AttestationReport r;
  r.measurement = quote.measurement;
  r.enclave_pubkey = quote.enclave_pubkey;
  r.nonce = quote.nonce;
  r.ok = cpus_.count(quote.cpu_sig.signer) > 0 &&
         crypto::verify(quote.cpu_sig.signer, quote.signing_bytes(), quote.cpu_sig);
  r.timestamp = clock_ ? clock_->now() : 0;
  r.ias_sig = crypto::sign(key_.sec, r.signing_bytes());
  return r;
}

AttestationReport AttestationProxy::forward(const Quote& quote) {
  AttestationReport r = ias_->verify(quote);
  log_.emplace_back(quote, r);
  return r;
}

bool verify_report(const AttestationReport& report, const crypto::PublicKey& ias_public) {
  return report.ias_sig.signer == ias_public &&
         crypto::verify(ias_public, report.signing_bytes(), report.ias_sig) && report.ok;
}

}  // namespace agora
