#include "agora/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace agora::crypto {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("sodium_init failed");
}

// Domain tags keep the derived-nonce constructions for the two encryption
// paths from ever colliding.
constexpr std::string_view kPkEphemeralTag = "agora.pkenc.ephemeral.v1";
constexpr std::string_view kSymNonceTag = "agora.symenc.nonce.v1";

}  // namespace

std::optional<Digest> Digest::from_hex(std::string_view hex) {
  Bytes raw;
  if (!hex_decode(hex, raw) || raw.size() != kDigestSize) return std::nullopt;
  Digest d;
  std::memcpy(d.bytes.data(), raw.data(), kDigestSize);
  return d;
}

bool Digest::is_zero() const {
  for (auto b : bytes)
    if (b) return false;
  return true;
}

std::optional<PublicKey> PublicKey::from_hex(std::string_view hex) {
  Bytes raw;
  if (!hex_decode(hex, raw) || raw.size() != kPublicKeySize) return std::nullopt;
  PublicKey k;
  std::memcpy(k.bytes.data(), raw.data(), kPublicKeySize);
  return k;
}

bool PublicKey::is_zero() const {
  for (auto b : bytes)
    if (b) return false;
  return true;
}

Digest digest(const std::uint8_t* data, std::size_t n) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data, n);
  return d;
}

Digest digest(const Bytes& data) { return digest(data.data(), data.size()); }

Digest digest(std::string_view data) {
  return digest(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

KeyPair keygen_from_seed(const Bytes& seed32) {
  ensure_sodium();
  if (seed32.size() != crypto_sign_SEEDBYTES) throw std::invalid_argument("bad seed size");
  KeyPair kp;
  crypto_sign_seed_keypair(kp.pub.bytes.data(), kp.sec.bytes.data(), seed32.data());
  return kp;
}

KeyPair keygen(Rng& rng) { return keygen_from_seed(rng.next_bytes(crypto_sign_SEEDBYTES)); }

Signature sign(const SecretKey& sec, const Bytes& message) {
  ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                       sec.bytes.data());
  // ed25519 secret keys carry the public half in their upper 32 bytes
  std::memcpy(sig.signer.bytes.data(), sec.bytes.data() + 32, 32);
  return sig;
}

bool verify(const PublicKey& pub, const Bytes& message, const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                     pub.bytes.data()) == 0;
}

Bytes pk_encrypt(const PublicKey& to, const Bytes& plaintext) {
  ensure_sodium();
  std::uint8_t recipient_curve[crypto_scalarmult_curve25519_BYTES];
  if (crypto_sign_ed25519_pk_to_curve25519(recipient_curve, to.bytes.data()) != 0)
    throw std::invalid_argument("recipient key not convertible");

  // Ephemeral key bound to (recipient, plaintext) so replays are stable.
  Encoder seed_input;
  seed_input.str(kPkEphemeralTag);
  seed_input.raw(to.bytes.data(), to.bytes.size());
  seed_input.blob(plaintext);
  Digest seed = digest(seed_input.out);

  std::uint8_t eph_pk[crypto_box_PUBLICKEYBYTES];
  std::uint8_t eph_sk[crypto_box_SECRETKEYBYTES];
  crypto_box_seed_keypair(eph_pk, eph_sk, seed.bytes.data());

  std::uint8_t nonce[crypto_box_NONCEBYTES];
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, sizeof nonce);
  crypto_generichash_update(&st, eph_pk, sizeof eph_pk);
  crypto_generichash_update(&st, recipient_curve, sizeof recipient_curve);
  crypto_generichash_final(&st, nonce, sizeof nonce);

  Bytes out(crypto_box_PUBLICKEYBYTES + plaintext.size() + crypto_box_MACBYTES);
  std::memcpy(out.data(), eph_pk, crypto_box_PUBLICKEYBYTES);
  if (crypto_box_easy(out.data() + crypto_box_PUBLICKEYBYTES, plaintext.data(),
                      plaintext.size(), nonce, recipient_curve, eph_sk) != 0)
    throw std::runtime_error("box failed");
  return out;
}

std::optional<Bytes> pk_decrypt(const KeyPair& self, const Bytes& ciphertext) {
  ensure_sodium();
  if (ciphertext.size() < crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES) return std::nullopt;

  std::uint8_t self_curve_sk[crypto_scalarmult_curve25519_BYTES];
  if (crypto_sign_ed25519_sk_to_curve25519(self_curve_sk, self.sec.bytes.data()) != 0)
    return std::nullopt;
  std::uint8_t self_curve_pk[crypto_scalarmult_curve25519_BYTES];
  if (crypto_sign_ed25519_pk_to_curve25519(self_curve_pk, self.pub.bytes.data()) != 0)
    return std::nullopt;

  const std::uint8_t* eph_pk = ciphertext.data();
  std::uint8_t nonce[crypto_box_NONCEBYTES];
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, sizeof nonce);
  crypto_generichash_update(&st, eph_pk, crypto_box_PUBLICKEYBYTES);
  crypto_generichash_update(&st, self_curve_pk, sizeof self_curve_pk);
  crypto_generichash_final(&st, nonce, sizeof nonce);

  Bytes plain(ciphertext.size() - crypto_box_PUBLICKEYBYTES - crypto_box_MACBYTES);
  if (crypto_box_open_easy(plain.data(), ciphertext.data() + crypto_box_PUBLICKEYBYTES,
                           ciphertext.size() - crypto_box_PUBLICKEYBYTES, nonce, eph_pk,
                           self_curve_sk) != 0)
    return std::nullopt;
  return plain;
}

Bytes sym_encrypt(const SymKey& key, const Bytes& plaintext) {
  ensure_sodium();
  Encoder nonce_input;
  nonce_input.str(kSymNonceTag);
  nonce_input.raw(key.bytes.data(), key.bytes.size());
  nonce_input.blob(plaintext);
  Digest nd = digest(nonce_input.out);

  std::uint8_t nonce[crypto_secretbox_NONCEBYTES];
  std::memcpy(nonce, nd.bytes.data(), crypto_secretbox_NONCEBYTES);

  Bytes out(crypto_secretbox_NONCEBYTES + plaintext.size() + crypto_secretbox_MACBYTES);
  std::memcpy(out.data(), nonce, crypto_secretbox_NONCEBYTES);
  crypto_secretbox_easy(out.data() + crypto_secretbox_NONCEBYTES, plaintext.data(),
                        plaintext.size(), nonce, key.bytes.data());
  return out;
}

std::optional<Bytes> sym_decrypt(const SymKey& key, const Bytes& ciphertext) {
  ensure_sodium();
  if (ciphertext.size() < crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES)
    return std::nullopt;
  Bytes plain(ciphertext.size() - crypto_secretbox_NONCEBYTES - crypto_secretbox_MACBYTES);
  if (crypto_secretbox_open_easy(plain.data(), ciphertext.data() + crypto_secretbox_NONCEBYTES,
                                 ciphertext.size() - crypto_secretbox_NONCEBYTES,
                                 ciphertext.data(), key.bytes.data()) != 0)
    return std::nullopt;
  return plain;
}

SymKey kdf(const Bytes& root, std::string_view context) {
  ensure_sodium();
  Digest root_key = digest(root);
  SymKey out;
  out.context = std::string(context);
  crypto_generichash(out.bytes.data(), out.bytes.size(),
                     reinterpret_cast<const std::uint8_t*>(context.data()), context.size(),
                     root_key.bytes.data(), root_key.bytes.size());
  return out;
}

}  // namespace agora::crypto
