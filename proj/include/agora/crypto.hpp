#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include "agora/bytes.hpp"
#include "agora/rng.hpp"

namespace agora::crypto {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSecretKeySize = 64;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kSymKeySize = 32;

struct Digest {
  std::array<std::uint8_t, kDigestSize> bytes{};

  auto operator<=>(const Digest&) const = default;
  std::string hex() const { return hex_encode(bytes.data(), bytes.size()); }
  static std::optional<Digest> from_hex(std::string_view hex);
  bool is_zero() const;
  Bytes to_vec() const { return Bytes(bytes.begin(), bytes.end()); }
};

struct PublicKey {
  std::array<std::uint8_t, kPublicKeySize> bytes{};

  auto operator<=>(const PublicKey&) const = default;
  std::string hex() const { return hex_encode(bytes.data(), bytes.size()); }
  static std::optional<PublicKey> from_hex(std::string_view hex);
  bool is_zero() const;
};

struct SecretKey {
  std::array<std::uint8_t, kSecretKeySize> bytes{};
};

// Signing identity. The public half doubles as an account / enclave id and
// as the recipient key for pk_encrypt; the secret half never appears in any
// serialized record.
struct KeyPair {
  PublicKey pub;
  SecretKey sec;
};

struct Signature {
  std::array<std::uint8_t, kSignatureSize> bytes{};
  PublicKey signer;

  auto operator<=>(const Signature&) const = default;
  std::string hex() const { return hex_encode(bytes.data(), bytes.size()); }
};

struct SymKey {
  std::array<std::uint8_t, kSymKeySize> bytes{};
  std::string context;

  bool operator==(const SymKey& o) const { return bytes == o.bytes; }
};

// SHA-256.
Digest digest(const std::uint8_t* data, std::size_t n);
Digest digest(const Bytes& data);
Digest digest(std::string_view data);

// Ed25519 pair derived from 32 seed bytes drawn from rng.
KeyPair keygen(Rng& rng);
KeyPair keygen_from_seed(const Bytes& seed32);

Signature sign(const SecretKey& sec, const Bytes& message);
bool verify(const PublicKey& pub, const Bytes& message, const Signature& sig);

// Sealed-box style asymmetric encryption to an identity key: an ephemeral
// key agreement plus an authenticated stream cipher. The ephemeral key is
// derived from (recipient, plaintext), which keeps whole-run replays
// byte-identical without threading an Rng through every channel.
Bytes pk_encrypt(const PublicKey& to, const Bytes& plaintext);
std::optional<Bytes> pk_decrypt(const KeyPair& self, const Bytes& ciphertext);

// Authenticated symmetric encryption with a synthetic nonce derived from
// (key, plaintext). Any single-byte mutation of the ciphertext is detected.
Bytes sym_encrypt(const SymKey& key, const Bytes& plaintext);
std::optional<Bytes> sym_decrypt(const SymKey& key, const Bytes& ciphertext);

// Keyed derivation: distinct (root, context) pairs give unrelated keys.
SymKey kdf(const Bytes& root, std::string_view context);

}  // namespace agora::crypto
