#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agora/bytes.hpp"
#include "agora/contracts.hpp"
#include "agora/crypto.hpp"

namespace agora {

// In-process content-addressed storage with named mirror stores. Copies that
// fail re-hashing on read are skipped and flagged, never returned.
class Repository {
 public:
  explicit Repository(std::vector<std::string> store_names = {"primary", "mirror-a",
                                                              "mirror-b"});

  // replicate to the first mirror_count stores; nullopt if the count is bad
  std::optional<crypto::Digest> put(const Bytes& bytes, std::size_t mirror_count);
  std::optional<Bytes> get(const crypto::Digest& hash);

  bool verify_anchored(const crypto::Digest& hash, const Contracts& hub) const {
    return hub.anchored(hash);
  }

  std::size_t store_count() const { return names_.size(); }
  std::vector<std::string> mirrors_of(const crypto::Digest& hash) const;
  const std::vector<std::string>& corruption_flags() const { return flags_; }
  std::vector<crypto::Digest> all_hashes() const;

  // fault-injection hooks
  bool corrupt(const std::string& store, const crypto::Digest& hash, std::size_t byte_index);
  bool erase(const std::string& store, const crypto::Digest& hash);

  // one file per healthy object, named by its hex hash
  void export_dir(const std::string& dir) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::map<crypto::Digest, Bytes>> stores_;
  std::vector<std::string> flags_;
};

}  // namespace agora
