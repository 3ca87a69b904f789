#include "agora/repository.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace agora {

Repository::Repository(std::vector<std::string> store_names)
    : names_(std::move(store_names)) {
  for (const auto& n : names_) stores_[n];
}

std::optional<crypto::Digest> Repository::put(const Bytes& bytes, std::size_t mirror_count) {
  if (mirror_count < 1 || mirror_count > names_.size()) return std::nullopt;
  crypto::Digest hash = crypto::digest(bytes);
  for (std::size_t i = 0; i < mirror_count; ++i) stores_[names_[i]][hash] = bytes;
  return hash;
}

std::optional<Bytes> Repository::get(const crypto::Digest& hash) {
  for (const auto& name : names_) {
    auto& store = stores_[name];
    auto it = store.find(hash);
    if (it == store.end()) continue;
    if (crypto::digest(it->second) == hash) return it->second;
    flags_.push_back(name + ":" + hash.hex());
  }
  return std::nullopt;
}

std::vector<std::string> Repository::mirrors_of(const crypto::Digest& hash) const {
  std::vector<std::string> out;
  for (const auto& name : names_)
    if (stores_.at(name).count(hash)) out.push_back(name);
  return out;
}

std::vector<crypto::Digest> Repository::all_hashes() const {
  std::set<crypto::Digest> seen;
  for (const auto& [name, store] : stores_)
    for (const auto& [hash, bytes] : store) seen.insert(hash);
  return {seen.begin(), seen.end()};
}

bool Repository::corrupt(const std::string& store, const crypto::Digest& hash,
                         std::size_t byte_index) {
  auto sit = stores_.find(store);
  if (sit == stores_.end()) return false;
  auto it = sit->second.find(hash);
  if (it == sit->second.end() || it->second.empty()) return false;
  it->second[byte_index % it->second.size()] ^= 0x01;
  return true;
}

bool Repository::erase(const std::string& store, const crypto::Digest& hash) {
  auto sit = stores_.find(store);
  if (sit == stores_.end()) return false;
  return sit->second.erase(hash) > 0;
}

void Repository::export_dir(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  std::set<crypto::Digest> written;
  for (const auto& name : names_) {
    for (const auto& [hash, bytes] : stores_.at(name)) {
      if (written.count(hash) || crypto::digest(bytes) != hash) continue;
      std::ofstream out(dir + "/" + hash.hex(), std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
      written.insert(hash);
    }
  }
}

}  // namespace agora
