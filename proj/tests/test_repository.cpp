#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "agora/repository.hpp"

using namespace agora;

TEST_CASE("put replicates and get round trips") {
  Repository repo;
  Bytes data = to_bytes("an audit report");
  auto hash = repo.put(data, 2);
  REQUIRE(hash.has_value());
  CHECK(*hash == crypto::digest(data));
  CHECK(repo.mirrors_of(*hash) == std::vector<std::string>{"primary", "mirror-a"});
  auto back = repo.get(*hash);
  REQUIRE(back.has_value());
  CHECK(*back == data);

  CHECK_FALSE(repo.put(data, 0).has_value());
  CHECK_FALSE(repo.put(data, 4).has_value());
  CHECK(repo.put(data, 1) == hash);  // idempotent
}

TEST_CASE("reads survive a corrupted mirror and flag it") {
  Repository repo;
  Bytes data = to_bytes("replicated twice");
  auto hash = *repo.put(data, 2);
  REQUIRE(repo.corrupt("primary", hash, 3));
  auto back = repo.get(hash);
  REQUIRE(back.has_value());
  CHECK(*back == data);
  REQUIRE(repo.corruption_flags().size() == 1);
  CHECK(repo.corruption_flags()[0] == "primary:" + hash.hex());
}

TEST_CASE("all copies corrupt or missing reports missing, never wrong bytes") {
  Repository repo;
  Bytes data = to_bytes("soon to be destroyed");
  auto hash = *repo.put(data, 3);
  repo.corrupt("primary", hash, 0);
  repo.corrupt("mirror-a", hash, 1);
  repo.erase("mirror-b", hash);
  CHECK_FALSE(repo.get(hash).has_value());
  CHECK(repo.corruption_flags().size() == 2);

  CHECK_FALSE(repo.get(crypto::digest("never stored")).has_value());
}

TEST_CASE("fuzzed corruption never yields mismatched bytes") {
  Repository repo;
  Rng rng(606);
  std::vector<std::pair<crypto::Digest, Bytes>> objects;
  for (int i = 0; i < 1000; ++i) {
    Bytes data = rng.next_bytes(1 + rng.below(100));
    std::size_t n = 1 + rng.below(3);
    auto hash = repo.put(data, n);
    REQUIRE(hash.has_value());
    objects.emplace_back(*hash, data);
  }
  const std::vector<std::string> stores = {"primary", "mirror-a", "mirror-b"};
  for (const auto& [hash, data] : objects) {
    for (const auto& s : stores) {
      if (rng.below(3) == 0) repo.corrupt(s, hash, rng.below(64));
      if (rng.below(6) == 0) repo.erase(s, hash);
    }
  }
  for (const auto& [hash, data] : objects) {
    auto got = repo.get(hash);
    if (got) {
      CHECK(crypto::digest(*got) == hash);
      CHECK(*got == data);
    }
  }
}

TEST_CASE("anchoring check consults the mined registry") {
  Clock clock;
  Contracts contracts;
  Chain chain(&contracts, &clock);
  Rng rng(707);
  ChainAccount miner = create_account(rng), dev = create_account(rng);
  Repository repo;

  Bytes report = to_bytes("report body");
  auto hash = *repo.put(report, 2);
  CHECK_FALSE(repo.verify_anchored(hash, contracts));

  chain.submit_tx(dev.make_tx("registry", "register_package",
                              {{"source_hash", hash.hex()},
                               {"measurement", crypto::digest("img").hex()}}));
  CHECK_FALSE(repo.verify_anchored(hash, contracts));  // pending only
  chain.mine_block(miner);
  CHECK(repo.verify_anchored(hash, contracts));
}

TEST_CASE("export writes one file per healthy object") {
  Repository repo;
  Bytes a = to_bytes("object a"), b = to_bytes("object b");
  auto ha = *repo.put(a, 1);
  auto hb = *repo.put(b, 2);

  std::string dir = (std::filesystem::temp_directory_path() / "agora_repo_export").string();
  std::filesystem::remove_all(dir);
  repo.export_dir(dir);

  std::ifstream fa(dir + "/" + ha.hex(), std::ios::binary);
  REQUIRE(fa.good());
  std::string content((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  CHECK(content == "object a");
  CHECK(std::filesystem::exists(dir + "/" + hb.hex()));
  std::filesystem::remove_all(dir);
}
