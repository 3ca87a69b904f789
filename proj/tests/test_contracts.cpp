#include <doctest.h>

#include <map>
#include <vector>

#include "agora/contracts.hpp"

using namespace agora;
using crypto::Digest;
using crypto::PublicKey;

namespace {

// Independent split oracle, deliberately written from the distribution rule
// itself (wide integers, explicit remainder) rather than the contract code.
struct OracleDonor {
  std::uint64_t quality;
  bool withdrawn;
};

struct OracleResult {
  std::uint64_t trainer = 0;
  std::uint64_t runner = 0;
  std::vector<std::uint64_t> donor_shares;
};

OracleResult oracle_split(std::uint64_t amount, const SplitSpec& split,
                          const std::vector<OracleDonor>& donors) {
  using u128 = unsigned __int128;
  OracleResult r;
  r.trainer = static_cast<std::uint64_t>(u128(amount) * split.trainer_bp / 10000);
  r.runner = static_cast<std::uint64_t>(u128(amount) * split.runner_bp / 10000);
  u128 pool = u128(amount) * split.donor_pool_bp / 10000;

  std::uint64_t quality_sum = 0;
  for (const auto& d : donors)
    if (!d.withdrawn) quality_sum += d.quality;

  std::uint64_t handed_out = r.trainer + r.runner;
  for (const auto& d : donors) {
    std::uint64_t share = 0;
    if (!d.withdrawn && quality_sum > 0)
      share = static_cast<std::uint64_t>(pool * d.quality / quality_sum);
    r.donor_shares.push_back(share);
    handed_out += share;
  }
  r.trainer += amount - handed_out;
  return r;
}

struct Market {
  Clock clock;
  Contracts contracts;
  Chain chain{&contracts, &clock};
  Rng rng{31337};
  ChainAccount miner = create_account(rng);
  ChainAccount developer = create_account(rng);
  ChainAccount auditor = create_account(rng);
  ChainAccount runner = create_account(rng);
  ChainAccount trainer = create_account(rng);
  std::vector<ChainAccount> owners;
  ChainAccount user = create_account(rng);

  // enclave identities double as chain accounts for consume txs
  ChainAccount validation_enclave = create_account(rng);
  ChainAccount training_enclave = create_account(rng);
  ChainAccount query_enclave = create_account(rng);

  Digest measurement = crypto::digest("enclave image bytes");
  Digest source_hash = crypto::digest("enclave source bytes");
  Digest whitepaper_hash = crypto::digest("whitepaper");
  Digest query_program_hash = crypto::digest("query program");

  Market() {
    for (int i = 0; i < 4; ++i) owners.push_back(create_account(rng));
    for (auto* a : {&miner, &developer, &auditor, &runner, &trainer, &user})
      contracts.mint_initial(a->key.pub, 1000);
    for (auto& o : owners) contracts.mint_initial(o.key.pub, 1000);
  }

  std::string run_tx(ChainAccount& from, const std::string& contract, const std::string& op,
                     nlohmann::json args) {
    auto submitted = chain.submit_tx(from.make_tx(contract, op, std::move(args)));
    if (!submitted.accepted) return "submit:" + submitted.reason;
    const Block& b = chain.mine_block(miner);
    return b.results.back();
  }

  void onboard() {
    REQUIRE(run_tx(developer, "registry", "register_package",
                   {{"source_hash", source_hash.hex()}, {"measurement", measurement.hex()}}) ==
            "ok");
    REQUIRE(run_tx(auditor, "registry", "register_audit",
                   {{"measurement", measurement.hex()},
                    {"report_hash", crypto::digest("audit report").hex()}}) == "ok");
    auto reg_inst = [&](ChainAccount& enclave, const char* kind) {
      REQUIRE(run_tx(runner, "registry", "register_instance",
                     {{"measurement", measurement.hex()},
                      {"enclave_pubkey", enclave.key.pub.hex()},
                      {"ias_report_hash", crypto::digest(std::string("ias ") + kind).hex()},
                      {"kind", kind}}) == "ok");
    };
    reg_inst(validation_enclave, "validation");
    reg_inst(training_enclave, "training");
    reg_inst(query_enclave, "query");
  }

  Digest register_model(std::uint64_t price, SplitSpec split) {
    REQUIRE(run_tx(trainer, "registry", "register_model",
                   {{"whitepaper_hash", whitepaper_hash.hex()},
                    {"training_enclave", training_enclave.key.pub.hex()},
                    {"price", price},
                    {"trainer_bp", split.trainer_bp},
                    {"runner_bp", split.runner_bp},
                    {"donor_pool_bp", split.donor_pool_bp},
                    {"query_program_hash", query_program_hash.hex()}}) == "ok");
    return make_model_id(whitepaper_hash, trainer.key.pub);
  }

  std::string register_donor(ChainAccount& owner, const Digest& model_id,
                             std::uint64_t quality) {
    auto reg = run_tx(owner, "registry", "register_data",
                      {{"report_hash", crypto::digest("report " + owner.key.pub.hex()).hex()}});
    if (reg != "ok" && reg != "failed:already-active") return reg;
    crypto::Signature sig =
        crypto::sign(training_enclave.key.sec,
                     receipt_signing_bytes(model_id, owner.key.pub, quality));
    return run_tx(owner, "registry", "register_donor",
                  {{"model_id", model_id.hex()},
                   {"owner", owner.key.pub.hex()},
                   {"quality", quality},
                   {"enclave_sig", sig.hex()}});
  }

  std::string purchase(ChainAccount& payer, const Digest& model_id, const Digest& code_hash,
                       std::uint64_t amount) {
    return run_tx(payer, "token", "purchase_access_code",
                  {{"model_id", model_id.hex()},
                   {"code_hash", code_hash.hex()},
                   {"amount", amount}});
  }

  std::string consume(ChainAccount& enclave, const Digest& code_hash) {
    crypto::Signature sig =
        crypto::sign(enclave.key.sec, consume_signing_bytes(code_hash));
    return run_tx(enclave, "token", "consume_and_distribute",
                  {{"code_hash", code_hash.hex()}, {"enclave_sig", sig.hex()}});
  }

  bool conserved() const {
    return contracts.total_balances() + contracts.total_escrow() ==
           contracts.state().initial_mint;
  }
};

}  // namespace

TEST_CASE("package registration rejects duplicates") {
  Market m;
  CHECK(m.run_tx(m.developer, "registry", "register_package",
                 {{"source_hash", m.source_hash.hex()},
                  {"measurement", m.measurement.hex()}}) == "ok");
  CHECK(m.run_tx(m.developer, "registry", "register_package",
                 {{"source_hash", m.source_hash.hex()},
                  {"measurement", m.measurement.hex()}}) ==
        "failed:duplicate-measurement");
  CHECK(m.contracts.state().packages.size() == 1);

  Digest other = crypto::digest("second image");
  CHECK(m.run_tx(m.developer, "registry", "register_package",
                 {{"source_hash", m.source_hash.hex()}, {"measurement", other.hex()}}) == "ok");
  CHECK(m.contracts.state().packages.size() == 2);
}

TEST_CASE("audits append in order and need a known package") {
  Market m;
  CHECK(m.run_tx(m.auditor, "registry", "register_audit",
                 {{"measurement", m.measurement.hex()},
                  {"report_hash", crypto::digest("r1").hex()}}) ==
        "failed:unknown-measurement");
  m.run_tx(m.developer, "registry", "register_package",
           {{"source_hash", m.source_hash.hex()}, {"measurement", m.measurement.hex()}});
  CHECK(m.run_tx(m.auditor, "registry", "register_audit",
                 {{"measurement", m.measurement.hex()},
                  {"report_hash", crypto::digest("r1").hex()}}) == "ok");
  CHECK(m.run_tx(m.developer, "registry", "register_audit",
                 {{"measurement", m.measurement.hex()},
                  {"report_hash", crypto::digest("r2").hex()}}) == "ok");
  const auto& audits = m.contracts.state().packages.at(m.measurement).audits;
  REQUIRE(audits.size() == 2);
  CHECK(audits[0].report_hash == crypto::digest("r1"));
  CHECK(audits[0].auditor == m.auditor.key.pub);
  CHECK(audits[1].report_hash == crypto::digest("r2"));
}

TEST_CASE("instance registration requires an audited package") {
  Market m;
  m.run_tx(m.developer, "registry", "register_package",
           {{"source_hash", m.source_hash.hex()}, {"measurement", m.measurement.hex()}});
  CHECK(m.run_tx(m.runner, "registry", "register_instance",
                 {{"measurement", m.measurement.hex()},
                  {"enclave_pubkey", m.training_enclave.key.pub.hex()},
                  {"ias_report_hash", crypto::digest("ias").hex()},
                  {"kind", "training"}}) == "failed:unaudited-package");
  m.run_tx(m.auditor, "registry", "register_audit",
           {{"measurement", m.measurement.hex()},
            {"report_hash", crypto::digest("audit").hex()}});
  CHECK(m.run_tx(m.runner, "registry", "register_instance",
                 {{"measurement", m.measurement.hex()},
                  {"enclave_pubkey", m.training_enclave.key.pub.hex()},
                  {"ias_report_hash", crypto::digest("ias").hex()},
                  {"kind", "training"}}) == "ok");
  CHECK(m.run_tx(m.runner, "registry", "register_instance",
                 {{"measurement", m.measurement.hex()},
                  {"enclave_pubkey", m.training_enclave.key.pub.hex()},
                  {"ias_report_hash", crypto::digest("ias2").hex()},
                  {"kind", "query"}}) == "failed:duplicate-enclave-key");
}

TEST_CASE("data registration lifecycle") {
  Market m;
  Digest report = crypto::digest("validation report");
  ChainAccount& owner = m.owners[0];
  ChainAccount& other = m.owners[1];

  CHECK(m.run_tx(owner, "registry", "register_data", {{"report_hash", report.hex()}}) == "ok");
  CHECK(m.run_tx(owner, "registry", "register_data", {{"report_hash", report.hex()}}) ==
        "failed:already-active");
  CHECK(m.run_tx(other, "registry", "withdraw_data", {{"report_hash", report.hex()}}) ==
        "failed:not-owner");
  CHECK(m.run_tx(owner, "registry", "withdraw_data", {{"report_hash", report.hex()}}) == "ok");
  CHECK(m.run_tx(owner, "registry", "withdraw_data", {{"report_hash", report.hex()}}) ==
        "failed:not-active");

  // re-registration creates a fresh record, the old one stays withdrawn
  CHECK(m.run_tx(owner, "registry", "register_data", {{"report_hash", report.hex()}}) == "ok");
  const auto& regs = m.contracts.state().data_regs;
  REQUIRE(regs.size() == 2);
  CHECK_FALSE(regs[0].active);
  CHECK(regs[1].active);
}

TEST_CASE("model registration checks enclave kind and split sum") {
  Market m;
  m.onboard();
  CHECK(m.run_tx(m.trainer, "registry", "register_model",
                 {{"whitepaper_hash", m.whitepaper_hash.hex()},
                  {"training_enclave", m.training_enclave.key.pub.hex()},
                  {"price", 10},
                  {"trainer_bp", 4000},
                  {"runner_bp", 2000},
                  {"donor_pool_bp", 3999},
                  {"query_program_hash", m.query_program_hash.hex()}}) ==
        "failed:bad-split-sum");
  CHECK(m.run_tx(m.trainer, "registry", "register_model",
                 {{"whitepaper_hash", m.whitepaper_hash.hex()},
                  {"training_enclave", m.query_enclave.key.pub.hex()},
                  {"price", 10},
                  {"trainer_bp", 4000},
                  {"runner_bp", 2000},
                  {"donor_pool_bp", 4000},
                  {"query_program_hash", m.query_program_hash.hex()}}) ==
        "failed:not-a-training-enclave");
  Digest id = m.register_model(10, SplitSpec{4000, 2000, 4000});
  const ModelRecord* rec = m.contracts.model(id);
  REQUIRE(rec != nullptr);
  CHECK(rec->status == ModelStatus::Recruiting);
  CHECK(rec->trainer == m.trainer.key.pub);
}

TEST_CASE("donor registration verifies the enclave receipt") {
  Market m;
  m.onboard();
  Digest id = m.register_model(10, SplitSpec{4000, 2000, 4000});

  CHECK(m.register_donor(m.owners[0], id, 5) == "ok");
  CHECK(m.contracts.model(id)->donors.size() == 1);

  // receipt signed by the wrong enclave key
  crypto::Signature bad = crypto::sign(
      m.query_enclave.key.sec, receipt_signing_bytes(id, m.owners[1].key.pub, 5));
  m.run_tx(m.owners[1], "registry", "register_data",
           {{"report_hash", crypto::digest("report " + m.owners[1].key.pub.hex()).hex()}});
  CHECK(m.run_tx(m.owners[1], "registry", "register_donor",
                 {{"model_id", id.hex()},
                  {"owner", m.owners[1].key.pub.hex()},
                  {"quality", 5},
                  {"enclave_sig", bad.hex()}}) == "failed:bad-receipt-signature");

  // caller must be the receipt owner
  crypto::Signature for_other = crypto::sign(
      m.training_enclave.key.sec, receipt_signing_bytes(id, m.owners[1].key.pub, 5));
  CHECK(m.run_tx(m.owners[2], "registry", "register_donor",
                 {{"model_id", id.hex()},
                  {"owner", m.owners[1].key.pub.hex()},
                  {"quality", 5},
                  {"enclave_sig", for_other.hex()}}) == "failed:not-owner");

  // duplicate donor
  CHECK(m.register_donor(m.owners[0], id, 5) == "failed:duplicate-donor");

  // withdrawn-data owner cannot donate
  ChainAccount& w = m.owners[3];
  Digest wreport = crypto::digest("report " + w.key.pub.hex());
  CHECK(m.run_tx(w, "registry", "register_data", {{"report_hash", wreport.hex()}}) == "ok");
  CHECK(m.run_tx(w, "registry", "withdraw_data", {{"report_hash", wreport.hex()}}) == "ok");
  crypto::Signature wsig = crypto::sign(m.training_enclave.key.sec,
                                        receipt_signing_bytes(id, w.key.pub, 4));
  CHECK(m.run_tx(w, "registry", "register_donor",
                 {{"model_id", id.hex()},
                  {"owner", w.key.pub.hex()},
                  {"quality", 4},
                  {"enclave_sig", wsig.hex()}}) == "failed:no-active-registration");
}

TEST_CASE("model status transitions are monotone") {
  Market m;
  m.onboard();
  Digest id = m.register_model(10, SplitSpec{4000, 2000, 4000});

  CHECK(m.run_tx(m.trainer, "registry", "set_model_status",
                 {{"model_id", id.hex()}, {"status", "trained"},
                  {"runner_enclave", m.query_enclave.key.pub.hex()}}) ==
        "failed:illegal-transition");
  CHECK(m.run_tx(m.user, "registry", "set_model_status",
                 {{"model_id", id.hex()}, {"status", "training"}}) == "failed:not-trainer");
  CHECK(m.run_tx(m.trainer, "registry", "set_model_status",
                 {{"model_id", id.hex()}, {"status", "training"}}) == "ok");
  CHECK(m.run_tx(m.trainer, "registry", "set_model_status",
                 {{"model_id", id.hex()}, {"status", "trained"},
                  {"runner_enclave", m.training_enclave.key.pub.hex()}}) ==
        "failed:not-a-query-enclave");
  CHECK(m.run_tx(m.trainer, "registry", "set_model_status",
                 {{"model_id", id.hex()}, {"status", "trained"},
                  {"runner_enclave", m.query_enclave.key.pub.hex()}}) == "ok");
  const ModelRecord* rec = m.contracts.model(id);
  CHECK(rec->status == ModelStatus::Trained);
  REQUIRE(rec->runner_enclave.has_value());
  CHECK(*rec->runner_enclave == m.query_enclave.key.pub);
}

TEST_CASE("purchases escrow tokens and enforce price, balance, uniqueness") {
  Market m;
  m.onboard();
  Digest id = m.register_model(10, SplitSpec{4000, 2000, 4000});
  Digest code = crypto::digest("secret-code-1");

  CHECK(m.purchase(m.user, id, code, 10) == "failed:model-not-ready");
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "training"}});

  CHECK(m.purchase(m.user, id, code, 5) == "failed:below-price");
  CHECK(m.purchase(m.user, id, code, 10) == "ok");
  CHECK(m.contracts.balance_of(m.user.key.pub) == 990);
  CHECK(m.contracts.state().escrow.at(code) == 10);
  CHECK(m.purchase(m.user, id, code, 10) == "failed:duplicate-code");
  CHECK(m.purchase(m.user, id, crypto::digest("big"), 100000) ==
        "failed:insufficient-balance");
  CHECK(m.conserved());

  auto paid = m.contracts.verify_payment(code);
  REQUIRE(paid.has_value());
  CHECK(paid->status == CodeStatus::Paid);
  CHECK_FALSE(m.contracts.verify_payment(crypto::digest("nope")).has_value());
}

TEST_CASE("distribution matches the worked examples") {
  Market m;
  m.onboard();
  Digest id = m.register_model(10, SplitSpec{4000, 2000, 4000});
  for (int i = 0; i < 4; ++i) REQUIRE(m.register_donor(m.owners[i], id, 1) == "ok");
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "training"}});
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "trained"},
            {"runner_enclave", m.query_enclave.key.pub.hex()}});

  std::uint64_t trainer_before = m.contracts.balance_of(m.trainer.key.pub);
  std::uint64_t runner_before = m.contracts.balance_of(m.runner.key.pub);
  std::uint64_t owner_before = m.contracts.balance_of(m.owners[0].key.pub);

  Digest code = crypto::digest("secret-code-2");
  REQUIRE(m.purchase(m.user, id, code, 100) == "ok");
  REQUIRE(m.consume(m.query_enclave, code) == "ok");

  // amount 100, split 4000/2000/4000, four quality-1 donors
  CHECK(m.contracts.balance_of(m.trainer.key.pub) == trainer_before + 40);
  CHECK(m.contracts.balance_of(m.runner.key.pub) == runner_before + 20);
  for (int i = 0; i < 4; ++i)
    CHECK(m.contracts.balance_of(m.owners[i].key.pub) == owner_before + 10);
  CHECK(m.contracts.verify_payment(code)->status == CodeStatus::Consumed);
  CHECK(m.conserved());

  CHECK(m.consume(m.query_enclave, code) == "failed:already-consumed");
  CHECK(m.conserved());
}

TEST_CASE("distribution weights donors by quality") {
  Market m;
  m.onboard();
  Digest id = m.register_model(10, SplitSpec{4000, 2000, 4000});
  REQUIRE(m.register_donor(m.owners[0], id, 3) == "ok");
  REQUIRE(m.register_donor(m.owners[1], id, 1) == "ok");
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "training"}});
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "trained"},
            {"runner_enclave", m.query_enclave.key.pub.hex()}});

  std::uint64_t o0 = m.contracts.balance_of(m.owners[0].key.pub);
  std::uint64_t o1 = m.contracts.balance_of(m.owners[1].key.pub);
  Digest code = crypto::digest("secret-code-3");
  REQUIRE(m.purchase(m.user, id, code, 100) == "ok");
  REQUIRE(m.consume(m.query_enclave, code) == "ok");
  CHECK(m.contracts.balance_of(m.owners[0].key.pub) == o0 + 30);
  CHECK(m.contracts.balance_of(m.owners[1].key.pub) == o1 + 10);
}

TEST_CASE("withdrawn donors receive nothing; evaluation consumes via the training enclave") {
  Market m;
  m.onboard();
  Digest id = m.register_model(10, SplitSpec{4000, 2000, 4000});
  REQUIRE(m.register_donor(m.owners[0], id, 2) == "ok");
  REQUIRE(m.register_donor(m.owners[1], id, 2) == "ok");
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "training"}});
  CHECK(m.run_tx(m.owners[1], "registry", "withdraw_donor", {{"model_id", id.hex()}}) == "ok");

  std::uint64_t o0 = m.contracts.balance_of(m.owners[0].key.pub);
  std::uint64_t o1 = m.contracts.balance_of(m.owners[1].key.pub);

  // trainer evaluation query while still Training: training enclave signs
  Digest code = crypto::digest("eval-code");
  REQUIRE(m.purchase(m.trainer, id, code, 100) == "ok");
  CHECK(m.consume(m.query_enclave, code) == "failed:bad-enclave-signature");
  REQUIRE(m.consume(m.training_enclave, code) == "ok");

  CHECK(m.contracts.balance_of(m.owners[0].key.pub) == o0 + 40);
  CHECK(m.contracts.balance_of(m.owners[1].key.pub) == o1);
  CHECK(m.conserved());

  // withdrawal after Trained is rejected
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "trained"},
            {"runner_enclave", m.query_enclave.key.pub.hex()}});
  CHECK(m.run_tx(m.owners[0], "registry", "withdraw_donor", {{"model_id", id.hex()}}) ==
        "failed:model-trained");
}

TEST_CASE("randomized distributions match the oracle and conserve tokens") {
  Market m;
  m.onboard();
  Digest id = m.register_model(1, SplitSpec{4000, 2000, 4000});
  m.run_tx(m.trainer, "registry", "set_model_status",
           {{"model_id", id.hex()}, {"status", "training"}});

  m.contracts.mint_initial(m.user.key.pub, 1000000);

  Rng rng(4242);
  for (int round = 0; round < 200; ++round) {
    // fresh model each round so donor sets and splits vary
    std::uint64_t t_bp = rng.below(10001);
    std::uint64_t r_bp = rng.below(10001 - t_bp);
    SplitSpec split{t_bp, r_bp, 10000 - t_bp - r_bp};

    Digest wp = crypto::digest("wp " + std::to_string(round));
    REQUIRE(m.run_tx(m.trainer, "registry", "register_model",
                     {{"whitepaper_hash", wp.hex()},
                      {"training_enclave", m.training_enclave.key.pub.hex()},
                      {"price", 1},
                      {"trainer_bp", split.trainer_bp},
                      {"runner_bp", split.runner_bp},
                      {"donor_pool_bp", split.donor_pool_bp},
                      {"query_program_hash", m.query_program_hash.hex()}}) == "ok");
    Digest mid = make_model_id(wp, m.trainer.key.pub);

    std::size_t n_donors = rng.below(4);
    std::vector<OracleDonor> donors;
    for (std::size_t i = 0; i < n_donors; ++i) {
      std::uint64_t quality = 1 + rng.below(5);
      bool withdrawn = rng.below(4) == 0;
      donors.push_back(OracleDonor{quality, withdrawn});
      ChainAccount& owner = m.owners[i];
      crypto::Signature sig = crypto::sign(
          m.training_enclave.key.sec, receipt_signing_bytes(mid, owner.key.pub, quality));
      auto reg = m.run_tx(owner, "registry", "register_data",
                          {{"report_hash",
                            crypto::digest("report " + owner.key.pub.hex()).hex()}});
      REQUIRE((reg == "ok" || reg == "failed:already-active"));
      REQUIRE(m.run_tx(owner, "registry", "register_donor",
                       {{"model_id", mid.hex()},
                        {"owner", owner.key.pub.hex()},
                        {"quality", quality},
                        {"enclave_sig", sig.hex()}}) == "ok");
      if (withdrawn)
        REQUIRE(m.run_tx(owner, "registry", "withdraw_donor", {{"model_id", mid.hex()}}) ==
                "ok");
    }
    m.run_tx(m.trainer, "registry", "set_model_status",
             {{"model_id", mid.hex()}, {"status", "training"}});

    std::uint64_t amount = 1 + rng.below(500);
    Digest code = crypto::digest("code " + std::to_string(round));
    REQUIRE(m.purchase(m.user, mid, code, amount) == "ok");
    std::size_t credits_before = m.contracts.state().credits.size();
    REQUIRE(m.consume(m.training_enclave, code) == "ok");

    OracleResult expect = oracle_split(amount, split, donors);
    std::map<PublicKey, std::uint64_t> credited;
    std::uint64_t credit_sum = 0;
    for (std::size_t k = credits_before; k < m.contracts.state().credits.size(); ++k) {
      const CreditEntry& c = m.contracts.state().credits[k];
      CHECK(c.code_hash == code);
      credited[c.recipient] += c.amount;
      credit_sum += c.amount;
    }
    CHECK(credit_sum == amount);
    CHECK(credited[m.trainer.key.pub] == expect.trainer);
    CHECK(credited[m.runner.key.pub] == expect.runner);
    for (std::size_t i = 0; i < donors.size(); ++i)
      CHECK(credited[m.owners[i].key.pub] == expect.donor_shares[i]);
    CHECK(m.conserved());
  }
}

TEST_CASE("anchoring covers registry hashes only after mining") {
  Market m;
  CHECK_FALSE(m.contracts.anchored(m.measurement));
  auto tx = m.developer.make_tx("registry", "register_package",
                                {{"source_hash", m.source_hash.hex()},
                                 {"measurement", m.measurement.hex()}});
  CHECK(m.chain.submit_tx(tx).accepted);
  CHECK_FALSE(m.contracts.anchored(m.measurement));  // pending only
  m.chain.mine_block(m.miner);
  CHECK(m.contracts.anchored(m.measurement));
  CHECK(m.contracts.anchored(m.source_hash));
  CHECK_FALSE(m.contracts.anchored(crypto::digest("never registered")));
}

TEST_CASE("trainer check reflects registered models") {
  Market m;
  m.onboard();
  CHECK_FALSE(m.contracts.is_trainer(m.trainer.key.pub));
  m.register_model(10, SplitSpec{4000, 2000, 4000});
  CHECK(m.contracts.is_trainer(m.trainer.key.pub));
  CHECK_FALSE(m.contracts.is_trainer(m.user.key.pub));
}
