#include <doctest.h>

#include <cstdio>
#include <map>
#include <set>

#include "trustgate/ledger/events.hpp"
#include "trustgate/ledger/tangle.hpp"

using namespace trustgate;
using namespace trustgate::ledger;

namespace {

CertificateAction issue_action(uint8_t fill, size_t len = 64, int64_t expire = 1000000) {
    return {ActionKind::Issue, Bytes(len, fill), expire};
}

// Independent oracle: transitive approver count by brute-force reachability
// over the full transaction set.
size_t brute_force_approvers(const Tangle& tangle, const TxId& target) {
    std::set<TxId> approvers;
    auto ids = tangle.all_ids();
    bool grew = true;
    std::set<TxId> reach{target};
    while (grew) {
        grew = false;
        for (const auto& id : ids) {
            if (approvers.count(id)) continue;
            auto tx = tangle.get(id);
            for (const auto& a : tx->approvals) {
                if (reach.count(a) && id != a) {
                    approvers.insert(id);
                    reach.insert(id);
                    grew = true;
                    break;
                }
            }
        }
    }
    return approvers.size();
}

}  // namespace

TEST_CASE("action encoding round trips") {
    CertificateAction a = issue_action(0x11, 300, 1234567);
    auto back = decode_action(encode_action(a));
    REQUIRE(back.has_value());
    CHECK(*back == a);

    CertificateAction r{ActionKind::Revoke, Bytes(50, 0x22), 0};
    back = decode_action(encode_action(r));
    REQUIRE(back.has_value());
    CHECK(*back == r);

    CHECK_FALSE(decode_action(Bytes{}).has_value());
    CHECK_FALSE(decode_action(Bytes{9}).has_value());
    Bytes trailing = encode_action(a);
    trailing.push_back(0);
    CHECK_FALSE(decode_action(trailing).has_value());
}

TEST_CASE("first submission approves the genesis twice") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();
    TxId id = tangle.submit(issue_action(1), key);
    auto tx = tangle.get(id);
    REQUIRE(tx.has_value());
    CHECK(tx->approvals[0] == tangle.genesis_id());
    CHECK(tx->approvals[1] == tangle.genesis_id());
}

TEST_CASE("many submissions keep the graph acyclic with two approvals each") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();
    for (int i = 0; i < 300; i++) {
        tangle.submit(issue_action(static_cast<uint8_t>(i)), key);
    }
    CHECK(tangle.size() == 301);
    CHECK(tangle.is_acyclic());
    for (const auto& id : tangle.all_ids()) {
        if (id == tangle.genesis_id()) continue;
        auto tx = tangle.get(id);
        CHECK(tangle.get(tx->approvals[0]).has_value());
        CHECK(tangle.get(tx->approvals[1]).has_value());
    }
}

TEST_CASE("tip selection covers the tip set and keeps it bounded") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();

    // Single tip: both selections are forced to it.
    auto [a, b] = tangle.select_tips();
    CHECK(a == tangle.genesis_id());
    CHECK(b == tangle.genesis_id());

    for (int i = 0; i < 200; i++) {
        tangle.submit(issue_action(static_cast<uint8_t>(i)), key);
    }
    // Sequential submissions collapse tips quickly.
    CHECK(tangle.tip_count() <= 4);

    std::set<TxId> seen;
    for (int i = 0; i < 50; i++) {
        auto [x, y] = tangle.select_tips();
        seen.insert(x);
        seen.insert(y);
    }
    CHECK_FALSE(seen.empty());
}

TEST_CASE("chain of ten confirms exactly the first eight at threshold two") {
    // Build a linear chain: each transaction approves its predecessor twice.
    Tangle tangle;
    auto key = crypto::SigningKey::generate();
    std::vector<TxId> chain;
    chain.push_back(tangle.genesis_id());
    for (int i = 0; i < 10; i++) {
        // With a single tip, both approvals reference it, extending a chain.
        TxId id = tangle.submit(issue_action(static_cast<uint8_t>(i)), key);
        chain.push_back(id);
    }
    tangle.confirm_step();

    // Chain: genesis, t1..t10. A transaction is confirmed once two or more
    // later transactions transitively approve it, so t1..t8 qualify.
    for (size_t i = 1; i <= 10; i++) {
        size_t approvers = tangle.transitive_approver_count(chain[i]);
        CHECK(approvers == brute_force_approvers(tangle, chain[i]));
        CHECK(approvers == 10 - i);
        CHECK(tangle.is_confirmed(chain[i]) == (i <= 8));
    }
    CHECK(tangle.is_confirmed(tangle.genesis_id()));
}

TEST_CASE("genesis confirms after two children and fresh tips are unconfirmed") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();
    TxId t1 = tangle.submit(issue_action(1), key);
    tangle.confirm_step();
    CHECK_FALSE(tangle.is_confirmed(tangle.genesis_id()));  // one approver only
    TxId t2 = tangle.submit(issue_action(2), key);
    tangle.confirm_step();
    CHECK(tangle.is_confirmed(tangle.genesis_id()));
    CHECK_FALSE(tangle.is_confirmed(t2));
    (void)t1;
}

TEST_CASE("confirmation is monotonic") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();
    std::set<TxId> confirmed_before;
    for (int i = 0; i < 50; i++) {
        tangle.submit(issue_action(static_cast<uint8_t>(i)), key);
        tangle.confirm_step();
        std::set<TxId> now;
        for (const auto& id : tangle.all_ids()) {
            if (tangle.is_confirmed(id)) now.insert(id);
        }
        for (const auto& id : confirmed_before) CHECK(now.count(id) == 1);
        confirmed_before = std::move(now);
    }
}

TEST_CASE("sender verification requires both a valid signature and a known key") {
    Tangle tangle;
    auto admin = crypto::SigningKey::generate();
    auto stranger = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};

    TxId good = tangle.submit(issue_action(1), admin);
    CHECK(Tangle::verify_sender(*tangle.get(good), keyring));

    TxId unauth = tangle.submit(issue_action(2), stranger);
    CHECK_FALSE(Tangle::verify_sender(*tangle.get(unauth), keyring));

    auto tx = *tangle.get(good);
    tx.payload[0] ^= 0xFF;  // tamper
    CHECK_FALSE(Tangle::verify_sender(tx, keyring));
}

TEST_CASE("subscriptions deliver exactly once per matching transaction") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();
    auto sub1 = tangle.subscribe("certificate");
    auto sub2 = tangle.subscribe("certificate");

    tangle.submit(issue_action(1), key);
    auto d1 = sub1->drain();
    auto d2 = sub2->drain();
    CHECK(d1.size() == 1);
    CHECK(d2.size() == 1);
    CHECK(sub1->drain().empty());

    tangle.submit_raw("other", Bytes{1, 2, 3}, key);
    CHECK(sub1->drain().empty());

    auto decoded = decode_action(d1[0].tx.payload);
    REQUIRE(decoded.has_value());
    CHECK(decoded->kind == ActionKind::Issue);
}

TEST_CASE("simulated delay stamps delivery at or after the sampled delay") {
    TangleConfig cfg;
    cfg.delay = [](size_t) { return 120; };
    Tangle tangle(cfg);
    auto key = crypto::SigningKey::generate();
    auto sub = tangle.subscribe("certificate");
    tangle.submit(issue_action(1), key);
    auto d = sub->drain();
    REQUIRE(d.size() == 1);
    CHECK(d[0].deliver_vtime_ms - d[0].submit_vtime_ms >= 120);
}

TEST_CASE("externally built transactions are validated on insert") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();

    LedgerTransaction tx;
    tx.tag = "certificate";
    tx.payload = encode_action(issue_action(5));
    tx.sender_public_key = key.public_key();
    auto [a, b] = tangle.select_tips();
    tx.approvals = {a, b};
    tx.timestamp_ms = 1234;
    Bytes signing = transaction_signing_bytes(tx.tag, tx.payload, tx.approvals, tx.timestamp_ms);
    tx.signature = key.sign(signing);
    tx.id = transaction_id(tx);
    CHECK(tangle.insert_transaction(tx) == InsertStatus::Ok);
    CHECK(tangle.insert_transaction(tx) == InsertStatus::DuplicateId);

    LedgerTransaction bad = tx;
    bad.timestamp_ms++;  // signature no longer covers the content
    bad.id = transaction_id(bad);
    CHECK(tangle.insert_transaction(bad) == InsertStatus::BadSignature);

    LedgerTransaction unknown = tx;
    unknown.approvals[0].fill(0xEE);
    Bytes signing2 = transaction_signing_bytes(unknown.tag, unknown.payload, unknown.approvals,
                                               unknown.timestamp_ms);
    unknown.signature = key.sign(signing2);
    unknown.id = transaction_id(unknown);
    CHECK(tangle.insert_transaction(unknown) == InsertStatus::UnknownApproval);

    LedgerTransaction empty = tx;
    empty.payload.clear();
    CHECK(tangle.insert_transaction(empty) == InsertStatus::EmptyPayload);
}

TEST_CASE("ledger log export import round trips") {
    Tangle tangle;
    auto key = crypto::SigningKey::generate();
    for (int i = 0; i < 20; i++) {
        tangle.submit(issue_action(static_cast<uint8_t>(i)), key);
    }
    std::string path = "/tmp/trustgate_tangle_log.txt";
    REQUIRE(tangle.export_log(path));

    Tangle restored;
    REQUIRE(restored.import_log(path));
    CHECK(restored.size() == tangle.size());
    CHECK(restored.genesis_id() == tangle.genesis_id());
    CHECK(restored.is_acyclic());
    for (const auto& id : tangle.all_ids()) {
        auto a = tangle.get(id);
        auto b = restored.get(id);
        REQUIRE(b.has_value());
        CHECK(*a == *b);
    }
    std::remove(path.c_str());
}

TEST_CASE("tangle event source filters unauthorized and malformed submissions") {
    Tangle tangle;
    auto admin = crypto::SigningKey::generate();
    auto stranger = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    TangleCertSource source(tangle, keyring);

    tangle.submit(issue_action(1), admin);
    tangle.submit(issue_action(2), stranger);      // unauthorized
    tangle.submit_raw("certificate", Bytes{0xFF}, admin);  // malformed payload

    std::vector<CertificateEvent> events;
    while (auto ev = source.poll()) events.push_back(*ev);
    CHECK(events.size() == 1);
    CHECK(events[0].kind == ActionKind::Issue);
    CHECK(source.unauthorized_dropped() == 1);
    CHECK(source.malformed_dropped() == 1);
}
