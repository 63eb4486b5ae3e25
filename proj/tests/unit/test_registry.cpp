#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "trustgate/ledger/events.hpp"
#include "trustgate/ledger/registry.hpp"

using namespace trustgate;
using namespace trustgate::ledger;

namespace {

struct ManualClock {
    int64_t now = 1000000;
    std::function<int64_t()> fn() {
        return [this] { return now; };
    }
};

}  // namespace

TEST_CASE("registry add and revoke update the valid set") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());

    Bytes cert_a(100, 0xA1);
    Bytes cert_b(120, 0xB2);
    REQUIRE(registry.add_certificate(cert_a, clock.now + 3600, admin) == RegistryStatus::Ok);
    REQUIRE(registry.add_certificate(cert_b, clock.now + 3600, admin) == RegistryStatus::Ok);

    auto all = registry.get_all_certificates();
    CHECK(all.size() == 2);

    REQUIRE(registry.revoke_certificate(cert_b, admin) == RegistryStatus::Ok);
    all = registry.get_all_certificates();
    REQUIRE(all.size() == 1);
    CHECK(all[0].der == cert_a);
}

TEST_CASE("expired entries vanish as the clock advances") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());

    Bytes cert(64, 0xC3);
    REQUIRE(registry.add_certificate(cert, clock.now + 1, admin) == RegistryStatus::Ok);
    CHECK(registry.valid_count() == 1);
    clock.now += 2;
    CHECK(registry.valid_count() == 0);
    CHECK(registry.get_all_certificates().empty());
}

TEST_CASE("insertion already expired is rejected") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());
    CHECK(registry.add_certificate(Bytes(10, 1), clock.now - 1, admin) ==
          RegistryStatus::ExpiredAtInsertion);
    CHECK(registry.valid_count() == 0);
}

TEST_CASE("unauthorized callers cannot mutate the registry") {
    auto admin = crypto::SigningKey::generate();
    auto stranger = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());

    CHECK(registry.add_certificate(Bytes(10, 1), clock.now + 10, stranger) ==
          RegistryStatus::Unauthorized);
    CHECK(registry.valid_count() == 0);
    CHECK(registry.action_log().empty());
}

TEST_CASE("revoking an absent certificate is a no-op event") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());
    auto sub = registry.subscribe();

    CHECK(registry.revoke_certificate(Bytes(10, 7), admin) == RegistryStatus::Ok);
    auto events = sub->drain();
    REQUIRE(events.size() == 1);
    CHECK(events[0].noop);
    CHECK(events[0].kind == ActionKind::Revoke);
}

TEST_CASE("signed entry points verify the caller's signature") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());

    CertificateAction action{ActionKind::Issue, Bytes(40, 0xD4), clock.now + 100};
    auto sig = admin.sign(encode_action(action));
    CHECK(registry.apply_signed(action, admin.public_key(), sig) == RegistryStatus::Ok);

    CertificateAction action2{ActionKind::Issue, Bytes(40, 0xD5), clock.now + 100};
    auto bad_sig = admin.sign(Bytes{1, 2, 3});
    CHECK(registry.apply_signed(action2, admin.public_key(), bad_sig) ==
          RegistryStatus::Unauthorized);
}

TEST_CASE("the valid list is ordered by thumbprint") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 12; i++) {
        Bytes cert(32);
        for (auto& b : cert) b = static_cast<uint8_t>(rng());
        REQUIRE(registry.add_certificate(cert, clock.now + 50, admin) == RegistryStatus::Ok);
    }
    auto all = registry.get_all_certificates();
    REQUIRE(all.size() == 12);
    CHECK(std::is_sorted(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.thumbprint < b.thumbprint;
    }));
}

TEST_CASE("valid set equals an independent replay of the action log") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};

    std::mt19937_64 rng(1717);
    for (int seq = 0; seq < 100; seq++) {
        ManualClock clock;
        Registry registry(keyring, clock.fn());

        // A pool of ten certificates randomly issued, revoked and expired.
        std::vector<Bytes> pool;
        for (int i = 0; i < 10; i++) pool.push_back(Bytes(16, static_cast<uint8_t>(i + 1)));

        for (int step = 0; step < 100; step++) {
            int roll = static_cast<int>(rng() % 10);
            const Bytes& cert = pool[rng() % pool.size()];
            if (roll < 5) {
                int64_t expire = clock.now + 1 + static_cast<int64_t>(rng() % 50);
                registry.add_certificate(cert, expire, admin);
            } else if (roll < 8) {
                registry.revoke_certificate(cert, admin);
            } else {
                clock.now += static_cast<int64_t>(rng() % 20);
            }
        }

        // Independent fold over the log with the same clock trace.
        std::map<crypto::Sha1Digest, int64_t> folded;
        for (const auto& entry : registry.action_log()) {
            auto tp = crypto::sha1(entry.action.certificate_der);
            if (entry.action.kind == ActionKind::Issue) {
                folded[tp] = entry.action.expire_date_unix;
            } else {
                folded.erase(tp);
            }
        }
        for (auto it = folded.begin(); it != folded.end();) {
            if (it->second < clock.now) it = folded.erase(it); else ++it;
        }

        auto got = registry.get_all_certificates();
        REQUIRE(got.size() == folded.size());
        for (const auto& rec : got) {
            auto it = folded.find(rec.thumbprint);
            REQUIRE(it != folded.end());
            CHECK(it->second == rec.expire_date_unix);
        }
    }
}

TEST_CASE("registry event source forwards authorized events") {
    auto admin = crypto::SigningKey::generate();
    AdminKeyring keyring{{admin.public_key()}};
    ManualClock clock;
    Registry registry(keyring, clock.fn());
    RegistryCertSource source(registry, keyring);

    Bytes cert(30, 0xE5);
    registry.add_certificate(cert, clock.now + 60, admin);
    registry.revoke_certificate(cert, admin);

    auto ev1 = source.poll();
    REQUIRE(ev1.has_value());
    CHECK(ev1->kind == ActionKind::Issue);
    CHECK(ev1->thumbprint == crypto::sha1(cert));
    CHECK(ev1->expire.has_value());

    auto ev2 = source.poll();
    REQUIRE(ev2.has_value());
    CHECK(ev2->kind == ActionKind::Revoke);
    CHECK_FALSE(source.poll().has_value());
}
