#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "trustgate/crypto.hpp"

using namespace trustgate;
using namespace trustgate::crypto;

#ifndef TRUSTGATE_FIXTURE_DIR
#define TRUSTGATE_FIXTURE_DIR "fixtures"
#endif

namespace {

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("thumbprint digest matches an independent tool over the fixture") {
    // Frozen from `sha1sum fixtures/cert_a.der` before the build.
    Bytes der = read_file(std::string(TRUSTGATE_FIXTURE_DIR) + "/cert_a.der");
    Sha1Digest digest = sha1(der);
    CHECK(to_hex(BytesView(digest.data(), digest.size())) ==
          "297ee95e9fda19a8da84a078677b257e4e7eaf2e");
}

TEST_CASE("digest is deterministic and input-sensitive") {
    Bytes a = {1, 2, 3, 4};
    CHECK(sha1(a) == sha1(a));
    Bytes b = a;
    b[2] ^= 0x01;
    CHECK(sha1(a) != sha1(b));
}

TEST_CASE("sign verify round trip and tamper detection") {
    auto key = SigningKey::generate();
    Bytes msg = {'h', 'e', 'l', 'l', 'o'};
    Signature sig = key.sign(msg);
    CHECK(verify(key.public_key(), msg, sig));

    Bytes tampered = msg;
    tampered[0] ^= 1;
    CHECK_FALSE(verify(key.public_key(), tampered, sig));

    auto other = SigningKey::generate();
    CHECK_FALSE(verify(other.public_key(), msg, sig));
}

TEST_CASE("self-signed identity carries a recoverable public key") {
    auto id = make_self_signed("unit-test");
    REQUIRE(id.has_value());
    CHECK(id->thumbprint == sha1(id->der));

    auto pub = certificate_public_key(id->der);
    REQUIRE(pub.has_value());
    CHECK(*pub == id->key.public_key());

    // The embedded key verifies what the identity's key signs.
    Bytes msg = {9, 9, 9};
    CHECK(verify(*pub, msg, id->key.sign(msg)));
}

TEST_CASE("certificate loader accepts both encodings") {
    Bytes der = read_file(std::string(TRUSTGATE_FIXTURE_DIR) + "/cert_a.der");
    auto from_der = load_certificate_bytes(der);
    REQUIRE(from_der.has_value());
    CHECK(*from_der == der);

    Bytes pem = read_file(std::string(TRUSTGATE_FIXTURE_DIR) + "/cert_a.pem");
    auto from_pem = load_certificate_bytes(pem);
    REQUIRE(from_pem.has_value());
    CHECK(*from_pem == der);

    Bytes junk = {0x00, 0x01, 0x02};
    CHECK_FALSE(load_certificate_bytes(junk).has_value());
}

TEST_CASE("signing key survives a pem round trip") {
    auto key = SigningKey::generate();
    std::string path = "/tmp/trustgate_test_key.pem";
    REQUIRE(key.save_pem_file(path));
    auto loaded = SigningKey::load_pem_file(path);
    REQUIRE(loaded.has_value());
    CHECK(loaded->public_key() == key.public_key());
    std::remove(path.c_str());
}

TEST_CASE("hex and base64 round trip") {
    Bytes data = {0x00, 0xFF, 0x10, 0xAB};
    CHECK(from_hex(to_hex(data)) == data);
    CHECK(from_base64(to_base64(data)) == data);
    CHECK(from_base64("") == Bytes{});
    CHECK_FALSE(from_hex("abc").has_value());
    CHECK_FALSE(from_hex("zz").has_value());
}
