#include "trustgate/crypto.hpp"

#include <openssl/asn1.h>
#include <openssl/bio.h>
#include <openssl/bn.h>
#include <openssl/objects.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/x509.h>

#include <cstdio>
#include <ctime>

namespace trustgate::crypto {

namespace {

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;

struct X509Deleter {
    void operator()(X509* x) const { X509_free(x); }
};
using X509Ptr = std::unique_ptr<X509, X509Deleter>;

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

PkeyPtr pkey_from_seed(BytesView seed) {
    return PkeyPtr(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                                seed.data(), seed.size()));
}

PkeyPtr pkey_from_public(const PublicKey& pub) {
    return PkeyPtr(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                               pub.data(), pub.size()));
}

template <typename DigestT>
DigestT evp_digest(const EVP_MD* md, BytesView data) {
    DigestT out{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr);
    return out;
}

}  // namespace

Sha1Digest sha1(BytesView data) { return evp_digest<Sha1Digest>(EVP_sha1(), data); }
Sha256Digest sha256(BytesView data) { return evp_digest<Sha256Digest>(EVP_sha256(), data); }

SigningKey SigningKey::generate() {
    SigningKey k;
    RAND_bytes(k.seed_.data(), static_cast<int>(k.seed_.size()));
    auto pkey = pkey_from_seed(BytesView(k.seed_.data(), k.seed_.size()));
    size_t len = k.pub_.size();
    EVP_PKEY_get_raw_public_key(pkey.get(), k.pub_.data(), &len);
    return k;
}

std::optional<SigningKey> SigningKey::from_seed(BytesView seed32) {
    if (seed32.size() != 32) return std::nullopt;
    SigningKey k;
    std::copy(seed32.begin(), seed32.end(), k.seed_.begin());
    auto pkey = pkey_from_seed(seed32);
    if (!pkey) return std::nullopt;
    size_t len = k.pub_.size();
    if (EVP_PKEY_get_raw_public_key(pkey.get(), k.pub_.data(), &len) != 1) {
        return std::nullopt;
    }
    return k;
}

Signature SigningKey::sign(BytesView message) const {
    Signature sig{};
    auto pkey = pkey_from_seed(BytesView(seed_.data(), seed_.size()));
    MdCtxPtr ctx(EVP_MD_CTX_new());
    size_t sig_len = sig.size();
    EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get());
    EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(), message.size());
    return sig;
}

bool verify(const PublicKey& pub, BytesView message, const Signature& sig) {
    auto pkey = pkey_from_public(pub);
    if (!pkey) return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) {
        return false;
    }
    return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), message.data(),
                            message.size()) == 1;
}

std::optional<SigningKey> SigningKey::load_pem_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return std::nullopt;
    PkeyPtr pkey(PEM_read_PrivateKey(f, nullptr, nullptr, nullptr));
    std::fclose(f);
    if (!pkey || EVP_PKEY_id(pkey.get()) != EVP_PKEY_ED25519) return std::nullopt;
    std::array<uint8_t, 32> seed{};
    size_t len = seed.size();
    if (EVP_PKEY_get_raw_private_key(pkey.get(), seed.data(), &len) != 1 || len != 32) {
        return std::nullopt;
    }
    return from_seed(BytesView(seed.data(), seed.size()));
}

bool SigningKey::save_pem_file(const std::string& path) const {
    auto pkey = pkey_from_seed(BytesView(seed_.data(), seed_.size()));
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) return false;
    int ok = PEM_write_PrivateKey(f, pkey.get(), nullptr, nullptr, 0, nullptr, nullptr);
    std::fclose(f);
    return ok == 1;
}

std::optional<CertificateIdentity> make_self_signed(const std::string& common_name,
                                                    int64_t not_after_unix,
                                                    size_t min_der_size) {
    CertificateIdentity id{SigningKey::generate(), {}, {}};
    auto pkey = pkey_from_seed(id.key.seed());
    X509Ptr cert(X509_new());
    if (!cert || !pkey) return std::nullopt;

    X509_set_version(cert.get(), 2);
    uint8_t serial_bytes[16];
    RAND_bytes(serial_bytes, sizeof(serial_bytes));
    BIGNUM* serial_bn = BN_bin2bn(serial_bytes, sizeof(serial_bytes), nullptr);
    BN_to_ASN1_INTEGER(serial_bn, X509_get_serialNumber(cert.get()));
    BN_free(serial_bn);

    X509_NAME* name = X509_get_subject_name(cert.get());
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>(common_name.c_str()),
                               -1, -1, 0);
    X509_set_issuer_name(cert.get(), name);

    X509_gmtime_adj(X509_getm_notBefore(cert.get()), 0);
    if (not_after_unix > 0) {
        ASN1_TIME_set(X509_getm_notAfter(cert.get()), static_cast<time_t>(not_after_unix));
    } else {
        X509_gmtime_adj(X509_getm_notAfter(cert.get()), 10L * 365 * 24 * 3600);
    }

    if (X509_set_pubkey(cert.get(), pkey.get()) != 1) return std::nullopt;

    if (min_der_size > 512) {
        // Private-arc extension carrying opaque payload to reach the
        // requested encoded size.
        Bytes filler(min_der_size - 512, 0xEC);
        ASN1_OCTET_STRING* data = ASN1_OCTET_STRING_new();
        ASN1_OCTET_STRING_set(data, filler.data(), static_cast<int>(filler.size()));
        ASN1_OBJECT* obj = OBJ_txt2obj("2.25.99999.1", 1);
        X509_EXTENSION* ext = X509_EXTENSION_create_by_OBJ(nullptr, obj, 0, data);
        if (ext) {
            X509_add_ext(cert.get(), ext, -1);
            X509_EXTENSION_free(ext);
        }
        ASN1_OBJECT_free(obj);
        ASN1_OCTET_STRING_free(data);
    }

    if (X509_sign(cert.get(), pkey.get(), nullptr) == 0) return std::nullopt;

    int len = i2d_X509(cert.get(), nullptr);
    if (len <= 0) return std::nullopt;
    id.der.resize(static_cast<size_t>(len));
    uint8_t* p = id.der.data();
    i2d_X509(cert.get(), &p);
    id.thumbprint = sha1(id.der);
    return id;
}

std::optional<PublicKey> certificate_public_key(BytesView der) {
    const uint8_t* p = der.data();
    X509Ptr cert(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
    if (!cert) return std::nullopt;
    EVP_PKEY* pkey = X509_get0_pubkey(cert.get());
    if (!pkey || EVP_PKEY_id(pkey) != EVP_PKEY_ED25519) return std::nullopt;
    PublicKey pub{};
    size_t len = pub.size();
    if (EVP_PKEY_get_raw_public_key(pkey, pub.data(), &len) != 1 || len != 32) {
        return std::nullopt;
    }
    return pub;
}

std::optional<Bytes> load_certificate_bytes(BytesView file_contents) {
    static const std::string kPemMark = "-----BEGIN CERTIFICATE-----";
    std::string head(reinterpret_cast<const char*>(file_contents.data()),
                     std::min<size_t>(file_contents.size(), 256));
    if (head.find(kPemMark) != std::string::npos) {
        BIO* bio = BIO_new_mem_buf(file_contents.data(), static_cast<int>(file_contents.size()));
        X509Ptr cert(PEM_read_bio_X509(bio, nullptr, nullptr, nullptr));
        BIO_free(bio);
        if (!cert) return std::nullopt;
        int len = i2d_X509(cert.get(), nullptr);
        if (len <= 0) return std::nullopt;
        Bytes der(static_cast<size_t>(len));
        uint8_t* p = der.data();
        i2d_X509(cert.get(), &p);
        return der;
    }
    // Sanity-parse DER so cmd_admin can report unparseable files.
    const uint8_t* p = file_contents.data();
    X509Ptr cert(d2i_X509(nullptr, &p, static_cast<long>(file_contents.size())));
    if (!cert) return std::nullopt;
    return Bytes(file_contents.begin(), file_contents.end());
}

std::optional<Bytes> load_certificate_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return std::nullopt;
    Bytes contents;
    uint8_t buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) {
        contents.insert(contents.end(), buf, buf + n);
    }
    std::fclose(f);
    if (contents.empty()) return std::nullopt;
    return load_certificate_bytes(contents);
}

}  // namespace trustgate::crypto
