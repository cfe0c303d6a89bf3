#include "onboard/crypto/suite.hpp"

#include "onboard/error.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>

#include <memory>
#include <stdexcept>

namespace onboard::crypto {

namespace {

struct PkeyFree {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxFree {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxFree {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyFree>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

constexpr std::size_t kSigKeySize = 32;
constexpr std::size_t kSigSize = 64;

PkeyPtr raw_private(int type, ByteView sk) {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(type, nullptr, sk.data(), sk.size()));
    if (!key) throw Error(ErrorCode::MalformedKey, "cannot load private key");
    return key;
}

PkeyPtr raw_public(int type, ByteView pk) {
    PkeyPtr key(EVP_PKEY_new_raw_public_key(type, nullptr, pk.data(), pk.size()));
    if (!key) throw Error(ErrorCode::MalformedKey, "cannot load public key");
    return key;
}

Bytes public_of(EVP_PKEY* key) {
    std::size_t len = 0;
    EVP_PKEY_get_raw_public_key(key, nullptr, &len);
    Bytes out(len);
    if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1)
        throw Error(ErrorCode::MalformedKey, "cannot export public key");
    return out;
}

Bytes x25519(ByteView secret, ByteView peer_public) {
    auto priv = raw_private(EVP_PKEY_X25519, secret);
    auto pub = raw_public(EVP_PKEY_X25519, peer_public);
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new(priv.get(), nullptr));
    std::size_t len = 32;
    Bytes out(len);
    // OpenSSL rejects low-order peer points here (all-zero shared secret).
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
        EVP_PKEY_derive_set_peer(ctx.get(), pub.get()) != 1 ||
        EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1)
        throw Error(ErrorCode::DecryptionFailure, "x25519 derivation failed");
    return out;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, std::string_view info, std::size_t n) {
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
    Bytes out(n);
    std::size_t len = n;
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(), static_cast<int>(salt.size())) != 1 ||
        EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(), static_cast<int>(ikm.size())) != 1 ||
        EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const unsigned char*>(info.data()),
                                    static_cast<int>(info.size())) != 1 ||
        EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1)
        throw std::runtime_error("HKDF failed");
    return out;
}

void aead_seal(ByteView key, const std::array<std::uint8_t, 12>& nonce, ByteView aad,
               ByteView plaintext, Bytes& body, std::array<std::uint8_t, 16>& tag) {
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    body.assign(plaintext.size(), 0);
    if (!ctx ||
        EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce.data()) != 1 ||
        EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
        EVP_EncryptUpdate(ctx.get(), body.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx.get(), body.data() + len, &len) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, 16, tag.data()) != 1)
        throw std::runtime_error("AEAD seal failed");
}

Bytes aead_open(ByteView key, const std::array<std::uint8_t, 12>& nonce, ByteView aad,
                ByteView body, const std::array<std::uint8_t, 16>& tag) {
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    Bytes out(body.size());
    auto tag_copy = tag;
    bool ok = ctx &&
              EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce.data()) == 1 &&
              EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1 &&
              EVP_DecryptUpdate(ctx.get(), out.data(), &len, body.data(), static_cast<int>(body.size())) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, 16, tag_copy.data()) == 1 &&
              EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) == 1;
    if (!ok) throw Error(ErrorCode::DecryptionFailure, "authentication failed");
    return out;
}

struct SplitKey {
    ByteView kem;
    ByteView sig;
};

SplitKey split_public(ByteView public_key, const KemBackend& kem) {
    if (public_key.size() != kem.public_key_size() + kSigKeySize)
        throw Error(ErrorCode::MalformedKey, "public key has wrong length");
    return {public_key.first(kem.public_key_size()), public_key.subspan(kem.public_key_size())};
}

SplitKey split_secret(ByteView secret_key, const KemBackend& kem) {
    if (secret_key.size() != kem.secret_key_size() + kSigKeySize)
        throw Error(ErrorCode::MalformedKey, "secret key has wrong length");
    return {secret_key.first(kem.secret_key_size()), secret_key.subspan(kem.secret_key_size())};
}

} // namespace

KemKeyMaterial X25519Kem::keygen(Rng& rng) const {
    auto sk = rng.bytes(32);
    auto key = raw_private(EVP_PKEY_X25519, sk);
    return {public_of(key.get()), std::move(sk)};
}

Bytes X25519Kem::public_from_secret(ByteView secret_key) const {
    if (secret_key.size() != 32) throw Error(ErrorCode::MalformedKey, "x25519 key must be 32 bytes");
    auto key = raw_private(EVP_PKEY_X25519, secret_key);
    return public_of(key.get());
}

Encapsulated X25519Kem::encapsulate(ByteView public_key, Rng& rng) const {
    if (public_key.size() != 32) throw Error(ErrorCode::MalformedKey, "x25519 key must be 32 bytes");
    auto eph = keygen(rng);
    Bytes shared;
    try {
        shared = x25519(eph.secret_key, public_key);
    } catch (const Error&) {
        throw Error(ErrorCode::MalformedKey, "recipient key is a low-order point");
    }
    return {std::move(eph.public_key), std::move(shared)};
}

Bytes X25519Kem::decapsulate(ByteView secret_key, ByteView encapsulation) const {
    if (secret_key.size() != 32) throw Error(ErrorCode::MalformedKey, "x25519 key must be 32 bytes");
    if (encapsulation.size() != 32) throw Error(ErrorCode::DecryptionFailure, "bad encapsulation length");
    return x25519(secret_key, encapsulation);
}

const KemBackend& default_kem() {
    static const X25519Kem kem;
    return kem;
}

Digest sha256(ByteView data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    return out;
}

Bytes hmac_sha1(ByteView key, ByteView data) {
    Bytes out(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    if (!HMAC(EVP_sha1(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
              out.data(), &len))
        throw std::runtime_error("HMAC-SHA1 failed");
    out.resize(len);
    return out;
}

Nonce gen_nonce(Rng& rng) { return Nonce::random(rng); }
PseudoUuid gen_pseudo_uuid(Rng& rng) { return PseudoUuid::random(rng); }
LongLivedToken gen_long_lived_token(Rng& rng) { return LongLivedToken::random(rng); }

std::string_view to_string(RoleTag tag) {
    switch (tag) {
    case RoleTag::ServerForAuth: return "ServerForAuth";
    case RoleTag::AuthForServer: return "AuthForServer";
    case RoleTag::DeviceForServer: return "DeviceForServer";
    case RoleTag::ServerForDevice: return "ServerForDevice";
    }
    return "Unknown";
}

void require_fresh(const KeyPair& pair, Timestamp now) {
    if (pair.expired(now))
        throw Error(ErrorCode::KeyExpired, std::string(to_string(pair.role_tag)) + " key pair expired");
}

KeyPair kem_keygen(RoleTag role_tag, Seconds ttl, Rng& rng, const Clock& clock,
                   const KemBackend& kem) {
    if (ttl <= 0) throw std::invalid_argument("kem_keygen: ttl must be positive");
    auto kem_pair = kem.keygen(rng);
    auto sig_pair = signing_keygen(rng);
    KeyPair out;
    out.role_tag = role_tag;
    out.public_key = concat({kem_pair.public_key, sig_pair.public_key});
    out.secret_key = concat({kem_pair.secret_key, sig_pair.seed});
    out.created_at = clock.now();
    out.ttl = ttl;
    return out;
}

Bytes HybridCiphertext::encode() const {
    Writer w;
    w.bytes(encapsulation).raw(aead_nonce).bytes(body).raw(auth_tag);
    return std::move(w).take();
}

HybridCiphertext HybridCiphertext::decode(ByteView in) {
    Reader r(in);
    HybridCiphertext ct;
    ct.encapsulation = r.bytes();
    auto nonce = r.raw(12);
    std::copy(nonce.begin(), nonce.end(), ct.aead_nonce.begin());
    ct.body = r.bytes();
    auto tag = r.raw(16);
    std::copy(tag.begin(), tag.end(), ct.auth_tag.begin());
    r.finish();
    return ct;
}

namespace {
constexpr std::string_view kHybridInfo = "onboard.hybrid.v1";
constexpr std::string_view kLinkAad = "onboard.link.v1";
} // namespace

HybridCiphertext hybrid_encrypt(ByteView public_key, ByteView plaintext, Rng& rng,
                                const KemBackend& kem) {
    auto parts = split_public(public_key, kem);
    auto enc = kem.encapsulate(parts.kem, rng);
    auto salt = concat({enc.encapsulation, parts.kem});
    auto key = hkdf_sha256(enc.shared_secret, salt, kHybridInfo, 32);

    HybridCiphertext ct;
    ct.encapsulation = std::move(enc.encapsulation);
    rng.fill(ct.aead_nonce);
    aead_seal(key, ct.aead_nonce, ct.encapsulation, plaintext, ct.body, ct.auth_tag);
    return ct;
}

Bytes hybrid_decrypt(ByteView secret_key, const HybridCiphertext& ct, const KemBackend& kem) {
    auto parts = split_secret(secret_key, kem);
    // The recipient public key is part of the KDF salt; rederive it from the secret.
    auto recipient = kem.public_from_secret(parts.kem);
    auto shared = kem.decapsulate(parts.kem, ct.encapsulation);
    auto salt = concat({ct.encapsulation, recipient});
    auto key = hkdf_sha256(shared, salt, kHybridInfo, 32);
    return aead_open(key, ct.aead_nonce, ct.encapsulation, ct.body, ct.auth_tag);
}

SigningKey signing_keygen(Rng& rng) {
    auto seed = rng.bytes(kSigKeySize);
    auto key = raw_private(EVP_PKEY_ED25519, seed);
    return {public_of(key.get()), std::move(seed)};
}

Bytes ed25519_sign(ByteView seed, ByteView message) {
    if (seed.size() != kSigKeySize) throw Error(ErrorCode::MalformedKey, "ed25519 seed must be 32 bytes");
    auto key = raw_private(EVP_PKEY_ED25519, seed);
    MdCtxPtr ctx(EVP_MD_CTX_new());
    Bytes sig(kSigSize);
    std::size_t len = sig.size();
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
        EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1)
        throw std::runtime_error("ed25519 signing failed");
    return sig;
}

bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature) {
    if (public_key.size() != kSigKeySize || signature.size() != kSigSize) return false;
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                            public_key.size()));
    if (!key) return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    return ctx && EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) == 1 &&
           EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                            message.size()) == 1;
}

Signature sign(RoleTag signer, ByteView secret_key, ByteView message, const KemBackend& kem) {
    auto parts = split_secret(secret_key, kem);
    return {signer, ed25519_sign(parts.sig, message)};
}

bool verify(ByteView public_key, ByteView message, const Signature& signature,
            const KemBackend& kem) {
    auto parts = split_public(public_key, kem);
    return ed25519_verify(parts.sig, message, signature.bytes);
}

Bytes SealedBox::encode() const {
    Writer w;
    w.raw(nonce).bytes(body).raw(tag);
    return std::move(w).take();
}

SealedBox SealedBox::decode(ByteView in) {
    Reader r(in);
    SealedBox box;
    auto nonce = r.raw(12);
    std::copy(nonce.begin(), nonce.end(), box.nonce.begin());
    box.body = r.bytes();
    auto tag = r.raw(16);
    std::copy(tag.begin(), tag.end(), box.tag.begin());
    r.finish();
    return box;
}

SealedBox link_seal(const LinkKey& key, ByteView plaintext, Rng& rng) {
    SealedBox box;
    rng.fill(box.nonce);
    aead_seal(key.view(), box.nonce, to_bytes(kLinkAad), plaintext, box.body, box.tag);
    return box;
}

Bytes link_open(const LinkKey& key, const SealedBox& box) {
    return aead_open(key.view(), box.nonce, to_bytes(kLinkAad), box.body, box.tag);
}

} // namespace onboard::crypto
