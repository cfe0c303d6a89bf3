#include "doctest.h"

#include "onboard/crypto/suite.hpp"
#include "onboard/crypto/totp.hpp"
#include "onboard/error.hpp"

#include <openssl/evp.h>

#include <set>

using namespace onboard;
using namespace onboard::crypto;

namespace {

// Independent RFC 6238 oracle: HMAC assembled by hand from raw SHA-1 so it
// shares nothing with the library's HMAC path.
Bytes oracle_sha1(ByteView data) {
    Bytes out(20);
    unsigned len = 0;
    EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha1(), nullptr);
    return out;
}

Bytes oracle_hmac_sha1(ByteView key, ByteView msg) {
    Bytes k(key.begin(), key.end());
    if (k.size() > 64) k = oracle_sha1(k);
    k.resize(64, 0);
    Bytes inner, outer;
    for (auto b : k) inner.push_back(b ^ 0x36);
    for (auto b : k) outer.push_back(b ^ 0x5c);
    inner.insert(inner.end(), msg.begin(), msg.end());
    auto ih = oracle_sha1(inner);
    outer.insert(outer.end(), ih.begin(), ih.end());
    return oracle_sha1(outer);
}

std::string oracle_totp8(ByteView secret, std::int64_t t) {
    std::uint64_t counter = static_cast<std::uint64_t>(t / 30);
    Bytes msg(8);
    for (int i = 7; i >= 0; --i) {
        msg[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(counter & 0xff);
        counter >>= 8;
    }
    auto h = oracle_hmac_sha1(secret, msg);
    int off = h[19] & 0xf;
    std::uint32_t bin = ((h[off] & 0x7fu) << 24) | (h[off + 1] << 16) | (h[off + 2] << 8) | h[off + 3];
    std::string s = std::to_string(bin % 100000000u);
    return std::string(8 - s.size(), '0') + s;
}

const Bytes kRfcSecret = to_bytes("12345678901234567890");

struct Fixture {
    ManualClock clock{1'000'000};
    SeededRng rng{42};
};

} // namespace

TEST_CASE("oracle reproduces RFC 6238 appendix B SHA-1 vectors") {
    // Frozen from the RFC table; the oracle must agree before the library is trusted.
    CHECK(oracle_totp8(kRfcSecret, 59) == "94287082");
    CHECK(oracle_totp8(kRfcSecret, 1111111109) == "07081804");
    CHECK(oracle_totp8(kRfcSecret, 1111111111) == "14050471");
    CHECK(oracle_totp8(kRfcSecret, 1234567890) == "89005924");
    CHECK(oracle_totp8(kRfcSecret, 2000000000) == "69279037");
    CHECK(oracle_totp8(kRfcSecret, 20000000000) == "65353130");
}

TEST_CASE("totp_generate matches the oracle") {
    CHECK(totp_generate(kRfcSecret, 59).digits == "94287082");
    for (std::int64_t t : {0LL, 29LL, 30LL, 59LL, 1111111109LL, 1234567890LL, 20000000000LL})
        CHECK(totp_generate(kRfcSecret, t).digits == oracle_totp8(kRfcSecret, t));
    SeededRng rng(3);
    for (int i = 0; i < 200; ++i) {
        auto secret = rng.bytes(kTotpSecretSize);
        auto t = static_cast<std::int64_t>(rng.below(4'000'000'000ULL));
        CHECK(totp_generate(secret, t).digits == oracle_totp8(secret, t));
    }
}

TEST_CASE("totp step boundaries") {
    CHECK(totp_generate(kRfcSecret, 0) == totp_generate(kRfcSecret, 29));
    CHECK(totp_generate(kRfcSecret, 29).digits == oracle_totp8(kRfcSecret, 29));
    CHECK(totp_generate(kRfcSecret, 30).digits == oracle_totp8(kRfcSecret, 30));
    CHECK(totp_generate(kRfcSecret, 29).digits != totp_generate(kRfcSecret, 30).digits);
    CHECK(totp_generate(kRfcSecret, 30).issued_step == 1);
}

TEST_CASE("totp_verify window is exactly one step") {
    const std::int64_t issued = 1'200'000'010;  // 10 s into a step... irrelevant; aligned below
    const std::int64_t start = (issued / 30) * 30;
    auto token = totp_generate(kRfcSecret, start);
    CHECK(totp_verify(kRfcSecret, token.digits, start + 29));
    CHECK_FALSE(totp_verify(kRfcSecret, token.digits, start + 31));
    CHECK_FALSE(totp_verify(kRfcSecret, token.digits, start - 1));
    CHECK_FALSE(totp_verify(kRfcSecret, "", start));
    CHECK_FALSE(totp_verify(kRfcSecret, "9428708", 59));
    CHECK_FALSE(totp_verify(kRfcSecret, "9428708x", 59));
}

TEST_CASE("totp verify property: accepted iff same step") {
    SeededRng rng(9);
    for (int i = 0; i < 2000; ++i) {
        auto secret = rng.bytes(kTotpSecretSize);
        auto t = static_cast<std::int64_t>(rng.below(2'000'000'000ULL));
        auto t2 = t + static_cast<std::int64_t>(rng.below(120)) - 60;
        bool same = totp_step_index(t) == totp_step_index(t2);
        CHECK(totp_verify(secret, totp_generate(secret, t).digits, t2) == same);
    }
}

TEST_CASE("sha256 of empty input") {
    CHECK(to_hex(sha256({})) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE_FIXTURE(Fixture, "kem_keygen contract") {
    auto pair = kem_keygen(RoleTag::ServerForAuth, 86400, rng, clock);
    CHECK(pair.created_at == 1'000'000);
    CHECK(pair.ttl == 86400);
    CHECK(pair.role_tag == RoleTag::ServerForAuth);
    CHECK_FALSE(pair.public_key.empty());
    CHECK_FALSE(pair.secret_key.empty());
    CHECK(pair.public_key != pair.secret_key);

    SeededRng a(7), b(7), c(8);
    auto pa = kem_keygen(RoleTag::AuthForServer, 60, a, clock);
    auto pb = kem_keygen(RoleTag::AuthForServer, 60, b, clock);
    auto pc = kem_keygen(RoleTag::AuthForServer, 60, c, clock);
    CHECK(pa.public_key == pb.public_key);
    CHECK(pa.secret_key == pb.secret_key);
    CHECK(pa.public_key != pc.public_key);

    CHECK_THROWS_AS(kem_keygen(RoleTag::AuthForServer, 0, rng, clock), std::invalid_argument);
}

TEST_CASE_FIXTURE(Fixture, "key expiry") {
    auto pair = kem_keygen(RoleTag::DeviceForServer, 100, rng, clock);
    CHECK_NOTHROW(require_fresh(pair, clock.now() + 100));
    try {
        require_fresh(pair, clock.now() + 101);
        FAIL("expected KeyExpired");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::KeyExpired);
    }
}

TEST_CASE_FIXTURE(Fixture, "hybrid encryption") {
    auto pair = kem_keygen(RoleTag::ServerForAuth, 3600, rng, clock);
    auto other = kem_keygen(RoleTag::ServerForAuth, 3600, rng, clock);

    SUBCASE("one-byte round trip") {
        auto ct = hybrid_encrypt(pair.public_key, Bytes{0x42}, rng);
        CHECK(hybrid_decrypt(pair.secret_key, ct) == Bytes{0x42});
        CHECK(ct.body.size() == 1);
    }
    SUBCASE("wrong key fails") {
        auto ct = hybrid_encrypt(pair.public_key, to_bytes("hello"), rng);
        try {
            hybrid_decrypt(other.secret_key, ct);
            FAIL("expected DecryptionFailure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DecryptionFailure);
        }
    }
    SUBCASE("flipped tag bit fails") {
        auto ct = hybrid_encrypt(pair.public_key, to_bytes("hello"), rng);
        ct.auth_tag[0] ^= 0x01;
        CHECK_THROWS_AS(hybrid_decrypt(pair.secret_key, ct), Error);
    }
    SUBCASE("malformed key") {
        try {
            hybrid_encrypt(Bytes(10, 1), to_bytes("x"), rng);
            FAIL("expected MalformedKey");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedKey);
        }
    }
    SUBCASE("encode/decode round trip") {
        auto ct = hybrid_encrypt(pair.public_key, to_bytes("abc"), rng);
        CHECK(HybridCiphertext::decode(ct.encode()) == ct);
    }
}

TEST_CASE_FIXTURE(Fixture, "every single-bit flip of a hybrid ciphertext is rejected") {
    auto pair = kem_keygen(RoleTag::DeviceForServer, 3600, rng, clock);
    auto ct = hybrid_encrypt(pair.public_key, to_bytes("register!"), rng);
    auto wire = ct.encode();
    int misses = 0;
    for (std::size_t i = 0; i < wire.size(); ++i) {
        for (int bit = 0; bit < 8; ++bit) {
            auto mutated = wire;
            mutated[i] ^= static_cast<std::uint8_t>(1u << bit);
            try {
                auto decoded = HybridCiphertext::decode(mutated);
                hybrid_decrypt(pair.secret_key, decoded);
                ++misses;
            } catch (const Error&) {
            }
        }
    }
    CHECK(misses == 0);
}

TEST_CASE_FIXTURE(Fixture, "round-trip properties over random inputs") {
    auto pair = kem_keygen(RoleTag::AuthForServer, 3600, rng, clock);
    for (int i = 0; i < 1000; ++i) {
        auto msg = rng.bytes(1 + rng.below(200));
        auto ct = hybrid_encrypt(pair.public_key, msg, rng);
        REQUIRE(hybrid_decrypt(pair.secret_key, ct) == msg);
        auto sig = sign(pair.role_tag, pair.secret_key, msg);
        REQUIRE(verify(pair.public_key, msg, sig));
        // Neither output ever carries secret material.
        REQUIRE_FALSE(contains(ct.encode(), pair.secret_key));
        REQUIRE_FALSE(contains(sig.bytes, ByteView(pair.secret_key).subspan(32)));
        REQUIRE_FALSE(contains(ct.encode(), ByteView(pair.secret_key).first(32)));
    }
}

TEST_CASE_FIXTURE(Fixture, "signatures") {
    auto pair = kem_keygen(RoleTag::AuthForServer, 3600, rng, clock);
    auto other = kem_keygen(RoleTag::AuthForServer, 3600, rng, clock);
    auto msg = to_bytes("encrypted token bytes");
    auto sig = sign(pair.role_tag, pair.secret_key, msg);
    CHECK(sig.signer_tag == RoleTag::AuthForServer);
    CHECK(verify(pair.public_key, msg, sig));
    CHECK_FALSE(verify(other.public_key, msg, sig));

    for (std::size_t i = 0; i < msg.size() * 8; ++i) {
        auto m = msg;
        m[i / 8] ^= static_cast<std::uint8_t>(1u << (i % 8));
        REQUIRE_FALSE(verify(pair.public_key, m, sig));
    }
    for (std::size_t i = 0; i < sig.bytes.size() * 8; ++i) {
        auto s = sig;
        s.bytes[i / 8] ^= static_cast<std::uint8_t>(1u << (i % 8));
        REQUIRE_FALSE(verify(pair.public_key, msg, s));
    }
    CHECK_THROWS_AS(sign(RoleTag::AuthForServer, Bytes(3), msg), Error);
    CHECK_THROWS_AS(verify(Bytes(3), msg, sig), Error);
}

TEST_CASE_FIXTURE(Fixture, "link key sealing") {
    auto key = LinkKey::random(rng);
    auto wrong = LinkKey::random(rng);
    auto box = link_seal(key, to_bytes("provision"), rng);
    CHECK(link_open(key, box) == to_bytes("provision"));
    CHECK_THROWS_AS(link_open(wrong, box), Error);
    CHECK(SealedBox::decode(box.encode()) == box);
    CHECK_FALSE(contains(box.encode(), key.view()));
}

TEST_CASE("random identifiers") {
    OsRng os;
    std::set<Nonce> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(gen_nonce(os));
    CHECK(seen.size() == 10000);

    SeededRng a(5), b(5);
    CHECK(gen_pseudo_uuid(a) == gen_pseudo_uuid(b));
    CHECK(gen_pseudo_uuid(a).hex().size() == 32);

    std::set<LongLivedToken> tokens;
    SeededRng c(6);
    for (int i = 0; i < 1000; ++i) tokens.insert(gen_long_lived_token(c));
    CHECK(tokens.size() == 1000);
}

TEST_CASE("seeded rng forks are reproducible and independent") {
    SeededRng a(1), b(1);
    auto fa = a.fork("device");
    auto fb = b.fork("device");
    CHECK(fa.bytes(16) == fb.bytes(16));
    SeededRng c(1);
    auto fc = c.fork("server");
    SeededRng d(1);
    auto fd = d.fork("device");
    CHECK(fc.bytes(16) != fd.bytes(16));
}
