#pragma once

#include "onboard/bytes.hpp"
#include "onboard/crypto/kem.hpp"
#include "onboard/crypto/random.hpp"

#include <array>
#include <algorithm>
#include <compare>
#include <stdexcept>
#include <cstdint>
#include <string>
#include <string_view>

namespace onboard::crypto {

/// Fixed-width byte value with a phantom tag, so a Nonce cannot be passed
/// where a LinkKey is expected.
template <std::size_t N, typename Tag>
struct FixedBytes {
    static constexpr std::size_t size = N;
    std::array<std::uint8_t, N> value{};

    ByteView view() const { return value; }
    Bytes to_bytes() const { return Bytes(value.begin(), value.end()); }
    std::string hex() const { return to_hex(value); }

    static FixedBytes from(ByteView b);
    static FixedBytes random(Rng& rng) {
        FixedBytes out;
        rng.fill(out.value);
        return out;
    }

    auto operator<=>(const FixedBytes&) const = default;
};

template <std::size_t N, typename Tag>
FixedBytes<N, Tag> FixedBytes<N, Tag>::from(ByteView b) {
    FixedBytes out;
    if (b.size() != N) throw std::invalid_argument("FixedBytes: wrong length");
    std::copy(b.begin(), b.end(), out.value.begin());
    return out;
}

using Digest = std::array<std::uint8_t, 32>;
using Nonce = FixedBytes<16, struct NonceTag>;
using PseudoUuid = FixedBytes<16, struct PseudoUuidTag>;
using LongLivedToken = FixedBytes<32, struct LongLivedTokenTag>;
using LinkKey = FixedBytes<32, struct LinkKeyTag>;

Digest sha256(ByteView data);
Bytes hmac_sha1(ByteView key, ByteView data);

Nonce gen_nonce(Rng& rng);
PseudoUuid gen_pseudo_uuid(Rng& rng);
LongLivedToken gen_long_lived_token(Rng& rng);

enum class RoleTag : std::uint8_t {
    ServerForAuth = 1,
    AuthForServer = 2,
    DeviceForServer = 3,
    ServerForDevice = 4,
};

std::string_view to_string(RoleTag tag);

/// A role's key material. The KEM pair is paired with a companion Ed25519
/// pair bound to the same role tag:
///   public_key = kem_public || sig_public
///   secret_key = kem_secret || sig_seed
struct KeyPair {
    RoleTag role_tag{};
    Bytes public_key;
    Bytes secret_key;
    Timestamp created_at = 0;
    Seconds ttl = 0;

    bool expired(Timestamp now) const { return now > created_at + ttl; }
};

/// Throws Error(KeyExpired) when `now` is past the pair's lifetime.
void require_fresh(const KeyPair& pair, Timestamp now);

KeyPair kem_keygen(RoleTag role_tag, Seconds ttl, Rng& rng, const Clock& clock,
                   const KemBackend& kem = default_kem());

struct HybridCiphertext {
    Bytes encapsulation;
    std::array<std::uint8_t, 12> aead_nonce{};
    Bytes body;
    std::array<std::uint8_t, 16> auth_tag{};

    Bytes encode() const;
    /// Throws Error(Truncated/TrailingBytes) on structural problems.
    static HybridCiphertext decode(ByteView in);

    bool operator==(const HybridCiphertext&) const = default;
};

/// KEM-encapsulate to the recipient, then ChaCha20-Poly1305 the plaintext
/// under a key derived from the shared secret.
HybridCiphertext hybrid_encrypt(ByteView public_key, ByteView plaintext, Rng& rng,
                                const KemBackend& kem = default_kem());
/// Returns the exact plaintext or throws Error(DecryptionFailure).
Bytes hybrid_decrypt(ByteView secret_key, const HybridCiphertext& ct,
                     const KemBackend& kem = default_kem());

struct Signature {
    RoleTag signer_tag{};
    Bytes bytes;

    bool operator==(const Signature&) const = default;
};

Signature sign(RoleTag signer, ByteView secret_key, ByteView message,
               const KemBackend& kem = default_kem());
bool verify(ByteView public_key, ByteView message, const Signature& signature,
            const KemBackend& kem = default_kem());

/// Raw Ed25519 helpers for identities that only sign (ledger members).
struct SigningKey {
    Bytes public_key;  // 32 bytes
    Bytes seed;        // 32 bytes
};
SigningKey signing_keygen(Rng& rng);
Bytes ed25519_sign(ByteView seed, ByteView message);
bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature);

/// AEAD under the pre-provisioned Authenticator/Device link key.
struct SealedBox {
    std::array<std::uint8_t, 12> nonce{};
    Bytes body;
    std::array<std::uint8_t, 16> tag{};

    Bytes encode() const;
    static SealedBox decode(ByteView in);

    bool operator==(const SealedBox&) const = default;
};

SealedBox link_seal(const LinkKey& key, ByteView plaintext, Rng& rng);
/// Throws Error(DecryptionFailure) on wrong key or tampering.
Bytes link_open(const LinkKey& key, const SealedBox& box);

} // namespace onboard::crypto
