#pragma once

#include "onboard/bytes.hpp"
#include "onboard/crypto/random.hpp"

#include <string_view>

namespace onboard::crypto {

struct KemKeyMaterial {
    Bytes public_key;
    Bytes secret_key;
};

struct Encapsulated {
    Bytes encapsulation;
    Bytes shared_secret;
};

/// Key-encapsulation backend. hybrid_encrypt/hybrid_decrypt only ever talk to
/// this interface, so the lattice KEM can be swapped in where a library
/// provides it.
class KemBackend {
public:
    virtual ~KemBackend() = default;

    virtual std::string_view name() const = 0;
    virtual std::size_t public_key_size() const = 0;
    virtual std::size_t secret_key_size() const = 0;

    virtual KemKeyMaterial keygen(Rng& rng) const = 0;
    virtual Bytes public_from_secret(ByteView secret_key) const = 0;
    /// Throws Error(MalformedKey) if the public key does not parse.
    virtual Encapsulated encapsulate(ByteView public_key, Rng& rng) const = 0;
    /// Throws Error(DecryptionFailure) if decapsulation is impossible.
    virtual Bytes decapsulate(ByteView secret_key, ByteView encapsulation) const = 0;
};

/// DH-based KEM over X25519: the encapsulation is an ephemeral public key.
class X25519Kem final : public KemBackend {
public:
    std::string_view name() const override { return "x25519"; }
    std::size_t public_key_size() const override { return 32; }
    std::size_t secret_key_size() const override { return 32; }

    KemKeyMaterial keygen(Rng& rng) const override;
    Bytes public_from_secret(ByteView secret_key) const override;
    Encapsulated encapsulate(ByteView public_key, Rng& rng) const override;
    Bytes decapsulate(ByteView secret_key, ByteView encapsulation) const override;
};

const KemBackend& default_kem();

} // namespace onboard::crypto
