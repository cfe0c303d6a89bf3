#pragma once

#include "onboard/bytes.hpp"
#include "onboard/crypto/suite.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace onboard::wire {

using crypto::HybridCiphertext;
using crypto::SealedBox;

enum class MessageTag : std::uint8_t {
    SessionHello = 0x01,
    NonceChallenge = 0x02,
    NonceResponse = 0x03,
    TokenDelivery = 0x04,
    DeviceProvision = 0x05,
    RegistrationRequest = 0x06,
    ActivationResponse = 0x07,
    ConnectedNotice = 0x08,
    DataReport = 0x09,
    RevocationRequest = 0x0a,
};

std::string_view to_string(MessageTag tag);

// Outer messages. Anything confidential travels inside a ciphertext field;
// the inner plaintext layouts are the *Body structs further down.

struct SessionHello {
    static constexpr MessageTag tag = MessageTag::SessionHello;
    Bytes public_key;
    bool operator==(const SessionHello&) const = default;
};

struct NonceChallenge {
    static constexpr MessageTag tag = MessageTag::NonceChallenge;
    crypto::Nonce nonce;
    bool operator==(const NonceChallenge&) const = default;
};

/// Encrypt(peer_pk, SignedNonce)
struct NonceResponse {
    static constexpr MessageTag tag = MessageTag::NonceResponse;
    HybridCiphertext ciphertext;
    bool operator==(const NonceResponse&) const = default;
};

/// Encrypt(A^S_p, TokenGrant)
struct TokenDelivery {
    static constexpr MessageTag tag = MessageTag::TokenDelivery;
    HybridCiphertext ciphertext;
    bool operator==(const TokenDelivery&) const = default;
};

/// Seal(LinkKey, ProvisionBundle)
struct DeviceProvision {
    static constexpr MessageTag tag = MessageTag::DeviceProvision;
    SealedBox sealed;
    bool operator==(const DeviceProvision&) const = default;
};

/// Encrypt(S^A_p, RegistrationBody)
struct RegistrationRequest {
    static constexpr MessageTag tag = MessageTag::RegistrationRequest;
    HybridCiphertext ciphertext;
    bool operator==(const RegistrationRequest&) const = default;
};

/// Encrypt(D^S_p, ActivationBody)
struct ActivationResponse {
    static constexpr MessageTag tag = MessageTag::ActivationResponse;
    HybridCiphertext ciphertext;
    bool operator==(const ActivationResponse&) const = default;
};

/// Encrypt(A^S_p, ConnectedBody)
struct ConnectedNotice {
    static constexpr MessageTag tag = MessageTag::ConnectedNotice;
    HybridCiphertext ciphertext;
    bool operator==(const ConnectedNotice&) const = default;
};

/// Encrypt(S^D_p, DataBody)
struct DataReport {
    static constexpr MessageTag tag = MessageTag::DataReport;
    HybridCiphertext ciphertext;
    bool operator==(const DataReport&) const = default;
};

/// Encrypt(S^A_p, RevocationBody)
struct RevocationRequest {
    static constexpr MessageTag tag = MessageTag::RevocationRequest;
    HybridCiphertext ciphertext;
    bool operator==(const RevocationRequest&) const = default;
};

using Message = std::variant<SessionHello, NonceChallenge, NonceResponse, TokenDelivery,
                             DeviceProvision, RegistrationRequest, ActivationResponse,
                             ConnectedNotice, DataReport, RevocationRequest>;

MessageTag tag_of(const Message& m);

/// tag byte, then each field in declaration order; variable-length fields
/// carry a big-endian u32 length prefix.
Bytes encode(const Message& m);

/// Total over arbitrary input: returns a message or throws Error with code
/// Truncated, UnknownTag or TrailingBytes.
Message decode(ByteView in);

// ---- inner plaintexts ----

Bytes encode_signature(const crypto::Signature& s);
crypto::Signature decode_signature(ByteView in);

struct SignedNonce {
    crypto::Nonce nonce;
    crypto::Signature signature;

    Bytes encode() const;
    static SignedNonce decode(ByteView in);
    bool operator==(const SignedNonce&) const = default;
};

/// (T_n, S_a)
struct TokenGrant {
    std::string token;
    std::string api_address;

    Bytes encode() const;
    static TokenGrant decode(ByteView in);
    bool operator==(const TokenGrant&) const = default;
};

/// Plaintext of encrypted_token: the transient token bound to a fresh
/// authenticator nonce, so each provisioning attempt is unique.
struct TokenBinding {
    std::string token;
    crypto::Nonce nonce;

    Bytes encode() const;
    static TokenBinding decode(ByteView in);
    bool operator==(const TokenBinding&) const = default;
};

/// (S_a, S^A_p, encrypted_token, signature)
struct ProvisionBundle {
    std::string api_address;
    Bytes server_public_key;
    HybridCiphertext encrypted_token;
    crypto::Signature signature;

    Bytes encode() const;
    static ProvisionBundle decode(ByteView in);
    bool operator==(const ProvisionBundle&) const = default;
};

/// (D^S_p, D_u, encrypted_token, signature)
struct RegistrationBody {
    Bytes device_public_key;
    crypto::PseudoUuid device_id;
    HybridCiphertext encrypted_token;
    crypto::Signature signature;

    Bytes encode() const;
    static RegistrationBody decode(ByteView in);
    bool operator==(const RegistrationBody&) const = default;
};

/// (T_D, S^D_p)
struct ActivationBody {
    crypto::LongLivedToken long_lived_token;
    Bytes server_public_key;

    Bytes encode() const;
    static ActivationBody decode(ByteView in);
    bool operator==(const ActivationBody&) const = default;
};

/// D_u || "connected"
struct ConnectedBody {
    crypto::PseudoUuid device_id;
    std::string status = "connected";

    Bytes encode() const;
    static ConnectedBody decode(ByteView in);
    bool operator==(const ConnectedBody&) const = default;
};

struct Reading {
    std::string metric;
    double value = 0;
    std::string unit;
    std::string manufacturer;

    bool operator==(const Reading&) const = default;
};

/// (D_u, reading, T_D)
struct DataBody {
    crypto::PseudoUuid device_id;
    Reading reading;
    crypto::LongLivedToken long_lived_token;

    Bytes encode() const;
    static DataBody decode(ByteView in);
    bool operator==(const DataBody&) const = default;
};

/// ("revoke", D_u)
struct RevocationBody {
    std::string command = "revoke";
    crypto::PseudoUuid device_id;

    Bytes encode() const;
    static RevocationBody decode(ByteView in);
    bool operator==(const RevocationBody&) const = default;
};

} // namespace onboard::wire
