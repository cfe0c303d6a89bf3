#pragma once

#include "onboard/bytes.hpp"
#include "onboard/crypto/suite.hpp"

#include <memory>
#include <string>
#include <vector>

namespace onboard::channels {

/// Symbolic term carried next to concrete bytes. The adversary reasons over
/// these, so its knowledge is exact rather than a byte-pattern guess.
enum class TermKind : std::uint8_t {
    Atom = 1,
    Pair = 2,
    HybridEnc = 3,   // key = recipient public key, children = {plaintext}
    LinkSealed = 4,  // key = link key value,        children = {plaintext}
    Signature = 5,   // key = signer public key,     children = {signed message}
};

enum class AtomKind : std::uint8_t {
    Data = 0,
    PublicKey = 1,
    SecretKey = 2,  // key field holds the matching public key
    LinkKey = 3,
    Nonce = 4,
    TransientToken = 5,
    LongLivedToken = 6,
    DeviceId = 7,
    ApiAddress = 8,
    Text = 9,
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
    TermKind kind = TermKind::Atom;
    AtomKind atom = AtomKind::Data;
    Bytes value;  // atom value, or the concrete encoding of a compound term
    Bytes key;
    std::vector<TermPtr> children;
    crypto::Digest id{};  // structural digest, computed by the factories below

    std::string describe() const;
};

TermPtr make_atom(AtomKind kind, Bytes value, Bytes partner_public_key = {});
TermPtr make_pair(std::vector<TermPtr> parts);
TermPtr make_hybrid(Bytes recipient_public_key, Bytes ciphertext_bytes, TermPtr plaintext);
TermPtr make_sealed(Bytes link_key, Bytes sealed_bytes, TermPtr plaintext);
TermPtr make_signature(Bytes signer_public_key, Bytes signature_bytes, TermPtr message);

} // namespace onboard::channels
