#pragma once

#include "onboard/channels/knowledge.hpp"
#include "onboard/channels/trace.hpp"

#include <string>
#include <vector>

namespace onboard::harness {

enum class Lemma : std::uint8_t { Authentication, TokenIntegrity, KeypairConfidentiality };

std::string_view to_string(Lemma lemma);

struct LemmaVerdict {
    Lemma lemma{};
    bool holds = true;
    std::vector<channels::TraceEvent> witness;  // non-empty iff !holds
    std::string reason;
};

/// Every RegistrationSuccess has a strictly earlier DeviceRequestAccepted
/// for the same token and nonce.
LemmaVerdict check_authentication(const channels::Trace& trace);

/// Accepted requests sharing (token, nonce, signature) all name one device.
LemmaVerdict check_token_integrity(const channels::Trace& trace);

/// Values the adversary must never derive.
struct SecretTargets {
    std::vector<channels::TermPtr> terms;  // secret-key atoms, T_D atoms, (T_D, S^D_p) pairs
};

LemmaVerdict check_keypair_confidentiality(const channels::Trace& trace,
                                           const channels::AdversaryKnowledge& knowledge,
                                           const SecretTargets& targets);

} // namespace onboard::harness
