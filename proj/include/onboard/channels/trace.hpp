#pragma once

#include "onboard/bytes.hpp"
#include "onboard/crypto/suite.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace onboard::channels {

enum class EventKind : std::uint8_t {
    SessionEstablished,
    TokenIssued,
    DeviceProvisioned,
    DeviceRequestSent,
    DeviceRequestAccepted,
    RequestRejected,
    RegistrationSuccess,
    KeypairDelivered,
    DeviceActivated,
    ActivationRejected,
    AuthenticatorNotified,
    DataCommitted,
    DataRejected,
    RiskAlertRaised,
    DeviceRevoked,
    AdversaryAction,
};

std::string_view to_string(EventKind kind);

/// One trace record. The token/nonce/signature references are hex SHA-256
/// digests so lemma checks can compare them without exposing the values.
struct TraceEvent {
    std::uint64_t time = 0;
    std::string role;
    EventKind kind{};
    std::string payload_digest;
    std::string device_id;
    std::string token_ref;
    std::string nonce_ref;
    std::string signature_ref;
    std::string detail;

    bool operator==(const TraceEvent&) const = default;
};

/// Append-only event log with a logical clock: every append takes the next
/// tick, so times are strictly increasing by construction.
class Trace {
public:
    const TraceEvent& append(TraceEvent event);

    const std::vector<TraceEvent>& events() const { return events_; }
    std::uint64_t now() const { return clock_; }

    std::vector<TraceEvent> of_kind(EventKind kind) const;
    std::size_t count(EventKind kind) const;

    /// One tab-separated line per event; stable across runs and platforms.
    std::string to_text() const;
    crypto::Digest digest() const;

private:
    std::vector<TraceEvent> events_;
    std::uint64_t clock_ = 0;
};

std::string digest_ref(ByteView data);

} // namespace onboard::channels
