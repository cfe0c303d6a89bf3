#include "onboard/channels/trace.hpp"

#include <algorithm>
#include <sstream>

namespace onboard::channels {

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::SessionEstablished: return "SessionEstablished";
    case EventKind::TokenIssued: return "TokenIssued";
    case EventKind::DeviceProvisioned: return "DeviceProvisioned";
    case EventKind::DeviceRequestSent: return "DeviceRequestSent";
    case EventKind::DeviceRequestAccepted: return "DeviceRequestAccepted";
    case EventKind::RequestRejected: return "RequestRejected";
    case EventKind::RegistrationSuccess: return "RegistrationSuccess";
    case EventKind::KeypairDelivered: return "KeypairDelivered";
    case EventKind::DeviceActivated: return "DeviceActivated";
    case EventKind::ActivationRejected: return "ActivationRejected";
    case EventKind::AuthenticatorNotified: return "AuthenticatorNotified";
    case EventKind::DataCommitted: return "DataCommitted";
    case EventKind::DataRejected: return "DataRejected";
    case EventKind::RiskAlertRaised: return "RiskAlertRaised";
    case EventKind::DeviceRevoked: return "DeviceRevoked";
    case EventKind::AdversaryAction: return "AdversaryAction";
    }
    return "Unknown";
}

const TraceEvent& Trace::append(TraceEvent event) {
    event.time = ++clock_;
    events_.push_back(std::move(event));
    return events_.back();
}

std::vector<TraceEvent> Trace::of_kind(EventKind kind) const {
    std::vector<TraceEvent> out;
    std::copy_if(events_.begin(), events_.end(), std::back_inserter(out),
                 [kind](const TraceEvent& e) { return e.kind == kind; });
    return out;
}

std::size_t Trace::count(EventKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        events_.begin(), events_.end(), [kind](const TraceEvent& e) { return e.kind == kind; }));
}

std::string Trace::to_text() const {
    std::ostringstream os;
    for (const auto& e : events_) {
        os << e.time << '\t' << e.role << '\t' << to_string(e.kind) << '\t' << e.payload_digest << '\t'
           << e.device_id << '\t' << e.token_ref << '\t' << e.nonce_ref << '\t' << e.signature_ref
           << '\t' << e.detail << '\n';
    }
    return os.str();
}

crypto::Digest Trace::digest() const { return crypto::sha256(to_bytes(to_text())); }

std::string digest_ref(ByteView data) {
    auto d = crypto::sha256(data);
    return to_hex(ByteView(d).first(8));
}

} // namespace onboard::channels
