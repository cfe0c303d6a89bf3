#include "onboard/error.hpp"

namespace onboard {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedKey: return "MalformedKey";
    case ErrorCode::DecryptionFailure: return "DecryptionFailure";
    case ErrorCode::KeyExpired: return "KeyExpired";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::ChannelClosed: return "ChannelClosed";
    case ErrorCode::SignatureInvalid: return "SignatureInvalid";
    case ErrorCode::NonceMismatch: return "NonceMismatch";
    case ErrorCode::NoSession: return "NoSession";
    case ErrorCode::LinkKeyMismatch: return "LinkKeyMismatch";
    case ErrorCode::NotProvisioned: return "NotProvisioned";
    case ErrorCode::TokenExpired: return "TokenExpired";
    case ErrorCode::TokenUnknown: return "TokenUnknown";
    case ErrorCode::TokenConsumed: return "TokenConsumed";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::LedgerRejected: return "LedgerRejected";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::RevokedDevice: return "RevokedDevice";
    case ErrorCode::TokenMismatch: return "TokenMismatch";
    case ErrorCode::AlreadyRevoked: return "AlreadyRevoked";
    case ErrorCode::PhaseViolation: return "PhaseViolation";
    case ErrorCode::PolicyDenied: return "PolicyDenied";
    case ErrorCode::InvalidPayload: return "InvalidPayload";
    case ErrorCode::UnknownIdentity: return "UnknownIdentity";
    case ErrorCode::BadSignature: return "BadSignature";
    case ErrorCode::UnknownRole: return "UnknownRole";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

} // namespace onboard
