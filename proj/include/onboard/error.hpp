#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace onboard {

enum class ErrorCode {
    // crypto
    MalformedKey,
    DecryptionFailure,
    KeyExpired,
    // wire
    Truncated,
    UnknownTag,
    TrailingBytes,
    // channels
    ChannelClosed,
    // roles
    SignatureInvalid,
    NonceMismatch,
    NoSession,
    LinkKeyMismatch,
    NotProvisioned,
    TokenExpired,
    TokenUnknown,
    TokenConsumed,
    Malformed,
    LedgerRejected,
    UnknownDevice,
    RevokedDevice,
    TokenMismatch,
    AlreadyRevoked,
    PhaseViolation,
    // ledger
    PolicyDenied,
    InvalidPayload,
    UnknownIdentity,
    BadSignature,
    // risk engine
    UnknownRole,
    // harness / cli
    ScenarioInvalid,
    ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above, so
/// callers (and the CLI's exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    explicit Error(ErrorCode code)
        : std::runtime_error(std::string(to_string(code))), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace onboard
