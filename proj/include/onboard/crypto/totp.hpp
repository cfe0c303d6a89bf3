#pragma once

#include "onboard/bytes.hpp"
#include "onboard/crypto/random.hpp"

#include <cstdint>
#include <string>

namespace onboard::crypto {

inline constexpr Seconds kTotpStep = 30;
inline constexpr int kTotpDigits = 8;
inline constexpr std::size_t kTotpSecretSize = 20;

struct TransientToken {
    std::string digits;
    std::int64_t issued_step = 0;

    bool operator==(const TransientToken&) const = default;
};

/// HOTP (HMAC-SHA1, dynamic truncation) over a big-endian counter.
std::string hotp(ByteView secret, std::uint64_t counter, int digits = kTotpDigits);

std::int64_t totp_step_index(Timestamp now, Seconds step = kTotpStep);

TransientToken totp_generate(ByteView secret, Timestamp now, Seconds step = kTotpStep,
                             int digits = kTotpDigits);

/// Strict single-step check: the token must match the step containing `now`.
/// No skew tolerance in either direction.
bool totp_verify(ByteView secret, std::string_view token, Timestamp now,
                 Seconds step = kTotpStep, int digits = kTotpDigits);

} // namespace onboard::crypto
