#include "onboard/crypto/totp.hpp"

#include "onboard/crypto/suite.hpp"

#include <cstdio>
#include <stdexcept>

namespace onboard::crypto {

namespace {
constexpr std::uint32_t kPow10[] = {1,      10,      100,      1000,      10000,
                                    100000, 1000000, 10000000, 100000000, 1000000000};
}

std::string hotp(ByteView secret, std::uint64_t counter, int digits) {
    if (digits < 1 || digits > 9) throw std::invalid_argument("hotp: digits out of range");
    Writer w;
    w.u64(counter);
    auto mac = hmac_sha1(secret, w.data());
    unsigned offset = mac.back() & 0x0f;
    std::uint32_t bin = (static_cast<std::uint32_t>(mac[offset] & 0x7f) << 24) |
                        (static_cast<std::uint32_t>(mac[offset + 1]) << 16) |
                        (static_cast<std::uint32_t>(mac[offset + 2]) << 8) |
                        static_cast<std::uint32_t>(mac[offset + 3]);
    std::uint32_t code = bin % kPow10[digits];
    char buf[16];
    std::snprintf(buf, sizeof buf, "%0*u", digits, code);
    return buf;
}

std::int64_t totp_step_index(Timestamp now, Seconds step) {
    if (step <= 0) throw std::invalid_argument("totp: step must be positive");
    // floor division, so negative timestamps still land in the right step
    auto q = now / step;
    if (now % step != 0 && now < 0) --q;
    return q;
}

TransientToken totp_generate(ByteView secret, Timestamp now, Seconds step, int digits) {
    auto index = totp_step_index(now, step);
    return {hotp(secret, static_cast<std::uint64_t>(index), digits), index};
}

bool totp_verify(ByteView secret, std::string_view token, Timestamp now, Seconds step,
                 int digits) {
    if (token.size() != static_cast<std::size_t>(digits)) return false;
    for (char c : token)
        if (c < '0' || c > '9') return false;
    return totp_generate(secret, now, step, digits).digits == token;
}

} // namespace onboard::crypto
