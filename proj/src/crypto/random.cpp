#include "onboard/crypto/random.hpp"

#include "onboard/crypto/suite.hpp"

#include <openssl/rand.h>

#include <chrono>
#include <stdexcept>

namespace onboard::crypto {

Bytes Rng::bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
}

std::uint64_t Rng::next_u64() {
    std::array<std::uint8_t, 8> buf{};
    fill(buf);
    std::uint64_t v = 0;
    for (auto b : buf) v = (v << 8) | b;
    return v;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
        auto v = next_u64();
        if (v < limit) return v % bound;
    }
}

double Rng::unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

SeededRng::SeededRng(std::uint64_t seed) {
    Writer w;
    w.str("onboard.seeded-rng").u64(seed);
    seed_ = sha256(w.data());
}

SeededRng::SeededRng(ByteView seed) {
    Writer w;
    w.str("onboard.seeded-rng").bytes(seed);
    seed_ = sha256(w.data());
}

void SeededRng::refill() {
    Writer w;
    w.raw(seed_).u64(counter_++);
    block_ = sha256(w.data());
    used_ = 0;
}

void SeededRng::fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
        if (used_ == block_.size()) refill();
        b = block_[used_++];
    }
}

SeededRng SeededRng::fork(std::string_view label) {
    Writer w;
    w.raw(bytes(32)).str(label);
    return SeededRng(ByteView(w.data()));
}

void OsRng::fill(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        throw std::runtime_error("RAND_bytes failed");
}

Timestamp SystemClock::now() const {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

} // namespace onboard::crypto
