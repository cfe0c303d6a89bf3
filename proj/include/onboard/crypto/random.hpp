#pragma once

#include "onboard/bytes.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace onboard::crypto {

/// Source of randomness. Everything that needs entropy takes one of these by
/// reference so runs can be replayed from a seed.
class Rng {
public:
    virtual ~Rng() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    Bytes bytes(std::size_t n);
    std::uint64_t next_u64();
    /// Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform in [0, 1).
    double unit();
};

/// Deterministic generator: SHA-256 in counter mode over a 32-byte seed.
class SeededRng final : public Rng {
public:
    explicit SeededRng(std::uint64_t seed);
    explicit SeededRng(ByteView seed);

    void fill(std::span<std::uint8_t> out) override;

    /// Independent child stream; same parent state and label give the same child.
    SeededRng fork(std::string_view label);

private:
    void refill();

    std::array<std::uint8_t, 32> seed_{};
    std::uint64_t counter_ = 0;
    std::array<std::uint8_t, 32> block_{};
    std::size_t used_ = block_.size();
};

/// Operating-system entropy (OpenSSL RAND_bytes).
class OsRng final : public Rng {
public:
    void fill(std::span<std::uint8_t> out) override;
};

/// Seconds since an arbitrary epoch.
using Timestamp = std::int64_t;
using Seconds = std::int64_t;

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = 0) : now_(start) {}
    Timestamp now() const override { return now_; }
    void set(Timestamp t) { now_ = t; }
    void advance(Seconds s) { now_ += s; }

private:
    Timestamp now_;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

} // namespace onboard::crypto
