#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace onboard {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(ByteView b);

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view hex);

std::string base64_encode(ByteView b);
/// Throws Error(Malformed) on invalid input.
Bytes base64_decode(std::string_view text);

/// True when `needle` occurs as a contiguous run inside `haystack`.
bool contains(ByteView haystack, ByteView needle);

Bytes concat(std::initializer_list<ByteView> parts);

/// Big-endian, length-prefixed writer. Every variable-length field gets a
/// u32 length so the encoding is unambiguous and canonical.
class Writer {
public:
    Writer& u8(std::uint8_t v);
    Writer& u32(std::uint32_t v);
    Writer& u64(std::uint64_t v);
    Writer& f64(double v);
    Writer& bytes(ByteView b);
    Writer& str(std::string_view s);
    /// Appends without a length prefix (fixed-size fields).
    Writer& raw(ByteView b);

    const Bytes& data() const& { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    Bytes out_;
};

/// Counterpart of Writer. Reads past the end throw Error(Truncated);
/// finish() throws Error(TrailingBytes) if input remains.
class Reader {
public:
    explicit Reader(ByteView in) : in_(in) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    Bytes bytes();
    std::string str();
    Bytes raw(std::size_t n);

    std::size_t remaining() const { return in_.size() - pos_; }
    std::size_t position() const { return pos_; }
    void finish() const;

private:
    void need(std::size_t n) const;

    ByteView in_;
    std::size_t pos_ = 0;
};

} // namespace onboard
