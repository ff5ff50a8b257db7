#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace oic {

/// Dense bit vector; one byte per bit keeps BP and plane code simple and the
/// vectors involved are at most a few thousand entries long.
using BitVector = std::vector<std::uint8_t>;

std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// CRC-16/CCITT-FALSE over the bit sequence (bits fed MSB-first).
std::uint16_t crc16(std::span<const std::uint8_t> bits);

/// MSB-first bit packer. Padding up to the byte boundary is zero.
class BitWriter {
public:
    void put(std::uint64_t value, unsigned width);
    void put_bits(std::span<const std::uint8_t> bits);
    void align();
    [[nodiscard]] std::size_t bit_count() const { return bits_; }
    [[nodiscard]] const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t bits_ = 0;
};

/// MSB-first bit reader over a byte span. Throws FormatError when reading past
/// the end.
class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}
    std::uint64_t get(unsigned width);
    BitVector get_bits(std::size_t count);
    /// Skips to the next byte boundary; returns false if any skipped bit is set.
    bool align();
    [[nodiscard]] std::size_t position() const { return pos_; }
    [[nodiscard]] std::size_t remaining() const { return data_.size() * 8 - pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace oic
