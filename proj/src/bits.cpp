#include "oic/bits.hpp"

#include "oic/error.hpp"

namespace oic {

std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    if (a.size() != b.size()) {
        throw InvalidArgument("hamming_distance: length mismatch");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] != b[i]) ? 1 : 0;
    }
    return d;
}

std::uint16_t crc16(std::span<const std::uint8_t> bits)
{
    std::uint16_t crc = 0xFFFF;
    for (const std::uint8_t b : bits) {
        const bool top = (crc & 0x8000) != 0;
        crc = static_cast<std::uint16_t>(crc << 1);
        if (top != (b != 0)) {
            crc ^= 0x1021;
        }
    }
    return crc;
}

void BitWriter::put(std::uint64_t value, unsigned width)
{
    for (unsigned i = width; i-- > 0;) {
        if (bits_ % 8 == 0) {
            bytes_.push_back(0);
        }
        if ((value >> i) & 1U) {
            bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (bits_ % 8));
        }
        ++bits_;
    }
}

void BitWriter::put_bits(std::span<const std::uint8_t> bits)
{
    for (const std::uint8_t b : bits) {
        put(b ? 1 : 0, 1);
    }
}

void BitWriter::align()
{
    bits_ = bytes_.size() * 8;
}

std::uint64_t BitReader::get(unsigned width)
{
    if (width > remaining()) {
        throw FormatError("bit reader: truncated data");
    }
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) {
        const std::uint8_t byte = data_[pos_ / 8];
        v = (v << 1) | ((byte >> (7 - pos_ % 8)) & 1U);
        ++pos_;
    }
    return v;
}

BitVector BitReader::get_bits(std::size_t count)
{
    if (count > remaining()) {
        throw FormatError("bit reader: truncated data");
    }
    BitVector out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = static_cast<std::uint8_t>(get(1));
    }
    return out;
}

bool BitReader::align()
{
    bool clean = true;
    while (pos_ % 8 != 0) {
        clean = clean && get(1) == 0;
    }
    return clean;
}

}  // namespace oic
