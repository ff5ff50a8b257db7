#pragma once

#include "oic/encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace oic {

inline constexpr std::uint16_t kContainerVersion = 1;

/// Header flag bits.
namespace container_flags {
inline constexpr std::uint16_t kPractical = 1u << 0;
inline constexpr std::uint16_t kContentPlacement = 1u << 1;
inline constexpr std::uint16_t kPreferHorizontal = 1u << 2;
/// Set when planes are ordered sign first; never set by this encoder.
inline constexpr std::uint16_t kSignFirst = 1u << 3;
}  // namespace container_flags

/// Bit accounting of the stored part of a container (everything but the
/// theoretical-mode transport section). Sums to 8 * storage bytes exactly.
struct StorageAccount {
    std::uint64_t syndrome_bits = 0;   ///< Σ blocks Σ planes worst stored rate
    std::uint64_t checksum_bits = 0;   ///< 16 per plane per block
    std::uint64_t directory_bits = 0;  ///< chunk directories
    std::uint64_t mode_bits = 0;       ///< 4 per stored non-empty context
    std::uint64_t header_bits = 0;     ///< fixed header, access set, block offsets
    std::uint64_t padding_bits = 0;    ///< byte alignment

    [[nodiscard]] std::uint64_t total_bits() const
    {
        return syndrome_bits + checksum_bits + directory_bits + mode_bits + header_bits + padding_bits;
    }
};

/// Serializes an encoded image to the .oic layout:
///   magic "OIC1", version u16, flags u16, width u16, height u16, block_size u16,
///   qp u8, planes u8, seed u64, ladder steps u16, storage bytes u64,
///   transport bytes u64, access count u32, access set (bitmap for fixed
///   placement, u16 indices for content placement), 4-bit intra mode table,
///   u32 payload offset per block, payload, transport section.
/// Each block record holds, per plane, crc16, the chunk directory and the chunk
/// bits; records are byte aligned with zero padding. Chunks are canonical
/// (ordered by end, ties by context id), so the directory stores the number of
/// distinct ends and their increments as Elias-gamma codes (the first one
/// offset by one so that it may be zero), then for each admissible context in
/// id order its group index on ceil(log2 groups) bits. The transport section (theoretical mode
/// only) stores every block's levels as int16.
std::vector<std::uint8_t> serialize(const EncodedImage& enc);

/// Inverse of serialize. Throws FormatError on bad magic/version, truncation,
/// inconsistent directories or sizes, or non-zero padding.
EncodedImage parse(std::span<const std::uint8_t> bytes);

/// Accounting of serialize(enc) without building the bytes.
StorageAccount storage_account(const EncodedImage& enc);

/// Storage S in bytes as written in the header.
std::uint64_t storage_bytes(const EncodedImage& enc);

void write_container(const EncodedImage& enc, const std::filesystem::path& path);
EncodedImage read_container(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// --- head traces --------------------------------------------------------------

struct TraceRecord {
    std::string user_id;
    std::int64_t t_ms = 0;
    Direction direction;
};

struct UserTrace {
    std::string user_id;
    std::vector<TraceRecord> records;
};

/// Users in order of first appearance.
struct HeadTrace {
    std::vector<UserTrace> users;

    [[nodiscard]] std::size_t request_count() const;
};

inline constexpr const char* kTraceHeader = "user_id,t_ms,longitude_rad,latitude_rad";

/// Parses the trace CSV. Throws FormatError with the line number on malformed
/// rows, out-of-range angles or non-increasing times within a user.
HeadTrace parse_trace(std::string_view text);
HeadTrace load_trace(const std::filesystem::path& path);
std::string format_trace(const HeadTrace& trace);

}  // namespace oic
