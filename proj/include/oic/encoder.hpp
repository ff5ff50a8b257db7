#pragma once

#include "oic/blocks.hpp"
#include "oic/codec_core.hpp"
#include "oic/geom.hpp"
#include "oic/incremental.hpp"
#include "oic/placement.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace oic {

/// Bits of the per-plane checksum carried with every extraction.
inline constexpr int kChecksumBits = 16;
/// Bits of the intra mode id sent with every non-empty context.
inline constexpr int kModeBits = 4;

struct EncoderConfig {
    int block_size = 32;
    int qp = 27;
    RateMode mode = RateMode::Theoretical;
    std::uint64_t seed = kDefaultCodeSeed;
    int ladder_steps = kDefaultLadderSteps;
    AccessStrategy strategy = AccessStrategy::Fixed;
    ViewportSpec viewport;  ///< field of view used by access placement
    SweepParams sweep;
    bool prefer_horizontal = true;
};

/// Transmission cost (bits) of every block under every context it can be
/// decoded with, whether or not the context is stored; -1 where the grid has no
/// such neighbour. Always computed with theoretical rates.
struct RateTable {
    BlockGrid grid;
    int planes = 0;
    std::vector<std::array<std::int64_t, kContextCount>> bits;

    [[nodiscard]] std::int64_t at(int block, ContextId ctx) const { return bits.at(block)[index_of(ctx)]; }
};

/// The stored artifact: everything a decoder needs, plus (theoretical mode)
/// the lossless plane transport that is not charged to S or R.
struct EncodedImage {
    int width = 0;
    int height = 0;
    BlockGrid grid;
    int qp = 0;
    int planes = 0;
    RateMode mode = RateMode::Theoretical;
    std::uint64_t seed = kDefaultCodeSeed;
    int ladder_steps = kDefaultLadderSteps;
    bool prefer_horizontal = true;
    AccessBlockSet access;
    /// Intra mode per (block, context); unused entries are 0.
    std::vector<std::array<std::uint8_t, kContextCount>> intra_modes;
    std::vector<BlockStream> streams;
    /// Theoretical mode only: the planes of every block.
    std::vector<std::vector<BitVector>> transport;

    [[nodiscard]] std::shared_ptr<const LdpcaCode> code() const;
    [[nodiscard]] bool is_access(int block) const { return access.contains(block); }
    /// Stored contexts of a block, ascending ContextId.
    [[nodiscard]] std::vector<ContextId> contexts(int block) const;
    /// Syndrome prefixes + checksums + mode id for decoding block with ctx.
    [[nodiscard]] std::int64_t transmit_bits(int block, ContextId ctx) const;
    /// Σ over planes of the worst stored rate (the stored syndrome bits).
    [[nodiscard]] std::int64_t stored_syndrome_bits(int block) const;
};

/// Encoder by-products used for verification and baselines.
struct EncodeArtifacts {
    PlaneImage luma;
    PlaneImage reconstruction;
    std::vector<std::vector<int>> levels;
    RateTable rates;
};

/// Quantized transform levels of every block and the plane count P.
struct LevelSet {
    BlockGrid grid;
    std::vector<std::vector<int>> levels;
    int planes = 0;
};
LevelSet compute_levels(const PlaneImage& luma, int block_size, int qp);

/// Reconstruction of every block from its levels.
PlaneImage reconstruct_image(const LevelSet& levels, int qp);

/// Planes of the side information for (block, ctx) predicted from `recon`.
/// Empty yields all-zero planes.
std::vector<BitVector> side_information_planes(const Dct& dct, const BlockGrid& grid, const PlaneImage& recon,
                                               std::span<const std::uint8_t> decoded, int block, ContextId ctx,
                                               IntraMode mode, int qp, int planes);

/// Theoretical transmission costs for every block and realizable context,
/// with the SSE-best intra mode per context.
RateTable compute_rate_table(const PlaneImage& luma, const LevelSet& levels, int qp,
                             std::vector<std::array<std::uint8_t, kContextCount>>* best_modes = nullptr);

/// Cost formula shared by every coder: syndrome bits + checksums + mode id.
std::int64_t transmit_cost(std::int64_t syndrome_bits, int planes, ContextId ctx);

/// Encodes an image (converted to luma) once for all decoding orders.
EncodedImage encode_image(const PlaneImage& img, const EncoderConfig& cfg, EncodeArtifacts* artifacts = nullptr);

}  // namespace oic
