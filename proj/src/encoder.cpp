#include "oic/encoder.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <cstdlib>

namespace oic {

std::shared_ptr<const LdpcaCode> EncodedImage::code() const
{
    return LdpcaCode::shared(grid.block_size() * grid.block_size(), ladder_steps, seed);
}

std::vector<ContextId> EncodedImage::contexts(int block) const
{
    return context_set_for(grid, block, is_access(block));
}

std::int64_t transmit_cost(std::int64_t syndrome_bits, int planes, ContextId ctx)
{
    return syndrome_bits + static_cast<std::int64_t>(kChecksumBits) * planes +
           (ctx == ContextId::Empty ? 0 : kModeBits);
}

std::int64_t EncodedImage::transmit_bits(int block, ContextId ctx) const
{
    return transmit_cost(streams.at(block).syndrome_bits_for(ctx), planes, ctx);
}

std::int64_t EncodedImage::stored_syndrome_bits(int block) const
{
    return streams.at(block).stored_syndrome_bits();
}

LevelSet compute_levels(const PlaneImage& luma, int block_size, int qp)
{
    quant_step(qp);
    const Partition part = partition(luma, block_size);
    const Dct dct(block_size);
    LevelSet out{part.grid, {}, 0};
    out.levels.reserve(part.blocks.size());
    int max_abs = 0;
    for (const auto& block : part.blocks) {
        auto levels = quantize(dct.forward(std::span<const std::uint8_t>(block)), qp);
        for (const int l : levels) {
            max_abs = std::max(max_abs, std::abs(l));
        }
        out.levels.push_back(std::move(levels));
    }
    out.planes = plane_count_for(max_abs);
    return out;
}

PlaneImage reconstruct_image(const LevelSet& levels, int qp)
{
    const Dct dct(levels.grid.block_size());
    PlaneImage img(levels.grid.width(), levels.grid.height(), 1);
    for (int b = 0; b < levels.grid.count(); ++b) {
        write_block(img, levels.grid, b, reconstruct(dct, levels.levels[b], qp));
    }
    return img;
}

std::vector<BitVector> side_information_planes(const Dct& dct, const BlockGrid& grid, const PlaneImage& recon,
                                               std::span<const std::uint8_t> decoded, int block, ContextId ctx,
                                               IntraMode mode, int qp, int planes)
{
    const std::size_t n = static_cast<std::size_t>(grid.block_size()) * grid.block_size();
    if (ctx == ContextId::Empty) {
        return std::vector<BitVector>(static_cast<std::size_t>(planes), BitVector(n, 0));
    }
    const auto pred = predict(grid, recon, decoded, block, ctx, mode);
    return bitplane_split(side_information_levels(dct, pred, qp, planes), planes);
}

namespace {

/// Per block: SI planes and SSE-best mode for every realizable context.
struct BlockSideInfo {
    std::map<ContextId, std::vector<BitVector>> planes;
    std::array<std::uint8_t, kContextCount> modes{};
};

BlockSideInfo block_side_info(const Dct& dct, const BlockGrid& grid, const PlaneImage& luma, const PlaneImage& recon,
                              std::span<const std::uint8_t> all_decoded, int block, int qp, int planes)
{
    BlockSideInfo out;
    const auto original = read_block(luma, grid, block);
    for (int c = 0; c < kNeighborContextCount; ++c) {
        const auto ctx = static_cast<ContextId>(c);
        if (!grid.context_blocks(block, ctx)) {
            continue;
        }
        const IntraMode mode = best_intra_mode(grid, recon, all_decoded, block, ctx, original);
        out.modes[c] = static_cast<std::uint8_t>(mode);
        out.planes[ctx] = side_information_planes(dct, grid, recon, all_decoded, block, ctx, mode, qp, planes);
    }
    out.planes[ContextId::Empty] = side_information_planes(dct, grid, recon, all_decoded, block, ContextId::Empty,
                                                           IntraMode::DC, qp, planes);
    return out;
}

std::int64_t theoretical_bits(const std::vector<BitVector>& x, const std::vector<BitVector>& si)
{
    std::int64_t bits = 0;
    for (std::size_t p = 0; p < x.size(); ++p) {
        bits += theoretical_rate(x[p], si[p]);
    }
    return bits;
}

}  // namespace

RateTable compute_rate_table(const PlaneImage& luma, const LevelSet& levels, int qp,
                             std::vector<std::array<std::uint8_t, kContextCount>>* best_modes)
{
    const BlockGrid& grid = levels.grid;
    const Dct dct(grid.block_size());
    const PlaneImage recon = reconstruct_image(levels, qp);
    const std::vector<std::uint8_t> all(static_cast<std::size_t>(grid.count()), 1);
    RateTable table{grid, levels.planes, {}};
    table.bits.resize(static_cast<std::size_t>(grid.count()));
    if (best_modes) {
        best_modes->assign(static_cast<std::size_t>(grid.count()), {});
    }
    for (int b = 0; b < grid.count(); ++b) {
        const auto x = bitplane_split(levels.levels[b], levels.planes);
        const BlockSideInfo si = block_side_info(dct, grid, luma, recon, all, b, qp, levels.planes);
        auto& row = table.bits[b];
        row.fill(-1);
        for (const auto& [ctx, planes] : si.planes) {
            row[index_of(ctx)] = transmit_cost(theoretical_bits(x, planes), levels.planes, ctx);
        }
        if (best_modes) {
            (*best_modes)[b] = si.modes;
        }
    }
    return table;
}

EncodedImage encode_image(const PlaneImage& img, const EncoderConfig& cfg, EncodeArtifacts* artifacts)
{
    const PlaneImage luma = to_luma(img);
    const LevelSet levels = compute_levels(luma, cfg.block_size, cfg.qp);
    const BlockGrid& grid = levels.grid;
    const int n = cfg.block_size * cfg.block_size;
    if (n > 2048) {
        throw InvalidArgument("block size too large for the length field of the container");
    }

    EncodedImage enc;
    enc.width = luma.width();
    enc.height = luma.height();
    enc.grid = grid;
    enc.qp = cfg.qp;
    enc.planes = levels.planes;
    enc.mode = cfg.mode;
    enc.seed = cfg.seed;
    enc.ladder_steps = cfg.ladder_steps;
    enc.prefer_horizontal = cfg.prefer_horizontal;
    const auto code = enc.code();

    RateTable rates = compute_rate_table(luma, levels, cfg.qp);
    if (cfg.strategy == AccessStrategy::Fixed) {
        enc.access = place_fixed(grid, cfg.viewport, cfg.sweep);
    } else {
        std::vector<double> standalone(static_cast<std::size_t>(grid.count()));
        for (int b = 0; b < grid.count(); ++b) {
            standalone[b] = static_cast<double>(rates.at(b, ContextId::Empty));
        }
        enc.access = place_content(grid, cfg.viewport, standalone, cfg.sweep);
    }

    const Dct dct(cfg.block_size);
    const PlaneImage recon = reconstruct_image(levels, cfg.qp);
    const std::vector<std::uint8_t> all(static_cast<std::size_t>(grid.count()), 1);
    enc.intra_modes.resize(static_cast<std::size_t>(grid.count()));
    enc.streams.resize(static_cast<std::size_t>(grid.count()));
    if (cfg.mode == RateMode::Theoretical) {
        enc.transport.resize(static_cast<std::size_t>(grid.count()));
    }
    for (int b = 0; b < grid.count(); ++b) {
        const auto x = bitplane_split(levels.levels[b], levels.planes);
        BlockSideInfo si = block_side_info(dct, grid, luma, recon, all, b, cfg.qp, levels.planes);
        if (!enc.is_access(b)) {
            si.planes.erase(ContextId::Empty);
        }
        enc.intra_modes[b] = si.modes;
        enc.streams[b] = encode_block(*code, x, si.planes, cfg.mode);
        if (cfg.mode == RateMode::Theoretical) {
            enc.transport[b] = x;
        }
    }
    if (artifacts) {
        artifacts->luma = luma;
        artifacts->reconstruction = recon;
        artifacts->levels = levels.levels;
        artifacts->rates = std::move(rates);
    }
    return enc;
}

}  // namespace oic
