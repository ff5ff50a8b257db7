#include "oic/baselines.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <charconv>

namespace oic {

namespace {

/// Sizes of `parts` consecutive runs covering `total`; the first runs take the
/// remainder.
std::vector<int> split_evenly(int total, int parts)
{
    std::vector<int> sizes(static_cast<std::size_t>(parts), total / parts);
    for (int i = 0; i < total % parts; ++i) {
        ++sizes[i];
    }
    return sizes;
}

}  // namespace

TileLayout TileLayout::regular(const BlockGrid& grid, int m, int n)
{
    if (m < 1 || n < 1 || m > grid.rows() || n > grid.cols()) {
        throw InvalidArgument("tile layout " + std::to_string(m) + "x" + std::to_string(n) + " does not fit a " +
                              std::to_string(grid.rows()) + "x" + std::to_string(grid.cols()) + " block grid");
    }
    TileLayout layout;
    layout.tag = "t" + std::to_string(m) + "x" + std::to_string(n);
    int row = 0;
    for (const int h : split_evenly(grid.rows(), m)) {
        int col = 0;
        for (const int w : split_evenly(grid.cols(), n)) {
            layout.tiles.push_back({row, col, h, w});
            col += w;
        }
        row += h;
    }
    return layout;
}

TileLayout TileLayout::opt(const BlockGrid& grid)
{
    const int band = grid.rows() / 4;
    if (band < 1 || grid.cols() < 4) {
        throw InvalidArgument("opt tile layout needs at least 4 block rows and 4 block columns");
    }
    TileLayout layout;
    layout.tag = "topt";
    layout.tiles.push_back({0, 0, band, grid.cols()});
    const int middle = grid.rows() - 2 * band;
    int col = 0;
    for (const int w : split_evenly(grid.cols(), 4)) {
        layout.tiles.push_back({band, col, middle, w});
        col += w;
    }
    layout.tiles.push_back({band + middle, 0, band, grid.cols()});
    return layout;
}

std::vector<int> TileLayout::tile_of_blocks(const BlockGrid& grid) const
{
    std::vector<int> owner(static_cast<std::size_t>(grid.count()), -1);
    for (std::size_t t = 0; t < tiles.size(); ++t) {
        const TileRect& r = tiles[t];
        if (r.rows < 1 || r.cols < 1 || r.row0 < 0 || r.col0 < 0 || r.row0 + r.rows > grid.rows() ||
            r.col0 + r.cols > grid.cols()) {
            throw InvalidArgument("tile " + std::to_string(t) + " lies outside the grid");
        }
        for (int row = r.row0; row < r.row0 + r.rows; ++row) {
            for (int col = r.col0; col < r.col0 + r.cols; ++col) {
                int& o = owner[grid.index(row, col)];
                if (o >= 0) {
                    throw InvalidArgument("tiles overlap");
                }
                o = static_cast<int>(t);
            }
        }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
        throw InvalidArgument("tiles do not cover the grid");
    }
    return owner;
}

TileLayout parse_layout(std::string_view tag, const BlockGrid& grid)
{
    if (tag == "topt") {
        return TileLayout::opt(grid);
    }
    const auto x = tag.find('x');
    if (tag.size() < 4 || tag.front() != 't' || x == std::string_view::npos) {
        throw InvalidArgument("unknown tile layout '" + std::string(tag) + "' (expected tMxN or topt)");
    }
    int m = 0;
    int n = 0;
    const auto rm = std::from_chars(tag.data() + 1, tag.data() + x, m);
    const auto rn = std::from_chars(tag.data() + x + 1, tag.data() + tag.size(), n);
    if (rm.ec != std::errc() || rm.ptr != tag.data() + x || rn.ec != std::errc() ||
        rn.ptr != tag.data() + tag.size()) {
        throw InvalidArgument("unknown tile layout '" + std::string(tag) + "' (expected tMxN or topt)");
    }
    return TileLayout::regular(grid, m, n);
}

ContextId tile_context(const TileRect& tile, int row, int col)
{
    if (row == tile.row0 && col == tile.col0) {
        return ContextId::Empty;
    }
    if (row == tile.row0) {
        return ContextId::T1_L;
    }
    if (col == tile.col0) {
        return ContextId::T1_T;
    }
    return ContextId::T3_TL;
}

std::uint64_t TileCoding::storage_bytes() const
{
    std::uint64_t total = 0;
    for (const std::int64_t bits : tile_bits) {
        total += static_cast<std::uint64_t>((bits + 7) / 8);
    }
    return total;
}

TileCoding tile_encode(const RateTable& rates, const TileLayout& layout)
{
    const BlockGrid& grid = rates.grid;
    TileCoding out;
    out.layout = layout;
    out.tile_of = layout.tile_of_blocks(grid);
    out.tile_bits.assign(layout.tiles.size(), 0);
    out.tile_pixels.assign(layout.tiles.size(), 0);
    for (int b = 0; b < grid.count(); ++b) {
        const int t = out.tile_of[b];
        const std::int64_t bits = rates.at(b, tile_context(layout.tiles[t], grid.row_of(b), grid.col_of(b)));
        if (bits < 0) {
            throw Error("rate table lacks a context required by the tile coder");
        }
        out.tile_bits[t] += bits;
        out.tile_pixels[t] += block_pixels(grid);
    }
    return out;
}

TileSession::TileSession(const TileCoding& coding) : coding_(&coding), sent_(coding.layout.tiles.size(), 0) {}

TileSession::Result TileSession::request(std::span<const int> requested)
{
    Result out;
    std::vector<std::uint8_t> touched(sent_.size(), 0);
    for (const int b : requested) {
        touched[coding_->tile_of.at(b)] = 1;
    }
    for (std::size_t t = 0; t < touched.size(); ++t) {
        if (!touched[t]) {
            continue;
        }
        out.decoded_px += coding_->tile_pixels[t];
        if (!sent_[t]) {
            sent_[t] = 1;
            out.new_tiles.push_back(static_cast<int>(t));
            out.request_bits += coding_->tile_bits[t];
        }
    }
    accumulated_ += out.request_bits;
    out.accumulated_bits = accumulated_;
    return out;
}

EsCoding es_encode(const RateTable& rates, std::span<const std::uint8_t> access)
{
    const BlockGrid& grid = rates.grid;
    if (static_cast<int>(access.size()) != grid.count()) {
        throw InvalidArgument("access mask size does not match the grid");
    }
    EsCoding out;
    out.rates = &rates;
    out.access.assign(access.begin(), access.end());
    for (int b = 0; b < grid.count(); ++b) {
        for (const ContextId ctx : context_set_for(grid, b, access[b] != 0)) {
            out.storage_bits += static_cast<std::uint64_t>(rates.at(b, ctx));
        }
    }
    return out;
}

EsSession::EsSession(const EsCoding& coding, OrderMethod order, bool prefer_horizontal)
    : coding_(&coding),
      order_(order),
      prefer_horizontal_(prefer_horizontal),
      decoded_(static_cast<std::size_t>(coding.rates->grid.count()), 0)
{
}

EsSession::Result EsSession::request(std::span<const int> requested, int center)
{
    const RateTable& rates = *coding_->rates;
    PlanInput in;
    in.grid = &rates.grid;
    in.decoded = decoded_;
    in.requested = requested;
    in.access = coding_->access;
    in.center = center;
    in.method = order_;
    in.prefer_horizontal = prefer_horizontal_;
    in.bits = [&](int b, ContextId ctx) { return rates.at(b, ctx); };
    const RequestPlan plan = plan_request(in);

    Result out;
    std::size_t outside = 0;
    for (const PlannedBlock& pb : plan.blocks) {
        const std::int64_t bits = rates.at(pb.block, pb.ctx);
        out.blocks.push_back({pb.block, pb.ctx, bits});
        out.request_bits += bits;
        decoded_[pb.block] = 1;
        if (std::find(requested.begin(), requested.end(), pb.block) == requested.end()) {
            ++outside;
        }
    }
    out.request_bits += static_cast<std::int64_t>(plan.signaling_bits);
    accumulated_ += out.request_bits;
    out.accumulated_bits = accumulated_;
    out.decoded_px = (requested.size() + outside) * block_pixels(rates.grid);
    return out;
}

}  // namespace oic
