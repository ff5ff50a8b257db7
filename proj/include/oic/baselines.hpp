#pragma once

#include "oic/encoder.hpp"
#include "oic/ordering.hpp"
#include "oic/session.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oic {

/// Rectangle of blocks; columns do not wrap.
struct TileRect {
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;

    [[nodiscard]] bool contains(int row, int col) const
    {
        return row >= row0 && row < row0 + rows && col >= col0 && col < col0 + cols;
    }
};

/// Exact partition of a block grid into tiles.
struct TileLayout {
    std::string tag;
    std::vector<TileRect> tiles;

    /// m tile rows by n tile columns; remainders go to the first rows/columns.
    /// Throws InvalidArgument if m or n exceeds the grid.
    static TileLayout regular(const BlockGrid& grid, int m, int n);
    /// Top quarter of the rows one tile, bottom quarter one tile, the middle
    /// half split into four equal-width tiles.
    static TileLayout opt(const BlockGrid& grid);
    static TileLayout full(const BlockGrid& grid) { return regular(grid, 1, 1); }

    /// Tile index of every block. Throws InvalidArgument if the tiles overlap
    /// or leave a block uncovered.
    [[nodiscard]] std::vector<int> tile_of_blocks(const BlockGrid& grid) const;
};

/// Parses "t<m>x<n>" or "topt". Throws InvalidArgument.
TileLayout parse_layout(std::string_view tag, const BlockGrid& grid);

/// Context of a block coded in raster order inside its tile: the first block
/// of the tile is an access block, the rest of its first row predicts from the
/// left, the rest of its first column from the top, the others from the
/// top-left corner configuration.
ContextId tile_context(const TileRect& tile, int row, int col);

/// Tiles coded with the block codec; rates come from the theoretical table.
struct TileCoding {
    TileLayout layout;
    std::vector<int> tile_of;           ///< per block
    std::vector<std::int64_t> tile_bits;  ///< full stream of each tile
    std::vector<std::size_t> tile_pixels;

    /// Σ over tiles of the byte-aligned tile streams.
    [[nodiscard]] std::uint64_t storage_bytes() const;
};

TileCoding tile_encode(const RateTable& rates, const TileLayout& layout);

/// Tile streams sent to one user; tiles are never sent twice.
class TileSession {
public:
    explicit TileSession(const TileCoding& coding);

    struct Result {
        std::vector<int> new_tiles;
        std::int64_t request_bits = 0;
        std::int64_t accumulated_bits = 0;
        std::size_t decoded_px = 0;  ///< pixels of every tile touched by the request
    };

    /// `requested` is the block footprint of the request.
    Result request(std::span<const int> requested);

private:
    const TileCoding* coding_;
    std::vector<std::uint8_t> sent_;
    std::int64_t accumulated_ = 0;
};

/// Exhaustive storage: one stream per admissible (block, context) pair.
struct EsCoding {
    const RateTable* rates = nullptr;
    std::vector<std::uint8_t> access;  ///< blocks that also store the empty context
    std::uint64_t storage_bits = 0;

    [[nodiscard]] std::uint64_t storage_bytes() const { return (storage_bits + 7) / 8; }
};

EsCoding es_encode(const RateTable& rates, std::span<const std::uint8_t> access);

/// Exhaustive storage served along the same navigation as the incremental
/// coder; each block costs its stream for the context it is decoded with.
class EsSession {
public:
    EsSession(const EsCoding& coding, OrderMethod order, bool prefer_horizontal);

    struct Result {
        std::vector<SentBlock> blocks;
        std::int64_t request_bits = 0;
        std::int64_t accumulated_bits = 0;
        std::size_t decoded_px = 0;
    };

    Result request(std::span<const int> requested, int center);

private:
    const EsCoding* coding_;
    OrderMethod order_;
    bool prefer_horizontal_;
    std::vector<std::uint8_t> decoded_;
    std::int64_t accumulated_ = 0;
};

}  // namespace oic
