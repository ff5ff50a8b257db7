#pragma once

#include "oic/image.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace oic {

/// Side-information context of a block: which already-decoded neighbours are
/// used to form its prediction.
///
/// Type 1 uses one adjacent block, Type 2 a vertical and a horizontal neighbour,
/// Type 3 additionally the corner block between them. Empty reads no neighbour
/// and is only admissible for access blocks.
enum class ContextId : std::uint8_t {
    T1_L = 0,
    T1_R,
    T1_T,
    T1_B,
    T2_TL,
    T2_TR,
    T2_BL,
    T2_BR,
    T3_TL,
    T3_TR,
    T3_BL,
    T3_BR,
    Empty,
};

inline constexpr int kContextCount = 13;
inline constexpr int kNeighborContextCount = 12;

/// 0 for Empty, otherwise 1..3.
int context_type(ContextId ctx);
std::string_view context_name(ContextId ctx);
ContextId context_from_index(int index);
inline int index_of(ContextId ctx) { return static_cast<int>(ctx); }

/// Whether the context reads from the given side (or the corner between two).
struct ContextFootprint {
    bool left = false;
    bool right = false;
    bool top = false;
    bool bottom = false;
    bool corner = false;
};
ContextFootprint context_footprint(ContextId ctx);

/// Row-major block partition of an equirectangular image with horizontal
/// wraparound: the leftmost and rightmost blocks of a row are adjacent.
class BlockGrid {
public:
    BlockGrid() = default;
    BlockGrid(int rows, int cols, int block_size);
    /// Throws InvalidArgument unless block_size divides both dimensions.
    static BlockGrid for_image(int width, int height, int block_size);

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] int block_size() const { return block_size_; }
    [[nodiscard]] int count() const { return rows_ * cols_; }
    [[nodiscard]] int width() const { return cols_ * block_size_; }
    [[nodiscard]] int height() const { return rows_ * block_size_; }

    [[nodiscard]] int index(int row, int col) const { return row * cols_ + wrap_col(col); }
    [[nodiscard]] int row_of(int block) const { return block / cols_; }
    [[nodiscard]] int col_of(int block) const { return block % cols_; }
    [[nodiscard]] int wrap_col(int col) const { return ((col % cols_) + cols_) % cols_; }

    [[nodiscard]] int left(int block) const { return index(row_of(block), col_of(block) - 1); }
    [[nodiscard]] int right(int block) const { return index(row_of(block), col_of(block) + 1); }
    [[nodiscard]] std::optional<int> top(int block) const;
    [[nodiscard]] std::optional<int> bottom(int block) const;

    /// Distinct adjacent blocks (left, right, top, bottom order, duplicates and
    /// the block itself removed).
    [[nodiscard]] std::vector<int> neighbors(int block) const;
    [[nodiscard]] bool adjacent(int a, int b) const;
    [[nodiscard]] bool horizontally_adjacent(int a, int b) const;

    /// Blocks a context reads from, or nullopt if the grid has no such
    /// neighbour (top row asking for a top neighbour, ...).
    [[nodiscard]] std::optional<std::vector<int>> context_blocks(int block, ContextId ctx) const;

    bool operator==(const BlockGrid&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    int block_size_ = 0;
};

/// Blocks of an image in row-major order, each block_size^2 samples.
struct Partition {
    BlockGrid grid;
    std::vector<std::vector<std::uint8_t>> blocks;
};

/// Splits a single-channel image. Throws InvalidArgument on non-divisible sizes.
Partition partition(const PlaneImage& img, int block_size);
PlaneImage reassemble(const Partition& p);

std::vector<std::uint8_t> read_block(const PlaneImage& img, const BlockGrid& grid, int block);
void write_block(PlaneImage& img, const BlockGrid& grid, int block, std::span<const std::uint8_t> samples);

/// Contexts a block may be encoded under: all 12 neighbour configurations minus
/// those needing a top (top row) or bottom (bottom row) neighbour, plus Empty
/// for access blocks. Ordered by ContextId.
std::vector<ContextId> context_set_for(const BlockGrid& grid, int block, bool is_access);

/// Best context realizable from the decoded set: Type 3 over Type 2 over Type 1,
/// ties in ContextId order. Empty when no neighbour is decoded.
ContextId available_context(const BlockGrid& grid, int block, std::span<const std::uint8_t> decoded);

// --- intra prediction ---------------------------------------------------------

/// DC, planar and eight angular directions 22.5 degrees apart. Every mode is
/// defined for a canonical orientation (references above and to the left) and
/// rotated by a multiple of 90 degrees to match the context.
inline constexpr int kIntraModeCount = 10;

enum class IntraMode : std::uint8_t {
    DC = 0,
    Planar = 1,
    HorizontalDown = 2,
    Horizontal = 3,
    HorizontalUp = 4,
    DiagonalTopLeft = 5,
    VerticalLeft = 6,
    Vertical = 7,
    VerticalRight = 8,
    DiagonalTopRight = 9,
};

/// Prediction of `block` from the reconstructed neighbours in `recon`.
/// Throws InvalidArgument if a neighbour required by `ctx` is missing or not
/// yet decoded, or if ctx is Empty.
std::vector<std::uint8_t> predict(const BlockGrid& grid, const PlaneImage& recon,
                                  std::span<const std::uint8_t> decoded, int block, ContextId ctx,
                                  IntraMode mode);

/// Mode minimizing the SSE against `original`, ties to the lowest mode id.
IntraMode best_intra_mode(const BlockGrid& grid, const PlaneImage& recon, std::span<const std::uint8_t> decoded,
                          int block, ContextId ctx, std::span<const std::uint8_t> original);

}  // namespace oic
