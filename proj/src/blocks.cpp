#include "oic/blocks.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace oic {

namespace {

constexpr std::array<std::string_view, kContextCount> kContextNames = {
    "T1_L",  "T1_R",  "T1_T",  "T1_B",  "T2_TL", "T2_TR", "T2_BL",
    "T2_BR", "T3_TL", "T3_TR", "T3_BL", "T3_BR", "EMPTY",
};

}  // namespace

int context_type(ContextId ctx)
{
    const int i = index_of(ctx);
    if (i < 4) {
        return 1;
    }
    if (i < 8) {
        return 2;
    }
    if (i < 12) {
        return 3;
    }
    return 0;
}

std::string_view context_name(ContextId ctx)
{
    return kContextNames.at(static_cast<std::size_t>(index_of(ctx)));
}

ContextId context_from_index(int index)
{
    if (index < 0 || index >= kContextCount) {
        throw InvalidArgument("context id out of range: " + std::to_string(index));
    }
    return static_cast<ContextId>(index);
}

ContextFootprint context_footprint(ContextId ctx)
{
    ContextFootprint f;
    switch (ctx) {
    case ContextId::T1_L: f.left = true; break;
    case ContextId::T1_R: f.right = true; break;
    case ContextId::T1_T: f.top = true; break;
    case ContextId::T1_B: f.bottom = true; break;
    case ContextId::T3_TL: f.corner = true; [[fallthrough]];
    case ContextId::T2_TL: f.top = f.left = true; break;
    case ContextId::T3_TR: f.corner = true; [[fallthrough]];
    case ContextId::T2_TR: f.top = f.right = true; break;
    case ContextId::T3_BL: f.corner = true; [[fallthrough]];
    case ContextId::T2_BL: f.bottom = f.left = true; break;
    case ContextId::T3_BR: f.corner = true; [[fallthrough]];
    case ContextId::T2_BR: f.bottom = f.right = true; break;
    case ContextId::Empty: break;
    }
    return f;
}

BlockGrid::BlockGrid(int rows, int cols, int block_size) : rows_(rows), cols_(cols), block_size_(block_size)
{
    if (rows < 1 || cols < 2 || block_size < 2) {
        throw InvalidArgument("block grid needs at least 1 row, 2 columns and block size 2");
    }
}

BlockGrid BlockGrid::for_image(int width, int height, int block_size)
{
    if (block_size < 2 || width % block_size != 0 || height % block_size != 0) {
        throw InvalidArgument("block size " + std::to_string(block_size) + " does not divide " +
                              std::to_string(width) + "x" + std::to_string(height));
    }
    return {height / block_size, width / block_size, block_size};
}

std::optional<int> BlockGrid::top(int block) const
{
    const int r = row_of(block);
    if (r == 0) {
        return std::nullopt;
    }
    return index(r - 1, col_of(block));
}

std::optional<int> BlockGrid::bottom(int block) const
{
    const int r = row_of(block);
    if (r + 1 >= rows_) {
        return std::nullopt;
    }
    return index(r + 1, col_of(block));
}

std::vector<int> BlockGrid::neighbors(int block) const
{
    std::vector<int> out;
    auto add = [&](int n) {
        if (n != block && std::find(out.begin(), out.end(), n) == out.end()) {
            out.push_back(n);
        }
    };
    add(left(block));
    add(right(block));
    if (auto t = top(block)) {
        add(*t);
    }
    if (auto b = bottom(block)) {
        add(*b);
    }
    return out;
}

bool BlockGrid::horizontally_adjacent(int a, int b) const
{
    return a != b && (left(a) == b || right(a) == b);
}

bool BlockGrid::adjacent(int a, int b) const
{
    if (a == b) {
        return false;
    }
    return horizontally_adjacent(a, b) || top(a) == b || bottom(a) == b;
}

std::optional<std::vector<int>> BlockGrid::context_blocks(int block, ContextId ctx) const
{
    const ContextFootprint f = context_footprint(ctx);
    const int r = row_of(block);
    const int c = col_of(block);
    if ((f.top && r == 0) || (f.bottom && r + 1 >= rows_)) {
        return std::nullopt;
    }
    std::vector<int> out;
    const int dr = f.top ? -1 : 1;
    const int dc = f.left ? -1 : 1;
    if (f.top || f.bottom) {
        out.push_back(index(r + dr, c));
    }
    if (f.left || f.right) {
        out.push_back(index(r, c + dc));
    }
    if (f.corner) {
        out.push_back(index(r + dr, c + dc));
    }
    return out;
}

std::vector<std::uint8_t> read_block(const PlaneImage& img, const BlockGrid& grid, int block)
{
    const int n = grid.block_size();
    const int x0 = grid.col_of(block) * n;
    const int y0 = grid.row_of(block) * n;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            out[static_cast<std::size_t>(y) * n + x] = img.at(x0 + x, y0 + y);
        }
    }
    return out;
}

void write_block(PlaneImage& img, const BlockGrid& grid, int block, std::span<const std::uint8_t> samples)
{
    const int n = grid.block_size();
    if (samples.size() != static_cast<std::size_t>(n) * n) {
        throw InvalidArgument("write_block: sample count mismatch");
    }
    const int x0 = grid.col_of(block) * n;
    const int y0 = grid.row_of(block) * n;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            img.at(x0 + x, y0 + y) = samples[static_cast<std::size_t>(y) * n + x];
        }
    }
}

Partition partition(const PlaneImage& img, int block_size)
{
    if (img.channels() != 1) {
        throw InvalidArgument("partition expects a single-channel image");
    }
    Partition p{BlockGrid::for_image(img.width(), img.height(), block_size), {}};
    p.blocks.reserve(static_cast<std::size_t>(p.grid.count()));
    for (int b = 0; b < p.grid.count(); ++b) {
        p.blocks.push_back(read_block(img, p.grid, b));
    }
    return p;
}

PlaneImage reassemble(const Partition& p)
{
    if (static_cast<int>(p.blocks.size()) != p.grid.count()) {
        throw InvalidArgument("reassemble: block count mismatch");
    }
    PlaneImage img(p.grid.width(), p.grid.height(), 1);
    for (int b = 0; b < p.grid.count(); ++b) {
        write_block(img, p.grid, b, p.blocks[static_cast<std::size_t>(b)]);
    }
    return img;
}

std::vector<ContextId> context_set_for(const BlockGrid& grid, int block, bool is_access)
{
    std::vector<ContextId> out;
    for (int i = 0; i < kNeighborContextCount; ++i) {
        const auto ctx = static_cast<ContextId>(i);
        if (grid.context_blocks(block, ctx)) {
            out.push_back(ctx);
        }
    }
    if (is_access) {
        out.push_back(ContextId::Empty);
    }
    return out;
}

ContextId available_context(const BlockGrid& grid, int block, std::span<const std::uint8_t> decoded)
{
    // ContextId order already lists T3 last; scan types from 3 down to 1.
    static constexpr std::array<ContextId, kNeighborContextCount> kPreference = {
        ContextId::T3_TL, ContextId::T3_TR, ContextId::T3_BL, ContextId::T3_BR,
        ContextId::T2_TL, ContextId::T2_TR, ContextId::T2_BL, ContextId::T2_BR,
        ContextId::T1_L,  ContextId::T1_R,  ContextId::T1_T,  ContextId::T1_B,
    };
    for (const ContextId ctx : kPreference) {
        const auto needed = grid.context_blocks(block, ctx);
        if (needed && std::all_of(needed->begin(), needed->end(), [&](int n) { return decoded[n] != 0; })) {
            return ctx;
        }
    }
    return ContextId::Empty;
}

// --- intra prediction ---------------------------------------------------------

namespace {

/// Maps canonical block coordinates (references at u = -1 or v = -1) to
/// coordinates relative to the block origin.
enum class Rotation { R0, R90ccw, R180, R90cw };

Rotation rotation_for(ContextId ctx)
{
    switch (ctx) {
    case ContextId::T1_L:
    case ContextId::T2_TL:
    case ContextId::T3_TL: return Rotation::R0;
    case ContextId::T1_T:
    case ContextId::T2_TR:
    case ContextId::T3_TR: return Rotation::R90ccw;
    case ContextId::T1_R:
    case ContextId::T2_BR:
    case ContextId::T3_BR: return Rotation::R180;
    case ContextId::T1_B:
    case ContextId::T2_BL:
    case ContextId::T3_BL: return Rotation::R90cw;
    case ContextId::Empty: break;
    }
    throw InvalidArgument("Empty context has no intra prediction");
}

std::pair<int, int> to_actual(Rotation rot, int u, int v, int n)
{
    switch (rot) {
    case Rotation::R0: return {u, v};
    case Rotation::R90ccw: return {n - 1 - v, u};
    case Rotation::R180: return {n - 1 - u, n - 1 - v};
    case Rotation::R90cw: return {v, n - 1 - u};
    }
    return {u, v};
}

/// References in the canonical frame. top[k] sits at (k, -1), left[k] at
/// (-1, k), both extended to 2N samples by replicating sample N-1.
struct References {
    std::vector<int> top;
    std::vector<int> left;
    int corner = 0;
    int type = 0;
};

References gather_references(const BlockGrid& grid, const PlaneImage& recon, std::span<const std::uint8_t> decoded,
                             int block, ContextId ctx)
{
    const auto needed = grid.context_blocks(block, ctx);
    if (!needed) {
        throw InvalidArgument("context " + std::string(context_name(ctx)) + " is not realizable for block " +
                              std::to_string(block));
    }
    for (const int nb : *needed) {
        if (decoded.size() <= static_cast<std::size_t>(nb) || decoded[nb] == 0) {
            throw InvalidArgument("context " + std::string(context_name(ctx)) + " of block " +
                                  std::to_string(block) + " needs undecoded block " + std::to_string(nb));
        }
    }
    const int n = grid.block_size();
    const int x0 = grid.col_of(block) * n;
    const int y0 = grid.row_of(block) * n;
    const int w = recon.width();
    const Rotation rot = rotation_for(ctx);
    auto sample = [&](int u, int v) {
        const auto [x, y] = to_actual(rot, u, v, n);
        return static_cast<int>(recon.at(((x0 + x) % w + w) % w, y0 + y));
    };

    References ref;
    ref.type = context_type(ctx);
    ref.top.resize(static_cast<std::size_t>(2 * n));
    ref.left.resize(static_cast<std::size_t>(2 * n));
    for (int k = 0; k < n; ++k) {
        ref.left[k] = sample(-1, k);
    }
    if (ref.type == 1) {
        std::fill(ref.top.begin(), ref.top.begin() + n, ref.left[0]);
        ref.corner = ref.left[0];
    } else {
        for (int k = 0; k < n; ++k) {
            ref.top[k] = sample(k, -1);
        }
        ref.corner = ref.type == 3 ? sample(-1, -1) : (ref.top[0] + ref.left[0] + 1) >> 1;
    }
    std::fill(ref.top.begin() + n, ref.top.end(), ref.top[n - 1]);
    std::fill(ref.left.begin() + n, ref.left.end(), ref.left[n - 1]);
    return ref;
}

using CanonicalBlock = std::vector<int>;  // row-major, index v * n + u

CanonicalBlock predict_dc(const References& r, int n)
{
    int sum = 0;
    int count = n;
    for (int k = 0; k < n; ++k) {
        sum += r.left[k];
    }
    if (r.type != 1) {
        for (int k = 0; k < n; ++k) {
            sum += r.top[k];
        }
        count = 2 * n;
    }
    return CanonicalBlock(static_cast<std::size_t>(n) * n, (sum + count / 2) / count);
}

CanonicalBlock predict_planar(const References& r, int n)
{
    CanonicalBlock out(static_cast<std::size_t>(n) * n);
    const int top_right = r.top[n];
    const int bottom_left = r.left[n];
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            const int horizontal = (n - 1 - u) * r.left[v] + (u + 1) * top_right;
            const int vertical = (n - 1 - v) * r.top[u] + (v + 1) * bottom_left;
            out[static_cast<std::size_t>(v) * n + u] = (horizontal + vertical + n) / (2 * n);
        }
    }
    return out;
}

/// Angular prediction along the vertical class: `main` runs along the top edge,
/// `side` along the left edge, angle in 1/32 sample units per row.
CanonicalBlock predict_vertical_class(const std::vector<int>& main, const std::vector<int>& side, int corner, int n,
                                      int angle)
{
    // ref[n + k] holds reference index k, so negative projections fit.
    std::vector<int> ref(static_cast<std::size_t>(3 * n + 1), 0);
    ref[n] = corner;
    for (int k = 0; k < 2 * n; ++k) {
        ref[n + 1 + k] = main[k];
    }
    if (angle < 0) {
        const int inv_angle = -((256 * 32 + (-angle) / 2) / (-angle));
        const int last = (n * angle) >> 5;
        for (int x = -1; x >= last; --x) {
            const int idx = ((x * inv_angle + 128) >> 8) - 1;
            ref[n + x] = idx < 0 ? corner : side[std::min(idx, 2 * n - 1)];
        }
    }
    CanonicalBlock out(static_cast<std::size_t>(n) * n);
    for (int v = 0; v < n; ++v) {
        const int pos = (v + 1) * angle;
        const int step = pos >> 5;
        const int frac = pos & 31;
        for (int u = 0; u < n; ++u) {
            const int a = ref[n + u + step + 1];
            int p = a;
            if (frac != 0) {
                const int b = ref[n + u + step + 2];
                p = ((32 - frac) * a + frac * b + 16) >> 5;
            }
            out[static_cast<std::size_t>(v) * n + u] = p;
        }
    }
    return out;
}

struct AngularMode {
    bool horizontal;
    int angle;
};

AngularMode angular_params(IntraMode mode)
{
    switch (mode) {
    case IntraMode::HorizontalDown: return {true, 13};
    case IntraMode::Horizontal: return {true, 0};
    case IntraMode::HorizontalUp: return {true, -13};
    case IntraMode::DiagonalTopLeft: return {false, -32};
    case IntraMode::VerticalLeft: return {false, -13};
    case IntraMode::Vertical: return {false, 0};
    case IntraMode::VerticalRight: return {false, 13};
    case IntraMode::DiagonalTopRight: return {false, 32};
    default: break;
    }
    throw InvalidArgument("not an angular intra mode");
}

CanonicalBlock predict_canonical(const References& r, int n, IntraMode mode)
{
    if (mode == IntraMode::DC) {
        return predict_dc(r, n);
    }
    if (mode == IntraMode::Planar) {
        return predict_planar(r, n);
    }
    const AngularMode am = angular_params(mode);
    if (!am.horizontal) {
        return predict_vertical_class(r.top, r.left, r.corner, n, am.angle);
    }
    const CanonicalBlock t = predict_vertical_class(r.left, r.top, r.corner, n, am.angle);
    CanonicalBlock out(t.size());
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            out[static_cast<std::size_t>(v) * n + u] = t[static_cast<std::size_t>(u) * n + v];
        }
    }
    return out;
}

std::vector<std::uint8_t> to_actual_block(const CanonicalBlock& c, Rotation rot, int n)
{
    std::vector<std::uint8_t> out(c.size());
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            const auto [x, y] = to_actual(rot, u, v, n);
            out[static_cast<std::size_t>(y) * n + x] =
                static_cast<std::uint8_t>(std::clamp(c[static_cast<std::size_t>(v) * n + u], 0, 255));
        }
    }
    return out;
}

}  // namespace

std::vector<std::uint8_t> predict(const BlockGrid& grid, const PlaneImage& recon, std::span<const std::uint8_t> decoded,
                                  int block, ContextId ctx, IntraMode mode)
{
    if (static_cast<int>(mode) >= kIntraModeCount) {
        throw InvalidArgument("intra mode out of range");
    }
    const References r = gather_references(grid, recon, decoded, block, ctx);
    const int n = grid.block_size();
    return to_actual_block(predict_canonical(r, n, mode), rotation_for(ctx), n);
}

IntraMode best_intra_mode(const BlockGrid& grid, const PlaneImage& recon, std::span<const std::uint8_t> decoded,
                          int block, ContextId ctx, std::span<const std::uint8_t> original)
{
    const References r = gather_references(grid, recon, decoded, block, ctx);
    const int n = grid.block_size();
    const Rotation rot = rotation_for(ctx);
    IntraMode best = IntraMode::DC;
    long long best_sse = std::numeric_limits<long long>::max();
    for (int m = 0; m < kIntraModeCount; ++m) {
        const auto mode = static_cast<IntraMode>(m);
        const auto pred = to_actual_block(predict_canonical(r, n, mode), rot, n);
        long long sse = 0;
        for (std::size_t k = 0; k < pred.size(); ++k) {
            const long long d = static_cast<long long>(pred[k]) - original[k];
            sse += d * d;
        }
        if (sse < best_sse) {
            best_sse = sse;
            best = mode;
        }
    }
    return best;
}

}  // namespace oic
