#include "doctest.h"
#include "helpers.hpp"
#include "oic/baselines.hpp"
#include "oic/container.hpp"
#include "oic/error.hpp"
#include "oic/simulate.hpp"

#include <numeric>

using namespace oic;

namespace {

const PreparedImage& prepared()
{
    static const PreparedImage prep = prepare(test::synthetic_image(), test::small_config(30));
    return prep;
}

}  // namespace

TEST_CASE("regular layouts give remainders to the first rows and columns")
{
    const BlockGrid g(8, 16, 16);
    const TileLayout l = TileLayout::regular(g, 3, 5);
    REQUIRE(l.tiles.size() == 15);
    CHECK(l.tag == "t3x5");
    CHECK(l.tiles[0].rows == 3);
    CHECK(l.tiles[5].rows == 3);
    CHECK(l.tiles[10].rows == 2);
    CHECK(l.tiles[0].cols == 4);
    CHECK(l.tiles[1].cols == 3);
    CHECK(l.tiles[4].col0 == 13);
    const auto of = l.tile_of_blocks(g);
    CHECK(of[static_cast<std::size_t>(g.index(7, 15))] == 14);
    CHECK_THROWS_AS(TileLayout::regular(g, 9, 1), InvalidArgument);
    CHECK(TileLayout::full(g).tiles.size() == 1);
}

TEST_CASE("opt layout splits the middle half into four tiles")
{
    const BlockGrid g(8, 16, 16);
    const TileLayout l = TileLayout::opt(g);
    REQUIRE(l.tiles.size() == 6);
    int top = 0;
    int middle = 0;
    for (const TileRect& t : l.tiles) {
        if (t.row0 == 0) {
            ++top;
            CHECK(t.rows == 2);
            CHECK(t.cols == 16);
        } else if (t.row0 == 2) {
            ++middle;
            CHECK(t.rows == 4);
            CHECK(t.cols == 4);
        } else {
            CHECK(t.row0 == 6);
            CHECK(t.rows == 2);
        }
    }
    CHECK(top == 1);
    CHECK(middle == 4);
    CHECK_NOTHROW(l.tile_of_blocks(g));
}

TEST_CASE("overlapping or incomplete layouts are rejected")
{
    const BlockGrid g(4, 8, 16);
    TileLayout l{"bad", {{0, 0, 4, 8}, {0, 0, 1, 1}}};
    CHECK_THROWS_AS(l.tile_of_blocks(g), InvalidArgument);
    l.tiles = {{0, 0, 2, 8}};
    CHECK_THROWS_AS(l.tile_of_blocks(g), InvalidArgument);
}

TEST_CASE("layout tags")
{
    const BlockGrid g(8, 16, 16);
    CHECK(parse_layout("t2x2", g).tiles.size() == 4);
    CHECK(parse_layout("topt", g).tiles.size() == 6);
    for (const char* bad : {"t0x2", "t2x", "x2", "t2x2x", "tile", "t9x1"}) {
        CHECK_THROWS_AS(parse_layout(bad, g), InvalidArgument);
    }
}

TEST_CASE("raster contexts inside a tile")
{
    const TileRect t{2, 3, 2, 2};
    CHECK(tile_context(t, 2, 3) == ContextId::Empty);
    CHECK(tile_context(t, 2, 4) == ContextId::T1_L);
    CHECK(tile_context(t, 3, 3) == ContextId::T1_T);
    CHECK(tile_context(t, 3, 4) == ContextId::T3_TL);
}

TEST_CASE("tile streams cost the raster contexts and are byte aligned")
{
    const RateTable& rates = *prepared().rates;
    const TileLayout layout = TileLayout::regular(rates.grid, 2, 2);
    const TileCoding c = tile_encode(rates, layout);
    std::uint64_t bytes = 0;
    for (std::size_t t = 0; t < layout.tiles.size(); ++t) {
        const TileRect& r = layout.tiles[t];
        std::int64_t bits = 0;
        for (int row = r.row0; row < r.row0 + r.rows; ++row) {
            for (int col = r.col0; col < r.col0 + r.cols; ++col) {
                bits += rates.at(rates.grid.index(row, col), tile_context(r, row, col));
            }
        }
        CHECK(c.tile_bits[t] == bits);
        CHECK(c.tile_pixels[t] == static_cast<std::size_t>(r.rows * r.cols * 16 * 16));
        bytes += static_cast<std::uint64_t>((bits + 7) / 8);
    }
    CHECK(c.storage_bytes() == bytes);
}

TEST_CASE("tile sessions never resend a tile")
{
    const RateTable& rates = *prepared().rates;
    const TileCoding c = tile_encode(rates, TileLayout::regular(rates.grid, 2, 2));
    TileSession s(c);
    const std::vector<int> a{rates.grid.index(0, 0), rates.grid.index(0, 1)};
    const auto r1 = s.request(a);
    CHECK(r1.new_tiles == std::vector<int>{0});
    CHECK(r1.request_bits == c.tile_bits[0]);
    CHECK(r1.decoded_px == c.tile_pixels[0]);
    const std::vector<int> b{rates.grid.index(0, 2), rates.grid.index(7, 15)};
    const auto r2 = s.request(b);
    CHECK(r2.new_tiles == std::vector<int>{3});
    CHECK(r2.request_bits == c.tile_bits[3]);
    CHECK(r2.decoded_px == c.tile_pixels[0] + c.tile_pixels[3]);
    CHECK(r2.accumulated_bits == c.tile_bits[0] + c.tile_bits[3]);
    const auto r3 = s.request(a);
    CHECK(r3.request_bits == 0);
    CHECK(r3.new_tiles.empty());
}

TEST_CASE("exhaustive storage holds every admissible context and exceeds ours")
{
    const PreparedImage& prep = prepared();
    const RateTable& rates = *prep.rates;
    const auto mask = prep.enc->access.mask(rates.grid.count());
    const EsCoding es = es_encode(rates, mask);
    std::uint64_t bits = 0;
    for (int b = 0; b < rates.grid.count(); ++b) {
        for (int k = 0; k < kContextCount; ++k) {
            const auto ctx = context_from_index(k);
            const std::int64_t v = rates.at(b, ctx);
            if (v < 0) {
                continue;
            }
            if (ctx != ContextId::Empty || mask[static_cast<std::size_t>(b)] != 0) {
                bits += static_cast<std::uint64_t>(v);
            }
        }
    }
    CHECK(es.storage_bits == bits);
    CHECK(es.storage_bytes() > storage_bytes(*prep.enc));
}

TEST_CASE("ES and ours send the same bits along the same navigation")
{
    const PreparedImage& prep = prepared();
    const EsCoding es = es_encode(*prep.rates, prep.enc->access.mask(prep.enc->grid.count()));
    EsSession e(es, OrderMethod::Snake, prep.enc->prefer_horizontal);
    Session ours(prep.enc, SessionOptions{});
    ViewportSpec spec;
    spec.vp_width = 128;
    spec.vp_height = 128;
    for (const double lon : {0.0, 0.4, 0.8, 2.5, -2.9}) {
        const ViewportSpec s = spec.looking_at(Direction::normalized(lon, 0.3));
        const Footprint fp = viewport_coverage(s, prep.enc->width, prep.enc->height, 16);
        const auto r = ours.request(s);
        const auto q = e.request(fp.blocks, center_block(s, prep.enc->grid));
        CHECK(q.request_bits == r.request_bits);
        CHECK(q.accumulated_bits == r.accumulated_bits);
        CHECK(q.blocks.size() == r.blocks.size());
    }
}
