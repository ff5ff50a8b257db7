#include "doctest.h"
#include "helpers.hpp"
#include "oic/container.hpp"
#include "oic/error.hpp"
#include "oic/session.hpp"

#include <filesystem>
#include <random>

using namespace oic;

namespace {

const EncodedImage& fixed_image()
{
    static const EncodedImage enc = encode_image(test::synthetic_image(), test::small_config(30));
    return enc;
}

struct PracticalImage {
    EncodedImage enc;
    EncodeArtifacts art;
};

const PracticalImage& practical()
{
    static const PracticalImage p = [] {
        EncoderConfig cfg = test::small_config(40, RateMode::Practical);
        cfg.strategy = AccessStrategy::Content;
        PracticalImage out;
        out.enc = encode_image(test::synthetic_image(256, 128, 2), cfg, &out.art);
        return out;
    }();
    return p;
}

const EncodedImage& content_practical_image()
{
    return practical().enc;
}

void check_same(const EncodedImage& a, const EncodedImage& b)
{
    CHECK(a.width == b.width);
    CHECK(a.height == b.height);
    CHECK(a.grid == b.grid);
    CHECK(a.qp == b.qp);
    CHECK(a.planes == b.planes);
    CHECK(a.mode == b.mode);
    CHECK(a.seed == b.seed);
    CHECK(a.ladder_steps == b.ladder_steps);
    CHECK(a.prefer_horizontal == b.prefer_horizontal);
    CHECK(a.access.blocks == b.access.blocks);
    CHECK(a.access.strategy == b.access.strategy);
    CHECK(a.access.signaling_bits == b.access.signaling_bits);
    CHECK(a.transport == b.transport);
    for (int k = 0; k < a.grid.count(); ++k) {
        REQUIRE(a.contexts(k) == b.contexts(k));
        for (const ContextId c : a.contexts(k)) {
            CHECK(a.intra_modes[k][index_of(c)] == b.intra_modes[k][index_of(c)]);
        }
        for (std::size_t p = 0; p < a.streams[k].planes.size(); ++p) {
            const PlaneStream& x = a.streams[k].planes[p];
            const PlaneStream& y = b.streams[k].planes[p];
            CHECK(x.syndromes == y.syndromes);
            CHECK(x.checksum == y.checksum);
            REQUIRE(x.chunks.size() == y.chunks.size());
            for (std::size_t c = 0; c < x.chunks.size(); ++c) {
                CHECK(x.chunks[c].ctx == y.chunks[c].ctx);
                CHECK(x.chunks[c].begin == y.chunks[c].begin);
                CHECK(x.chunks[c].end == y.chunks[c].end);
            }
        }
    }
}

}  // namespace

TEST_CASE("container round trip, fixed placement, theoretical")
{
    const EncodedImage& enc = fixed_image();
    const auto bytes = serialize(enc);
    const EncodedImage back = parse(bytes);
    check_same(enc, back);
    CHECK(serialize(back) == bytes);
    const StorageAccount acct = storage_account(enc);
    CHECK(acct.total_bits() == 8 * storage_bytes(enc));
    CHECK(bytes.size() == storage_bytes(enc) + 2u * 256u * 128u);
}

TEST_CASE("container round trip, content placement, practical")
{
    const EncodedImage& enc = content_practical_image();
    CHECK(enc.access.strategy == AccessStrategy::Content);
    CHECK(enc.access.signaling_bits == (1 + enc.access.blocks.size()) * 7);
    const auto bytes = serialize(enc);
    CHECK(bytes.size() == storage_bytes(enc));  // no transport section
    check_same(enc, parse(bytes));
}

TEST_CASE("storage account components")
{
    const EncodedImage& enc = fixed_image();
    const StorageAccount acct = storage_account(enc);
    std::uint64_t syndromes = 0;
    std::uint64_t modes = 0;
    for (int b = 0; b < enc.grid.count(); ++b) {
        syndromes += static_cast<std::uint64_t>(enc.stored_syndrome_bits(b));
        for (const ContextId c : enc.contexts(b)) {
            modes += c == ContextId::Empty ? 0 : kModeBits;
        }
    }
    CHECK(acct.syndrome_bits == syndromes);
    CHECK(acct.mode_bits == modes);
    CHECK(acct.checksum_bits == static_cast<std::uint64_t>(enc.grid.count() * enc.planes * kChecksumBits));
    CHECK(acct.padding_bits < 8u * static_cast<std::uint64_t>(enc.grid.count() + 4));
}

TEST_CASE("corrupt containers are rejected")
{
    const auto bytes = serialize(fixed_image());
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(parse(bad), FormatError);
    bad = bytes;
    bad[4] = 9;  // version
    CHECK_THROWS_AS(parse(bad), FormatError);
    for (const std::size_t len : {std::size_t{0}, std::size_t{10}, std::size_t{45}, std::size_t{200},
                                  bytes.size() / 2, bytes.size() - 1}) {
        CHECK_THROWS_AS(parse(std::span(bytes).first(len)), FormatError);
    }
    bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(parse(bad), FormatError);
}

TEST_CASE("random byte damage never escapes as anything but a library error")
{
    const EncodedImage& enc = content_practical_image();
    const auto bytes = serialize(enc);
    std::mt19937_64 rng(31);
    int rejected = 0;
    for (int t = 0; t < 40; ++t) {
        auto bad = bytes;
        const std::size_t at = 46 + rng() % (bad.size() - 46);
        bad[at] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        try {
            const auto parsed = std::make_shared<const EncodedImage>(parse(bad));
            Session s(parsed, SessionOptions{});
            ViewportSpec all;
            all.fov_h = 2 * kPi;
            s.request(all);
            // Accepted damage must not change the picture (a checksum collision
            // has odds 2^-16 per plane).
            CHECK(s.canvas() == practical().art.reconstruction);
        } catch (const Error&) {
            ++rejected;
        }
    }
    CHECK(rejected > 0);
}

TEST_CASE("container file io")
{
    const auto path = std::filesystem::temp_directory_path() / "oic_unit_container.oic";
    write_container(fixed_image(), path);
    check_same(fixed_image(), read_container(path));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_container(path), Error);
}

TEST_CASE("trace parsing")
{
    const std::string text = std::string(kTraceHeader) +
                             "\n"
                             "a,0,0.5,0.1\n"
                             "b,0,-3.0,-1.2\n"
                             "a,200,0.6,0.1\n";
    const HeadTrace t = parse_trace(text);
    REQUIRE(t.users.size() == 2);
    CHECK(t.users[0].user_id == "a");
    CHECK(t.users[0].records.size() == 2);
    CHECK(t.users[1].records[0].direction.latitude == doctest::Approx(-1.2));
    CHECK(t.request_count() == 3);
    const HeadTrace again = parse_trace(format_trace(t));
    CHECK(again.request_count() == 3);
    CHECK(again.users[0].records[1].t_ms == 200);
    CHECK(parse_trace("").users.empty());
}

TEST_CASE("trace errors name the line")
{
    const std::string h = std::string(kTraceHeader) + "\n";
    auto fails_on = [](const std::string& text, const char* line) {
        try {
            parse_trace(text);
        } catch (const FormatError& e) {
            return std::string(e.what()).find(line) != std::string::npos;
        }
        return false;
    };
    CHECK(fails_on("user,t,lon,lat\n", "1"));
    CHECK(fails_on(h + "a,0,0,0\na,0,0,0\n", "3"));        // time not increasing
    CHECK(fails_on(h + "a,0,4.0,0\n", "2"));               // longitude out of range
    CHECK(fails_on(h + "a,0,0,1.7\n", "2"));               // latitude out of range
    CHECK(fails_on(h + "a,0,0\n", "2"));                   // missing column
    CHECK(fails_on(h + "a,0,zero,0\n", "2"));              // not a number
}
