#include "doctest.h"
#include "oic/error.hpp"
#include "oic/incremental.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace oic;

namespace {

BitVector random_bits(std::mt19937_64& rng, int n, double p = 0.5)
{
    std::bernoulli_distribution d(p);
    BitVector v(static_cast<std::size_t>(n));
    for (auto& b : v) {
        b = d(rng) ? 1 : 0;
    }
    return v;
}

BitVector flip(std::mt19937_64& rng, BitVector v, double p)
{
    std::bernoulli_distribution d(p);
    for (auto& b : v) {
        b ^= d(rng) ? 1 : 0;
    }
    return v;
}

}  // namespace

TEST_CASE("binary entropy and its inverse")
{
    CHECK(binary_entropy(0) == 0);
    CHECK(binary_entropy(1) == 0);
    CHECK(binary_entropy(0.5) == doctest::Approx(1));
    CHECK(binary_entropy(0.11) == doctest::Approx(-0.11 * std::log2(0.11) - 0.89 * std::log2(0.89)));
    for (const double p : {0.01, 0.1, 0.25, 0.4}) {
        CHECK(inverse_binary_entropy(binary_entropy(p)) == doctest::Approx(p).epsilon(1e-9));
    }
}

TEST_CASE("theoretical rate is ceil(n H2(p)) with clamped crossover")
{
    const BitVector x(256, 0);
    BitVector y = x;
    // Identical planes still cost the floor crossover 1 / 2n.
    CHECK(theoretical_rate(x, y) == static_cast<int>(std::ceil(256 * binary_entropy(1.0 / 512))));
    for (int k = 0; k < 32; ++k) {
        y[static_cast<std::size_t>(k * 8)] = 1;
    }
    CHECK(estimate_crossover(x, y) == doctest::Approx(0.125));
    CHECK(theoretical_rate(x, y) == static_cast<int>(std::ceil(256 * binary_entropy(0.125))));
    CHECK_THROWS_AS(estimate_crossover(x, BitVector(10, 0)), InvalidArgument);
}

TEST_CASE("parity-check matrix is (3,3)-regular")
{
    const LdpcaCode code(256, 64, 42);
    std::vector<int> col(256, 0);
    for (int i = 0; i < 256; ++i) {
        CHECK(code.row(i).size() == 3);
        for (const int v : code.row(i)) {
            ++col[static_cast<std::size_t>(v)];
        }
    }
    for (const int c : col) {
        CHECK(c == 3);
    }
    CHECK(code.rung_size() == 4);
    CHECK(code.rung_at_least(1) == 4);
    CHECK(code.rung_at_least(9) == 12);
    CHECK_THROWS_AS(LdpcaCode(100, 4, 1), InvalidArgument);
}

TEST_CASE("emission order is a permutation and the full sequence solves exactly")
{
    const auto code = LdpcaCode::shared(256, 64, 7);
    std::vector<int> order = code->emission_order();
    std::sort(order.begin(), order.end());
    std::vector<int> expect(256);
    std::iota(expect.begin(), expect.end(), 1);
    CHECK(order == expect);
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const BitVector x = random_bits(rng, 256);
        const BitVector emitted = code->emitted_syndromes(x);
        CHECK(code->solve(emitted) == x);
        CHECK(code->decode(emitted, BitVector(256, 0)) == x);
    }
}

TEST_CASE("accumulated syndromes are running parities of the plain syndrome")
{
    const LdpcaCode code(256, 64, 9);
    std::mt19937_64 rng(10);
    const BitVector x = random_bits(rng, 256);
    const BitVector s = code.syndrome(x);
    const BitVector emitted = code.emitted_syndromes(x);
    std::vector<std::uint8_t> acc(257, 0);
    for (int i = 1; i <= 256; ++i) {
        acc[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i - 1)] ^ s[static_cast<std::size_t>(i - 1)];
    }
    for (std::size_t t = 0; t < emitted.size(); ++t) {
        CHECK(emitted[t] == acc[static_cast<std::size_t>(code.emission_order()[t])]);
    }
}

TEST_CASE("belief propagation recovers mildly corrupted side information")
{
    const auto code = LdpcaCode::shared(1024, 64, kDefaultCodeSeed);
    std::mt19937_64 rng(11);
    int successes = 0;
    for (int t = 0; t < 10; ++t) {
        const BitVector x = random_bits(rng, 1024);
        const BitVector si = flip(rng, x, 0.03);
        const int rate = required_rate(*code, x, si, RateMode::Practical);
        CHECK(rate >= theoretical_rate(x, si));
        CHECK(rate % code->rung_size() == 0);
        const BitVector emitted = code->emitted_syndromes(x);
        const auto got = code->decode(BitVector(emitted.begin(), emitted.begin() + rate), si);
        REQUIRE(got.has_value());
        successes += *got == x ? 1 : 0;
    }
    CHECK(successes == 10);
}

TEST_CASE("block streams are prefix-nested across contexts")
{
    const auto code = LdpcaCode::shared(256, 64, 3);
    std::mt19937_64 rng(12);
    std::vector<BitVector> planes{random_bits(rng, 256, 0.2), random_bits(rng, 256, 0.4)};
    std::map<ContextId, std::vector<BitVector>> si;
    si[ContextId::T1_L] = {flip(rng, planes[0], 0.02), flip(rng, planes[1], 0.05)};
    si[ContextId::T3_TL] = {flip(rng, planes[0], 0.01), flip(rng, planes[1], 0.01)};
    si[ContextId::Empty] = {BitVector(256, 0), BitVector(256, 0)};
    for (const RateMode mode : {RateMode::Theoretical, RateMode::Practical}) {
        const BlockStream bs = encode_block(*code, planes, si, mode);
        CHECK(bs.has_context(ContextId::Empty));
        CHECK_FALSE(bs.has_context(ContextId::T2_TL));
        for (const PlaneStream& ps : bs.planes) {
            int at = 0;
            for (const Chunk& c : ps.chunks) {
                CHECK(c.begin == at);
                at = c.end;
            }
            CHECK(at == ps.stored_bits());
        }
        for (const auto& [ctx, planes_si] : si) {
            const auto ex = extract(bs, ctx);
            for (std::size_t p = 0; p < planes.size(); ++p) {
                const BitVector& stored = bs.planes[p].syndromes;
                CHECK(std::equal(ex[p].syndromes.begin(), ex[p].syndromes.end(), stored.begin()));
                const BitVector* transported = mode == RateMode::Theoretical ? &planes[p] : nullptr;
                CHECK(decode_plane(*code, ex[p], planes_si[p], mode, transported) == planes[p]);
            }
        }
        CHECK_THROWS_AS(extract(bs, ContextId::T2_TL), InvalidArgument);
    }
}

TEST_CASE("decode_plane rejects a tampered checksum or transport")
{
    const auto code = LdpcaCode::shared(256, 64, 3);
    std::mt19937_64 rng(13);
    const std::vector<BitVector> planes{random_bits(rng, 256, 0.3)};
    std::map<ContextId, std::vector<BitVector>> si;
    si[ContextId::T1_L] = {flip(rng, planes[0], 0.02)};
    const BlockStream bs = encode_block(*code, planes, si, RateMode::Theoretical);
    auto ex = extract(bs, ContextId::T1_L);
    BitVector wrong = planes[0];
    wrong[0] ^= 1;
    CHECK_THROWS_AS(decode_plane(*code, ex[0], si[ContextId::T1_L][0], RateMode::Theoretical, &wrong),
                    DecodingFailure);
    ex[0].checksum ^= 1;
    CHECK_THROWS_AS(decode_plane(*code, ex[0], si[ContextId::T1_L][0], RateMode::Theoretical, &planes[0]),
                    DecodingFailure);
}
