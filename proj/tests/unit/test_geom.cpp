#include "doctest.h"
#include "oic/error.hpp"
#include "oic/geom.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace oic;

namespace {

// Independent gnomonic back-projection: rotate the tangent-plane ray by
// latitude about the east axis, then by longitude about the polar axis.
PixelCoord oracle_sample(const ViewportSpec& s, int i, int j, int w, int h)
{
    const double a = (2.0 * (i + 0.5) / s.vp_width - 1.0) * std::tan(s.fov_h / 2);
    const double b = (1.0 - 2.0 * (j + 0.5) / s.vp_height) * std::tan(s.fov_v / 2);
    // Camera looking along +x with east = +y and north = +z.
    const double x = 1;
    const double y = a;
    const double z = b;
    const double phi = s.direction.latitude;
    const double x1 = x * std::cos(phi) - z * std::sin(phi);
    const double z1 = x * std::sin(phi) + z * std::cos(phi);
    const double lam = s.direction.longitude;
    const double x2 = x1 * std::cos(lam) - y * std::sin(lam);
    const double y2 = x1 * std::sin(lam) + y * std::cos(lam);
    const double lon = std::atan2(y2, x2);
    const double lat = std::atan2(z1, std::hypot(x2, y2));
    double px = (lon + M_PI) / (2 * M_PI) * w;
    px = std::fmod(px + w, static_cast<double>(w));
    return {px, (M_PI / 2 - lat) / M_PI * h};
}

// Brute force: every bilinear tap of every viewport pixel, by hand.
std::pair<std::set<int>, std::size_t> oracle_footprint(const ViewportSpec& s, int w, int h, int bs)
{
    std::set<std::pair<int, int>> pixels;
    for (int j = 0; j < s.vp_height; ++j) {
        for (int i = 0; i < s.vp_width; ++i) {
            const PixelCoord p = oracle_sample(s, i, j, w, h);
            const int x0 = static_cast<int>(std::floor(p.x - 0.5));
            const int y0 = static_cast<int>(std::floor(p.y - 0.5));
            for (int dy = 0; dy <= 1; ++dy) {
                for (int dx = 0; dx <= 1; ++dx) {
                    const int x = ((x0 + dx) % w + w) % w;
                    const int y = std::clamp(y0 + dy, 0, h - 1);
                    pixels.emplace(x, y);
                }
            }
        }
    }
    std::set<int> blocks;
    for (const auto& [x, y] : pixels) {
        blocks.insert((y / bs) * (w / bs) + x / bs);
    }
    return {blocks, pixels.size()};
}

}  // namespace

TEST_CASE("equirectangular mapping is invertible and wraps longitude")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lon(-kPi, kPi);
    std::uniform_real_distribution<double> lat(-kPi / 2, kPi / 2);
    for (int k = 0; k < 1000; ++k) {
        const Direction d{lon(rng), lat(rng)};
        const Direction back = pixel_to_sphere(sphere_to_pixel(d, 512, 256), 512, 256);
        CHECK(back.longitude == doctest::Approx(d.longitude).epsilon(1e-12));
        CHECK(back.latitude == doctest::Approx(d.latitude).epsilon(1e-12));
    }
    CHECK(sphere_to_pixel({-kPi, kPi / 2}, 512, 256).x == 0);
    CHECK(sphere_to_pixel({0, 0}, 512, 256).x == doctest::Approx(256));
    CHECK(sphere_to_pixel({0, 0}, 512, 256).y == doctest::Approx(128));
    const Direction n = Direction::normalized(3 * kPi, 2.0);
    CHECK(n.longitude == doctest::Approx(-kPi));
    CHECK(n.latitude == doctest::Approx(kPi / 2));
}

TEST_CASE("viewport samples match an independent gnomonic projection")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> lon(-kPi, kPi);
    std::uniform_real_distribution<double> lat(-1.5, 1.5);
    for (int k = 0; k < 50; ++k) {
        ViewportSpec s;
        s.direction = {lon(rng), lat(rng)};
        s.fov_h = 1.2;
        s.fov_v = 0.9;
        s.vp_width = 31;
        s.vp_height = 17;
        for (int j = 0; j < s.vp_height; j += 4) {
            for (int i = 0; i < s.vp_width; i += 5) {
                const PixelCoord got = viewport_sample(s, i, j, 512, 256);
                const PixelCoord want = oracle_sample(s, i, j, 512, 256);
                double dx = std::fabs(got.x - want.x);
                dx = std::min(dx, 512 - dx);
                CHECK(dx < 1e-7);
                CHECK(got.y == doctest::Approx(want.y).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("viewport coverage equals the brute-force footprint")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lon(-kPi, kPi);
    std::uniform_real_distribution<double> lat(-1.55, 1.55);
    for (int k = 0; k < 25; ++k) {
        ViewportSpec s;
        s.direction = {lon(rng), lat(rng)};
        s.vp_width = 64;
        s.vp_height = 48;
        s.fov_h = 1.0 + k * 0.03;
        s.fov_v = 0.8 + k * 0.02;
        const Footprint fp = viewport_coverage(s, 512, 256, 32);
        const auto [blocks, pixels] = oracle_footprint(s, 512, 256, 32);
        CHECK(std::set<int>(fp.blocks.begin(), fp.blocks.end()) == blocks);
        CHECK(fp.displayed_pixels == pixels);
        CHECK(std::is_sorted(fp.blocks.begin(), fp.blocks.end()));
    }
}

TEST_CASE("strided footprint is a subset of the exact one")
{
    ViewportSpec s;
    s.direction = {0.3, 1.2};
    const Footprint exact = viewport_coverage(s, 512, 256, 32);
    const auto strided = viewport_footprint(s, 512, 256, 32, 16);
    CHECK(std::includes(exact.blocks.begin(), exact.blocks.end(), strided.begin(), strided.end()));
    CHECK(viewport_footprint(s, 512, 256, 32, 1) == exact.blocks);
}

TEST_CASE("full-sphere requests cover everything")
{
    ViewportSpec s;
    s.fov_h = 2 * kPi;
    const Footprint fp = viewport_coverage(s, 512, 256, 32);
    CHECK(fp.blocks.size() == 128);
    CHECK(fp.displayed_pixels == 512u * 256u);
    CHECK_THROWS_AS(render_viewport(PlaneImage(512, 256), s), InvalidArgument);
}

TEST_CASE("viewport validation")
{
    ViewportSpec s;
    s.fov_h = 0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.fov_h = kPi;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.fov_h = 1;
    s.vp_width = 0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("rendering a constant image gives a constant viewport")
{
    const PlaneImage img(512, 256, 1, 77);
    ViewportSpec s;
    s.direction = {2.0, -0.7};
    const PlaneImage v = render_viewport(img, s);
    CHECK(v.width() == 256);
    CHECK(v.height() == 256);
    for (const auto px : v.samples()) {
        CHECK(px == 77);
    }
}

TEST_CASE("psnr and usefulness")
{
    CHECK(psnr_from_mse(0) == kInfinitePsnr);
    CHECK(psnr_from_mse(255.0 * 255.0) == doctest::Approx(0));
    CHECK(psnr_from_mse(1) == doctest::Approx(48.1308036));
    PlaneImage a(4, 4, 1, 10);
    PlaneImage b(4, 4, 1, 10);
    CHECK(viewport_psnr(a, b) == kInfinitePsnr);
    b.at(0, 0) = 14;
    CHECK(viewport_mse(a, b) == doctest::Approx(1.0));
    CHECK(usefulness(50, 100) == doctest::Approx(0.5));
}
