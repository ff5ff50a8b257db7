#include "oic/geom.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace oic {

double wrap_longitude(double longitude)
{
    double l = longitude - 2 * kPi * std::floor((longitude + kPi) / (2 * kPi));
    if (l >= kPi) {
        l -= 2 * kPi;
    }
    if (l < -kPi) {
        l = -kPi;
    }
    return l;
}

Direction Direction::normalized(double longitude, double latitude)
{
    return {wrap_longitude(longitude), std::clamp(latitude, -kPi / 2, kPi / 2)};
}

PixelCoord sphere_to_pixel(Direction d, int w, int h)
{
    double x = (d.longitude + kPi) / (2 * kPi) * w;
    x = std::fmod(x, static_cast<double>(w));
    if (x < 0) {
        x += w;
    }
    if (x >= w) {
        x -= w;
    }
    const double y = (kPi / 2 - d.latitude) / kPi * h;
    return {x, y};
}

Direction pixel_to_sphere(PixelCoord p, int w, int h)
{
    return {p.x / w * 2 * kPi - kPi, kPi / 2 - p.y / h * kPi};
}

void ViewportSpec::validate() const
{
    if (vp_width < 1 || vp_height < 1) {
        throw InvalidArgument("viewport must have at least one pixel");
    }
    if (full_sphere()) {
        return;
    }
    if (!(fov_h > 0 && fov_h < kPi && fov_v > 0 && fov_v < kPi)) {
        throw InvalidArgument("viewport field of view must lie in (0, pi)");
    }
}

namespace {

/// Orthonormal camera frame for a gaze direction: forward, east (image right),
/// north (image up).
struct CameraFrame {
    std::array<double, 3> forward;
    std::array<double, 3> east;
    std::array<double, 3> north;
    double tan_h;
    double tan_v;

    explicit CameraFrame(const ViewportSpec& spec)
    {
        const double lon = spec.direction.longitude;
        const double lat = spec.direction.latitude;
        forward = {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
        east = {-std::sin(lon), std::cos(lon), 0.0};
        north = {-std::sin(lat) * std::cos(lon), -std::sin(lat) * std::sin(lon), std::cos(lat)};
        tan_h = std::tan(spec.fov_h / 2);
        tan_v = std::tan(spec.fov_v / 2);
    }

    [[nodiscard]] PixelCoord sample(const ViewportSpec& spec, int i, int j, int w, int h) const
    {
        const double a = (2.0 * (i + 0.5) / spec.vp_width - 1.0) * tan_h;
        const double b = (1.0 - 2.0 * (j + 0.5) / spec.vp_height) * tan_v;
        const double dx = forward[0] + a * east[0] + b * north[0];
        const double dy = forward[1] + a * east[1] + b * north[1];
        const double dz = forward[2] + a * east[2] + b * north[2];
        const Direction d{std::atan2(dy, dx), std::atan2(dz, std::hypot(dx, dy))};
        return sphere_to_pixel(d, w, h);
    }
};

struct Taps {
    int x0, x1, y0, y1;
    double fx, fy;
};

Taps bilinear_taps(PixelCoord p, int w, int h)
{
    const double xs = p.x - 0.5;
    const double ys = p.y - 0.5;
    const double xf = std::floor(xs);
    const double yf = std::floor(ys);
    Taps t{};
    t.fx = xs - xf;
    t.fy = ys - yf;
    const int xi = static_cast<int>(xf);
    const int yi = static_cast<int>(yf);
    t.x0 = ((xi % w) + w) % w;
    t.x1 = (t.x0 + 1) % w;
    t.y0 = std::clamp(yi, 0, h - 1);
    t.y1 = std::clamp(yi + 1, 0, h - 1);
    return t;
}

void check_grid(int w, int h, int block_size)
{
    if (w < 1 || h < 1 || block_size < 1 || w % block_size != 0 || h % block_size != 0) {
        throw InvalidArgument("block size must divide the image dimensions");
    }
}

}  // namespace

PixelCoord viewport_sample(const ViewportSpec& spec, int i, int j, int w, int h)
{
    return CameraFrame(spec).sample(spec, i, j, w, h);
}

Footprint viewport_coverage(const ViewportSpec& spec, int w, int h, int block_size)
{
    spec.validate();
    check_grid(w, h, block_size);
    const int cols = w / block_size;
    const int rows = h / block_size;
    Footprint fp;
    if (spec.full_sphere()) {
        fp.blocks.resize(static_cast<std::size_t>(rows) * cols);
        for (std::size_t k = 0; k < fp.blocks.size(); ++k) {
            fp.blocks[k] = static_cast<int>(k);
        }
        fp.displayed_pixels = static_cast<std::size_t>(w) * h;
        return fp;
    }
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(w) * h, 0);
    const CameraFrame cam(spec);
    for (int j = 0; j < spec.vp_height; ++j) {
        for (int i = 0; i < spec.vp_width; ++i) {
            const Taps t = bilinear_taps(cam.sample(spec, i, j, w, h), w, h);
            hit[static_cast<std::size_t>(t.y0) * w + t.x0] = 1;
            hit[static_cast<std::size_t>(t.y0) * w + t.x1] = 1;
            hit[static_cast<std::size_t>(t.y1) * w + t.x0] = 1;
            hit[static_cast<std::size_t>(t.y1) * w + t.x1] = 1;
        }
    }
    std::vector<std::uint8_t> block_hit(static_cast<std::size_t>(rows) * cols, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (hit[static_cast<std::size_t>(y) * w + x]) {
                ++fp.displayed_pixels;
                block_hit[static_cast<std::size_t>(y / block_size) * cols + x / block_size] = 1;
            }
        }
    }
    for (std::size_t k = 0; k < block_hit.size(); ++k) {
        if (block_hit[k]) {
            fp.blocks.push_back(static_cast<int>(k));
        }
    }
    return fp;
}

std::vector<int> viewport_footprint(const ViewportSpec& spec, int w, int h, int block_size, int stride)
{
    if (stride <= 1 || spec.full_sphere()) {
        return viewport_coverage(spec, w, h, block_size).blocks;
    }
    spec.validate();
    check_grid(w, h, block_size);
    const int cols = w / block_size;
    const int rows = h / block_size;
    std::vector<std::uint8_t> block_hit(static_cast<std::size_t>(rows) * cols, 0);
    const CameraFrame cam(spec);
    auto lattice = [stride](int extent) {
        std::vector<int> v;
        for (int i = 0; i < extent; i += stride) {
            v.push_back(i);
        }
        if (v.back() != extent - 1) {
            v.push_back(extent - 1);
        }
        return v;
    };
    const auto is = lattice(spec.vp_width);
    const auto js = lattice(spec.vp_height);
    for (const int j : js) {
        for (const int i : is) {
            const Taps t = bilinear_taps(cam.sample(spec, i, j, w, h), w, h);
            for (const int y : {t.y0, t.y1}) {
                for (const int x : {t.x0, t.x1}) {
                    block_hit[static_cast<std::size_t>(y / block_size) * cols + x / block_size] = 1;
                }
            }
        }
    }
    std::vector<int> out;
    for (std::size_t k = 0; k < block_hit.size(); ++k) {
        if (block_hit[k]) {
            out.push_back(static_cast<int>(k));
        }
    }
    return out;
}

PlaneImage render_viewport(const PlaneImage& img, const ViewportSpec& spec)
{
    spec.validate();
    if (spec.full_sphere()) {
        throw InvalidArgument("cannot render a full-sphere viewport");
    }
    const int w = img.width();
    const int h = img.height();
    const CameraFrame cam(spec);
    PlaneImage out(spec.vp_width, spec.vp_height, img.channels());
    for (int j = 0; j < spec.vp_height; ++j) {
        for (int i = 0; i < spec.vp_width; ++i) {
            const Taps t = bilinear_taps(cam.sample(spec, i, j, w, h), w, h);
            for (int c = 0; c < img.channels(); ++c) {
                const double top = (1 - t.fx) * img.at(t.x0, t.y0, c) + t.fx * img.at(t.x1, t.y0, c);
                const double bottom = (1 - t.fx) * img.at(t.x0, t.y1, c) + t.fx * img.at(t.x1, t.y1, c);
                const double v = (1 - t.fy) * top + t.fy * bottom;
                out.at(i, j, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

double viewport_mse(const PlaneImage& v, const PlaneImage& v_hat)
{
    if (v.width() != v_hat.width() || v.height() != v_hat.height()) {
        throw InvalidArgument("viewport_psnr: dimension mismatch");
    }
    const PlaneImage a = to_luma(v);
    const PlaneImage b = to_luma(v_hat);
    double sse = 0;
    for (std::size_t k = 0; k < a.samples().size(); ++k) {
        const double d = static_cast<double>(a.samples()[k]) - b.samples()[k];
        sse += d * d;
    }
    return sse / static_cast<double>(a.samples().size());
}

double psnr_from_mse(double mse)
{
    if (mse <= 0) {
        return kInfinitePsnr;
    }
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double viewport_psnr(const PlaneImage& v, const PlaneImage& v_hat)
{
    return psnr_from_mse(viewport_mse(v, v_hat));
}

double usefulness(std::size_t displayed_px, std::size_t decoded_px)
{
    if (decoded_px == 0) {
        throw InvalidArgument("usefulness: no decoded pixels");
    }
    if (displayed_px > decoded_px) {
        throw InvalidArgument("usefulness: more displayed than decoded pixels");
    }
    return static_cast<double>(displayed_px) / static_cast<double>(decoded_px);
}

}  // namespace oic
