#pragma once

#include "oic/image.hpp"

#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

namespace oic {

inline constexpr double kPi = std::numbers::pi;

/// Gaze direction on the unit sphere. Longitude lives in [-pi, pi) and wraps;
/// latitude lives in [-pi/2, pi/2].
struct Direction {
    double longitude = 0.0;
    double latitude = 0.0;

    /// Wraps longitude into [-pi, pi) and clamps latitude to the poles.
    static Direction normalized(double longitude, double latitude);
};

double wrap_longitude(double longitude);

struct PixelCoord {
    double x = 0.0;
    double y = 0.0;
};

/// Equirectangular mapping m. x wraps modulo w; y = 0 is the north pole.
PixelCoord sphere_to_pixel(Direction d, int w, int h);
Direction pixel_to_sphere(PixelCoord p, int w, int h);

struct ViewportSpec {
    Direction direction;
    double fov_h = kPi / 2;
    double fov_v = kPi / 2;
    int vp_width = 256;
    int vp_height = 256;

    /// A field of view of at least 2*pi on either axis means "the whole sphere".
    [[nodiscard]] bool full_sphere() const { return fov_h >= 2 * kPi || fov_v >= 2 * kPi; }
    /// Throws InvalidArgument unless 0 < fov < pi (or full_sphere()) and the
    /// viewport has at least one pixel.
    void validate() const;
    [[nodiscard]] ViewportSpec looking_at(Direction d) const
    {
        ViewportSpec s = *this;
        s.direction = d;
        return s;
    }
};

/// Blocks touched by a viewport plus the number of distinct source pixels it
/// samples. A block belongs to the footprint iff one of the bilinear taps of
/// some viewport pixel's gnomonic back-projection lies inside it.
struct Footprint {
    std::vector<int> blocks;  ///< row-major block indices, ascending
    std::size_t displayed_pixels = 0;
};

/// Exact footprint over every viewport pixel.
Footprint viewport_coverage(const ViewportSpec& spec, int w, int h, int block_size);

/// Block set J(theta). With stride > 1 only a lattice of viewport pixels (always
/// including the last row and column) is projected; the result is then a subset
/// of the exact footprint, which is what coverage checks need.
std::vector<int> viewport_footprint(const ViewportSpec& spec, int w, int h, int block_size, int stride = 1);

/// Gnomonic rendering with bilinear sampling (horizontal wrap, vertical clamp).
PlaneImage render_viewport(const PlaneImage& img, const ViewportSpec& spec);

/// Continuous equirectangular coordinate seen by viewport pixel (i, j).
PixelCoord viewport_sample(const ViewportSpec& spec, int i, int j, int w, int h);

/// Mean squared error over luma.
double viewport_mse(const PlaneImage& v, const PlaneImage& v_hat);

/// Returned by viewport_psnr when the two viewports are identical.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// PSNR over luma with peak 255.
double viewport_psnr(const PlaneImage& v, const PlaneImage& v_hat);

double psnr_from_mse(double mse);

/// Share of decoded pixels that end up displayed.
double usefulness(std::size_t displayed_px, std::size_t decoded_px);

}  // namespace oic
