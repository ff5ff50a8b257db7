#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace oic {

/// 8-bit raster with 1 (luma) or 3 (RGB, interleaved) channels.
class PlaneImage {
public:
    PlaneImage() = default;
    PlaneImage(int width, int height, int channels = 1, std::uint8_t fill = 0);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int channels() const { return channels_; }
    [[nodiscard]] bool empty() const { return samples_.empty(); }

    [[nodiscard]] std::uint8_t at(int x, int y, int c = 0) const
    {
        return samples_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t& at(int x, int y, int c = 0)
    {
        return samples_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    [[nodiscard]] std::span<const std::uint8_t> samples() const { return samples_; }
    std::span<std::uint8_t> samples() { return samples_; }

    bool operator==(const PlaneImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<std::uint8_t> samples_;
};

/// BT.601 luma; returns the input unchanged when it already has one channel.
PlaneImage to_luma(const PlaneImage& img);

/// Loads PNG or binary PGM/PPM (P5/P6), picked by file signature.
PlaneImage load_image(const std::filesystem::path& path);

/// Loads an image and enforces the equirectangular aspect (width = 2 * height).
PlaneImage load_equirectangular(const std::filesystem::path& path);

void save_pgm(const PlaneImage& img, const std::filesystem::path& path);
void save_png(const PlaneImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const PlaneImage& img);
PlaneImage decode_png(std::span<const std::uint8_t> bytes);

}  // namespace oic
