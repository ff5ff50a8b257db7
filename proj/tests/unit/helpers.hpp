#pragma once

#include "oic/encoder.hpp"
#include "oic/image.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace oic::test {

/// Deterministic equirectangular test picture: smooth gradients, a few edges
/// and mild noise, so every context and intra mode gets exercised.
inline PlaneImage synthetic_image(int width = 256, int height = 128, std::uint64_t seed = 1)
{
    PlaneImage img(width, height, 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 4.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double v = 100 + 60 * std::sin(2 * M_PI * x / width) * std::cos(M_PI * y / height);
            v += (x / 24 + y / 20) % 2 == 0 ? 25 : -10;
            v += 30 * std::sin(x * 0.21 + y * 0.13);
            v += noise(rng);
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    return img;
}

/// Small grid config: 16 px blocks keep the code length at 256.
inline EncoderConfig small_config(int qp = 30, RateMode mode = RateMode::Theoretical)
{
    EncoderConfig cfg;
    cfg.block_size = 16;
    cfg.qp = qp;
    cfg.mode = mode;
    return cfg;
}

}  // namespace oic::test
