#include "oic/codec_core.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

namespace oic {

double quant_step(int qp)
{
    if (qp < kMinQp || qp > kMaxQp) {
        throw InvalidArgument("qp must lie in [0, 51], got " + std::to_string(qp));
    }
    return std::exp2((qp - 4) / 6.0);
}

Dct::Dct(int n) : n_(n), basis_(static_cast<std::size_t>(n) * n)
{
    if (n < 2) {
        throw InvalidArgument("DCT size must be at least 2");
    }
    for (int k = 0; k < n; ++k) {
        const double ck = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i) {
            basis_[static_cast<std::size_t>(k) * n + i] = ck * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
        }
    }
}

namespace {

int round_away(double v)
{
    return static_cast<int>(std::lround(v));
}

}  // namespace

std::vector<int> Dct::apply(std::span<const double> in, bool transpose) const
{
    // forward: Y = B X B^T; inverse: X = B^T Y B.
    const int n = n_;
    auto b = [&](int r, int c) {
        return transpose ? basis_[static_cast<std::size_t>(c) * n + r] : basis_[static_cast<std::size_t>(r) * n + c];
    };
    std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double s = 0;
            for (int k = 0; k < n; ++k) {
                s += b(r, k) * in[static_cast<std::size_t>(k) * n + c];
            }
            tmp[static_cast<std::size_t>(r) * n + c] = s;
        }
    }
    std::vector<int> out(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double s = 0;
            for (int k = 0; k < n; ++k) {
                s += tmp[static_cast<std::size_t>(r) * n + k] * b(c, k);
            }
            out[static_cast<std::size_t>(r) * n + c] = round_away(s);
        }
    }
    return out;
}

std::vector<int> Dct::forward(std::span<const std::uint8_t> block) const
{
    if (block.size() != basis_.size()) {
        throw InvalidArgument("DCT input size mismatch");
    }
    const std::vector<double> in(block.begin(), block.end());
    return apply(in, false);
}

std::vector<int> Dct::forward(std::span<const int> block) const
{
    if (block.size() != basis_.size()) {
        throw InvalidArgument("DCT input size mismatch");
    }
    const std::vector<double> in(block.begin(), block.end());
    return apply(in, false);
}

std::vector<int> Dct::inverse(std::span<const int> coeffs) const
{
    if (coeffs.size() != basis_.size()) {
        throw InvalidArgument("DCT input size mismatch");
    }
    const std::vector<double> in(coeffs.begin(), coeffs.end());
    return apply(in, true);
}

std::vector<int> quantize(std::span<const int> coeffs, int qp)
{
    const double step = quant_step(qp);
    std::vector<int> out(coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        const double q = std::floor(std::abs(coeffs[k]) / step + 0.5);
        out[k] = coeffs[k] < 0 ? -static_cast<int>(q) : static_cast<int>(q);
    }
    return out;
}

std::vector<int> dequantize(std::span<const int> levels, int qp)
{
    const double step = quant_step(qp);
    std::vector<int> out(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        out[k] = round_away(levels[k] * step);
    }
    return out;
}

int plane_count_for(int max_abs_level)
{
    int bits = 0;
    for (int v = std::abs(max_abs_level); v > 0; v >>= 1) {
        ++bits;
    }
    return 1 + std::max(1, bits);
}

std::vector<BitVector> bitplane_split(std::span<const int> levels, int planes)
{
    if (planes < 2 || planes > 16) {
        throw InvalidArgument("plane count must lie in [2, 16]");
    }
    const int mag_planes = planes - 1;
    const int limit = 1 << mag_planes;
    std::vector<BitVector> out(static_cast<std::size_t>(planes), BitVector(levels.size(), 0));
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const int mag = std::abs(levels[k]);
        if (mag >= limit) {
            throw InvalidArgument("level magnitude exceeds the plane budget");
        }
        for (int p = 0; p < mag_planes; ++p) {
            out[static_cast<std::size_t>(p)][k] = static_cast<std::uint8_t>((mag >> (mag_planes - 1 - p)) & 1);
        }
        out[static_cast<std::size_t>(mag_planes)][k] = levels[k] < 0 ? 1 : 0;
    }
    return out;
}

std::vector<int> bitplane_join(const std::vector<BitVector>& planes)
{
    if (planes.size() < 2) {
        throw InvalidArgument("need at least two planes");
    }
    const std::size_t n = planes.front().size();
    const int mag_planes = static_cast<int>(planes.size()) - 1;
    std::vector<int> out(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        int mag = 0;
        for (int p = 0; p < mag_planes; ++p) {
            mag = (mag << 1) | (planes[static_cast<std::size_t>(p)].at(k) & 1);
        }
        out[k] = planes.back().at(k) ? -mag : mag;
    }
    return out;
}

std::vector<std::uint8_t> reconstruct(const Dct& dct, std::span<const int> levels, int qp)
{
    const auto samples = dct.inverse(dequantize(levels, qp));
    std::vector<std::uint8_t> out(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        out[k] = static_cast<std::uint8_t>(std::clamp(samples[k], 0, 255));
    }
    return out;
}

std::vector<int> side_information_levels(const Dct& dct, std::span<const std::uint8_t> prediction, int qp,
                                         int planes)
{
    auto levels = quantize(dct.forward(prediction), qp);
    const int cap = (1 << (planes - 1)) - 1;
    for (int& l : levels) {
        l = std::clamp(l, -cap, cap);
    }
    return levels;
}

}  // namespace oic
