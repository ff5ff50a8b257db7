#pragma once

#include "oic/bits.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace oic {

inline constexpr int kMinQp = 0;
inline constexpr int kMaxQp = 51;

/// Quantizer step 2^((qp - 4) / 6). Throws InvalidArgument outside [0, 51].
double quant_step(int qp);

/// Orthonormal 2D DCT-II on N x N blocks (row-major). Coefficients and
/// reconstructed samples are rounded half away from zero to integers, so a
/// constant block c has DC c * N.
class Dct {
public:
    explicit Dct(int n);

    [[nodiscard]] int size() const { return n_; }
    [[nodiscard]] std::vector<int> forward(std::span<const std::uint8_t> block) const;
    [[nodiscard]] std::vector<int> forward(std::span<const int> block) const;
    [[nodiscard]] std::vector<int> inverse(std::span<const int> coeffs) const;

private:
    [[nodiscard]] std::vector<int> apply(std::span<const double> in, bool transpose) const;

    int n_;
    std::vector<double> basis_;  // basis_[k * n + i] = c_k cos(pi (2i + 1) k / 2n)
};

/// Uniform quantizer with rounding half away from zero.
std::vector<int> quantize(std::span<const int> coeffs, int qp);
std::vector<int> dequantize(std::span<const int> levels, int qp);

/// Planes needed for levels with the given maximum magnitude: one sign plane
/// plus at least one magnitude plane.
int plane_count_for(int max_abs_level);

/// Sign-magnitude planes: planes[0] is the magnitude MSB, planes[P-2] the LSB,
/// planes[P-1] the sign (1 = negative). Throws InvalidArgument if a magnitude
/// does not fit in P-1 bits.
std::vector<BitVector> bitplane_split(std::span<const int> levels, int planes);
std::vector<int> bitplane_join(const std::vector<BitVector>& planes);

/// Decoder-side reconstruction: inverse(dequantize(levels)) clamped to [0, 255].
std::vector<std::uint8_t> reconstruct(const Dct& dct, std::span<const int> levels, int qp);

/// Quantized transform of a prediction with magnitudes saturated to the plane
/// budget, so side information always splits into `planes` planes.
std::vector<int> side_information_levels(const Dct& dct, std::span<const std::uint8_t> prediction, int qp,
                                         int planes);

}  // namespace oic
