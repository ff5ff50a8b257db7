#pragma once

#include "oic/baselines.hpp"
#include "oic/container.hpp"
#include "oic/eval.hpp"
#include "oic/session.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oic {

enum class MethodKind : std::uint8_t { Ours, Tiles, Exhaustive };

/// A coder served to the trace: ours, a tile layout (tMxN, topt) or ES.
struct Method {
    MethodKind kind = MethodKind::Ours;
    std::string tag = "ours";

    /// Accepts "ours", "es", "topt", "t<m>x<n>". Throws InvalidArgument.
    static Method parse(std::string_view name);
};

/// Everything needed to serve one image at one qp with any method.
struct PreparedImage {
    std::shared_ptr<const EncodedImage> enc;
    std::shared_ptr<const PlaneImage> reference;       ///< source luma, may be null
    std::shared_ptr<const PlaneImage> reconstruction;  ///< decoded image, baselines only
    std::shared_ptr<const RateTable> rates;            ///< baselines only
};

/// Encodes `img` and keeps the by-products the baselines need.
PreparedImage prepare(const PlaneImage& img, const EncoderConfig& cfg);

/// Wraps a parsed container; with the source image the baselines and PSNR
/// become available.
PreparedImage prepare(std::shared_ptr<const EncodedImage> enc, const PlaneImage* source);

struct LogRow {
    std::string user;
    int request_idx = 0;
    std::int64_t bits = 0;
    std::int64_t accum_bits = 0;
    double usefulness = 0;
    double psnr_db = 0;  ///< NaN without a reference image
};

inline constexpr const char* kLogHeader = "user,request_idx,bits,accum_bits,usefulness,psnr_db";

struct SimulationOptions {
    ViewportSpec viewport;
    OrderMethod order = OrderMethod::Snake;
};

/// Replays every user of the trace in a fresh session. Deterministic.
std::vector<LogRow> simulate(const PreparedImage& prep, const Method& method, const HeadTrace& trace,
                             const SimulationOptions& options);

/// Storage in bytes of the method's stored artifact.
std::uint64_t method_storage_bytes(const PreparedImage& prep, const Method& method);

/// Operating point of a log: mean request bytes and the PSNR of the mean
/// viewport MSE.
SrdPoint summarize(std::span<const LogRow> rows, int qp, std::uint64_t storage_bytes);

std::string format_log(std::span<const LogRow> rows);

}  // namespace oic
