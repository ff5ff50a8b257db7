#pragma once

#include "oic/encoder.hpp"
#include "oic/ordering.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace oic {

/// A block scheduled for one request together with the context it is decoded
/// under (Empty for access starts).
struct PlannedBlock {
    int block = 0;
    ContextId ctx = ContextId::Empty;
};

struct RequestPlan {
    std::vector<PlannedBlock> blocks;
    std::vector<int> access_starts;
    std::uint64_t signaling_bits = 0;
};

struct PlanInput {
    const BlockGrid* grid = nullptr;
    std::span<const std::uint8_t> decoded;
    std::span<const int> requested;
    std::span<const std::uint8_t> access;
    int center = -1;
    OrderMethod method = OrderMethod::Snake;
    bool prefer_horizontal = true;
    /// Bits of (block, context); required for GreedyRate.
    std::function<std::int64_t(int, ContextId)> bits;
    std::optional<int> forced_start;
};

/// Navigation plan with the context of every block fixed by the blocks decoded
/// before it. Throws Error if a block would need the empty context without
/// being an access block.
RequestPlan plan_request(const PlanInput& in);

struct SentBlock {
    int block = 0;
    ContextId ctx = ContextId::Empty;
    std::int64_t bits = 0;
};

struct RequestResult {
    std::vector<SentBlock> blocks;
    std::int64_t request_bits = 0;
    std::int64_t accumulated_bits = 0;
    std::size_t displayed_px = 0;
    /// Pixels of every block needed to show the request.
    std::size_t decoded_px = 0;
    double usefulness = 0;
    /// Against the reference image when the session has one.
    std::optional<double> psnr_db;
    PlaneImage viewport;
};

struct SessionOptions {
    OrderMethod order = OrderMethod::Snake;
    ViewportSpec viewport;  ///< fov and resolution of requests that omit them
};

/// Decoder-side state of one user: the decoded set and the reconstruction
/// built only from the container. Not thread-safe; one writer per session.
class Session {
public:
    Session(std::shared_ptr<const EncodedImage> enc, SessionOptions options,
            std::shared_ptr<const PlaneImage> reference = nullptr);

    /// Plans, extracts and decodes every new block of the request and renders
    /// the viewport. Throws DecodingFailure on corrupt streams; the session is
    /// left unchanged in that case.
    RequestResult request(const ViewportSpec& spec);
    RequestResult request(Direction d) { return request(options_.viewport.looking_at(d)); }

    [[nodiscard]] const std::vector<std::uint8_t>& decoded() const { return decoded_; }
    [[nodiscard]] const PlaneImage& canvas() const { return canvas_; }
    [[nodiscard]] std::int64_t accumulated_bits() const { return accumulated_; }
    [[nodiscard]] std::size_t request_count() const { return requests_; }
    [[nodiscard]] const EncodedImage& image() const { return *enc_; }

private:
    std::shared_ptr<const EncodedImage> enc_;
    std::shared_ptr<const LdpcaCode> code_;
    std::shared_ptr<const PlaneImage> reference_;
    SessionOptions options_;
    Dct dct_;
    std::vector<std::uint8_t> decoded_;
    PlaneImage canvas_;
    std::int64_t accumulated_ = 0;
    std::size_t requests_ = 0;
};

/// Decodes one block from its extracted prefix and the current canvas.
/// Returns the reconstructed samples.
std::vector<std::uint8_t> decode_block(const EncodedImage& enc, const LdpcaCode& code, const Dct& dct,
                                       const PlaneImage& canvas, std::span<const std::uint8_t> decoded, int block,
                                       ContextId ctx);

/// Number of pixels of a block.
inline std::size_t block_pixels(const BlockGrid& grid)
{
    return static_cast<std::size_t>(grid.block_size()) * grid.block_size();
}

}  // namespace oic
