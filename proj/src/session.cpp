#include "oic/session.hpp"

#include "oic/error.hpp"
#include "oic/placement.hpp"

#include <algorithm>
#include <limits>

namespace oic {

RequestPlan plan_request(const PlanInput& in)
{
    if (in.grid == nullptr) {
        throw InvalidArgument("plan_request: missing grid");
    }
    const BlockGrid& grid = *in.grid;
    BlockCost cost;
    if (in.method == OrderMethod::GreedyRate) {
        if (!in.bits) {
            throw InvalidArgument("GreedyRate needs block rates");
        }
        cost = [&](int block, std::span<const std::uint8_t> decoded) {
            const ContextId ctx = available_context(grid, block, decoded);
            if (ctx == ContextId::Empty && !in.access[block]) {
                return std::numeric_limits<double>::infinity();
            }
            return static_cast<double>(in.bits(block, ctx));
        };
    }
    NavigationInput nav;
    nav.grid = &grid;
    nav.decoded = in.decoded;
    nav.requested = in.requested;
    nav.access = in.access;
    nav.center = in.center;
    nav.method = in.method;
    nav.prefer_horizontal = in.prefer_horizontal;
    nav.cost = cost ? &cost : nullptr;
    nav.forced_start = in.forced_start;
    const NavigationPlan nav_plan = plan_navigation(nav);

    RequestPlan plan;
    plan.access_starts = nav_plan.access_starts;
    plan.signaling_bits = nav_plan.signaling_bits;
    std::vector<std::uint8_t> known(in.decoded.begin(), in.decoded.end());
    known.resize(static_cast<std::size_t>(grid.count()), 0);
    for (const int b : nav_plan.order) {
        const ContextId ctx = available_context(grid, b, known);
        if (ctx == ContextId::Empty && (in.access.empty() || !in.access[b])) {
            throw Error("block " + std::to_string(b) + " scheduled without a decoded neighbour or access completion");
        }
        plan.blocks.push_back({b, ctx});
        known[b] = 1;
    }
    return plan;
}

std::vector<std::uint8_t> decode_block(const EncodedImage& enc, const LdpcaCode& code, const Dct& dct,
                                       const PlaneImage& canvas, std::span<const std::uint8_t> decoded, int block,
                                       ContextId ctx)
{
    const auto mode = static_cast<IntraMode>(enc.intra_modes.at(block)[index_of(ctx)]);
    const auto si = side_information_planes(dct, enc.grid, canvas, decoded, block, ctx, mode, enc.qp, enc.planes);
    const auto extracts = extract(enc.streams.at(block), ctx);
    std::vector<BitVector> planes;
    planes.reserve(extracts.size());
    for (std::size_t p = 0; p < extracts.size(); ++p) {
        const BitVector* transported =
            enc.mode == RateMode::Theoretical ? &enc.transport.at(block).at(p) : nullptr;
        planes.push_back(decode_plane(code, extracts[p], si[p], enc.mode, transported));
    }
    return reconstruct(dct, bitplane_join(planes), enc.qp);
}

Session::Session(std::shared_ptr<const EncodedImage> enc, SessionOptions options,
                 std::shared_ptr<const PlaneImage> reference)
    : enc_(std::move(enc)),
      code_(enc_ ? enc_->code() : nullptr),
      reference_(std::move(reference)),
      options_(options),
      dct_(enc_ ? enc_->grid.block_size() : 2)
{
    if (!enc_) {
        throw InvalidArgument("session needs an encoded image");
    }
    if (reference_ && (reference_->width() != enc_->width || reference_->height() != enc_->height)) {
        throw InvalidArgument("reference image does not match the container dimensions");
    }
    if (reference_ && reference_->channels() != 1) {
        reference_ = std::make_shared<const PlaneImage>(to_luma(*reference_));
    }
    options_.viewport.validate();
    decoded_.assign(static_cast<std::size_t>(enc_->grid.count()), 0);
    canvas_ = PlaneImage(enc_->width, enc_->height, 1);
}

RequestResult Session::request(const ViewportSpec& spec)
{
    spec.validate();
    const EncodedImage& enc = *enc_;
    const BlockGrid& grid = enc.grid;
    const Footprint fp = viewport_coverage(spec, enc.width, enc.height, grid.block_size());
    const auto access = enc.access.mask(grid.count());

    PlanInput in;
    in.grid = &grid;
    in.decoded = decoded_;
    in.requested = fp.blocks;
    in.access = access;
    in.center = center_block(spec, grid);
    in.method = options_.order;
    in.prefer_horizontal = enc.prefer_horizontal;
    in.bits = [&](int b, ContextId ctx) { return enc.transmit_bits(b, ctx); };
    const RequestPlan plan = plan_request(in);

    RequestResult out;
    PlaneImage canvas = canvas_;
    std::vector<std::uint8_t> decoded = decoded_;
    std::size_t outside = 0;
    for (const PlannedBlock& pb : plan.blocks) {
        write_block(canvas, grid, pb.block, decode_block(enc, *code_, dct_, canvas, decoded, pb.block, pb.ctx));
        decoded[pb.block] = 1;
        const std::int64_t bits = enc.transmit_bits(pb.block, pb.ctx);
        out.blocks.push_back({pb.block, pb.ctx, bits});
        out.request_bits += bits;
        if (!std::binary_search(fp.blocks.begin(), fp.blocks.end(), pb.block)) {
            ++outside;
        }
    }
    out.request_bits += static_cast<std::int64_t>(plan.signaling_bits);
    if (requests_ == 0) {
        out.request_bits += static_cast<std::int64_t>(enc.access.signaling_bits);
    }

    canvas_ = std::move(canvas);
    decoded_ = std::move(decoded);
    accumulated_ += out.request_bits;
    ++requests_;

    out.accumulated_bits = accumulated_;
    out.displayed_px = fp.displayed_pixels;
    out.decoded_px = (fp.blocks.size() + outside) * block_pixels(grid);
    out.usefulness = usefulness(out.displayed_px, out.decoded_px);
    // A full-sphere request shows the whole equirectangular canvas.
    out.viewport = spec.full_sphere() ? canvas_ : render_viewport(canvas_, spec);
    if (reference_) {
        out.psnr_db = viewport_psnr(spec.full_sphere() ? *reference_ : render_viewport(*reference_, spec),
                                    out.viewport);
    }
    return out;
}

}  // namespace oic
