#include "oic/simulate.hpp"

#include "oic/error.hpp"
#include "oic/placement.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace oic {

Method Method::parse(std::string_view name)
{
    if (name == "ours") {
        return {MethodKind::Ours, "ours"};
    }
    if (name == "es") {
        return {MethodKind::Exhaustive, "es"};
    }
    if (name == "topt" || (name.size() >= 4 && name.front() == 't' && name.find('x') != std::string_view::npos)) {
        // Layout syntax is checked against the grid when the layout is built.
        return {MethodKind::Tiles, std::string(name)};
    }
    throw InvalidArgument("unknown method '" + std::string(name) + "' (expected ours, es, topt or tMxN)");
}

PreparedImage prepare(const PlaneImage& img, const EncoderConfig& cfg)
{
    EncodeArtifacts art;
    PreparedImage out;
    out.enc = std::make_shared<const EncodedImage>(encode_image(img, cfg, &art));
    out.reference = std::make_shared<const PlaneImage>(std::move(art.luma));
    out.reconstruction = std::make_shared<const PlaneImage>(std::move(art.reconstruction));
    out.rates = std::make_shared<const RateTable>(std::move(art.rates));
    return out;
}

PreparedImage prepare(std::shared_ptr<const EncodedImage> enc, const PlaneImage* source)
{
    PreparedImage out;
    out.enc = std::move(enc);
    if (source == nullptr) {
        return out;
    }
    PlaneImage luma = to_luma(*source);
    if (luma.width() != out.enc->width || luma.height() != out.enc->height) {
        throw InvalidArgument("source image does not match the container dimensions");
    }
    const LevelSet levels = compute_levels(luma, out.enc->grid.block_size(), out.enc->qp);
    if (levels.planes != out.enc->planes) {
        throw InvalidArgument("source image does not match the container (plane count differs)");
    }
    out.reconstruction = std::make_shared<const PlaneImage>(reconstruct_image(levels, out.enc->qp));
    out.rates = std::make_shared<const RateTable>(compute_rate_table(luma, levels, out.enc->qp));
    out.reference = std::make_shared<const PlaneImage>(std::move(luma));
    return out;
}

namespace {

double baseline_psnr(const PreparedImage& prep, const ViewportSpec& spec)
{
    if (!prep.reference) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return viewport_psnr(render_viewport(*prep.reference, spec), render_viewport(*prep.reconstruction, spec));
}

void require_baseline_inputs(const PreparedImage& prep)
{
    if (!prep.rates || !prep.reconstruction) {
        throw InvalidArgument("baselines need the source image");
    }
}

}  // namespace

std::vector<LogRow> simulate(const PreparedImage& prep, const Method& method, const HeadTrace& trace,
                             const SimulationOptions& options)
{
    if (!prep.enc) {
        throw InvalidArgument("simulate: no encoded image");
    }
    const EncodedImage& enc = *prep.enc;
    std::vector<LogRow> rows;
    std::optional<TileCoding> tiles;
    std::optional<EsCoding> es;
    const auto access = enc.access.mask(enc.grid.count());
    if (method.kind == MethodKind::Tiles) {
        require_baseline_inputs(prep);
        tiles = tile_encode(*prep.rates, parse_layout(method.tag, enc.grid));
    } else if (method.kind == MethodKind::Exhaustive) {
        require_baseline_inputs(prep);
        es = es_encode(*prep.rates, access);
    }
    SessionOptions sopt{options.order, options.viewport};
    for (const UserTrace& user : trace.users) {
        std::optional<Session> ours;
        std::optional<TileSession> tile_session;
        std::optional<EsSession> es_session;
        switch (method.kind) {
        case MethodKind::Ours: ours.emplace(prep.enc, sopt, prep.reference); break;
        case MethodKind::Tiles: tile_session.emplace(*tiles); break;
        case MethodKind::Exhaustive: es_session.emplace(*es, options.order, enc.prefer_horizontal); break;
        }
        int idx = 0;
        for (const TraceRecord& rec : user.records) {
            const ViewportSpec spec = options.viewport.looking_at(rec.direction);
            LogRow row;
            row.user = user.user_id;
            row.request_idx = idx++;
            if (ours) {
                const RequestResult r = ours->request(spec);
                row.bits = r.request_bits;
                row.accum_bits = r.accumulated_bits;
                row.usefulness = r.usefulness;
                row.psnr_db = r.psnr_db.value_or(std::numeric_limits<double>::quiet_NaN());
            } else {
                const Footprint fp = viewport_coverage(spec, enc.width, enc.height, enc.grid.block_size());
                std::size_t decoded_px = 0;
                if (tile_session) {
                    const auto r = tile_session->request(fp.blocks);
                    row.bits = r.request_bits;
                    row.accum_bits = r.accumulated_bits;
                    decoded_px = r.decoded_px;
                } else {
                    const auto r = es_session->request(fp.blocks, center_block(spec, enc.grid));
                    row.bits = r.request_bits;
                    row.accum_bits = r.accumulated_bits;
                    decoded_px = r.decoded_px;
                }
                row.usefulness = usefulness(fp.displayed_pixels, decoded_px);
                row.psnr_db = baseline_psnr(prep, spec);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::uint64_t method_storage_bytes(const PreparedImage& prep, const Method& method)
{
    switch (method.kind) {
    case MethodKind::Ours: return storage_bytes(*prep.enc);
    case MethodKind::Tiles:
        require_baseline_inputs(prep);
        return tile_encode(*prep.rates, parse_layout(method.tag, prep.enc->grid)).storage_bytes();
    case MethodKind::Exhaustive:
        require_baseline_inputs(prep);
        return es_encode(*prep.rates, prep.enc->access.mask(prep.enc->grid.count())).storage_bytes();
    }
    return 0;
}

SrdPoint summarize(std::span<const LogRow> rows, int qp, std::uint64_t storage_bytes)
{
    if (rows.empty()) {
        throw InvalidArgument("cannot summarize an empty log");
    }
    SrdPoint p;
    p.qp = qp;
    p.storage_bytes = static_cast<double>(storage_bytes);
    double bits = 0;
    double mse = 0;
    for (const LogRow& r : rows) {
        bits += static_cast<double>(r.bits);
        mse += std::isinf(r.psnr_db) ? 0.0 : 255.0 * 255.0 / std::pow(10.0, r.psnr_db / 10);
    }
    const auto n = static_cast<double>(rows.size());
    p.rate_bytes = bits / 8 / n;
    p.psnr_db = psnr_from_mse(mse / n);
    return p;
}

std::string format_log(std::span<const LogRow> rows)
{
    std::ostringstream out;
    out << kLogHeader << '\n';
    char buf[64];
    for (const LogRow& r : rows) {
        out << r.user << ',' << r.request_idx << ',' << r.bits << ',' << r.accum_bits << ',';
        std::snprintf(buf, sizeof buf, "%.6f", r.usefulness);
        out << buf << ',';
        if (std::isnan(r.psnr_db)) {
            out << "nan";
        } else if (std::isinf(r.psnr_db)) {
            out << "inf";
        } else {
            std::snprintf(buf, sizeof buf, "%.4f", r.psnr_db);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace oic
