// One PASS/FAIL line per primary criterion. Exit status is the number of
// failed criteria. Usage: oic_acceptance [fixture_dir]
#include "oic/baselines.hpp"
#include "oic/container.hpp"
#include "oic/encoder.hpp"
#include "oic/error.hpp"
#include "oic/eval.hpp"
#include "oic/incremental.hpp"
#include "oic/placement.hpp"
#include "oic/session.hpp"
#include "oic/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace oic;

namespace {

namespace fs = std::filesystem;

const std::vector<int> kQps{22, 27, 32, 37, 42};
const std::vector<std::string> kFixtures{"landscape", "city", "photo"};

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(const char* name, const std::function<Outcome()>& check)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-34s %s  [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) {
        ++failures;
    }
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Shared fixtures: images, trace, theoretical encodes and simulation logs are
// built once and reused by the criteria that need them.
struct Fixtures {
    fs::path dir;
    std::map<std::string, PlaneImage> images;
    HeadTrace trace;
    std::map<std::pair<std::string, int>, PreparedImage> theoretical;
    std::map<std::pair<std::string, int>, PreparedImage> practical;
    std::map<std::tuple<std::string, int, std::string>, std::vector<LogRow>> logs;

    EncoderConfig config(int qp, RateMode mode) const
    {
        EncoderConfig cfg;
        cfg.qp = qp;
        cfg.mode = mode;
        return cfg;
    }

    const PreparedImage& prepared(const std::string& name, int qp, RateMode mode)
    {
        auto& cache = mode == RateMode::Theoretical ? theoretical : practical;
        auto it = cache.find({name, qp});
        if (it == cache.end()) {
            it = cache.emplace(std::pair{name, qp}, prepare(images.at(name), config(qp, mode))).first;
        }
        return it->second;
    }

    const std::vector<LogRow>& log(const std::string& name, int qp, const std::string& method)
    {
        const auto key = std::tuple{name, qp, method};
        auto it = logs.find(key);
        if (it == logs.end()) {
            SimulationOptions opt;
            const auto& prep = prepared(name, qp, RateMode::Theoretical);
            it = logs.emplace(key, simulate(prep, Method::parse(method), trace, opt)).first;
        }
        return it->second;
    }
};

Fixtures fx;

std::vector<BitVector> encoder_planes(const std::vector<int>& levels, int planes)
{
    return bitplane_split(levels, planes);
}

// --- round trip ---------------------------------------------------------------

Outcome round_trip()
{
    std::size_t checked = 0;
    std::size_t failed = 0;
    for (const RateMode mode : {RateMode::Theoretical, RateMode::Practical}) {
        for (const int qp : {22, 42}) {
            EncodeArtifacts art;
            const PlaneImage& img = fx.images.at("landscape");
            const EncodedImage enc = encode_image(img, fx.config(qp, mode), &art);
            const auto code = enc.code();
            const Dct dct(enc.grid.block_size());
            const std::vector<std::uint8_t> all(static_cast<std::size_t>(enc.grid.count()), 1);
            for (int b = 0; b < enc.grid.count(); ++b) {
                const auto truth = encoder_planes(art.levels[b], enc.planes);
                for (const ContextId ctx : enc.contexts(b)) {
                    const auto intra = static_cast<IntraMode>(enc.intra_modes[b][index_of(ctx)]);
                    const auto si = side_information_planes(dct, enc.grid, art.reconstruction, all, b, ctx, intra,
                                                            enc.qp, enc.planes);
                    const auto ex = extract(enc.streams[b], ctx);
                    for (int p = 0; p < enc.planes; ++p) {
                        ++checked;
                        try {
                            const BitVector* tr = mode == RateMode::Theoretical ? &enc.transport[b][p] : nullptr;
                            if (decode_plane(*code, ex[p], si[p], mode, tr) != truth[p]) {
                                ++failed;
                            }
                        } catch (const DecodingFailure&) {
                            ++failed;
                        }
                    }
                }
            }
            if (mode == RateMode::Practical) {
                fx.practical.emplace(std::pair{std::string("landscape"), qp},
                                     PreparedImage{std::make_shared<const EncodedImage>(enc),
                                                   std::make_shared<const PlaneImage>(art.luma),
                                                   std::make_shared<const PlaneImage>(art.reconstruction),
                                                   std::make_shared<const RateTable>(art.rates)});
            }
        }
    }
    return {failed == 0, fmt("%zu plane decodes (blocks x contexts x planes, 2 modes, qp 22/42), %zu failures",
                             checked, failed)};
}

// --- prefix -------------------------------------------------------------------

Outcome prefix_property()
{
    std::size_t pairs = 0;
    std::size_t violations = 0;
    for (const int qp : {22, 42}) {
        for (const RateMode mode : {RateMode::Theoretical, RateMode::Practical}) {
            const auto& prep = fx.prepared("landscape", qp, mode);
            const EncodedImage& enc = *prep.enc;
            const auto code = enc.code();
            const LevelSet levels = compute_levels(*prep.reference, enc.grid.block_size(), qp);
            for (int b = 0; b < enc.grid.count(); ++b) {
                const auto planes = bitplane_split(levels.levels[b], enc.planes);
                auto ctxs = enc.contexts(b);
                std::vector<std::vector<PlaneExtract>> ex;
                for (const ContextId c : ctxs) {
                    ex.push_back(extract(enc.streams[b], c));
                }
                for (int p = 0; p < enc.planes; ++p) {
                    // Independent reference: the code's own emission of the true plane.
                    const BitVector emitted = code->emitted_syndromes(planes[p]);
                    for (std::size_t j = 0; j < ctxs.size(); ++j) {
                        const BitVector& sj = ex[j][p].syndromes;
                        if (!std::equal(sj.begin(), sj.end(), emitted.begin())) {
                            ++violations;
                        }
                        for (std::size_t k = 0; k < ctxs.size(); ++k) {
                            const BitVector& sk = ex[k][p].syndromes;
                            if (sj.size() >= sk.size()) {
                                continue;
                            }
                            ++pairs;
                            if (!std::equal(sj.begin(), sj.end(), sk.begin())) {
                                ++violations;
                            }
                        }
                    }
                }
            }
        }
    }
    return {violations == 0 && pairs > 0,
            fmt("%zu rank pairs over all blocks/planes, 2 modes, qp 22/42; %zu violations", pairs, violations)};
}

// --- storage identity -----------------------------------------------------------

Outcome storage_identity()
{
    std::string detail;
    std::string issues;
    bool ok = true;
    std::size_t requests = 0;
    std::size_t mismatched = 0;
    for (const auto& name : kFixtures) {
        for (const int qp : {22, 32, 42}) {
            const auto& prep = fx.prepared(name, qp, RateMode::Theoretical);
            const EncodedImage& enc = *prep.enc;
            const auto bytes = serialize(enc);
            const StorageAccount acct = storage_account(enc);

            // Σ_b Σ_p rate of the worst neighbour context, plus the completion an
            // access block needs on top of it for the empty context.
            std::uint64_t syndromes = 0;
            std::uint64_t completion = 0;
            for (int b = 0; b < enc.grid.count(); ++b) {
                for (const PlaneStream& ps : enc.streams[b].planes) {
                    int worst = 0;
                    for (const ContextId c : enc.contexts(b)) {
                        if (c != ContextId::Empty) {
                            worst = std::max(worst, ps.rate_for(c));
                        }
                    }
                    syndromes += static_cast<std::uint64_t>(worst);
                    if (enc.is_access(b)) {
                        completion += static_cast<std::uint64_t>(std::max(0, ps.rate_for(ContextId::Empty) - worst));
                    }
                }
            }
            const std::uint64_t headers = acct.checksum_bits + acct.directory_bits + acct.mode_bits +
                                          acct.header_bits + acct.padding_bits;
            const std::uint64_t s_bits = storage_bytes(enc) * 8;
            const EncodedImage back = parse(bytes);
            std::uint64_t transport = 0;
            if (enc.mode == RateMode::Theoretical) {
                transport = static_cast<std::uint64_t>(enc.grid.count()) * block_pixels(enc.grid) * 2;
            }
            const std::uint64_t es_bytes = method_storage_bytes(prep, Method::parse("es"));
            const bool identity = syndromes + completion == acct.syndrome_bits &&
                                  syndromes + completion + headers == s_bits;
            const bool layout = bytes.size() == storage_bytes(enc) + transport &&
                                storage_bytes(back) == storage_bytes(enc);
            const bool below_es = storage_bytes(enc) < es_bytes;
            if (!(identity && layout && below_es)) {
                ok = false;
                issues += fmt("%s qp%d identity=%d layout=%d below_es=%d; ", name.c_str(), qp, identity, layout,
                              below_es);
            }

            const auto& ours = fx.log(name, qp, "ours");
            const auto& es = fx.log(name, qp, "es");
            for (std::size_t i = 0; i < ours.size(); ++i) {
                ++requests;
                if (ours[i].bits != es[i].bits) {
                    ++mismatched;
                }
            }
            if (name == "landscape" && qp == 32) {
                detail = fmt("landscape qp32: S=%llu B (syndromes %llu + completion %llu + rest %llu bits), "
                             "ES=%llu B; ",
                             static_cast<unsigned long long>(storage_bytes(enc)),
                             static_cast<unsigned long long>(syndromes), static_cast<unsigned long long>(completion),
                             static_cast<unsigned long long>(headers), static_cast<unsigned long long>(es_bytes));
            }
        }
    }
    ok = ok && mismatched == 0;
    return {ok, issues + detail + fmt("per-request R ours vs ES: %zu/%zu equal", requests - mismatched, requests)};
}

// --- coverage -------------------------------------------------------------------

Outcome coverage()
{
    std::size_t directions = 0;
    std::size_t uncovered = 0;
    std::string sizes;
    for (const auto& [w, h, bs] : std::vector<std::tuple<int, int, int>>{{512, 256, 32}, {512, 256, 16},
                                                                         {1024, 512, 32}}) {
        const BlockGrid grid = BlockGrid::for_image(w, h, bs);
        ViewportSpec spec;
        const AccessBlockSet a = place_fixed(grid, spec);
        const ConstraintReport r = check_constraint(a.blocks, grid, spec, kPi / 180);
        directions += r.directions_checked;
        uncovered += r.satisfied ? 0 : 1;
        sizes += fmt("%dx%d/%d:|A|=%zu ", w, h, bs, a.blocks.size());
    }
    return {uncovered == 0, fmt("%s; %zu directions at 1 deg, %zu grids with an uncovered direction", sizes.c_str(),
                                directions, uncovered)};
}

// --- access-start invariance -----------------------------------------------------

Outcome access_start_invariance()
{
    std::mt19937_64 rng(7);
    double worst = 0;
    std::size_t bad = 0;
    std::size_t requests = 0;
    for (const auto& name : kFixtures) {
        const auto& prep = fx.prepared(name, 27, RateMode::Theoretical);
        const RateTable& rates = *prep.rates;
        const BlockGrid& grid = prep.enc->grid;
        const std::vector<std::uint8_t> all(static_cast<std::size_t>(grid.count()), 1);
        const std::vector<std::uint8_t> none(static_cast<std::size_t>(grid.count()), 0);
        std::vector<TraceRecord> records;
        for (const auto& u : fx.trace.users) {
            records.insert(records.end(), u.records.begin(), u.records.end());
        }
        for (int r = 0; r < 10; ++r) {
            const TraceRecord& rec = records[(static_cast<std::size_t>(r) * records.size()) / 10];
            const ViewportSpec spec = ViewportSpec{}.looking_at(rec.direction);
            const Footprint fp = viewport_coverage(spec, grid.width(), grid.height(), grid.block_size());
            std::uniform_int_distribution<std::size_t> pick(0, fp.blocks.size() - 1);
            std::vector<double> totals;
            for (int s = 0; s < 20; ++s) {
                PlanInput in;
                in.grid = &grid;
                in.decoded = none;
                in.requested = fp.blocks;
                in.access = all;
                in.center = center_block(spec, grid);
                in.method = OrderMethod::Snake;
                in.forced_start = fp.blocks[pick(rng)];
                const RequestPlan plan = plan_request(in);
                double bits = 0;
                for (const PlannedBlock& pb : plan.blocks) {
                    bits += static_cast<double>(rates.at(pb.block, pb.ctx));
                }
                totals.push_back(bits);
            }
            const double m = mad_ratio(totals);
            worst = std::max(worst, m);
            ++requests;
            bad += m < 1e-2 ? 0 : 1;
        }
    }
    return {bad == 0, fmt("%zu requests x 20 starts, worst MAD ratio %.2e (threshold 1e-2)", requests, worst)};
}

// --- rate dominance ----------------------------------------------------------------

Outcome rate_dominance()
{
    const std::vector<std::string> chain{"ours", "t7x7", "t2x2", "t1x1"};
    std::size_t comparisons = 0;
    std::size_t violations = 0;
    std::map<std::string, std::size_t> by_pair;
    std::string example;
    for (const auto& name : kFixtures) {
        for (const int qp : kQps) {
            std::vector<const std::vector<LogRow>*> logs;
            for (const auto& m : chain) {
                logs.push_back(&fx.log(name, qp, m));
            }
            for (std::size_t i = 0; i < logs[0]->size(); ++i) {
                const bool first = (*logs[0])[i].request_idx == 0;
                for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
                    const LogRow& lo = (*logs[k])[i];
                    const LogRow& hi = (*logs[k + 1])[i];
                    // Per-request bits on the first request, accumulated bits on every request.
                    comparisons += first ? 2 : 1;
                    const bool bad = lo.accum_bits > hi.accum_bits || (first && lo.bits > hi.bits);
                    if (bad) {
                        ++violations;
                        ++by_pair[chain[k] + "<=" + chain[k + 1]];
                        if (example.empty()) {
                            example = fmt(" e.g. %s qp%d user %s req %d: %s %lld > %s %lld", name.c_str(), qp,
                                          lo.user.c_str(), lo.request_idx, chain[k].c_str(),
                                          static_cast<long long>(lo.accum_bits), chain[k + 1].c_str(),
                                          static_cast<long long>(hi.accum_bits));
                        }
                    }
                }
            }
        }
    }
    std::string pairs;
    for (const auto& [k, v] : by_pair) {
        pairs += fmt(" %s:%zu", k.c_str(), v);
    }
    return {violations == 0,
            fmt("ours<=T7x7<=T2x2<=T1x1, %zu comparisons, %zu violations%s%s", comparisons, violations,
                pairs.c_str(), example.c_str())};
}

// --- usefulness ------------------------------------------------------------------

double mean_usefulness(const std::vector<LogRow>& rows)
{
    double s = 0;
    for (const auto& r : rows) {
        s += r.usefulness;
    }
    return s / static_cast<double>(rows.size());
}

Outcome usefulness_dominance()
{
    bool ok = true;
    std::string detail;
    for (const auto& name : kFixtures) {
        const double ours = mean_usefulness(fx.log(name, 27, "ours"));
        double best_tile = 0;
        for (const char* t : {"t1x1", "t2x2", "t7x7", "topt"}) {
            best_tile = std::max(best_tile, mean_usefulness(fx.log(name, 27, t)));
        }
        ok = ok && ours > best_tile;
        detail += fmt("%s ours %.3f vs best tile %.3f; ", name.c_str(), ours, best_tile);
    }
    return {ok, detail};
}

// --- BD ----------------------------------------------------------------------------

// Oracle: normal equations in long double, then trapezoid integration.
std::array<long double, 4> oracle_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    long double a[4][5] = {};
    for (std::size_t i = 0; i < x.size(); ++i) {
        long double pw[7];
        pw[0] = 1;
        for (int k = 1; k < 7; ++k) {
            pw[k] = pw[k - 1] * x[i];
        }
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                a[r][c] += pw[r + c];
            }
            a[r][4] += pw[r] * y[i];
        }
    }
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r) {
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) {
                piv = r;
            }
        }
        std::swap(a[c], a[piv]);
        for (int r = 0; r < 4; ++r) {
            if (r != c) {
                const long double f = a[r][c] / a[c][c];
                for (int k = c; k < 5; ++k) {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    return {a[0][4] / a[0][0], a[1][4] / a[1][1], a[2][4] / a[2][2], a[3][4] / a[3][3]};
}

// Fits in PSNR - kCentre keep the normal equations well conditioned.
constexpr double kCentre = 40;

double oracle_bd(const SrdCurve& ref, const SrdCurve& test, const BdParams& params)
{
    auto fit = [&](const SrdCurve& c) {
        std::vector<double> x;
        std::vector<double> y;
        for (const auto& p : c.points) {
            x.push_back(p.psnr_db - kCentre);
            y.push_back(std::log10(projected_cost(p, params)));
        }
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        return std::tuple{oracle_fit(x, y), *lo, *hi};
    };
    const auto [fr, rlo, rhi] = fit(ref);
    const auto [ft, tlo, thi] = fit(test);
    const double lo = std::max(rlo, tlo);
    const double hi = std::min(rhi, thi);
    if (lo >= hi) {
        throw InvalidArgument("no overlap");
    }
    auto eval = [](const std::array<long double, 4>& c, long double x) {
        return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
    };
    const int n = 20000;
    long double sum = 0;
    for (int i = 0; i <= n; ++i) {
        const long double x = lo + (hi - lo) * i / n;
        const long double w = (i == 0 || i == n) ? 0.5L : 1.0L;
        sum += w * (eval(ft, x) - eval(fr, x));
    }
    const double avg = static_cast<double>(sum / n);
    return (std::pow(10.0, avg) - 1) * 100;
}

SrdCurve synthetic_curve(std::mt19937_64& rng, const std::string& name)
{
    std::uniform_real_distribution<double> u(0, 1);
    SrdCurve c{name, {}};
    double psnr = 28 + 4 * u(rng);
    double rate = 50 + 500 * u(rng);
    double storage = 5000 + 50000 * u(rng);
    for (int i = 0; i < 5; ++i) {
        c.points.push_back({22 + 5 * i, storage, rate, psnr});
        psnr += 2 + 2 * u(rng);
        rate *= 1.3 + 0.5 * u(rng);
        storage *= 1.2 + 0.5 * u(rng);
    }
    std::reverse(c.points.begin(), c.points.end());  // qp ascending means quality descending
    for (int i = 0; i < 5; ++i) {
        c.points[i].qp = 22 + 5 * i;
    }
    return c;
}

Outcome bd_correctness()
{
    std::mt19937_64 rng(2024);
    double worst = 0;
    std::size_t pairs = 0;
    for (int i = 0; i < 50; ++i) {
        const SrdCurve a = synthetic_curve(rng, "a");
        const SrdCurve b = synthetic_curve(rng, "b");
        for (const BdParams& p : {BdParams::rate(), BdParams::storage(), BdParams::weighted(0.01)}) {
            try {
                const double got = bd_delta(a, b, p).delta_pct;
                worst = std::max(worst, std::fabs(got - oracle_bd(a, b, p)));
                ++pairs;
            } catch (const InvalidArgument&) {
                // No PSNR overlap; the oracle is undefined as well.
            }
        }
    }
    double self = 0;
    double weighted_rel = 0;
    std::mt19937_64 rng2(99);
    for (int i = 0; i < 50; ++i) {
        const SrdCurve a = synthetic_curve(rng2, "a");
        SrdCurve b = a;
        for (auto& p : b.points) {
            p.psnr_db += 0.5;
            p.rate_bytes *= 0.9;
        }
        self = std::max(self, std::fabs(bd_delta(a, a, BdParams::rate()).delta_pct));
        const double r = bd_delta(a, b, BdParams::rate()).delta_pct;
        const double w = bd_delta(a, b, BdParams::weighted(0.0)).delta_pct;
        weighted_rel = std::max(weighted_rel, std::fabs(w - r) / std::max(std::fabs(r), 1e-300));
    }
    const bool ok = pairs >= 50 && worst <= 0.1 && self == 0 && weighted_rel <= 1e-9;
    return {ok, fmt("%zu pairs, max |bd - oracle| %.2e pp; |bd(c,c)| %.1e; weighted(0) vs BD-R rel %.1e", pairs,
                    worst, self, weighted_rel)};
}

// --- iso points --------------------------------------------------------------------

Outcome iso_points()
{
    std::mt19937_64 rng(5);
    std::size_t exact_fail = 0;
    double worst = 0;
    std::size_t checks = 0;
    for (int i = 0; i < 50; ++i) {
        const SrdCurve c = synthetic_curve(rng, "c");
        for (const auto& p : c.points) {
            for (const IsoAxis ax : {IsoAxis::Psnr, IsoAxis::Storage, IsoAxis::Rate}) {
                const double v = ax == IsoAxis::Psnr ? p.psnr_db : ax == IsoAxis::Storage ? p.storage_bytes
                                                                                          : p.rate_bytes;
                const SrdPoint q = iso_point(c, ax, v);
                ++checks;
                if (q.psnr_db != p.psnr_db || q.storage_bytes != p.storage_bytes || q.rate_bytes != p.rate_bytes) {
                    ++exact_fail;
                }
            }
        }
        for (std::size_t k = 0; k + 1 < c.points.size(); ++k) {
            const SrdPoint& a = c.points[k];
            const SrdPoint& b = c.points[k + 1];
            const SrdPoint q = iso_point(c, IsoAxis::Psnr, (a.psnr_db + b.psnr_db) / 2);
            auto rel = [](double got, double want) { return std::fabs(got - want) / std::fabs(want); };
            worst = std::max({worst, rel(q.rate_bytes, (a.rate_bytes + b.rate_bytes) / 2),
                              rel(q.storage_bytes, (a.storage_bytes + b.storage_bytes) / 2)});
            ++checks;
        }
    }
    return {exact_fail == 0 && worst <= 1e-12,
            fmt("%zu checks, %zu inexact stored points, worst midpoint rel error %.1e", checks, exact_fail, worst)};
}

// --- staircase ---------------------------------------------------------------------

Outcome staircase()
{
    bool ok = true;
    std::string detail;
    for (const auto& name : kFixtures) {
        for (const int qp : kQps) {
            std::int64_t ours = 0;
            std::int64_t tiles = 0;
            for (const auto& r : fx.log(name, qp, "ours")) {
                ours = std::max(ours, r.bits);
            }
            for (const auto& r : fx.log(name, qp, "t2x2")) {
                tiles = std::max(tiles, r.bits);
            }
            ok = ok && ours < tiles;
            if (qp == 32) {
                detail += fmt("%s qp32 max step ours %lld vs T2x2 %lld; ", name.c_str(), static_cast<long long>(ours),
                              static_cast<long long>(tiles));
            }
        }
    }
    return {ok, detail + "all 5 qps checked"};
}

// --- decoding order ---------------------------------------------------------------------

Outcome order_reproducibility()
{
    const auto& prep = fx.prepared("city", 27, RateMode::Theoretical);
    const EncodedImage& enc = *prep.enc;
    // Decoder side works from the parsed container only.
    const auto dec = std::make_shared<const EncodedImage>(parse(serialize(enc)));
    const BlockGrid& grid = enc.grid;
    const auto access = enc.access.mask(grid.count());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lon(-kPi, kPi);
    std::uniform_real_distribution<double> lat(-1.3, 1.3);
    std::uniform_real_distribution<double> fov(kPi / 3, kPi * 0.6);

    std::size_t trials = 0;
    std::size_t mismatches = 0;
    std::size_t greedy_worse = 0;
    std::size_t greedy_trials = 0;
    for (const OrderMethod method : {OrderMethod::Snake, OrderMethod::GreedyCount}) {
        std::mt19937_64 local(rng());
        for (int s = 0; s < 40; ++s) {
            Session session(dec, SessionOptions{method, ViewportSpec{}});
            std::vector<std::uint8_t> known(static_cast<std::size_t>(grid.count()), 0);
            for (int r = 0; r < 5; ++r) {
                ViewportSpec spec;
                spec.direction = Direction::normalized(lon(local), lat(local));
                spec.fov_h = fov(local);
                spec.fov_v = fov(local);
                const Footprint fp = viewport_coverage(spec, enc.width, enc.height, grid.block_size());
                PlanInput in;
                in.grid = &grid;
                in.decoded = known;
                in.requested = fp.blocks;
                in.access = access;
                in.center = center_block(spec, grid);
                in.method = method;
                in.prefer_horizontal = enc.prefer_horizontal;
                const RequestPlan plan = plan_request(in);
                const RequestResult got = session.request(spec);
                ++trials;
                bool same = got.blocks.size() == plan.blocks.size();
                for (std::size_t i = 0; same && i < plan.blocks.size(); ++i) {
                    same = got.blocks[i].block == plan.blocks[i].block && got.blocks[i].ctx == plan.blocks[i].ctx &&
                           got.blocks[i].bits == enc.transmit_bits(plan.blocks[i].block, plan.blocks[i].ctx);
                }
                mismatches += same ? 0 : 1;
                for (const PlannedBlock& pb : plan.blocks) {
                    known[pb.block] = 1;
                }

                if (method != OrderMethod::Snake) {
                    continue;
                }
                // Same footprint as a first request: GreedyRate pays for its permutation.
                const std::vector<std::uint8_t> none(static_cast<std::size_t>(grid.count()), 0);
                auto total = [&](OrderMethod m) {
                    PlanInput p = in;
                    p.decoded = none;
                    p.method = m;
                    p.bits = [&](int b, ContextId c) { return enc.transmit_bits(b, c); };
                    const RequestPlan rp = plan_request(p);
                    std::int64_t bits = static_cast<std::int64_t>(rp.signaling_bits);
                    for (const PlannedBlock& pb : rp.blocks) {
                        bits += enc.transmit_bits(pb.block, pb.ctx);
                    }
                    return bits;
                };
                ++greedy_trials;
                greedy_worse += total(OrderMethod::GreedyRate) >= total(OrderMethod::Snake) ? 1 : 0;
            }
        }
    }
    const double share = static_cast<double>(greedy_worse) / static_cast<double>(greedy_trials);
    return {mismatches == 0 && share >= 0.6,
            fmt("%zu footprints (snake + greedy-count), %zu order mismatches; GreedyRate R >= Snake R on %.0f%% of %zu",
                trials, mismatches, 100 * share, greedy_trials)};
}

// --- practical vs theoretical --------------------------------------------------------

Outcome practical_gap()
{
    bool ok = true;
    std::size_t requests = 0;
    std::size_t failures_seen = 0;
    std::size_t below = 0;
    std::string detail;
    std::vector<std::pair<std::string, int>> cases{{"landscape", 22}, {"landscape", 42}, {"city", 32}, {"photo", 32}};
    for (const auto& [name, qp] : cases) {
        const auto& theo = fx.prepared(name, qp, RateMode::Theoretical);
        const auto& prac = fx.prepared(name, qp, RateMode::Practical);
        // Closed loop: the practical decoder sees only the parsed container.
        const auto dec = std::make_shared<const EncodedImage>(parse(serialize(*prac.enc)));
        const auto& theo_log = fx.log(name, qp, "ours");
        std::size_t i = 0;
        std::int64_t theo_total = 0;
        std::int64_t prac_total = 0;
        for (const auto& user : fx.trace.users) {
            Session s(dec, SessionOptions{}, prac.reference);
            for (const auto& rec : user.records) {
                ++requests;
                try {
                    const RequestResult r = s.request(rec.direction);
                    below += r.request_bits < theo_log[i].bits ? 1 : 0;
                    prac_total += r.request_bits;
                } catch (const DecodingFailure&) {
                    ++failures_seen;
                }
                theo_total += theo_log[i].bits;
                ++i;
            }
        }
        Session full(dec, SessionOptions{});
        ViewportSpec all;
        all.fov_h = 2 * kPi;
        try {
            full.request(all);
            ok = ok && full.canvas() == *prac.reconstruction;
        } catch (const DecodingFailure&) {
            ++failures_seen;
        }
        const auto s_theo = storage_bytes(*theo.enc);
        const auto s_prac = storage_bytes(*prac.enc);
        ok = ok && s_prac >= s_theo && prac_total >= theo_total;
        detail += fmt("%s qp%d S %llu>=%llu R %lld>=%lld; ", name.c_str(), qp, static_cast<unsigned long long>(s_prac),
                      static_cast<unsigned long long>(s_theo), static_cast<long long>(prac_total),
                      static_cast<long long>(theo_total));
    }
    ok = ok && failures_seen == 0 && below == 0;
    return {ok, detail + fmt("%zu requests, %zu below theoretical, %zu decode failures", requests, below,
                             failures_seen)};
}

}  // namespace

int main(int argc, char** argv)
{
    fx.dir = argc > 1 ? fs::path(argv[1]) : fs::path("fixtures");
    try {
        for (const auto& name : kFixtures) {
            fx.images.emplace(name, load_equirectangular(fx.dir / (name + ".png")));
        }
        fx.trace = load_trace(fx.dir / "traces.csv");
    } catch (const std::exception& e) {
        std::printf("FAIL  fixtures                           %s\n", e.what());
        return 1;
    }
    const auto t0 = std::chrono::steady_clock::now();
    run("round-trip exactness", round_trip);
    run("prefix incrementality", prefix_property);
    run("storage identity and ES", storage_identity);
    run("access coverage at 1 deg", coverage);
    run("access-start invariance", access_start_invariance);
    run("oracle-rate dominance", rate_dominance);
    run("usefulness dominance", usefulness_dominance);
    run("BD correctness", bd_correctness);
    run("iso points", iso_points);
    run("staircase", staircase);
    run("decoding-order reproducibility", order_reproducibility);
    run("practical vs theoretical", practical_gap);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d of 12 criteria failed, %.0f s total\n", failures, secs);
    return failures;
}
