// Command-line driver: encode, decode, info, simulate, evaluate, serve.

#include "oic/container.hpp"
#include "oic/error.hpp"
#include "oic/eval.hpp"
#include "oic/service.hpp"
#include "oic/simulate.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace oic;

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::vector<int> parse_qps(const std::string& s)
{
    std::vector<int> out;
    for (const auto& item : split_list(s)) {
        std::size_t used = 0;
        const int qp = std::stoi(item, &used);
        if (used != item.size() || qp < kMinQp || qp > kMaxQp) {
            throw InvalidArgument("qp must be an integer in [0, 51], got '" + item + "'");
        }
        out.push_back(qp);
    }
    if (out.empty()) {
        throw InvalidArgument("empty qp list");
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s)
{
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) {
            throw InvalidArgument("not a number: '" + item + "'");
        }
    }
    return out;
}

RateMode parse_mode(const std::string& s)
{
    if (s == "theoretical") {
        return RateMode::Theoretical;
    }
    if (s == "practical") {
        return RateMode::Practical;
    }
    throw InvalidArgument("mode must be theoretical or practical");
}

/// OIC_SEED overrides the code-construction seed (decimal or 0x hex).
std::uint64_t code_seed()
{
    const char* env = std::getenv("OIC_SEED");
    if (env == nullptr || *env == '\0') {
        return kDefaultCodeSeed;
    }
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 0);
    if (end == env || *end != '\0') {
        throw InvalidArgument(std::string("OIC_SEED is not an integer: ") + env);
    }
    return v;
}

struct ViewOpts {
    double fov_deg = 90;
    int vp = 256;

    [[nodiscard]] ViewportSpec spec() const
    {
        ViewportSpec s;
        s.fov_h = s.fov_v = fov_deg * kPi / 180;
        s.vp_width = s.vp_height = vp;
        s.validate();
        return s;
    }
};

void add_view_options(CLI::App* cmd, ViewOpts& v)
{
    cmd->add_option("--fov-deg", v.fov_deg, "Viewport field of view in degrees (both axes)")->capture_default_str();
    cmd->add_option("--vp", v.vp, "Viewport width and height in pixels")->capture_default_str();
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

void print_account(const EncodedImage& enc)
{
    const StorageAccount a = storage_account(enc);
    std::printf("  storage S        %llu bytes (%llu bits)\n", static_cast<unsigned long long>(a.total_bits() / 8),
                static_cast<unsigned long long>(a.total_bits()));
    std::printf("    syndromes      %llu bits\n", static_cast<unsigned long long>(a.syndrome_bits));
    std::printf("    checksums      %llu bits\n", static_cast<unsigned long long>(a.checksum_bits));
    std::printf("    directories    %llu bits\n", static_cast<unsigned long long>(a.directory_bits));
    std::printf("    intra modes    %llu bits\n", static_cast<unsigned long long>(a.mode_bits));
    std::printf("    header         %llu bits\n", static_cast<unsigned long long>(a.header_bits));
    std::printf("    padding        %llu bits\n", static_cast<unsigned long long>(a.padding_bits));
}

// --- subcommands --------------------------------------------------------------

struct EncodeArgs {
    std::string image;
    std::string qps = "27";
    std::string mode = "theoretical";
    std::string strategy = "fixed";
    int block_size = 32;
    bool vertical = false;
    std::string out_dir = ".";
    ViewOpts view;
};

int cmd_encode(const EncodeArgs& a)
{
    const PlaneImage img = load_equirectangular(a.image);
    std::filesystem::create_directories(a.out_dir);
    const std::string stem = std::filesystem::path(a.image).stem().string();
    for (const int qp : parse_qps(a.qps)) {
        EncoderConfig cfg;
        cfg.block_size = a.block_size;
        cfg.qp = qp;
        cfg.mode = parse_mode(a.mode);
        cfg.seed = code_seed();
        cfg.viewport = a.view.spec();
        cfg.prefer_horizontal = !a.vertical;
        if (a.strategy == "content") {
            cfg.strategy = AccessStrategy::Content;
        } else if (a.strategy != "fixed") {
            throw InvalidArgument("strategy must be fixed or content");
        }
        const EncodedImage enc = encode_image(img, cfg);
        const auto path = std::filesystem::path(a.out_dir) / (stem + "_qp" + std::to_string(qp) + ".oic");
        write_container(enc, path);
        std::printf("%s  qp=%d  mode=%s  planes=%d  access=%zu  S=%llu bytes\n", path.string().c_str(), qp,
                    a.mode.c_str(), enc.planes, enc.access.blocks.size(),
                    static_cast<unsigned long long>(storage_bytes(enc)));
    }
    return 0;
}

int cmd_info(const std::string& container)
{
    const auto bytes = read_bytes(container);
    const EncodedImage enc = parse(bytes);
    std::printf("%s\n", container.c_str());
    std::printf("  image            %dx%d, blocks %dx%d of %d px\n", enc.width, enc.height, enc.grid.rows(),
                enc.grid.cols(), enc.grid.block_size());
    std::printf("  qp               %d, %d planes\n", enc.qp, enc.planes);
    std::printf("  mode             %s\n", enc.mode == RateMode::Practical ? "practical" : "theoretical");
    std::printf("  code             seed 0x%llx, %d rungs\n", static_cast<unsigned long long>(enc.seed),
                enc.ladder_steps);
    std::printf("  access blocks    %zu (%s placement)\n", enc.access.blocks.size(),
                enc.access.strategy == AccessStrategy::Fixed ? "fixed" : "content");
    std::printf("  file size        %zu bytes\n", bytes.size());
    print_account(enc);
    return 0;
}

int cmd_decode(const std::string& container, const std::string& out)
{
    auto enc = std::make_shared<const EncodedImage>(read_container(container));
    SessionOptions opt;
    opt.viewport.fov_h = opt.viewport.fov_v = 2 * kPi;
    opt.viewport.vp_width = opt.viewport.vp_height = 1;
    Session session(enc, opt);
    const RequestResult r = session.request(Direction{});
    save_png(session.canvas(), out);
    std::printf("decoded %zu blocks, %lld bits, wrote %s\n", r.blocks.size(), static_cast<long long>(r.request_bits),
                out.c_str());
    return 0;
}

struct SimulateArgs {
    std::string container;
    std::string trace;
    std::string image;
    std::string order = "snake";
    std::string baseline = "ours";
    std::string out;
    ViewOpts view;
};

int cmd_simulate(const SimulateArgs& a)
{
    auto enc = std::make_shared<const EncodedImage>(read_container(a.container));
    PlaneImage source;
    if (!a.image.empty()) {
        source = load_equirectangular(a.image);
    }
    const PreparedImage prep = prepare(enc, a.image.empty() ? nullptr : &source);
    const HeadTrace trace = load_trace(a.trace);
    SimulationOptions opt{a.view.spec(), parse_order(a.order)};
    const auto rows = simulate(prep, Method::parse(a.baseline), trace, opt);
    const std::string text = format_log(rows);
    if (a.out.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        write_file(a.out, text);
    }
    return 0;
}

struct EvaluateArgs {
    std::string image;
    std::string trace;
    std::string curves;
    std::string qps = "22,27,32,37,42";
    std::string mode = "theoretical";
    std::string methods = "ours,es,t1x1,t2x2,t7x7,topt";
    std::string ref;
    std::string lambdas = "0.1,0.01,0.001";
    std::string order = "snake";
    std::string iso_psnr;
    std::string out_dir = "eval_out";
    ViewOpts view;
};

std::vector<BdRow> bd_rows(const std::vector<SrdCurve>& curves, const std::string& ref_name,
                           const std::vector<double>& lambdas)
{
    std::vector<BdParams> axes = {BdParams::rate(), BdParams::storage()};
    for (const double l : lambdas) {
        axes.push_back(BdParams::weighted(l));
    }
    const SrdCurve* test = &curves.front();
    for (const auto& c : curves) {
        if (c.method == "ours") {
            test = &c;
        }
    }
    std::vector<BdRow> rows;
    for (const auto& ref : curves) {
        if (!ref_name.empty() && ref.method != ref_name) {
            continue;
        }
        if (ref_name.empty() && &ref == test && curves.size() > 1) {
            continue;
        }
        for (const auto& p : axes) {
            rows.push_back({ref.method, test->method, bd_delta(ref, *test, p)});
        }
    }
    if (rows.empty()) {
        throw InvalidArgument("reference method '" + ref_name + "' not among the curves");
    }
    return rows;
}

std::string iso_report(const std::vector<SrdCurve>& curves, const std::vector<double>& psnrs)
{
    std::ostringstream out;
    out.precision(10);
    out << "method,axis,value,S_bytes,R_bytes,psnr_db\n";
    for (const double v : psnrs) {
        for (const auto& c : curves) {
            try {
                const SrdPoint p = iso_point(c, IsoAxis::Psnr, v);
                out << c.method << ",D," << v << ',' << p.storage_bytes << ',' << p.rate_bytes << ',' << p.psnr_db
                    << '\n';
            } catch (const InvalidArgument&) {
                out << c.method << ",D," << v << ",,,\n";
            }
        }
    }
    return out.str();
}

int cmd_evaluate(const EvaluateArgs& a)
{
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    std::vector<SrdCurve> curves;
    if (!a.curves.empty()) {
        const auto bytes = read_bytes(a.curves);
        curves = parse_curves(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } else {
        if (a.image.empty() || a.trace.empty()) {
            throw InvalidArgument("evaluate needs --curves, or --image and --trace");
        }
        const PlaneImage img = load_equirectangular(a.image);
        const HeadTrace trace = load_trace(a.trace);
        const auto methods = split_list(a.methods);
        const SimulationOptions opt{a.view.spec(), parse_order(a.order)};
        std::map<std::string, SrdCurve> by_method;
        std::ostringstream accum;
        std::ostringstream useful;
        accum << "method,qp,user,request_idx,bits,accum_bits\n";
        useful << "method,qp,request_idx,mean_usefulness\n";
        for (const int qp : parse_qps(a.qps)) {
            EncoderConfig cfg;
            cfg.qp = qp;
            cfg.mode = parse_mode(a.mode);
            cfg.seed = code_seed();
            cfg.viewport = opt.viewport;
            const PreparedImage prep = prepare(img, cfg);
            for (const auto& name : methods) {
                const Method m = Method::parse(name);
                const auto rows = simulate(prep, m, trace, opt);
                if (rows.empty()) {
                    throw InvalidArgument("the trace has no requests");
                }
                auto& curve = by_method[name];
                curve.method = name;
                curve.points.push_back(summarize(rows, qp, method_storage_bytes(prep, m)));
                std::map<int, std::pair<double, int>> per_idx;
                for (const auto& r : rows) {
                    accum << name << ',' << qp << ',' << r.user << ',' << r.request_idx << ',' << r.bits << ','
                          << r.accum_bits << '\n';
                    auto& [sum, count] = per_idx[r.request_idx];
                    sum += r.usefulness;
                    ++count;
                }
                for (const auto& [idx, sc] : per_idx) {
                    useful << name << ',' << qp << ',' << idx << ',' << sc.first / sc.second << '\n';
                }
                std::fprintf(stderr, "qp %d  %-6s  S=%.0f B  R=%.1f B  D=%.3f dB\n", qp, name.c_str(),
                             curve.points.back().storage_bytes, curve.points.back().rate_bytes,
                             curve.points.back().psnr_db);
            }
        }
        for (const auto& name : methods) {
            curves.push_back(by_method[name]);
        }
        write_file(dir / "curves.csv", format_curves(curves));
        write_file(dir / "accumulated.csv", accum.str());
        write_file(dir / "usefulness.csv", useful.str());
    }
    const auto rows = bd_rows(curves, a.ref, parse_doubles(a.lambdas));
    const std::string bd = format_bd_report(rows);
    write_file(dir / "bd.csv", bd);
    std::vector<double> iso = parse_doubles(a.iso_psnr);
    if (iso.empty()) {
        double lo = -1e300;
        double hi = 1e300;
        for (const auto& c : curves) {
            double clo = 1e300;
            double chi = -1e300;
            for (const auto& p : c.points) {
                clo = std::min(clo, p.psnr_db);
                chi = std::max(chi, p.psnr_db);
            }
            lo = std::max(lo, clo);
            hi = std::min(hi, chi);
        }
        if (hi >= lo) {
            iso.push_back(0.5 * (lo + hi));
        }
    }
    write_file(dir / "iso.csv", iso_report(curves, iso));
    std::fputs(bd.c_str(), stdout);
    return 0;
}

struct ServeArgs {
    std::string container;
    std::string image;
    std::string bind = "127.0.0.1:8765";
    std::string order = "snake";
    ViewOpts view;
};

TcpServer* g_server = nullptr;

extern "C" void on_signal(int)
{
    if (g_server != nullptr) {
        g_server->stop();
    }
}

int cmd_serve(const ServeArgs& a)
{
    auto enc = std::make_shared<const EncodedImage>(read_container(a.container));
    PlaneImage source;
    if (!a.image.empty()) {
        source = load_equirectangular(a.image);
    }
    ServiceOptions opt;
    opt.session.order = parse_order(a.order);
    opt.session.viewport = a.view.spec();
    SessionService service(prepare(enc, a.image.empty() ? nullptr : &source), opt);
    TcpServer server(service, a.bind);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::printf("serving %s on port %u (length-prefixed JSON or WebSocket)\n", a.container.c_str(),
                static_cast<unsigned>(server.port()));
    std::fflush(stdout);
    server.run();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Interactive 360-degree image codec"};
    app.require_subcommand(1);

    EncodeArgs enc;
    auto* encode = app.add_subcommand("encode", "Encode an equirectangular image, one container per qp");
    encode->add_option("--image", enc.image, "Input PNG/PGM/PPM (width = 2 x height)")->required();
    encode->add_option("--qp", enc.qps, "Comma-separated qp list")->capture_default_str();
    encode->add_option("--mode", enc.mode, "theoretical or practical")->capture_default_str();
    encode->add_option("--strategy", enc.strategy, "Access placement: fixed or content")->capture_default_str();
    encode->add_option("--block-size", enc.block_size, "Block size in pixels")->capture_default_str();
    encode->add_flag("--vertical", enc.vertical, "Prefer vertical transitions in the scan");
    encode->add_option("--out-dir", enc.out_dir, "Output directory")->capture_default_str();
    add_view_options(encode, enc.view);

    std::string info_path;
    auto* info = app.add_subcommand("info", "Print a container's header and storage accounting");
    info->add_option("container", info_path)->required();

    std::string decode_path;
    std::string decode_out = "decoded.png";
    auto* decode = app.add_subcommand("decode", "Decode every block of a container to a PNG");
    decode->add_option("container", decode_path)->required();
    decode->add_option("--out", decode_out)->capture_default_str();

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Replay a head trace and log per-request costs");
    simulate_cmd->add_option("--container", sim.container)->required();
    simulate_cmd->add_option("--trace", sim.trace, "CSV user_id,t_ms,longitude_rad,latitude_rad")->required();
    simulate_cmd->add_option("--image", sim.image, "Source image (PSNR and baselines)");
    simulate_cmd->add_option("--order", sim.order, "snake, greedycount or greedyrate")->capture_default_str();
    simulate_cmd->add_option("--baseline", sim.baseline, "ours, tMxN, topt or es")->capture_default_str();
    simulate_cmd->add_option("--out", sim.out, "Log CSV (stdout when omitted)");
    add_view_options(simulate_cmd, sim.view);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Storage-rate-distortion curves, BD and iso reports");
    evaluate->add_option("--image", ev.image);
    evaluate->add_option("--trace", ev.trace);
    evaluate->add_option("--curves", ev.curves, "Existing curves CSV instead of running the simulation");
    evaluate->add_option("--qp", ev.qps)->capture_default_str();
    evaluate->add_option("--mode", ev.mode)->capture_default_str();
    evaluate->add_option("--methods", ev.methods)->capture_default_str();
    evaluate->add_option("--ref", ev.ref, "Reference method of the BD report (default: every other method)");
    evaluate->add_option("--lambda", ev.lambdas, "Weights of the R + lambda S projection")->capture_default_str();
    evaluate->add_option("--order", ev.order)->capture_default_str();
    evaluate->add_option("--iso-psnr", ev.iso_psnr, "PSNR values of the iso-distortion report");
    evaluate->add_option("--out-dir", ev.out_dir)->capture_default_str();
    add_view_options(evaluate, ev.view);

    ServeArgs sv;
    auto* serve = app.add_subcommand("serve", "Run the interactive session service");
    serve->add_option("--container", sv.container)->required();
    serve->add_option("--image", sv.image, "Source image (PSNR and baseline comparison)");
    serve->add_option("--bind", sv.bind)->capture_default_str();
    serve->add_option("--order", sv.order)->capture_default_str();
    add_view_options(serve, sv.view);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*encode) {
            return cmd_encode(enc);
        }
        if (*info) {
            return cmd_info(info_path);
        }
        if (*decode) {
            return cmd_decode(decode_path, decode_out);
        }
        if (*simulate_cmd) {
            return cmd_simulate(sim);
        }
        if (*evaluate) {
            return cmd_evaluate(ev);
        }
        if (*serve) {
            return cmd_serve(sv);
        }
    } catch (const oic::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
