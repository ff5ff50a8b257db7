#include "oic/eval.hpp"

#include "oic/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace oic {

std::string_view axis_name(BdAxis axis)
{
    switch (axis) {
    case BdAxis::Rate: return "R";
    case BdAxis::Storage: return "S";
    case BdAxis::Weighted: return "R+lambdaS";
    case BdAxis::WeightedAlphaBeta: return "alphaR+betaS";
    }
    return "?";
}

double projected_cost(const SrdPoint& p, const BdParams& params)
{
    switch (params.axis) {
    case BdAxis::Rate: return p.rate_bytes;
    case BdAxis::Storage: return p.storage_bytes;
    case BdAxis::Weighted: return p.rate_bytes + params.lambda * p.storage_bytes;
    case BdAxis::WeightedAlphaBeta: return params.alpha * p.rate_bytes + params.beta * p.storage_bytes;
    }
    return 0;
}

std::array<double, 4> fit_cubic(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 4) {
        throw InvalidArgument("cubic fit needs at least 4 points");
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double center = 0.5 * (*lo + *hi);
    const double scale = 0.5 * (*hi - *lo);
    if (!(scale > 0)) {
        throw InvalidArgument("cubic fit needs distinct abscissae");
    }
    // Fit in t = (x - center) / scale for conditioning, then expand.
    const auto m = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(m, 4);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double t = (x[i] - center) / scale;
        a(i, 0) = 1;
        a(i, 1) = t;
        a(i, 2) = t * t;
        a(i, 3) = t * t * t;
        b(i) = y[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 4) {
        throw InvalidArgument("cubic fit is rank deficient (fewer than 4 distinct abscissae)");
    }
    const Eigen::Vector4d d = qr.solve(b);
    // y = Σ d_k ((x - c) / s)^k expanded into powers of x.
    const double s1 = 1 / scale;
    const double s2 = s1 * s1;
    const double s3 = s2 * s1;
    const double c = center;
    return {d(0) - d(1) * c * s1 + d(2) * c * c * s2 - d(3) * c * c * c * s3,
            d(1) * s1 - 2 * d(2) * c * s2 + 3 * d(3) * c * c * s3, d(2) * s2 - 3 * d(3) * c * s3, d(3) * s3};
}

namespace {

/// Mean of the fitted log10 cost over [lo, hi], integrated in the centred
/// variable to avoid cancellation.
double mean_log_cost(const SrdCurve& curve, const BdParams& params, double lo, double hi)
{
    std::vector<double> d;
    std::vector<double> y;
    for (const SrdPoint& p : curve.points) {
        const double cost = projected_cost(p, params);
        if (!(cost > 0) || !std::isfinite(p.psnr_db)) {
            throw InvalidArgument("curve '" + curve.method + "' has a non-positive cost or non-finite PSNR");
        }
        d.push_back(p.psnr_db);
        y.push_back(std::log10(cost));
    }
    const double mid = 0.5 * (lo + hi);
    for (double& v : d) {
        v -= mid;
    }
    const auto c = fit_cubic(d, y);
    auto antiderivative = [&](double t) {
        return t * (c[0] + t * (c[1] / 2 + t * (c[2] / 3 + t * c[3] / 4)));
    };
    return (antiderivative(hi - mid) - antiderivative(lo - mid)) / (hi - lo);
}

void require_points(const SrdCurve& curve)
{
    if (curve.points.size() < 4) {
        throw InvalidArgument("curve '" + curve.method + "' has fewer than 4 points");
    }
}

std::pair<double, double> psnr_range(const SrdCurve& curve)
{
    double lo = curve.points.front().psnr_db;
    double hi = lo;
    for (const SrdPoint& p : curve.points) {
        lo = std::min(lo, p.psnr_db);
        hi = std::max(hi, p.psnr_db);
    }
    return {lo, hi};
}

}  // namespace

BdResult bd_delta(const SrdCurve& ref, const SrdCurve& test, const BdParams& params)
{
    require_points(ref);
    require_points(test);
    const auto [rlo, rhi] = psnr_range(ref);
    const auto [tlo, thi] = psnr_range(test);
    const double lo = std::max(rlo, tlo);
    const double hi = std::min(rhi, thi);
    if (!(hi > lo)) {
        throw InvalidArgument("curves '" + ref.method + "' and '" + test.method + "' share no PSNR range");
    }
    BdResult out;
    out.params = params;
    out.psnr_low = lo;
    out.psnr_high = hi;
    const double diff = mean_log_cost(test, params, lo, hi) - mean_log_cost(ref, params, lo, hi);
    out.delta_pct = (std::pow(10.0, diff) - 1) * 100;
    return out;
}

SrdPoint iso_point(const SrdCurve& curve, IsoAxis axis, double value)
{
    auto coord = [axis](const SrdPoint& p) {
        switch (axis) {
        case IsoAxis::Psnr: return p.psnr_db;
        case IsoAxis::Storage: return p.storage_bytes;
        case IsoAxis::Rate: return p.rate_bytes;
        }
        return 0.0;
    };
    for (const SrdPoint& p : curve.points) {
        if (coord(p) == value) {
            return p;
        }
    }
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const SrdPoint& a = curve.points[i];
        const SrdPoint& b = curve.points[i + 1];
        const double va = coord(a);
        const double vb = coord(b);
        if (va == vb || value < std::min(va, vb) || value > std::max(va, vb)) {
            continue;
        }
        const double t = (value - va) / (vb - va);
        SrdPoint out;
        out.qp = t < 0.5 ? a.qp : b.qp;
        out.storage_bytes = a.storage_bytes + t * (b.storage_bytes - a.storage_bytes);
        out.rate_bytes = a.rate_bytes + t * (b.rate_bytes - a.rate_bytes);
        out.psnr_db = a.psnr_db + t * (b.psnr_db - a.psnr_db);
        return out;
    }
    throw InvalidArgument("value " + std::to_string(value) + " lies outside curve '" + curve.method + "'");
}

std::vector<std::array<double, 2>> weighted_cost_curve(const SrdCurve& curve, double lambda)
{
    if (!(lambda >= 0)) {
        throw InvalidArgument("lambda must be non-negative");
    }
    std::vector<std::array<double, 2>> out;
    out.reserve(curve.points.size());
    for (const SrdPoint& p : curve.points) {
        out.push_back({p.psnr_db, p.rate_bytes + lambda * p.storage_bytes});
    }
    return out;
}

std::vector<double> accumulated_rate(std::span<const double> per_request)
{
    std::vector<double> out;
    out.reserve(per_request.size());
    double sum = 0;
    for (const double r : per_request) {
        sum += r;
        out.push_back(sum);
    }
    return out;
}

double mad_ratio(std::span<const double> rates)
{
    if (rates.empty()) {
        throw InvalidArgument("mad_ratio of an empty list");
    }
    double mean = 0;
    for (const double r : rates) {
        mean += r;
    }
    mean /= static_cast<double>(rates.size());
    if (!(mean > 0)) {
        throw InvalidArgument("mad_ratio needs a positive mean");
    }
    double mad = 0;
    for (const double r : rates) {
        mad = std::max(mad, std::abs(r - mean));
    }
    return mad / mean;
}

// --- CSV ----------------------------------------------------------------------

std::string format_curves(std::span<const SrdCurve> curves)
{
    std::ostringstream out;
    out.precision(12);
    out << kCurveHeader << '\n';
    for (const SrdCurve& c : curves) {
        for (const SrdPoint& p : c.points) {
            out << c.method << ',' << p.qp << ',' << p.storage_bytes << ',' << p.rate_bytes << ',' << p.psnr_db
                << '\n';
        }
    }
    return out.str();
}

namespace {

double field_double(std::string_view s, std::size_t line)
{
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError("curve line " + std::to_string(line) + ": malformed number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

std::vector<SrdCurve> parse_curves(std::string_view text)
{
    std::vector<SrdCurve> curves;
    std::map<std::string, std::size_t, std::less<>> index;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!header) {
            if (line != kCurveHeader) {
                throw FormatError("curve line " + std::to_string(line_no) + ": expected header '" + kCurveHeader + "'");
            }
            header = true;
            continue;
        }
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(',')) {
            f.push_back(rest.substr(0, comma));
            rest.remove_prefix(comma + 1);
        }
        f.push_back(rest);
        if (f.size() != 5 || f[0].empty()) {
            throw FormatError("curve line " + std::to_string(line_no) + ": expected 5 fields");
        }
        SrdPoint p;
        p.qp = static_cast<int>(field_double(f[1], line_no));
        p.storage_bytes = field_double(f[2], line_no);
        p.rate_bytes = field_double(f[3], line_no);
        p.psnr_db = field_double(f[4], line_no);
        auto it = index.find(f[0]);
        if (it == index.end()) {
            it = index.emplace(std::string(f[0]), curves.size()).first;
            curves.push_back({std::string(f[0]), {}});
        }
        curves[it->second].points.push_back(p);
    }
    for (SrdCurve& c : curves) {
        std::stable_sort(c.points.begin(), c.points.end(),
                         [](const SrdPoint& a, const SrdPoint& b) { return a.qp < b.qp; });
    }
    return curves;
}

std::string format_bd_report(std::span<const BdRow> rows)
{
    std::ostringstream out;
    out << kBdHeader << '\n';
    for (const BdRow& r : rows) {
        out << r.ref << ',' << r.test << ',' << axis_name(r.result.params.axis) << ',';
        if (r.result.params.axis == BdAxis::Weighted) {
            out << r.result.params.lambda;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", r.result.delta_pct);
        out << ',' << buf << '\n';
    }
    return out.str();
}

}  // namespace oic
