#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oic {

/// One operating point: storage and mean transmission in bytes, mean viewport
/// PSNR in dB.
struct SrdPoint {
    int qp = 0;
    double storage_bytes = 0;
    double rate_bytes = 0;
    double psnr_db = 0;
};

/// Points of one method ordered by qp.
struct SrdCurve {
    std::string method;
    std::vector<SrdPoint> points;
};

enum class BdAxis : std::uint8_t { Rate, Storage, Weighted, WeightedAlphaBeta };

std::string_view axis_name(BdAxis axis);

/// Cost projected on the BD axis: R, S, R + lambda S, or alpha R + beta S.
struct BdParams {
    BdAxis axis = BdAxis::Rate;
    double lambda = 0;
    double alpha = 1;
    double beta = 0;

    static BdParams rate() { return {BdAxis::Rate}; }
    static BdParams storage() { return {BdAxis::Storage}; }
    static BdParams weighted(double lambda) { return {BdAxis::Weighted, lambda}; }
    static BdParams weighted(double alpha, double beta) { return {BdAxis::WeightedAlphaBeta, 0, alpha, beta}; }
};

double projected_cost(const SrdPoint& p, const BdParams& params);

struct BdResult {
    double delta_pct = 0;
    BdParams params;
    double psnr_low = 0;   ///< common PSNR interval used
    double psnr_high = 0;
};

/// Coefficients c0..c3 of the least-squares cubic y = Σ c_k x^k.
/// Throws InvalidArgument with fewer than 4 points or a degenerate x range.
std::array<double, 4> fit_cubic(std::span<const double> x, std::span<const double> y);

/// Average cost difference of `test` against `ref` over their common PSNR
/// range: log10(cost) is fitted by a cubic in PSNR for each curve, both fits
/// are integrated over the overlap and the mean log difference d is reported
/// as (10^d - 1) * 100. Throws InvalidArgument with fewer than 4 points, a
/// non-positive cost, or no PSNR overlap.
BdResult bd_delta(const SrdCurve& ref, const SrdCurve& test, const BdParams& params);

enum class IsoAxis : std::uint8_t { Psnr, Storage, Rate };

/// Point of the qp-ordered polyline where `axis` equals `value`, by linear
/// interpolation on the first segment that brackets it. Stored points are
/// returned exactly. Throws InvalidArgument when no segment brackets value.
SrdPoint iso_point(const SrdCurve& curve, IsoAxis axis, double value);

/// (PSNR, R + lambda S) per point. Throws InvalidArgument if lambda < 0.
std::vector<std::array<double, 2>> weighted_cost_curve(const SrdCurve& curve, double lambda);

/// Running sums of per-request rates.
std::vector<double> accumulated_rate(std::span<const double> per_request);

/// max_i |r_i - mean| / mean. Throws InvalidArgument if empty or mean <= 0.
double mad_ratio(std::span<const double> rates);

// --- CSV ----------------------------------------------------------------------

inline constexpr const char* kCurveHeader = "method,qp,S_bytes,R_bytes,psnr_db";
inline constexpr const char* kBdHeader = "ref,test,axis,lambda,delta_pct";

std::string format_curves(std::span<const SrdCurve> curves);
/// Groups rows by method in order of first appearance. Throws FormatError.
std::vector<SrdCurve> parse_curves(std::string_view text);

struct BdRow {
    std::string ref;
    std::string test;
    BdResult result;
};
std::string format_bd_report(std::span<const BdRow> rows);

}  // namespace oic
