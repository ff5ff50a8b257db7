#include "oic/placement.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace oic {

bool AccessBlockSet::contains(int block) const
{
    return std::binary_search(blocks.begin(), blocks.end(), block);
}

std::vector<std::uint8_t> AccessBlockSet::mask(int block_count) const
{
    std::vector<std::uint8_t> m(static_cast<std::size_t>(block_count), 0);
    for (const int b : blocks) {
        m.at(static_cast<std::size_t>(b)) = 1;
    }
    return m;
}

SweepParams SweepParams::resolved(const ViewportSpec& spec) const
{
    SweepParams p = *this;
    const double fh = spec.full_sphere() ? 2 * kPi : spec.fov_h;
    const double fv = spec.full_sphere() ? kPi : spec.fov_v;
    if (p.step_longitude <= 0) {
        p.step_longitude = fh / 4;
    }
    if (p.step_latitude <= 0) {
        p.step_latitude = fv / 4;
    }
    return p;
}

std::vector<double> sweep_lattice(double start, double last, double step, bool inclusive)
{
    if (!(step > 0)) {
        throw InvalidArgument("sweep step must be positive");
    }
    std::vector<double> out;
    const double span = last - start;
    const auto count = static_cast<long>(std::floor(span / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
        const double v = start + static_cast<double>(i) * step;
        if (!inclusive && v >= last - 1e-12) {
            break;
        }
        out.push_back(v);
    }
    return out;
}

int center_block(const ViewportSpec& spec, const BlockGrid& grid)
{
    const PixelCoord c = sphere_to_pixel(spec.direction, grid.width(), grid.height());
    const int col = std::clamp(static_cast<int>(std::floor(c.x)) / grid.block_size(), 0, grid.cols() - 1);
    const int row = std::clamp(static_cast<int>(std::floor(c.y)) / grid.block_size(), 0, grid.rows() - 1);
    return grid.index(row, col);
}

namespace {

void check_steps(const ViewportSpec& spec, double step_lon, double step_lat)
{
    spec.validate();
    if (!(step_lon > 0) || !(step_lat > 0)) {
        throw InvalidArgument("sweep steps must be positive");
    }
    if (!spec.full_sphere() && (step_lon > spec.fov_h / 2 + 1e-12 || step_lat > spec.fov_v / 2 + 1e-12)) {
        throw InvalidArgument("sweep step exceeds half the field of view; coverage cannot be verified");
    }
}

bool intersects(std::span<const int> sorted_a, std::span<const int> sorted_b)
{
    auto i = sorted_a.begin();
    auto j = sorted_b.begin();
    while (i != sorted_a.end() && j != sorted_b.end()) {
        if (*i == *j) {
            return true;
        }
        (*i < *j) ? ++i : ++j;
    }
    return false;
}

void insert_sorted(std::vector<int>& v, int x)
{
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) {
        v.insert(it, x);
    }
}

constexpr int kFastStride = 16;

/// Exact "does the viewport at d see an access block", with a strided
/// footprint as a shortcut for the common covered case.
bool covered(std::span<const int> access, const BlockGrid& grid, const ViewportSpec& spec)
{
    const int w = grid.width();
    const int h = grid.height();
    const int bs = grid.block_size();
    if (intersects(access, viewport_footprint(spec, w, h, bs, kFastStride))) {
        return true;
    }
    return intersects(access, viewport_coverage(spec, w, h, bs).blocks);
}

using Chooser = int (*)(const ViewportSpec&, const BlockGrid&, std::span<const double>);

int choose_center(const ViewportSpec& spec, const BlockGrid& grid, std::span<const double>)
{
    return center_block(spec, grid);
}

int choose_cheapest(const ViewportSpec& spec, const BlockGrid& grid, std::span<const double> bits)
{
    const auto fp = viewport_coverage(spec, grid.width(), grid.height(), grid.block_size());
    const PixelCoord c = sphere_to_pixel(spec.direction, grid.width(), grid.height());
    const double bs = grid.block_size();
    auto distance = [&](int b) {
        const double bx = (grid.col_of(b) + 0.5) * bs;
        const double by = (grid.row_of(b) + 0.5) * bs;
        double dx = std::abs(bx - c.x);
        dx = std::min(dx, grid.width() - dx);
        return std::hypot(dx, by - c.y);
    };
    int best = fp.blocks.front();
    for (const int b : fp.blocks) {
        const double rb = bits[b];
        const double rbest = bits[best];
        if (rb < rbest || (rb == rbest && distance(b) < distance(best))) {
            best = b;
        }
    }
    return best;
}

std::vector<int> sweep(const BlockGrid& grid, const ViewportSpec& spec, const SweepParams& p,
                       std::span<const double> bits, Chooser choose, std::vector<int> access)
{
    for (const double lat : sweep_lattice(-kPi / 2, kPi / 2, p.step_latitude, true)) {
        for (const double lon : sweep_lattice(-kPi, kPi, p.step_longitude, false)) {
            const ViewportSpec s = spec.looking_at(Direction::normalized(lon, lat));
            if (!covered(access, grid, s)) {
                insert_sorted(access, choose(s, grid, bits));
            }
        }
    }
    return access;
}

std::vector<int> place(const BlockGrid& grid, const ViewportSpec& spec, const SweepParams& params,
                       std::span<const double> bits, Chooser choose)
{
    const SweepParams p = params.resolved(spec);
    if (spec.full_sphere()) {
        spec.validate();
        return {choose(spec, grid, bits)};
    }
    check_steps(spec, p.step_longitude, p.step_latitude);
    std::vector<int> access = sweep(grid, spec, p, bits, choose, {});
    if (p.repair_step > 0) {
        SweepParams repair = p;
        repair.step_longitude = repair.step_latitude = p.repair_step;
        access = sweep(grid, spec, repair, bits, choose, std::move(access));
    }
    return access;
}

}  // namespace

std::vector<int> sweep_fixed(const BlockGrid& grid, const ViewportSpec& spec, double step_lon, double step_lat)
{
    if (spec.full_sphere()) {
        spec.validate();
        return {center_block(spec, grid)};
    }
    check_steps(spec, step_lon, step_lat);
    SweepParams p;
    p.step_longitude = step_lon;
    p.step_latitude = step_lat;
    return sweep(grid, spec, p, {}, choose_center, {});
}

AccessBlockSet place_fixed(const BlockGrid& grid, const ViewportSpec& spec, const SweepParams& params)
{
    using Key = std::tuple<int, int, int, double, double, int, int, double, double, double>;
    static std::mutex mutex;
    static std::map<Key, std::vector<int>> memo;
    const SweepParams p = params.resolved(spec);
    const double fh = spec.full_sphere() ? 2 * kPi : spec.fov_h;
    const double fv = spec.full_sphere() ? 2 * kPi : spec.fov_v;
    const Key key{grid.rows(),      grid.cols(),      grid.block_size(), fh,
                  fv,               spec.vp_width,    spec.vp_height,    p.step_longitude,
                  p.step_latitude,  p.repair_step};
    {
        const std::lock_guard lock(mutex);
        if (auto it = memo.find(key); it != memo.end()) {
            return {it->second, AccessStrategy::Fixed, 0};
        }
    }
    auto blocks = place(grid, spec, p, {}, choose_center);
    const std::lock_guard lock(mutex);
    memo.emplace(key, blocks);
    return {std::move(blocks), AccessStrategy::Fixed, 0};
}

AccessBlockSet place_content(const BlockGrid& grid, const ViewportSpec& spec, std::span<const double> standalone_bits,
                             const SweepParams& params)
{
    if (static_cast<int>(standalone_bits.size()) != grid.count()) {
        throw InvalidArgument("place_content needs a standalone rate for every block");
    }
    AccessBlockSet a;
    a.blocks = place(grid, spec, params, standalone_bits, choose_cheapest);
    a.strategy = AccessStrategy::Content;
    const auto index_bits = static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(grid.count()))));
    a.signaling_bits = (1 + a.blocks.size()) * index_bits;
    return a;
}

double content_cost(const AccessBlockSet& a, std::span<const double> standalone_bits)
{
    double cost = static_cast<double>(a.signaling_bits);
    for (const int b : a.blocks) {
        cost += standalone_bits[b];
    }
    return cost;
}

ConstraintReport check_constraint(std::span<const int> access, const BlockGrid& grid, const ViewportSpec& spec,
                                  double step)
{
    std::vector<int> sorted(access.begin(), access.end());
    std::sort(sorted.begin(), sorted.end());
    ConstraintReport report;
    if (spec.full_sphere()) {
        report.directions_checked = 1;
        report.satisfied = !sorted.empty();
        if (!report.satisfied) {
            report.witness = spec.direction;
        }
        return report;
    }
    for (const double lat : sweep_lattice(-kPi / 2, kPi / 2, step, true)) {
        for (const double lon : sweep_lattice(-kPi, kPi, step, false)) {
            ++report.directions_checked;
            const Direction d = Direction::normalized(lon, lat);
            if (!covered(sorted, grid, spec.looking_at(d))) {
                report.satisfied = false;
                report.witness = d;
                return report;
            }
        }
    }
    return report;
}

}  // namespace oic
