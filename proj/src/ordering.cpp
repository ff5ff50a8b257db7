#include "oic/ordering.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace oic {

std::string_view order_name(OrderMethod m)
{
    switch (m) {
    case OrderMethod::Snake: return "snake";
    case OrderMethod::GreedyCount: return "greedycount";
    case OrderMethod::GreedyRate: return "greedyrate";
    }
    return "snake";
}

OrderMethod parse_order(std::string_view name)
{
    if (name == "snake") {
        return OrderMethod::Snake;
    }
    if (name == "greedycount") {
        return OrderMethod::GreedyCount;
    }
    if (name == "greedyrate") {
        return OrderMethod::GreedyRate;
    }
    throw InvalidArgument("unknown decoding order '" + std::string(name) + "'");
}

std::uint64_t permutation_signaling_bits(std::size_t m)
{
    if (m < 2) {
        return 0;
    }
    return static_cast<std::uint64_t>(std::ceil(static_cast<double>(m) * std::log2(static_cast<double>(m)) - 1e-9));
}

namespace {

enum class Move { Right, Left, Down, Up };

Move opposite(Move m)
{
    switch (m) {
    case Move::Right: return Move::Left;
    case Move::Left: return Move::Right;
    case Move::Down: return Move::Up;
    case Move::Up: return Move::Down;
    }
    return m;
}

std::optional<int> step(const BlockGrid& grid, int b, Move m)
{
    switch (m) {
    case Move::Right: return grid.right(b);
    case Move::Left: return grid.left(b);
    case Move::Down: return grid.bottom(b);
    case Move::Up: return grid.top(b);
    }
    return std::nullopt;
}

bool is_horizontal(Move m)
{
    return m == Move::Right || m == Move::Left;
}

/// Membership of the region, indexed by block.
std::vector<std::uint8_t> region_mask(const BlockGrid& grid, std::span<const int> region)
{
    std::vector<std::uint8_t> m(static_cast<std::size_t>(grid.count()), 0);
    for (const int b : region) {
        if (b < 0 || b >= grid.count()) {
            throw InvalidArgument("block index out of range: " + std::to_string(b));
        }
        m[b] = 1;
    }
    return m;
}

void require_start(std::span<const std::uint8_t> in_region, int start)
{
    if (start < 0 || static_cast<std::size_t>(start) >= in_region.size() || !in_region[start]) {
        throw InvalidArgument("start block " + std::to_string(start) + " is not in the region");
    }
}

std::size_t region_size(std::span<const std::uint8_t> mask)
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

bool is_known(std::span<const std::uint8_t> decoded, int b)
{
    return !decoded.empty() && decoded[b] != 0;
}

/// Frontier-driven orders share this loop; `better(a, b)` ranks candidates.
template <typename Better>
std::vector<int> frontier_order(const BlockGrid& grid, std::span<const int> region, int start,
                                std::span<const std::uint8_t> decoded, std::vector<std::uint8_t>& known, Better better)
{
    auto pending = region_mask(grid, region);
    require_start(pending, start);
    const std::size_t total = region_size(pending);
    known.assign(static_cast<std::size_t>(grid.count()), 0);
    for (int b = 0; b < grid.count(); ++b) {
        known[b] = is_known(decoded, b) ? 1 : 0;
    }
    std::vector<int> order{start};
    pending[start] = 0;
    known[start] = 1;
    while (order.size() < total) {
        int best = -1;
        for (const int b : region) {
            if (!pending[b]) {
                continue;
            }
            const auto nbs = grid.neighbors(b);
            const bool frontier = std::any_of(nbs.begin(), nbs.end(), [&](int n) { return known[n] != 0; });
            if (frontier && (best < 0 || better(b, best))) {
                best = b;
            }
        }
        if (best < 0) {
            throw InvalidArgument("region is not connected");
        }
        order.push_back(best);
        pending[best] = 0;
        known[best] = 1;
    }
    return order;
}

}  // namespace

DecodingOrder snake_like(const BlockGrid& grid, std::span<const int> region, int start, bool prefer_horizontal)
{
    auto pending = region_mask(grid, region);
    require_start(pending, start);
    const std::size_t total = region_size(pending);
    Move last_h = Move::Right;
    Move last_v = Move::Down;
    DecodingOrder out;
    out.blocks.push_back(start);
    pending[start] = 0;

    auto try_from = [&](int from) -> std::optional<std::pair<int, Move>> {
        std::array<Move, 4> candidates{};
        if (prefer_horizontal) {
            candidates = {last_h, opposite(last_h), last_v, opposite(last_v)};
        } else {
            candidates = {last_v, opposite(last_v), last_h, opposite(last_h)};
        }
        for (const Move m : candidates) {
            const auto next = step(grid, from, m);
            if (next && pending[*next]) {
                return std::pair{*next, m};
            }
        }
        return std::nullopt;
    };

    while (out.blocks.size() < total) {
        std::optional<std::pair<int, Move>> chosen;
        for (auto it = out.blocks.rbegin(); it != out.blocks.rend() && !chosen; ++it) {
            chosen = try_from(*it);
        }
        if (!chosen) {
            throw InvalidArgument("region is not connected");
        }
        const auto [next, move] = *chosen;
        (is_horizontal(move) ? last_h : last_v) = move;
        out.blocks.push_back(next);
        pending[next] = 0;
    }
    return out;
}

DecodingOrder greedy_count(const BlockGrid& grid, std::span<const int> region, int start,
                           std::span<const std::uint8_t> decoded)
{
    std::vector<std::uint8_t> known;
    auto count = [&](int b) {
        int c = 0;
        for (const int n : grid.neighbors(b)) {
            c += known[n];
        }
        return c;
    };
    auto horizontal = [&](int b) {
        const int l = grid.left(b);
        const int r = grid.right(b);
        return (l != b && known[l]) || (r != b && known[r]);
    };
    auto better = [&](int a, int b) {
        const int ca = count(a);
        const int cb = count(b);
        if (ca != cb) {
            return ca > cb;
        }
        const bool ha = horizontal(a);
        const bool hb = horizontal(b);
        if (ha != hb) {
            return ha;
        }
        return a < b;
    };
    return {frontier_order(grid, region, start, decoded, known, better), 0};
}

DecodingOrder greedy_rate(const BlockGrid& grid, std::span<const int> region, int start, const BlockCost& cost,
                          std::span<const std::uint8_t> decoded)
{
    std::vector<std::uint8_t> known;
    auto better = [&](int a, int b) {
        const double ca = cost(a, known);
        const double cb = cost(b, known);
        if (ca != cb) {
            return ca < cb;
        }
        return a < b;
    };
    DecodingOrder out{frontier_order(grid, region, start, decoded, known, better), 0};
    out.signaling_bits = permutation_signaling_bits(out.blocks.size());
    return out;
}

int decoded_neighbor_total(const BlockGrid& grid, std::span<const int> order, std::span<const std::uint8_t> decoded)
{
    std::vector<std::uint8_t> known(static_cast<std::size_t>(grid.count()), 0);
    for (int b = 0; b < grid.count(); ++b) {
        known[b] = is_known(decoded, b) ? 1 : 0;
    }
    int total = 0;
    for (const int b : order) {
        for (const int n : grid.neighbors(b)) {
            total += known[n];
        }
        known[b] = 1;
    }
    return total;
}

bool is_decodable(const BlockGrid& grid, std::span<const int> order, std::span<const std::uint8_t> decoded,
                  std::span<const int> entry_points)
{
    std::vector<std::uint8_t> known(static_cast<std::size_t>(grid.count()), 0);
    for (int b = 0; b < grid.count(); ++b) {
        known[b] = is_known(decoded, b) ? 1 : 0;
    }
    for (const int b : order) {
        const bool entry = std::find(entry_points.begin(), entry_points.end(), b) != entry_points.end();
        const auto nbs = grid.neighbors(b);
        const bool linked = std::any_of(nbs.begin(), nbs.end(), [&](int n) { return known[n] != 0; });
        if (!entry && !linked) {
            return false;
        }
        known[b] = 1;
    }
    return true;
}

namespace {

double block_distance(const BlockGrid& grid, int a, int b)
{
    double dc = std::abs(grid.col_of(a) - grid.col_of(b));
    dc = std::min(dc, static_cast<double>(grid.cols()) - dc);
    const double dr = grid.row_of(a) - grid.row_of(b);
    return std::hypot(dc, dr);
}

/// Connected components of the pending blocks, each ascending, ordered by
/// their smallest block.
std::vector<std::vector<int>> components(const BlockGrid& grid, const std::vector<int>& pending)
{
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(grid.count()), 0);
    for (const int b : pending) {
        mask[b] = 1;
    }
    std::vector<std::vector<int>> out;
    for (const int seed : pending) {
        if (!mask[seed]) {
            continue;
        }
        std::vector<int> comp;
        std::deque<int> queue{seed};
        mask[seed] = 0;
        while (!queue.empty()) {
            const int b = queue.front();
            queue.pop_front();
            comp.push_back(b);
            for (const int n : grid.neighbors(b)) {
                if (mask[n]) {
                    mask[n] = 0;
                    queue.push_back(n);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

/// Shortest chain from the nearest access block to a block adjacent to the
/// component; returned access-first, excluding the component itself.
std::vector<int> bridge(const BlockGrid& grid, const std::vector<int>& comp, std::span<const std::uint8_t> access)
{
    std::vector<int> parent(static_cast<std::size_t>(grid.count()), -2);
    std::deque<int> queue;
    for (const int b : comp) {
        parent[b] = -1;
        queue.push_back(b);
    }
    while (!queue.empty()) {
        const int b = queue.front();
        queue.pop_front();
        for (const int n : grid.neighbors(b)) {
            if (parent[n] != -2) {
                continue;
            }
            parent[n] = b;
            if (access[n]) {
                std::vector<int> path;
                for (int p = n; parent[p] != -1; p = parent[p]) {
                    path.push_back(p);
                }
                return path;
            }
            queue.push_back(n);
        }
    }
    throw InvalidArgument("no access block can reach the requested region");
}

}  // namespace

NavigationPlan plan_navigation(const NavigationInput& in)
{
    if (in.grid == nullptr) {
        throw InvalidArgument("plan_navigation: missing grid");
    }
    const BlockGrid& grid = *in.grid;
    std::vector<std::uint8_t> known(in.decoded.begin(), in.decoded.end());
    known.resize(static_cast<std::size_t>(grid.count()), 0);
    std::vector<int> pending;
    for (const int b : in.requested) {
        if (!known[b]) {
            pending.push_back(b);
        }
    }
    NavigationPlan plan;
    if (pending.empty()) {
        return plan;
    }
    int forced = in.forced_start.value_or(-1);  // consumed by the first component holding it
    std::size_t new_blocks = 0;
    for (const auto& comp : components(grid, pending)) {
        auto decoded_neighbors = [&](int b) {
            int c = 0;
            for (const int n : grid.neighbors(b)) {
                c += known[n];
            }
            return c;
        };
        int start = -1;
        int best_count = 0;
        for (const int b : comp) {
            const int c = decoded_neighbors(b);
            if (c > best_count) {
                best_count = c;
                start = b;
            }
        }
        if (start < 0) {
            if (forced >= 0 && std::binary_search(comp.begin(), comp.end(), forced)) {
                start = forced;
                forced = -1;
            } else {
                double best_d = std::numeric_limits<double>::infinity();
                for (const int b : comp) {
                    if (!in.access.empty() && in.access[b]) {
                        const double d = in.center >= 0 ? block_distance(grid, b, in.center) : 0.0;
                        if (d < best_d) {
                            best_d = d;
                            start = b;
                        }
                    }
                }
            }
            if (start >= 0) {
                plan.access_starts.push_back(start);
            } else {
                const auto path = bridge(grid, comp, in.access);
                plan.access_starts.push_back(path.front());
                for (const int b : path) {
                    plan.order.push_back(b);
                    known[b] = 1;
                }
                for (const int b : comp) {
                    const int c = decoded_neighbors(b);
                    if (c > best_count) {
                        best_count = c;
                        start = b;
                    }
                }
            }
        }

        DecodingOrder order;
        switch (in.method) {
        case OrderMethod::Snake: order = snake_like(grid, comp, start, in.prefer_horizontal); break;
        case OrderMethod::GreedyCount: order = greedy_count(grid, comp, start, known); break;
        case OrderMethod::GreedyRate:
            if (in.cost == nullptr) {
                throw InvalidArgument("GreedyRate needs a block cost");
            }
            order = greedy_rate(grid, comp, start, *in.cost, known);
            break;
        }
        for (const int b : order.blocks) {
            plan.order.push_back(b);
            known[b] = 1;
        }
        new_blocks += order.blocks.size();
    }
    if (in.method == OrderMethod::GreedyRate) {
        plan.signaling_bits = permutation_signaling_bits(new_blocks);
    }
    return plan;
}

}  // namespace oic
