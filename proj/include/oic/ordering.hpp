#pragma once

#include "oic/blocks.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace oic {

enum class OrderMethod : std::uint8_t { Snake = 0, GreedyCount = 1, GreedyRate = 2 };

std::string_view order_name(OrderMethod m);
/// Accepts "snake", "greedycount", "greedyrate". Throws InvalidArgument.
OrderMethod parse_order(std::string_view name);

struct DecodingOrder {
    std::vector<int> blocks;
    std::uint64_t signaling_bits = 0;
};

/// Bits to transmit `block` given the decoded set (its best realizable context).
using BlockCost = std::function<double(int block, std::span<const std::uint8_t> decoded)>;

/// Scan from `start` through `region`: from the last placed block continue
/// horizontally (same direction as the previous horizontal move, initially
/// right, then the opposite one), else vertically (previous vertical
/// direction, initially down, then the opposite), else resume from the most
/// recently placed block that still has an unplaced neighbour in the region.
/// With prefer_horizontal = false the roles of the two axes swap.
/// Throws InvalidArgument if start is not in region or region is disconnected.
DecodingOrder snake_like(const BlockGrid& grid, std::span<const int> region, int start, bool prefer_horizontal = true);

/// Repeatedly takes the frontier block with the most decoded neighbours, then
/// one with a decoded horizontal neighbour, then the lowest index. `decoded`
/// (optional, size N) marks blocks known before the region is scanned.
DecodingOrder greedy_count(const BlockGrid& grid, std::span<const int> region, int start,
                           std::span<const std::uint8_t> decoded = {});

/// Repeatedly takes the frontier block with the lowest cost, ties to the lowest
/// index. Signaling costs ceil(|region| * log2 |region|) bits.
DecodingOrder greedy_rate(const BlockGrid& grid, std::span<const int> region, int start, const BlockCost& cost,
                          std::span<const std::uint8_t> decoded = {});

/// ceil(m * log2 m), the cost of sending an arbitrary permutation of m blocks.
std::uint64_t permutation_signaling_bits(std::size_t m);

/// Sum over the order of the number of neighbours decoded before each block.
int decoded_neighbor_total(const BlockGrid& grid, std::span<const int> order, std::span<const std::uint8_t> decoded = {});

/// True iff every block is adjacent to an earlier one (or to `decoded`),
/// except blocks listed in `entry_points`.
bool is_decodable(const BlockGrid& grid, std::span<const int> order, std::span<const std::uint8_t> decoded,
                  std::span<const int> entry_points);

/// Result of planning one request.
struct NavigationPlan {
    std::vector<int> order;         ///< new blocks in decoding order
    std::vector<int> access_starts; ///< blocks decoded from the empty context
    std::uint64_t signaling_bits = 0;
};

struct NavigationInput {
    const BlockGrid* grid = nullptr;
    std::span<const std::uint8_t> decoded;  ///< session state before the request
    std::span<const int> requested;         ///< J(theta), ascending
    std::span<const std::uint8_t> access;   ///< access mask
    int center = -1;                        ///< block under the viewport centre
    OrderMethod method = OrderMethod::Snake;
    bool prefer_horizontal = true;
    const BlockCost* cost = nullptr;        ///< required for GreedyRate
    std::optional<int> forced_start;        ///< overrides the choice of the first access start
};

/// Orders the requested blocks that are not yet decoded, one connected component
/// at a time. A component touching the decoded set starts at its block with
/// the most decoded neighbours (lowest index on ties); otherwise at its access
/// block closest to the viewport centre. A component with no access block is
/// reached through the shortest chain of blocks from the nearest access block.
NavigationPlan plan_navigation(const NavigationInput& in);

}  // namespace oic
