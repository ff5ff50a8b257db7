#pragma once

#include "oic/blocks.hpp"
#include "oic/geom.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace oic {

enum class AccessStrategy : std::uint8_t { Fixed = 0, Content = 1 };

/// Blocks that also store a completion decodable without any neighbour.
struct AccessBlockSet {
    std::vector<int> blocks;  ///< ascending
    AccessStrategy strategy = AccessStrategy::Fixed;
    /// Bits spent to signal block positions: 0 for fixed placement,
    /// (1 + |A|) * ceil(log2 N) for content placement.
    std::uint64_t signaling_bits = 0;

    [[nodiscard]] bool contains(int block) const;
    [[nodiscard]] std::vector<std::uint8_t> mask(int block_count) const;
};

/// Sweep lattice for the placement and verification loops.
struct SweepParams {
    double step_longitude = 0;  ///< 0 selects fov_h / 4
    double step_latitude = 0;   ///< 0 selects fov_v / 4
    /// Density of the post-sweep coverage repair; 0 disables repair.
    double repair_step = kPi / 180;

    [[nodiscard]] SweepParams resolved(const ViewportSpec& spec) const;
};

/// Block holding the projected viewport centre.
int center_block(const ViewportSpec& spec, const BlockGrid& grid);

/// Greedy sweep alone: latitude ascending from -pi/2, longitude ascending from
/// -pi; whenever the viewport at a lattice point contains no access block its
/// centre block is added. Throws InvalidArgument if a step is non-positive or
/// exceeds half the field of view.
std::vector<int> sweep_fixed(const BlockGrid& grid, const ViewportSpec& spec, double step_lon, double step_lat);

/// Sweep followed by a repair pass on the repair lattice that adds the centre
/// block of every still-uncovered direction. Results are memoized per
/// (grid, viewport, steps).
AccessBlockSet place_fixed(const BlockGrid& grid, const ViewportSpec& spec, const SweepParams& params = {});

/// Same sweep, but an uncovered direction adds the visible block with the
/// smallest standalone rate, ties broken by distance to the viewport centre.
/// `standalone_bits[k]` is the rate of block k coded with no side information.
AccessBlockSet place_content(const BlockGrid& grid, const ViewportSpec& spec, std::span<const double> standalone_bits,
                             const SweepParams& params = {});

/// Total content-placement cost: signaling plus standalone rates of A.
double content_cost(const AccessBlockSet& a, std::span<const double> standalone_bits);

struct ConstraintReport {
    bool satisfied = true;
    std::optional<Direction> witness;  ///< first uncovered direction
    std::size_t directions_checked = 0;
};

/// Checks that every viewport on the lattice (latitude -pi/2..pi/2 inclusive,
/// longitude -pi..pi exclusive, spacing `step`) contains an access block.
/// Uses a strided footprint first and confirms misses with the exact one.
ConstraintReport check_constraint(std::span<const int> access, const BlockGrid& grid, const ViewportSpec& spec,
                                  double step);

/// Lattice coordinates used by the sweeps: start, start + step, ... up to
/// `last` (inclusive when `inclusive`).
std::vector<double> sweep_lattice(double start, double last, double step, bool inclusive);

}  // namespace oic
