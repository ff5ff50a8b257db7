#pragma once

#include "oic/bits.hpp"
#include "oic/blocks.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace oic {

/// How rates are charged and how planes reach the decoder.
///
/// Practical: the rate is the smallest ladder rung at which the belief
/// propagation decoder recovers the plane; planes are decoded from syndromes.
/// Theoretical: the rate is ceil(n * H2(p)); the syndrome prefix of that length is
/// still stored and checked, but the plane itself travels in a lossless side
/// channel that is not charged to storage or transmission.
enum class RateMode : std::uint8_t { Theoretical = 0, Practical = 1 };

inline constexpr std::uint64_t kDefaultCodeSeed = 0x0D15EA5E5EEDULL;
inline constexpr int kDefaultLadderSteps = 64;

/// Binary entropy in bits; 0 at p = 0 and p = 1.
double binary_entropy(double p);
/// Inverse of binary_entropy on [0, 0.5].
double inverse_binary_entropy(double h);

/// Hamming(x, y) / n clamped to [1/(2n), 0.5]. Throws on length mismatch.
double estimate_crossover(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y);

/// ceil(n * H2(estimate_crossover(x, y))).
int theoretical_rate(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y);

/// Rate-adaptive syndrome code with accumulated syndromes.
///
/// The base parity-check matrix H is n x n with three ones per row and per
/// column and is invertible over GF(2). The accumulated syndromes
/// a_i = s_1 ^ ... ^ s_i are emitted at positions q_t = n - bitrev(t), so every
/// prefix of the emission sequence is a valid lower-rate code and the full
/// sequence determines x uniquely.
class LdpcaCode {
public:
    /// n must be a power of two >= 16 and divisible by steps. Throws
    /// InvalidArgument otherwise, Error if no invertible matrix is found.
    LdpcaCode(int n, int steps, std::uint64_t seed);

    /// Process-wide cache; codes are immutable once built.
    static std::shared_ptr<const LdpcaCode> shared(int n, int steps, std::uint64_t seed);

    [[nodiscard]] int length() const { return n_; }
    [[nodiscard]] int steps() const { return steps_; }
    [[nodiscard]] int rung_size() const { return n_ / steps_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    /// Syndrome positions (1-based) in emission order.
    [[nodiscard]] const std::vector<int>& emission_order() const { return order_; }
    /// Variables of check row i (0-based).
    [[nodiscard]] const std::vector<int>& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

    [[nodiscard]] BitVector syndrome(std::span<const std::uint8_t> x) const;
    /// All n accumulated syndromes in emission order.
    [[nodiscard]] BitVector emitted_syndromes(std::span<const std::uint8_t> x) const;

    /// Smallest rung (a multiple of rung_size) that is >= bits.
    [[nodiscard]] int rung_at_least(int bits) const;

    /// Crossover the decoder assumes at rate r: H2^-1(r / n), clamped.
    [[nodiscard]] double assumed_crossover(int rate) const;

    /// Recovers x from the first `prefix.size()` emitted syndromes and the side
    /// information. The full sequence is solved exactly; shorter prefixes run
    /// sum-product decoding with crossover assumed_crossover(rate). Returns
    /// nullopt when BP does not converge.
    [[nodiscard]] std::optional<BitVector> decode(std::span<const std::uint8_t> prefix,
                                                  std::span<const std::uint8_t> side_info) const;

    /// x from the complete emitted sequence via H^-1.
    [[nodiscard]] BitVector solve(std::span<const std::uint8_t> emitted) const;

    static constexpr int kMaxIterations = 50;

private:
    struct Graph {
        std::vector<int> check_ptr;
        std::vector<int> check_vars;
        std::vector<int> var_ptr;
        std::vector<int> var_edges;  // edge indices into check_vars, grouped by variable
        std::vector<int> positions;  // sorted emitted positions ending each merged check
    };

    bool build(std::uint64_t sub_seed);
    [[nodiscard]] std::shared_ptr<const Graph> graph(int rate) const;
    [[nodiscard]] std::shared_ptr<const Graph> make_graph(int rate) const;

    int n_;
    int steps_;
    std::uint64_t seed_;
    std::vector<std::vector<int>> rows_;
    std::vector<int> order_;
    std::vector<int> emission_index_;  // position (1-based) -> emission index
    std::vector<std::vector<std::uint64_t>> inverse_;  // rows of H^-1 as bitsets

    mutable std::mutex cache_mutex_;
    mutable std::map<int, std::shared_ptr<const Graph>> graphs_;
};

/// Per-plane rate of a side information under the given mode. Practical mode
/// searches the ladder upward from the rung covering the theoretical rate and
/// returns n (exact solve) if BP never succeeds.
int required_rate(const LdpcaCode& code, std::span<const std::uint8_t> x, std::span<const std::uint8_t> si,
                  RateMode mode);

/// One stored slice of a plane's emitted syndromes: bits [begin, end) belong
/// to the side information `ctx` (and to every worse one).
struct Chunk {
    ContextId ctx = ContextId::Empty;
    int begin = 0;
    int end = 0;
    [[nodiscard]] int length() const { return end - begin; }
};

struct PlaneStream {
    BitVector syndromes;  ///< emitted syndromes [0, stored rate)
    std::vector<Chunk> chunks;  ///< sorted by end, contiguous from 0
    std::uint16_t checksum = 0;

    [[nodiscard]] int stored_bits() const { return static_cast<int>(syndromes.size()); }
    /// Rate needed by ctx, i.e. end of its chunk. Throws if ctx is not stored.
    [[nodiscard]] int rate_for(ContextId ctx) const;
};

/// Everything stored for one block.
struct BlockStream {
    std::vector<PlaneStream> planes;

    [[nodiscard]] bool has_context(ContextId ctx) const;
    /// Σ_p rate of ctx.
    [[nodiscard]] int syndrome_bits_for(ContextId ctx) const;
    [[nodiscard]] int stored_syndrome_bits() const;
};

/// Encodes the planes of one block against every admissible side information.
/// `side_info` maps each context to its planes (Empty maps to all-zero planes
/// and must be present iff the block is an access block).
BlockStream encode_block(const LdpcaCode& code, const std::vector<BitVector>& planes,
                         const std::map<ContextId, std::vector<BitVector>>& side_info, RateMode mode);

/// The part of a plane sent for one context: a syndrome prefix and the checksum.
struct PlaneExtract {
    BitVector syndromes;
    std::uint16_t checksum = 0;
};

/// Prefix of every plane needed by ctx. Throws InvalidArgument if ctx is not
/// stored for this block.
std::vector<PlaneExtract> extract(const BlockStream& bs, ContextId ctx);

/// Recovers one plane. In theoretical mode `transported` must hold the plane;
/// it is verified against the syndrome prefix and checksum instead of decoded.
/// Throws DecodingFailure on any inconsistency.
BitVector decode_plane(const LdpcaCode& code, const PlaneExtract& ex, std::span<const std::uint8_t> side_info,
                       RateMode mode, const BitVector* transported = nullptr);

}  // namespace oic
