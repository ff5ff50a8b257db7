#include "oic/incremental.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

namespace oic {

double binary_entropy(double p)
{
    if (p <= 0.0 || p >= 1.0) {
        return 0.0;
    }
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

double inverse_binary_entropy(double h)
{
    if (h <= 0.0) {
        return 0.0;
    }
    if (h >= 1.0) {
        return 0.5;
    }
    double lo = 0.0;
    double hi = 0.5;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (binary_entropy(mid) < h ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double estimate_crossover(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y)
{
    const double n = static_cast<double>(x.size());
    if (x.empty()) {
        throw InvalidArgument("estimate_crossover: empty planes");
    }
    const double p = static_cast<double>(hamming_distance(x, y)) / n;
    return std::clamp(p, 1.0 / (2.0 * n), 0.5);
}

int theoretical_rate(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y)
{
    const double n = static_cast<double>(x.size());
    return static_cast<int>(std::ceil(n * binary_entropy(estimate_crossover(x, y)) - 1e-9));
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

int bit_reverse(int value, int bits)
{
    int out = 0;
    for (int b = 0; b < bits; ++b) {
        out = (out << 1) | ((value >> b) & 1);
    }
    return out;
}

}  // namespace

LdpcaCode::LdpcaCode(int n, int steps, std::uint64_t seed) : n_(n), steps_(steps), seed_(seed)
{
    if (n < 16 || !std::has_single_bit(static_cast<unsigned>(n)) || steps < 1 || n % steps != 0) {
        throw InvalidArgument("code length must be a power of two >= 16 divisible by the ladder steps");
    }
    const int log2n = std::countr_zero(static_cast<unsigned>(n));
    order_.resize(static_cast<std::size_t>(n));
    emission_index_.assign(static_cast<std::size_t>(n) + 1, -1);
    for (int t = 0; t < n; ++t) {
        order_[t] = n - bit_reverse(t, log2n);
        emission_index_[static_cast<std::size_t>(order_[t])] = t;
    }
    std::uint64_t state = seed;
    for (int attempt = 0; attempt < 4096; ++attempt) {
        if (build(splitmix64(state))) {
            return;
        }
    }
    throw Error("no invertible parity-check matrix found for seed " + std::to_string(seed));
}

bool LdpcaCode::build(std::uint64_t sub_seed)
{
    // Regular bipartite graph: three sockets per variable dealt onto rows of
    // three, then repaired so no row repeats a variable.
    constexpr int kDegree = 3;
    std::mt19937_64 rng(sub_seed);
    const int sockets = kDegree * n_;
    std::vector<int> deck(static_cast<std::size_t>(sockets));
    for (int k = 0; k < sockets; ++k) {
        deck[k] = k / kDegree;
    }
    for (int k = sockets - 1; k > 0; --k) {
        std::swap(deck[k], deck[static_cast<int>(rng() % static_cast<std::uint64_t>(k + 1))]);
    }
    auto row_has_repeat = [&](int r) {
        const int* d = &deck[static_cast<std::size_t>(r) * kDegree];
        return d[0] == d[1] || d[0] == d[2] || d[1] == d[2];
    };
    for (int pass = 0; pass < 100; ++pass) {
        bool clean = true;
        for (int r = 0; r < n_; ++r) {
            while (row_has_repeat(r)) {
                clean = false;
                const int a = r * kDegree + static_cast<int>(rng() % kDegree);
                const int b = static_cast<int>(rng() % static_cast<std::uint64_t>(sockets));
                std::swap(deck[a], deck[b]);
            }
        }
        if (clean) {
            break;
        }
    }
    for (int r = 0; r < n_; ++r) {
        if (row_has_repeat(r)) {
            return false;
        }
    }

    rows_.assign(static_cast<std::size_t>(n_), {});
    for (int r = 0; r < n_; ++r) {
        auto& row = rows_[static_cast<std::size_t>(r)];
        row.assign(deck.begin() + r * kDegree, deck.begin() + (r + 1) * kDegree);
        std::sort(row.begin(), row.end());
    }

    // Gauss-Jordan on [H | I] over GF(2).
    const int words = (n_ + 63) / 64;
    std::vector<std::vector<std::uint64_t>> a(static_cast<std::size_t>(n_), std::vector<std::uint64_t>(2 * words, 0));
    for (int r = 0; r < n_; ++r) {
        for (const int v : rows_[static_cast<std::size_t>(r)]) {
            a[r][v / 64] |= 1ULL << (v % 64);
        }
        a[r][words + r / 64] |= 1ULL << (r % 64);
    }
    for (int c = 0; c < n_; ++c) {
        const std::uint64_t mask = 1ULL << (c % 64);
        int pivot = -1;
        for (int r = c; r < n_; ++r) {
            if (a[r][c / 64] & mask) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0) {
            return false;
        }
        std::swap(a[c], a[pivot]);
        for (int r = 0; r < n_; ++r) {
            if (r != c && (a[r][c / 64] & mask)) {
                for (int w = 0; w < 2 * words; ++w) {
                    a[r][w] ^= a[c][w];
                }
            }
        }
    }
    inverse_.assign(static_cast<std::size_t>(n_), std::vector<std::uint64_t>(static_cast<std::size_t>(words)));
    for (int r = 0; r < n_; ++r) {
        std::copy(a[r].begin() + words, a[r].end(), inverse_[r].begin());
    }
    return true;
}

std::shared_ptr<const LdpcaCode> LdpcaCode::shared(int n, int steps, std::uint64_t seed)
{
    static std::mutex mutex;
    static std::map<std::tuple<int, int, std::uint64_t>, std::shared_ptr<const LdpcaCode>> cache;
    const std::lock_guard lock(mutex);
    auto& slot = cache[{n, steps, seed}];
    if (!slot) {
        slot = std::make_shared<const LdpcaCode>(n, steps, seed);
    }
    return slot;
}

BitVector LdpcaCode::syndrome(std::span<const std::uint8_t> x) const
{
    if (static_cast<int>(x.size()) != n_) {
        throw InvalidArgument("syndrome: plane length does not match the code");
    }
    BitVector s(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r) {
        std::uint8_t v = 0;
        for (const int c : rows_[static_cast<std::size_t>(r)]) {
            v ^= x[c] & 1;
        }
        s[r] = v;
    }
    return s;
}

BitVector LdpcaCode::emitted_syndromes(std::span<const std::uint8_t> x) const
{
    const BitVector s = syndrome(x);
    BitVector acc(static_cast<std::size_t>(n_) + 1, 0);  // acc[i] = a_i, acc[0] = 0
    for (int i = 1; i <= n_; ++i) {
        acc[i] = acc[i - 1] ^ s[i - 1];
    }
    BitVector out(static_cast<std::size_t>(n_));
    for (int t = 0; t < n_; ++t) {
        out[t] = acc[static_cast<std::size_t>(order_[t])];
    }
    return out;
}

int LdpcaCode::rung_at_least(int bits) const
{
    const int step = rung_size();
    const int r = std::max(step, (std::max(bits, 0) + step - 1) / step * step);
    return std::min(r, n_);
}

double LdpcaCode::assumed_crossover(int rate) const
{
    const double p = inverse_binary_entropy(static_cast<double>(rate) / n_);
    return std::clamp(p, 1.0 / (2.0 * n_), 0.49);
}

std::shared_ptr<const LdpcaCode::Graph> LdpcaCode::graph(int rate) const
{
    {
        const std::lock_guard lock(cache_mutex_);
        if (auto it = graphs_.find(rate); it != graphs_.end()) {
            return it->second;
        }
    }
    auto g = make_graph(rate);
    const std::lock_guard lock(cache_mutex_);
    return graphs_.emplace(rate, std::move(g)).first->second;
}

std::shared_ptr<const LdpcaCode::Graph> LdpcaCode::make_graph(int rate) const
{
    auto g = std::make_shared<Graph>();
    g->positions.assign(order_.begin(), order_.begin() + rate);
    std::sort(g->positions.begin(), g->positions.end());
    std::vector<std::uint8_t> parity(static_cast<std::size_t>(n_), 0);
    std::vector<int> touched;
    g->check_ptr.push_back(0);
    int prev = 0;
    for (const int pos : g->positions) {
        touched.clear();
        for (int r = prev; r < pos; ++r) {
            for (const int v : rows_[static_cast<std::size_t>(r)]) {
                if (parity[v] == 0) {
                    touched.push_back(v);
                }
                parity[v] ^= 1;
            }
        }
        std::sort(touched.begin(), touched.end());
        for (const int v : touched) {
            if (parity[v]) {
                g->check_vars.push_back(v);
            }
            parity[v] = 0;
        }
        g->check_ptr.push_back(static_cast<int>(g->check_vars.size()));
        prev = pos;
    }
    std::vector<int> degree(static_cast<std::size_t>(n_) + 1, 0);
    for (const int v : g->check_vars) {
        ++degree[v + 1];
    }
    for (int v = 0; v < n_; ++v) {
        degree[v + 1] += degree[v];
    }
    g->var_ptr = degree;
    g->var_edges.resize(g->check_vars.size());
    std::vector<int> fill(g->var_ptr.begin(), g->var_ptr.end() - 1);
    for (std::size_t e = 0; e < g->check_vars.size(); ++e) {
        g->var_edges[fill[g->check_vars[e]]++] = static_cast<int>(e);
    }
    return g;
}

BitVector LdpcaCode::solve(std::span<const std::uint8_t> emitted) const
{
    if (static_cast<int>(emitted.size()) != n_) {
        throw InvalidArgument("solve needs the complete emitted syndrome sequence");
    }
    BitVector acc(static_cast<std::size_t>(n_) + 1, 0);
    for (int t = 0; t < n_; ++t) {
        acc[static_cast<std::size_t>(order_[t])] = emitted[t] & 1;
    }
    const int words = (n_ + 63) / 64;
    std::vector<std::uint64_t> s(static_cast<std::size_t>(words), 0);
    for (int i = 1; i <= n_; ++i) {
        if (acc[i] ^ acc[i - 1]) {
            s[(i - 1) / 64] |= 1ULL << ((i - 1) % 64);
        }
    }
    BitVector x(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r) {
        std::uint64_t v = 0;
        for (int w = 0; w < words; ++w) {
            v ^= inverse_[r][w] & s[w];
        }
        x[r] = static_cast<std::uint8_t>(std::popcount(v) & 1);
    }
    return x;
}

std::optional<BitVector> LdpcaCode::decode(std::span<const std::uint8_t> prefix,
                                           std::span<const std::uint8_t> side_info) const
{
    const int rate = static_cast<int>(prefix.size());
    if (static_cast<int>(side_info.size()) != n_ || rate > n_) {
        throw InvalidArgument("decode: length mismatch");
    }
    if (rate == n_) {
        return solve(prefix);
    }
    BitVector hard(side_info.begin(), side_info.end());
    if (rate == 0) {
        return hard;
    }
    const auto g = graph(rate);
    const int checks = static_cast<int>(g->positions.size());

    std::vector<std::uint8_t> target(static_cast<std::size_t>(checks));
    std::uint8_t prev_acc = 0;
    for (int c = 0; c < checks; ++c) {
        const std::uint8_t acc = prefix[emission_index_[static_cast<std::size_t>(g->positions[c])]] & 1;
        target[c] = acc ^ prev_acc;
        prev_acc = acc;
    }
    auto unsatisfied = [&]() {
        int count = 0;
        for (int c = 0; c < checks; ++c) {
            std::uint8_t v = target[c];
            for (int e = g->check_ptr[c]; e < g->check_ptr[c + 1]; ++e) {
                v ^= hard[g->check_vars[e]];
            }
            count += v;
        }
        return count;
    };
    int best = unsatisfied();
    if (best == 0) {
        return hard;
    }

    const double p = assumed_crossover(rate);
    const double llr0 = std::log((1 - p) / p);
    std::vector<double> channel(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v) {
        channel[v] = side_info[v] ? -llr0 : llr0;
    }
    const std::size_t edges = g->check_vars.size();
    std::vector<double> v2c(edges);
    std::vector<double> c2v(edges, 0.0);
    std::vector<double> t(edges);
    std::vector<double> suffix;
    for (std::size_t e = 0; e < edges; ++e) {
        v2c[e] = channel[g->check_vars[e]];
    }

    constexpr double kLimit = 1.0 - 1e-12;
    constexpr double kMaxLlr = 60.0;
    constexpr int kStallLimit = 6;
    int stall = 0;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        for (int c = 0; c < checks; ++c) {
            const int b = g->check_ptr[c];
            const int end = g->check_ptr[c + 1];
            const int deg = end - b;
            if (deg == 0) {
                continue;
            }
            for (int e = b; e < end; ++e) {
                // tanh(m / 2) = (e^m - 1) / (e^m + 1)
                const double em = std::exp(std::clamp(v2c[e], -kMaxLlr, kMaxLlr));
                t[e] = (em - 1.0) / (em + 1.0);
            }
            suffix.assign(static_cast<std::size_t>(deg) + 1, 1.0);
            for (int k = deg - 1; k >= 0; --k) {
                suffix[k] = suffix[k + 1] * t[b + k];
            }
            const double sign = target[c] ? -1.0 : 1.0;
            double left = 1.0;
            for (int k = 0; k < deg; ++k) {
                const double prod = std::clamp(sign * left * suffix[k + 1], -kLimit, kLimit);
                c2v[b + k] = std::log((1.0 + prod) / (1.0 - prod));
                left *= t[b + k];
            }
        }
        for (int v = 0; v < n_; ++v) {
            double total = channel[v];
            for (int k = g->var_ptr[v]; k < g->var_ptr[v + 1]; ++k) {
                total += c2v[g->var_edges[k]];
            }
            hard[v] = total < 0 ? 1 : 0;
            for (int k = g->var_ptr[v]; k < g->var_ptr[v + 1]; ++k) {
                const int e = g->var_edges[k];
                v2c[e] = total - c2v[e];
            }
        }
        const int u = unsatisfied();
        if (u == 0) {
            return hard;
        }
        if (u < best) {
            best = u;
            stall = 0;
        } else if (++stall >= kStallLimit) {
            break;
        }
    }
    return std::nullopt;
}

int required_rate(const LdpcaCode& code, std::span<const std::uint8_t> x, std::span<const std::uint8_t> si,
                  RateMode mode)
{
    const int theoretical = theoretical_rate(x, si);
    if (mode == RateMode::Theoretical) {
        return theoretical;
    }
    const int n = code.length();
    const BitVector emitted = code.emitted_syndromes(x);
    const std::span<const std::uint8_t> all(emitted);
    for (int r = code.rung_at_least(theoretical); r < n; r += code.rung_size()) {
        const auto decoded = code.decode(all.first(static_cast<std::size_t>(r)), si);
        if (decoded && std::equal(decoded->begin(), decoded->end(), x.begin())) {
            return r;
        }
    }
    return n;
}

int PlaneStream::rate_for(ContextId ctx) const
{
    for (const Chunk& c : chunks) {
        if (c.ctx == ctx) {
            return c.end;
        }
    }
    throw InvalidArgument("context " + std::string(context_name(ctx)) + " is not stored for this block");
}

bool BlockStream::has_context(ContextId ctx) const
{
    if (planes.empty()) {
        return false;
    }
    const auto& chunks = planes.front().chunks;
    return std::any_of(chunks.begin(), chunks.end(), [ctx](const Chunk& c) { return c.ctx == ctx; });
}

int BlockStream::syndrome_bits_for(ContextId ctx) const
{
    int bits = 0;
    for (const PlaneStream& p : planes) {
        bits += p.rate_for(ctx);
    }
    return bits;
}

int BlockStream::stored_syndrome_bits() const
{
    int bits = 0;
    for (const PlaneStream& p : planes) {
        bits += p.stored_bits();
    }
    return bits;
}

BlockStream encode_block(const LdpcaCode& code, const std::vector<BitVector>& planes,
                         const std::map<ContextId, std::vector<BitVector>>& side_info, RateMode mode)
{
    if (side_info.empty()) {
        throw InvalidArgument("encode_block needs at least one side information");
    }
    BlockStream bs;
    bs.planes.resize(planes.size());
    for (std::size_t p = 0; p < planes.size(); ++p) {
        std::vector<std::pair<int, ContextId>> rates;
        rates.reserve(side_info.size());
        std::map<BitVector, int> seen;  // contexts often share a side-information plane
        for (const auto& [ctx, si] : side_info) {
            if (si.size() != planes.size()) {
                throw InvalidArgument("side information plane count mismatch");
            }
            auto it = seen.find(si[p]);
            if (it == seen.end()) {
                it = seen.emplace(si[p], required_rate(code, planes[p], si[p], mode)).first;
            }
            rates.emplace_back(it->second, ctx);
        }
        std::sort(rates.begin(), rates.end());
        PlaneStream& ps = bs.planes[p];
        int prev = 0;
        for (const auto& [rate, ctx] : rates) {
            ps.chunks.push_back({ctx, prev, rate});
            prev = rate;
        }
        BitVector emitted = code.emitted_syndromes(planes[p]);
        emitted.resize(static_cast<std::size_t>(prev));
        ps.syndromes = std::move(emitted);
        ps.checksum = crc16(planes[p]);
    }
    return bs;
}

std::vector<PlaneExtract> extract(const BlockStream& bs, ContextId ctx)
{
    std::vector<PlaneExtract> out;
    out.reserve(bs.planes.size());
    for (const PlaneStream& p : bs.planes) {
        const int r = p.rate_for(ctx);
        out.push_back({BitVector(p.syndromes.begin(), p.syndromes.begin() + r), p.checksum});
    }
    return out;
}

BitVector decode_plane(const LdpcaCode& code, const PlaneExtract& ex, std::span<const std::uint8_t> side_info,
                       RateMode mode, const BitVector* transported)
{
    BitVector plane;
    if (mode == RateMode::Theoretical) {
        if (transported == nullptr) {
            throw DecodingFailure("theoretical mode needs the transported plane");
        }
        const BitVector emitted = code.emitted_syndromes(*transported);
        if (ex.syndromes.size() > emitted.size() ||
            !std::equal(ex.syndromes.begin(), ex.syndromes.end(), emitted.begin())) {
            throw DecodingFailure("syndrome prefix does not match the transported plane");
        }
        plane = *transported;
    } else {
        auto decoded = code.decode(ex.syndromes, side_info);
        if (!decoded) {
            throw DecodingFailure("belief propagation did not converge");
        }
        plane = std::move(*decoded);
    }
    if (crc16(plane) != ex.checksum) {
        throw DecodingFailure("plane checksum mismatch");
    }
    return plane;
}

}  // namespace oic
