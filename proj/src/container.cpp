#include "oic/container.hpp"

#include "oic/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace oic {

namespace {

constexpr char kMagic[4] = {'O', 'I', 'C', '1'};
constexpr std::size_t kFixedHeaderBytes = 46;

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
    template <typename T>
    void put(T value)
    {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
        }
    }

private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}
    template <typename T>
    T get()
    {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::span<const std::uint8_t> take(std::size_t count)
    {
        need(count);
        auto s = data_.subspan(pos_, count);
        pos_ += count;
        return s;
    }
    [[nodiscard]] std::size_t position() const { return pos_; }

private:
    void need(std::size_t count) const
    {
        if (pos_ + count > data_.size()) {
            throw FormatError("container truncated");
        }
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::size_t bytes_for_bits(std::uint64_t bits)
{
    return static_cast<std::size_t>((bits + 7) / 8);
}

std::uint64_t mode_entry_count(const EncodedImage& enc)
{
    std::uint64_t count = 0;
    for (int b = 0; b < enc.grid.count(); ++b) {
        for (const ContextId ctx : enc.contexts(b)) {
            count += ctx == ContextId::Empty ? 0 : 1;
        }
    }
    return count;
}

std::uint64_t access_bits(const EncodedImage& enc)
{
    return enc.access.strategy == AccessStrategy::Fixed ? static_cast<std::uint64_t>(enc.grid.count())
                                                        : 16ULL * enc.access.blocks.size();
}

void put_gamma(BitWriter& w, std::uint64_t v)
{
    int width = 0;
    while ((v >> (width + 1)) != 0) {
        ++width;
    }
    w.put(0, static_cast<unsigned>(width));
    w.put(v, static_cast<unsigned>(width + 1));
}

std::uint64_t get_gamma(BitReader& r)
{
    unsigned zeros = 0;
    while (r.get(1) == 0) {
        if (++zeros > 32) {
            throw FormatError("malformed length code in a chunk directory");
        }
    }
    return zeros == 0 ? 1 : ((1ULL << zeros) | r.get(zeros));
}

unsigned index_bits(std::size_t groups)
{
    unsigned bits = 0;
    while ((std::size_t{1} << bits) < groups) {
        ++bits;
    }
    return bits;
}

/// Chunk groups of a plane: contexts sharing an end position form one group.
/// Chunks are canonical (sorted by end, then context), so only the group ends
/// and each context's group index need to be stored.
void write_directory(BitWriter& w, const PlaneStream& p, std::span<const ContextId> admissible)
{
    std::vector<int> ends;
    for (const Chunk& c : p.chunks) {
        if (ends.empty() || c.end != ends.back()) {
            ends.push_back(c.end);
        }
    }
    put_gamma(w, ends.size());
    int prev = 0;
    for (std::size_t g = 0; g < ends.size(); ++g) {
        put_gamma(w, static_cast<std::uint64_t>(ends[g] - prev) + (g == 0 ? 1 : 0));
        prev = ends[g];
    }
    const unsigned bits = index_bits(ends.size());
    for (const ContextId ctx : admissible) {
        const auto it = std::find_if(p.chunks.begin(), p.chunks.end(), [ctx](const Chunk& c) { return c.ctx == ctx; });
        if (it == p.chunks.end()) {
            throw InvalidArgument("plane stream lacks an admissible context");
        }
        const auto g = std::lower_bound(ends.begin(), ends.end(), it->end) - ends.begin();
        w.put(static_cast<std::uint64_t>(g), bits);
    }
}

std::uint64_t directory_bits(const PlaneStream& p, std::span<const ContextId> admissible)
{
    BitWriter w;
    write_directory(w, p, admissible);
    return w.bit_count();
}

std::uint64_t record_bits(const EncodedImage& enc, int block)
{
    const auto admissible = enc.contexts(block);
    std::uint64_t bits = 0;
    for (const PlaneStream& p : enc.streams[block].planes) {
        bits += 16 + directory_bits(p, admissible) + static_cast<std::uint64_t>(p.stored_bits());
    }
    return bits;
}

std::vector<std::uint8_t> encode_record(const EncodedImage& enc, int block)
{
    const auto admissible = enc.contexts(block);
    BitWriter w;
    for (const PlaneStream& p : enc.streams[block].planes) {
        w.put(p.checksum, 16);
        write_directory(w, p, admissible);
        w.put_bits(p.syndromes);
    }
    w.align();
    return w.take();
}

/// Inverse of write_directory; rebuilds the canonical chunk list.
std::vector<Chunk> read_directory(BitReader& r, std::span<const ContextId> admissible, int n)
{
    const std::uint64_t groups = get_gamma(r);
    if (groups > admissible.size()) {
        throw FormatError("chunk directory has more groups than contexts");
    }
    std::vector<int> ends;
    int prev = 0;
    for (std::uint64_t g = 0; g < groups; ++g) {
        const std::uint64_t len = get_gamma(r) - (g == 0 ? 1 : 0);
        if (static_cast<std::uint64_t>(prev) + len > static_cast<std::uint64_t>(n)) {
            throw FormatError("chunk directory exceeds the code length");
        }
        prev += static_cast<int>(len);
        ends.push_back(prev);
    }
    const unsigned bits = index_bits(ends.size());
    std::vector<std::vector<ContextId>> members(ends.size());
    for (const ContextId ctx : admissible) {
        const auto g = r.get(bits);
        if (g >= ends.size()) {
            throw FormatError("chunk directory names an unknown group");
        }
        members[g].push_back(ctx);
    }
    std::vector<Chunk> chunks;
    prev = 0;
    for (std::size_t g = 0; g < ends.size(); ++g) {
        if (members[g].empty()) {
            throw FormatError("chunk directory has an empty group");
        }
        for (const ContextId ctx : members[g]) {
            chunks.push_back({ctx, prev, ends[g]});
            prev = ends[g];
        }
    }
    return chunks;
}

std::uint64_t transport_bytes(const EncodedImage& enc)
{
    if (enc.mode != RateMode::Theoretical) {
        return 0;
    }
    const auto n = static_cast<std::uint64_t>(enc.grid.block_size()) * enc.grid.block_size();
    return 2 * n * static_cast<std::uint64_t>(enc.grid.count());
}

void check_encoded(const EncodedImage& enc)
{
    const int count = enc.grid.count();
    if (static_cast<int>(enc.streams.size()) != count || static_cast<int>(enc.intra_modes.size()) != count) {
        throw InvalidArgument("encoded image is incomplete");
    }
    if (enc.mode == RateMode::Theoretical && static_cast<int>(enc.transport.size()) != count) {
        throw InvalidArgument("theoretical-mode image lacks its plane transport");
    }
    if (enc.width > 0xFFFF || enc.height > 0xFFFF || enc.planes > 16 || enc.qp < kMinQp || enc.qp > kMaxQp) {
        throw InvalidArgument("encoded image parameters exceed the container fields");
    }
}

}  // namespace

StorageAccount storage_account(const EncodedImage& enc)
{
    check_encoded(enc);
    StorageAccount a;
    const std::uint64_t abits = access_bits(enc);
    a.header_bits = 8 * kFixedHeaderBytes + abits + 32ULL * static_cast<std::uint64_t>(enc.grid.count());
    a.padding_bits += 8 * bytes_for_bits(abits) - abits;
    const std::uint64_t entries = mode_entry_count(enc);
    a.mode_bits = 4 * entries;
    a.padding_bits += 8 * bytes_for_bits(a.mode_bits) - a.mode_bits;
    for (int b = 0; b < enc.grid.count(); ++b) {
        const auto admissible = enc.contexts(b);
        for (const PlaneStream& p : enc.streams[b].planes) {
            a.syndrome_bits += static_cast<std::uint64_t>(p.stored_bits());
            a.checksum_bits += 16;
            a.directory_bits += directory_bits(p, admissible);
        }
        const std::uint64_t rb = record_bits(enc, b);
        a.padding_bits += 8 * bytes_for_bits(rb) - rb;
    }
    return a;
}

std::uint64_t storage_bytes(const EncodedImage& enc)
{
    return storage_account(enc).total_bits() / 8;
}

std::vector<std::uint8_t> serialize(const EncodedImage& enc)
{
    check_encoded(enc);
    const int count = enc.grid.count();

    std::uint16_t flags = 0;
    if (enc.mode == RateMode::Practical) {
        flags |= container_flags::kPractical;
    }
    if (enc.access.strategy == AccessStrategy::Content) {
        flags |= container_flags::kContentPlacement;
    }
    if (enc.prefer_horizontal) {
        flags |= container_flags::kPreferHorizontal;
    }

    std::vector<std::uint8_t> out;
    ByteWriter bw(out);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    bw.put<std::uint16_t>(kContainerVersion);
    bw.put<std::uint16_t>(flags);
    bw.put<std::uint16_t>(static_cast<std::uint16_t>(enc.width));
    bw.put<std::uint16_t>(static_cast<std::uint16_t>(enc.height));
    bw.put<std::uint16_t>(static_cast<std::uint16_t>(enc.grid.block_size()));
    bw.put<std::uint8_t>(static_cast<std::uint8_t>(enc.qp));
    bw.put<std::uint8_t>(static_cast<std::uint8_t>(enc.planes));
    bw.put<std::uint64_t>(enc.seed);
    bw.put<std::uint16_t>(static_cast<std::uint16_t>(enc.ladder_steps));
    bw.put<std::uint64_t>(storage_bytes(enc));
    bw.put<std::uint64_t>(transport_bytes(enc));
    bw.put<std::uint32_t>(static_cast<std::uint32_t>(enc.access.blocks.size()));

    if (enc.access.strategy == AccessStrategy::Fixed) {
        BitWriter w;
        const auto mask = enc.access.mask(count);
        for (int b = 0; b < count; ++b) {
            w.put(mask[b], 1);
        }
        w.align();
        const auto bytes = w.take();
        out.insert(out.end(), bytes.begin(), bytes.end());
    } else {
        for (const int b : enc.access.blocks) {
            bw.put<std::uint16_t>(static_cast<std::uint16_t>(b));
        }
    }

    {
        BitWriter w;
        for (int b = 0; b < count; ++b) {
            for (const ContextId ctx : enc.contexts(b)) {
                if (ctx != ContextId::Empty) {
                    w.put(enc.intra_modes[b][index_of(ctx)], 4);
                }
            }
        }
        w.align();
        const auto bytes = w.take();
        out.insert(out.end(), bytes.begin(), bytes.end());
    }

    std::vector<std::vector<std::uint8_t>> records;
    records.reserve(static_cast<std::size_t>(count));
    std::uint32_t offset = 0;
    for (int b = 0; b < count; ++b) {
        records.push_back(encode_record(enc, b));
        bw.put<std::uint32_t>(offset);
        offset += static_cast<std::uint32_t>(records.back().size());
    }
    for (const auto& r : records) {
        out.insert(out.end(), r.begin(), r.end());
    }

    if (enc.mode == RateMode::Theoretical) {
        for (int b = 0; b < count; ++b) {
            for (const int level : bitplane_join(enc.transport[b])) {
                bw.put<std::uint16_t>(static_cast<std::uint16_t>(static_cast<std::int16_t>(level)));
            }
        }
    }
    return out;
}

EncodedImage parse(std::span<const std::uint8_t> bytes)
{
    ByteReader br(bytes);
    const auto magic = br.take(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
        throw FormatError("not an OIC container (bad magic)");
    }
    const auto version = br.get<std::uint16_t>();
    if (version != kContainerVersion) {
        throw FormatError("unsupported container version " + std::to_string(version));
    }
    const auto flags = br.get<std::uint16_t>();
    if (flags & ~(container_flags::kPractical | container_flags::kContentPlacement |
                  container_flags::kPreferHorizontal)) {
        throw FormatError("unknown container flags");
    }
    EncodedImage enc;
    enc.mode = (flags & container_flags::kPractical) ? RateMode::Practical : RateMode::Theoretical;
    enc.access.strategy =
        (flags & container_flags::kContentPlacement) ? AccessStrategy::Content : AccessStrategy::Fixed;
    enc.prefer_horizontal = (flags & container_flags::kPreferHorizontal) != 0;
    enc.width = br.get<std::uint16_t>();
    enc.height = br.get<std::uint16_t>();
    const int block_size = br.get<std::uint16_t>();
    enc.qp = br.get<std::uint8_t>();
    enc.planes = br.get<std::uint8_t>();
    enc.seed = br.get<std::uint64_t>();
    enc.ladder_steps = br.get<std::uint16_t>();
    const auto declared_storage = br.get<std::uint64_t>();
    const auto declared_transport = br.get<std::uint64_t>();
    const auto access_count = br.get<std::uint32_t>();

    try {
        enc.grid = BlockGrid::for_image(enc.width, enc.height, block_size);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("container geometry: ") + e.what());
    }
    if (enc.planes < 2 || enc.planes > 16 || enc.qp > kMaxQp) {
        throw FormatError("container header out of range");
    }
    const int count = enc.grid.count();
    const int n = block_size * block_size;
    if (static_cast<int>(access_count) > count) {
        throw FormatError("access set larger than the grid");
    }

    if (enc.access.strategy == AccessStrategy::Fixed) {
        BitReader r(br.take(bytes_for_bits(static_cast<std::uint64_t>(count))));
        for (int b = 0; b < count; ++b) {
            if (r.get(1)) {
                enc.access.blocks.push_back(b);
            }
        }
        if (!r.align()) {
            throw FormatError("non-zero padding in the access bitmap");
        }
        if (enc.access.blocks.size() != access_count) {
            throw FormatError("access bitmap disagrees with the access count");
        }
    } else {
        for (std::uint32_t k = 0; k < access_count; ++k) {
            const int b = br.get<std::uint16_t>();
            if (b >= count || (!enc.access.blocks.empty() && b <= enc.access.blocks.back())) {
                throw FormatError("access index list is not strictly increasing within the grid");
            }
            enc.access.blocks.push_back(b);
        }
        const auto index_bits = static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(count))));
        enc.access.signaling_bits = (1 + enc.access.blocks.size()) * index_bits;
    }

    {
        std::uint64_t entries = 0;
        for (int b = 0; b < count; ++b) {
            for (const ContextId ctx : enc.contexts(b)) {
                entries += ctx == ContextId::Empty ? 0 : 1;
            }
        }
        BitReader r(br.take(bytes_for_bits(4 * entries)));
        enc.intra_modes.assign(static_cast<std::size_t>(count), {});
        for (int b = 0; b < count; ++b) {
            for (const ContextId ctx : enc.contexts(b)) {
                if (ctx != ContextId::Empty) {
                    const auto m = r.get(4);
                    if (m >= kIntraModeCount) {
                        throw FormatError("intra mode id out of range");
                    }
                    enc.intra_modes[b][index_of(ctx)] = static_cast<std::uint8_t>(m);
                }
            }
        }
        if (!r.align()) {
            throw FormatError("non-zero padding in the mode table");
        }
    }

    std::vector<std::uint32_t> offsets(static_cast<std::size_t>(count));
    for (auto& o : offsets) {
        o = br.get<std::uint32_t>();
    }
    const std::size_t payload_start = br.position();
    if (declared_storage < payload_start || declared_storage > bytes.size()) {
        throw FormatError("declared storage size inconsistent with the file");
    }
    const std::size_t payload_end = static_cast<std::size_t>(declared_storage);
    if (offsets.front() != 0) {
        throw FormatError("first block offset must be zero");
    }

    enc.streams.resize(static_cast<std::size_t>(count));
    for (int b = 0; b < count; ++b) {
        const std::size_t begin = payload_start + offsets[b];
        const std::size_t end = b + 1 < count ? payload_start + offsets[b + 1] : payload_end;
        if (begin > end || end > payload_end) {
            throw FormatError("block offsets out of order");
        }
        BitReader r(bytes.subspan(begin, end - begin));
        const auto admissible = enc.contexts(b);
        BlockStream& bs = enc.streams[b];
        bs.planes.resize(static_cast<std::size_t>(enc.planes));
        for (PlaneStream& p : bs.planes) {
            p.checksum = static_cast<std::uint16_t>(r.get(16));
            p.chunks = read_directory(r, admissible, n);
            p.syndromes = r.get_bits(static_cast<std::size_t>(p.chunks.back().end));
        }
        if (!r.align() || r.remaining() != 0) {
            throw FormatError("block record " + std::to_string(b) + " has trailing or non-zero padding bits");
        }
    }

    const std::uint64_t expected_transport = transport_bytes(enc);
    if (declared_transport != expected_transport || bytes.size() != payload_end + expected_transport) {
        throw FormatError("transport section size mismatch");
    }
    if (enc.mode == RateMode::Theoretical) {
        ByteReader tr(bytes.subspan(payload_end));
        enc.transport.resize(static_cast<std::size_t>(count));
        for (int b = 0; b < count; ++b) {
            std::vector<int> levels(static_cast<std::size_t>(n));
            for (int& l : levels) {
                l = static_cast<std::int16_t>(tr.get<std::uint16_t>());
            }
            try {
                enc.transport[b] = bitplane_split(levels, enc.planes);
            } catch (const InvalidArgument&) {
                throw FormatError("transported levels exceed the plane count");
            }
        }
    }
    if (storage_bytes(enc) != declared_storage) {
        throw FormatError("declared storage size does not match the content");
    }
    return enc;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_container(const EncodedImage& enc, const std::filesystem::path& path)
{
    const auto bytes = serialize(enc);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EncodedImage read_container(const std::filesystem::path& path)
{
    return parse(read_bytes(path));
}

// --- head traces --------------------------------------------------------------

std::size_t HeadTrace::request_count() const
{
    std::size_t total = 0;
    for (const auto& u : users) {
        total += u.records.size();
    }
    return total;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError("trace line " + std::to_string(line) + ": malformed " + what + " '" + std::string(field) +
                          "'");
    }
    return value;
}

}  // namespace

HeadTrace parse_trace(std::string_view text)
{
    HeadTrace trace;
    std::map<std::string, std::size_t, std::less<>> index;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        const std::string_view line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line != kTraceHeader) {
                throw FormatError("trace line " + std::to_string(line_no) + ": expected header '" + kTraceHeader +
                                  "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 4) {
            throw FormatError("trace line " + std::to_string(line_no) + ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        }
        TraceRecord rec;
        rec.user_id = std::string(trim(fields[0]));
        if (rec.user_id.empty()) {
            throw FormatError("trace line " + std::to_string(line_no) + ": empty user_id");
        }
        rec.t_ms = parse_number<std::int64_t>(trim(fields[1]), line_no, "t_ms");
        const double lon = parse_number<double>(trim(fields[2]), line_no, "longitude");
        const double lat = parse_number<double>(trim(fields[3]), line_no, "latitude");
        if (!(lon >= -kPi && lon <= kPi)) {
            throw FormatError("trace line " + std::to_string(line_no) + ": longitude out of [-pi, pi]");
        }
        if (!(lat >= -kPi / 2 && lat <= kPi / 2)) {
            throw FormatError("trace line " + std::to_string(line_no) + ": latitude out of [-pi/2, pi/2]");
        }
        rec.direction = Direction::normalized(lon, lat);
        auto it = index.find(rec.user_id);
        if (it == index.end()) {
            it = index.emplace(rec.user_id, trace.users.size()).first;
            trace.users.push_back({rec.user_id, {}});
        }
        auto& records = trace.users[it->second].records;
        if (!records.empty() && rec.t_ms <= records.back().t_ms) {
            throw FormatError("trace line " + std::to_string(line_no) + ": time not increasing for user " +
                              rec.user_id);
        }
        records.push_back(std::move(rec));
    }
    return trace;
}

HeadTrace load_trace(const std::filesystem::path& path)
{
    const auto bytes = read_bytes(path);
    return parse_trace(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string format_trace(const HeadTrace& trace)
{
    std::ostringstream out;
    out.precision(9);
    out << kTraceHeader << '\n';
    for (const auto& u : trace.users) {
        for (const auto& r : u.records) {
            out << r.user_id << ',' << r.t_ms << ',' << r.direction.longitude << ',' << r.direction.latitude << '\n';
        }
    }
    return out.str();
}

}  // namespace oic
