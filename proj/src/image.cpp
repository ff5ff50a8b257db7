#include "oic/image.hpp"

#include "oic/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace oic {

PlaneImage::PlaneImage(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels)
{
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
        throw InvalidArgument("PlaneImage: invalid dimensions or channel count");
    }
    samples_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

PlaneImage to_luma(const PlaneImage& img)
{
    if (img.channels() == 1) {
        return img;
    }
    PlaneImage out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double luma = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(luma), 0L, 255L));
        }
    }
    return out;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PlaneImage decode_pnm(std::span<const std::uint8_t> bytes, const std::string& name)
{
    std::string header(bytes.begin(), bytes.begin() + std::min<std::size_t>(bytes.size(), 256));
    std::istringstream hs(header);
    std::string magic;
    hs >> magic;
    const int channels = magic == "P5" ? 1 : magic == "P6" ? 3 : 0;
    if (channels == 0) {
        throw FormatError(name + ": unsupported PNM variant");
    }
    // Skip comments between tokens.
    auto next_int = [&]() {
        hs >> std::ws;
        while (hs.peek() == '#') {
            std::string line;
            std::getline(hs, line);
            hs >> std::ws;
        }
        int v = 0;
        if (!(hs >> v)) {
            throw FormatError(name + ": malformed PNM header");
        }
        return v;
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (maxval != 255) {
        throw FormatError(name + ": only 8-bit PNM is supported");
    }
    const auto offset = static_cast<std::size_t>(hs.tellg()) + 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (bytes.size() < offset + need) {
        throw FormatError(name + ": truncated PNM data");
    }
    PlaneImage img(w, h, channels);
    std::memcpy(img.samples().data(), bytes.data() + offset, need);
    return img;
}

struct PngReadState {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len)
{
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + len > st->data.size()) {
        png_error(png, "truncated");
    }
    std::memcpy(out, st->data.data() + st->pos, len);
    st->pos += len;
}

void png_write_cb(png_structp png, png_bytep in, png_size_t len)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + len);
}

void png_flush_cb(png_structp) {}

}  // namespace

PlaneImage decode_png(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw FormatError("not a PNG stream");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    PngReadState state{bytes, 0};
    PlaneImage img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG stream");
    }
    png_set_read_fn(png, &state, png_read_cb);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    img = PlaneImage(w, h, channels == 1 ? 1 : 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) {
        rows[y] = img.samples().data() + static_cast<std::size_t>(y) * w * img.channels();
    }
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

std::vector<std::uint8_t> encode_png(const PlaneImage& img)
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, img.width(), img.height(), 8,
                 img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y) {
        png_write_row(png, const_cast<png_bytep>(img.samples().data() +
                                                 static_cast<std::size_t>(y) * img.width() * img.channels()));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

PlaneImage load_image(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        return decode_pnm(bytes, path.string());
    }
    throw FormatError(path.string() + ": unrecognized image format");
}

PlaneImage load_equirectangular(const std::filesystem::path& path)
{
    PlaneImage img = load_image(path);
    if (img.width() != 2 * img.height()) {
        throw FormatError(path.string() + ": equirectangular input must have width = 2 * height");
    }
    return img;
}

void save_pgm(const PlaneImage& img, const std::filesystem::path& path)
{
    const PlaneImage luma = to_luma(img);
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << luma.width() << " " << luma.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(luma.samples().data()),
              static_cast<std::streamsize>(luma.samples().size()));
}

void save_png(const PlaneImage& img, const std::filesystem::path& path)
{
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace oic
