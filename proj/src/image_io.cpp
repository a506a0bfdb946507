#include "wmevade/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace wmevade {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIOError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw ImageIOError("read failure on " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ImageIOError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ImageIOError("write failure on " + path.string());
}

bool is_png(std::span<const std::uint8_t> b)
{
    return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b)
{
    return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

struct MemoryReader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count)
{
    auto* r = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (r->pos + count > r->bytes.size())
        png_error(png, "truncated PNG stream");
    std::memcpy(out, r->bytes.data() + r->pos, count);
    r->pos += count;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t count)
{
    auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    v->insert(v->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

// libpng reports errors by longjmp; the message is parked in the error pointer
// and rethrown as an exception once control is back in C++ frames.
struct PngError {
    char message[256] = {};
};

[[noreturn]] void png_on_error(png_structp png, png_const_charp msg)
{
    auto* e = static_cast<PngError*>(png_get_error_ptr(png));
    std::snprintf(e->message, sizeof e->message, "PNG: %s", msg);
    png_longjmp(png, 1);
}

void png_warn_silent(png_structp, png_const_charp) {}

}  // namespace

ImageU8 decode_png(std::span<const std::uint8_t> bytes)
{
    if (!is_png(bytes))
        throw ImageIOError("not a PNG stream");
    PngError err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error, png_warn_silent);
    if (!png)
        throw ImageIOError("PNG: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp& p;
        png_infop& i;
        ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
    } guard{png, info};
    MemoryReader reader{bytes, 0};
    ImageU8 img;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png)))
        throw ImageIOError(err.message);
    png_set_read_fn(png, &reader, png_read_from_memory);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);

    if (depth == 16)
        throw ImageIOError("16-bit PNG sources are not supported");
    if ((color & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS))
        throw ImageIOError("PNG with alpha/transparency is not supported");
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3)
        throw ImageIOError("unsupported PNG channel layout");
    img = ImageU8(static_cast<int>(h), static_cast<int>(w), channels);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.data().data() + static_cast<std::size_t>(y) * w * channels;
    if (setjmp(png_jmpbuf(png)))
        throw ImageIOError(err.message);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    return img;
}

std::vector<std::uint8_t> encode_png(const ImageU8& img)
{
    if (img.empty())
        throw ImageIOError("cannot encode an empty image");
    PngError err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error, png_warn_silent);
    if (!png)
        throw ImageIOError("PNG: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp& p;
        png_infop& i;
        ~Guard() { png_destroy_write_struct(&p, &i); }
    } guard{png, info};
    std::vector<std::uint8_t> out;
    out.reserve(img.size() / 2 + 1024);

    if (setjmp(png_jmpbuf(png)))
        throw ImageIOError(err.message);
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, img.width(), img.height(), 8,
                 img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
    for (int y = 0; y < img.height(); ++y)
        png_write_row(png, const_cast<png_bytep>(img.data().data() + y * stride));
    png_write_end(png, nullptr);
    return out;
}

namespace {

// Parses one whitespace/comment-delimited unsigned integer from a PNM header.
unsigned pnm_header_value(std::span<const std::uint8_t> b, std::size_t& pos)
{
    for (;;) {
        while (pos < b.size() && std::isspace(b[pos]))
            ++pos;
        if (pos < b.size() && b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n')
                ++pos;
            continue;
        }
        break;
    }
    if (pos >= b.size() || !std::isdigit(b[pos]))
        throw ImageIOError("malformed PNM header");
    unsigned v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        v = v * 10 + (b[pos] - '0');
        if (v > (1u << 24))
            throw ImageIOError("PNM header value out of range");
        ++pos;
    }
    return v;
}

}  // namespace

ImageU8 decode_pnm(std::span<const std::uint8_t> b)
{
    if (b.size() < 2 || b[0] != 'P' || (b[1] != '6' && b[1] != '5'))
        throw ImageIOError("not a binary PPM/PGM stream");
    const int channels = b[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    const unsigned w = pnm_header_value(b, pos);
    const unsigned h = pnm_header_value(b, pos);
    const unsigned maxval = pnm_header_value(b, pos);
    if (maxval > 255)
        throw ImageIOError("16-bit PNM sources are not supported");
    if (maxval != 255)
        throw ImageIOError("PNM maxval other than 255 is not supported");
    if (pos >= b.size() || !std::isspace(b[pos]))
        throw ImageIOError("malformed PNM header");
    ++pos;  // single whitespace before the raster
    const std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (b.size() - pos < need)
        throw ImageIOError("truncated PNM raster");
    std::vector<std::uint8_t> data(b.begin() + pos, b.begin() + pos + need);
    return ImageU8(static_cast<int>(h), static_cast<int>(w), channels, std::move(data));
}

std::vector<std::uint8_t> encode_pnm(const ImageU8& img)
{
    const std::string header = (img.channels() == 3 ? "P6\n" : "P5\n") + std::to_string(img.width()) + " " +
                               std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data().begin(), img.data().end());
    return out;
}

ImageU8 load_image(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    if (is_png(bytes))
        return decode_png(bytes);
    if (is_jpeg(bytes))
        throw ImageIOError("JPEG input refused (lossy): " + path.string());
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5'))
        return decode_pnm(bytes);
    throw ImageIOError("unsupported image format: " + path.string());
}

void save_image(const ImageU8& img, const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        return write_file(path, encode_png(img));
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        if (ext == ".ppm" && img.channels() != 3)
            throw ImageIOError("PPM requires 3 channels; use .pgm for gray images");
        if (ext == ".pgm" && img.channels() != 1)
            throw ImageIOError("PGM requires 1 channel");
        return write_file(path, encode_pnm(img));
    }
    throw ImageIOError("unsupported output extension: " + path.string());
}

}  // namespace wmevade
