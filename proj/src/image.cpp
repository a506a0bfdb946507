#include "wmevade/image.hpp"

#include <algorithm>
#include <cmath>

namespace wmevade {

ImageF to_float(const ImageU8& img)
{
    ImageF out(img.height(), img.width(), img.channels());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] / 255.0;
    return out;
}

std::uint8_t to_u8_sample(double v) noexcept
{
    if (!(v > 0.0))  // also maps NaN to 0
        return 0;
    if (v >= 1.0)
        return 255;
    return static_cast<std::uint8_t>(std::round(v * 255.0));
}

ImageU8 to_u8(const ImageF& img)
{
    ImageU8 out(img.height(), img.width(), img.channels());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = to_u8_sample(src[i]);
    return out;
}

namespace {

template <class Image>
std::vector<double> luma_of(const Image& img)
{
    std::vector<double> y(img.pixel_count());
    auto d = img.data();
    if (img.channels() == 1) {
        std::copy(d.begin(), d.end(), y.begin());
        return y;
    }
    for (std::size_t p = 0; p < y.size(); ++p)
        y[p] = (299.0 * d[3 * p] + 587.0 * d[3 * p + 1] + 114.0 * d[3 * p + 2]) / 1000.0;
    return y;
}

}  // namespace

std::vector<double> luma_plane(const ImageU8& img) { return luma_of(img); }
std::vector<double> luma_plane(const ImageF& img) { return luma_of(img); }

ImageU8 add_luma_delta(const ImageU8& img, std::span<const double> delta)
{
    if (delta.size() != img.pixel_count())
        throw ShapeError("luma delta must have one entry per pixel");
    ImageU8 out = img;
    auto d = out.data();
    const int ch = img.channels();
    for (std::size_t p = 0; p < delta.size(); ++p) {
        for (int c = 0; c < ch; ++c) {
            const double v = std::round(d[p * ch + c] + delta[p]);
            d[p * ch + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    return out;
}

void require_same_shape(const ImageU8& a, const ImageU8& b, const char* what)
{
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": image shapes differ");
}

}  // namespace wmevade
