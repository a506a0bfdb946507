#include "wmevade/baselines.hpp"

#include "wmevade/rng.hpp"
#include "wmevade/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmevade {

namespace {

std::uint8_t clamp_round(double v)
{
    return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

void require_factor(double f)
{
    if (!(f > 0.0 && f <= 1.0))
        throw std::invalid_argument("enhancement factor must lie in (0, 1]");
}

}  // namespace

ImageU8 adjust_brightness(const ImageU8& img, double factor)
{
    require_factor(factor);
    ImageU8 out = img;
    for (auto& s : out.data())
        s = clamp_round(s * factor);
    return out;
}

ImageU8 adjust_contrast(const ImageU8& img, double factor)
{
    require_factor(factor);
    if (img.empty())
        return img;
    const auto y = luma_plane(img);
    double mean = 0.0;
    for (double v : y)
        mean += v;
    mean /= double(y.size());
    ImageU8 out = img;
    for (auto& s : out.data())
        s = clamp_round(mean + factor * (s - mean));
    return out;
}

ImageU8 add_gaussian_noise(const ImageU8& img, double sigma, std::uint64_t seed)
{
    if (!(sigma > 0.0))
        throw std::invalid_argument("noise sigma must be positive");
    Rng rng(seed);
    ImageU8 out = img;
    const double sd = sigma * 255.0;
    for (auto& s : out.data())
        s = clamp_round(s + sd * rng.normal());
    return out;
}

std::vector<double> gaussian_kernel(double sigma)
{
    if (!(sigma > 0.0))
        throw std::invalid_argument("blur radius must be positive");
    const int half = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        k[i + half] = std::exp(-double(i) * i / (2.0 * sigma * sigma));
        sum += k[i + half];
    }
    for (double& v : k)
        v /= sum;
    return k;
}

ImageU8 gaussian_blur(const ImageU8& img, double radius)
{
    const auto k = gaussian_kernel(radius);
    const int half = static_cast<int>(k.size() / 2);
    const int h = img.height(), w = img.width(), ch = img.channels();
    std::vector<double> tmp(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = -half; i <= half; ++i)
                    acc += k[i + half] * img.at(y, std::clamp(x + i, 0, w - 1), c);
                tmp[(static_cast<std::size_t>(y) * w + x) * ch + c] = acc;
            }
    ImageU8 out(h, w, ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = -half; i <= half; ++i)
                    acc += k[i + half] * tmp[(static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x) * ch + c];
                out.at(y, x, c) = clamp_round(acc);
            }
    return out;
}

// --- JPEG ------------------------------------------------------------------------------

namespace {

constexpr std::array<int, 64> kLumaTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChromaTable = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
    99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

double sample_round(double v) { return std::clamp(std::round(v), 0.0, 255.0); }

void quantize_plane(Plane& p, const std::array<int, 64>& q)
{
    std::array<double, 64> block;
    for (int by = 0; by < p.h; by += 8)
        for (int bx = 0; bx < p.w; bx += 8) {
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j)
                    block[i * 8 + j] = p.at(by + i, bx + j) - 128.0;
            Block8 c = dct8x8(block);
            for (int i = 0; i < 64; ++i)
                c[i] = std::round(c[i] / q[i]) * q[i];
            const Block8 r = idct8x8(c);
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j)
                    p.at(by + i, bx + j) = sample_round(r[i * 8 + j] + 128.0);
        }
}

// 2x2 box average.
Plane downsample(const Plane& p)
{
    Plane d{p.h / 2, p.w / 2, std::vector<double>(static_cast<std::size_t>(p.h / 2) * (p.w / 2))};
    for (int y = 0; y < d.h; ++y)
        for (int x = 0; x < d.w; ++x)
            d.at(y, x) = sample_round(
                (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) + p.at(2 * y + 1, 2 * x) + p.at(2 * y + 1, 2 * x + 1)) / 4.0);
    return d;
}

// Triangle-filter ("fancy") 2x upsampling: 3/4 nearer sample, 1/4 farther, per axis.
Plane upsample(const Plane& p)
{
    Plane u{p.h * 2, p.w * 2, std::vector<double>(static_cast<std::size_t>(p.h) * p.w * 4)};
    auto src = [&](int y, int x) { return p.at(std::clamp(y, 0, p.h - 1), std::clamp(x, 0, p.w - 1)); };
    for (int y = 0; y < u.h; ++y) {
        const int sy = y / 2, ny = (y % 2) ? sy + 1 : sy - 1;
        for (int x = 0; x < u.w; ++x) {
            const int sx = x / 2, nx = (x % 2) ? sx + 1 : sx - 1;
            u.at(y, x) = (9 * src(sy, sx) + 3 * src(ny, sx) + 3 * src(sy, nx) + src(ny, nx)) / 16.0;
        }
    }
    return u;
}

}  // namespace

std::array<int, 64> jpeg_quant_table(int quality, bool chroma)
{
    if (quality < 1 || quality > 100)
        throw std::invalid_argument("JPEG quality must lie in 1..100");
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    const auto& base = chroma ? kChromaTable : kLumaTable;
    std::array<int, 64> q;
    for (int i = 0; i < 64; ++i)
        q[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
    return q;
}

ImageU8 jpeg_compress(const ImageU8& img, int quality, bool subsample_chroma)
{
    const auto qy = jpeg_quant_table(quality, false);
    const auto qc = jpeg_quant_table(quality, true);
    if (img.empty())
        return img;
    const int h = img.height(), w = img.width();
    const int ph = (h + 15) / 16 * 16, pw = (w + 15) / 16 * 16;
    auto padded = [&](int y, int x, int c) { return double(img.at(std::min(y, h - 1), std::min(x, w - 1), c)); };

    const std::size_t n = static_cast<std::size_t>(ph) * pw;
    Plane Y{ph, pw, std::vector<double>(n)};
    if (img.channels() == 1) {
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x)
                Y.at(y, x) = padded(y, x, 0);
        quantize_plane(Y, qy);
        ImageU8 out(h, w, 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.at(y, x, 0) = static_cast<std::uint8_t>(Y.at(y, x));
        return out;
    }

    Plane Cb{ph, pw, std::vector<double>(n)}, Cr{ph, pw, std::vector<double>(n)};
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) {
            const double r = padded(y, x, 0), g = padded(y, x, 1), b = padded(y, x, 2);
            Y.at(y, x) = sample_round(0.299 * r + 0.587 * g + 0.114 * b);
            Cb.at(y, x) = sample_round(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0);
            Cr.at(y, x) = sample_round(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0);
        }
    quantize_plane(Y, qy);
    if (subsample_chroma) {
        Plane cb = downsample(Cb), cr = downsample(Cr);
        quantize_plane(cb, qc);
        quantize_plane(cr, qc);
        Cb = upsample(cb);
        Cr = upsample(cr);
    } else {
        quantize_plane(Cb, qc);
        quantize_plane(Cr, qc);
    }
    ImageU8 out(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double yy = Y.at(y, x), cb = Cb.at(y, x) - 128.0, cr = Cr.at(y, x) - 128.0;
            out.at(y, x, 0) = clamp_round(yy + 1.402 * cr);
            out.at(y, x, 1) = clamp_round(yy - 0.344136 * cb - 0.714136 * cr);
            out.at(y, x, 2) = clamp_round(yy + 1.772 * cb);
        }
    return out;
}

// --- sweeps -----------------------------------------------------------------------------

std::string_view to_string(EvasionMethod m)
{
    switch (m) {
    case EvasionMethod::Brightness: return "brightness";
    case EvasionMethod::Contrast: return "contrast";
    case EvasionMethod::GaussianNoise: return "noise";
    case EvasionMethod::Jpeg: return "jpeg";
    case EvasionMethod::Blur: return "blur";
    case EvasionMethod::Dip: return "dip";
    }
    return "?";
}

EvasionMethod parse_evasion_method(std::string_view name)
{
    for (auto m : {EvasionMethod::Brightness, EvasionMethod::Contrast, EvasionMethod::GaussianNoise,
                   EvasionMethod::Jpeg, EvasionMethod::Blur, EvasionMethod::Dip})
        if (name == to_string(m))
            return m;
    if (name == "gaussian-noise" || name == "gaussian_noise")
        return EvasionMethod::GaussianNoise;
    throw std::invalid_argument("unknown evasion method: " + std::string(name));
}

void SweepGrid::validate() const
{
    if (!(step > 0.0) || !std::isfinite(step))
        throw std::invalid_argument("sweep grid step must be positive");
    if (!(lo <= hi))
        throw std::invalid_argument("sweep grid requires lo <= hi");
}

std::size_t SweepGrid::points() const
{
    validate();
    return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double SweepGrid::value(std::size_t i) const
{
    // Snap to 1e-9 so 0.01-step grids produce the decimal values they name.
    return std::round((lo + double(i) * step) * 1e9) / 1e9;
}

SweepGrid default_grid(EvasionMethod m)
{
    switch (m) {
    case EvasionMethod::Brightness: return {m, "enhancement_factor", 0.01, 1.0, 0.01};
    case EvasionMethod::Contrast: return {m, "enhancement_factor", 0.01, 1.0, 0.01};
    case EvasionMethod::GaussianNoise: return {m, "std", 0.01, 1.0, 0.01};
    case EvasionMethod::Jpeg: return {m, "quality", 1.0, 100.0, 1.0};
    case EvasionMethod::Blur: return {m, "sigma", 0.1, 5.0, 0.05};
    case EvasionMethod::Dip: return {m, "iterations", 1.0, 500.0, 10.0};
    }
    throw std::invalid_argument("unknown evasion method");
}

ImageU8 apply_baseline(EvasionMethod m, const ImageU8& img, double p, std::uint64_t seed)
{
    switch (m) {
    case EvasionMethod::Brightness: return adjust_brightness(img, p);
    case EvasionMethod::Contrast: return adjust_contrast(img, p);
    case EvasionMethod::GaussianNoise: return add_gaussian_noise(img, p, seed);
    case EvasionMethod::Jpeg: return jpeg_compress(img, static_cast<int>(std::lround(p)));
    case EvasionMethod::Blur: return gaussian_blur(img, p);
    case EvasionMethod::Dip: break;
    }
    throw std::invalid_argument("DIP has no pointwise form; use run_evasion");
}

std::vector<Candidate> sweep(EvasionMethod m, const SweepGrid& grid, const ImageU8& img, std::uint64_t seed)
{
    const std::size_t n = grid.points();
    std::vector<Candidate> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = grid.value(i);
        out.push_back({p, apply_baseline(m, img, p, mix_seed(seed, i))});
    }
    return out;
}

}  // namespace wmevade
