#include "wmevade/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace wmevade {

double psnr(const ImageU8& a, const ImageU8& b)
{
    require_same_shape(a, b, "psnr");
    if (a.empty())
        throw ShapeError("psnr: empty images");
    auto da = a.data();
    auto db = b.data();
    std::uint64_t sse = 0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const int d = int(da[i]) - int(db[i]);
        sse += static_cast<std::uint64_t>(d * d);
    }
    if (sse == 0)
        return kInfinitePsnr;
    const double mse = static_cast<double>(sse) / static_cast<double>(da.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

// Summed-area table with a zero first row/column; (h+1) x (w+1).
struct Integral {
    int w1;
    std::vector<double> t;
    double box(int y, int x, int k) const
    {
        return t[(y + k) * w1 + (x + k)] - t[y * w1 + (x + k)] - t[(y + k) * w1 + x] + t[y * w1 + x];
    }
};

template <class F>
Integral integrate(int h, int w, F value)
{
    Integral s{w + 1, std::vector<double>(static_cast<std::size_t>(h + 1) * (w + 1), 0.0)};
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += value(y, x);
            s.t[(y + 1) * s.w1 + x + 1] = s.t[y * s.w1 + x + 1] + row;
        }
    }
    return s;
}

}  // namespace

double ssim(const ImageU8& a, const ImageU8& b)
{
    require_same_shape(a, b, "ssim");
    const int h = a.height(), w = a.width(), k = kSsimWindow;
    if (h < k || w < k)
        throw ShapeError("ssim: image smaller than the 8x8 window");

    constexpr double c1 = (0.01 * 255) * (0.01 * 255);
    constexpr double c2 = (0.03 * 255) * (0.03 * 255);
    const double n = double(k) * k;

    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        auto A = [&](int y, int x) { return double(a.at(y, x, c)); };
        auto B = [&](int y, int x) { return double(b.at(y, x, c)); };
        const Integral sa = integrate(h, w, A);
        const Integral sb = integrate(h, w, B);
        const Integral saa = integrate(h, w, [&](int y, int x) { return A(y, x) * A(y, x); });
        const Integral sbb = integrate(h, w, [&](int y, int x) { return B(y, x) * B(y, x); });
        const Integral sab = integrate(h, w, [&](int y, int x) { return A(y, x) * B(y, x); });

        double sum = 0.0;
        for (int y = 0; y + k <= h; ++y) {
            for (int x = 0; x + k <= w; ++x) {
                const double ma = sa.box(y, x, k) / n;
                const double mb = sb.box(y, x, k) / n;
                // Clamp tiny negative variances caused by cancellation.
                const double va = std::max(0.0, saa.box(y, x, k) / n - ma * ma);
                const double vb = std::max(0.0, sbb.box(y, x, k) / n - mb * mb);
                const double cov = sab.box(y, x, k) / n - ma * mb;
                const double num = (2 * ma * mb + c1) * (2 * cov + c2);
                const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
                sum += num / den;
            }
        }
        total += sum / (double(h - k + 1) * (w - k + 1));
    }
    const double s = total / a.channels();
    // Integer-valued sums are exact, so identical inputs give 1 up to rounding.
    return a == b ? 1.0 : std::clamp(s, -1.0, 1.0);
}

double quantile_diff(const ImageU8& a, const ImageU8& b, double q)
{
    require_same_shape(a, b, "quantile_diff");
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("quantile_diff: q must lie in (0, 1)");
    if (a.empty())
        throw ShapeError("quantile_diff: empty images");
    // Counting sort over the 256 possible magnitudes.
    std::array<std::size_t, 256> hist{};
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i)
        ++hist[std::abs(int(da[i]) - int(db[i]))];
    const std::size_t idx = static_cast<std::size_t>(std::ceil(q * double(da.size() - 1)));
    std::size_t seen = 0;
    for (int v = 0; v < 256; ++v) {
        seen += hist[v];
        if (seen > idx)
            return v;
    }
    return 255;
}

QualityReport quality(const ImageU8& a, const ImageU8& b)
{
    return {psnr(a, b), ssim(a, b), quantile_diff(a, b, 0.9)};
}

}  // namespace wmevade
