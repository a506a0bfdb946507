#include "wmevade/image.hpp"
#include "wmevade/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace wmevade {

// --- radial bands ----------------------------------------------------------------

BandMap radial_bands(int height, int width, int k)
{
    if (k < 1)
        throw std::invalid_argument("radial_bands: k must be >= 1");
    if (height < 1 || width < 1)
        throw ShapeError("radial_bands: dimensions must be positive");
    if (k > 255)
        throw std::invalid_argument("radial_bands: at most 255 bands");

    BandMap map{height, width, k, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width)};
    const std::int64_t fu_max = height / 2, fv_max = width / 2;
    const std::int64_t rmax2 = fu_max * fu_max + fv_max * fv_max;
    const std::int64_t k2 = std::int64_t(k) * k;
    for (int u = 0; u < height; ++u) {
        const std::int64_t fu = signed_frequency(u, height);
        for (int v = 0; v < width; ++v) {
            const std::int64_t fv = signed_frequency(v, width);
            const std::int64_t r2 = fu * fu + fv * fv;
            int b = 1;
            // Smallest b with r/rmax <= b/k.
            while (b < k && k2 * r2 > std::int64_t(b) * b * rmax2)
                ++b;
            map.band_of[static_cast<std::size_t>(u) * width + v] = static_cast<std::uint8_t>(b);
        }
    }
    return map;
}

std::vector<std::size_t> BandMap::counts() const
{
    std::vector<std::size_t> c(bands, 0);
    for (auto b : band_of)
        ++c[b - 1];
    return c;
}

double BandProfile::total() const
{
    double t = 0.0;
    for (double v : values)
        if (!missing(v))
            t += v;
    return t;
}

bool BandProfile::missing(double v) { return std::isnan(v); }

BandProfile band_energy(const ComplexGrid& spectrum, const BandMap& bands)
{
    if (spectrum.height != bands.height || spectrum.width != bands.width)
        throw ShapeError("band_energy: spectrum and band map shapes differ");
    if (bands.bands != kDefaultBands)
        throw std::invalid_argument("band_energy: band map must have 5 bands");
    BandProfile p;
    for (std::size_t i = 0; i < spectrum.bins.size(); ++i)
        p.values[bands.band_of[i] - 1] += std::norm(spectrum.bins[i]);
    return p;
}

// --- DCT ---------------------------------------------------------------------------

namespace {

std::vector<double> dct_matrix(int n)
{
    std::vector<double> c(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
        const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i)
            c[k * n + i] = alpha * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
    return c;
}

const std::vector<double>& cached_dct_matrix(int n)
{
    static const std::vector<double> c4 = dct_matrix(4);
    static const std::vector<double> c8 = dct_matrix(8);
    if (n == 4)
        return c4;
    if (n == 8)
        return c8;
    thread_local std::vector<double> other;
    other = dct_matrix(n);
    return other;
}

// out = L * X * R where L, R are n x n; transposes chosen by flags.
std::vector<double> sandwich(std::span<const double> x, const std::vector<double>& c, int n, bool forward)
{
    std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0), out(tmp.size(), 0.0);
    auto C = [&](int r, int col) { return forward ? c[r * n + col] : c[col * n + r]; };
    // tmp = C' X   (C' = C forward, C^T inverse)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int m = 0; m < n; ++m)
                s += C(i, m) * x[m * n + j];
            tmp[i * n + j] = s;
        }
    // out = tmp C'^T
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int m = 0; m < n; ++m)
                s += tmp[i * n + m] * C(j, m);
            out[i * n + j] = s;
        }
    return out;
}

}  // namespace

std::vector<double> dct2d(std::span<const double> block, int n)
{
    if (n < 1 || block.size() != static_cast<std::size_t>(n) * n)
        throw ShapeError("dct2d: block must be n x n");
    return sandwich(block, cached_dct_matrix(n), n, true);
}

std::vector<double> idct2d(std::span<const double> coeffs, int n)
{
    if (n < 1 || coeffs.size() != static_cast<std::size_t>(n) * n)
        throw ShapeError("idct2d: block must be n x n");
    return sandwich(coeffs, cached_dct_matrix(n), n, false);
}

Block8 dct8x8(std::span<const double> block)
{
    if (block.size() != 64)
        throw ShapeError("dct8x8: block must be 8x8");
    const auto v = dct2d(block, 8);
    Block8 out;
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

Block8 idct8x8(std::span<const double> coeffs)
{
    if (coeffs.size() != 64)
        throw ShapeError("idct8x8: block must be 8x8");
    const auto v = idct2d(coeffs, 8);
    Block8 out;
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

// --- Haar ----------------------------------------------------------------------------

HaarBands haar_dwt2(std::span<const double> grid, int height, int width)
{
    if (height < 2 || width < 2 || height % 2 || width % 2)
        throw ShapeError("haar_dwt2: dimensions must be even");
    if (grid.size() != static_cast<std::size_t>(height) * width)
        throw ShapeError("haar_dwt2: grid size does not match dimensions");
    HaarBands b;
    b.height = height / 2;
    b.width = width / 2;
    const std::size_t n = static_cast<std::size_t>(b.height) * b.width;
    b.ll.resize(n);
    b.lh.resize(n);
    b.hl.resize(n);
    b.hh.resize(n);
    for (int y = 0; y < b.height; ++y) {
        for (int x = 0; x < b.width; ++x) {
            const double a = grid[(2 * y) * width + 2 * x];
            const double bb = grid[(2 * y) * width + 2 * x + 1];
            const double c = grid[(2 * y + 1) * width + 2 * x];
            const double d = grid[(2 * y + 1) * width + 2 * x + 1];
            const std::size_t i = static_cast<std::size_t>(y) * b.width + x;
            b.ll[i] = (a + bb + c + d) / 2;
            b.hl[i] = (a - bb + c - d) / 2;
            b.lh[i] = (a + bb - c - d) / 2;
            b.hh[i] = (a - bb - c + d) / 2;
        }
    }
    return b;
}

std::vector<double> haar_idwt2(const HaarBands& b)
{
    const std::size_t n = static_cast<std::size_t>(b.height) * b.width;
    if (b.ll.size() != n || b.lh.size() != n || b.hl.size() != n || b.hh.size() != n)
        throw ShapeError("haar_idwt2: subband sizes are inconsistent");
    const int width = 2 * b.width;
    std::vector<double> g(4 * n);
    for (int y = 0; y < b.height; ++y) {
        for (int x = 0; x < b.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * b.width + x;
            const double ll = b.ll[i], hl = b.hl[i], lh = b.lh[i], hh = b.hh[i];
            g[(2 * y) * width + 2 * x] = (ll + hl + lh + hh) / 2;
            g[(2 * y) * width + 2 * x + 1] = (ll - hl + lh - hh) / 2;
            g[(2 * y + 1) * width + 2 * x] = (ll + hl - lh - hh) / 2;
            g[(2 * y + 1) * width + 2 * x + 1] = (ll - hl - lh + hh) / 2;
        }
    }
    return g;
}

// --- SVD -------------------------------------------------------------------------------

Mat4 Svd4::reconstruct() const
{
    Mat4 a{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                acc += u[i * 4 + k] * s[k] * v[j * 4 + k];
            a[i * 4 + j] = acc;
        }
    return a;
}

Svd4 svd_block(const Mat4& a)
{
    Mat4 w = a;  // columns converge to U * diag(S)
    Mat4 v{};
    for (int i = 0; i < 4; ++i)
        v[i * 4 + i] = 1.0;

    constexpr double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < 3; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (int i = 0; i < 4; ++i) {
                    alpha += w[i * 4 + p] * w[i * 4 + p];
                    beta += w[i * 4 + q] * w[i * 4 + q];
                    gamma += w[i * 4 + p] * w[i * 4 + q];
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < 4; ++i) {
                    const double wp = w[i * 4 + p], wq = w[i * 4 + q];
                    w[i * 4 + p] = c * wp - s * wq;
                    w[i * 4 + q] = s * wp + c * wq;
                    const double vp = v[i * 4 + p], vq = v[i * 4 + q];
                    v[i * 4 + p] = c * vp - s * vq;
                    v[i * 4 + q] = s * vp + c * vq;
                }
            }
        }
        if (!rotated)
            break;
    }

    std::array<double, 4> norms{};
    for (int j = 0; j < 4; ++j) {
        double n2 = 0;
        for (int i = 0; i < 4; ++i)
            n2 += w[i * 4 + j] * w[i * 4 + j];
        norms[j] = std::sqrt(n2);
    }
    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return norms[x] > norms[y]; });

    Svd4 out;
    double scale = 0.0;
    for (double n : norms)
        scale = std::max(scale, n);
    const double tiny = std::max(scale, 1.0) * 1e-14;
    std::array<bool, 4> filled{};
    for (int k = 0; k < 4; ++k) {
        const int j = order[k];
        out.s[k] = norms[j];
        for (int i = 0; i < 4; ++i)
            out.v[i * 4 + k] = v[i * 4 + j];
        if (norms[j] > tiny) {
            for (int i = 0; i < 4; ++i)
                out.u[i * 4 + k] = w[i * 4 + j] / norms[j];
            filled[k] = true;
        }
    }
    // Complete U to an orthonormal basis for (numerically) zero singular values.
    for (int k = 0; k < 4; ++k) {
        if (filled[k])
            continue;
        out.s[k] = 0.0;
        for (int e = 0; e < 4 && !filled[k]; ++e) {
            std::array<double, 4> cand{};
            cand[e] = 1.0;
            for (int m = 0; m < 4; ++m) {
                if (!filled[m])
                    continue;
                double dot = 0;
                for (int i = 0; i < 4; ++i)
                    dot += cand[i] * out.u[i * 4 + m];
                for (int i = 0; i < 4; ++i)
                    cand[i] -= dot * out.u[i * 4 + m];
            }
            double n2 = 0;
            for (double c : cand)
                n2 += c * c;
            if (n2 > 1e-6) {
                const double n = std::sqrt(n2);
                for (int i = 0; i < 4; ++i)
                    out.u[i * 4 + k] = cand[i] / n;
                filled[k] = true;
            }
        }
    }
    return out;
}

}  // namespace wmevade
