#include "wmevade/image.hpp"
#include "wmevade/transforms.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace wmevade {

namespace {

void radix2(std::span<Complex> x, bool inverse)
{
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(x[i], x[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        // Twiddles computed directly per index rather than by recurrence, to keep
        // errors at the 1e-15 level for long transforms.
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * double(k) / double(len);
            const Complex w(std::cos(ang), std::sin(ang));
            for (std::size_t i = 0; i < n; i += len) {
                const Complex t = w * x[i + k + half];
                x[i + k + half] = x[i + k] - t;
                x[i + k] += t;
            }
        }
    }
}

// Chirp-z: X_k = conj(c_k) * sum_j (x_j conj(c_j)) c_{k-j}, c_m = exp(i pi m^2 / n).
void bluestein(std::span<Complex> x, bool inverse)
{
    const std::size_t n = x.size();
    const std::size_t m = std::bit_ceil(2 * n - 1);
    const double sign = inverse ? 1.0 : -1.0;

    std::vector<Complex> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small and exact.
        const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % (2 * n);
        const double ang = sign * std::numbers::pi * double(k2) / double(n);
        chirp[k] = Complex(std::cos(ang), std::sin(ang));
    }
    std::vector<Complex> a(m), b(m);
    for (std::size_t k = 0; k < n; ++k)
        a[k] = x[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k)
        b[k] = b[m - k] = std::conj(chirp[k]);

    radix2(a, false);
    radix2(b, false);
    for (std::size_t k = 0; k < m; ++k)
        a[k] *= b[k];
    radix2(a, true);
    const double scale = 1.0 / double(m);
    for (std::size_t k = 0; k < n; ++k)
        x[k] = a[k] * scale * chirp[k];
}

}  // namespace

void fft_inplace(std::span<Complex> x, bool inverse)
{
    if (x.size() <= 1)
        return;
    if (std::has_single_bit(x.size()))
        radix2(x, inverse);
    else
        bluestein(x, inverse);
}

double ComplexGrid::energy() const
{
    double e = 0.0;
    for (const auto& c : bins)
        e += std::norm(c);
    return e;
}

namespace {

void transform_2d(ComplexGrid& g, bool inverse)
{
    const int h = g.height, w = g.width;
    for (int u = 0; u < h; ++u)
        fft_inplace(std::span<Complex>(g.bins.data() + static_cast<std::size_t>(u) * w, w), inverse);
    std::vector<Complex> col(h);
    for (int v = 0; v < w; ++v) {
        for (int u = 0; u < h; ++u)
            col[u] = g.at(u, v);
        fft_inplace(col, inverse);
        for (int u = 0; u < h; ++u)
            g.at(u, v) = col[u];
    }
}

}  // namespace

ComplexGrid fft2(std::span<const double> grid, int height, int width)
{
    if (height < 1 || width < 1 || grid.size() != static_cast<std::size_t>(height) * width)
        throw ShapeError("fft2: grid size does not match dimensions");
    ComplexGrid g(height, width);
    for (std::size_t i = 0; i < grid.size(); ++i)
        g.bins[i] = grid[i];
    transform_2d(g, false);
    return g;
}

ComplexGrid fft2(const ComplexGrid& grid)
{
    ComplexGrid g = grid;
    transform_2d(g, false);
    return g;
}

ComplexGrid ifft2(const ComplexGrid& spectrum)
{
    ComplexGrid g = spectrum;
    transform_2d(g, true);
    const double scale = 1.0 / (double(g.height) * g.width);
    for (auto& c : g.bins)
        c *= scale;
    return g;
}

std::vector<double> ifft2_real(const ComplexGrid& spectrum)
{
    const ComplexGrid g = ifft2(spectrum);
    std::vector<double> out(g.bins.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = g.bins[i].real();
    return out;
}

}  // namespace wmevade
