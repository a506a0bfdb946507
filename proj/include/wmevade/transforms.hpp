#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace wmevade {

using Complex = std::complex<double>;

/// Dense 2-D spectrum in natural FFT layout (bin (0,0) is DC, no center shift).
struct ComplexGrid {
    int height = 0;
    int width = 0;
    std::vector<Complex> bins;

    ComplexGrid() = default;
    ComplexGrid(int h, int w) : height(h), width(w), bins(static_cast<std::size_t>(h) * w) {}

    Complex& at(int u, int v) { return bins[static_cast<std::size_t>(u) * width + v]; }
    const Complex& at(int u, int v) const { return bins[static_cast<std::size_t>(u) * width + v]; }
    double energy() const;
};

/// 1-D in-place DFT of any length. Radix-2 for powers of two, Bluestein otherwise.
/// `inverse` flips the kernel sign; no scaling is applied in either direction.
void fft_inplace(std::span<Complex> x, bool inverse);

/// Unnormalized forward 2-D DFT of a real H x W grid (row-major).
ComplexGrid fft2(std::span<const double> grid, int height, int width);
ComplexGrid fft2(const ComplexGrid& grid);
/// Inverse 2-D DFT scaled by 1/(H*W).
ComplexGrid ifft2(const ComplexGrid& spectrum);
/// Real part of ifft2.
std::vector<double> ifft2_real(const ComplexGrid& spectrum);

/// Signed frequency of FFT index i along an axis of length n
/// (numpy fftfreq times n): i for i <= (n-1)/2, i - n otherwise.
inline int signed_frequency(int i, int n) noexcept { return i <= (n - 1) / 2 ? i : i - n; }

/// Radial band index (1..k) per bin, stored in natural FFT layout.
///
/// A bin's radius is the Euclidean norm of its signed frequencies; dividing by
/// the largest radius on the grid gives r in [0,1], and the band is ceil(r*k)
/// with r = 0 mapped to band 1. Comparisons are done on squared integer radii
/// so boundary bins are classified exactly.
struct BandMap {
    int height = 0;
    int width = 0;
    int bands = 0;
    std::vector<std::uint8_t> band_of;

    int at(int u, int v) const { return band_of[static_cast<std::size_t>(u) * width + v]; }
    std::vector<std::size_t> counts() const;
};

inline constexpr int kDefaultBands = 5;

BandMap radial_bands(int height, int width, int k = kDefaultBands);

/// Five per-band values ordered from the lowest band to the highest.
/// A NaN entry marks a band with no usable bins.
struct BandProfile {
    std::array<double, kDefaultBands> values{};

    double operator[](int band_index0) const { return values[band_index0]; }
    double total() const;
    static bool missing(double v);
};

/// Sum of |amplitude|^2 of the bins in each band. Requires a 5-band map.
BandProfile band_energy(const ComplexGrid& spectrum, const BandMap& bands);

// --- block transforms ---------------------------------------------------------

/// Orthonormal type-II DCT of an n x n row-major block, and its inverse (type III).
std::vector<double> dct2d(std::span<const double> block, int n);
std::vector<double> idct2d(std::span<const double> coeffs, int n);

using Block8 = std::array<double, 64>;
Block8 dct8x8(std::span<const double> block);
Block8 idct8x8(std::span<const double> coeffs);

/// One level of the orthonormal 2-D Haar transform. For a 2x2 cell
/// [a b; c d] the coefficients are LL=(a+b+c+d)/2, HL=(a-b+c-d)/2 (horizontal
/// detail), LH=(a+b-c-d)/2 (vertical detail), HH=(a-b-c+d)/2.
struct HaarBands {
    int height = 0;  // of each subband
    int width = 0;
    std::vector<double> ll, lh, hl, hh;
};

HaarBands haar_dwt2(std::span<const double> grid, int height, int width);
std::vector<double> haar_idwt2(const HaarBands& bands);

using Mat4 = std::array<double, 16>;  // row-major 4x4

/// A = U diag(S) V^T with S sorted nonincreasing and nonnegative.
struct Svd4 {
    Mat4 u{};
    std::array<double, 4> s{};
    Mat4 v{};

    Mat4 reconstruct() const;
};

/// One-sided Jacobi SVD of a 4x4 real matrix.
Svd4 svd_block(const Mat4& a);

}  // namespace wmevade
