#pragma once

#include "wmevade/image.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wmevade {

/// Scales every sample by `factor` in (0, 1].
ImageU8 adjust_brightness(const ImageU8& img, double factor);
/// Blends every sample toward the image's mean luma: mean + factor * (x - mean).
ImageU8 adjust_contrast(const ImageU8& img, double factor);
/// Adds iid N(0, (sigma*255)^2) noise per sample, rounds and clamps.
ImageU8 add_gaussian_noise(const ImageU8& img, double sigma, std::uint64_t seed);
/// Separable Gaussian with standard deviation `radius` pixels, truncated at
/// 3 sigma, replicated borders.
ImageU8 gaussian_blur(const ImageU8& img, double radius);
/// Gaussian kernel used by gaussian_blur (odd length, sums to one).
std::vector<double> gaussian_kernel(double sigma);

/// Baseline JPEG quantization round trip: JFIF YCbCr, optional 4:2:0 chroma,
/// 8x8 DCT with Annex K tables scaled by the libjpeg quality rule. No entropy
/// coding; returns the decoded pixels. Sizes that are not multiples of 16 are
/// edge-padded then cropped.
ImageU8 jpeg_compress(const ImageU8& img, int quality, bool subsample_chroma = true);
/// Quantization table (row-major 8x8) for `quality`; chroma when `chroma`.
std::array<int, 64> jpeg_quant_table(int quality, bool chroma);

enum class EvasionMethod { Brightness, Contrast, GaussianNoise, Jpeg, Blur, Dip };

std::string_view to_string(EvasionMethod m);
EvasionMethod parse_evasion_method(std::string_view name);

/// Inclusive parameter grid lo, lo+step, ..., with floor((hi-lo)/step)+1 points.
struct SweepGrid {
    EvasionMethod method = EvasionMethod::Brightness;
    std::string parameter;
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    void validate() const;
    std::size_t points() const;
    double value(std::size_t i) const;
};

/// Exhaustive-search ranges: brightness/contrast factor [0.01,1]/0.01,
/// noise std [0.01,1]/0.01, JPEG quality [1,100]/1, DIP iterations [1,500]/10.
/// Blur, standing in for BM3D, reuses BM3D's range [0.1,5]/0.05 as its sigma.
SweepGrid default_grid(EvasionMethod m);

struct Candidate {
    double parameter = 0.0;
    ImageU8 image;
};

/// Applies a single-image baseline at one parameter value. `seed` feeds the
/// Gaussian-noise method only.
ImageU8 apply_baseline(EvasionMethod m, const ImageU8& img, double parameter, std::uint64_t seed);

/// Candidates in grid order. Noise at grid point i uses a seed derived from
/// (seed, i). DIP is not a pointwise method: its candidates come from the
/// evasion trace (see run_evasion).
std::vector<Candidate> sweep(EvasionMethod m, const SweepGrid& grid, const ImageU8& img, std::uint64_t seed = 0);

}  // namespace wmevade
